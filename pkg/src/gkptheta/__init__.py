"""Theta-function toolkit for GKP states and error correction in phase space."""

__version__ = "0.1.0"

from .errors import (
    CoverageError,
    GKPError,
    HermiticityError,
    InvalidSpecError,
    MemoryGuardError,
    NumericGuardError,
    PhysicsError,
    ProbabilityFloorError,
    RegimeError,
    SiegelHalfSpaceError,
    UnphysicalEnvelopeError,
)
from .gaussian import Gaussian2D
from .theta_core import (
    SQRT_PI,
    Characteristics,
    ExactSym2,
    LatticeSum,
    NegativePeriodWarning,
    Theta1DSpec,
    pulse_train_1d,
    reduce_characteristics,
    sha_support,
    sha_support_1d,
    split_half_period,
    theta_constant,
    theta_eval_1d,
    theta_eval_lattice,
)
from .phase_plane import (
    TRACE_CONVENTION,
    Field2D,
    Gate,
    SymplecticMap,
    apply_symplectic,
    blur,
    deblur,
    evaluate,
    grid_window,
    integrate,
    sample_field,
    symplectic_for_gate,
    symplectic_form,
    trace_product,
    translate,
)
from .gkp_states import (
    Bloch4,
    EnvelopeClass,
    GKPWigner,
    NoiseSpec,
    PauliIndex,
    approx_state_wigner,
    bloch_from_wigner,
    check_envelope_physical,
    displacement_channel,
    ideal_state_wigner,
    min_envelope,
    pauli_expectations,
    pauli_trace,
    pauli_wigner,
    stabilizer_twirl,
    vacuum_wigner,
    wavefunction_eval,
    wigner_normalization,
    with_envelope,
)
from .gkp_ec import (
    AncillaSpec,
    Syndrome,
    decode_syndrome,
    ec_ideal,
    ec_map,
    fitted_spike_variances,
    predicted_ec_variances,
    rake,
    teleport_ec,
    three_mode_teleport_trace,
)
