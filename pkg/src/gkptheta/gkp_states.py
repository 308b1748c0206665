"""Ideal, approximate and mixed GKP states in phase space.

The square-lattice GKP Pauli operators have comb Wigner functions on the lattice
``sqrt(pi) Z^2``. Pauli ``mu`` is labelled by a shift vector ``l_mu`` and carries the
characteristics ``(Omega l_mu / 2, l_mu / 2)``::

    l_0 = (0, 0)   identity
    l_1 = (1, 0)   X
    l_2 = (1, 1)   Y
    l_3 = (0, 1)   Z

A logical operator with Bloch 4-vector ``r`` has Wigner function ``(1/2) sum_mu r_mu W_mu``
(supported on delta spikes of weight ``+-1/2``). Approximate states replace each comb by
Gaussian spikes of covariance ``Sigma_spike`` under a broad Gaussian envelope
``Sigma_env``::

    W(x) = G_env(x) sum_mu r_mu theta_mu(x, 2 pi i Sigma_spike) / N.

For noise matrix ``Xi = R_phi^T diag(1/kappa^2, 1/Delta^2) R_phi`` the pure (minimum
envelope) states have ``Sigma_env = Xi / 2`` and ``Sigma_spike = Omega^T Xi^{-1} Omega / 2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    CoverageError,
    InvalidSpecError,
    NumericGuardError,
    RegimeError,
)
from .gaussian import Gaussian2D
from .phase_plane import (
    TRACE_CONVENTION,
    Field2D,
    SymplecticMap,
    apply_symplectic,
    evaluate,
    evaluate_real,
    inner_product,
    sample_field,
)
from .theta_core import (
    DEFAULT_REL_TOL,
    SQRT_PI,
    Characteristics,
    ExactSym2,
    LatticeSum,
    Theta1DSpec,
    sha_support_arrays,
    theta_constant,
    theta_eval_1d,
)

LOW_NOISE_THRESHOLD = 0.05
OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])
GKP_LATTICE = SQRT_PI * np.eye(2)


class PauliIndex(enum.IntEnum):
    I = 0
    X = 1
    Y = 2
    Z = 3

    @property
    def shift(self) -> tuple[int, int]:
        return PAULI_SHIFTS[int(self)]


PAULI_SHIFTS = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}


def pauli_characteristics(mu: int) -> Characteristics:
    """``(Omega l_mu / 2, l_mu / 2)`` before canonicalization."""
    l1, l2 = PAULI_SHIFTS[int(mu)]
    half = Fraction(1, 2)
    return Characteristics((l2 * half, -l1 * half), (l1 * half, l2 * half))


# ---------------------------------------------------------------------------
# Bloch vectors and noise


@dataclass(frozen=True)
class Bloch4:
    """Coefficients ``(r0, r1, r2, r3)`` of an operator in the logical Pauli basis."""

    r: tuple[float, float, float, float]

    def __post_init__(self):
        r = tuple(float(x) for x in self.r)
        if len(r) != 4 or not all(math.isfinite(x) for x in r):
            raise InvalidSpecError("a Bloch 4-vector has four finite components")
        object.__setattr__(self, "r", r)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "Bloch4":
        x, y, z = vec
        return cls((1.0, x, y, z))

    def __getitem__(self, mu: int) -> float:
        return self.r[mu]

    def __iter__(self):
        return iter(self.r)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.r[1:])

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.r[1:]))

    @property
    def is_pure(self) -> bool:
        return abs(self.r[0] - 1) < 1e-12 and abs(self.length - 1) < 1e-12

    def normalized(self) -> "Bloch4":
        if self.r[0] == 0:
            raise InvalidSpecError("cannot normalize a Bloch vector with r0 = 0")
        return Bloch4(tuple(x / self.r[0] for x in self.r))

    def validate_state(self, tol: float = 1e-9) -> None:
        # readouts of pure states land on the sphere only to sampling precision
        if abs(self.r[0] - 1) > tol or self.length > 1 + tol:
            raise InvalidSpecError(f"not a qubit state: r = {self.r}")


@dataclass(frozen=True)
class NoiseSpec:
    """Finite-energy parameters ``Delta^2`` (position spikes / momentum envelope),
    ``kappa^2`` (momentum spikes / position envelope) and a rotation ``phi``."""

    Delta2: float
    kappa2: float
    phi: float = 0.0

    def __post_init__(self):
        if not (self.Delta2 > 0 and self.kappa2 > 0):
            raise InvalidSpecError("Delta^2 and kappa^2 must be positive")
        if not math.isfinite(self.phi):
            raise InvalidSpecError("rotation must be finite")

    @classmethod
    def symmetric(cls, beta: float) -> "NoiseSpec":
        return cls(beta, beta, 0.0)

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.phi), math.sin(self.phi)
        return np.array([[c, -s], [s, c]])

    @property
    def xi(self) -> np.ndarray:
        R = self.rotation
        return R.T @ np.diag([1 / self.kappa2, 1 / self.Delta2]) @ R

    @property
    def sigma_env(self) -> np.ndarray:
        return 0.5 * self.xi

    @property
    def sigma_spike(self) -> np.ndarray:
        return 0.5 * OMEGA.T @ np.linalg.inv(self.xi) @ OMEGA

    @property
    def low_noise(self) -> bool:
        return self.Delta2 <= LOW_NOISE_THRESHOLD and self.kappa2 <= LOW_NOISE_THRESHOLD

    @property
    def is_symmetric(self) -> bool:
        return abs(self.Delta2 - self.kappa2) <= 1e-14 * max(self.Delta2, self.kappa2)

    def require_low_noise(self) -> None:
        if not self.low_noise:
            raise RegimeError(
                f"Delta^2={self.Delta2}, kappa^2={self.kappa2} exceed the low-noise threshold {LOW_NOISE_THRESHOLD}"
            )


def min_envelope(Sigma_spike) -> np.ndarray:
    """Smallest physical envelope for a spike covariance: ``Sigma / det(2 Sigma)``.

    The map is an involution.
    """
    S = np.asarray(Sigma_spike, dtype=float).reshape(2, 2)
    d = np.linalg.det(2 * S)
    if not d > 0 or np.linalg.eigvalsh(S)[0] <= 0:
        raise InvalidSpecError("spike covariance must be positive definite")
    return S / d


# ---------------------------------------------------------------------------
# Wigner functions


def pauli_wigner(mu: int, spike_cov=None, envelope: Gaussian2D | None = None) -> LatticeSum:
    """Comb (or Gaussian-spike) lattice sum of logical Pauli ``mu`` on ``sqrt(pi) Z^2``."""
    if int(mu) not in PAULI_SHIFTS:
        raise InvalidSpecError(f"Pauli index must be 0..3, got {mu}")
    cov = ExactSym2.zero() if spike_cov is None else ExactSym2.from_matrix(spike_cov)
    return LatticeSum(GKP_LATTICE, pauli_characteristics(mu), cov, envelope)


def identify_pauli(ls: LatticeSum) -> tuple[int, complex] | None:
    """Pauli index and prefactor if ``ls`` is a (scaled) Pauli lattice term, else ``None``."""
    if np.abs(ls.lattice - GKP_LATTICE).max() > 1e-12 or np.abs(ls.shift).max() > 0:
        return None
    for mu in range(4):
        if pauli_wigner(mu).chars == ls.chars:
            return mu, ls.prefactor
    return None


@dataclass(frozen=True, eq=False)
class GKPWigner:
    """Wigner function ``sum_mu r_mu terms[mu] / norm`` of a GKP-encoded operator.

    Ideal and envelope-free states are not normalizable; they carry ``norm = 2``
    (the ``1/2`` of the Pauli expansion) and ``normalizable = False``.
    """

    bloch: Bloch4
    terms: tuple[LatticeSum, LatticeSum, LatticeSum, LatticeSum]
    norm: float
    normalizable: bool = True

    def __post_init__(self):
        if len(self.terms) != 4:
            raise InvalidSpecError("a GKP Wigner function has four Pauli terms")
        if not self.norm > 0:
            raise InvalidSpecError("norm must be positive")
        for mu, t in enumerate(self.terms):
            hit = identify_pauli(t)
            if hit is None or hit[0] != mu:
                raise InvalidSpecError(f"term {mu} does not carry Pauli-{mu} characteristics")
        covs = {t.spike_cov for t in self.terms}
        envs = {None if t.envelope is None else (tuple(t.envelope.mean), tuple(t.envelope.cov.ravel())) for t in self.terms}
        if len(covs) != 1 or len(envs) != 1:
            raise InvalidSpecError("all Pauli terms must share spike covariance and envelope")

    @property
    def sigma_spike(self) -> np.ndarray:
        return self.terms[0].sigma

    @property
    def envelope(self) -> Gaussian2D | None:
        return self.terms[0].envelope

    @property
    def is_ideal(self) -> bool:
        return self.terms[0].is_comb

    def weighted_terms(self):
        for mu in range(4):
            if self.bloch[mu] != 0:
                yield self.bloch[mu] / self.norm, self.terms[mu]

    def __call__(self, x, rel_tol: float = DEFAULT_REL_TOL):
        return evaluate_real(self, x, rel_tol)

    def with_terms(self, spike_cov=None, envelope="keep", norm=None, normalizable=None) -> "GKPWigner":
        cov = self.terms[0].spike_cov if spike_cov is None else ExactSym2.from_matrix(spike_cov)
        env = self.envelope if envelope == "keep" else envelope
        terms = tuple(pauli_wigner(mu, cov, env) for mu in range(4))
        return GKPWigner(
            self.bloch,
            terms,
            self.norm if norm is None else norm,
            self.normalizable if normalizable is None else normalizable,
        )

    def apply_symplectic(self, smap: SymplecticMap) -> "GKPWigner":
        """Logical Clifford action of a lattice-preserving symplectic map.

        Each Pauli term is mapped to a (signed) Pauli term; the Bloch vector is permuted
        accordingly. Maps that do not preserve the GKP lattice raise InvalidSpecError.
        """
        r = [0.0] * 4
        moved = [apply_symplectic(t, smap) for t in self.terms]
        for mu, t in enumerate(moved):
            hit = identify_pauli(t)
            if hit is None:
                raise InvalidSpecError("map does not act as a logical Clifford on the GKP lattice")
            nu, pref = hit
            if abs(pref.imag) > 1e-12 or abs(abs(pref.real) - 1) > 1e-12:
                raise InvalidSpecError("unexpected non-real Pauli phase")
            r[nu] += self.bloch[mu] * pref.real
        cov = moved[0].spike_cov
        env = moved[0].envelope
        terms = tuple(pauli_wigner(mu, cov, env) for mu in range(4))
        return GKPWigner(Bloch4(tuple(r)), terms, self.norm, self.normalizable)


def ideal_state_wigner(bloch: Bloch4 | Sequence[float]) -> GKPWigner:
    """Ideal GKP state ``(1/2) sum_mu r_mu W_mu`` (a distribution, not normalizable)."""
    bloch = _as_bloch(bloch)
    bloch.validate_state()
    return GKPWigner(bloch, tuple(pauli_wigner(mu) for mu in range(4)), 2.0, normalizable=False)


def approx_state_wigner(bloch: Bloch4 | Sequence[float], noise: NoiseSpec, *, allow_high_noise: bool = False) -> GKPWigner:
    """Finite-energy GKP state with minimum-uncertainty envelope, normalized to unit integral.

    The Gaussian-spike model is a low-noise approximation; outside
    ``Delta^2, kappa^2 <= 0.05`` it is refused unless ``allow_high_noise`` is set.
    """
    bloch = _as_bloch(bloch)
    bloch.validate_state()
    if not allow_high_noise:
        noise.require_low_noise()
    env = Gaussian2D.centered(noise.sigma_env)
    spike = noise.sigma_spike
    terms = tuple(pauli_wigner(mu, spike, env) for mu in range(4))
    norm = wigner_normalization(bloch, noise.sigma_env, spike)
    return GKPWigner(bloch, terms, norm, True)


def vacuum_wigner() -> Gaussian2D:
    """``W = exp(-q^2 - p^2) / pi``."""
    return Gaussian2D.centered(0.5 * np.eye(2))


def _as_bloch(b) -> Bloch4:
    if isinstance(b, Bloch4):
        return b
    b = tuple(b)
    return Bloch4.from_vector(b) if len(b) == 3 else Bloch4(b)


def _pauli_theta_constant(mu: int, cov) -> float:
    val = theta_constant(LatticeSum(GKP_LATTICE, pauli_characteristics(mu), cov))
    return float(val.real)


def wigner_normalization(bloch, Sigma_env, Sigma_spike, include_spike: bool = True) -> float:
    """Normalization ``N = sum_mu r_mu theta_mu(0, 2 pi i Sigma)`` of an approximate state.

    With ``include_spike`` (default) ``Sigma = Sigma_env + Sigma_spike``, which is the exact
    integral of the envelope-times-spikes model; ``include_spike=False`` uses ``Sigma_env``
    alone. The two differ by terms of relative size ``exp(-pi / (2 beta))``. Both tend
    to ``1/sqrt(pi)`` at low noise.
    """
    bloch = _as_bloch(bloch)
    Se = np.asarray(Sigma_env, dtype=float)
    cov = Se + np.asarray(Sigma_spike, dtype=float) if include_spike else Se
    return float(sum(bloch[mu] * _pauli_theta_constant(mu, cov) for mu in range(4) if bloch[mu] != 0))


def pauli_trace(mu: int, noise: NoiseSpec) -> float:
    """Integral of the noise-broadened Pauli term ``G_env theta_mu``, scaled so the identity tends to 1."""
    cov = noise.sigma_env + noise.sigma_spike
    return SQRT_PI * _pauli_theta_constant(mu, cov)


# ---------------------------------------------------------------------------
# envelopes


class EnvelopeClass(enum.Enum):
    PHYSICAL_MINIMUM = "Physical-Minimum"
    PHYSICAL_MIXED = "Physical-Mixed"
    UNPHYSICAL = "Unphysical"


def check_envelope_physical(g, Sigma_env_min, tol: float = 1e-9, dynamic_range: float = 1e6) -> EnvelopeClass:
    """Classify an envelope by deblurring it with the minimum envelope.

    A state is physical when ``g = G_{Sigma_env_min} * h`` with ``h`` a nonnegative
    distribution; ``h`` a single delta means a pure (minimum envelope) state.

    ``g`` may be a :class:`Gaussian2D`, a mixture ``[(weight, Gaussian2D), ...]`` (handled
    exactly by covariance subtraction) or a sampled :class:`Field2D` (Fourier division).
    For sampled envelopes the division is only carried out where the transfer function
    exceeds ``1/dynamic_range``; spectral content of ``g`` beyond that band that cannot be
    attributed to a physical ``h`` raises :class:`NumericGuardError`.
    """
    Smin = np.asarray(Sigma_env_min, dtype=float).reshape(2, 2)
    if np.linalg.eigvalsh(Smin)[0] <= 0:
        raise InvalidSpecError("minimum envelope must be positive definite")
    if isinstance(g, Field2D):
        return _classify_sampled_envelope(g, Smin, dynamic_range)
    comps = [(1.0, g)] if isinstance(g, Gaussian2D) else list(g)
    if not comps:
        raise InvalidSpecError("empty envelope mixture")
    deltas = []
    for w, comp in comps:
        if w < 0:
            return EnvelopeClass.UNPHYSICAL
        D = comp.cov - Smin
        ev = np.linalg.eigvalsh(0.5 * (D + D.T))
        scale = np.linalg.eigvalsh(comp.cov)[-1]
        if ev[0] < -tol * scale:
            return EnvelopeClass.UNPHYSICAL
        deltas.append((np.abs(ev).max() <= tol * scale, comp.mean))
    weights = [w for w, _ in comps if w > 0]
    if not weights:
        raise InvalidSpecError("envelope mixture has no positive weight")
    live = [(is_delta, m) for (w, _), (is_delta, m) in zip(comps, deltas) if w > 0]
    if all(d for d, _ in live) and all(np.allclose(m, live[0][1], atol=1e-12) for _, m in live):
        return EnvelopeClass.PHYSICAL_MINIMUM
    return EnvelopeClass.PHYSICAL_MIXED


def _classify_sampled_envelope(g: Field2D, Smin: np.ndarray, dynamic_range: float) -> EnvelopeClass:
    vals = g.values
    nq, n_p = vals.shape
    Gk = np.fft.fft2(vals) * g.cell_area
    kq = 2 * np.pi * np.fft.fftfreq(nq, d=g.dq)
    kp = 2 * np.pi * np.fft.fftfreq(n_p, d=g.dp)
    KQ, KP = np.meshgrid(kq, kp, indexing="ij")
    transfer = np.exp(-0.5 * (Smin[0, 0] * KQ**2 + 2 * Smin[0, 1] * KQ * KP + Smin[1, 1] * KP**2))
    g0 = abs(Gk[0, 0])
    if g0 == 0:
        raise InvalidSpecError("envelope integrates to zero")
    band = transfer >= 1.0 / dynamic_range
    H = np.zeros_like(Gk)
    H[band] = Gk[band] / transfer[band]
    mag = np.abs(H) / g0
    # a nonnegative measure has |h^(k)| <= h^(0)
    if mag[band].max() > 1 + 1e-6:
        return EnvelopeClass.UNPHYSICAL
    leak = np.abs(Gk[~band]).max(initial=0.0) / g0
    if leak > 10.0 / dynamic_range:
        raise NumericGuardError(
            f"envelope has spectral weight {leak:.3g} beyond the deconvolution band (dynamic range {dynamic_range:g})"
        )
    if np.abs(mag[band] - 1).max() <= 1e-3:
        return EnvelopeClass.PHYSICAL_MINIMUM
    # smooth h by G_{Smin/2}: keeps a nonnegative h nonnegative and tapers the band edge
    h = np.fft.ifft2(H * np.sqrt(transfer)).real
    if h.min() < -1e-3 * h.max():
        return EnvelopeClass.UNPHYSICAL
    return EnvelopeClass.PHYSICAL_MIXED


# ---------------------------------------------------------------------------
# wavefunctions

# (period, v1, v2) of the ideal comb in position and momentum
_WAVE_COMBS = {
    "0": {"position": (2, 0, 0), "momentum": (1, 0, 0)},
    "1": {"position": (2, 0, Fraction(1, 2)), "momentum": (1, Fraction(1, 2), 0)},
    "+": {"position": (1, 0, 0), "momentum": (2, 0, 0)},
    "-": {"position": (1, Fraction(1, 2), 0), "momentum": (2, 0, Fraction(1, 2))},
}
_LABELS = {0: "0", 1: "1", "0": "0", "1": "1", "zero": "0", "one": "1", "+": "+", "-": "-", "plus": "+", "minus": "-"}


def wavefunction_eval(label, noise: NoiseSpec, s, basis: str = "position"):
    """Normalized approximate GKP wavefunction in the position or momentum basis.

    Position basis, logical ``|j>``::

        psi_j(s) = sqrt(4 pi) sqrt(Delta/kappa) G_{1/kappa^2}(s) theta_{2 sqrt(pi)}[0; j/2](s, 2 pi i Delta^2)

    The momentum basis swaps the roles of ``Delta`` and ``kappa``; ``|+>`` and ``|->``
    use the period-``sqrt(pi)`` combs. Y eigenstates have no single-comb wavefunction in
    these bases and are rejected.
    """
    key = _LABELS.get(label)
    if key is None:
        raise InvalidSpecError(f"no single-comb wavefunction for label {label!r}")
    if basis not in ("position", "momentum"):
        raise InvalidSpecError("basis must be 'position' or 'momentum'")
    noise.require_low_noise()
    if abs(noise.phi) > 0:
        raise InvalidSpecError("wavefunctions are provided only for unrotated noise")
    mult, v1, v2 = _WAVE_COMBS[key][basis]
    if basis == "position":
        spike, env = noise.Delta2, noise.kappa2
    else:
        spike, env = noise.kappa2, noise.Delta2
    spec = Theta1DSpec.pulse_train(mult * SQRT_PI, spike, v1, v2)
    s = np.asarray(s, dtype=float)
    envelope = np.exp(-0.5 * s**2 * env) * math.sqrt(env / (2 * math.pi))
    pref = math.sqrt(4 * math.pi) * (spike / env) ** 0.25
    vals = pref * envelope * theta_eval_1d(spec, s)
    vals = np.asarray(vals)
    if np.abs(vals.imag).max(initial=0) > 1e-10 * max(np.abs(vals).max(initial=0), 1e-300):
        raise NumericGuardError("wavefunction acquired an imaginary part")
    out = vals.real
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# channels


def displacement_channel(state: GKPWigner, Sigma) -> GKPWigner:
    """Gaussian random displacement channel with covariance ``Sigma``.

    Spike covariances grow by ``Sigma`` and so does the envelope when present; the
    normalization is recomputed so the output keeps unit integral.
    """
    S = np.asarray(Sigma, dtype=float).reshape(2, 2)
    if np.linalg.eigvalsh(0.5 * (S + S.T))[0] < 0:
        raise InvalidSpecError("displacement covariance must be positive semidefinite")
    if not np.any(S):
        return state
    cov = state.terms[0].spike_cov + S
    env = state.envelope
    if env is None:
        return state.with_terms(spike_cov=cov)
    env = Gaussian2D(env.mean, env.cov + S)
    norm = wigner_normalization(state.bloch, env.cov, cov.array()) if state.normalizable else state.norm
    return state.with_terms(spike_cov=cov, envelope=env, norm=norm)


def envelope_comb(Sigma_env) -> LatticeSum:
    """Envelope averaged over stabilizer translations: ``theta_{2 sqrt(pi) I}(x, 2 pi i Sigma_env)``."""
    return LatticeSum(2 * SQRT_PI * np.eye(2), spike_cov=Sigma_env)


def envelope_comb_flatness(Sigma_env, n: int = 24) -> float:
    """``max/min - 1`` of the stabilizer-averaged envelope over one unit cell."""
    comb = envelope_comb(Sigma_env)
    u = np.arange(n) * (2 * SQRT_PI / n)
    Q, P = np.meshgrid(u, u, indexing="ij")
    vals = evaluate(comb, np.stack([Q, P], axis=-1)).real
    return float(vals.max() / vals.min() - 1)


def stabilizer_twirl(state: GKPWigner, flatness_tol: float = 0.01) -> GKPWigner:
    """Average over random stabilizer translations (multiples of ``2 sqrt(pi)``).

    The envelope becomes a period-``2 sqrt(pi)`` comb that is flat for broad envelopes, so
    the result is the envelope-free blurred ideal state with the same spikes and Bloch
    vector. Envelopes too narrow for the flattening raise InvalidSpecError.
    """
    env = state.envelope
    if env is None:
        return state
    flat = envelope_comb_flatness(env.cov)
    if flat > flatness_tol:
        raise InvalidSpecError(f"envelope too narrow for stabilizer averaging (variation {flat:.3g} over a cell)")
    return state.with_terms(envelope=None, norm=2.0, normalizable=False)


# ---------------------------------------------------------------------------
# logical readout


def _comb_points(mu: int, window) -> tuple[np.ndarray, np.ndarray]:
    pts, w = sha_support_arrays(pauli_wigner(mu), window)
    return pts, (w / SQRT_PI).real


def boundary_fraction(f: Field2D, strip: int | None = None) -> float:
    """Fraction of ``integral |W|`` carried by a strip along the window edge."""
    a = np.abs(f.values)
    tot = a.sum()
    if tot == 0:
        return 0.0
    k = strip or max(2, min(a.shape) // 50)
    inner = a[k:-k, k:-k].sum() if min(a.shape) > 2 * k else 0.0
    return float((tot - inner) / tot)


def pauli_expectations(W, reference_noise: NoiseSpec | None = None, *, check_coverage: bool = True, coverage_tol: float = 1e-6) -> np.ndarray:
    """Raw ``r_mu = Tr[sigma_mu W]`` for the four logical Paulis.

    Uses ``Tr[A B] = 2 pi integral W_A W_B`` with the ideal Pauli Wigner functions, which
    amounts to ``r_mu = 2 pi sum_n s_mu(n) W(x_n)`` over the comb points of Pauli ``mu``.
    Sampled fields are read at grid nodes when the comb lands on them; otherwise the comb
    is blurred by the smallest Gaussian the grid resolves and integrated against the field.
    """
    if isinstance(W, GKPWigner):
        if not W.normalizable:
            raise InvalidSpecError("Pauli expectations of an unnormalizable state are undefined")
        env = W.envelope
        sd = np.sqrt(np.linalg.eigvalsh(env.cov)[-1])
        half = 9 * sd + 2 * SQRT_PI
        window =(env.mean[0] - half, env.mean[0] + half, env.mean[1] - half, env.mean[1] + half)
        out = np.zeros(4)
        for mu in range(4):
            pts, s = _comb_points(mu, window)
            out[mu] = TRACE_CONVENTION * float(np.dot(s, W(pts)))
        return out
    if not isinstance(W, Field2D):
        raise InvalidSpecError("expected a Field2D or GKPWigner")
    if check_coverage:
        if reference_noise is not None:
            mass = Gaussian2D.centered(reference_noise.sigma_env).mass_in(W.window)
            if mass < 1 - coverage_tol:
                raise CoverageError(f"window holds only {mass:.8f} of the envelope mass")
        frac = boundary_fraction(W)
        if frac > coverage_tol:
            raise CoverageError(f"{frac:.3g} of the field sits on the window boundary")
    out = np.zeros(4)
    for mu in range(4):
        pts, s = _comb_points(mu, W.window)
        idx = W.node_index(pts)
        if idx is not None:
            i, j, inside = idx
            out[mu] = TRACE_CONVENTION * float(np.dot(s[inside], W.values[i[inside], j[inside]]))
        else:
            eps = (1.5 * max(W.dq, W.dp)) ** 2
            comb = pauli_wigner(mu, eps * np.eye(2))
            sampled = sample_field(comb, W.window, W.resolution)
            out[mu] = TRACE_CONVENTION / SQRT_PI * inner_product(W, sampled)
    return out


def bloch_from_wigner(W, reference_noise: NoiseSpec | None = None, *, check_coverage: bool = True) -> Bloch4:
    """Logical Bloch vector of a Wigner function, normalized to ``r0 = 1``."""
    r = pauli_expectations(W, reference_noise, check_coverage=check_coverage)
    if not r[0] > 0:
        raise NumericGuardError(f"identity component {r[0]:.3g} is not positive")
    return Bloch4(tuple(r / r[0]))


def comb_representation(state: GKPWigner, field: Field2D | None = None, blur_var: float | None = None) -> GKPWigner:
    """Blur an ideal state just enough to be sampled on ``field``'s grid (or by ``blur_var``)."""
    if not state.is_ideal:
        return state
    if blur_var is None:
        if field is None:
            raise InvalidSpecError("need a grid or an explicit blur variance")
        blur_var = (1.5 * max(field.dq, field.dp)) ** 2
    return state.with_terms(spike_cov=blur_var * np.eye(2))


def with_envelope(state: GKPWigner, envelope_cov) -> GKPWigner:
    """Same spikes and Bloch vector under a different Gaussian envelope, renormalized.

    Envelopes narrower than the minimum for the spikes do not describe physical states;
    use :func:`check_envelope_physical` to classify them.
    """
    env = Gaussian2D.centered(envelope_cov)
    norm = wigner_normalization(state.bloch, env.cov, state.sigma_spike)
    if not norm > 0:
        raise NumericGuardError(f"normalization {norm:.3g} is not positive")
    return state.with_terms(envelope=env, norm=norm, normalizable=True)
