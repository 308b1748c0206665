"""GKP error correction as maps on sampled Wigner functions.

Syndrome extraction in one quadrature with an ancilla ``|a>`` acts on the data mode
through the diagonal Kraus operator ``psi_a(q)``; in phase space this is a *rake*:
a pointwise product with the ancilla Wigner function in the measured quadrature and a
convolution in the conjugate one::

    q-rake:  out(q, p) = integral W_+(q, w) W_in(q, p - w) dw
    p-rake:  out(q, p) = integral W_0(w, p) W_in(q + w, p) dw

A full round shifts the input by the homodyne outcomes, rakes both quadratures and
undoes the integer part of the shift. Ideal ancillas reduce the map to a projection on
the code space, read from the input Wigner function at the Pauli comb points.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.optimize import minimize_scalar

from .errors import CoverageError, InvalidSpecError, MemoryGuardError, PhysicsError, ProbabilityFloorError, RegimeError
from .gkp_states import (
    Bloch4,
    GKPWigner,
    NoiseSpec,
    approx_state_wigner,
    bloch_from_wigner,
    ideal_state_wigner,
    pauli_expectations,
)
from .phase_plane import (
    Field2D,
    Gate,
    SymplecticMap,
    evaluate_real,
    fft_workers,
    integrate,
    sample_field,
    symplectic_for_gate,
    translate,
)
from .theta_core import SQRT_PI

PROBABILITY_FLOOR = 1e-12


class CoverageWarning(UserWarning):
    """A Bloch vector was read from a field whose window truncates the state."""


DEFAULT_MEMORY_LIMIT = 512 * 2**20

# readouts beyond the unit ball by less than this are projected back onto it
BLOCH_EXCESS_TOL = 1e-6
SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# syndromes


@dataclass(frozen=True)
class Syndrome:
    """Homodyne outcomes split into the nearest multiple of ``sqrt(pi)`` and a remainder."""

    m_q: float
    m_p: float
    nearest_q: float
    nearest_p: float
    rem_q: float
    rem_p: float

    @property
    def m(self) -> np.ndarray:
        return np.array([self.m_q, self.m_p])

    @property
    def nearest(self) -> np.ndarray:
        return np.array([self.nearest_q, self.nearest_p])

    @property
    def remainder(self) -> np.ndarray:
        return np.array([self.rem_q, self.rem_p])

    @property
    def lattice_index(self) -> tuple[int, int]:
        return int(round(self.nearest_q / SQRT_PI)), int(round(self.nearest_p / SQRT_PI))


def _split(m: float) -> tuple[float, float]:
    k = math.floor(m / SQRT_PI + 0.5)
    nearest = k * SQRT_PI
    rem = m - nearest
    # guard the half-open interval against rounding at the tie
    if rem >= SQRT_PI / 2:
        k += 1
    elif rem < -SQRT_PI / 2:
        k -= 1
    nearest = k * SQRT_PI
    return nearest, m - nearest


def decode_syndrome(m_q: float, m_p: float) -> Syndrome:
    """``nearest = sqrt(pi) floor(m / sqrt(pi) + 1/2)`` and ``rem = m - nearest`` in ``[-sqrt(pi)/2, sqrt(pi)/2)``."""
    if not (math.isfinite(m_q) and math.isfinite(m_p)):
        raise InvalidSpecError("syndrome outcomes must be finite")
    nq, rq = _split(float(m_q))
    n_p, rp = _split(float(m_p))
    return Syndrome(float(m_q), float(m_p), nq, n_p, rq, rp)


def _as_syndrome(s) -> Syndrome:
    if isinstance(s, Syndrome):
        return s
    m_q, m_p = s
    return decode_syndrome(m_q, m_p)


# ---------------------------------------------------------------------------
# ancillas


class AncillaKind(enum.Enum):
    IDEAL = "ideal"
    APPROXIMATE = "approximate"


@dataclass(frozen=True)
class AncillaSpec:
    """Ancilla quality for syndrome extraction.

    Approximate ancillas need symmetric noise so that the Fourier transform of ``|0>``
    is ``|+>`` with identical spikes.
    """

    kind: AncillaKind
    noise: NoiseSpec | None = None

    def __post_init__(self):
        kind = AncillaKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is AncillaKind.IDEAL:
            if self.noise is not None:
                raise InvalidSpecError("ideal ancillas carry no noise")
            return
        if self.noise is None:
            raise InvalidSpecError("approximate ancillas need a NoiseSpec")
        if not self.noise.is_symmetric or self.noise.phi != 0:
            raise InvalidSpecError("approximate ancillas require symmetric, unrotated noise")
        self.noise.require_low_noise()

    @classmethod
    def ideal(cls) -> "AncillaSpec":
        return cls(AncillaKind.IDEAL)

    @classmethod
    def approximate(cls, beta: float) -> "AncillaSpec":
        return cls(AncillaKind.APPROXIMATE, NoiseSpec.symmetric(beta))

    @property
    def is_ideal(self) -> bool:
        return self.kind is AncillaKind.IDEAL

    @property
    def spike_variance(self) -> float:
        """Spike variance of the ancilla Wigner function in either quadrature."""
        if self.is_ideal:
            return 0.0
        return float(self.noise.sigma_spike[0, 0])

    def plus_wigner(self) -> GKPWigner:
        """Ancilla for the position rake."""
        return self._state((1.0, 0.0, 0.0))

    def zero_wigner(self) -> GKPWigner:
        """Ancilla for the momentum rake."""
        return self._state((0.0, 0.0, 1.0))

    def _state(self, vec) -> GKPWigner:
        if self.is_ideal:
            return ideal_state_wigner(vec)
        return approx_state_wigner(vec, self.noise)


# ---------------------------------------------------------------------------
# raking


def _convolve_full(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    """Linear (non-circular) convolution of ``a`` and ``k`` along ``axis``."""
    n = a.shape[axis] + k.shape[axis] - 1
    size = scipy.fft.next_fast_len(n, real=True)
    workers = fft_workers()
    fa = scipy.fft.rfft(a, size, axis=axis, workers=workers)
    fk = scipy.fft.rfft(k, size, axis=axis, workers=workers)
    full = scipy.fft.irfft(fa * fk, size, axis=axis, workers=workers)
    return np.take(full, np.arange(n), axis=axis)


def _offsets(n: int, step: float) -> np.ndarray:
    return np.arange(-(n - 1), n) * step


def rake(W_in: Field2D, ancilla_wigner, axis: str) -> Field2D:
    """Single-quadrature syndrome map with the ancilla evaluated analytically on the grid.

    The conjugate-quadrature convolution uses open boundaries: the ancilla is evaluated
    at every offset the window can produce, and nothing wraps around.
    """
    if isinstance(ancilla_wigner, GKPWigner) and ancilla_wigner.is_ideal:
        raise InvalidSpecError("delta-comb ancillas cannot be raked on a grid; use ec_ideal")
    nq, n_p = W_in.resolution
    q, p = W_in.q_axis, W_in.p_axis
    if axis == "q":
        w = _offsets(n_p, W_in.dp)
        Q, Wo = np.meshgrid(q, w, indexing="ij")
        kernel = evaluate_real(ancilla_wigner, np.stack([Q, Wo], axis=-1))
        full = _convolve_full(W_in.values, kernel, axis=1)
        out = full[:, n_p - 1 : 2 * n_p - 1] * W_in.dp
    elif axis == "p":
        w = _offsets(nq, W_in.dq)
        # reversed offsets turn the correlation into a convolution
        Wo, P = np.meshgrid(-w, p, indexing="ij")
        kernel = evaluate_real(ancilla_wigner, np.stack([Wo, P], axis=-1))
        full = _convolve_full(W_in.values, kernel, axis=0)
        out = full[nq - 1 : 2 * nq - 1, :] * W_in.dq
    else:
        raise InvalidSpecError("axis must be 'q' or 'p'")
    return W_in.with_values(out)


def _rake_both(f: Field2D, ancilla: AncillaSpec, order: str) -> Field2D:
    plus, zero = ancilla.plus_wigner(), ancilla.zero_wigner()
    if order == "q-then-p":
        return rake(rake(f, plus, "q"), zero, "p")
    if order == "p-then-q":
        return rake(rake(f, zero, "p"), plus, "q")
    raise InvalidSpecError("order must be 'q-then-p' or 'p-then-q'")


def _normalized(f: Field2D, probability: float) -> Field2D:
    if not probability > PROBABILITY_FLOOR:
        raise ProbabilityFloorError(f"outcome probability {probability:.3g} is below the floor {PROBABILITY_FLOOR:g}")
    return f.with_values(f.values / probability)


def ec_map(W_in: Field2D, ancilla: AncillaSpec, syndrome, order: str = "q-then-p") -> tuple[Field2D, float]:
    """One round of GKP error correction with approximate ancillas.

    Returns the renormalized output field and the outcome probability density (the
    integral of the unnormalized output). The output window is the input window shifted
    by minus the syndrome remainder.
    """
    if ancilla.is_ideal:
        raise InvalidSpecError("ideal ancillas are handled by ec_ideal")
    s = _as_syndrome(syndrome)
    shifted = translate(W_in, s.m)
    raked = _rake_both(shifted, ancilla, order)
    out = translate(raked, -s.nearest)
    prob = integrate(out)
    return _normalized(out, prob), prob


def _normalized_bloch(r: np.ndarray) -> Bloch4:
    if not r[0] > PROBABILITY_FLOOR:
        raise ProbabilityFloorError(f"projected identity weight {r[0]:.3g} is not positive")
    b = Bloch4(tuple(r / r[0]))
    excess = b.length - 1
    if excess > BLOCH_EXCESS_TOL:
        raise PhysicsError(f"projected state lies outside the Bloch ball by {excess:.3g}")
    if excess > 0:
        # approximate code states are physical only up to tiny corrections
        b = Bloch4.from_vector(b.vector / b.length)
    return b


def ec_ideal(W_in: Field2D, syndrome, *, check_coverage: bool = True) -> tuple[Bloch4, GKPWigner]:
    """Error correction with ideal ancillas: projection onto the code space.

    ``r_mu`` is read from the shifted input at the Pauli comb points; the integer part of
    the syndrome then acts as a logical Pauli frame on the ideal output state.
    """
    s = _as_syndrome(syndrome)
    r = pauli_expectations(translate(W_in, s.m), check_coverage=check_coverage)
    bloch = _normalized_bloch(r)
    state = ideal_state_wigner(bloch)
    if np.any(s.nearest):
        state = state.apply_symplectic(SymplecticMap.displacement(s.nearest))
    return state.bloch, state


# ---------------------------------------------------------------------------
# teleportation


def teleport_shift(m) -> np.ndarray:
    """Argument shift ``sqrt(2) m`` applied to the input for heterodyne outcome ``m``."""
    return SQRT2 * np.asarray(m, dtype=float).reshape(2)


def teleport_ec(W_in: Field2D, m, ancilla: AncillaSpec, *, check_coverage: bool = True) -> tuple[Bloch4, Field2D]:
    """Teleportation-based error correction (and magic-state preparation from non-code inputs).

    The output mode carries ``W_in`` shifted by ``sqrt(2) m`` and projected (ideal
    ancillas) or raked in both quadratures (approximate ancillas); no Pauli frame is
    applied. For ideal ancillas the returned field is the output comb blurred just enough
    to be resolved by the input grid, normalized as the Pauli expansion ``(1/2) sum r W``.
    """
    a = teleport_shift(m)
    f = translate(W_in, a)
    if ancilla.is_ideal:
        bloch = _normalized_bloch(pauli_expectations(f, check_coverage=check_coverage))
        blur_var = (1.5 * max(f.dq, f.dp)) ** 2
        state = ideal_state_wigner(bloch).with_terms(spike_cov=blur_var * np.eye(2))
        return bloch, sample_field(state, f.window, f.resolution)
    raked = _rake_both(f, ancilla, "q-then-p")
    out = _normalized(raked, integrate(raked))
    try:
        bloch = bloch_from_wigner(out, check_coverage=check_coverage)
    except CoverageError as exc:
        # the output envelope is set by the ancillas and may exceed the input window;
        # the field itself is still exact inside the window
        warnings.warn(f"Bloch vector read from a truncated output: {exc}", CoverageWarning, stacklevel=2)
        bloch = bloch_from_wigner(out, check_coverage=False)
    return bloch, out


def teleport_probability(W_in: Field2D, m, ancilla: AncillaSpec) -> float:
    """Probability density of heterodyne outcome ``m``."""
    if ancilla.is_ideal:
        raise InvalidSpecError("outcome densities need approximate ancillas")
    raked = _rake_both(translate(W_in, teleport_shift(m)), ancilla, "q-then-p")
    return 2 * integrate(raked)


class _NodeTable:
    """Values of a phase-space function on a regular lattice, looked up by coordinates.

    Lookups verify that every requested point sits on a lattice node, so coordinates
    computed independently (here from symplectic substitutions) are checked rather than
    assumed.
    """

    def __init__(self, obj, q_nodes: np.ndarray, p_nodes: np.ndarray):
        self.q0, self.p0 = q_nodes[0], p_nodes[0]
        self.dq = q_nodes[1] - q_nodes[0]
        self.dp = p_nodes[1] - p_nodes[0]
        Q, P = np.meshgrid(q_nodes, p_nodes, indexing="ij")
        self.values = evaluate_real(obj, np.stack([Q, P], axis=-1))

    def __call__(self, q: np.ndarray, p: np.ndarray, tol: float = 1e-6) -> np.ndarray:
        fi = (q - self.q0) / self.dq
        fj = (p - self.p0) / self.dp
        i, j = np.rint(fi), np.rint(fj)
        n, k = self.values.shape
        if (
            np.abs(fi - i).max() > tol
            or np.abs(fj - j).max() > tol
            or i.min() < 0
            or j.min() < 0
            or i.max() >= n
            or j.max() >= k
        ):
            raise InvalidSpecError("three-mode coordinates left the ancilla node table")
        return self.values[i.astype(int), j.astype(int)]


def three_mode_teleport_trace(W_in: Field2D, ancilla: AncillaSpec, m, *, memory_limit: int = DEFAULT_MEMORY_LIMIT) -> tuple[Field2D, float]:
    """Teleportation output obtained from the explicit three-mode Wigner function.

    Modes are (data, ancilla ``|+>``, ancilla ``|0>``). The product state is transformed
    by a controlled-X from mode 2 to mode 3 and a beamsplitter on modes 1 and 2 through
    the inverse symplectic substitution ``W(S^{-1} x)``; mode 1 is measured in ``q`` and
    mode 2 in ``p``, and their conjugates are integrated out. The integration variables
    are chosen so the data argument lands on the input grid nodes::

        q2 = sqrt(2) u - m_q,   p1 = sqrt(2) v - m_p,   dq2 dp1 = 2 du dv

    The double integral is contracted one output ``p`` slice at a time. Returns the
    normalized output field and the outcome probability density.
    """
    if ancilla.is_ideal:
        raise InvalidSpecError("the three-mode trace needs approximate ancillas")
    m_q, m_p = np.asarray(m, dtype=float).reshape(2)
    nq, n_p = W_in.resolution
    per_slice = 16 * max(nq, n_p) ** 2 * 8 + 2 * (2 * nq) * (2 * n_p) * 8
    if per_slice > memory_limit:
        raise MemoryGuardError(f"three-mode contraction needs {per_slice} bytes, limit {memory_limit}")

    cx = symplectic_for_gate(Gate.CX, modes=(1, 2), n_modes=3)
    bs = symplectic_for_gate(Gate.BEAMSPLITTER, modes=(0, 1), n_modes=3)
    S_inv = np.linalg.inv(bs.S @ cx.S)
    a = teleport_shift((m_q, m_p))
    out_window = translate(W_in, a).window
    q3_axis = W_in.q_axis - a[0]
    p3_axis = W_in.p_axis - a[1]
    U, V = np.meshgrid(W_in.q_axis, W_in.p_axis, indexing="ij")
    q2 = SQRT2 * U - m_q
    p1 = SQRT2 * V - m_p
    weight = 2 * W_in.dq * W_in.dp

    # ancilla arguments lie on the input lattice up to fixed offsets
    dq, dp = W_in.dq, W_in.dp
    plus = _NodeTable(ancilla.plus_wigner(), W_in.q_axis - a[0], _offsets(n_p, dp))
    zero = _NodeTable(ancilla.zero_wigner(), _offsets(nq, dq), p3_axis)

    out = np.empty((nq, n_p))
    for jp, p3 in enumerate(p3_axis):
        x = np.zeros((nq, n_p, 6))
        x[..., 0] = m_q
        x[..., 1] = q2
        x[..., 3] = p1
        x[..., 4] = m_p
        x[..., 5] = p3
        y = x @ S_inv.T
        idx = W_in.node_index(y[..., [0, 3]].reshape(-1, 2))
        if idx is None or not idx[2].all():
            raise InvalidSpecError("data-mode arguments fell off the input grid")
        data = W_in.values[idx[0], idx[1]].reshape(nq, n_p)
        inner = (data * plus(y[..., 1], y[..., 4])).sum(axis=1)  # over p1, indexed by u
        z = np.zeros((nq, nq, 6))
        z[..., 0] = m_q
        z[..., 1] = q2[None, :, 0]
        z[..., 2] = q3_axis[:, None]
        z[..., 4] = m_p
        z[..., 5] = p3
        yz = z @ S_inv.T
        out[:, jp] = zero(yz[..., 2], yz[..., 5]) @ inner
    out *= weight
    field = Field2D(out_window, out)
    prob = integrate(field)
    return _normalized(field, prob), prob


# ---------------------------------------------------------------------------
# spike statistics


def fitted_spike_variances(f: Field2D, period: float = SQRT_PI, method: str = "slice") -> tuple[float, float]:
    """Spike variances of a sampled GKP-like field in ``q`` and ``p``.

    ``method="slice"`` fits ``log W`` by a weighted parabola along the ``q`` and ``p``
    lines through the largest spike, using points within a quarter period of it; a
    Gaussian spike gives back its conditional variances exactly. ``method="marginal"``
    takes second moments of the two marginals folded onto the nearest lattice point,
    which needs a window covering the whole envelope.
    """
    if method == "marginal":
        res = []
        for axis, coords, other in ((0, f.q_axis, f.dp), (1, f.p_axis, f.dq)):
            marginal = f.values.sum(axis=1 - axis) * other
            d = coords - period * np.round(coords / period)
            tot = marginal.sum()
            if not tot > 0:
                raise ProbabilityFloorError("marginal has no positive weight")
            res.append(float((marginal * d**2).sum() / tot))
        return res[0], res[1]
    if method != "slice":
        raise InvalidSpecError("method must be 'slice' or 'marginal'")
    i, j = np.unravel_index(np.argmax(f.values), f.values.shape)
    return (
        _fit_line_variance(f.values[:, j], f.q_axis - f.q_axis[i], period),
        _fit_line_variance(f.values[i, :], f.p_axis - f.p_axis[j], period),
    )


def _fit_line_variance(line: np.ndarray, d: np.ndarray, period: float) -> float:
    # spikes of one variance at multiples of half the period, amplitudes free
    half = period / 2
    keep = np.abs(d) <= 1.25 * period
    y, x = line[keep], d[keep]
    if len(y) < 9:
        raise InvalidSpecError("spike is not resolved by the grid")
    centers = half * np.arange(-2, 3)

    def residual(log_v):
        basis = np.exp(-0.5 * (x[:, None] - centers[None, :]) ** 2 / np.exp(log_v))
        amp, *_ = np.linalg.lstsq(basis, y, rcond=None)
        return float(np.sum((basis @ amp - y) ** 2))

    hi = math.log((period / 3) ** 2)
    res = minimize_scalar(residual, bounds=(math.log(1e-8), hi), method="bounded", options={"xatol": 1e-10})
    return float(math.exp(res.x))


def predicted_ec_variances(s_in: tuple[float, float], v_a: float, order: str = "q-then-p") -> tuple[float, float]:
    """Spike variances after a round of EC for Gaussian spikes, ignoring envelopes.

    A rake in one quadrature combines the spike precisions there (``s v / (s + v)``) and
    adds the ancilla variance to the conjugate quadrature.
    """
    sq, sp = map(float, s_in)
    def combine(s: float) -> float:
        return s * v_a / (s + v_a)
    if order == "q-then-p":
        sq, sp = combine(sq), sp + v_a
        sp, sq = combine(sp), sq + v_a
    elif order == "p-then-q":
        sp, sq = combine(sp), sq + v_a
        sq, sp = combine(sq), sp + v_a
    else:
        raise InvalidSpecError("order must be 'q-then-p' or 'p-then-q'")
    return sq, sp


__all__ = [
    "AncillaKind",
    "AncillaSpec",
    "CoverageWarning",
    "PROBABILITY_FLOOR",
    "RegimeError",
    "Syndrome",
    "decode_syndrome",
    "ec_ideal",
    "ec_map",
    "fitted_spike_variances",
    "predicted_ec_variances",
    "rake",
    "teleport_ec",
    "teleport_probability",
    "teleport_shift",
    "three_mode_teleport_trace",
]
