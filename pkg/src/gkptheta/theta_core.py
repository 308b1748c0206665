"""Theta functions and Dirac combs with rational characteristics.

One-dimensional theta functions use the period-``T`` normalization

    theta_T[v1; v2](z, tau) = |T|^{-1/2} theta[v1; v2](z / T, tau / T^2),
    theta[v1; v2](z, tau)   = sum_n exp(2 pi i [ (n+v1)^2 tau / 2 + (n+v1)(z+v2) ]).

For ``tau = 2 pi i sigma^2`` and real ``z`` this is a phased Gaussian pulse train,

    theta_T[v1; v2](x, 2 pi i sigma^2) = sqrt|T| sum_n exp(-2 pi i n v1) G_{sigma^2}(x + (n+v2) T),

and the multivariate version on a lattice with generator matrix ``A`` (columns are the
lattice vectors) is

    theta_A[v1; v2](x, 2 pi i Sigma) = sqrt|det A| sum_n exp(-2 pi i v1.n) G_Sigma(x + A(n+v2)).

The Dirac comb (shah) is the ``Sigma -> 0`` limit. It is a distribution, so it is only
ever enumerated (:func:`sha_support`), never evaluated pointwise.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidSpecError
from .gaussian import Gaussian2D

SQRT_PI = math.sqrt(math.pi)
DEFAULT_REL_TOL = 1e-12

# extra log-margin on top of log(1/rel_tol) when choosing truncation radii
_LOG_MARGIN = 3.0
_CHUNK_TERMS = 4_000_000


class NegativePeriodWarning(UserWarning):
    """A negative period was supplied; it is folded into reflected characteristics."""


def as_fraction(x) -> Fraction:
    """Convert ``x`` to an exact rational.

    Floats are accepted only when they are (to 1e-15) a rational with a modest
    denominator, e.g. ``0.5`` or ``1/3``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    xf = float(x)
    fr = Fraction(xf).limit_denominator(10**6)
    if abs(float(fr) - xf) > 1e-15 * max(1.0, abs(xf)):
        raise InvalidSpecError(f"characteristic {x!r} is not a recognizable rational")
    return fr


def unit_phase(t) -> complex:
    """``exp(2 pi i t)`` for rational ``t``; exact for multiples of 1/4."""
    t = as_fraction(t)
    t = t - math.floor(t)
    exact = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if t in exact:
        return exact[t]
    return cmath.exp(2j * math.pi * float(t))


def _frac_vec(v) -> tuple[Fraction, ...]:
    if isinstance(v, (int, float, Fraction, str, np.integer, np.floating)):
        v = (v,)
    return tuple(as_fraction(c) for c in v)


@dataclass(frozen=True)
class Characteristics:
    """Pair of rational vectors ``(v1, v2)``.

    Arbitrary rationals are accepted; :func:`reduce_characteristics` returns the
    canonical representative with every component in ``[0, 1)``.
    """

    v1: tuple[Fraction, ...]
    v2: tuple[Fraction, ...]

    def __post_init__(self):
        v1, v2 = _frac_vec(self.v1), _frac_vec(self.v2)
        if len(v1) != len(v2):
            raise InvalidSpecError("characteristics must have equal dimension")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)

    @classmethod
    def zero(cls, dim: int = 2) -> "Characteristics":
        return cls((0,) * dim, (0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.v1)

    @property
    def is_canonical(self) -> bool:
        return all(0 <= c < 1 for c in self.v1 + self.v2)

    def v1_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.v1])

    def v2_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.v2])

    def shifted(self, m1=None, m2=None) -> "Characteristics":
        m1 = (0,) * self.dim if m1 is None else _frac_vec(m1)
        m2 = (0,) * self.dim if m2 is None else _frac_vec(m2)
        return Characteristics(
            tuple(a + b for a, b in zip(self.v1, m1)),
            tuple(a + b for a, b in zip(self.v2, m2)),
        )


def reduce_characteristics(chars: Characteristics) -> tuple[Characteristics, complex]:
    """Canonical characteristics and the phase picked up on the way.

    ``theta[v1 + m1; v2 + m2] = exp(2 pi i v1.m2) theta[v1; v2]`` for integer ``m1, m2``,
    so only the integer part of ``v2`` produces a phase.
    """
    c1 = tuple(c - math.floor(c) for c in chars.v1)
    m2 = tuple(math.floor(c) for c in chars.v2)
    c2 = tuple(c - m for c, m in zip(chars.v2, m2))
    phase = unit_phase(sum((a * b for a, b in zip(c1, m2)), Fraction(0)))
    return Characteristics(c1, c2), phase


# ---------------------------------------------------------------------------
# one dimension


@dataclass(frozen=True)
class Theta1DSpec:
    """Univariate theta function ``theta_T[v1; v2](., tau)``.

    ``tau=None`` denotes the Dirac-comb limit.
    """

    period: float
    v1: Fraction = Fraction(0)
    v2: Fraction = Fraction(0)
    tau: complex | None = None

    def __post_init__(self):
        T = float(self.period)
        if T == 0 or not math.isfinite(T):
            raise InvalidSpecError("period must be a nonzero finite number")
        object.__setattr__(self, "period", T)
        object.__setattr__(self, "v1", as_fraction(self.v1))
        object.__setattr__(self, "v2", as_fraction(self.v2))
        if self.tau is not None:
            tau = complex(self.tau)
            if not tau.imag > 0:
                raise InvalidSpecError(f"Im(tau) must be positive, got {tau}")
            object.__setattr__(self, "tau", tau)

    @classmethod
    def pulse_train(cls, period, sigma2, v1=0, v2=0) -> "Theta1DSpec":
        """Pulse train of Gaussians with variance ``sigma2`` (``tau = 2 pi i sigma2``)."""
        return cls(period, v1, v2, 2j * math.pi * float(sigma2))

    @property
    def is_sha(self) -> bool:
        return self.tau is None

    def with_period(self, T) -> "Theta1DSpec":
        return replace(self, period=T)


def _positive_period(spec: Theta1DSpec) -> Theta1DSpec:
    # theta_{-T}[v1; v2] = theta_{|T|}[-v1; -v2]
    if spec.period > 0:
        return spec
    warnings.warn("negative period folded into reflected characteristics", NegativePeriodWarning, stacklevel=3)
    return Theta1DSpec(-spec.period, -spec.v1, -spec.v2, spec.tau)


def _quadratic_series(shift: np.ndarray, s: complex, phase: float, rel_tol: float) -> np.ndarray:
    """``sum_k exp(pi i s (k - shift)^2 + 2 pi i k phase)`` over integers ``k``, per point.

    Terms are summed around the dominant one and truncated once the omitted terms fall
    below ``rel_tol`` of the largest retained term.
    """
    b = s.imag
    radius = math.sqrt((math.log(1.0 / rel_tol) + _LOG_MARGIN) / (math.pi * b)) + 1.0
    # |term| = exp(-pi Im(s (k - shift)^2)), minimal at k = Re(shift) + Re(s) Im(shift) / Im(s)
    centers = shift.real + s.real * shift.imag / b
    out = np.empty(shift.shape, dtype=complex)
    order = np.argsort(centers)
    start = 0
    width = 2 * radius + 1
    budget = max(1, int(_CHUNK_TERMS // (width + 8)))
    while start < len(order):
        lo_c = centers[order[start]]
        stop = start
        # group points with similar centers to keep the term window short
        while stop < len(order) and centers[order[stop]] - lo_c < radius and stop - start < budget:
            stop += 1
        idx = order[start:stop]
        k = np.arange(math.floor(centers[idx].min() - radius), math.ceil(centers[idx].max() + radius) + 1)
        d = k[None, :] - shift[idx][:, None]
        expo = 1j * math.pi * s * d**2 + 2j * math.pi * phase * k[None, :]
        emax = expo.real.max(axis=1, keepdims=True)
        out[idx] = np.exp(emax[:, 0]) * np.exp(expo - emax).sum(axis=1)
        start = stop
    return out


def theta_eval_1d(spec: Theta1DSpec, z, rel_tol: float = DEFAULT_REL_TOL, method: str = "auto"):
    """Evaluate ``theta_T[v1; v2](z, tau)``.

    ``method="series"`` sums the defining series
    ``|T|^{-1/2} sum_n exp(pi i (n+v1)^2 tau/T^2 + 2 pi i (n+v1)(z/T + v2))``;
    ``method="dual"`` sums its Poisson dual, a train of (complex) Gaussian pulses, and
    ``"auto"`` picks whichever converges faster. The dual form keeps full relative
    accuracy far from narrow pulses, where the series only reaches absolute accuracy.
    ``z`` may be an array.
    """
    if not 0 < rel_tol < 1:
        raise InvalidSpecError("rel_tol must lie in (0, 1)")
    if spec.is_sha:
        raise InvalidSpecError("a Dirac comb has no pointwise values; use sha_support_1d")
    spec = _positive_period(spec)
    T = spec.period
    z_arr = np.asarray(z, dtype=complex)
    zeta = z_arr.ravel() / T
    t = spec.tau / T**2
    v1, v2 = float(spec.v1), float(spec.v2)
    dual = -1.0 / t
    if method == "auto":
        method = "dual" if dual.imag > t.imag else "series"
    if method == "series":
        out = _series_direct(zeta, t, v1, v2, rel_tol)
    elif method == "dual":
        # Poisson: sum_n f(n + v1) = (-i t)^{-1/2} sum_k e^{2 pi i k v1} exp(-pi i (w - k)^2 / t)
        w = zeta + v2
        out = _quadratic_series(w, dual, v1, rel_tol) / np.sqrt(-1j * t)
    else:
        raise InvalidSpecError(f"unknown method {method!r}")
    out /= math.sqrt(abs(T))
    out = out.reshape(z_arr.shape)
    return out[()] if out.ndim == 0 else out


def _series_direct(zeta: np.ndarray, t: complex, v1: float, v2: float, rel_tol: float) -> np.ndarray:
    # |term| = exp(-pi Im(t) a^2 - 2 pi a Im(zeta)),  a = n + v1
    b = t.imag
    radius = math.sqrt((math.log(1.0 / rel_tol) + _LOG_MARGIN) / (math.pi * b)) + 1.0
    centers = -zeta.imag / b
    out = np.empty(zeta.shape, dtype=complex)
    order = np.argsort(centers)
    width = 2 * radius + 1
    budget = max(1, int(_CHUNK_TERMS // (width + 8)))
    start = 0
    while start < len(order):
        lo_c = centers[order[start]]
        stop = start
        while stop < len(order) and centers[order[stop]] - lo_c < radius and stop - start < budget:
            stop += 1
        idx = order[start:stop]
        n = np.arange(math.floor(centers[idx].min() - radius - v1), math.ceil(centers[idx].max() + radius - v1) + 1)
        a = n + v1
        expo = 2j * math.pi * (0.5 * a[None, :] ** 2 * t + a[None, :] * (zeta[idx][:, None] + v2))
        emax = expo.real.max(axis=1, keepdims=True)
        out[idx] = np.exp(emax[:, 0]) * np.exp(expo - emax).sum(axis=1)
        start = stop
    return out


def pulse_train_1d(spec: Theta1DSpec, x, rel_tol: float = DEFAULT_REL_TOL):
    """Direct Gaussian pulse train ``sum_n exp(-2 pi i n v1) G_{sigma^2}(x + (n+v2) T)``.

    Requires purely imaginary ``tau = 2 pi i sigma^2``. Equals ``theta_T / sqrt|T|``;
    used as an independent check on :func:`theta_eval_1d`.
    """
    if spec.is_sha or abs(spec.tau.real) > 0:
        raise InvalidSpecError("pulse trains need tau = 2 pi i sigma^2")
    spec = _positive_period(spec)
    T = spec.period
    sigma2 = spec.tau.imag / (2 * math.pi)
    x_arr = np.asarray(x, dtype=float)
    xs = x_arr.ravel()
    reach = math.sqrt(2 * sigma2 * (math.log(1.0 / rel_tol) + _LOG_MARGIN)) / T + 1.0
    v1, v2 = float(spec.v1), float(spec.v2)
    c = -xs / T - v2
    n = np.arange(math.floor(c.min() - reach), math.ceil(c.max() + reach) + 1)
    d = xs[:, None] + (n[None, :] + v2) * T
    g = np.exp(-0.5 * d**2 / sigma2) / math.sqrt(2 * math.pi * sigma2)
    val = (np.exp(-2j * math.pi * n * v1)[None, :] * g).sum(axis=1)
    val = val.reshape(x_arr.shape)
    return val[()] if val.ndim == 0 else val


def sha_support_1d(spec: Theta1DSpec, interval: tuple[float, float]):
    """Spike locations ``-(n+v2) T`` inside a closed interval with weights ``sqrt|T| exp(-2 pi i n v1)``."""
    spec = _positive_period(replace(spec, tau=None))
    T = spec.period
    lo, hi = interval
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    n_lo = math.floor(-hi / T - float(spec.v2)) - 1
    n_hi = math.ceil(-lo / T - float(spec.v2)) + 1
    out = []
    for n in range(n_lo, n_hi + 1):
        x = -(n + float(spec.v2)) * T
        if lo - tol <= x <= hi + tol:
            out.append((x, math.sqrt(T) * unit_phase(-n * spec.v1)))
    out.sort(key=lambda t: t[0])
    return out


class HalfPeriodSplit(NamedTuple):
    """``input = (first + sign * second) / sqrt(2)``."""

    first: Theta1DSpec
    second: Theta1DSpec
    sign: int


def split_half_period(spec: Theta1DSpec, prefer: str = "double") -> HalfPeriodSplit:
    """Rewrite a half-integer-characteristic theta function with doubled or halved period.

    * ``theta_T[j/2; 0] = (theta_{2T}[0; 0] + (-1)^j theta_{2T}[0; 1/2]) / sqrt(2)``
    * ``theta_T[0; k/2] = (theta_{T/2}[0; 0] + (-1)^k theta_{T/2}[1/2; 0]) / sqrt(2)``

    When both characteristics vanish either identity applies; ``prefer`` picks
    ``"double"`` (first form) or ``"half"`` (second form).
    """
    half = Fraction(1, 2)
    v1, v2 = spec.v1, spec.v2
    if v1 in (0, half) and v2 == 0 and not (v1 == 0 and prefer == "half"):
        sign = -1 if v1 == half else 1
        return HalfPeriodSplit(
            Theta1DSpec(2 * spec.period, 0, 0, spec.tau),
            Theta1DSpec(2 * spec.period, 0, half, spec.tau),
            sign,
        )
    if v1 == 0 and v2 in (0, half):
        sign = -1 if v2 == half else 1
        return HalfPeriodSplit(
            Theta1DSpec(spec.period / 2, 0, 0, spec.tau),
            Theta1DSpec(spec.period / 2, half, 0, spec.tau),
            sign,
        )
    raise InvalidSpecError("period splitting needs one characteristic in {0, 1/2} and the other 0")


def fourier_dual_period(T: float) -> float:
    """Period of the Fourier transform of a period-``T`` comb: ``2 pi / T``."""
    T = float(T)
    if T == 0:
        raise InvalidSpecError("period must be nonzero")
    return 2 * math.pi / T


# ---------------------------------------------------------------------------
# lattices


class ExactSym2(NamedTuple):
    """Symmetric 2x2 matrix ``[[a, b], [b, c]]`` with exact rational entries.

    Floats are converted without rounding, so sums and differences are exact and
    ``(S + X) - X == S`` holds bit for bit.
    """

    a: Fraction
    b: Fraction
    c: Fraction

    @classmethod
    def from_matrix(cls, m) -> "ExactSym2":
        if isinstance(m, ExactSym2):
            return m
        if np.isscalar(m):
            x = Fraction(float(m)) if not isinstance(m, Fraction) else m
            return cls(x, Fraction(0), x)
        arr = np.asarray(m, dtype=float).reshape(2, 2)
        off = 0.5 * (arr[0, 1] + arr[1, 0])
        if abs(arr[0, 1] - arr[1, 0]) > 1e-12 * max(1.0, np.abs(arr).max()):
            raise InvalidSpecError("covariance matrix must be symmetric")
        return cls(Fraction(float(arr[0, 0])), Fraction(float(off)), Fraction(float(arr[1, 1])))

    @classmethod
    def zero(cls) -> "ExactSym2":
        return cls(Fraction(0), Fraction(0), Fraction(0))

    def __add__(self, other):
        o = ExactSym2.from_matrix(other)
        return ExactSym2(self.a + o.a, self.b + o.b, self.c + o.c)

    def __sub__(self, other):
        o = ExactSym2.from_matrix(other)
        return ExactSym2(self.a - o.a, self.b - o.b, self.c - o.c)

    @property
    def det(self) -> Fraction:
        return self.a * self.c - self.b * self.b

    def is_psd(self) -> bool:
        return self.a >= 0 and self.c >= 0 and self.det >= 0

    def is_pd(self) -> bool:
        return self.a > 0 and self.det > 0

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0

    def array(self) -> np.ndarray:
        return np.array([[float(self.a), float(self.b)], [float(self.b), float(self.c)]])


def _frozen(a, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LatticeSum:
    """Enveloped, phased lattice of Gaussian spikes (or delta spikes).

    Value at ``x``::

        prefactor * envelope(x) * theta_A[v1; v2](x - shift, 2 pi i spike_cov)

    ``shift`` holds translations that are not rational in lattice units; rational ones
    are absorbed into ``v2``. Characteristics are canonicalized on construction with the
    resulting phase folded into ``prefactor``.
    """

    lattice: np.ndarray
    chars: Characteristics = field(default_factory=Characteristics.zero)
    spike_cov: ExactSym2 = field(default_factory=ExactSym2.zero)
    envelope: Gaussian2D | None = None
    prefactor: complex = 1.0 + 0j
    shift: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        A = np.array(self.lattice, dtype=float)
        if A.ndim == 0:
            A = A * np.eye(2)
        A = _frozen(A, (2, 2))
        if not np.all(np.isfinite(A)) or abs(np.linalg.det(A)) < 1e-300:
            raise InvalidSpecError("lattice matrix must be invertible")
        chars = self.chars if isinstance(self.chars, Characteristics) else Characteristics(*self.chars)
        if chars.dim != 2:
            raise InvalidSpecError("lattice sums need 2-dimensional characteristics")
        canon, phase = reduce_characteristics(chars)
        cov = ExactSym2.from_matrix(self.spike_cov)
        if not cov.is_psd():
            raise InvalidSpecError("spike covariance must be positive semidefinite")
        if self.envelope is not None and not isinstance(self.envelope, Gaussian2D):
            raise InvalidSpecError("envelope must be a Gaussian2D")
        object.__setattr__(self, "lattice", A)
        object.__setattr__(self, "chars", canon)
        object.__setattr__(self, "spike_cov", cov)
        object.__setattr__(self, "prefactor", complex(self.prefactor) * phase)
        object.__setattr__(self, "shift", _frozen(self.shift, (2,)))

    @property
    def is_comb(self) -> bool:
        return self.spike_cov.is_zero()

    @property
    def sigma(self) -> np.ndarray:
        return self.spike_cov.array()

    @property
    def sqrt_det(self) -> float:
        return math.sqrt(abs(np.linalg.det(self.lattice)))

    def replace(self, **changes) -> "LatticeSum":
        return replace(self, **changes)

    def scaled(self, factor) -> "LatticeSum":
        return replace(self, prefactor=self.prefactor * factor)

    def __call__(self, x, rel_tol: float = DEFAULT_REL_TOL):
        return theta_eval_lattice(self, x, rel_tol)


def _truncation_level(rel_tol: float) -> float:
    if not 0 < rel_tol < 1:
        raise InvalidSpecError("rel_tol must lie in (0, 1)")
    return math.log(1.0 / rel_tol) + _LOG_MARGIN


def _box_offsets(inv_quad: np.ndarray, level: float, pad: int) -> np.ndarray:
    """Integer offsets covering the ellipsoid ``d^T Q d / 2 <= level`` where ``inv_quad = Q^-1``.

    ``pad`` extra shells absorb the rounding of the ellipsoid center to an integer.
    """
    h = [int(math.ceil(math.sqrt(2 * level * max(inv_quad[i, i], 0.0)))) + pad for i in range(2)]
    g0, g1 = np.meshgrid(np.arange(-h[0], h[0] + 1), np.arange(-h[1], h[1] + 1), indexing="ij")
    return np.stack([g0.ravel(), g1.ravel()], axis=1).astype(float)


def _term_counts(ls: LatticeSum, level: float) -> tuple[int, int]:
    A = ls.lattice
    Sigma = ls.sigma
    Ainv = np.linalg.inv(A)
    M_real_inv = Ainv @ Sigma @ Ainv.T  # inverse of A^T Sigma^-1 A
    M_four_inv = np.linalg.inv(4 * math.pi**2 * M_real_inv)
    def count(inv):
        return int(np.prod([2 * math.ceil(math.sqrt(2 * level * inv[i, i])) + 3 for i in range(2)]))
    return count(M_real_inv), count(M_four_inv)


def choose_method(ls: LatticeSum, rel_tol: float = DEFAULT_REL_TOL) -> str:
    """``"real"`` (Gaussian pulse sum) or ``"fourier"`` (defining series), whichever is shorter."""
    nr, nf = _term_counts(ls, _truncation_level(rel_tol))
    return "real" if nr <= nf else "fourier"


def _theta_real(ls: LatticeSum, pts: np.ndarray, level: float) -> np.ndarray:
    A, Sigma = ls.lattice, ls.sigma
    Ainv = np.linalg.inv(A)
    Minv = Ainv @ Sigma @ Ainv.T
    M = np.linalg.inv(Minv)
    v1, v2 = ls.chars.v1_array(), ls.chars.v2_array()
    offs = _box_offsets(Minv, level, pad=1)
    norm = ls.sqrt_det / (2 * math.pi * math.sqrt(np.linalg.det(Sigma)))
    out = np.empty(len(pts), dtype=complex)
    step = max(1, _CHUNK_TERMS // len(offs))
    for s in range(0, len(pts), step):
        c = -(pts[s : s + step] @ Ainv.T + v2)
        n = np.rint(c)[:, None, :] + offs[None, :, :]
        d = n - c[:, None, :]
        quad = M[0, 0] * d[..., 0] ** 2 + 2 * M[0, 1] * d[..., 0] * d[..., 1] + M[1, 1] * d[..., 1] ** 2
        ph = np.exp(-2j * math.pi * (n @ v1))
        out[s : s + step] = (ph * np.exp(-0.5 * quad)).sum(axis=1)
    return norm * out


def _theta_fourier(ls: LatticeSum, pts: np.ndarray, level: float) -> np.ndarray:
    A, Sigma = ls.lattice, ls.sigma
    Ainv = np.linalg.inv(A)
    Mf = 4 * math.pi**2 * (Ainv @ Sigma @ Ainv.T)
    v1, v2 = ls.chars.v1_array(), ls.chars.v2_array()
    offs = _box_offsets(np.linalg.inv(Mf), level, pad=1)
    k = np.rint(-v1)[None, :] + offs
    kv = k + v1
    # keep only terms that matter
    damp = np.exp(-0.5 * np.einsum("ki,ij,kj->k", kv, Mf, kv))
    keep = damp >= math.exp(-level) * damp.max()
    kv, damp = kv[keep], damp[keep]
    out = np.empty(len(pts), dtype=complex)
    step = max(1, _CHUNK_TERMS // len(kv))
    for s in range(0, len(pts), step):
        y = pts[s : s + step] @ Ainv.T + v2
        out[s : s + step] = np.exp(2j * math.pi * (y @ kv.T)) @ damp
    return out / ls.sqrt_det


def theta_eval_lattice(ls: LatticeSum, x, rel_tol: float = DEFAULT_REL_TOL, method: str = "auto"):
    """Value of a lattice sum at points ``x`` of shape ``(..., 2)``.

    ``method`` selects the Gaussian pulse sum (``"real"``), the defining Fourier series
    (``"fourier"``) or whichever needs fewer terms (``"auto"``); all agree to ``rel_tol``.
    """
    if ls.is_comb:
        raise InvalidSpecError("a Dirac comb has no pointwise values; use sha_support")
    if not ls.spike_cov.is_pd():
        raise InvalidSpecError("pointwise evaluation needs a positive-definite spike covariance")
    level = _truncation_level(rel_tol)
    x_arr = np.asarray(x, dtype=float)
    if x_arr.shape[-1] != 2:
        raise InvalidSpecError("points must have a trailing dimension of size 2")
    pts = x_arr.reshape(-1, 2)
    shifted = pts - ls.shift
    if method == "auto":
        method = choose_method(ls, rel_tol)
    if method == "real":
        val = _theta_real(ls, shifted, level)
    elif method == "fourier":
        val = _theta_fourier(ls, shifted, level)
    else:
        raise InvalidSpecError(f"unknown method {method!r}")
    val = val * ls.prefactor
    if ls.envelope is not None:
        val = val * ls.envelope(pts)
    val = val.reshape(x_arr.shape[:-1])
    return val[()] if val.ndim == 0 else val


def theta_constant(ls: LatticeSum, rel_tol: float = DEFAULT_REL_TOL) -> complex:
    """Lattice theta function at the origin (envelope and prefactor excluded)."""
    bare = replace(ls, envelope=None, prefactor=1.0, shift=np.zeros(2))
    return complex(theta_eval_lattice(bare, np.zeros(2), rel_tol))


def sha_support(ls: LatticeSum, window: Sequence[float]):
    """Delta-spike locations and weights of a comb inside a closed window.

    Points are ``shift - A(n + v2)``; weights are
    ``sqrt|det A| exp(-2 pi i v1.n) * prefactor * envelope(point)``.
    Returns a list of ``(point, weight)`` sorted by ``(q, p)``.
    """
    pts, w = sha_support_arrays(ls, window)
    return [(pts[i], complex(w[i])) for i in range(len(w))]


def sha_support_arrays(ls: LatticeSum, window: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`sha_support`: points ``(K, 2)`` and complex weights ``(K,)``."""
    if not ls.is_comb:
        raise InvalidSpecError("sha_support needs a comb (zero spike covariance)")
    q0, q1, p0, p1 = map(float, window)
    A = ls.lattice
    Ainv = np.linalg.inv(A)
    v1, v2 = ls.chars.v1_array(), ls.chars.v2_array()
    corners = np.array([[q0, p0], [q0, p1], [q1, p0], [q1, p1]])
    u = (ls.shift - corners) @ Ainv.T - v2
    lo = np.floor(u.min(axis=0)) - 1
    hi = np.ceil(u.max(axis=0)) + 1
    g0, g1 = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    n = np.stack([g0.ravel(), g1.ravel()], axis=1)
    pts = ls.shift - (n + v2) @ A.T
    tol = 1e-12 * max(1.0, abs(q0), abs(q1), abs(p0), abs(p1))
    inside = (pts[:, 0] >= q0 - tol) & (pts[:, 0] <= q1 + tol) & (pts[:, 1] >= p0 - tol) & (pts[:, 1] <= p1 + tol)
    n, pts = n[inside], pts[inside]
    w = ls.sqrt_det * ls.prefactor * _lattice_phases(ls.chars, n)
    if ls.envelope is not None:
        w = w * ls.envelope(pts)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    return pts[order], w[order]


def _lattice_phases(chars: Characteristics, n: np.ndarray) -> np.ndarray:
    """``exp(-2 pi i v1.n)`` with exact values when ``v1`` has denominators dividing 4."""
    dens = [c.denominator for c in chars.v1]
    if all(4 % d == 0 for d in dens):
        quarter = np.array([int(c * 4) for c in chars.v1])
        k = np.mod(-(n.astype(np.int64) @ quarter), 4)
        return np.array([1, 1j, -1, -1j])[k]
    return np.exp(-2j * math.pi * (n @ chars.v1_array()))
