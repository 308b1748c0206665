"""Gaussian calculus on phase space.

Blurring and deblurring of lattice sums, symplectic (Gaussian-unitary) maps, and a
uniformly sampled grid type plus its quadrature rules.

Phase-space vectors are ordered ``(q_1, ..., q_N, p_1, ..., p_N)`` and the symplectic
form is ``Omega = [[0, I], [-I, 0]]``. A Gaussian unitary with symplectic matrix ``S``
and displacement ``c`` acts on Wigner functions as ``W -> W(S^{-1}(x - c))``.

Trace convention: ``Tr[A B] = 2 pi * integral W_A W_B`` for Wigner functions normalized
so that a state integrates to one (vacuum ``W = exp(-q^2 - p^2) / pi``).
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import HermiticityError, InvalidSpecError, SiegelHalfSpaceError
from .gaussian import Gaussian2D
from .theta_core import (
    DEFAULT_REL_TOL,
    Characteristics,
    ExactSym2,
    LatticeSum,
    theta_eval_lattice,
)

__all__ = [
    "Gaussian2D",
    "SymplecticMap",
    "Gate",
    "Field2D",
    "TRACE_CONVENTION",
    "symplectic_form",
    "symplectic_for_gate",
    "blur",
    "deblur",
    "apply_symplectic",
    "evaluate",
    "sample_field",
    "integrate",
    "inner_product",
    "trace_product",
    "translate",
    "grid_window",
]

TRACE_CONVENTION = 2 * math.pi
HERMITICITY_TOL = 1e-10
_EVAL_CHUNK = 1 << 17


def symplectic_form(n_modes: int = 1) -> np.ndarray:
    I = np.eye(n_modes)
    Z = np.zeros((n_modes, n_modes))
    return np.block([[Z, I], [-I, Z]])


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """Affine symplectic map ``x -> S x + c``."""

    S: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise InvalidSpecError("symplectic matrix must be 2N x 2N")
        n = S.shape[0] // 2
        c = np.zeros(2 * n) if self.c is None else np.array(self.c, dtype=float).reshape(2 * n)
        Om = symplectic_form(n)
        if np.abs(S.T @ Om @ S - Om).max() > 1e-12 * max(1.0, np.abs(S).max() ** 2):
            raise InvalidSpecError("matrix is not symplectic")
        S.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "c", c)

    @property
    def n_modes(self) -> int:
        return self.S.shape[0] // 2

    def __matmul__(self, other: "SymplecticMap") -> "SymplecticMap":
        """Composition: ``(self @ other)(x) = self(other(x))``."""
        return SymplecticMap(self.S @ other.S, self.S @ other.c + self.c)

    def inverse(self) -> "SymplecticMap":
        Si = np.linalg.inv(self.S)
        return SymplecticMap(Si, -Si @ self.c)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.S.T + self.c

    @classmethod
    def displacement(cls, c) -> "SymplecticMap":
        c = np.asarray(c, dtype=float)
        return cls(np.eye(len(c)), c)


class Gate(enum.Enum):
    FOURIER = "fourier"
    SHEAR = "shear"
    ROTATION = "rotation"
    BEAMSPLITTER = "beamsplitter"
    CX = "cx"
    CZ = "cz"


def symplectic_for_gate(gate, *, phi: float | None = None, modes: tuple[int, int] = (0, 1), n_modes: int | None = None) -> SymplecticMap:
    """Symplectic matrix of a named Gaussian gate.

    Single-mode gates: Fourier ``[[0,-1],[1,0]]``, shear ``[[1,0],[1,1]]`` (``exp(i q^2/2)``),
    rotation ``R_phi``. Two-mode gates act on ``modes = (j, k)`` of an ``n_modes``-mode
    system: the 50:50 beamsplitter ``x_j -> (x_j - x_k)/sqrt2, x_k -> (x_j + x_k)/sqrt2``,
    ``CX = exp(-i q_j p_k)`` (``q_k += q_j, p_j -= p_k``) and ``CZ = exp(i q_j q_k)``
    (``p_j += q_k, p_k += q_j``).
    """
    gate = Gate(gate) if not isinstance(gate, Gate) else gate
    if gate in (Gate.FOURIER, Gate.SHEAR, Gate.ROTATION):
        if gate is Gate.FOURIER:
            S = np.array([[0.0, -1.0], [1.0, 0.0]])
        elif gate is Gate.SHEAR:
            S = np.array([[1.0, 0.0], [1.0, 1.0]])
        else:
            if phi is None:
                raise InvalidSpecError("rotation needs an angle phi")
            c, s = math.cos(phi), math.sin(phi)
            S = np.array([[c, -s], [s, c]])
        return SymplecticMap(S)

    n = 2 if n_modes is None else int(n_modes)
    j, k = modes
    if not (0 <= j < n and 0 <= k < n and j != k):
        raise InvalidSpecError(f"invalid mode pair {modes} for {n} modes")
    S = np.eye(2 * n)
    qj, qk, pj, pk = j, k, n + j, n + k
    if gate is Gate.BEAMSPLITTER:
        r = 1 / math.sqrt(2)
        for a, b in ((qj, qk), (pj, pk)):
            S[a, a], S[a, b], S[b, a], S[b, b] = r, -r, r, r
    elif gate is Gate.CX:
        S[qk, qj] = 1.0
        S[pj, pk] = -1.0
    elif gate is Gate.CZ:
        S[pj, qk] = 1.0
        S[pk, qj] = 1.0
    return SymplecticMap(S)


# ---------------------------------------------------------------------------
# blur / deblur


def blur(ls: LatticeSum, Sigma, low_noise: bool = False) -> LatticeSum:
    """Convolve with a normalized Gaussian of covariance ``Sigma``: spike covariances add.

    With an envelope present the convolution is only approximately a lattice sum;
    pass ``low_noise=True`` to accept the approximation where the envelope is kept and
    only the spikes broaden.
    """
    S = ExactSym2.from_matrix(Sigma)
    if not S.is_psd():
        raise InvalidSpecError("blur covariance must be positive semidefinite")
    if ls.envelope is not None and not low_noise and not S.is_zero():
        raise InvalidSpecError("blurring an enveloped lattice sum needs low_noise=True")
    return replace(ls, spike_cov=ls.spike_cov + S)


def deblur(ls: LatticeSum, Sigma) -> LatticeSum:
    """Inverse of :func:`blur`: spike covariances subtract.

    Raises :class:`SiegelHalfSpaceError` when the result would not be positive semidefinite.
    """
    S = ExactSym2.from_matrix(Sigma)
    new = ls.spike_cov - S
    if not new.is_psd():
        raise SiegelHalfSpaceError(
            "deblurring leaves a spike covariance with a negative eigenvalue "
            "(the theta function would leave the Siegel upper half-space)"
        )
    return replace(ls, spike_cov=new)


# ---------------------------------------------------------------------------
# symplectic action


def _integer_matrix(M: np.ndarray, tol: float = 1e-9) -> np.ndarray | None:
    R = np.rint(M)
    if np.abs(M - R).max() <= tol * max(1.0, np.abs(M).max()):
        return R.astype(int)
    return None


def _rational_vector(u: np.ndarray, tol: float = 1e-9, max_den: int = 4096):
    out = []
    for x in u:
        fr = Fraction(float(x)).limit_denominator(max_den)
        if abs(float(fr) - x) > tol * max(1.0, abs(x)):
            return None
        out.append(fr)
    return tuple(out)


def _transform_gaussian(g: Gaussian2D, S: np.ndarray, c: np.ndarray) -> Gaussian2D:
    return Gaussian2D(S @ g.mean + c, S @ g.cov @ S.T)


def apply_symplectic(obj, smap: SymplecticMap):
    """Push a phase-space object forward under ``x -> S x + c``.

    For a lattice sum the result has lattice ``S A``. When ``S`` maps the lattice onto
    itself (``S_bar = A^{-1} S A`` is an integer matrix) the lattice is kept and the
    characteristics are transformed instead::

        v1' = S_bar^{-T} v1,   v2' = S_bar v2 - A^{-1} c,

    re-canonicalized with the accrued phase folded into the prefactor. Translations
    that are not rational in lattice units are carried in ``shift``.
    """
    if hasattr(obj, "apply_symplectic"):
        return obj.apply_symplectic(smap)
    if smap.n_modes != 1:
        raise InvalidSpecError("single-mode objects need a 2x2 symplectic map")
    S, c = smap.S, smap.c
    if isinstance(obj, Gaussian2D):
        return _transform_gaussian(obj, S, c)
    if not isinstance(obj, LatticeSum):
        raise InvalidSpecError(f"cannot transform {type(obj).__name__}")

    A = obj.lattice
    Ainv = np.linalg.inv(A)
    Sbar = _integer_matrix(Ainv @ S @ A)
    total_shift = S @ obj.shift + c
    cov = obj.spike_cov if obj.spike_cov.is_zero() else ExactSym2.from_matrix(S @ obj.sigma @ S.T)
    env = None if obj.envelope is None else _transform_gaussian(obj.envelope, S, c)

    if Sbar is not None:
        Sbar_invT = _integer_matrix(np.linalg.inv(Sbar).T)
        v1 = tuple(sum((int(Sbar_invT[i, j]) * obj.chars.v1[j] for j in range(2)), Fraction(0)) for i in range(2))
        v2 = tuple(sum((int(Sbar[i, j]) * obj.chars.v2[j] for j in range(2)), Fraction(0)) for i in range(2))
        lattice = A
    else:
        v1, v2 = obj.chars.v1, obj.chars.v2
        lattice = S @ A
    u = np.linalg.inv(lattice) @ total_shift
    ru = _rational_vector(u)
    if ru is not None:
        v2 = tuple(a - b for a, b in zip(v2, ru))
        total_shift = np.zeros(2)
    return LatticeSum(
        lattice,
        Characteristics(v1, v2),
        cov,
        env,
        obj.prefactor,
        total_shift,
    )


# ---------------------------------------------------------------------------
# evaluation and grids


def _terms(obj) -> list[tuple[complex, object]]:
    """Flatten an object into ``(weight, LatticeSum | Gaussian2D | callable)`` pairs."""
    if isinstance(obj, (LatticeSum, Gaussian2D)):
        return [(1.0, obj)]
    if hasattr(obj, "weighted_terms"):
        return list(obj.weighted_terms())
    if callable(obj):
        return [(1.0, obj)]
    if isinstance(obj, Iterable):
        out = []
        for item in obj:
            if isinstance(item, tuple) and len(item) == 2 and np.isscalar(item[0]):
                w, o = item
                out.extend((w * w2, o2) for w2, o2 in _terms(o))
            else:
                out.extend(_terms(item))
        return out
    raise InvalidSpecError(f"cannot evaluate {type(obj).__name__}")


def _amplitude_bound(term: LatticeSum) -> float:
    """Rough upper bound on ``|term|`` over the whole plane (spike peak times overlap count)."""
    cov = term.sigma
    det_a = abs(np.linalg.det(term.lattice))
    det_s = np.sqrt(max(np.linalg.det(cov), 0.0))
    spike_peak = 1.0 / (2 * np.pi * det_s)
    overlap = 1.0 + 8 * np.pi * det_s / det_a
    env = 1.0 if term.envelope is None else term.envelope.peak
    return float(abs(term.prefactor) * np.sqrt(det_a) * spike_peak * overlap * env)


def _evaluate(obj, x, rel_tol: float):
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, 2)
    total = np.zeros(len(pts), dtype=complex)
    magnitude = np.zeros(len(pts))
    for w, term in _terms(obj):
        if w == 0:
            continue
        if isinstance(term, LatticeSum):
            if term.is_comb:
                raise InvalidSpecError("delta combs cannot be sampled; blur them or use sha_support")
            vals = w * theta_eval_lattice(term, pts, rel_tol)
            magnitude = np.maximum(magnitude, abs(w) * _amplitude_bound(term))
        else:
            vals = w * np.asarray(term(pts), dtype=complex)
        total += vals
        magnitude += np.abs(vals)
    shape = x.shape[:-1]
    return total.reshape(shape), magnitude.reshape(shape)


def evaluate(obj, x, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Complex value of a phase-space object at points ``x`` of shape ``(..., 2)``."""
    return _evaluate(obj, x, rel_tol)[0]


def _real_part(vals: np.ndarray, magnitude: np.ndarray | None = None) -> np.ndarray:
    # the residue is judged against the size of the individual terms, so that
    # cancellation between terms does not register as a Hermiticity failure
    ref = np.abs(vals) if magnitude is None else magnitude
    scale = ref.max() if vals.size else 0.0
    if scale > 0 and np.abs(vals.imag).max() > HERMITICITY_TOL * scale:
        raise HermiticityError(
            f"imaginary residue {np.abs(vals.imag).max():.3g} exceeds {HERMITICITY_TOL:g} of the peak {scale:.3g}"
        )
    return np.ascontiguousarray(vals.real).reshape(vals.shape)


def evaluate_real(obj, x, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Real part of :func:`evaluate` after checking the imaginary residue is negligible."""
    return _real_part(*_evaluate(obj, x, rel_tol))


@dataclass(frozen=True, eq=False)
class Field2D:
    """Real function sampled on a uniform grid.

    Node ``(i, j)`` sits at ``(q_min + i dq, p_min + j dp)`` with ``dq = (q_max - q_min)/n_q``
    and ``dp = (p_max - p_min)/n_p``; the window is half open, so quadrature is a plain
    Riemann sum with cell area ``dq * dp``.
    """

    window: tuple[float, float, float, float]
    values: np.ndarray

    def __post_init__(self):
        w = tuple(float(v) for v in self.window)
        if len(w) != 4 or not (w[1] > w[0] and w[3] > w[2]):
            raise InvalidSpecError(f"invalid window {self.window}")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2:
            raise InvalidSpecError("field values must be a 2-D array")
        vals.setflags(write=False)
        object.__setattr__(self, "window", w)
        object.__setattr__(self, "values", vals)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def dq(self) -> float:
        return (self.window[1] - self.window[0]) / self.values.shape[0]

    @property
    def dp(self) -> float:
        return (self.window[3] - self.window[2]) / self.values.shape[1]

    @property
    def cell_area(self) -> float:
        return self.dq * self.dp

    @property
    def q_axis(self) -> np.ndarray:
        return self.window[0] + self.dq * np.arange(self.values.shape[0])

    @property
    def p_axis(self) -> np.ndarray:
        return self.window[2] + self.dp * np.arange(self.values.shape[1])

    def points(self) -> np.ndarray:
        Q, P = np.meshgrid(self.q_axis, self.p_axis, indexing="ij")
        return np.stack([Q, P], axis=-1)

    def with_values(self, values) -> "Field2D":
        return Field2D(self.window, values)

    def same_grid(self, other: "Field2D", tol: float = 1e-9) -> bool:
        if self.values.shape != other.values.shape:
            return False
        scale = max(1.0, *map(abs, self.window))
        return all(abs(a - b) <= tol * scale for a, b in zip(self.window, other.window))

    def node_index(self, points, tol: float = 1e-6):
        """Grid indices of ``points`` that coincide with nodes, else ``None``.

        Returns ``(i, j, inside)`` integer arrays when every point is within ``tol`` cells
        of a node; ``inside`` flags points whose node lies in the grid.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        fi = (pts[:, 0] - self.window[0]) / self.dq
        fj = (pts[:, 1] - self.window[2]) / self.dp
        i, j = np.rint(fi), np.rint(fj)
        if np.abs(fi - i).max(initial=0) > tol or np.abs(fj - j).max(initial=0) > tol:
            return None
        i, j = i.astype(int), j.astype(int)
        inside = (i >= 0) & (i < self.values.shape[0]) & (j >= 0) & (j < self.values.shape[1])
        return i, j, inside


def grid_window(half_width: float, center=(0.0, 0.0)) -> tuple[float, float, float, float]:
    """Square window ``center +- half_width``."""
    h = float(half_width)
    return (center[0] - h, center[0] + h, center[1] - h, center[1] + h)


def sample_field(obj, window, resolution, rel_tol: float = DEFAULT_REL_TOL) -> Field2D:
    """Sample the real part of a phase-space object on a grid.

    ``resolution`` is ``n`` or ``(n_q, n_p)``. Imaginary residues above 1e-10 of the
    peak magnitude raise :class:`HermiticityError`.
    """
    if np.isscalar(resolution):
        resolution = (int(resolution), int(resolution))
    nq, n_p = map(int, resolution)
    if nq <= 0 or n_p <= 0:
        raise InvalidSpecError("resolution must be positive")
    shell = Field2D(window, np.zeros((nq, n_p)))
    q, p = shell.q_axis, shell.p_axis
    vals = np.empty((nq, n_p), dtype=complex)
    mags = np.empty((nq, n_p))
    rows = max(1, _EVAL_CHUNK // n_p)
    for s in range(0, nq, rows):
        Q, P = np.meshgrid(q[s : s + rows], p, indexing="ij")
        vals[s : s + rows], mags[s : s + rows] = _evaluate(obj, np.stack([Q, P], axis=-1), rel_tol)
    return Field2D(shell.window, _real_part(vals, mags))


def integrate(f: Field2D) -> float:
    return float(f.values.sum() * f.cell_area)


def inner_product(f: Field2D, g: Field2D) -> float:
    """Riemann sum of ``f * g``; ``TRACE_CONVENTION * inner_product`` approximates ``Tr[F G]``."""
    if not f.same_grid(g):
        raise InvalidSpecError("inner product needs fields on the same grid")
    return float(np.sum(f.values * g.values) * f.cell_area)


def trace_product(f: Field2D, g: Field2D) -> float:
    """``Tr[F G] = 2 pi * integral W_F W_G``."""
    return TRACE_CONVENTION * inner_product(f, g)


def translate(f: Field2D, a) -> Field2D:
    """Argument translation ``W'(x) = W(x + a)``; exact, implemented by relabelling the window."""
    a = np.asarray(a, dtype=float).reshape(2)
    q0, q1, p0, p1 = f.window
    return Field2D((q0 - a[0], q1 - a[0], p0 - a[1], p1 - a[1]), f.values)


def fft_workers() -> int | None:
    """Worker count for scipy.fft, read from ``GKPTHETA_THREADS`` if set."""
    env = os.environ.get("GKPTHETA_THREADS")
    if not env:
        return None
    try:
        return max(1, int(env))
    except ValueError:
        raise InvalidSpecError("GKPTHETA_THREADS must be an integer") from None
