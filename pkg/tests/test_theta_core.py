import cmath
import math
import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gkptheta.errors import InvalidSpecError
from gkptheta.gaussian import Gaussian2D
from gkptheta.theta_core import (
    SQRT_PI,
    Characteristics,
    ExactSym2,
    LatticeSum,
    NegativePeriodWarning,
    Theta1DSpec,
    as_fraction,
    choose_method,
    fourier_dual_period,
    pulse_train_1d,
    reduce_characteristics,
    sha_support,
    sha_support_1d,
    split_half_period,
    theta_constant,
    theta_eval_1d,
    theta_eval_lattice,
)

HALF = Fraction(1, 2)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


class TestCharacteristics:
    def test_fraction_conversion(self):
        assert as_fraction(0.5) == HALF
        assert as_fraction("1/3") == Fraction(1, 3)
        with pytest.raises(InvalidSpecError):
            as_fraction(math.sqrt(2))

    def test_reduce_phase(self):
        chars, phase = reduce_characteristics(Characteristics((HALF,), (Fraction(3, 2),)))
        assert chars == Characteristics((HALF,), (HALF,))
        assert phase == -1

    @given(
        st.fractions(min_value=-3, max_value=3, max_denominator=8),
        st.fractions(min_value=-3, max_value=3, max_denominator=8),
    )
    def test_reduction_lands_in_unit_cell(self, a, b):
        chars, phase = reduce_characteristics(Characteristics((a,), (b,)))
        assert chars.is_canonical
        assert abs(abs(phase) - 1) < 1e-15


class TestOneDimensional:
    def test_mpmath_jtheta3_oracle(self):
        # theta_1[0;0](z, tau) = theta_3(pi z, q) with nome q = exp(i pi tau)
        tau = 0.37 + 0.81j
        for z in (0.0, 0.13, -0.41 + 0.07j):
            ours = theta_eval_1d(Theta1DSpec(1.0, 0, 0, tau), z)
            ref = complex(mpmath.jtheta(3, mpmath.pi * z, mpmath.exp(1j * mpmath.pi * tau)))
            assert abs(ours - ref) < 1e-13 * abs(ref)

    def test_mpmath_characteristics_oracle(self):
        # theta[1/2; 1/2](z) = -theta_1(pi z, q) and theta[1/2; 0] = theta_2
        tau = 0.2 + 1.1j
        q = mpmath.exp(1j * mpmath.pi * tau)
        for z in (0.11, 0.3 - 0.05j):
            ours = theta_eval_1d(Theta1DSpec(1.0, HALF, HALF, tau), z)
            ref = -complex(mpmath.jtheta(1, mpmath.pi * z, q))
            assert abs(ours - ref) < 1e-12 * max(abs(ref), 1)
            ours2 = theta_eval_1d(Theta1DSpec(1.0, HALF, 0, tau), z)
            ref2 = complex(mpmath.jtheta(2, mpmath.pi * z, q))
            assert abs(ours2 - ref2) < 1e-12 * abs(ref2)

    def test_period_scaling(self):
        tau, T, z = 0.1 + 0.9j, 2.3, 0.7
        lhs = theta_eval_1d(Theta1DSpec(T, 0, HALF, tau), z)
        rhs = theta_eval_1d(Theta1DSpec(1.0, 0, HALF, tau / T**2), z / T) / math.sqrt(T)
        assert abs(lhs - rhs) < 1e-13 * abs(rhs)

    @pytest.mark.parametrize("T", [0.5, SQRT_PI, 2 * SQRT_PI])
    @pytest.mark.parametrize("sigma2", [0.01, 0.1, 1.0])
    def test_pulse_train_equivalence(self, T, sigma2):
        spec = Theta1DSpec.pulse_train(T, sigma2, HALF, Fraction(1, 3))
        x = np.linspace(-3 * T, 3 * T, 41)
        ours = theta_eval_1d(spec, x) / math.sqrt(T)
        direct = pulse_train_1d(spec, x)
        # the alternating pulse sum can cancel; judge it against the sum of pulse magnitudes
        scale = pulse_train_1d(Theta1DSpec.pulse_train(T, sigma2, 0, Fraction(1, 3)), x).real
        assert (np.abs(ours - direct) / scale).max() < 1e-10

    def test_far_from_narrow_pulses_keeps_relative_accuracy(self):
        spec = Theta1DSpec.pulse_train(SQRT_PI, 0.01, 0, 0)
        x = 0.5 * SQRT_PI
        ours = theta_eval_1d(spec, x) / math.sqrt(SQRT_PI)
        # the two pulses at 0 and sqrt(pi) dominate
        g = math.exp(-0.5 * (0.5 * SQRT_PI) ** 2 / 0.01) / math.sqrt(2 * math.pi * 0.01)
        assert abs(ours - 2 * g) < 1e-10 * 2 * g

    @pytest.mark.parametrize("tau", [0.37 + 0.81j, -0.4 + 0.3j, 0.1 + 0.05j, 2 + 3j])
    def test_series_and_dual_agree(self, tau, rng):
        z = rng.normal(size=6) + 0.3j * rng.normal(size=6)
        spec = Theta1DSpec(1.3, Fraction(1, 3), Fraction(-1, 4), tau)
        a = theta_eval_1d(spec, z, method="series")
        b = theta_eval_1d(spec, z, method="dual")
        assert rel_err(a, b).max() < 1e-11

    def test_negative_period(self):
        spec = Theta1DSpec(-1.7, Fraction(1, 3), Fraction(1, 4), 0.2 + 0.7j)
        with pytest.warns(NegativePeriodWarning):
            v = theta_eval_1d(spec, 0.3)
        ref = theta_eval_1d(Theta1DSpec(1.7, Fraction(-1, 3), Fraction(-1, 4), 0.2 + 0.7j), 0.3)
        assert abs(v - ref) < 1e-14 * abs(ref)

    def test_invalid_inputs(self):
        with pytest.raises(InvalidSpecError):
            Theta1DSpec(1.0, 0, 0, 0.3 - 0.1j)
        with pytest.raises(InvalidSpecError):
            Theta1DSpec(0.0)
        with pytest.raises(InvalidSpecError):
            theta_eval_1d(Theta1DSpec(1.0), 0.0)

    def test_sha_support_1d(self):
        pts = sha_support_1d(Theta1DSpec(SQRT_PI, HALF, 0), (-2 * SQRT_PI, 2 * SQRT_PI))
        assert [round(x / SQRT_PI) for x, _ in pts] == [-2, -1, 0, 1, 2]
        assert [round((w / math.sqrt(SQRT_PI)).real) for _, w in pts] == [1, -1, 1, -1, 1]

    def test_fourier_dual(self):
        assert fourier_dual_period(2 * SQRT_PI) == pytest.approx(SQRT_PI)

    @pytest.mark.parametrize("prefer", ["double", "half"])
    def test_split_half_period_trivial_chars(self, prefer):
        spec = Theta1DSpec(1.3, 0, 0, 0.5j)
        split = split_half_period(spec, prefer)
        z = np.linspace(-1, 1, 7)
        direct = theta_eval_1d(spec, z)
        via = (theta_eval_1d(split.first, z) + split.sign * theta_eval_1d(split.second, z)) / math.sqrt(2)
        assert rel_err(via, direct).max() < 1e-12

    def test_split_rejects_general_chars(self):
        with pytest.raises(InvalidSpecError):
            split_half_period(Theta1DSpec(1.0, HALF, HALF, 1j))


class TestExactCovariance:
    @given(st.floats(1e-6, 10), st.floats(-1, 1), st.floats(1e-6, 10))
    def test_exact_roundtrip(self, a, r, c):
        b = r * math.sqrt(a * c) * 0.999
        X = ExactSym2.from_matrix([[a, b], [b, c]])
        S = ExactSym2.from_matrix([[0.1, 0.02], [0.02, 0.3]])
        assert (X + S) - S == X

    def test_psd_checks(self):
        assert ExactSym2.from_matrix([[1, 1], [1, 1]]).is_psd()
        assert not ExactSym2.from_matrix([[1, 1], [1, 1]]).is_pd()
        assert not ExactSym2.from_matrix([[1, 2], [2, 1]]).is_psd()


class TestLattice:
    def test_real_and_fourier_agree(self, rng):
        A = SQRT_PI * np.array([[1.0, 0.3], [0.0, 1.0]])
        for chars in [Characteristics.zero(), Characteristics((HALF, 0), (0, HALF)), Characteristics((HALF, -HALF), (HALF, HALF))]:
            for cov in ([[0.05, 0.01], [0.01, 0.08]], [[0.6, 0.0], [0.0, 0.4]]):
                ls = LatticeSum(A, chars, cov)
                x = rng.uniform(-3, 3, size=(50, 2))
                a = theta_eval_lattice(ls, x, method="real")
                b = theta_eval_lattice(ls, x, method="fourier")
                scale = np.abs(a).max()
                assert np.abs(a - b).max() < 1e-11 * scale

    def test_separable_lattice_factorizes(self, rng):
        T1, T2, s1, s2 = 1.1, 0.8, 0.07, 0.2
        ls = LatticeSum(np.diag([T1, T2]), Characteristics((HALF, 0), (0, Fraction(1, 3))), np.diag([s1, s2]))
        x = rng.uniform(-2, 2, size=(30, 2))
        a = theta_eval_lattice(ls, x)
        f1 = theta_eval_1d(Theta1DSpec.pulse_train(T1, s1, HALF, 0), x[:, 0])
        f2 = theta_eval_1d(Theta1DSpec.pulse_train(T2, s2, 0, Fraction(1, 3)), x[:, 1])
        assert np.abs(a - f1 * f2).max() < 1e-12 * np.abs(a).max()

    def test_gaussian_sum_oracle(self, rng):
        # brute force: sqrt(det A) sum_n exp(-2 pi i v1.n) G(x + A(n + v2))
        A = np.array([[1.2, 0.4], [-0.3, 0.9]])
        v1, v2 = np.array([0.5, 0.25]), np.array([0.0, 0.5])
        cov = np.array([[0.09, 0.02], [0.02, 0.05]])
        ls = LatticeSum(A, Characteristics((HALF, Fraction(1, 4)), (0, HALF)), cov)
        g = Gaussian2D.centered(cov)
        n = np.array([(i, j) for i in range(-12, 13) for j in range(-12, 13)])
        for x in rng.uniform(-2, 2, size=(10, 2)):
            d = x + (n + v2) @ A.T
            ref = math.sqrt(abs(np.linalg.det(A))) * np.sum(np.exp(-2j * np.pi * n @ v1) * g(d))
            assert abs(ls(x) - ref) < 1e-12 * max(abs(ref), 1e-3)

    def test_method_choice(self):
        assert choose_method(LatticeSum(SQRT_PI, spike_cov=0.005 * np.eye(2))) == "real"
        assert choose_method(LatticeSum(SQRT_PI, spike_cov=5.0 * np.eye(2))) == "fourier"

    def test_envelope_and_prefactor(self):
        env = Gaussian2D.centered(np.eye(2))
        ls = LatticeSum(SQRT_PI, spike_cov=0.1 * np.eye(2), envelope=env, prefactor=2.0)
        x = np.array([0.3, -0.2])
        bare = LatticeSum(SQRT_PI, spike_cov=0.1 * np.eye(2))
        assert ls(x) == pytest.approx(2.0 * env(x) * bare(x), rel=1e-14)

    def test_theta_constant_gkp(self):
        # theta of the GKP lattice with broad covariance tends to 1/sqrt(pi)
        val = theta_constant(LatticeSum(SQRT_PI, spike_cov=50 * np.eye(2)))
        assert abs(val - 1 / SQRT_PI) < 1e-12

    def test_sha_support(self):
        ls = LatticeSum(SQRT_PI, Characteristics((HALF, 0), (0, HALF)))
        pts = sha_support(ls, (-SQRT_PI, SQRT_PI, -SQRT_PI, SQRT_PI))
        assert len(pts) == 6
        for p, w in pts:
            assert abs(round(p[1] / SQRT_PI - 0.5) - (p[1] / SQRT_PI - 0.5)) < 1e-12
            assert abs(abs(w) - SQRT_PI) < 1e-12

    def test_comb_has_no_values(self):
        with pytest.raises(InvalidSpecError):
            theta_eval_lattice(LatticeSum(SQRT_PI), np.zeros(2))

    def test_characteristic_canonicalization(self):
        a = LatticeSum(SQRT_PI, Characteristics((HALF, 0), (1, HALF)), 0.1 * np.eye(2))
        b = LatticeSum(SQRT_PI, Characteristics((HALF, 0), (0, HALF)), 0.1 * np.eye(2))
        assert a.chars == b.chars
        x = np.array([0.4, 0.1])
        assert a(x) == pytest.approx(cmath.exp(2j * math.pi * 0.5) * b(x), rel=1e-14)
