import math

import numpy as np
import pytest

from interp_lab.interp import closed_form_norm
from interp_lab.kernelop import (
    KernelOperator,
    apply_kernel,
    endpoint_opnorm_identities,
    kernel_opnorm,
    kernel_opnorm_quasi,
    regular_norm,
)
from interp_lab.lorentz import ScalarFunction, conjugate, mixed_weak_norm
from interp_lab.measure import (
    FiniteMeasureSpace,
    ProductSpace,
    counting_space,
    mask_indices,
)
from interp_lab.rectangle import KernelMatrix

INF = math.inf


def kernel(entries, weights=None):
    entries = np.asarray(entries, dtype=float)
    if weights is None:
        spaces = tuple(counting_space(n) for n in entries.shape)
    else:
        spaces = tuple(FiniteMeasureSpace(np.asarray(w, float)) for w in weights)
    return KernelMatrix(ProductSpace(spaces), entries)


def random_kernel(rng, max_side=5, signed=False):
    shape = tuple(int(rng.integers(1, max_side + 1)) for _ in range(2))
    entries = rng.uniform(0.0, 1.0, size=shape)
    if signed:
        entries *= rng.choice([-1.0, 1.0], size=shape)
    if rng.random() < 0.5:
        weights = tuple(np.ones(n) for n in shape)
    else:
        weights = tuple(rng.uniform(0.2, 2.0, n) for n in shape)
    return kernel(entries, weights)


def brute_double_rectangle(f, r, s):
    """Oracle: sup over rectangle pairs of the double integral divided by
    mu_1(E_1)^(1/s') mu_2(E_2)^(1/r)."""
    n1, n2 = f.product.shape
    w1, w2 = (sp.weights for sp in f.product.factors)
    inv_sc = 1.0 / conjugate(s)
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    best = 0.0
    for m1 in range(1, 1 << n1):
        rows = list(mask_indices(m1))
        mass1 = float(np.sum(w1[rows]))
        for m2 in range(1, 1 << n2):
            cols = list(mask_indices(m2))
            mass2 = float(np.sum(w2[cols]))
            num = float(
                np.sum(np.abs(f.entries[np.ix_(rows, cols)]) * np.outer(w1[rows], w2[cols]))
            )
            best = max(best, num / (mass1**inv_sc * mass2**inv_r))
    return best


class TestApplyKernel:
    def test_identity_kernel(self):
        f = kernel(np.eye(3))
        op = KernelOperator(f)
        g = ScalarFunction(f.product.factors[1], np.array([1.0, -2.0, 3.0]))
        out = apply_kernel(op, g)
        assert np.allclose(out.values, g.values)  # T uses |kernel|, so Tg = g

    def test_signed_kernel_uses_absolute_value(self):
        f = kernel(-np.eye(2))
        op = KernelOperator(f)
        g = ScalarFunction(f.product.factors[1], np.array([1.0, 2.0]))
        assert np.allclose(apply_kernel(op, g).values, [1.0, 2.0])

    def test_zero_argument(self):
        f = kernel(np.ones((2, 2)))
        op = KernelOperator(f)
        g = ScalarFunction(f.product.factors[1], np.zeros(2))
        assert np.allclose(apply_kernel(op, g).values, 0.0)

    def test_all_ones(self):
        f = kernel(np.ones((2, 2)))
        op = KernelOperator(f)
        g = ScalarFunction(f.product.factors[1], np.ones(2))
        assert np.allclose(apply_kernel(op, g).values, [2.0, 2.0])

    def test_dimension_mismatch(self):
        f = kernel(np.ones((2, 3)))
        op = KernelOperator(f)
        with pytest.raises(ValueError):
            apply_kernel(op, ScalarFunction(counting_space(2), np.ones(2)))


class TestKernelOpnorm:
    def test_identity_kernel(self):
        for n in (1, 2, 4):
            f = kernel(np.eye(n))
            assert kernel_opnorm(f, 2.0, 2.0) == pytest.approx(1.0)

    def test_equals_double_rectangle_form(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            f = random_kernel(rng, max_side=4)
            r = float(rng.choice([1.5, 2.0, 4.0, INF]))
            s = float(rng.choice([1.5, 2.0, 4.0]))
            got = kernel_opnorm(f, r, s)
            want = brute_double_rectangle(f, r, s)
            assert got == pytest.approx(want, rel=1e-10, abs=1e-12)

    def test_equals_closed_form_under_exponent_map(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            f = random_kernel(rng, max_side=4, signed=True)
            theta = float(rng.uniform(0.15, 0.85))
            p1 = float(rng.choice([1.5, 2.0, 4.0]))
            p2 = float(rng.choice([1.5, 2.0, 4.0]))
            r = conjugate(p2) / theta  # 1/r = theta/p2'
            s_conj = conjugate(p1) / (1.0 - theta)  # 1/s' = (1-theta)/p1'
            s = s_conj / (s_conj - 1.0)
            got = kernel_opnorm(f, r, s)
            want = closed_form_norm(f, 1.0, theta, p1, p2)
            assert got == pytest.approx(want, abs=1e-9, rel=1e-9)

    def test_quasinorm_flavor_within_conjugate_factor(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            f = random_kernel(rng, max_side=4)
            r = float(rng.choice([2.0, 4.0]))
            s = float(rng.choice([1.5, 2.0, 4.0]))
            quasi = kernel_opnorm_quasi(f, r, s)
            bracket = kernel_opnorm(f, r, s)
            assert quasi <= bracket + 1e-12
            assert bracket <= conjugate(s) * quasi + 1e-9

    def test_monotone_in_kernel(self):
        rng = np.random.default_rng(9)
        small = rng.uniform(0.0, 1.0, size=(3, 3))
        big = small + rng.uniform(0.0, 1.0, size=(3, 3))
        assert kernel_opnorm(kernel(small), 2.0, 2.0) <= kernel_opnorm(
            kernel(big), 2.0, 2.0
        ) + 1e-12


class TestRegularNorm:
    def test_sign_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            f = random_kernel(rng, signed=True)
            absf = KernelMatrix(f.product, np.abs(f.entries))
            a = regular_norm(f, 2.0, 4.0)
            b = regular_norm(absf, 2.0, 4.0)
            c = kernel_opnorm(absf, 2.0, 4.0)
            assert a == b == c


class TestEndpointIdentities:
    def test_identity_kernel_p2(self):
        f = kernel(np.eye(2))
        report = endpoint_opnorm_identities(f, 2.0, 2.0)
        assert report.passed
        assert report.linf_source_opnorm == pytest.approx(math.sqrt(2.0))
        assert report.mixed_axis0 == pytest.approx(math.sqrt(2.0))

    def test_zero_kernel(self):
        f = kernel(np.zeros((2, 3)))
        report = endpoint_opnorm_identities(f, 2.0, 4.0)
        assert report.passed
        assert report.max_discrepancy == 0.0

    def test_random_ensemble(self):
        rng = np.random.default_rng(13)
        worst = 0.0
        for _ in range(500):
            f = random_kernel(rng, max_side=4, signed=True)
            p1 = float(rng.choice([1.5, 2.0, 4.0, INF]))
            p2 = float(rng.choice([1.5, 2.0, 4.0, INF]))
            report = endpoint_opnorm_identities(f, p1, p2)
            assert report.passed
            worst = max(worst, report.max_discrepancy)
        assert worst <= 1e-9

    def test_literal_variant_fails_for_distinct_exponents(self):
        f = kernel(np.ones((2, 2)))
        report = endpoint_opnorm_identities(f, 2.0, 4.0)
        assert report.passed
        assert report.literal_discrepancy > 0.1
        # frozen witness values: sup_k 2k / k^(1/p') over k in {1, 2}
        assert report.literal_lorentz_source_opnorm == pytest.approx(
            4.0 / math.sqrt(2.0)
        )
        assert report.lorentz_source_opnorm == pytest.approx(4.0 / 2.0**0.75)

    def test_endpoint_limits_recover_the_identities(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            f = random_kernel(rng, max_side=4)
            p1 = float(rng.choice([1.5, 2.0, 4.0]))
            p2 = float(rng.choice([1.5, 2.0, 4.0]))
            # theta -> 0: r = inf, 1/s' = 1/p1', i.e. s = p1
            a = kernel_opnorm(f, INF, p1)
            assert a == pytest.approx(mixed_weak_norm(f, 0, p1), abs=1e-10)
            # theta -> 1: r = p2', s = 1 (plain integral target)
            b = kernel_opnorm(f, conjugate(p2), 1.0)
            assert b == pytest.approx(mixed_weak_norm(f, 1, p2), abs=1e-10)
