import math
from itertools import combinations

import numpy as np
import pytest

from interp_lab.lorentz import (
    ScalarFunction,
    bracket_norm,
    bracket_norm_threshold_scan,
    conjugate,
    indicator,
    level_set_decomposition,
    lorentz_p1_norm,
    weak_quasinorm,
)
from interp_lab.measure import (
    FiniteMeasureSpace,
    counting_space,
    mask_from_indices,
    subset_measure,
)

INF = math.inf


def brute_bracket(values, weights, p):
    """Independent oracle: explicit loop over all nonempty subsets."""
    n = len(values)
    pc = conjugate(p)
    best = 0.0
    for k in range(1, n + 1):
        for subset in combinations(range(n), k):
            num = sum(abs(values[i]) * weights[i] for i in subset)
            mass = sum(weights[i] for i in subset)
            best = max(best, num / mass ** (1.0 / pc))
    return best


def brute_weak(values, weights, p):
    """Independent oracle: scan thresholds just below each value of |f|."""
    best = 0.0
    for v in sorted({abs(x) for x in values if x != 0.0}):
        c = v * (1.0 - 1e-12)
        tail = sum(w for x, w in zip(values, weights) if abs(x) > c)
        best = max(best, c if math.isinf(p) else c * tail ** (1.0 / p))
    return best


def sf(values, weights=None):
    values = np.asarray(values, dtype=float)
    space = (
        counting_space(values.size)
        if weights is None
        else FiniteMeasureSpace(np.asarray(weights, dtype=float))
    )
    return ScalarFunction(space, values)


def test_conjugate():
    assert conjugate(2.0) == pytest.approx(2.0)
    assert conjugate(INF) == 1.0
    assert conjugate(4.0) == pytest.approx(4.0 / 3.0)
    with pytest.raises(ValueError):
        conjugate(1.0)


def test_scalar_function_shape_check():
    with pytest.raises(ValueError):
        ScalarFunction(counting_space(3), np.array([1.0, 2.0]))


class TestWeakQuasinorm:
    def test_spike_counting(self):
        assert weak_quasinorm(sf([3.0, 1.0, 1.0]), 2.0) == pytest.approx(3.0)

    def test_indicator_level_sets(self):
        space = FiniteMeasureSpace(np.array([0.7, 1.3, 0.4, 2.0]))
        mask = mask_from_indices([1, 3])
        f = indicator(space, mask)
        for p in (0.5, 1.0, 2.0, 3.5):
            assert weak_quasinorm(f, p) == pytest.approx(
                subset_measure(space, mask) ** (1.0 / p)
            )

    def test_zero(self):
        assert weak_quasinorm(sf([0.0, 0.0]), 2.0) == 0.0

    def test_p_inf_is_max(self):
        assert weak_quasinorm(sf([-5.0, 2.0, 1.0]), INF) == pytest.approx(5.0)

    def test_matches_threshold_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(80):
            n = rng.integers(1, 8)
            values = rng.normal(size=n) * rng.choice([1.0, 10.0])
            weights = rng.uniform(0.1, 2.0, n)
            p = rng.choice([0.5, 1.0, 2.0, 4.0])
            got = weak_quasinorm(sf(values, weights), p)
            want = brute_weak(values, weights, p)
            assert got == pytest.approx(want, rel=1e-9)


class TestBracketNorm:
    def test_spike_counting(self):
        assert bracket_norm(sf([3.0, 1.0, 1.0]), 2.0) == pytest.approx(3.0)

    def test_constant(self):
        space = FiniteMeasureSpace(np.array([0.5, 1.5, 2.0]))
        f = ScalarFunction(space, np.full(3, 2.5))
        for p in (1.5, 2.0, 7.0):
            assert bracket_norm(f, p) == pytest.approx(
                2.5 * space.total_mass ** (1.0 / p)
            )

    def test_p_inf_is_max(self):
        f = sf([1.0, -4.0, 2.0], [0.3, 0.9, 2.2])
        assert bracket_norm(f, INF) == pytest.approx(4.0)

    def test_requires_p_above_one(self):
        with pytest.raises(ValueError):
            bracket_norm(sf([1.0]), 1.0)

    def test_topk_equals_enumeration_equal_weights(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            n = int(rng.integers(1, 11))
            w = float(rng.uniform(0.2, 3.0))
            f = sf(rng.normal(size=n), np.full(n, w))
            p = float(rng.choice([1.5, 2.0, 4.0, INF]))
            a = bracket_norm(f, p, method="topk")
            b = bracket_norm(f, p, method="enumerate")
            assert a == pytest.approx(b, abs=1e-9)

    def test_enumeration_matches_brute_oracle_weighted(self):
        rng = np.random.default_rng(19)
        for _ in range(40):
            n = int(rng.integers(1, 8))
            values = rng.normal(size=n)
            weights = rng.uniform(0.1, 2.0, n)
            p = float(rng.choice([1.5, 2.0, 4.0]))
            got = bracket_norm(sf(values, weights), p)
            assert got == pytest.approx(brute_bracket(values, weights, p), abs=1e-10)

    def test_topk_rejected_for_unequal_weights(self):
        with pytest.raises(ValueError):
            bracket_norm(sf([1.0, 2.0], [1.0, 2.0]), 2.0, method="topk")

    def test_threshold_scan_is_a_lower_bound(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            n = int(rng.integers(1, 8))
            f = sf(rng.normal(size=n), rng.uniform(0.1, 2.0, n))
            p = float(rng.choice([1.5, 2.0, 4.0]))
            assert bracket_norm_threshold_scan(f, p) <= bracket_norm(f, p) + 1e-12


class TestLorentzP1Norm:
    def test_indicator(self):
        space = FiniteMeasureSpace(np.array([0.7, 1.3, 0.4]))
        mask = mask_from_indices([0, 2])
        for p in (1.5, 2.0, 5.0):
            assert lorentz_p1_norm(indicator(space, mask), p) == pytest.approx(
                subset_measure(space, mask) ** (1.0 / p)
            )

    def test_two_values_counting(self):
        assert lorentz_p1_norm(sf([2.0, 1.0]), 2.0) == pytest.approx(
            math.sqrt(2.0) + 1.0
        )

    def test_single_atom(self):
        f = sf([5.0], [0.37])
        for p in (1.5, 2.0, 4.0):
            assert lorentz_p1_norm(f, p) == pytest.approx(5.0 * 0.37 ** (1.0 / p))

    def test_matches_riemann_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(1, 7))
            values = rng.uniform(0.0, 3.0, n)
            weights = rng.uniform(0.1, 2.0, n)
            p = float(rng.choice([1.5, 2.0, 4.0]))
            f = sf(values, weights)
            top = float(np.max(np.abs(values))) if n else 0.0
            if top == 0.0:
                assert lorentz_p1_norm(f, p) == 0.0
                continue
            cs = np.linspace(0.0, top, 20001)[:-1]
            tails = [
                sum(w for x, w in zip(values, weights) if abs(x) > c) ** (1.0 / p)
                for c in cs
            ]
            riemann = float(np.sum(tails) * (cs[1] - cs[0]))
            assert lorentz_p1_norm(f, p) == pytest.approx(riemann, rel=2e-3)


class TestLevelSetDecomposition:
    def test_reconstruction_atomwise(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            f = sf(rng.normal(size=n), rng.uniform(0.1, 2.0, n))
            p = float(rng.choice([1.5, 2.0, 4.0]))
            pieces = level_set_decomposition(f, p)
            recon = np.zeros(n)
            for coeff, block in pieces:
                recon += coeff * block.values
            assert np.max(np.abs(recon - np.abs(f.values))) <= 1e-12

    def test_coefficients_sum_to_p1_norm(self):
        f = sf([2.0, 1.0])
        pieces = level_set_decomposition(f, 2.0)
        assert len(pieces) == 2
        assert sum(c for c, _ in pieces) == pytest.approx(math.sqrt(2.0) + 1.0)

    def test_indicator_single_piece(self):
        space = FiniteMeasureSpace(np.array([0.5, 0.7, 1.1]))
        mask = mask_from_indices([0, 2])
        pieces = level_set_decomposition(indicator(space, mask), 2.0)
        assert len(pieces) == 1
        coeff, block = pieces[0]
        mass = subset_measure(space, mask)
        assert coeff == pytest.approx(mass**0.5)
        assert np.allclose(
            block.values, np.array([1.0, 0.0, 1.0]) * mass ** (-0.5)
        )

    def test_blocks_are_nested(self):
        f = sf([3.0, 1.0, 2.0, 1.0])
        pieces = level_set_decomposition(f, 2.0)
        supports = [set(np.nonzero(b.values)[0]) for _, b in pieces]
        for bigger, smaller in zip(supports, supports[1:]):
            assert smaller.issubset(bigger) or bigger.issubset(smaller)


class TestNormRelations:
    def test_weak_bracket_sandwich(self):
        rng = np.random.default_rng(101)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(1, 9))
            f = sf(rng.normal(size=n), rng.uniform(0.1, 2.0, n))
            p = float(rng.choice([1.5, 2.0, 4.0, INF]))
            wq = weak_quasinorm(f, p)
            br = bracket_norm(f, p)
            assert wq <= br + 1e-12
            assert br <= conjugate(p) * wq + 1e-12
            if wq > 0:
                worst = max(worst, br / wq)
        assert worst <= 4.0  # p' is at most 3 here, plus slack

    def test_duality_pairing(self):
        rng = np.random.default_rng(57)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            weights = rng.uniform(0.1, 2.0, n)
            f = sf(rng.normal(size=n), weights)
            g = ScalarFunction(f.space, rng.normal(size=n))
            p = float(rng.choice([1.5, 2.0, 4.0]))
            pairing = abs(float(np.sum(f.values * g.values * weights)))
            bound = bracket_norm(f, p) * lorentz_p1_norm(g, conjugate(p))
            assert pairing <= bound + 1e-9

    def test_absolute_homogeneity(self):
        rng = np.random.default_rng(77)
        for _ in range(60):
            n = int(rng.integers(1, 8))
            weights = rng.uniform(0.1, 2.0, n)
            values = rng.normal(size=n)
            c = float(rng.normal()) * 3.0
            p = float(rng.choice([1.5, 2.0, 4.0]))
            f = sf(values, weights)
            cf = sf(c * values, weights)
            for norm in (
                lambda x: weak_quasinorm(x, p),
                lambda x: bracket_norm(x, p),
                lambda x: lorentz_p1_norm(x, p),
            ):
                assert norm(cf) == pytest.approx(abs(c) * norm(f), abs=1e-12, rel=1e-12)
