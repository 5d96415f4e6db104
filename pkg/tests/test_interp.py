import math

import numpy as np
import pytest

from interp_lab.interp import (
    ThetaConfig,
    closed_form_norm,
    geometric_identity_inf,
    k_envelope_sup,
    parse_t_grid,
    theta_norm_via_grid,
)
from interp_lab.measure import FiniteMeasureSpace, ProductSpace, counting_space
from interp_lab.rectangle import ExponentConfig, KernelMatrix, rect_sup

INF = math.inf


def kernel(entries, weights=None):
    entries = np.asarray(entries, dtype=float)
    if weights is None:
        spaces = tuple(counting_space(n) for n in entries.shape)
    else:
        spaces = tuple(FiniteMeasureSpace(np.asarray(w, float)) for w in weights)
    return KernelMatrix(ProductSpace(spaces), entries)


def random_kernel(rng, max_side=5):
    shape = tuple(int(rng.integers(1, max_side + 1)) for _ in range(2))
    entries = rng.uniform(0.0, 1.0, size=shape)
    if rng.random() < 0.5:
        weights = tuple(np.ones(n) for n in shape)
    else:
        weights = tuple(rng.uniform(0.2, 2.0, n) for n in shape)
    return kernel(entries, weights)


class TestGeometricIdentity:
    def test_square_roots(self):
        assert geometric_identity_inf(4.0, 9.0, 0.5) == pytest.approx(6.0)

    def test_equal_inputs(self):
        for theta in (0.1, 0.5, 0.9):
            assert geometric_identity_inf(3.3, 3.3, theta) == pytest.approx(3.3)

    def test_matches_grid_minimum(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a0 = float(rng.uniform(0.1, 5.0))
            a1 = float(rng.uniform(0.1, 5.0))
            theta = float(rng.uniform(0.05, 0.95))
            got = geometric_identity_inf(a0, a1, theta)
            assert got == pytest.approx(a0 ** (1 - theta) * a1**theta, abs=1e-10)
            ts = np.geomspace(1e-4, 1e4, 400001)
            grid = np.min((1 - theta) * a0 * ts**theta + theta * a1 * ts ** (theta - 1))
            assert got == pytest.approx(float(grid), abs=1e-10, rel=1e-10)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            geometric_identity_inf(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            geometric_identity_inf(1.0, -1.0, 0.5)


def test_parse_t_grid():
    assert parse_t_grid("pow2:-2..2") == (0.25, 0.5, 1.0, 2.0, 4.0)
    assert len(parse_t_grid("pow2:-5..5")) == 11
    with pytest.raises(ValueError):
        parse_t_grid("geometric:1..2")
    with pytest.raises(ValueError):
        parse_t_grid("pow2:3..1")


def test_theta_config():
    cfg = ThetaConfig(0.5)
    assert len(cfg.grid) == 41
    with pytest.raises(ValueError):
        ThetaConfig(1.0)


class TestClosedForm:
    def test_identity(self):
        f = kernel(np.eye(2))
        assert closed_form_norm(f, 1.0, 0.5, INF, INF) == pytest.approx(1.0)

    def test_theta_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            f = random_kernel(rng)
            theta = float(rng.uniform(0.1, 0.9))
            p1 = float(rng.choice([1.5, 2.0, INF]))
            p2 = float(rng.choice([2.0, 4.0, INF]))
            a = closed_form_norm(f, 1.0, theta, p1, p2)
            b = closed_form_norm(f.transposed(), 1.0, 1.0 - theta, p2, p1)
            assert a == pytest.approx(b, rel=1e-12)

    def test_monotone_and_homogeneous(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            small = rng.uniform(0.0, 1.0, size=(3, 3))
            big = small + rng.uniform(0.0, 1.0, size=(3, 3))
            args = (1.0, 0.25, 2.0, 4.0)
            a = closed_form_norm(kernel(small), *args)
            b = closed_form_norm(kernel(big), *args)
            assert a <= b + 1e-12
            c = closed_form_norm(kernel(-2.0 * small), *args)
            assert c == pytest.approx(2.0 * a, rel=1e-12, abs=1e-12)


class TestEnvelope:
    def test_exact_identity_with_closed_form(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            f = random_kernel(rng)
            theta = float(rng.choice([0.25, 0.5, 0.75]))
            q = float(rng.choice([0.5, 1.0, 2.0]))
            p1 = float(rng.uniform(q + 0.3, q + 4.0))
            p2 = float(rng.choice([q + 1.0, INF]))
            envelope = k_envelope_sup(f, q, theta, p1, p2)
            factor = theta**theta * (1.0 - theta) ** (1.0 - theta)
            closed = closed_form_norm(f, q, theta, p1, p2)
            assert envelope == pytest.approx(factor * closed, abs=1e-9, rel=1e-9)

    def test_envelope_dominates_grid_of_k_lower(self):
        rng = np.random.default_rng(19)
        f = random_kernel(rng)
        theta = 0.5
        config = ExponentConfig(1.0, (2.0, 4.0))
        envelope = k_envelope_sup(f, 1.0, theta, 2.0, 4.0)
        for t in parse_t_grid("pow2:-6..6"):
            kt = rect_sup(f, 1.0, config.alphas, (1.0, t)).value
            assert t ** (-theta) * kt <= envelope + 1e-10


class TestThetaNormViaGrid:
    def test_zero(self):
        f = kernel(np.zeros((2, 2)))
        assert theta_norm_via_grid(f, 0.5, INF, INF, "pow2:-3..3") == 0.0

    def test_homogeneous(self):
        rng = np.random.default_rng(23)
        f = random_kernel(rng, max_side=3)
        grid = "pow2:-4..4"
        a = theta_norm_via_grid(f, 0.25, 2.0, INF, grid)
        scaled = KernelMatrix(f.product, 3.0 * f.entries)
        b = theta_norm_via_grid(scaled, 0.25, 2.0, INF, grid)
        assert b == pytest.approx(3.0 * a, rel=1e-9)

    def test_certified_bracket_around_envelope(self):
        # grid max of t^-theta K_t lies in
        # [envelope / 2^max(theta, 1-theta), 2 * envelope]
        rng = np.random.default_rng(29)
        for _ in range(6):
            f = random_kernel(rng, max_side=4)
            theta = float(rng.choice([0.25, 0.5, 0.75]))
            p1 = float(rng.choice([2.0, INF]))
            p2 = float(rng.choice([4.0, INF]))
            grid_value = theta_norm_via_grid(f, theta, p1, p2, "pow2:-8..8")
            envelope = k_envelope_sup(f, 1.0, theta, p1, p2)
            slack = 2.0 ** max(theta, 1.0 - theta)
            assert grid_value >= envelope / slack - 1e-9
            assert grid_value <= 2.0 * envelope + 1e-9

    def test_identity_half(self):
        f = kernel(np.eye(2))
        grid_value = theta_norm_via_grid(f, 0.5, INF, INF, "pow2:-6..6")
        envelope = 0.5 * closed_form_norm(f, 1.0, 0.5, INF, INF)
        assert envelope == pytest.approx(0.5)
        assert grid_value >= envelope / math.sqrt(2.0) - 1e-9
        assert grid_value <= 2.0 * envelope + 1e-9
