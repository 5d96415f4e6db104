"""The theta-infinity interpolation norm and its closed rectangle form.

Two routes to the same object:

* a grid route  max over t in a pow2 grid of t^(-theta) K_t, certified
  against the continuous supremum within a factor 2^max(theta, 1-theta)
  (K_t is nondecreasing and K_t / t nonincreasing);
* a closed form sup over nonempty rectangle pairs of
  (int_{E_1 x E_2} |f|^q)^(1/q) / (mu_1(E_1)^((1-theta) alpha_1)
                                   * mu_2(E_2)^(theta alpha_2)).

The bridge is the scalar identity

    inf_t { (1-theta) a_0 t^theta + theta a_1 t^(theta-1) }
        = a_0^(1-theta) a_1^theta      (optimum at t = a_1 / a_0),

which, applied inside each rectangle, turns the envelope sup_t t^(-theta)
k_t into theta^theta (1-theta)^(1-theta) times the closed form, exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kfun import k_exact_sweep
from .measure import axis_subset_sums, check_enum_budget, mask_measures
from .rectangle import ExponentConfig, KernelMatrix

__all__ = [
    "ThetaConfig",
    "closed_form_norm",
    "geometric_identity_inf",
    "k_envelope_sup",
    "parse_t_grid",
    "theta_norm_via_grid",
]

DEFAULT_T_GRID = "pow2:-20..20"

_GRID_RE = re.compile(r"^pow2:(-?\d+)\.\.(-?\d+)$")


def parse_t_grid(spec: str) -> tuple[float, ...]:
    """'pow2:a..b' -> (2^a, ..., 2^b)."""
    m = _GRID_RE.match(spec.strip())
    if not m:
        raise ValueError(f"unsupported t-grid spec {spec!r}; expected pow2:a..b")
    lo, hi = int(m.group(1)), int(m.group(2))
    if hi < lo:
        raise ValueError(f"empty t-grid {spec!r}")
    return tuple(2.0**k for k in range(lo, hi + 1))


@dataclass(frozen=True)
class ThetaConfig:
    theta: float
    t_grid: str = DEFAULT_T_GRID

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        parse_t_grid(self.t_grid)  # validate eagerly

    @property
    def grid(self) -> tuple[float, ...]:
        return parse_t_grid(self.t_grid)


def geometric_identity_inf(a0: float, a1: float, theta: float) -> float:
    """inf_t { (1-theta) a0 t^theta + theta a1 t^(theta-1) } for a0, a1 > 0,
    evaluated at the analytic optimum t = a1/a0; equals a0^(1-theta) a1^theta.
    """
    if not (a0 > 0.0 and a1 > 0.0):
        raise ValueError(f"need positive inputs, got a0={a0}, a1={a1}")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    t_opt = a1 / a0
    return (1.0 - theta) * a0 * t_opt**theta + theta * a1 * t_opt ** (theta - 1.0)


def theta_norm_via_grid(
    f: KernelMatrix,
    theta: float,
    p1: float,
    p2: float,
    grid: Sequence[float] | str | None = None,
) -> float:
    """max over grid t of t^(-theta) K_t(f).

    The continuous supremum exceeds this pow2-grid maximum by at most the
    factor 2^max(theta, 1-theta).
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if grid is None:
        grid = DEFAULT_T_GRID
    ts = parse_t_grid(grid) if isinstance(grid, str) else tuple(float(t) for t in grid)
    results = k_exact_sweep(f, ts, p1, p2)
    return max(
        (t ** (-theta)) * r.value for t, r in zip(ts, results)
    ) if ts else 0.0


def _rectangle_tables(
    f: KernelMatrix, q: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(numerators^(1/q) over all mask pairs, masses axis 1, masses axis 2)."""
    if f.naxes != 2:
        raise ValueError("rectangle tables are defined for two axes")
    n1, n2 = f.product.shape
    check_enum_budget(n1 + n2, "rectangle pair enumeration")
    mass_q = np.abs(f.entries) ** q * f.product.weight_tensor
    sums = axis_subset_sums(axis_subset_sums(mass_q, 0), 1)
    num = sums ** (1.0 / q)
    m1 = mask_measures(f.product.factors[0])
    m2 = mask_measures(f.product.factors[1])
    return num, m1, m2


def closed_form_norm(
    f: KernelMatrix, q: float, theta: float, p1: float, p2: float
) -> float:
    """sup over nonempty rectangle pairs of
    (int_{E_1 x E_2} |f|^q)^(1/q) / (mu_1(E_1)^((1-theta) a1) mu_2(E_2)^(theta a2)).
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    config = ExponentConfig(q, (p1, p2))
    a1, a2 = config.alphas
    num, m1, m2 = _rectangle_tables(f, q)
    denom = np.outer(m1 ** ((1.0 - theta) * a1), m2 ** (theta * a2))
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(denom > 0.0, num / denom, 0.0)
    return float(vals.max())


def k_envelope_sup(
    f: KernelMatrix, q: float, theta: float, p1: float, p2: float
) -> float:
    """sup over t > 0 of t^(-theta) k_t(f), computed exactly.

    Per rectangle the optimum over t is analytic:
    sup_t t^(-theta) N / (a + t^(-1) b) = N / inf_t (a t^theta + b t^(theta-1))
    with the infimum given by geometric_identity_inf(a/(1-theta), b/theta).
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    config = ExponentConfig(q, (p1, p2))
    a1, a2 = config.alphas
    num, m1, m2 = _rectangle_tables(f, q)
    best = 0.0
    for i, a in enumerate(m1**a1):
        if a <= 0.0:
            continue
        for j, b in enumerate(m2**a2):
            if b <= 0.0 or num[i, j] <= 0.0:
                continue
            denom = geometric_identity_inf(a / (1.0 - theta), b / theta, theta)
            value = num[i, j] / denom
            if value > best:
                best = value
    return float(best)
