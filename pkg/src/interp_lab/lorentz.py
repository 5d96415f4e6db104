"""Scalar norms of Lorentz type on one finite measure space.

Three functionals of a function f with distribution m(c) = mu{|f| > c}:

* weak quasinorm      sup_c c * m(c)^(1/p),
* bracket norm        sup_E  int_E |f| dmu / mu(E)^(1/p'),
* integral (p,1) norm int_0^inf m(c)^(1/p) dc,

together with the superlevel-set decomposition that writes |f| as a
nonnegative combination of normalized indicators whose coefficients sum
to the (p,1) norm.  On a finite space all three are evaluated exactly:
the distribution function is a step function and the bracket supremum is
a finite maximum.

All functions are pure; inputs are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .measure import (
    FiniteMeasureSpace,
    axis_subset_sums,
    check_enum_budget,
    mask_measures,
)

if TYPE_CHECKING:  # pragma: no cover
    from .rectangle import GaugeFunction, KernelMatrix

__all__ = [
    "ScalarFunction",
    "bracket_norm",
    "bracket_norm_threshold_scan",
    "conjugate",
    "gauge_bracket_norm",
    "indicator",
    "level_set_decomposition",
    "lorentz_p1_norm",
    "mixed_weak_norm",
    "weak_quasinorm",
]


def conjugate(p: float) -> float:
    """Conjugate exponent p' = p/(p-1), with conjugate(inf) = 1."""
    if math.isinf(p):
        return 1.0
    if p <= 1.0:
        raise ValueError(f"conjugate exponent needs p > 1, got {p}")
    return p / (p - 1.0)


@dataclass(frozen=True, eq=False)
class ScalarFunction:
    """Real values, one per atom of an associated space."""

    space: FiniteMeasureSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != self.space.natoms:
            raise ValueError(
                f"expected {self.space.natoms} values, got shape {v.shape}"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def indicator(space: FiniteMeasureSpace, mask: int) -> ScalarFunction:
    values = np.zeros(space.natoms)
    i = 0
    m = mask
    while m:
        if m & 1:
            values[i] = 1.0
        m >>= 1
        i += 1
    return ScalarFunction(space, values)


def _tail_profile(f: ScalarFunction) -> tuple[np.ndarray, np.ndarray]:
    """Distinct positive values v of |f| (descending) and mu{|f| >= v}."""
    av = np.abs(f.values)
    order = np.argsort(-av, kind="stable")
    vals = av[order]
    cumw = np.cumsum(f.space.weights[order])
    # last position of each run of equal values carries the full tail mass
    keep = np.nonzero(np.diff(np.append(vals, -1.0)) != 0.0)[0]
    v = vals[keep]
    masses = cumw[keep]
    positive = v > 0.0
    return v[positive], masses[positive]


def weak_quasinorm(f: ScalarFunction, p: float) -> float:
    """sup_c c * mu{|f| > c}^(1/p), attained at a value of |f|."""
    if not p > 0.0:
        raise ValueError(f"weak quasinorm needs p > 0, got {p}")
    v, masses = _tail_profile(f)
    if v.size == 0:
        return 0.0
    if math.isinf(p):
        return float(v[0])
    return float(np.max(v * masses ** (1.0 / p)))


def bracket_norm(f: ScalarFunction, p: float, method: str = "auto") -> float:
    """sup over nonempty E of int_E |f| dmu / mu(E)^(1/p').

    Exact.  With equal atom weights the optimizer for each cardinality k
    is the set of the k largest |f| values, so a sorted prefix scan
    suffices; otherwise all 2^n - 1 subsets are enumerated.
    """
    if not p > 1.0:
        raise ValueError(f"bracket norm needs p > 1, got {p}")
    if method not in ("auto", "topk", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    if f.space.natoms == 0:
        return 0.0
    if method == "topk" and not f.space.equal_weights:
        raise ValueError("top-k fast path requires equal atom weights")
    if method == "auto":
        method = "topk" if f.space.equal_weights else "enumerate"
    inv_conj = 1.0 / conjugate(p)
    av = np.abs(f.values)
    if method == "topk":
        w = float(f.space.weights[0])
        sums = w * np.cumsum(np.sort(av)[::-1])
        masses = w * np.arange(1, av.size + 1)
        return float(np.max(sums / masses**inv_conj))
    n = f.space.natoms
    check_enum_budget(n, "bracket norm by subset enumeration")
    sums = axis_subset_sums(av * f.space.weights, 0)
    masses = mask_measures(f.space)
    return float(np.max(sums[1:] / masses[1:] ** inv_conj))


def bracket_norm_threshold_scan(f: ScalarFunction, p: float) -> float:
    """Heuristic lower bound for the bracket norm: scan only superlevel
    sets {|f| >= v} as candidate subsets.

    For unequal weights the true optimizer need not be a superlevel set,
    so this can undershoot; it is provided for exploration and is never
    used in verification paths.
    """
    if not p > 1.0:
        raise ValueError(f"bracket norm needs p > 1, got {p}")
    av = np.abs(f.values)
    w = f.space.weights
    order = np.argsort(-av, kind="stable")
    sums = np.cumsum(av[order] * w[order])
    masses = np.cumsum(w[order])
    inv_conj = 1.0 / conjugate(p)
    return float(np.max(sums / masses**inv_conj)) if av.size else 0.0


def lorentz_p1_norm(f: ScalarFunction, p: float) -> float:
    """int_0^inf mu{|f| > c}^(1/p) dc, evaluated piecewise exactly.

    Between consecutive distinct values v_(k-1) < c < v_k of |f| the
    integrand is constant with value mu{|f| >= v_k}^(1/p).
    """
    if not p > 1.0:
        raise ValueError(f"integral (p,1) norm needs p > 1, got {p}")
    v, masses = _tail_profile(f)
    if v.size == 0:
        return 0.0
    gaps = -np.diff(np.append(v, 0.0))  # v_k - v_(k+1), descending order
    return float(np.sum(gaps * masses ** (1.0 / p)))


def level_set_decomposition(
    f: ScalarFunction, p: float
) -> tuple[tuple[float, ScalarFunction], ...]:
    """Write |f| = sum_k c_k * phi_k with phi_k = mu(L_k)^(-1/p) 1_(L_k).

    The L_k are the nested superlevel sets {|f| >= v_k} over the distinct
    positive values v_k, and sum_k c_k equals lorentz_p1_norm(f, p).
    """
    if not p > 1.0:
        raise ValueError(f"level-set decomposition needs p > 1, got {p}")
    av = np.abs(f.values)
    v, masses = _tail_profile(f)
    pieces = []
    prev = np.append(v, 0.0)[1:]  # next smaller distinct value, then 0
    for vk, vnext, mass in zip(v, prev, masses):
        block = np.where(av >= vk, mass ** (-1.0 / p), 0.0)
        coeff = (vk - vnext) * mass ** (1.0 / p)
        pieces.append((float(coeff), ScalarFunction(f.space, block)))
    return tuple(pieces)


def gauge_bracket_norm(
    f: ScalarFunction, gauge: "GaugeFunction", method: str = "auto"
) -> float:
    """sup over nonempty E of int_E |f| dmu / Phi(mu(E)) for a concave gauge."""
    if f.space.natoms == 0:
        return 0.0
    if method == "auto":
        method = "topk" if f.space.equal_weights else "enumerate"
    av = np.abs(f.values)
    if method == "topk":
        if not f.space.equal_weights:
            raise ValueError("top-k fast path requires equal atom weights")
        w = float(f.space.weights[0])
        sums = w * np.cumsum(np.sort(av)[::-1])
        masses = w * np.arange(1, av.size + 1)
    else:
        check_enum_budget(f.space.natoms, "gauge bracket norm by enumeration")
        sums = axis_subset_sums(av * f.space.weights, 0)[1:]
        masses = mask_measures(f.space)[1:]
    return float(np.max(sums / gauge(masses)))


def mixed_weak_norm(
    f: "KernelMatrix", axis: int, p: float, inner_q: float = 1.0
) -> float:
    """Mixed norm: bracket norm over ``axis`` of the fiberwise L_q mass.

    h(a) = ( int |f(a, .)|^q dmu_hat )^(1/q) over all remaining axes,
    followed by the bracket norm of h with exponent p on the axis space.
    """
    if not inner_q > 0.0:
        raise ValueError(f"inner exponent must be positive, got {inner_q}")
    spaces = f.product.factors
    if not 0 <= axis < len(spaces):
        raise ValueError(f"axis {axis} out of range for {len(spaces)} axes")
    others = tuple(i for i in range(len(spaces)) if i != axis)
    contracted = np.abs(f.entries) ** inner_q
    for i in sorted(others, reverse=True):
        contracted = np.tensordot(contracted, spaces[i].weights, axes=([i], [0]))
    h = contracted ** (1.0 / inner_q)
    return bracket_norm(ScalarFunction(spaces[axis], h), p)
