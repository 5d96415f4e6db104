"""Rectangle supremum functionals for kernels on product spaces.

The central object is, for a kernel f, exponents (q, p_1..p_n) with
alpha_j = 1/q - 1/p_j > 0, and positive scales (s_1..s_n),

    sup over subset tuples (E_1..E_n), not all empty, of

        ( int_{E_1 x ... x E_n} |f|^q dmu )^(1/q)
        -----------------------------------------
        sum_j s_j^(-1) * mu_j(E_j)^(alpha_j)

evaluated exactly by enumeration, with an exact sorted fast path on two
axes when the scanned axis has equal weights.  A concave gauge variant
replaces mu_j(E_j)^(alpha_j) by Phi_j(mu_j(E_j)).

Tuples with an empty factor have zero numerator and contribute 0; the
all-empty tuple is excluded.  Ties in the argmax are broken toward the
lexicographically smallest mask tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .measure import (
    EnumerationLimitError,
    FiniteMeasureSpace,
    ProductSpace,
    axis_subset_sums,
    check_enum_budget,
    mask_measures,
)

__all__ = [
    "ExponentConfig",
    "GaugeFunction",
    "KernelMatrix",
    "RectSupResult",
    "gauge_rect_sup",
    "k_lower_certificate",
    "rect_sup",
]


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Dense real tensor indexed by one atom per factor of a product space."""

    product: ProductSpace
    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=float)
        if e.shape != self.product.shape:
            raise ValueError(
                f"entries shape {e.shape} does not match spaces {self.product.shape}"
            )
        if e.size and not np.all(np.isfinite(e)):
            raise ValueError("kernel entries must be finite")
        e = e.copy()
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def naxes(self) -> int:
        return self.product.naxes

    def transposed(self) -> "KernelMatrix":
        """Axes reversed (for two axes: the usual transpose)."""
        return KernelMatrix(
            ProductSpace(tuple(reversed(self.product.factors))),
            np.transpose(self.entries),
        )


def kernel_from_arrays(
    weights: Sequence[Sequence[float]], entries: np.ndarray
) -> KernelMatrix:
    spaces = tuple(FiniteMeasureSpace(np.asarray(w, dtype=float)) for w in weights)
    return KernelMatrix(ProductSpace(spaces), np.asarray(entries, dtype=float))


@dataclass(frozen=True)
class ExponentConfig:
    """Exponents (q, p_1..p_n) with 0 < q < p_j <= inf."""

    q: float
    p: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (0.0 < self.q < math.inf):
            raise ValueError(f"q must lie in (0, inf), got {self.q}")
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        for pj in self.p:
            if not pj > self.q:
                raise ValueError(f"need q < p_j, got q={self.q}, p_j={pj}")

    @property
    def alphas(self) -> tuple[float, ...]:
        """alpha_j = 1/q - 1/p_j (with 1/inf = 0)."""
        return tuple(
            1.0 / self.q - (0.0 if math.isinf(pj) else 1.0 / pj) for pj in self.p
        )


@dataclass(frozen=True, eq=False)
class GaugeFunction:
    """Increasing concave gauge Phi with Phi(0) = 0.

    Either a power x -> x^gamma with gamma in (0, 1], or a piecewise
    linear concave function given by breakpoints (with an implicit
    segment from the origin) and a final slope beyond the last one.
    """

    kind: str
    gamma: float = 1.0
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None
    tail_slope: float = 0.0

    @classmethod
    def power(cls, gamma: float) -> "GaugeFunction":
        if not 0.0 < gamma <= 1.0:
            raise ValueError(f"power gauge needs gamma in (0, 1], got {gamma}")
        return cls(kind="power", gamma=float(gamma))

    @classmethod
    def piecewise_linear(
        cls, points: Sequence[tuple[float, float]], tail_slope: float = 0.0
    ) -> "GaugeFunction":
        pts = sorted((float(x), float(y)) for x, y in points)
        if not pts:
            raise ValueError("need at least one breakpoint")
        xs = np.array([0.0] + [x for x, _ in pts])
        ys = np.array([0.0] + [y for _, y in pts])
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("breakpoint x-coordinates must be strictly increasing")
        slopes = np.append(np.diff(ys) / np.diff(xs), float(tail_slope))
        if slopes[0] <= 0.0:
            raise ValueError("gauge must be strictly positive right of the origin")
        if np.any(slopes < 0.0) or np.any(np.diff(slopes) > 1e-12):
            raise ValueError("gauge must be increasing and concave")
        xs.flags.writeable = False
        ys.flags.writeable = False
        return cls(kind="pwl", xs=xs, ys=ys, tail_slope=float(tail_slope))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            out = x**self.gamma
        else:
            out = np.interp(x, self.xs, self.ys)
            beyond = x > self.xs[-1]
            if np.any(beyond):
                out = np.where(
                    beyond, self.ys[-1] + self.tail_slope * (x - self.xs[-1]), out
                )
        return out if out.ndim else float(out)

    def to_json_fragment(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "gamma": self.gamma}
        return {
            "kind": "pwl",
            "points": [[float(x), float(y)] for x, y in zip(self.xs[1:], self.ys[1:])],
            "tail_slope": self.tail_slope,
        }


@dataclass(frozen=True)
class RectSupResult:
    value: float
    masks: tuple[int, ...]


DenominatorFn = Callable[[np.ndarray], np.ndarray]


def _power_denominators(
    alphas: Sequence[float], scales: Sequence[float]
) -> tuple[DenominatorFn, ...]:
    for a in alphas:
        if not a > 0.0:
            raise ValueError(f"alpha_j must be positive, got {a}")
    for s in scales:
        if not (s > 0.0 and math.isfinite(s)):
            raise ValueError(f"scales must be positive and finite, got {s}")
    return tuple(
        (lambda m, a=float(a), s=float(s): (m**a) / s)
        for a, s in zip(alphas, scales)
    )


def _gauge_denominators(
    gauges: Sequence[GaugeFunction], scales: Sequence[float]
) -> tuple[DenominatorFn, ...]:
    for s in scales:
        if not (s > 0.0 and math.isfinite(s)):
            raise ValueError(f"scales must be positive and finite, got {s}")
    return tuple(
        (lambda m, g=g, s=float(s): np.asarray(g(m)) / s)
        for g, s in zip(gauges, scales)
    )


def _rect_enumerate(
    f: KernelMatrix, q: float, dfuns: Sequence[DenominatorFn]
) -> RectSupResult:
    shape = f.product.shape
    check_enum_budget(sum(shape), "rectangle supremum by full enumeration")
    mass_q = np.abs(f.entries) ** q * f.product.weight_tensor
    sums = mass_q
    for ax in range(f.naxes):
        sums = axis_subset_sums(sums, ax)
    denom_axes = [
        d(mask_measures(s)) for d, s in zip(dfuns, f.product.factors)
    ]
    denom = np.zeros(sums.shape)
    for ax, d in enumerate(denom_axes):
        denom = denom + d.reshape([-1 if i == ax else 1 for i in range(f.naxes)])
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(denom > 0.0, sums ** (1.0 / q) / denom, 0.0)
    values.flat[0] = -np.inf  # all-empty tuple excluded
    flat = int(np.argmax(values))  # first max in C order = lexicographic tie-break
    masks = np.unravel_index(flat, values.shape)
    return RectSupResult(float(values.flat[flat]), tuple(int(m) for m in masks))


def _rect_fast2(
    f: KernelMatrix, q: float, dfuns: Sequence[DenominatorFn]
) -> RectSupResult:
    """Two-axis fast path; axis 0 must have equal weights.

    For a fixed E_2 and fixed |E_1| = k the numerator is maximized by the
    k rows with the largest restricted mass, so a sort per E_2 replaces
    the 2^(n_1) row sweep.
    """
    s1, s2 = f.product.factors
    if not s1.equal_weights:
        raise ValueError("fast path requires equal weights on the scanned axis")
    n1, n2 = f.product.shape
    check_enum_budget(n2, "rectangle fast path (outer subset sweep)")
    mass_q = np.abs(f.entries) ** q * f.product.weight_tensor
    col_sums = axis_subset_sums(mass_q, 1)  # shape (n1, 2^n2)
    w1 = float(s1.weights[0])
    d1 = np.asarray(dfuns[0](w1 * np.arange(1, n1 + 1)))
    d2 = np.asarray(dfuns[1](mask_measures(s2)))
    best = RectSupResult(0.0, (0, 1 if n2 else 0))
    order_all = np.argsort(-col_sums, axis=0, kind="stable")
    for m2 in range(1, 1 << n2):
        col = col_sums[:, m2]
        order = order_all[:, m2]
        prefix = np.cumsum(col[order])
        vals = prefix ** (1.0 / q) / (d1 + d2[m2])
        k = int(np.argmax(vals))
        if vals[k] > best.value:
            mask1 = 0
            for row in order[: k + 1]:
                mask1 |= 1 << int(row)
            best = RectSupResult(float(vals[k]), (mask1, m2))
    return best


def _rect_core(
    f: KernelMatrix,
    q: float,
    dfuns: Sequence[DenominatorFn],
    method: str,
) -> RectSupResult:
    if not 0.0 < q < math.inf:
        raise ValueError(f"q must lie in (0, inf), got {q}")
    if len(dfuns) != f.naxes:
        raise ValueError("one denominator per axis required")
    if method == "enumerate":
        return _rect_enumerate(f, q, dfuns)
    if method == "fast":
        if f.naxes != 2:
            raise ValueError("fast path is only available on two axes")
        if f.product.factors[0].equal_weights:
            return _rect_fast2(f, q, dfuns)
        if f.product.factors[1].equal_weights:
            res = _rect_fast2(f.transposed(), q, tuple(reversed(dfuns)))
            return RectSupResult(res.value, tuple(reversed(res.masks)))
        raise ValueError("fast path requires one axis with equal weights")
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    try:
        check_enum_budget(sum(f.product.shape), "rectangle supremum")
    except EnumerationLimitError:
        if f.naxes == 2 and (
            f.product.factors[0].equal_weights or f.product.factors[1].equal_weights
        ):
            return _rect_core(f, q, dfuns, "fast")
        raise
    return _rect_enumerate(f, q, dfuns)


def rect_sup(
    f: KernelMatrix,
    q: float,
    alphas: Sequence[float],
    scales: Sequence[float],
    method: str = "auto",
) -> RectSupResult:
    """Rectangle supremum with denominator sum_j scales_j^(-1) mu_j(E_j)^alpha_j."""
    return _rect_core(f, q, _power_denominators(alphas, scales), method)


def gauge_rect_sup(
    f: KernelMatrix,
    q: float,
    gauges: Sequence[GaugeFunction],
    scales: Sequence[float],
    method: str = "auto",
) -> RectSupResult:
    """Rectangle supremum with mu_j(E_j)^alpha_j replaced by Phi_j(mu_j(E_j))."""
    if f.naxes != 2:
        raise ValueError("gauge rectangle supremum is defined for two axes")
    return _rect_core(f, q, _gauge_denominators(gauges, scales), method)


def k_lower_certificate(
    f: KernelMatrix, config: ExponentConfig, t: float
) -> RectSupResult:
    """Certified lower-bound functional k_t: rect_sup with scales (1, t).

    The denominator reads mu_1(E_1)^alpha_1 + t^(-1) mu_2(E_2)^alpha_2;
    it is nondecreasing in t and homogeneous in f.
    """
    if f.naxes != 2 or len(config.p) != 2:
        raise ValueError("k_t is defined for kernels on two axes")
    if not (t > 0.0 and math.isfinite(t)):
        raise ValueError(f"t must be positive and finite, got {t}")
    return rect_sup(f, config.q, config.alphas, (1.0, t))
