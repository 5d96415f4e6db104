"""Exact K-functionals and constructive decompositions via linear programming.

For a kernel f on n axes, nonnegative splits g_1 + ... + g_n = |f| and
epigraph variables s_j turn

    inf sum_j t_j * || x_j ||_(mixed weak norm on axis j)

into a linear program whose subset constraints

    int_E (marginal of g_j) dmu_j  <=  s_j * D_j(mu_j(E))

are generated lazily by an exact separation oracle (sorted prefix scan
for equal weights, enumeration otherwise).  Signs are restored after
solving: the norms involved depend only on |x_j| and are monotone, so
any decomposition can be replaced by a same-sign, pointwise-dominated
one without increasing either norm.

The reported value is the total achieved by the returned decomposition,
recomputed exactly from its summands; it sits within (sum_j t_j) * tol
of the LP optimum, which is also reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .lorentz import ScalarFunction, conjugate, gauge_bracket_norm, mixed_weak_norm
from .measure import (
    FiniteMeasureSpace,
    axis_subset_sums,
    check_enum_budget,
    mask_measures,
)
from .rectangle import (
    ExponentConfig,
    GaugeFunction,
    KernelMatrix,
    gauge_rect_sup,
    rect_sup,
)
from .simplex import (  # noqa: F401  (re-exported: the LP surface lives here too)
    LPError,
    LPInfeasibleError,
    LPIterationLimitError,
    LPModel,
    LPSolution,
    LPUnboundedError,
    solve_lp,
)

__all__ = [
    "DecompositionResult",
    "DualityReport",
    "GeneralQBracket",
    "KResult",
    "LPModel",
    "duality_certificate",
    "k_bracket_general_q",
    "k_decompose_gauge",
    "k_exact",
    "k_exact_full_oracle",
    "k_exact_sweep",
    "k_multi",
    "separation_worst_subset",
    "solve_lp",
]

SEPARATION_TOL = 1e-11


@dataclass(frozen=True)
class DecompositionResult:
    """Summands of f, their mixed norms, the weighted total, and the
    rectangle certificate the total is measured against."""

    summands: tuple[KernelMatrix, ...]
    norms: tuple[float, ...]
    weights: tuple[float, ...]
    total: float
    certificate: float


@dataclass(frozen=True)
class KResult:
    value: float
    lp_value: float
    decomposition: DecompositionResult


@dataclass(frozen=True)
class GeneralQBracket:
    lower: float
    upper: float
    decomposition: DecompositionResult


def _validate_p(p: float) -> float:
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"weak-norm exponent must satisfy p > 1, got {p}")
    return p


def _validate_t(t: float) -> float:
    t = float(t)
    if not (t > 0.0 and math.isfinite(t)):
        raise ValueError(f"t must be positive and finite, got {t}")
    return t


def _separate_weighted(
    weighted: np.ndarray,
    space: FiniteMeasureSpace,
    s: float,
    dfun: Callable[[np.ndarray], np.ndarray],
    tol: float,
) -> tuple[int, float] | None:
    """Most violated subset for sum_E weighted <= s * D(mu(E)), if any.

    ``weighted`` holds per-atom contributions already multiplied by the
    atom weights.  Exact: sorted prefix scan when weights are equal (the
    optimizer for each cardinality takes the largest entries), subset
    enumeration otherwise.
    """
    n = space.natoms
    if n == 0:
        return None
    if space.equal_weights:
        order = np.argsort(-weighted, kind="stable")
        prefix = np.cumsum(weighted[order])
        masses = float(space.weights[0]) * np.arange(1, n + 1)
        viol = prefix - s * np.asarray(dfun(masses))
        k = int(np.argmax(viol))
        if viol[k] <= tol:
            return None
        mask = 0
        for row in order[: k + 1]:
            mask |= 1 << int(row)
        return mask, float(viol[k])
    check_enum_budget(n, "separation over subsets of a weighted space")
    sums = axis_subset_sums(weighted, 0)
    masses = mask_measures(space)
    viol = sums - s * np.asarray(dfun(masses))
    viol[0] = -np.inf
    m = int(np.argmax(viol))
    if viol[m] <= tol:
        return None
    return m, float(viol[m])


def separation_worst_subset(
    r: ScalarFunction, s: float, p: float, tol: float = 1e-9
) -> tuple[int, float] | None:
    """Subset maximizing int_E r dmu - s * mu(E)^(1/p'), if the maximum
    exceeds ``tol``; None otherwise.  Requires r >= 0."""
    if np.any(r.values < 0.0):
        raise ValueError("separation requires a nonnegative function")
    _validate_p(p)
    inv_conj = 1.0 / conjugate(p)
    return _separate_weighted(
        r.values * r.space.weights, r.space, s, lambda m: m**inv_conj, tol
    )


def _axis_indicator(shape: tuple[int, ...], axis: int, mask: int) -> np.ndarray:
    sel = np.array([(mask >> i) & 1 for i in range(shape[axis])], dtype=float)
    return sel.reshape([-1 if i == axis else 1 for i in range(len(shape))])


def _weighted_marginal(weighted_split: np.ndarray, axis: int) -> np.ndarray:
    other = tuple(i for i in range(weighted_split.ndim) if i != axis)
    return weighted_split.sum(axis=other)


def _cutting_plane(
    absf: np.ndarray,
    spaces: Sequence[FiniteMeasureSpace],
    t_coeffs: Sequence[float],
    dfuns: Sequence[Callable[[np.ndarray], np.ndarray]],
    pools: list[list[int]],
    tol: float,
) -> tuple[float, list[np.ndarray], list[float]]:
    """Lazy-constraint LP for the weighted decomposition problem.

    Returns (lp optimum, splits g_j >= 0 with sum_j g_j = absf, epigraph
    values s_j).  ``pools`` is extended in place and may be reused to
    warm-start subsequent solves against the same kernel.
    """
    nax = len(spaces)
    shape = absf.shape
    ncells = absf.size
    weight = spaces[0].weights
    for s in spaces[1:]:
        weight = np.multiply.outer(weight, s.weights)
    nvars = nax * ncells + nax

    objective = np.zeros(nvars)
    objective[nax * ncells :] = np.asarray(t_coeffs, dtype=float)
    eq_block = np.hstack([np.eye(ncells)] * nax + [np.zeros((ncells, nax))])

    def cut_row(axis: int, mask: int) -> np.ndarray:
        row = np.zeros(nvars)
        coeffs = (weight * _axis_indicator(shape, axis, mask)).ravel()
        row[axis * ncells : (axis + 1) * ncells] = coeffs
        mass = float(
            np.asarray(dfuns[axis](np.array([_mask_mass(spaces[axis], mask)])))[0]
        )
        row[nax * ncells + axis] = -mass
        return row

    lower = np.zeros(nvars)
    upper = np.full(nvars, np.inf)

    while True:
        rows = [eq_block]
        rels = ["="] * ncells
        for axis, pool in enumerate(pools):
            for mask in pool:
                rows.append(cut_row(axis, mask).reshape(1, -1))
                rels.append("<=")
        coeffs = np.vstack(rows)
        rhs = np.concatenate([absf.ravel(), np.zeros(coeffs.shape[0] - ncells)])
        model = LPModel(
            objective=objective,
            coeffs=coeffs,
            rels=tuple(rels),
            rhs=rhs,
            lower=lower,
            upper=upper,
        )
        sol = solve_lp(model)
        splits = [
            sol.x[j * ncells : (j + 1) * ncells].reshape(shape) for j in range(nax)
        ]
        svals = [float(sol.x[nax * ncells + j]) for j in range(nax)]
        added = False
        for axis in range(nax):
            marginal = _weighted_marginal(weight * splits[axis], axis)
            hit = _separate_weighted(
                marginal, spaces[axis], svals[axis], dfuns[axis], tol
            )
            if hit is not None and hit[0] not in pools[axis]:
                pools[axis].append(hit[0])
                added = True
        if not added:
            return sol.value, splits, svals


def _mask_mass(space: FiniteMeasureSpace, mask: int) -> float:
    total = 0.0
    i = 0
    while mask:
        if mask & 1:
            total += float(space.weights[i])
        mask >>= 1
        i += 1
    return total


def _fresh_pools(spaces: Sequence[FiniteMeasureSpace]) -> list[list[int]]:
    return [[1 << a for a in range(s.natoms)] for s in spaces]


def _signed_summands(
    f: KernelMatrix, splits: Sequence[np.ndarray]
) -> tuple[KernelMatrix, ...]:
    sign = np.sign(f.entries)
    return tuple(KernelMatrix(f.product, sign * np.maximum(g, 0.0)) for g in splits)


def _assemble(
    f: KernelMatrix,
    splits: Sequence[np.ndarray],
    t_coeffs: Sequence[float],
    norm_of: Callable[[KernelMatrix, int], float],
    certificate: float,
) -> DecompositionResult:
    summands = _signed_summands(f, splits)
    norms = tuple(norm_of(x, j) for j, x in enumerate(summands))
    total = float(sum(t * n for t, n in zip(t_coeffs, norms)))
    return DecompositionResult(
        summands=summands,
        norms=norms,
        weights=tuple(float(t) for t in t_coeffs),
        total=total,
        certificate=certificate,
    )


def _power_dfun(p: float) -> Callable[[np.ndarray], np.ndarray]:
    inv_conj = 1.0 / conjugate(p)
    return lambda m: m**inv_conj


def k_exact(
    f: KernelMatrix,
    t: float,
    p1: float,
    p2: float,
    tol: float = SEPARATION_TOL,
    pools: list[list[int]] | None = None,
) -> KResult:
    """Exact K-functional at weight t for the two mixed weak spaces with
    exponents p1 (axis 0, fibers integrated over axis 1) and p2 (axis 1).

    Returns the achieved value together with the optimal signed
    decomposition; value and LP optimum agree to (1 + t) * tol.
    """
    if f.naxes != 2:
        raise ValueError("k_exact needs a kernel on exactly two axes")
    t = _validate_t(t)
    p1, p2 = _validate_p(p1), _validate_p(p2)
    spaces = f.product.factors
    if pools is None:
        pools = _fresh_pools(spaces)
    t_coeffs = (1.0, t)
    dfuns = (_power_dfun(p1), _power_dfun(p2))
    lp_value, splits, _ = _cutting_plane(
        np.abs(f.entries), spaces, t_coeffs, dfuns, pools, tol
    )
    config = ExponentConfig(1.0, (p1, p2))
    cert = rect_sup(f, 1.0, config.alphas, (1.0, t)).value
    pvals = (p1, p2)
    decomp = _assemble(
        f, splits, t_coeffs, lambda x, j: mixed_weak_norm(x, j, pvals[j]), cert
    )
    return KResult(value=decomp.total, lp_value=lp_value, decomposition=decomp)


def k_exact_sweep(
    f: KernelMatrix,
    ts: Sequence[float],
    p1: float,
    p2: float,
    tol: float = SEPARATION_TOL,
) -> list[KResult]:
    """k_exact over a grid of t values, reusing generated cuts (subset
    constraints do not depend on t)."""
    pools = _fresh_pools(f.product.factors)
    return [k_exact(f, t, p1, p2, tol=tol, pools=pools) for t in ts]


def k_exact_full_oracle(f: KernelMatrix, t: float, p1: float, p2: float) -> float:
    """LP optimum with every subset constraint materialized up front.

    Exponentially many rows; usable only at small sizes.  Serves as the
    oracle for the lazily-constrained solver.
    """
    if f.naxes != 2:
        raise ValueError("the full-constraint oracle needs two axes")
    t = _validate_t(t)
    p1, p2 = _validate_p(p1), _validate_p(p2)
    spaces = f.product.factors
    for s in spaces:
        check_enum_budget(s.natoms, "materializing all subset constraints")
    pools = [list(range(1, 1 << s.natoms)) for s in spaces]
    dfuns = (_power_dfun(p1), _power_dfun(p2))
    lp_value, _, _ = _cutting_plane(
        np.abs(f.entries), spaces, (1.0, t), dfuns, pools, SEPARATION_TOL
    )
    return lp_value


def k_multi(
    f: KernelMatrix,
    t: Sequence[float],
    p: Sequence[float],
    tol: float = SEPARATION_TOL,
) -> KResult:
    """Generalized K-functional: inf of sum_j t_j ||x_j||_(axis-j mixed
    weak norm) over x_1 + ... + x_n = f, one summand per axis."""
    nax = f.naxes
    if nax < 2:
        raise ValueError("the generalized K-functional needs at least two axes")
    if len(t) != nax or len(p) != nax:
        raise ValueError("need one weight and one exponent per axis")
    t_coeffs = tuple(_validate_t(tj) for tj in t)
    pvals = tuple(_validate_p(pj) for pj in p)
    spaces = f.product.factors
    pools = _fresh_pools(spaces)
    dfuns = tuple(_power_dfun(pj) for pj in pvals)
    lp_value, splits, _ = _cutting_plane(
        np.abs(f.entries), spaces, t_coeffs, dfuns, pools, tol
    )
    config = ExponentConfig(1.0, pvals)
    cert = rect_sup(f, 1.0, config.alphas, t_coeffs).value
    decomp = _assemble(
        f, splits, t_coeffs, lambda x, j: mixed_weak_norm(x, j, pvals[j]), cert
    )
    return KResult(value=decomp.total, lp_value=lp_value, decomposition=decomp)


def k_decompose_gauge(
    f: KernelMatrix,
    gauges: Sequence[GaugeFunction],
    t: float = 1.0,
    tol: float = SEPARATION_TOL,
) -> KResult:
    """Two-axis decomposition value with concave-gauge denominators:
    subset constraints use right-hand sides s_j * Phi_j(mu_j(E))."""
    if f.naxes != 2 or len(gauges) != 2:
        raise ValueError("gauge decomposition needs two axes and two gauges")
    t = _validate_t(t)
    spaces = f.product.factors
    pools = _fresh_pools(spaces)
    t_coeffs = (1.0, t)
    lp_value, splits, _ = _cutting_plane(
        np.abs(f.entries), spaces, t_coeffs, tuple(gauges), pools, tol
    )
    cert = gauge_rect_sup(f, 1.0, gauges, (1.0, t)).value

    def norm_of(x: KernelMatrix, j: int) -> float:
        other = 1 - j
        h = np.tensordot(
            np.abs(x.entries), spaces[other].weights, axes=([other], [0])
        )
        return gauge_bracket_norm(ScalarFunction(spaces[j], h), gauges[j])

    decomp = _assemble(f, splits, t_coeffs, norm_of, cert)
    return KResult(value=decomp.total, lp_value=lp_value, decomposition=decomp)


def k_bracket_general_q(
    f: KernelMatrix,
    t: float,
    q: float,
    p1: float,
    p2: float,
    tol: float = SEPARATION_TOL,
) -> GeneralQBracket:
    """Certified bracket for the K-functional with inner exponent q != 1.

    lower: the rectangle functional with scales (1, t).
    upper: the value achieved by an explicit decomposition, built by
    solving the q = 1 problem for |f|^q with exponents p_j / q at weight
    t^q, then rounding the split to disjoint supports A = {g_1 >= g_2}
    (disjoint supports give |f_1|^q + |f_2|^q = |f|^q exactly).
    """
    if f.naxes != 2:
        raise ValueError("the general-q bracket needs a kernel on two axes")
    t = _validate_t(t)
    if not 0.0 < q < math.inf or q == 1.0:
        raise ValueError(f"q must lie in (0, inf) with q != 1, got {q}")
    for pj in (p1, p2):
        if not pj > q:
            raise ValueError(f"need q < p_j, got q={q}, p_j={pj}")
    config = ExponentConfig(q, (p1, p2))
    lower = rect_sup(f, q, config.alphas, (1.0, t)).value

    inner_p1 = math.inf if math.isinf(p1) else p1 / q
    inner_p2 = math.inf if math.isinf(p2) else p2 / q
    powered = KernelMatrix(f.product, np.abs(f.entries) ** q)
    inner = k_exact(powered, t**q, inner_p1, inner_p2, tol=tol)
    g1 = np.abs(inner.decomposition.summands[0].entries)
    g2 = np.abs(inner.decomposition.summands[1].entries)
    on_first = g1 >= g2
    f1 = KernelMatrix(f.product, np.where(on_first, f.entries, 0.0))
    f2 = KernelMatrix(f.product, np.where(on_first, 0.0, f.entries))
    norms = (
        mixed_weak_norm(f1, 0, p1, inner_q=q),
        mixed_weak_norm(f2, 1, p2, inner_q=q),
    )
    upper = norms[0] + t * norms[1]
    decomp = DecompositionResult(
        summands=(f1, f2),
        norms=norms,
        weights=(1.0, t),
        total=float(upper),
        certificate=float(lower),
    )
    return GeneralQBracket(lower=float(lower), upper=float(upper), decomposition=decomp)


@dataclass(frozen=True)
class DualityReport:
    """Every intermediate quantity of the dual bounding chain

        int |f g| <= (int_0^inf [mu_1(E_c)^(1/p_1') + mu_2(F_c)^(1/p_2')] dc)
                     * sup_c int |f| psi_c
                  <= 2 * max(dual norms of g) * rect_sup(f)

    where E_c, F_c are superlevel sets of the fiberwise maxima of |g| and
    psi_c the normalized rectangle indicators built from them."""

    pairing: float
    alpha: np.ndarray
    beta: np.ndarray
    breakpoints: np.ndarray
    piece_masks: tuple[tuple[int, int], ...]
    piece_values: tuple[float, ...]
    mass_integral: float
    dual_alpha: float
    dual_beta: float
    sup_piece: float
    rect_value: float
    chain_bound: float
    final_bound: float
    reconstruction_error: float
    passed: bool


def duality_certificate(
    f: KernelMatrix, g: KernelMatrix, p1: float, p2: float, tol: float = 1e-9
) -> DualityReport:
    """Evaluate and check the dual bounding chain for a pair of kernels."""
    if f.naxes != 2 or g.naxes != 2 or f.product.shape != g.product.shape:
        raise ValueError("f and g must be kernels on the same two-axis product")
    p1, p2 = _validate_p(p1), _validate_p(p2)
    s1, s2 = f.product.factors
    weight = f.product.weight_tensor
    pairing = float(np.sum(np.abs(f.entries * g.entries) * weight))

    absg = np.abs(g.entries)
    alpha = absg.max(axis=1) if absg.size else np.zeros(s1.natoms)
    beta = absg.max(axis=0) if absg.size else np.zeros(s2.natoms)
    levels = np.unique(np.concatenate([alpha, beta]))
    levels = levels[levels > 0.0]

    e1, e2 = 1.0 / conjugate(p1), 1.0 / conjugate(p2)
    prev = 0.0
    mass_integral = 0.0
    dual_alpha = 0.0
    dual_beta = 0.0
    piece_masks: list[tuple[int, int]] = []
    piece_values: list[float] = []
    absfw = np.abs(f.entries) * weight
    for u in levels:
        in_e = alpha >= u
        in_f = beta >= u
        m1 = float(s1.weights[in_e].sum())
        m2 = float(s2.weights[in_f].sum())
        d1 = m1**e1 if m1 > 0.0 else 0.0
        d2 = m2**e2 if m2 > 0.0 else 0.0
        gap = float(u - prev)
        prev = float(u)
        mass_integral += gap * (d1 + d2)
        dual_alpha += gap * d1
        dual_beta += gap * d2
        if m1 > 0.0 and m2 > 0.0:
            emask = sum(1 << i for i in np.nonzero(in_e)[0])
            fmask = sum(1 << j for j in np.nonzero(in_f)[0])
            rect_mass = float(absfw[np.ix_(in_e, in_f)].sum())
            piece_masks.append((int(emask), int(fmask)))
            piece_values.append(rect_mass / (d1 + d2))

    sup_piece = max(piece_values, default=0.0)
    rect_value = rect_sup(f, 1.0, (e1, e2), (1.0, 1.0)).value
    chain_bound = mass_integral * sup_piece
    final_bound = 2.0 * max(dual_alpha, dual_beta) * rect_value

    recon = np.zeros((s1.natoms, s2.natoms))
    prev = 0.0
    for u in levels:
        recon += (u - prev) * np.outer(alpha >= u, beta >= u)
        prev = float(u)
    reconstruction_error = (
        float(np.max(np.abs(np.minimum.outer(alpha, beta) - recon)))
        if recon.size
        else 0.0
    )

    passed = (
        pairing <= chain_bound + tol
        and chain_bound <= final_bound + tol
        and sup_piece <= rect_value + tol
        and reconstruction_error <= 1e-12
    )
    return DualityReport(
        pairing=pairing,
        alpha=alpha,
        beta=beta,
        breakpoints=levels,
        piece_masks=tuple(piece_masks),
        piece_values=tuple(float(v) for v in piece_values),
        mass_integral=float(mass_integral),
        dual_alpha=float(dual_alpha),
        dual_beta=float(dual_beta),
        sup_piece=float(sup_piece),
        rect_value=float(rect_value),
        chain_bound=float(chain_bound),
        final_bound=float(final_bound),
        reconstruction_error=reconstruction_error,
        passed=bool(passed),
    )
