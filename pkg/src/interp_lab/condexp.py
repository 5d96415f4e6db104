"""Conditional expectations on a finite probability space.

A sigma-subalgebra of a finite space is a partition into blocks; the
conditional expectation averages over each block, and the measurable
sets of the subalgebra are exactly the unions of blocks.  For functions
x and partitions B_1..B_n this module computes

* the block-averaging norm  || E_j |x| ||_inf,
* the intersection condition

      sup over block unions (E_1..E_n), not all empty, of
          int_{E_1 cap ... cap E_n} |x| dmu / sum_j mu(E_j),

* the exact decomposition value  inf sum_j || x_j ||  over x = sum x_j,
  by a linear program with one constraint per block (sup-norm flavor) or
  per block union (general-exponent flavor).

Total mass is normalized to 1 at configuration time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Sequence

import numpy as np

from .lorentz import ScalarFunction, conjugate
from .measure import FiniteMeasureSpace, ProductSpace, check_enum_budget
from .simplex import LPModel, solve_lp

__all__ = [
    "CondExpConfig",
    "CondexpDecomposition",
    "Partition",
    "c_bracket_norm",
    "c_norm",
    "cond_expectation",
    "condexp_condition_sup",
    "condexp_decompose",
    "coordinate_partitions",
    "flatten_kernel",
    "multiplication_opnorm",
]


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint nonempty blocks (bitmasks) covering all atoms of a space."""

    space: FiniteMeasureSpace
    blocks: tuple[int, ...]

    def __post_init__(self) -> None:
        blocks = tuple(int(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        n = self.space.natoms
        union = 0
        for b in blocks:
            if b == 0:
                raise ValueError("partition blocks must be nonempty")
            if b < 0 or b >> n:
                raise ValueError("block references atoms outside the space")
            if union & b:
                raise ValueError("partition blocks must be pairwise disjoint")
            union |= b
        if union != (1 << n) - 1:
            raise ValueError("partition blocks must cover all atoms")

    @property
    def nblocks(self) -> int:
        return len(self.blocks)

    def block_of_atom(self) -> np.ndarray:
        out = np.empty(self.space.natoms, dtype=int)
        for k, b in enumerate(self.blocks):
            i = 0
            while b:
                if b & 1:
                    out[i] = k
                b >>= 1
                i += 1
        return out

    def block_indicators(self) -> np.ndarray:
        """(nblocks, natoms) 0/1 matrix."""
        out = np.zeros((self.nblocks, self.space.natoms))
        for k, b in enumerate(self.blocks):
            i = 0
            while b:
                if b & 1:
                    out[k, i] = 1.0
                b >>= 1
                i += 1
        return out

    def to_index_lists(self) -> list[list[int]]:
        return [
            [i for i in range(self.space.natoms) if (b >> i) & 1]
            for b in self.blocks
        ]


def partition_from_lists(
    space: FiniteMeasureSpace, blocks: Sequence[Sequence[int]]
) -> Partition:
    return Partition(space, tuple(sum(1 << i for i in b) for b in blocks))


@dataclass(frozen=True, eq=False)
class CondExpConfig:
    """A probability space (weights normalized to total mass 1) together
    with the partitions fixed by the conditional expectations."""

    space: FiniteMeasureSpace
    partitions: tuple[Partition, ...]

    def __post_init__(self) -> None:
        mass = self.space.total_mass
        if abs(mass - 1.0) > 1e-12:
            space = FiniteMeasureSpace(self.space.weights / mass)
            object.__setattr__(self, "space", space)
            object.__setattr__(
                self,
                "partitions",
                tuple(Partition(space, P.blocks) for P in self.partitions),
            )
        else:
            object.__setattr__(self, "partitions", tuple(self.partitions))
        for P in self.partitions:
            if P.space.natoms != self.space.natoms:
                raise ValueError("partition does not match the space")


def _block_stats(x: ScalarFunction, P: Partition) -> tuple[np.ndarray, np.ndarray]:
    """(integral of x over each block, block masses)."""
    ind = P.block_indicators()
    w = x.space.weights
    return ind @ (x.values * w), ind @ w


def cond_expectation(x: ScalarFunction, P: Partition) -> ScalarFunction:
    """Blockwise average: on each block A the value int_A x dmu / mu(A)."""
    if x.space.natoms != P.space.natoms:
        raise ValueError("function and partition live on different spaces")
    sums, masses = _block_stats(x, P)
    averages = sums / masses
    return ScalarFunction(x.space, averages[P.block_of_atom()])


def c_norm(x: ScalarFunction, P: Partition) -> float:
    """|| E_P |x| ||_inf: the largest blockwise average of |x|."""
    abs_x = ScalarFunction(x.space, np.abs(x.values))
    sums, masses = _block_stats(abs_x, P)
    return float(np.max(sums / masses)) if P.nblocks else 0.0


def multiplication_opnorm(x: ScalarFunction, P: Partition) -> float:
    """Norm of multiplication by x from L_1 of the block algebra to L_1,
    evaluated on normalized block indicators (the extreme points)."""
    best = 0.0
    w = x.space.weights
    for b in P.blocks:
        sel = np.array([(b >> i) & 1 for i in range(x.space.natoms)], dtype=float)
        mass = float(sel @ w)
        image = x.values * (sel / mass)
        best = max(best, float(np.abs(image) @ w))
    return best


def c_bracket_norm(x: ScalarFunction, P: Partition, p: float) -> float:
    """sup over nonempty block unions E of int_E |x| dmu / mu(E)^(1/p').

    With p = inf this is c_norm (the blockwise maximum dominates every
    union average); finite p requires scanning the unions.
    """
    if math.isinf(p):
        return c_norm(x, P)
    if not p > 1.0:
        raise ValueError(f"need p > 1, got {p}")
    check_enum_budget(P.nblocks, "block-union scan")
    sums, masses = _block_stats(
        ScalarFunction(x.space, np.abs(x.values)), P
    )
    inv_conj = 1.0 / conjugate(p)
    best = 0.0
    for m in range(1, 1 << P.nblocks):
        sel = [(m >> k) & 1 for k in range(P.nblocks)]
        num = sum(s for s, take in zip(sums, sel) if take)
        mass = sum(s for s, take in zip(masses, sel) if take)
        best = max(best, num / mass**inv_conj)
    return float(best)


def _union_tables(
    x_weighted: np.ndarray, partitions: Sequence[Partition]
) -> tuple[list[np.ndarray], list[np.ndarray], list[np.ndarray]]:
    """Per partition: per-union atom selectors, masses, and union masks."""
    selectors, masses, masks = [], [], []
    for P in partitions:
        ind = P.block_indicators()
        w = P.space.weights
        block_masses = ind @ w
        n_unions = 1 << P.nblocks
        sel = np.zeros((n_unions, P.space.natoms))
        mass = np.zeros(n_unions)
        mask = np.zeros(n_unions, dtype=object)
        for m in range(1, n_unions):
            low = m & -m
            k = low.bit_length() - 1
            sel[m] = sel[m ^ low] + ind[k]
            mass[m] = mass[m ^ low] + block_masses[k]
            mask[m] = int(mask[m ^ low]) | P.blocks[k]
        selectors.append(sel)
        masses.append(mass)
        masks.append(mask)
    return selectors, masses, masks


def condexp_condition_sup(
    x: ScalarFunction,
    partitions: Sequence[Partition],
    exponents: Sequence[float] | None = None,
) -> tuple[float, tuple[int, ...]]:
    """sup over block-union tuples (E_1..E_n), not all empty, of

        int_{E_1 cap ... cap E_n} |x| dmu / sum_j mu(E_j)^(1/p_j')

    (denominator exponents all 1 when ``exponents`` is omitted).
    Returns the value and the argmax unions as atom masks.
    """
    partitions = tuple(partitions)
    if len(partitions) < 2:
        raise ValueError("need at least two partitions")
    check_enum_budget(
        sum(P.nblocks for P in partitions), "block-union tuple enumeration"
    )
    if exponents is None:
        exps = [1.0] * len(partitions)
    else:
        exps = [1.0 if math.isinf(p) else 1.0 / conjugate(p) for p in exponents]
    v = np.abs(x.values) * x.space.weights
    selectors, masses, masks = _union_tables(v, partitions)
    best = 0.0
    best_masks = (0,) * len(partitions)
    ranges = [range(1 << P.nblocks) for P in partitions]
    for combo in iter_product(*ranges):
        if all(m == 0 for m in combo):
            continue
        sel = selectors[0][combo[0]]
        for j in range(1, len(partitions)):
            sel = sel * selectors[j][combo[j]]
        num = float(sel @ v)
        denom = sum(
            masses[j][m] ** e for j, (m, e) in enumerate(zip(combo, exps))
        )
        value = num / denom
        if value > best:
            best = value
            best_masks = tuple(int(masks[j][m]) if m else 0 for j, m in enumerate(combo))
    return float(best), best_masks


@dataclass(frozen=True)
class CondexpDecomposition:
    value: float
    summands: tuple[ScalarFunction, ...]
    norms: tuple[float, ...]
    lp_value: float


def condexp_decompose(
    x: ScalarFunction,
    partitions: Sequence[Partition],
    exponents: Sequence[float] | None = None,
) -> CondexpDecomposition:
    """Exact inf of sum_j ||x_j|| over x = sum_j x_j with the j-th norm
    taken against partition j.

    Sup-norm flavor (default): one row per block, sum_A w y_j <= s_j mu(A).
    General exponents: one row per block union, with mu(E)^(1/p_j') on the
    right (the union supremum is not determined blockwise for finite p).
    """
    partitions = tuple(partitions)
    if not partitions:
        raise ValueError("need at least one partition")
    for P in partitions:
        if P.space.natoms != x.space.natoms:
            raise ValueError("function and partitions live on different spaces")
    nax = len(partitions)
    if exponents is None:
        exps = [math.inf] * nax
    else:
        exps = [float(p) for p in exponents]
        if len(exps) != nax:
            raise ValueError("one exponent per partition required")

    n = x.space.natoms
    w = x.space.weights
    absx = np.abs(x.values)
    nvars = nax * n + nax
    objective = np.zeros(nvars)
    objective[nax * n :] = 1.0
    rows = [np.hstack([np.eye(n)] * nax + [np.zeros((n, nax))])]
    rels = ["="] * n
    for j, (P, p) in enumerate(zip(partitions, exps)):
        if math.isinf(p):
            candidates = [(b, float(np.asarray(_mask_sel(b, n)) @ w)) for b in P.blocks]
            rhs_exp = 1.0
        else:
            if not p > 1.0:
                raise ValueError(f"need p_j > 1, got {p}")
            check_enum_budget(P.nblocks, "block-union constraint rows")
            candidates = []
            for m in range(1, 1 << P.nblocks):
                mask = 0
                for k in range(P.nblocks):
                    if (m >> k) & 1:
                        mask |= P.blocks[k]
                sel = _mask_sel(mask, n)
                candidates.append((mask, float(sel @ w)))
            rhs_exp = 1.0 / conjugate(p)
        for mask, mass in candidates:
            row = np.zeros(nvars)
            row[j * n : (j + 1) * n] = _mask_sel(mask, n) * w
            row[nax * n + j] = -(mass**rhs_exp)
            rows.append(row.reshape(1, -1))
            rels.append("<=")
    coeffs = np.vstack(rows)
    rhs = np.concatenate([absx, np.zeros(coeffs.shape[0] - n)])
    model = LPModel(
        objective=objective,
        coeffs=coeffs,
        rels=tuple(rels),
        rhs=rhs,
        lower=np.zeros(nvars),
        upper=np.full(nvars, np.inf),
    )
    sol = solve_lp(model)
    sign = np.sign(x.values)
    summands = tuple(
        ScalarFunction(x.space, sign * np.maximum(sol.x[j * n : (j + 1) * n], 0.0))
        for j in range(nax)
    )
    norms = tuple(
        c_norm(s, P) if math.isinf(p) else c_bracket_norm(s, P, p)
        for s, P, p in zip(summands, partitions, exps)
    )
    return CondexpDecomposition(
        value=float(sum(norms)),
        summands=summands,
        norms=norms,
        lp_value=float(sol.value),
    )


def _mask_sel(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=float)


def coordinate_partitions(product: ProductSpace) -> tuple[Partition, ...]:
    """Partitions of the flattened product by each coordinate (C order)."""
    shape = product.shape
    total = int(np.prod(shape))
    flat_space = flatten_space(product)
    partitions = []
    idx = np.arange(total).reshape(shape)
    for axis, n in enumerate(shape):
        blocks = []
        for a in range(n):
            cells = np.take(idx, a, axis=axis).ravel()
            blocks.append(int(sum(1 << int(c) for c in cells)))
        partitions.append(Partition(flat_space, tuple(blocks)))
    return tuple(partitions)


def flatten_space(product: ProductSpace) -> FiniteMeasureSpace:
    return FiniteMeasureSpace(product.weight_tensor.ravel())


def flatten_kernel(entries: np.ndarray, product: ProductSpace) -> ScalarFunction:
    return ScalarFunction(flatten_space(product), np.asarray(entries).ravel())
