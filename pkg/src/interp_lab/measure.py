"""Finite weighted measure spaces, bitmask subsets, and products.

A subset of a space with ``n`` atoms is an ``int`` bitmask: bit ``i``
selects atom ``i``.  Exhaustive sweeps over subsets are guarded by a
global enumeration limit (log2 of the sweep size), overridable through
the ``INTERP_LAB_ENUM_LIMIT`` environment variable.

Everything here is immutable after construction and safe for concurrent
reads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "DEFAULT_ENUM_LIMIT",
    "ENUM_LIMIT_ENV",
    "EnumerationLimitError",
    "FiniteMeasureSpace",
    "ProductSpace",
    "axis_subset_sums",
    "check_enum_budget",
    "enumerate_subsets",
    "enumeration_limit",
    "full_mask",
    "mask_from_indices",
    "mask_indices",
    "mask_measures",
    "scale_space",
    "subset_measure",
]

DEFAULT_ENUM_LIMIT = 20
ENUM_LIMIT_ENV = "INTERP_LAB_ENUM_LIMIT"


class EnumerationLimitError(RuntimeError):
    """A requested subset sweep exceeds the configured enumeration limit."""


def enumeration_limit() -> int:
    """Current limit on log2(sweep size); env-overridable, default 20."""
    raw = os.environ.get(ENUM_LIMIT_ENV)
    if raw is None:
        return DEFAULT_ENUM_LIMIT
    return int(raw)


def check_enum_budget(bits: int, what: str, limit: int | None = None) -> None:
    """Refuse sweeps of more than 2^limit items with an explicit error."""
    cap = enumeration_limit() if limit is None else limit
    if bits > cap:
        raise EnumerationLimitError(
            f"{what} requires a 2^{bits} sweep but the limit is 2^{cap}; "
            f"raise it via {ENUM_LIMIT_ENV} or use a fast path"
        )


@dataclass(frozen=True, eq=False)
class FiniteMeasureSpace:
    """Atoms 0..n-1 carrying strictly positive weights (measure masses)."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a flat sequence")
        if w.size and (not np.all(np.isfinite(w)) or np.any(w <= 0.0)):
            raise ValueError("all atom weights must be positive and finite")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def natoms(self) -> int:
        return int(self.weights.size)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def equal_weights(self) -> bool:
        return self.natoms > 0 and bool(np.all(self.weights == self.weights[0]))

    def to_json_fragment(self) -> dict:
        return {"weights": [float(w) for w in self.weights]}


def counting_space(n: int) -> FiniteMeasureSpace:
    """n atoms of unit mass."""
    return FiniteMeasureSpace(np.ones(n))


@dataclass(frozen=True, eq=False)
class ProductSpace:
    """Ordered product of finite measure spaces."""

    factors: tuple[FiniteMeasureSpace, ...]

    def __post_init__(self) -> None:
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("a product needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s.natoms for s in self.factors)

    @property
    def naxes(self) -> int:
        return len(self.factors)

    @cached_property
    def weight_tensor(self) -> np.ndarray:
        """Product weight of every cell, shape == self.shape."""
        out = self.factors[0].weights
        for s in self.factors[1:]:
            out = np.multiply.outer(out, s.weights)
        out = np.asarray(out, dtype=float)
        out.flags.writeable = False
        return out


def full_mask(n: int) -> int:
    return (1 << n) - 1


def mask_from_indices(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def mask_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _check_mask(space: FiniteMeasureSpace, mask: int) -> None:
    if mask < 0 or mask >> space.natoms:
        raise IndexError(
            f"mask {mask:#x} references atoms outside a {space.natoms}-atom space"
        )


def subset_measure(space: FiniteMeasureSpace, mask: int) -> float:
    """mu(E) for the subset encoded by ``mask``; 0 for the empty mask."""
    _check_mask(space, mask)
    total = 0.0
    i = 0
    while mask:
        if mask & 1:
            total += float(space.weights[i])
        mask >>= 1
        i += 1
    return total


def scale_space(space: FiniteMeasureSpace, s: float) -> FiniteMeasureSpace:
    """The space with every atom weight multiplied by s > 0."""
    if not (s > 0.0) or not np.isfinite(s):
        raise ValueError(f"scale factor must be positive and finite, got {s}")
    return FiniteMeasureSpace(space.weights * s)


def enumerate_subsets(
    space: FiniteMeasureSpace, limit: int | None = None
) -> Iterator[int]:
    """All 2^n subset masks of ``space`` exactly once, in increasing order."""
    n = space.natoms
    check_enum_budget(n, f"enumerating subsets of a {n}-atom space", limit)
    return iter(range(1 << n))


def mask_measures(space: FiniteMeasureSpace, limit: int | None = None) -> np.ndarray:
    """mu(E) for every mask, as an array indexed by mask."""
    n = space.natoms
    check_enum_budget(n, f"tabulating measures of a {n}-atom space", limit)
    out = np.zeros(1 << n)
    w = space.weights
    for m in range(1, 1 << n):
        low = m & -m
        out[m] = out[m ^ low] + w[low.bit_length() - 1]
    return out


def axis_subset_sums(arr: np.ndarray, axis: int) -> np.ndarray:
    """Replace ``axis`` (length n) by a 2^n axis of subset sums.

    out[..., mask, ...] = sum over atoms i in mask of arr[..., i, ...].
    """
    a = np.moveaxis(np.asarray(arr, dtype=float), axis, 0)
    n = a.shape[0]
    out = np.zeros((1 << n,) + a.shape[1:])
    for m in range(1, 1 << n):
        low = m & -m
        out[m] = out[m ^ low] + a[low.bit_length() - 1]
    return np.moveaxis(out, 0, axis)
