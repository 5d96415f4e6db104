"""Problem instances: JSON schema, deterministic serialization, seeded
random generation.

Schema
------
    {"mu": [{"weights": [...]}, ...],
     "f": nested arrays (one nesting level per space),
     "q": 1.0,
     "p": [2, "inf"],
     "theta": 0.5,                      # optional
     "partitions": [[[0, 1], [2, 3]]],  # optional, atom-index lists
     "gauges": [{"kind": "power", "gamma": 0.5}, ...]}  # optional

"inf" encodes an infinite exponent.  Serialization is canonical: fixed
key order, floats rendered with 17 significant digits, so identical
instances produce identical bytes (and hashes).
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .condexp import Partition, partition_from_lists
from .lorentz import ScalarFunction
from .measure import FiniteMeasureSpace, ProductSpace
from .rectangle import GaugeFunction, KernelMatrix

__all__ = [
    "Instance",
    "dump_json",
    "format_float",
    "gen_random",
    "parse_shape",
]

_SPARSE_RE = re.compile(r"^sparse[:(]([0-9.eE+-]+)\)?$")


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(float(x), ".17g")


def dump_json(obj: Any) -> str:
    """Canonical JSON: insertion-ordered keys, 17-significant-digit floats."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = ",".join(f"{json.dumps(str(k))}:{dump_json(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dump_json(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dump_json(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode_exponent(p: float) -> Any:
    return "inf" if math.isinf(p) else float(p)


def _decode_exponent(raw: Any) -> float:
    if raw == "inf":
        return math.inf
    return float(raw)


@dataclass(frozen=True, eq=False)
class Instance:
    """A kernel or scalar function with its spaces and exponent config."""

    spaces: tuple[FiniteMeasureSpace, ...]
    f: np.ndarray
    q: float = 1.0
    p: tuple[float, ...] = field(default=())
    theta: float | None = None
    partitions: tuple[tuple[tuple[int, ...], ...], ...] | None = None
    gauges: tuple[GaugeFunction, ...] | None = None

    def __post_init__(self) -> None:
        spaces = tuple(self.spaces)
        object.__setattr__(self, "spaces", spaces)
        f = np.asarray(self.f, dtype=float)
        expected = tuple(s.natoms for s in spaces)
        if f.shape != expected:
            raise ValueError(f"f has shape {f.shape}, spaces expect {expected}")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "f", f)
        p = tuple(float(x) for x in self.p) or tuple(math.inf for _ in spaces)
        if len(p) != len(spaces):
            raise ValueError("one exponent per space required")
        object.__setattr__(self, "p", p)
        if not self.q > 0.0:
            raise ValueError(f"q must be positive, got {self.q}")
        if self.theta is not None and not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.partitions is not None:
            if len(spaces) != 1:
                raise ValueError("partitions require a single-space instance")
            object.__setattr__(
                self,
                "partitions",
                tuple(
                    tuple(tuple(int(i) for i in block) for block in part)
                    for part in self.partitions
                ),
            )
            self.to_partitions()  # validate eagerly

    @property
    def naxes(self) -> int:
        return len(self.spaces)

    def kernel(self) -> KernelMatrix:
        if self.naxes < 2:
            raise ValueError("a kernel instance needs at least two spaces")
        return KernelMatrix(ProductSpace(self.spaces), self.f)

    def scalar(self) -> ScalarFunction:
        if self.naxes != 1:
            raise ValueError("a scalar instance needs exactly one space")
        return ScalarFunction(self.spaces[0], self.f)

    def to_partitions(self) -> tuple[Partition, ...]:
        if self.partitions is None:
            raise ValueError("instance carries no partitions")
        return tuple(
            partition_from_lists(self.spaces[0], part) for part in self.partitions
        )

    def to_json_obj(self) -> dict:
        obj: dict[str, Any] = {
            "mu": [s.to_json_fragment() for s in self.spaces],
            "f": self.f.tolist(),
            "q": float(self.q),
            "p": [_encode_exponent(x) for x in self.p],
        }
        if self.theta is not None:
            obj["theta"] = float(self.theta)
        if self.partitions is not None:
            obj["partitions"] = [
                [list(block) for block in part] for part in self.partitions
            ]
        if self.gauges is not None:
            obj["gauges"] = [g.to_json_fragment() for g in self.gauges]
        return obj

    def to_json(self) -> str:
        return dump_json(self.to_json_obj())

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Instance":
        try:
            spaces = tuple(
                FiniteMeasureSpace(np.asarray(frag["weights"], dtype=float))
                for frag in obj["mu"]
            )
            f = np.asarray(obj["f"], dtype=float)
            q = float(obj.get("q", 1.0))
            p = tuple(_decode_exponent(x) for x in obj.get("p", []))
            theta = obj.get("theta")
            partitions = obj.get("partitions")
            gauges_raw = obj.get("gauges")
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed instance: {exc}") from exc
        gauges = None
        if gauges_raw is not None:
            gauges = tuple(_gauge_from_fragment(g) for g in gauges_raw)
        return cls(
            spaces=spaces,
            f=f,
            q=q,
            p=p,
            theta=None if theta is None else float(theta),
            partitions=None
            if partitions is None
            else tuple(tuple(tuple(block) for block in part) for part in partitions),
            gauges=gauges,
        )

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed instance JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ValueError("instance JSON must be an object")
        return cls.from_json_obj(obj)


def _gauge_from_fragment(frag: dict) -> GaugeFunction:
    kind = frag.get("kind")
    if kind == "power":
        return GaugeFunction.power(float(frag["gamma"]))
    if kind == "pwl":
        return GaugeFunction.piecewise_linear(
            [(float(x), float(y)) for x, y in frag["points"]],
            tail_slope=float(frag.get("tail_slope", 0.0)),
        )
    raise ValueError(f"unknown gauge kind {kind!r}")


def parse_shape(spec: str | int | Sequence[int]) -> tuple[int, ...]:
    """'6x4' -> (6, 4); '8' or 8 -> (8,); sequences pass through."""
    if isinstance(spec, int):
        return (spec,)
    if isinstance(spec, str):
        parts = spec.lower().split("x")
        return tuple(int(x) for x in parts)
    return tuple(int(x) for x in spec)


def gen_random(
    seed: int | Sequence[int],
    shape: str | int | Sequence[int],
    distribution: str = "uniform01",
    weights: str = "counting",
    total_mass: float = 1.0,
    partitions: Sequence[int] | None = None,
) -> Instance:
    """Deterministic random instance.

    distribution: uniform01 | exp-tail | sparse:<density>.  exp-tail draws
    heavy-tailed entries (Lomax with unit shape) to stress weak-norm paths.
    weights: counting | dirichlet (dirichlet masses sum to ``total_mass``
    per axis).  Draw order is fixed: axis weights first, then entries,
    then partitions.
    """
    shape = parse_shape(shape)
    if any(n < 1 for n in shape):
        raise ValueError(f"invalid shape {shape}")
    rng = np.random.default_rng(seed)
    axis_spaces = []
    for n in shape:
        if weights == "counting":
            axis_spaces.append(FiniteMeasureSpace(np.ones(n)))
        elif weights == "dirichlet":
            w = rng.dirichlet(np.full(n, 2.0)) * float(total_mass)
            axis_spaces.append(FiniteMeasureSpace(w))
        else:
            raise ValueError(f"unknown weights kind {weights!r}")
    if distribution == "uniform01":
        entries = rng.random(shape)
    elif distribution == "exp-tail":
        entries = rng.pareto(1.0, shape)
    else:
        match = _SPARSE_RE.match(distribution)
        if not match:
            raise ValueError(f"unknown distribution {distribution!r}")
        density = float(match.group(1))
        if not 0.0 <= density <= 1.0:
            raise ValueError(f"sparse density must lie in [0, 1], got {density}")
        keep = rng.random(shape) < density
        entries = np.where(keep, rng.random(shape), 0.0)
    parts = None
    if partitions is not None:
        if len(shape) != 1:
            raise ValueError("partitions require a single-space shape")
        n = shape[0]
        parts = []
        for nblocks in partitions:
            nblocks = int(nblocks)
            if not 1 <= nblocks <= n:
                raise ValueError(f"block count {nblocks} invalid for {n} atoms")
            assignment = np.concatenate(
                [np.arange(nblocks), rng.integers(0, nblocks, n - nblocks)]
            )
            rng.shuffle(assignment)
            parts.append(
                tuple(
                    tuple(int(i) for i in np.nonzero(assignment == k)[0])
                    for k in range(nblocks)
                )
            )
        parts = tuple(parts)
    return Instance(spaces=tuple(axis_spaces), f=entries, partitions=parts)
