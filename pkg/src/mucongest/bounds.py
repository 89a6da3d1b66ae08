"""Constant-free round bounds for the simulated protocols.

Every entry is plain arithmetic over the scenario parameters.  Logarithms
are base 2 and floored at 1, so a factor like ``log(delta / (mu / M))`` never
turns a positive bound into zero or a negative number.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

from .errors import InvalidParams

FIELDS = ("lb_listing", "ub_listing", "stream_ub", "stream_lb", "oneway_ub", "full_ub", "comp_ub")


def log2_floor1(x: float) -> float:
    return max(1.0, math.log2(x)) if x > 0 else 1.0


@dataclass
class BoundParams:
    n: int
    mu: float
    k: int = 3
    delta: Optional[int] = None
    ell: Optional[int] = None
    model: str = "congest"  # or "all_to_all"
    passes: Optional[int] = None
    M: Optional[int] = None
    items: Optional[int] = None  # |I|
    diameter: Optional[int] = None

    @classmethod
    def from_mapping(cls, d: Mapping) -> "BoundParams":
        fields = cls.__dataclass_fields__
        unknown = set(d) - set(fields)
        if unknown:
            raise InvalidParams(f"unknown bound parameters {sorted(unknown)}")
        return cls(**dict(d))


@dataclass
class BoundTable:
    lb_listing: Optional[float] = None
    ub_listing: Optional[float] = None
    stream_ub: Optional[float] = None
    stream_lb: Optional[float] = None
    oneway_ub: Optional[float] = None
    full_ub: Optional[float] = None
    comp_ub: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def _positive(name, value, allow_none=True):
    if value is None:
        if allow_none:
            return
        raise InvalidParams(f"{name} is required")
    if value <= 0:
        raise InvalidParams(f"{name} must be positive, got {value}")


def compute_bounds(params) -> BoundTable:
    """Evaluate every bound whose inputs are present in ``params``.

    ``ell`` (how many neighbors a node can hear per round) defaults to the
    maximum degree in the bandwidth-limited model and to ``n`` when every
    pair of nodes can talk.
    """
    p = params if isinstance(params, BoundParams) else BoundParams.from_mapping(params)
    _positive("n", p.n, allow_none=False)
    _positive("mu", p.mu, allow_none=False)
    for name in ("delta", "ell", "passes", "M", "items"):
        _positive(name, getattr(p, name))
    if p.diameter is not None and p.diameter < 0:
        raise InvalidParams("diameter must be non-negative")
    if p.k < 3:
        raise InvalidParams("k must be at least 3")
    if p.model not in ("congest", "all_to_all"):
        raise InvalidParams(f"unknown model {p.model!r}")

    n, mu, k = p.n, p.mu, p.k
    ell = p.ell
    if ell is None:
        ell = n if p.model == "all_to_all" else p.delta
    table = BoundTable()
    mu_pow = mu ** (k / 2 - 1)
    table.ub_listing = n ** (k - 2) / mu_pow
    if ell is not None:
        table.lb_listing = n ** (k - 1) / (mu_pow * ell)
    if p.delta is not None and p.passes is not None:
        table.stream_ub = n * (p.delta + p.passes)
        table.stream_lb = n * p.delta * p.passes
    if p.M is not None and p.items is not None:
        M, items = p.M, p.items
        D = p.diameter or 0
        table.oneway_ub = min(n * M, math.sqrt(items * M)) + D
        depth = log2_floor1(min(n * M, items))
        table.comp_ub = depth * (M + D)
        if p.delta is not None:
            table.full_ub = depth * (M * log2_floor1(p.delta / (mu / M)) + D)
    return table
