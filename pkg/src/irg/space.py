"""Ground spaces (S, mu): finite weighted sets, the unit interval, the unit torus."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from ._shorthand import parse_shorthand
from .errors import IRGInputError
from .rng import RngStream

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class FiniteWeighted:
    weights: tuple[float, ...]
    labels: tuple[str, ...] | None = None
    kind: str = field(default="finite", init=False, repr=False)

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) < 1:
            raise IRGInputError("finite space needs at least one atom")
        if any(not (v >= 0.0) for v in w):
            raise IRGInputError(f"weights must be nonnegative, got {w}")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise IRGInputError(f"weights must sum to 1, got {math.fsum(w)!r}")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(w):
                raise IRGInputError("labels and weights differ in length")
            object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def continuous(self) -> bool:
        return False

    def check_point(self, x) -> int:
        if isinstance(x, (bool, np.bool_)) or not float(x).is_integer():
            raise IRGInputError(f"{x!r} is not an atom index of a finite space")
        i = int(x)
        if not 0 <= i < self.size:
            raise IRGInputError(f"atom index {i} outside 0..{self.size - 1}")
        return i

    def to_dict(self) -> dict:
        d = {"type": "finite", "weights": list(self.weights)}
        if self.labels is not None:
            d["labels"] = list(self.labels)
        return d


@dataclass(frozen=True)
class _Continuous:
    @property
    def continuous(self) -> bool:
        return True

    def check_point(self, x) -> float:
        if isinstance(x, (bool, np.bool_)):
            raise IRGInputError(f"{x!r} is not a coordinate")
        v = float(x)
        if not 0.0 <= v < 1.0:
            raise IRGInputError(f"coordinate {v!r} outside [0, 1)")
        return v

    def to_dict(self) -> dict:
        return {"type": self.kind}


@dataclass(frozen=True)
class UnitInterval(_Continuous):
    kind: str = field(default="interval", init=False, repr=False)


@dataclass(frozen=True)
class UnitTorus(_Continuous):
    kind: str = field(default="torus", init=False, repr=False)


Space = FiniteWeighted | UnitInterval | UnitTorus


@dataclass(frozen=True)
class Cell:
    """A partition cell: a half-open interval [lo, hi) or a set of atoms."""

    index: int
    lo: float = 0.0
    hi: float = 0.0
    atoms: tuple[int, ...] = ()

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        if self.atoms:
            return int(x) in self.atoms
        return self.lo <= x < self.hi


def space_from_dict(d: dict) -> Space:
    kind = d.get("type")
    if kind == "finite":
        return FiniteWeighted(tuple(d["weights"]), tuple(d["labels"]) if d.get("labels") else None)
    if kind == "interval":
        return UnitInterval()
    if kind == "torus":
        return UnitTorus()
    raise IRGInputError(f"unknown space type {kind!r}")


def parse_space(text: str) -> Space:
    """``interval``, ``torus``, ``finite:weights=[0.5,0.5]`` or a JSON object."""
    return space_from_dict(parse_shorthand(text))


def sample_points(space: Space, n: int, rng: RngStream) -> np.ndarray:
    """n i.i.d. draws from mu: int64 atom indices or float64 coordinates in [0, 1)."""
    if n < 0:
        raise IRGInputError("n must be nonnegative")
    u = rng.uniforms(n)
    if isinstance(space, FiniteWeighted):
        w = np.asarray(space.weights)
        cum = np.cumsum(w)
        idx = np.searchsorted(cum, u, side="right")
        # rounding can leave cum[-1] slightly below 1; fold onto the last atom with mass
        last = int(np.flatnonzero(w > 0)[-1])
        return np.minimum(idx, last).astype(np.int64)
    return u


def distance(space: Space, x, y) -> float:
    x = space.check_point(x)
    y = space.check_point(y)
    if isinstance(space, FiniteWeighted):
        return 0.0 if x == y else 1.0
    d = abs(x - y)
    if isinstance(space, UnitTorus):
        return min(d, 1.0 - d)
    return d


def _as_cell(space: Space, cell) -> Cell:
    if isinstance(cell, Cell):
        return cell
    if isinstance(space, FiniteWeighted):
        return Cell(index=-1, atoms=tuple(sorted(int(a) for a in cell)))
    lo, hi = cell
    return Cell(index=-1, lo=float(lo), hi=float(hi))


def cell_measure(space: Space, cell: Cell | Iterable) -> float:
    """mu(cell). Accepts a Cell, a set of atoms (finite) or a (lo, hi) pair."""
    cell = _as_cell(space, cell)
    if isinstance(space, FiniteWeighted):
        if not cell.atoms:
            raise IRGInputError("finite-space cells are sets of atoms")
        for a in cell.atoms:
            space.check_point(a)
        return math.fsum(space.weights[a] for a in set(cell.atoms))
    if cell.atoms or not (0.0 <= cell.lo <= cell.hi <= 1.0):
        raise IRGInputError(f"cell [{cell.lo}, {cell.hi}) is not inside [0, 1)")
    return cell.hi - cell.lo
