"""Dyadic partitions, lower approximation kernels K_m, partition graphs H_m, occupancy checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IRGInputError
from .graph import component_labels
from .kernel import (
    Block,
    Constant,
    Counterexample,
    Kernel,
    Scaled,
    TorusBand,
    TorusProfile,
    _resolve_space,
    evaluate_many,
)
from .sampler import SampledGraph
from .space import Cell, FiniteWeighted, Space, cell_measure

MAX_LEVEL = 20
MAX_DENSE_CELLS = 1 << 12
GRID_SIDE = 64


@dataclass(frozen=True)
class Partition:
    space: Space
    m: int
    cells: tuple[Cell, ...]

    @property
    def size(self) -> int:
        return len(self.cells)

    def measures(self) -> np.ndarray:
        return np.array([cell_measure(self.space, c) for c in self.cells])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([c.lo for c in self.cells]), np.array([c.hi for c in self.cells])

    def cell_of(self, x) -> np.ndarray:
        """Index of the cell holding each point."""
        x = np.asarray(x)
        if isinstance(self.space, FiniteWeighted):
            return x.astype(np.int64)
        return np.minimum((x * (1 << self.m)).astype(np.int64), self.size - 1)


def build_partition(space: Space, m: int) -> Partition:
    """Level-m dyadic intervals [i 2^-m, (i+1) 2^-m), or the atoms of a finite space."""
    if not 1 <= m <= MAX_LEVEL:
        raise IRGInputError(f"partition level must lie in 1..{MAX_LEVEL}, got {m}")
    if isinstance(space, FiniteWeighted):
        cells = tuple(Cell(index=i, lo=float(i), hi=float(i + 1), atoms=(i,)) for i in range(space.size))
    else:
        w = 2.0**-m
        cells = tuple(Cell(index=i, lo=i * w, hi=(i + 1) * w) for i in range(1 << m))
    return Partition(space, m, cells)


# ---------------------------------------------------------------- lower kernels


def _circ(t: np.ndarray) -> np.ndarray:
    return np.abs(t - np.round(t))


def _distance_ranges(lo_i, hi_i, lo_j, hi_j):
    """Circular distances over [lo_i, hi_i) x [lo_j, hi_j): (min, min attained, max, max attained).

    x - y sweeps the open interval (lo_i - hi_j, hi_i - lo_j); the minimum is attained
    only at an interior integer, the maximum only at an interior half-integer.
    """
    a = lo_i[:, None] - hi_j[None, :]
    b = hi_i[:, None] - lo_j[None, :]
    has_int = np.floor(a) + 1.0 < b
    has_half = np.floor(a - 0.5) + 1.5 < b
    ga, gb = _circ(a), _circ(b)
    dmin = np.where(has_int, 0.0, np.minimum(ga, gb))
    dmax = np.where(has_half, 0.5, np.maximum(ga, gb))
    return dmin, has_int, dmax, has_half


def _torus_lower(pieces, lo_i, hi_i, lo_j, hi_j):
    """inf of a piecewise-constant profile h(d) over each cell pair.

    ``pieces`` are (lo, lo_closed, hi, hi_closed, value) intervals of distance.
    """
    dmin, cmin, dmax, cmax = _distance_ranges(lo_i, hi_i, lo_j, hi_j)
    out = np.full(dmin.shape, np.inf)
    for plo, plo_c, phi, phi_c, val in pieces:
        lo = np.maximum(dmin, plo)
        lo_c = np.where(dmin > plo, cmin, np.where(dmin < plo, plo_c, cmin & plo_c))
        hi = np.minimum(dmax, phi)
        hi_c = np.where(dmax < phi, cmax, np.where(dmax > phi, phi_c, cmax & phi_c))
        meets = (lo < hi) | ((lo == hi) & lo_c & hi_c)
        out = np.where(meets, np.minimum(out, val), out)
    return out


def _profile_pieces(kernel: TorusProfile):
    out = []
    for k, (lo, hi, v) in enumerate(kernel.pieces()):
        out.append((lo, k == 0, hi, True, v))
    return out


def _lower_exact(kernel: Kernel, space: Space, lo_i, hi_i, lo_j, hi_j) -> np.ndarray:
    shape = (len(lo_i), len(lo_j))
    if isinstance(kernel, Scaled):
        return kernel.factor * _lower_exact(kernel.base, space, lo_i, hi_i, lo_j, hi_j)
    if isinstance(kernel, Constant):
        return np.full(shape, float(kernel.c))
    if isinstance(kernel, Block):
        mat = np.array([[kernel.entry(i, j) for j in range(kernel.size)] for i in range(kernel.size)])
        return mat[np.ix_(lo_i.astype(int), lo_j.astype(int))]
    if isinstance(kernel, TorusBand):
        pieces = [(0.0, True, kernel.r, True, kernel.c)]
        if kernel.r < 0.5:
            pieces.append((kernel.r, False, 0.5, True, 0.0))
        return _torus_lower(pieces, lo_i, hi_i, lo_j, hi_j)
    if isinstance(kernel, TorusProfile):
        return _torus_lower(_profile_pieces(kernel), lo_i, hi_i, lo_j, hi_j)
    if isinstance(kernel, Counterexample):
        # positive on the box iff no point has min(x, y) < max(x, y) / 2
        zero = (hi_j[None, :] > 2.0 * lo_i[:, None]) | (hi_i[:, None] > 2.0 * lo_j[None, :])
        top = np.maximum(hi_i[:, None], hi_j[None, :])
        return np.where(zero, 0.0, kernel.c / top)
    raise IRGInputError(f"no exact lower kernel for {kernel.kind}")


def _lower_grid(kernel: Kernel, space: Space, lo_i, hi_i, lo_j, hi_j, g: int = GRID_SIDE) -> np.ndarray:
    """Minimum of K over g x g interior sample points per cell pair (approximate)."""
    out = np.empty((len(lo_i), len(lo_j)))
    finite = isinstance(space, FiniteWeighted)
    frac = (np.arange(g) + 0.5) / g
    for a in range(len(lo_i)):
        xs = np.array([lo_i[a]]) if finite else lo_i[a] + (hi_i[a] - lo_i[a]) * frac
        for b in range(len(lo_j)):
            ys = np.array([lo_j[b]]) if finite else lo_j[b] + (hi_j[b] - lo_j[b]) * frac
            out[a, b] = evaluate_many(kernel, xs[:, None], ys[None, :]).min()
    return out


def lower_kernel_matrix(kernel: Kernel, partition: Partition, method: str = "exact") -> np.ndarray:
    """K_m on every cell pair of the partition."""
    kernel.check_space(partition.space)
    if partition.size > MAX_DENSE_CELLS:
        raise IRGInputError(f"dense lower kernels are capped at {MAX_DENSE_CELLS} cells")
    lo, hi = partition.bounds()
    if method == "exact":
        return _lower_exact(kernel, partition.space, lo, hi, lo, hi)
    if method == "grid":
        return _lower_grid(kernel, partition.space, lo, hi, lo, hi)
    raise IRGInputError(f"unknown method {method!r}")


def lower_kernel(kernel: Kernel, partition: Partition, i: int, j: int, method: str = "exact") -> float:
    """inf of K over cell i x cell j; ``method="grid"`` samples 64 x 64 interior points instead."""
    kernel.check_space(partition.space)
    ci, cj = partition.cells[i], partition.cells[j]
    args = (np.array([ci.lo]), np.array([ci.hi]), np.array([cj.lo]), np.array([cj.hi]))
    if method == "exact":
        return float(_lower_exact(kernel, partition.space, *args)[0, 0])
    if method == "grid":
        return float(_lower_grid(kernel, partition.space, *args)[0, 0])
    raise IRGInputError(f"unknown method {method!r}")


def lower_kernel_at(kernel: Kernel, partition: Partition, x, y, matrix: np.ndarray | None = None) -> np.ndarray:
    """K_m(x, y) at arrays of points."""
    if matrix is None:
        matrix = lower_kernel_matrix(kernel, partition)
    return matrix[partition.cell_of(x), partition.cell_of(y)]


# ---------------------------------------------------------------- partition graphs


@dataclass
class PartitionGraph:
    m: int
    partition: Partition
    vertices: tuple[int, ...]  # cells of positive measure
    edges: np.ndarray  # (k, 2) cell indices, i < j, K_m > 0 on the pair
    kernel_inf: np.ndarray  # full cell-pair matrix; diagonal kept but unused for connectivity
    approximate: bool = False
    _main: tuple | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        cells = []
        for c, mu in zip(self.partition.cells, self.partition.measures()):
            d = {"lo": c.lo, "hi": c.hi, "measure": float(mu)}
            if c.atoms:
                d = {"atoms": list(c.atoms), "measure": float(mu)}
            cells.append(d)
        comp, measure = main_component(self)
        return {
            "m": self.m,
            "cells": cells,
            "edges": self.edges.tolist(),
            "main_component": {"cells": list(comp), "measure": measure},
            "approximate": self.approximate,
        }


def build_partition_graph(kernel: Kernel, partition: Partition, method: str = "exact") -> PartitionGraph:
    mat = lower_kernel_matrix(kernel, partition, method)
    mu = partition.measures()
    verts = np.flatnonzero(mu > 0)
    sub = mat[np.ix_(verts, verts)] > 0
    a, b = np.nonzero(np.triu(sub, k=1))
    edges = np.stack([verts[a], verts[b]], axis=1).astype(np.int64)
    return PartitionGraph(partition.m, partition, tuple(int(v) for v in verts), edges, mat, method != "exact")


def _components(pg: PartitionGraph) -> list[tuple[tuple[int, ...], float]]:
    verts = np.array(pg.vertices, dtype=np.int64)
    e = np.searchsorted(verts, pg.edges)
    labels, _ = component_labels(len(verts), e)
    mu = pg.partition.measures()
    comps = []
    for lab in np.unique(labels):
        cells = verts[labels == lab]
        comps.append((tuple(int(c) for c in cells), math.fsum(mu[cells])))
    comps.sort(key=lambda t: (-t[1], t[0][0]))
    return comps


def main_component(pg: PartitionGraph) -> tuple[tuple[int, ...], float]:
    """Connected component of H_m with the largest total cell measure, and that measure."""
    if not pg.vertices:
        raise IRGInputError("partition graph has no cells of positive measure")
    if pg._main is None:
        pg._main = _components(pg)[0]
    return pg._main


@dataclass(frozen=True)
class ProbeReport:
    verdict: str  # "irreducible-compatible" or "reducible-evidence"
    levels: tuple[int, ...]
    covered: tuple[float, ...]
    first_level: int | None
    split: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "levels": list(self.levels),
            "covered_measure": list(self.covered),
            "first_level": self.first_level,
            "split": list(self.split),
        }


def irreducibility_probe(kernel: Kernel, m_max: int = 10, space: Space | None = None) -> ProbeReport:
    """One-sided evidence about irreducibility from the partition graphs H_1..H_m_max.

    Continuous spaces: "irreducible-compatible" when, from some level m0 on, the
    measure left outside the main component is at most 2^(-m/2) at every level up to
    m_max. Finite spaces: when the main component covers everything. Otherwise the
    report is "reducible-evidence" with the component measures at the last level.
    """
    space = _resolve_space(kernel, space)
    if not 1 <= m_max <= MAX_LEVEL:
        raise IRGInputError(f"m_max must lie in 1..{MAX_LEVEL}")
    finite = isinstance(space, FiniteWeighted)
    levels = [1] if finite else list(range(1, m_max + 1))
    covered = []
    comps = []
    for m in levels:
        pg = build_partition_graph(kernel, build_partition(space, m))
        comps = _components(pg)
        covered.append(comps[0][1])
    split = tuple(mu for _, mu in comps)
    if finite:
        ok = 1.0 - covered[0] <= 1e-12
        return ProbeReport(
            "irreducible-compatible" if ok else "reducible-evidence", tuple(levels), tuple(covered),
            1 if ok else None, split,
        )
    first = None
    for m, cov in zip(levels, covered):
        if 1.0 - cov <= 2.0 ** (-m / 2.0):
            first = m if first is None else first
        else:
            first = None
    verdict = "irreducible-compatible" if first is not None else "reducible-evidence"
    return ProbeReport(verdict, tuple(levels), tuple(covered), first, split)


# ---------------------------------------------------------------- occupancy


@dataclass(frozen=True)
class OccupancyRow:
    cell: int
    count: int
    expected: float
    ratio: float
    passes: bool


@dataclass(frozen=True)
class OccupancyReport:
    rows: tuple[OccupancyRow, ...]

    @property
    def all_pass(self) -> bool:
        return all(r.passes for r in self.rows)


def occupancy_check(g: SampledGraph, partition: Partition) -> OccupancyReport:
    """Per positive-measure cell: N(cell), n mu(cell), and whether 1/2 < N / (n mu) < 2."""
    if type(g.space) is not type(partition.space):
        raise IRGInputError("graph and partition live on different spaces")
    counts = np.bincount(partition.cell_of(g.positions), minlength=partition.size)
    rows = []
    for c, mu in zip(partition.cells, partition.measures()):
        if mu <= 0:
            continue
        expected = g.n * mu
        ratio = counts[c.index] / expected
        rows.append(OccupancyRow(c.index, int(counts[c.index]), float(expected), float(ratio), 0.5 < ratio < 2.0))
    return OccupancyReport(tuple(rows))

