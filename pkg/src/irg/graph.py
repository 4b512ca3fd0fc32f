"""Component analysis: union-find components, size spectrum N_k, isolated counts N and N_B."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _native
from .errors import IRGInputError
from .sampler import SampledGraph


@dataclass(frozen=True)
class ComponentSummary:
    n: int
    component_sizes: tuple[int, ...]  # descending
    is_connected: bool
    isolated_total: int
    size_spectrum: dict[int, int]
    isolated_in_region: int | None = None

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "connected": self.is_connected,
            "sizes": list(self.component_sizes),
            "isolated": self.isolated_total,
            "spectrum": {str(k): v for k, v in sorted(self.size_spectrum.items())},
        }
        if self.isolated_in_region is not None:
            d["isolated_in_region"] = self.isolated_in_region
        return d


def component_labels(n: int, edges0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Root label per vertex and component size per root (0-based edges)."""
    edges0 = np.ascontiguousarray(edges0, dtype=np.int64).reshape(-1, 2)
    if len(edges0) and (edges0.min() < 0 or edges0.max() >= n):
        raise IRGInputError("edge endpoint outside 1..n")
    return _native.union_find_labels(n, edges0)


def summarize(n: int, edges0: np.ndarray) -> ComponentSummary:
    if n < 1:
        raise IRGInputError("graphs need at least one vertex")
    labels, size = component_labels(n, edges0)
    roots = np.flatnonzero(labels == np.arange(n))
    sizes = np.sort(size[roots])[::-1]
    spectrum = Counter(sizes.tolist())
    return ComponentSummary(
        n=n,
        component_sizes=tuple(sizes.tolist()),
        is_connected=len(roots) == 1,
        isolated_total=spectrum.get(1, 0),
        size_spectrum=dict(spectrum),
    )


def connected_components(g: SampledGraph, region: Callable | None = None) -> ComponentSummary:
    s = summarize(g.n, g.edges0())
    if region is None:
        return s
    return ComponentSummary(
        s.n, s.component_sizes, s.is_connected, s.isolated_total, s.size_spectrum, isolated_in_region(g, region)
    )


def isolated_in_region(g: SampledGraph, region: Callable) -> int:
    """N_B: vertices of degree 0 whose position satisfies ``region``."""
    deg = np.bincount(g.edges0().ravel(), minlength=g.n)
    return sum(1 for k in np.flatnonzero(deg == 0) if region(g.positions[k]))


def min_component_size(summary: ComponentSummary) -> int:
    if summary.n < 1 or not summary.component_sizes:
        raise IRGInputError("empty summary")
    return summary.component_sizes[-1]


def parse_region(text: str) -> Callable[[float], bool]:
    """``"x<t"``, ``"x<=t"``, ``"x>t"``, ``"x>=t"`` -> predicate."""
    t = text.replace(" ", "")
    for op, fn in (("<=", lambda a, b: a <= b), (">=", lambda a, b: a >= b),
                   ("<", lambda a, b: a < b), (">", lambda a, b: a > b)):
        if t.startswith("x" + op):
            try:
                bound = float(t[len(op) + 1:])
            except ValueError:
                break
            return lambda x: fn(float(x), bound)
    raise IRGInputError(f"cannot parse region {text!r}; expected e.g. 'x<0.5'")
