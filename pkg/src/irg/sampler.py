"""Sampling G(n, K): positions from mu, then each pair independently with min(1, K p_n)."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _native
from .errors import IRGInputError
from .kernel import Kernel, kernel_from_dict
from .rng import RngStream, as_seed, mix
from .space import FiniteWeighted, Space, sample_points, space_from_dict

MODES = ("naive", "accelerated", "banded")

# stream keys under a graph seed
_POSITIONS, _PAIRS, _GAPS, _THINNING = 0, 1, 2, 3


def density_scale(n: int) -> float:
    """p_n = ln(n) / n."""
    if n < 2:
        raise IRGInputError(f"p_n needs n >= 2, got {n}")
    return math.log(n) / n


def edge_probability(kernel: Kernel, x, y, n: int, space: Space | None = None) -> float:
    from .kernel import evaluate

    p_n = density_scale(n)
    return min(1.0, evaluate(kernel, x, y, space) * p_n)


@dataclass(eq=False)
class SampledGraph:
    n: int
    positions: np.ndarray
    edges: np.ndarray  # (m, 2), 1-based, i < j, lexicographically sorted
    seed: int
    kernel: Kernel
    space: Space
    mode: str = "naive"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise IRGInputError("graphs need at least one vertex")
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def edges0(self) -> np.ndarray:
        return self.edges - 1

    def same_as(self, other: SampledGraph) -> bool:
        return (
            self.n == other.n
            and self.seed == other.seed
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.edges, other.edges)
        )


def resolve_mode(kernel: Kernel, mode: str) -> str:
    if mode == "auto":
        if math.isfinite(kernel.sup()):
            return "accelerated"
        return "banded" if kernel.scale_local else "naive"
    if mode not in MODES:
        raise IRGInputError(f"unknown sampling mode {mode!r}; pick one of {MODES + ('auto',)}")
    if mode == "accelerated" and not math.isfinite(kernel.sup()):
        warnings.warn(
            f"{kernel.kind} kernel has no finite supremum; falling back to naive sampling",
            RuntimeWarning,
            stacklevel=3,
        )
        return "naive"
    if mode == "banded" and not kernel.scale_local:
        raise IRGInputError(f"banded sampling needs a scale-local kernel, got {kernel.kind}")
    return mode


def draw_positions(space: Space, n: int, seed: int) -> np.ndarray:
    return sample_points(space, n, RngStream(mix(seed, _POSITIONS)))


def draw_edges0(kernel: Kernel, positions: np.ndarray, seed: int, mode: str) -> np.ndarray:
    """0-based edges, i < j, in the sampler's native order (unsorted for ``banded``).

    ``mode`` must already be resolved.
    """
    n = len(positions)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    code, params = kernel.flat()
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    p_n = density_scale(n)
    if mode == "naive":
        return _native.sample_naive(code, params, pos, p_n, as_seed(mix(seed, _PAIRS)))
    if mode == "accelerated":
        return _native.sample_skip(
            code, params, pos, p_n, float(kernel.sup()), as_seed(mix(seed, _GAPS)), as_seed(mix(seed, _THINNING))
        )
    return _native.sample_banded(code, params, pos, p_n, as_seed(mix(seed, _GAPS)), as_seed(mix(seed, _THINNING)))


def sample_edges(kernel: Kernel, positions: np.ndarray, seed: int, mode: str = "naive") -> np.ndarray:
    """Edge set for fixed positions, drawn from the pair streams of ``seed``. 1-based, sorted."""
    n = len(positions)
    mode = resolve_mode(kernel, mode)
    e = draw_edges0(kernel, positions, seed, mode)
    if mode == "banded" and len(e):
        e = e[np.argsort(e[:, 0] * n + e[:, 1], kind="stable")]
    return e + 1


def sample_graph(space: Space, kernel: Kernel, n: int, seed: int, mode: str = "naive") -> SampledGraph:
    """Draw G(n, K).

    Modes share one distribution: ``naive`` spends one draw per pair in lexicographic
    order; ``accelerated`` skips geometrically at rate min(1, sup K p_n) and thins;
    ``banded`` exploits the local support of scale-local kernels. Output is bit-exact
    per (space, kernel, n, seed, mode).
    """
    if n < 1:
        raise IRGInputError(f"n must be >= 1, got {n}")
    kernel.check_space(space)
    mode = resolve_mode(kernel, mode)
    positions = draw_positions(space, n, seed)
    edges = sample_edges(kernel, positions, seed, mode)
    return SampledGraph(n, positions, edges, int(seed), kernel, space, mode)


def degree_sequence(g: SampledGraph) -> np.ndarray:
    return np.bincount(g.edges0().ravel(), minlength=g.n)


# ---------------------------------------------------------------- edge-list files


def _fmt_pos(space: Space, x) -> str:
    if isinstance(space, FiniteWeighted):
        return str(int(x))
    return repr(float(x))


def write_edge_list(g: SampledGraph, path) -> None:
    lines = [
        "#irg v1",
        "#space " + json.dumps(g.space.to_dict()),
        "#kernel " + json.dumps(g.kernel.to_dict()),
        f"#n {g.n}",
        f"#seed {g.seed}",
        f"#mode {g.mode}",
    ]
    lines += [f"{i} {j}" for i, j in g.edges.tolist()]
    lines += [f"#pos {k + 1} {_fmt_pos(g.space, x)}" for k, x in enumerate(g.positions)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> SampledGraph:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != "#irg v1":
        raise IRGInputError(f"{path}: missing '#irg v1' header")
    header: dict[str, str] = {}
    edges: list[tuple[int, int]] = []
    pos: dict[int, str] = {}
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#pos "):
            _, idx, val = line.split(maxsplit=2)
            pos[int(idx)] = val
        elif line.startswith("#"):
            key, _, val = line[1:].partition(" ")
            header[key] = val
        else:
            parts = line.split()
            if len(parts) != 2:
                raise IRGInputError(f"{path}:{lineno}: expected 'i j'")
            edges.append((int(parts[0]), int(parts[1])))
    for key in ("space", "kernel", "n", "seed"):
        if key not in header:
            raise IRGInputError(f"{path}: missing '#{key}' header")
    space = space_from_dict(json.loads(header["space"]))
    kernel = kernel_from_dict(json.loads(header["kernel"]))
    n = int(header["n"])
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) and (e.min() < 1 or e.max() > n or np.any(e[:, 0] >= e[:, 1])):
        raise IRGInputError(f"{path}: edges must satisfy 1 <= i < j <= n")
    if isinstance(space, FiniteWeighted):
        positions = np.array([int(pos[k]) for k in range(1, n + 1)], dtype=np.int64) if pos else np.zeros(0, np.int64)
    else:
        positions = np.array([float(pos[k]) for k in range(1, n + 1)]) if pos else np.zeros(0)
    return SampledGraph(n, positions, e, int(header["seed"]), kernel, space, header.get("mode", "naive"))
