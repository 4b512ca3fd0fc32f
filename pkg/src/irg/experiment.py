"""Seeded Monte Carlo: replicated sampling, sweeps over (c, n), score intervals, targeted experiments."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist

import numpy as np

from . import _native
from .bounds import gilbert_connectivity_exact, min_component_fraction
from .errors import IRGInputError, ResourceGuardError
from .kernel import Constant, Counterexample, Kernel, Scaled, isolation_parameter, kernel_from_dict, parse_kernel
from .rng import mix
from .sampler import density_scale, draw_edges0, draw_positions, resolve_mode, sample_graph
from .space import Space, UnitInterval, parse_space, space_from_dict

STATISTICS = ("connected", "isolated", "spectrum", "min_component")
DEFAULT_BUDGET = 1e11  # sum of n^2 * replicates over all cells
CSV_HEADER = ("c", "n", "rep", "seed", "connected", "isolated", "min_comp", "max_comp")
Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Score interval for a binomial proportion."""
    if trials <= 0:
        raise IRGInputError("score interval needs at least one trial")
    p = successes / trials
    z2 = z * z
    centre = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


# ---------------------------------------------------------------- one replicate


@dataclass(frozen=True)
class ReplicateStats:
    connected: bool
    isolated: int
    min_comp: int
    max_comp: int
    sizes: np.ndarray = field(compare=False, repr=False)


def component_sizes(n: int, edges0: np.ndarray) -> np.ndarray:
    labels, size = _native.union_find_labels(n, edges0)
    return size[labels == np.arange(n)]


def replicate(space: Space, kernel: Kernel, n: int, seed: int, mode: str) -> ReplicateStats:
    """Component statistics of one draw; identical to analysing ``sample_graph(space, kernel, n, seed, mode)``."""
    pos = draw_positions(space, n, seed)
    sizes = component_sizes(n, draw_edges0(kernel, pos, seed, mode))
    return ReplicateStats(len(sizes) == 1, int(np.count_nonzero(sizes == 1)), int(sizes.min()), int(sizes.max()), sizes)


# ---------------------------------------------------------------- plans and sweeps


def _coerce_space(v) -> Space:
    return parse_space(v) if isinstance(v, str) else space_from_dict(v)


def _coerce_kernel(v) -> Kernel:
    return parse_kernel(v) if isinstance(v, str) else kernel_from_dict(v)


@dataclass(frozen=True)
class ExperimentPlan:
    space: Space
    base_kernel: Kernel
    scale_grid: tuple[float, ...]
    n_grid: tuple[int, ...]
    replicates: int
    master_seed: int
    statistics: tuple[str, ...] = STATISTICS
    mode: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "scale_grid", tuple(float(c) for c in self.scale_grid))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "statistics", tuple(self.statistics))
        if self.replicates < 1:
            raise IRGInputError("replicates must be >= 1")
        if not self.scale_grid or not self.n_grid:
            raise IRGInputError("scale and size grids must be non-empty")
        if any(not c >= 0 for c in self.scale_grid):
            raise IRGInputError("scales must be >= 0")
        if any(n < 1 for n in self.n_grid):
            raise IRGInputError("sizes must be >= 1")
        unknown = set(self.statistics) - set(STATISTICS)
        if unknown:
            raise IRGInputError(f"unknown statistics {sorted(unknown)}; pick from {STATISTICS}")
        if not 0 <= self.master_seed < 2**64:
            raise IRGInputError("master seed must be a 64-bit unsigned integer")
        self.base_kernel.check_space(self.space)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentPlan:
        def pick(*keys, default=None):
            for k in keys:
                if k in d:
                    return d[k]
            if default is None:
                raise IRGInputError(f"plan is missing {keys[0]!r}")
            return default

        return cls(
            space=_coerce_space(pick("space")),
            base_kernel=_coerce_kernel(pick("kernel", "base_kernel")),
            scale_grid=pick("scales", "scale_grid"),
            n_grid=pick("sizes", "n_grid"),
            replicates=int(pick("replicates")),
            master_seed=int(pick("seed", "master_seed")),
            statistics=pick("statistics", default=STATISTICS),
            mode=pick("mode", default="auto"),
        )

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_dict(),
            "kernel": self.base_kernel.to_dict(),
            "scales": list(self.scale_grid),
            "sizes": list(self.n_grid),
            "replicates": self.replicates,
            "seed": self.master_seed,
            "statistics": list(self.statistics),
            "mode": self.mode,
        }

    def cells(self) -> list[tuple[int, float, int]]:
        """(cell index, c, n) with cell = scale index * len(n_grid) + size index."""
        return [
            (ci * len(self.n_grid) + ni, c, n) for ci, c in enumerate(self.scale_grid) for ni, n in enumerate(self.n_grid)
        ]

    def cost(self) -> float:
        return float(len(self.scale_grid) * sum(n * n for n in self.n_grid) * self.replicates)

    def kernel_at(self, c: float) -> Kernel:
        return Scaled(self.base_kernel, c)


@dataclass(frozen=True, order=True)
class SweepRecord:
    cell: int
    rep: int
    c: float
    n: int
    seed: int
    connected: bool
    isolated: int
    min_comp: int
    max_comp: int

    def csv_row(self) -> list[str]:
        return [
            repr(self.c), str(self.n), str(self.rep), str(self.seed),
            str(int(self.connected)), str(self.isolated), str(self.min_comp), str(self.max_comp),
        ]


def record_seed(master_seed: int, cell: int, rep: int) -> int:
    return mix(master_seed, cell, rep)


def _run_items(space: Space, base: Kernel, mode: str, items: list, want_spectrum: bool):
    out = []
    for cell, c, n, rep, seed in items:
        kernel = Scaled(base, c)
        st = replicate(space, kernel, n, seed, resolve_mode(kernel, mode))
        spectrum = Counter(st.sizes.tolist()) if want_spectrum else None
        out.append((SweepRecord(cell, rep, c, n, seed, st.connected, st.isolated, st.min_comp, st.max_comp), spectrum))
    return out


@dataclass
class CellSummary:
    c: float
    n: int
    replicates: int
    connected: int
    p_connected: float
    ci_low: float
    ci_high: float
    mean_isolated: float
    with_isolated: float
    min_comp_hist: dict[int, int]
    spectrum: dict[int, int] | None = None

    def to_dict(self, statistics=STATISTICS) -> dict:
        d: dict = {"c": self.c, "n": self.n, "replicates": self.replicates}
        if "connected" in statistics:
            d.update(connected=self.connected, p_connected=self.p_connected, ci95=[self.ci_low, self.ci_high])
        if "isolated" in statistics:
            d.update(mean_isolated=self.mean_isolated, fraction_with_isolated=self.with_isolated)
        if "min_component" in statistics:
            d["min_component_histogram"] = {str(k): v for k, v in sorted(self.min_comp_hist.items())}
        if "spectrum" in statistics and self.spectrum is not None:
            d["spectrum"] = {str(k): v for k, v in sorted(self.spectrum.items())}
        return d


@dataclass
class SweepResult:
    plan: ExperimentPlan
    records: list[SweepRecord]
    cells: list[CellSummary]

    def summary_dict(self) -> dict:
        return {"plan": self.plan.to_dict(), "cells": [c.to_dict(self.plan.statistics) for c in self.cells]}


def run_plan(plan: ExperimentPlan, workers: int = 1, budget: float = DEFAULT_BUDGET) -> SweepResult:
    """Run every (c, n, replicate) of the plan. Output does not depend on ``workers``."""
    if plan.cost() > budget:
        raise ResourceGuardError(
            f"plan needs ~{plan.cost():.3g} pair evaluations (sum of n^2 * replicates), budget is {budget:.3g}",
            estimate=plan.cost(),
        )
    want_spectrum = "spectrum" in plan.statistics
    chunks = []
    for cell, c, n in plan.cells():
        items = [(cell, c, n, r, record_seed(plan.master_seed, cell, r)) for r in range(plan.replicates)]
        step = max(1, math.ceil(len(items) / max(1, 4 * workers)))
        chunks += [items[i:i + step] for i in range(0, len(items), step)]
    results = []
    if workers <= 1:
        for ch in chunks:
            results += _run_items(plan.space, plan.base_kernel, plan.mode, ch, want_spectrum)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_items, plan.space, plan.base_kernel, plan.mode, ch, want_spectrum) for ch in chunks
            ]
            for f in futures:
                results += f.result()
    results.sort(key=lambda t: t[0])
    records = [r for r, _ in results]
    summaries = []
    for cell, c, n in plan.cells():
        rows = [(r, s) for r, s in results if r.cell == cell]
        k = sum(r.connected for r, _ in rows)
        lo, hi = wilson_interval(k, len(rows))
        spectrum = None
        if want_spectrum:
            spectrum = Counter()
            for _, s in rows:
                spectrum.update(s)
            spectrum = dict(spectrum)
        summaries.append(
            CellSummary(
                c, n, len(rows), k, k / len(rows), lo, hi,
                float(np.mean([r.isolated for r, _ in rows])),
                float(np.mean([r.isolated > 0 for r, _ in rows])),
                dict(Counter(r.min_comp for r, _ in rows)),
                spectrum,
            )
        )
    return SweepResult(plan, records, summaries)


def rerun_record(plan: ExperimentPlan, record: SweepRecord) -> SweepRecord:
    """Recompute one record from its own seed alone."""
    kernel = plan.kernel_at(record.c)
    st = replicate(plan.space, kernel, record.n, record.seed, resolve_mode(kernel, plan.mode))
    return SweepRecord(
        record.cell, record.rep, record.c, record.n, record.seed, st.connected, st.isolated, st.min_comp, st.max_comp
    )


def record_graph(plan: ExperimentPlan, record: SweepRecord):
    """The full graph behind a record."""
    return sample_graph(plan.space, plan.kernel_at(record.c), record.n, record.seed, plan.mode)


def write_csv(records: list[SweepRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.csv_row())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_summary(result: SweepResult, path) -> None:
    Path(path).write_text(json.dumps(result.summary_dict(), indent=2) + "\n")


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


def write_svg(result: SweepResult, path, width: int = 640, height: int = 400) -> None:
    """Line chart of Pr[connected] against c, one line per n, with 95% score bands."""
    left, right, top, bottom = 60, 120, 20, 50
    pw, ph = width - left - right, height - top - bottom
    cs = sorted({s.c for s in result.cells})
    c0, c1 = (cs[0], cs[-1]) if cs[-1] > cs[0] else (cs[0] - 0.5, cs[0] + 0.5)

    def sx(c):
        return left + (c - c0) / (c1 - c0) * pw

    def sy(p):
        return top + (1.0 - p) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in range(6):
        p = t / 5
        out.append(f'<line x1="{left - 4}" y1="{sy(p):.2f}" x2="{left}" y2="{sy(p):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(p) + 4:.2f}" font-size="11" text-anchor="end">{p:.1f}</text>')
    for c in cs:
        out.append(f'<line x1="{sx(c):.2f}" y1="{top + ph}" x2="{sx(c):.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(c):.2f}" y="{top + ph + 18}" font-size="11" text-anchor="middle">{c:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" font-size="12" text-anchor="middle">c</text>')
    out.append(
        f'<text x="15" y="{top + ph / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 15 {top + ph / 2})">Pr[connected]</text>'
    )
    for k, n in enumerate(sorted({s.n for s in result.cells})):
        colour = _PALETTE[k % len(_PALETTE)]
        pts = sorted((s for s in result.cells if s.n == n), key=lambda s: s.c)
        band = [(sx(s.c), sy(s.ci_high)) for s in pts] + [(sx(s.c), sy(s.ci_low)) for s in reversed(pts)]
        out.append(
            '<polygon points="' + " ".join(f"{x:.2f},{y:.2f}" for x, y in band)
            + f'" fill="{colour}" fill-opacity="0.2" stroke="none"/>'
        )
        line = " ".join(f"{sx(s.c):.2f},{sy(s.p_connected):.2f}" for s in pts)
        out.append(f'<polyline points="{line}" fill="none" stroke="{colour}" stroke-width="2"/>')
        for s in pts:
            out.append(f'<circle cx="{sx(s.c):.2f}" cy="{sy(s.p_connected):.2f}" r="3" fill="{colour}"/>')
        ly = top + 15 + 18 * k
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 35}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 40}" y="{ly + 4}" font-size="11">n={n}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------- targeted experiments


@dataclass(frozen=True)
class CounterexampleReport:
    c: float
    n: int
    replicates: int
    seed: int
    lambda_star: float
    disconnected: int
    event: int
    event_isolated: int
    event_expected: float

    @property
    def disconnected_fraction(self) -> float:
        return self.disconnected / self.replicates

    @property
    def event_fraction(self) -> float:
        return self.event / self.replicates

    @property
    def event_se(self) -> float:
        return binomial_se(self.event_expected, self.replicates)

    @property
    def implication_rate(self) -> float:
        return self.event_isolated / self.event if self.event else math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            disconnected_fraction=self.disconnected_fraction,
            event_fraction=self.event_fraction,
            event_se=self.event_se,
            event_z=(self.event_fraction - self.event_expected) / self.event_se,
            implication_rate=None if self.event == 0 else self.implication_rate,
            limit=math.exp(-2.0),
        )
        return d


def counterexample_experiment(c: float, n: int, replicates: int, seed: int) -> CounterexampleReport:
    """Replicates of the scale-local counterexample kernel with lambda* = c/2 > 1.

    Tracks disconnection, the event that exactly one point lies in [0, 2/n] and it
    lies below 1/n, and whether that point is isolated whenever the event holds.
    """
    if not c / 2.0 > 1.0:
        raise IRGInputError(f"the experiment needs lambda* = c/2 > 1, got c={c}")
    if n < 100:
        raise IRGInputError(f"the experiment needs n >= 100, got {n}")
    if replicates < 1:
        raise IRGInputError("replicates must be >= 1")
    kernel = Counterexample(c)
    space = UnitInterval()
    lam = isolation_parameter(kernel).lambda_star
    disconnected = event = event_isolated = 0
    for r in range(replicates):
        s = mix(seed, r)
        pos = draw_positions(space, n, s)
        e = draw_edges0(kernel, pos, s, "banded")
        sizes = component_sizes(n, e)
        disconnected += len(sizes) > 1
        low = np.flatnonzero(pos <= 2.0 / n)
        if len(low) == 1 and pos[low[0]] < 1.0 / n:
            event += 1
            k = low[0]
            event_isolated += not np.any(e == k)
    expected = (1.0 - 2.0 / n) ** (n - 1)
    return CounterexampleReport(c, n, replicates, seed, lam, disconnected, event, event_isolated, expected)


def window_experiment(n: int, replicates: int, seed: int) -> dict:
    """K = 1 (lambda* = 1): empirical connectivity against the exact recursion and the 1/e limit."""
    if not 2 <= n <= 400:
        raise IRGInputError(f"window experiment needs 2 <= n <= 400 for the exact oracle, got {n}")
    if replicates < 1:
        raise IRGInputError("replicates must be >= 1")
    kernel = Constant(1.0)
    space = UnitInterval()
    mode = resolve_mode(kernel, "auto")
    connected = 0
    iso = np.empty(replicates, dtype=np.int64)
    for r in range(replicates):
        st = replicate(space, kernel, n, mix(seed, r), mode)
        connected += st.connected
        iso[r] = st.isolated
    p_hat = connected / replicates
    exact = gilbert_connectivity_exact(n, min(1.0, density_scale(n)))
    mean, var = float(iso.mean()), float(iso.var(ddof=1)) if replicates > 1 else 0.0
    lo, hi = wilson_interval(connected, replicates)
    return {
        "n": n,
        "replicates": replicates,
        "seed": seed,
        "p_connected": p_hat,
        "ci95": [lo, hi],
        "se": binomial_se(exact, replicates),
        "exact": exact,
        "z": (p_hat - exact) / binomial_se(exact, replicates) if 0 < exact < 1 else None,
        "limit": math.exp(-1.0),
        "gap_to_limit": exact - math.exp(-1.0),
        "isolated": {
            "mean": mean,
            "variance": var,
            "dispersion": var / mean if mean > 0 else None,
            "p_zero": float(np.mean(iso == 0)),
            "poisson_p_zero": math.exp(-mean),
        },
    }


def size_gap_experiment(kernel: Kernel, n: int, replicates: int, seed: int, space: Space | None = None) -> dict:
    """Frequency of a component with size in [2, delta n], delta from the component-size solver."""
    space = kernel.default_space() if space is None else space
    kernel.check_space(space)
    f = isolation_parameter(kernel, space=space)
    if not f.lambda_star > 1.0:
        raise IRGInputError(f"size-gap experiment needs lambda* > 1, got {f.lambda_star}")
    delta = min_component_fraction(f.lambda_star, f.lambda2_sup)
    mode = resolve_mode(kernel, "auto")
    hits = with_isolated = 0
    for r in range(replicates):
        st = replicate(space, kernel, n, mix(seed, r), mode)
        hits += bool(np.any((st.sizes >= 2) & (st.sizes <= delta * n)))
        with_isolated += st.isolated > 0
    return {
        "n": n,
        "replicates": replicates,
        "seed": seed,
        "lambda_star": f.lambda_star,
        "lambda2_sup": f.lambda2_sup,
        "delta": delta,
        "threshold_size": delta * n,
        "frequency": hits / replicates,
        "isolated_frequency": with_isolated / replicates,
    }
