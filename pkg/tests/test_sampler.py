import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irg.errors import IRGInputError
from irg.kernel import Block, Constant, Counterexample, Scaled, TorusBand, TorusProfile, evaluate
from irg.sampler import (
    SampledGraph,
    degree_sequence,
    density_scale,
    edge_probability,
    read_edge_list,
    resolve_mode,
    sample_edges,
    sample_graph,
    write_edge_list,
)
from irg.space import FiniteWeighted, UnitInterval, UnitTorus


def test_edge_probability_examples():
    assert edge_probability(Constant(0.0), 0.1, 0.2, 100) == 0.0
    assert edge_probability(Constant(1e6), 0.1, 0.2, 10) == 1.0
    with mpmath.workdps(30):
        ref = float(mpmath.log(100) / 100)
    assert edge_probability(Constant(1.0), 0.1, 0.2, 100) == pytest.approx(ref, rel=1e-15)


def test_density_scale_needs_two_vertices():
    with pytest.raises(IRGInputError):
        density_scale(1)


@given(st.floats(0, 5), st.floats(0, 5), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_edge_probability_monotone_in_scale(t1, t2, x, y):
    lo, hi = sorted((t1, t2))
    k = Counterexample(1.0)
    assert edge_probability(Scaled(k, lo), x, y, 50) <= edge_probability(Scaled(k, hi), x, y, 50)


def test_zero_kernel_gives_empty_graph():
    g = sample_graph(UnitInterval(), Constant(0.0), 50, seed=3)
    assert g.n == 50 and g.num_edges == 0


@pytest.mark.parametrize("mode", ["naive", "accelerated"])
def test_huge_kernel_gives_complete_graph(mode):
    g = sample_graph(UnitInterval(), Constant(1e6), 5, seed=3, mode=mode)
    assert g.num_edges == 10
    assert degree_sequence(g).tolist() == [4] * 5


def test_single_vertex_graph():
    g = sample_graph(UnitTorus(), TorusBand(2.0, 0.1), 1, seed=0)
    assert g.n == 1 and g.num_edges == 0 and len(g.positions) == 1


def test_degree_sequences():
    space, k = UnitInterval(), Constant(1.0)
    empty = SampledGraph(3, np.zeros(3), np.empty((0, 2)), 0, k, space)
    path = SampledGraph(3, np.zeros(3), [(1, 2), (2, 3)], 0, k, space)
    assert degree_sequence(empty).tolist() == [0, 0, 0]
    assert degree_sequence(path).tolist() == [1, 2, 1]


GRAPH_CASES = [
    (UnitInterval(), Constant(2.0), "naive"),
    (UnitInterval(), Constant(2.0), "accelerated"),
    (UnitTorus(), TorusProfile([0.05, 0.2], [8.0, 2.0, 0.5]), "accelerated"),
    (FiniteWeighted([0.3, 0.7]), Block([[3.0, 0.5], [0.5, 1.0]]), "naive"),
    (UnitInterval(), Counterexample(4.0), "naive"),
    (UnitInterval(), Counterexample(4.0), "banded"),
]


@pytest.mark.parametrize("space,kernel,mode", GRAPH_CASES)
def test_edges_are_valid_and_sorted(space, kernel, mode):
    g = sample_graph(space, kernel, 300, seed=17, mode=mode)
    e = g.edges
    assert np.all(e[:, 0] < e[:, 1])
    assert e.min() >= 1 and e.max() <= g.n
    keys = e[:, 0] * (g.n + 1) + e[:, 1]
    assert np.all(np.diff(keys) > 0)
    assert degree_sequence(g).sum() == 2 * g.num_edges


@pytest.mark.parametrize("space,kernel,mode", GRAPH_CASES)
def test_regeneration_is_bit_exact(space, kernel, mode):
    a = sample_graph(space, kernel, 200, seed=2**63 + 5, mode=mode)
    b = sample_graph(space, kernel, 200, seed=2**63 + 5, mode=mode)
    assert a.same_as(b)
    c = sample_graph(space, kernel, 200, seed=2**63 + 6, mode=mode)
    assert not np.array_equal(a.positions, c.positions)


def test_positions_do_not_depend_on_mode():
    a = sample_graph(UnitInterval(), Constant(2.0), 100, seed=9, mode="naive")
    b = sample_graph(UnitInterval(), Constant(2.0), 100, seed=9, mode="accelerated")
    assert np.array_equal(a.positions, b.positions)


MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _fmix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _mix(seed, key):
    return _fmix(_fmix(seed) ^ _fmix((key + GOLDEN) & MASK))


def _unit(seed, k):
    return (_fmix((seed + (k + 1) * GOLDEN) & MASK) >> 11) * 2.0**-53


def test_naive_mode_matches_documented_stream_layout():
    # positions: stream mix(seed, 0); pair draws: stream mix(seed, 1), one per pair in (i, j) order
    n, seed, c = 40, 12345, 3.0
    pos = [_unit(_mix(seed, 0), k) for k in range(n)]
    pair_seed = _mix(seed, 1)
    p = c * math.log(n) / n
    expected, k = [], 0
    for i in range(n):
        for j in range(i + 1, n):
            if _unit(pair_seed, k) < p:
                expected.append([i + 1, j + 1])
            k += 1
    g = sample_graph(UnitInterval(), Constant(c), n, seed=seed, mode="naive")
    assert g.positions.tolist() == pos
    assert g.edges.tolist() == expected


def test_mean_edge_count_matches_binomial():
    n, reps = 1000, 500
    p = math.log(n) / n
    pairs = n * (n - 1) // 2
    counts = [sample_graph(UnitInterval(), Constant(1.0), n, seed=s).num_edges for s in range(reps)]
    sigma = math.sqrt(pairs * p * (1 - p))
    assert pairs * p == pytest.approx(3450.4, abs=0.1)
    assert abs(np.mean(counts) - pairs * p) <= 3 * sigma / math.sqrt(reps)
    assert np.std(counts, ddof=1) == pytest.approx(sigma, rel=0.15)


def _edge_counts(space, kernel, n, mode, seeds):
    return np.array([sample_graph(space, kernel, n, seed=s, mode=mode).num_edges for s in seeds])


def test_naive_and_accelerated_agree_in_distribution():
    a = _edge_counts(UnitInterval(), Constant(2.0), 200, "naive", range(2000))
    b = _edge_counts(UnitInterval(), Constant(2.0), 200, "accelerated", range(2000, 4000))
    pooled = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    assert abs(a.mean() - b.mean()) < 3 * pooled


def test_profile_modes_agree_in_distribution():
    k = TorusProfile([0.05, 0.2], [8.0, 2.0, 0.5])
    a = _edge_counts(UnitTorus(), k, 150, "naive", range(1500))
    b = _edge_counts(UnitTorus(), k, 150, "accelerated", range(1500, 3000))
    pooled = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    assert abs(a.mean() - b.mean()) < 3 * pooled


def test_banded_and_naive_agree_in_distribution():
    k = Counterexample(4.0)
    a = _edge_counts(UnitInterval(), k, 300, "naive", range(1500))
    b = _edge_counts(UnitInterval(), k, 300, "banded", range(1500, 3000))
    pooled = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    assert abs(a.mean() - b.mean()) < 3 * pooled


def test_banded_pair_marginals_match_given_positions():
    # same positions, many edge resamplings: each pair's frequency against min(1, K p_n)
    n, reps = 40, 4000
    k = Counterexample(6.0)
    pos = np.sort(np.random.default_rng(5).random(n))
    pos[3] = pos[4]  # an exact tie exercises the direct-draw path
    p = np.minimum(1.0, np.array([[evaluate(k, pos[i], pos[j]) for j in range(n)] for i in range(n)]) * density_scale(n))
    freq = np.zeros((n, n))
    for s in range(reps):
        e = sample_edges(k, pos, seed=s, mode="banded") - 1
        freq[e[:, 0], e[:, 1]] += 1
    iu = np.triu_indices(n, 1)
    f, q = freq[iu] / reps, p[iu]
    se = np.sqrt(np.maximum(q * (1 - q), 1e-12) / reps)
    assert np.all(f[q == 0] == 0)
    assert np.all(f[q == 1] == 1)
    mid = (q > 0) & (q < 1)
    z = (f[mid] - q[mid]) / se[mid]
    assert np.max(np.abs(z)) < 5
    assert abs(z.mean()) < 3 / math.sqrt(mid.sum())


@pytest.mark.parametrize("mode", ["naive", "accelerated"])
def test_conditional_independence_of_pairs(mode):
    # positions fixed; 100 disjoint pairs of vertex pairs; covariance of their indicators
    n, reps = 30, 5000
    k = TorusBand(4.0, 0.5)
    pos = np.random.default_rng(3).random(n)
    iu = list(zip(*np.triu_indices(n, 1)))
    rng = np.random.default_rng(4)
    pick = rng.permutation(len(iu))[:200]
    a_pairs, b_pairs = pick[:100], pick[100:]
    idx = {pair: t for t, pair in enumerate(iu)}
    ind = np.zeros((reps, len(iu)), dtype=bool)
    for s in range(reps):
        e = sample_edges(k, pos, seed=s, mode=mode) - 1
        ind[s, [idx[(i, j)] for i, j in e.tolist()]] = True
    p = 4.0 * density_scale(n)
    z = []
    for a, b in zip(a_pairs, b_pairs):
        cov = np.mean(ind[:, a] & ind[:, b]) - ind[:, a].mean() * ind[:, b].mean()
        z.append(cov / (p * (1 - p) / math.sqrt(reps)))
    z = np.array(z)
    assert abs(z.sum() / math.sqrt(len(z))) < 3
    assert np.max(np.abs(z)) < 4.5


def test_accelerated_falls_back_for_unbounded_kernel():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        g = sample_graph(UnitInterval(), Counterexample(4.0), 50, seed=1, mode="accelerated")
    assert g.mode == "naive"
    assert any("naive" in str(w.message) for w in caught)
    assert g.same_as(sample_graph(UnitInterval(), Counterexample(4.0), 50, seed=1, mode="naive"))


def test_mode_resolution():
    assert resolve_mode(Constant(1.0), "auto") == "accelerated"
    assert resolve_mode(Counterexample(1.0), "auto") == "banded"
    assert resolve_mode(Scaled(Counterexample(1.0), 2.0), "auto") == "banded"
    with pytest.raises(IRGInputError):
        resolve_mode(Constant(1.0), "banded")
    with pytest.raises(IRGInputError):
        resolve_mode(Constant(1.0), "turbo")


def test_kernel_space_mismatch_rejected():
    with pytest.raises(IRGInputError):
        sample_graph(FiniteWeighted([0.5, 0.5]), Block([[1.0]]), 10, seed=0)
    with pytest.raises(IRGInputError):
        sample_graph(UnitInterval(), Constant(1.0), 0, seed=0)


# ---------------------------------------------------------------- edge-list files


@pytest.mark.parametrize("space,kernel,mode", GRAPH_CASES)
def test_edge_list_round_trip(tmp_path, space, kernel, mode):
    g = sample_graph(space, kernel, 120, seed=77, mode=mode)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    h = read_edge_list(path)
    assert h.same_as(g)
    assert h.kernel == g.kernel and h.space == g.space and h.mode == g.mode


def test_edge_list_layout(tmp_path):
    g = sample_graph(UnitInterval(), Constant(3.0), 10, seed=4)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "#irg v1"
    assert [ln.split()[0] for ln in lines[1:5]] == ["#space", "#kernel", "#n", "#seed"]
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body == [f"{i} {j}" for i, j in g.edges.tolist()]
    assert sum(ln.startswith("#pos ") for ln in lines) == 10


@pytest.mark.parametrize(
    "text",
    [
        "nothing\n",
        "#irg v1\n#space {\"type\":\"interval\"}\n#n 3\n#seed 1\n",
        '#irg v1\n#space {"type":"interval"}\n#kernel {"type":"constant","c":1}\n#n 3\n#seed 1\n2 1\n',
        '#irg v1\n#space {"type":"interval"}\n#kernel {"type":"constant","c":1}\n#n 3\n#seed 1\n1 4\n',
        '#irg v1\n#space {"type":"interval"}\n#kernel {"type":"constant","c":1}\n#n 3\n#seed 1\n1 2 3\n',
    ],
)
def test_malformed_edge_lists_rejected(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(IRGInputError):
        read_edge_list(path)
