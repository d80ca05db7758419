import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockspin.graph import (
    BlockGraph,
    GraphSequence,
    block_masks,
    edge_counts,
    gen_graph,
    gen_nested,
    survival_chains,
)


def _empty(n, p=0.5, q=0.5):
    z = np.zeros((n, n), dtype=bool)
    return BlockGraph.from_dense(z, z, p, q)


def test_complete_graph_n4():
    g = gen_graph(4, 1.0, 1.0, seed=7)
    assert edge_counts(g) == (4, 8)
    within, between = block_masks(4)
    assert np.array_equal(g.eps, within)
    assert np.array_equal(g.delta, between)


def test_complete_graph_n6():
    assert edge_counts(gen_graph(6, 1.0, 1.0, seed=0)) == (12, 18)


def test_empty_edge_counts():
    assert edge_counts(_empty(8)) == (0, 0)


@pytest.mark.parametrize("kw", [dict(n=4, p=0.0, q=0.5), dict(n=4, p=0.5, q=1.5),
                                dict(n=5, p=0.5, q=0.5), dict(n=0, p=0.5, q=0.5),
                                dict(n=4, p=-0.1, q=0.5)])
def test_invalid_arguments(kw):
    with pytest.raises(ValueError):
        gen_graph(seed=0, **kw)


def test_large_graph_counts_within_four_sd():
    # binomial oracle: within pairs 2*500*499, between pairs 2*500*500
    g = gen_graph(1000, 0.5, 0.25, seed=42)
    within, between = edge_counts(g)
    n_w, n_b = 2 * 500 * 499, 2 * 500 * 500
    assert abs(within - 0.5 * n_w) <= 4 * np.sqrt(n_w * 0.25)
    assert abs(between - 0.25 * n_b) <= 4 * np.sqrt(n_b * 0.25 * 0.75)


@settings(max_examples=40, deadline=None)
@given(half=st.integers(1, 40), p=st.floats(0.01, 1.0), q=st.floats(0.01, 1.0),
       seed=st.integers(0, 2 ** 63 - 1), directed=st.booleans())
def test_structure_invariants(half, p, q, seed, directed):
    n = 2 * half
    g = gen_graph(n, p, q, seed, directed=directed)
    within, between = block_masks(n)
    assert not np.any(np.diag(g.eps))
    assert not np.any(g.eps & ~within)
    assert not np.any(g.delta & ~between)
    if not directed:
        assert np.array_equal(g.eps, g.eps.T)
        assert np.array_equal(g.delta, g.delta.T)
    again = gen_graph(n, p, q, seed, directed=directed)
    assert again.to_json() == g.to_json()


def test_edge_frequency_over_seeds():
    n, p, q, seeds = 6, 0.3, 0.7, 10_000
    within, between = block_masks(n)
    acc_w = acc_b = 0
    for s in range(seeds):
        g = gen_graph(n, p, q, s)
        acc_w += int(g.eps.sum())
        acc_b += int(g.delta.sum())
    pairs_w, pairs_b = int(within.sum()), int(between.sum())
    assert abs(acc_w / (seeds * pairs_w) - p) < 5 / np.sqrt(seeds * pairs_w)
    assert abs(acc_b / (seeds * pairs_b) - q) < 5 / np.sqrt(seeds * pairs_b)


def test_directed_graph_is_asymmetric():
    g = gen_graph(40, 0.5, 0.5, seed=3)
    assert np.any(g.eps != g.eps.T)


def test_serialization_round_trip(tmp_path):
    g = gen_graph(14, 0.6, 0.3, seed=11, directed=False)
    path = tmp_path / "g.json"
    g.save(path)
    h = BlockGraph.load(path)
    assert (h.n, h.p, h.q, h.seed, h.directed) == (g.n, g.p, g.q, g.seed, g.directed)
    assert np.array_equal(h.eps, g.eps) and np.array_equal(h.delta, g.delta)
    header = json.loads(path.read_text())
    assert header["format_version"] == 1
    assert {"n", "p", "q", "seed", "directed", "eps", "delta"} <= set(header)


def test_from_dense_rejects_bad_structure():
    n = 4
    eps = np.zeros((n, n), dtype=bool)
    delta = np.zeros((n, n), dtype=bool)
    bad = eps.copy()
    bad[0, 0] = True
    with pytest.raises(ValueError):
        BlockGraph.from_dense(bad, delta, 0.5, 0.5)
    bad = eps.copy()
    bad[0, 3] = True
    with pytest.raises(ValueError):
        BlockGraph.from_dense(bad, delta, 0.5, 0.5)
    bad = delta.copy()
    bad[0, 1] = True
    with pytest.raises(ValueError):
        BlockGraph.from_dense(eps, bad, 0.5, 0.5)
    bad = delta.copy()
    bad[0, 2] = True
    with pytest.raises(ValueError):
        BlockGraph.from_dense(eps, bad, 0.5, 0.5, directed=False)


def test_kernel_words_match_dense_rows():
    g = gen_graph(150, 0.4, 0.2, seed=5)
    kw = g.kernel_words
    half = g.half
    words = kw.words
    for i in (0, 74, 75, 149):
        bits = np.unpackbits(kw.out[i].view(np.uint8), bitorder="little")
        row = g.eps[i] | g.delta[i]
        got = np.concatenate([bits[:half], bits[64 * words: 64 * words + half]])
        assert np.array_equal(got.astype(bool), row)


# nested sequences

def test_sequence_validation():
    with pytest.raises(ValueError):
        GraphSequence((1.0, 0.5, 0.6), (1.0,) * 3, seed=0)
    with pytest.raises(ValueError):
        GraphSequence((0.9, 0.5), (1.0, 1.0), seed=0)
    seq = GraphSequence((1.0, 0.5), (1.0, 1.0), seed=0)
    with pytest.raises(ValueError):
        gen_nested(seq, 4)


def test_constant_sequence_gives_complete_graphs():
    seq = GraphSequence((1.0,) * 8, (1.0,) * 8, seed=1)
    for g in gen_nested(seq, 8):
        within, between = block_masks(g.n)
        assert np.array_equal(g.eps, within) and np.array_equal(g.delta, between)


def test_single_pair_half_survival():
    hits = 0
    for s in range(4000):
        hits += int(survival_chains([1.0, 0.5], (1,), np.random.default_rng(s))[1, 0])
    assert abs(hits / 4000 - 0.5) < 4 * np.sqrt(0.25 / 4000)


def test_three_level_marginal():
    # 1e5 independent chains with schedule (1, 0.8, 0.4)
    states = survival_chains([1.0, 0.8, 0.4], (100_000,), np.random.default_rng(2024))
    assert abs(states[2].mean() - 0.4) < 0.01
    assert not np.any(states[2] & ~states[1])
    assert not np.any(states[1] & ~states[0])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32), directed=st.booleans())
def test_nested_monotone(seed, directed):
    p_seq = (1.0, 1.0, 0.9, 0.8, 0.7, 0.6, 0.6, 0.5)
    q_seq = (1.0, 0.9, 0.7, 0.5, 0.5, 0.4, 0.3, 0.3)
    graphs = gen_nested(GraphSequence(p_seq, q_seq, seed, directed), 8)
    assert [g.n for g in graphs] == [2, 4, 6, 8]
    for small, big in zip(graphs, graphs[1:]):
        m = small.n
        wb, _ = block_masks(big.n)
        ws, _ = block_masks(m)
        same_w = ws & wb[:m, :m]
        assert not np.any(big.eps[:m, :m] & same_w & ~small.eps)
        same_b = ~ws & ~wb[:m, :m] & ~np.eye(m, dtype=bool)
        assert not np.any(big.delta[:m, :m] & same_b & ~small.delta)
        if not directed:
            assert np.array_equal(big.eps, big.eps.T)
