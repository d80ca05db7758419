import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockspin.errors import ResourceLimitError
from blockspin.exact import CompleteModel, MagnetizationLaw, enumerate_gibbs
from blockspin.glauber import (
    ChainState,
    detailed_balance_check,
    flip_probability,
    initial_spins,
    local_fields,
    run_chain,
    stationarity_residual,
    sweep,
)
from blockspin.graph import BlockGraph, gen_graph
from blockspin.hamiltonian import ModelParams, energy_random, magnetization


def _empty(n):
    z = np.zeros((n, n), dtype=bool)
    return BlockGraph.from_dense(z, z, 0.5, 0.5)


def reference_sweeps(g, params, spins, n_sweeps, rng, rule="heat_bath"):
    """Slow dense re-implementation drawing from the generator in the same order."""
    n = g.n
    eps = g.eps.astype(float)
    delta = g.delta.astype(float)
    w = 1.0 if rule == "heat_bath" else 0.0
    k = (params.beta * (eps + w * eps.T) + params.alpha * (delta + w * delta.T)) / (2 * params.p * n)
    s = spins.astype(float).copy()
    out = []
    for _ in range(n_sweeps):
        for _ in range(n):
            i = rng.integers(0, n)
            h = k[i] @ s
            s[i] = 1.0 if rng.random() < 1.0 / (1.0 + np.exp(-2.0 * h)) else -1.0
        out.append(s.copy())
    return np.array(out)


# flip probabilities

def test_isolated_site_is_fair():
    g = _empty(6)
    params = ModelParams(2.0, 1.0, 0.5, 0.5)
    for i in range(6):
        assert flip_probability(g, params, [1] * 6, i) == 0.5
        assert flip_probability(g, params, [1] * 6, i, rule="logit") == 0.5


def test_logit_rule_hand_value():
    g = gen_graph(4, 1.0, 1.0, seed=0)
    params = ModelParams(2.0, 0.0, 1.0, 1.0)
    # x = 2 / (2 * 1 * 4) * 1 = 0.25, logistic of 2x
    assert flip_probability(g, params, [1, 1, 1, 1], 0, rule="logit") == pytest.approx(
        0.6224593312018546, abs=1e-15)


def test_heat_bath_hand_value():
    # row and column of site 0 each contribute 0.25
    g = gen_graph(4, 1.0, 1.0, seed=0)
    params = ModelParams(2.0, 0.0, 1.0, 1.0)
    assert flip_probability(g, params, [1, 1, 1, 1], 0) == pytest.approx(
        1.0 / (1.0 + np.exp(-1.0)), abs=1e-15)


def test_flip_probability_index_error():
    g = gen_graph(4, 1.0, 1.0, seed=0)
    params = ModelParams(2.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        flip_probability(g, params, [1] * 4, 4)
    with pytest.raises(ValueError):
        flip_probability(g, params, [1] * 4, -1)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10 ** 6), rule=st.sampled_from(["heat_bath", "logit"]))
def test_flip_probability_odd_in_neighbours(seed, rule):
    g = gen_graph(10, 0.6, 0.3, seed)
    params = ModelParams(1.5, 0.0, 0.6, 0.3)
    rng = np.random.default_rng(seed)
    s = 2 * rng.integers(0, 2, 10) - 1
    i = int(rng.integers(0, 10))
    flipped = -s
    flipped[i] = s[i]
    total = flip_probability(g, params, s, i, rule) + flip_probability(g, params, flipped, i, rule)
    assert total == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_heat_bath_is_exact_conditional(seed):
    g = gen_graph(8, 0.7, 0.4, seed)
    params = ModelParams(2.0, -1.5, 0.7, 0.4)
    rng = np.random.default_rng(seed)
    s = 2 * rng.integers(0, 2, 8) - 1
    i = int(rng.integers(0, 8))
    plus, minus = s.copy(), s.copy()
    plus[i], minus[i] = 1, -1
    e_p, e_m = energy_random(g, params, plus), energy_random(g, params, minus)
    want = 1.0 / (1.0 + np.exp(e_p - e_m))
    assert flip_probability(g, params, s, i) == pytest.approx(want, rel=1e-12)
    h = local_fields(g, params, s)
    assert 1 / (1 + np.exp(-2 * h[i])) == pytest.approx(want, rel=1e-12)


# kernel against the dense reference

@pytest.mark.parametrize("n,p,q,beta,alpha,rule", [
    (6, 0.8, 0.4, 1.5, 1.0, "heat_bath"),
    (20, 0.5, 0.25, 3.0, -1.0, "heat_bath"),
    (130, 0.5, 0.3, 2.0, 1.0, "heat_bath"),
    (260, 0.4, 0.2, 2.5, 0.5, "logit"),
])
def test_kernel_matches_reference(n, p, q, beta, alpha, rule):
    g = gen_graph(n, p, q, seed=n)
    params = ModelParams(beta, alpha, p, q)
    start = initial_spins(n, "random", np.random.default_rng(1))
    state = ChainState.start(start, seed=99)
    ref = reference_sweeps(g, params, start, 5, np.random.default_rng(99), rule)
    for t in range(5):
        state = sweep(g, params, state, rule)
        assert np.array_equal(state.sigma, ref[t])
    assert state.sweep_index == 5


def test_sweep_leaves_input_untouched():
    g = gen_graph(10, 0.5, 0.5, seed=0)
    params = ModelParams(1.0, 0.5, 0.5, 0.5)
    s0 = ChainState.start([1] * 10, seed=1)
    before = (s0.sigma.copy(), dict(s0.rng_state))
    s1 = sweep(g, params, s0, n_sweeps=3)
    assert np.array_equal(s0.sigma, before[0])
    assert s0.rng_state == before[1]
    assert sweep(g, params, s0, n_sweeps=3).sigma.tolist() == s1.sigma.tolist()


def test_sweep_composes_with_run_chain():
    g = gen_graph(24, 0.5, 0.25, seed=4)
    params = ModelParams(2.0, 1.0, 0.5, 0.25)
    tr = run_chain(g, params, sweeps=7, seed=5, init="all_minus")
    state = ChainState.start(-np.ones(24, dtype=np.int8), seed=5)
    for _ in range(7):
        state = sweep(g, params, state)
    assert np.array_equal(state.sigma, tr.final)


# sampling behaviour

def test_empty_graph_fair_coins():
    n = 50
    g = _empty(n)
    params = ModelParams(1.0, 0.5, 0.5, 0.5)
    tr = run_chain(g, params, sweeps=10_000, seed=3)
    tol = 4 / np.sqrt(10_000) * (2 / np.sqrt(n))
    assert abs(tr.m1.mean()) < tol and abs(tr.m2.mean()) < tol


def test_large_beta_stays_ordered():
    g = gen_graph(20, 1.0, 1.0, seed=0)
    tr = run_chain(g, ModelParams(50.0, 0.0, 1.0, 1.0), sweeps=1000, seed=8, init="all_plus")
    assert len(tr) == 1000
    assert np.all(tr.m1 > 0.9) and np.all(tr.m2 > 0.9)


def test_determinism_and_seed_dependence():
    g = gen_graph(40, 0.5, 0.25, seed=2)
    params = ModelParams(1.0, 1.0, 0.5, 0.25)
    a = run_chain(g, params, sweeps=3000, burnin=500, seed=10)
    b = run_chain(g, params, sweeps=3000, burnin=500, seed=10)
    c = run_chain(g, params, sweeps=3000, burnin=500, seed=11)
    assert a.to_csv() == b.to_csv()
    assert not np.array_equal(a.k1, c.k1)
    # paramagnetic: both estimate E m1^2 of order 1/n; compare within Monte Carlo error
    assert abs(np.mean(a.m1 ** 2) - np.mean(c.m1 ** 2)) < 0.03


def test_schedule_and_trace_layout():
    g = gen_graph(12, 0.5, 0.5, seed=0)
    params = ModelParams(1.0, 0.0, 0.5, 0.5)
    tr = run_chain(g, params, sweeps=20, burnin=5, thin=4, seed=0)
    assert tr.sweeps.tolist() == [9, 13, 17]
    assert all(m.is_admissible(12) for m in tr.samples)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "sweep,m1,m2" and len(lines) == 4
    assert len(run_chain(g, params, sweeps=5, burnin=5, seed=0)) == 0
    for bad in (dict(sweeps=4, burnin=5), dict(sweeps=5, burnin=-1), dict(sweeps=5, thin=0)):
        with pytest.raises(ValueError):
            run_chain(g, params, seed=0, **bad)


def test_initial_spins_policies():
    assert initial_spins(4, "all_plus").tolist() == [1, 1, 1, 1]
    assert initial_spins(4, "all_minus").tolist() == [-1, -1, -1, -1]
    assert initial_spins(6, (1, -1)).tolist() == [1, 1, 1, -1, -1, -1]
    assert initial_spins(4, [1, -1, 1, -1]).tolist() == [1, -1, 1, -1]
    with pytest.raises(ValueError):
        initial_spins(4, "sideways")
    with pytest.raises(ValueError):
        initial_spins(4, (1, 0))


def test_sampler_matches_enumeration_small():
    n = 12
    g = gen_graph(n, 1.0, 1.0, seed=0)
    tr = run_chain(g, ModelParams(1.0, 0.0, 1.0, 1.0), sweeps=200_000, burnin=1000, seed=21)
    emp = MagnetizationLaw.from_counts(n, tr.k1, tr.k2)
    assert emp.tv_distance(enumerate_gibbs(CompleteModel(n, 1.0, 0.0))) < 0.02


# exact kernel checks

@pytest.mark.parametrize("n", [4, 6, 8])
def test_detailed_balance_random_graphs(n):
    for seed in range(5):
        g = gen_graph(n, 0.7, 0.35, seed)
        params = ModelParams(2.5, -1.5, 0.7, 0.35)
        assert detailed_balance_check(g, params) < 1e-12


def test_detailed_balance_empty_graph():
    g = _empty(4)
    assert detailed_balance_check(g, ModelParams(1.0, 1.0, 0.5, 0.5)) < 1e-15


def test_detailed_balance_negative_controls():
    g = gen_graph(6, 0.8, 0.4, seed=1)
    params = ModelParams(2.0, 1.0, 0.8, 0.4)
    wrong_beta = ModelParams(3.0, 1.0, 0.8, 0.4)
    assert detailed_balance_check(g, params, kernel_params=wrong_beta) > 1e-3
    assert detailed_balance_check(g, params, rule="logit") > 1e-3


def test_detailed_balance_resource_limit():
    g = gen_graph(18, 0.5, 0.5, seed=0)
    with pytest.raises(ResourceLimitError):
        detailed_balance_check(g, ModelParams(1.0, 0.0, 0.5, 0.5))


@pytest.mark.parametrize("n", [6, 10, 12])
def test_stationarity(n):
    g = gen_graph(n, 0.6, 0.3, seed=n)
    params = ModelParams(2.0, 1.0, 0.6, 0.3)
    assert stationarity_residual(g, params) < 1e-10
    assert stationarity_residual(g, params, rule="logit") > 1e-6


def test_magnetization_of_final_state_matches_trace():
    g = gen_graph(30, 0.5, 0.25, seed=1)
    tr = run_chain(g, ModelParams(2.0, 1.0, 0.5, 0.25), sweeps=50, seed=2)
    m = magnetization(tr.final)
    assert (m.m1, m.m2) == (tr.m1[-1], tr.m2[-1])
