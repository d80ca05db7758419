"""Single-site heat-bath (Glauber) sampling of the quenched Gibbs measure.

Two update rules are available:

``"heat_bath"`` (default)
    Resample ``sigma_i`` from its exact conditional under the Gibbs measure.
    On a directed graph agent ``i`` enters the energy through row ``i`` *and*
    column ``i`` of the adjacency, so the local field is

        h_i = beta/(2pn) sum_j (eps_ij + eps_ji) s_j
            + alpha/(2pn) sum_j (delta_ij + delta_ji) s_j

    and ``P(sigma_i = +1) = 1 / (1 + exp(-2 h_i))``. This kernel is reversible
    for the Gibbs measure on every graph.

``"logit"``
    The utility-maximisation rule with logit noise: only row ``i`` enters,
    ``x_i = beta/(2pn) sum_j eps_ij s_j + alpha/(2pn) sum_j delta_ij s_j`` and
    ``P(sigma_i = +1) = 1 / (1 + exp(-2 x_i))``. It is *not* reversible for
    the Gibbs measure (even on undirected graphs it equals the heat bath at
    half the couplings); it is kept for comparison.

The continuous-time Poisson-clock dynamics is replaced by its embedded
random-scan chain: one sweep is ``n`` updates at uniformly drawn sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from numba import njit, types
from numba.extending import intrinsic

from .graph import BlockGraph, pack_block_words
from .hamiltonian import Magnetization, ModelParams, as_spins

RULES = ("heat_bath", "logit")


def _rule_in_weight(rule: str) -> float:
    if rule not in RULES:
        raise ValueError(f"unknown update rule {rule!r}; expected one of {RULES}")
    return 1.0 if rule == "heat_bath" else 0.0


def coupling_matrix(g: BlockGraph, params: ModelParams, rule: str = "heat_bath") -> np.ndarray:
    """Dense matrix ``K`` with local field ``h = K @ sigma`` for the given rule."""
    w_in = _rule_in_weight(rule)
    eps = g.eps.astype(np.float64)
    delta = g.delta.astype(np.float64)
    scale = 1.0 / (2.0 * params.p * g.n)
    return scale * (params.beta * (eps + w_in * eps.T) + params.alpha * (delta + w_in * delta.T))


def local_fields(g: BlockGraph, params: ModelParams, sigma, rule: str = "heat_bath") -> np.ndarray:
    s = as_spins(sigma, g.n).astype(np.float64)
    return s @ coupling_matrix(g, params, rule).T


def flip_probability(g: BlockGraph, params: ModelParams, sigma, i: int,
                     rule: str = "heat_bath") -> float:
    """Probability that site ``i`` is set to ``+1`` when it is updated."""
    if not 0 <= i < g.n:
        raise ValueError(f"site index {i} out of range for n={g.n}")
    s = as_spins(sigma, g.n).astype(np.float64)
    w_in = _rule_in_weight(rule)
    scale = 1.0 / (2.0 * params.p * g.n)
    within = g.eps[i].astype(np.float64) + w_in * g.eps[:, i]
    between = g.delta[i].astype(np.float64) + w_in * g.delta[:, i]
    h = scale * (params.beta * within @ s + params.alpha * between @ s)
    return float(1.0 / (1.0 + np.exp(-2.0 * h)))


@intrinsic
def _popcount(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


@njit(nogil=True, cache=True)
def _run_sweeps(out, inn, deg_oe, deg_ie, deg_od, deg_id, words, w_in, cb, ca,
                spins, plus, counts, n_sweeps, rng, rec_k1, rec_k2):
    n = spins.shape[0]
    half = n // 2
    for t in range(n_sweeps):
        for _ in range(n):
            i = rng.integers(0, n)
            if i < half:
                own = 0
                oth = words
                loc = i
            else:
                own = words
                oth = 0
                loc = i - half
            pe_out = 0
            pe_in = 0
            pd_out = 0
            pd_in = 0
            for w in range(words):
                pe_out += _popcount(out[i, own + w] & plus[own + w])
                pe_in += _popcount(inn[i, own + w] & plus[own + w])
                pd_out += _popcount(out[i, oth + w] & plus[oth + w])
                pd_in += _popcount(inn[i, oth + w] & plus[oth + w])
            se = (2 * pe_out - deg_oe[i]) + w_in * (2 * pe_in - deg_ie[i])
            sd = (2 * pd_out - deg_od[i]) + w_in * (2 * pd_in - deg_id[i])
            h = cb * se + ca * sd
            prob_plus = 1.0 / (1.0 + np.exp(-2.0 * h))
            new = 1 if rng.random() < prob_plus else -1
            if new != spins[i]:
                spins[i] = new
                bit = np.uint64(1) << np.uint64(loc % 64)
                idx = own + loc // 64
                blk = 0 if i < half else 1
                if new == 1:
                    plus[idx] |= bit
                    counts[blk] += 1
                else:
                    plus[idx] &= ~bit
                    counts[blk] -= 1
        rec_k1[t] = counts[0]
        rec_k2[t] = counts[1]


def _plus_words(spins: np.ndarray) -> np.ndarray:
    return pack_block_words(spins == 1)[0].copy()


def _advance(g: BlockGraph, params: ModelParams, spins: np.ndarray, n_sweeps: int,
             rng: np.random.Generator, rule: str):
    """Run ``n_sweeps`` sweeps in place on ``spins``; returns per-sweep plus-counts."""
    if not (np.isclose(params.p, g.p, rtol=1e-12) and np.isclose(params.q, g.q, rtol=1e-12)):
        raise ValueError("params.p / params.q do not match the graph")
    kw = g.kernel_words
    half = g.n // 2
    counts = np.array([(spins[:half] == 1).sum(), (spins[half:] == 1).sum()], dtype=np.int64)
    rec_k1 = np.empty(n_sweeps, dtype=np.int64)
    rec_k2 = np.empty(n_sweeps, dtype=np.int64)
    scale = 1.0 / (2.0 * params.p * g.n)
    _run_sweeps(kw.out, kw.inn, kw.deg_out_eps, kw.deg_in_eps, kw.deg_out_delta,
                kw.deg_in_delta, kw.words, _rule_in_weight(rule),
                params.beta * scale, params.alpha * scale,
                spins, _plus_words(spins), counts, n_sweeps, rng, rec_k1, rec_k2)
    return rec_k1, rec_k2


@dataclass(frozen=True)
class ChainState:
    """Configuration plus the exact generator state needed to continue the chain."""

    sigma: np.ndarray
    sweep_index: int = 0
    rng_state: dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def start(cls, sigma, seed: int) -> "ChainState":
        rng = np.random.default_rng(seed)
        return cls(as_spins(sigma).copy(), 0, rng.bit_generator.state)

    def generator(self) -> np.random.Generator:
        bg = np.random.PCG64()
        bg.state = self.rng_state
        return np.random.Generator(bg)


def sweep(g: BlockGraph, params: ModelParams, state: ChainState, rule: str = "heat_bath",
          n_sweeps: int = 1) -> ChainState:
    """Advance a chain by ``n_sweeps`` sweeps; the input state is left untouched."""
    spins = as_spins(state.sigma, g.n).copy()
    rng = state.generator()
    _advance(g, params, spins, n_sweeps, rng, rule)
    return replace(state, sigma=spins, sweep_index=state.sweep_index + n_sweeps,
                   rng_state=rng.bit_generator.state)


@dataclass(frozen=True)
class MagnetizationTrace:
    """Block magnetizations recorded every ``thin`` sweeps after ``burnin``."""

    n: int
    sweeps: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    burnin: int
    thin: int
    seed: int
    final: np.ndarray = field(repr=False)

    @property
    def m1(self) -> np.ndarray:
        half = self.n // 2
        return (2 * self.k1 - half) / half

    @property
    def m2(self) -> np.ndarray:
        half = self.n // 2
        return (2 * self.k2 - half) / half

    @property
    def samples(self) -> list[Magnetization]:
        return [Magnetization(float(a), float(b)) for a, b in zip(self.m1, self.m2)]

    def __len__(self) -> int:
        return len(self.sweeps)

    def to_csv(self) -> str:
        lines = ["sweep,m1,m2"]
        lines += [f"{t},{a!r},{b!r}" for t, a, b in zip(self.sweeps.tolist(),
                                                     self.m1.tolist(), self.m2.tolist())]
        return "\n".join(lines) + "\n"


def initial_spins(n: int, init, rng: np.random.Generator | None = None) -> np.ndarray:
    """Starting configuration.

    ``init`` is ``"all_plus"``, ``"all_minus"``, ``"random"``, a pair of block
    signs such as ``(1, -1)``, or an explicit configuration.
    """
    half = n // 2
    if isinstance(init, str):
        if init == "all_plus":
            return np.ones(n, dtype=np.int8)
        if init == "all_minus":
            return -np.ones(n, dtype=np.int8)
        if init == "random":
            rng = rng if rng is not None else np.random.default_rng()
            return rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
        raise ValueError(f"unknown init policy {init!r}")
    arr = np.asarray(init)
    if arr.shape == (2,) and n != 2:
        s1, s2 = (int(v) for v in arr)
        if s1 not in (-1, 1) or s2 not in (-1, 1):
            raise ValueError("block signs must be +-1")
        return np.concatenate([np.full(half, s1), np.full(half, s2)]).astype(np.int8)
    return as_spins(arr, n).copy()


def run_chain(g: BlockGraph, params: ModelParams, sweeps: int, burnin: int = 0, thin: int = 1,
              seed: int = 0, init="random", rule: str = "heat_bath") -> MagnetizationTrace:
    """Run one chain and record ``m`` after every ``thin``-th post-burn-in sweep.

    The generator is ``numpy.random.default_rng(seed)``; a random initial
    configuration is drawn from it before the first sweep.
    """
    if not (sweeps >= burnin >= 0):
        raise ValueError(f"need sweeps >= burnin >= 0, got sweeps={sweeps}, burnin={burnin}")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    rng = np.random.default_rng(seed)
    spins = initial_spins(g.n, init, rng)
    rec_k1, rec_k2 = _advance(g, params, spins, sweeps, rng, rule)
    idx = np.arange(burnin + thin, sweeps + 1, thin)
    return MagnetizationTrace(
        n=g.n, sweeps=idx, k1=rec_k1[idx - 1], k2=rec_k2[idx - 1],
        burnin=burnin, thin=thin, seed=seed, final=spins,
    )


def _all_configs(n: int) -> np.ndarray:
    x = np.arange(2 ** n, dtype=np.int64)
    bits = (x[:, None] >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def _flip_matrix(g: BlockGraph, kernel_params: ModelParams, rule: str):
    """``P[x, i]``: probability that a scan of site ``i`` flips configuration ``x``."""
    configs = _all_configs(g.n)
    h = configs.astype(np.float64) @ coupling_matrix(g, kernel_params, rule).T
    return configs, 1.0 / (1.0 + np.exp(2.0 * configs * h))


def _exact_probs(g: BlockGraph, params: ModelParams) -> np.ndarray:
    from .exact import gibbs_weights

    return gibbs_weights(g, params)


def detailed_balance_check(g: BlockGraph, params: ModelParams,
                           kernel_params: ModelParams | None = None,
                           rule: str = "heat_bath") -> float:
    """Largest ``|mu(x) P(x -> x^i) - mu(x^i) P(x^i -> x)|`` over all x and i.

    ``mu`` is the exact Gibbs measure for ``params``; the transition kernel
    is built from ``kernel_params`` (defaults to ``params``) and ``rule``.
    """
    from .errors import ResourceLimitError

    if g.n > 16:
        raise ResourceLimitError(f"detailed balance check enumerates 2^n states; n={g.n} > 16")
    mu = _exact_probs(g, params)
    _, flip = _flip_matrix(g, kernel_params or params, rule)
    n = g.n
    x = np.arange(2 ** n)
    worst = 0.0
    for i in range(n):
        y = x ^ (1 << i)
        forward = mu * flip[:, i] / n
        backward = mu[y] * flip[y, i] / n
        worst = max(worst, float(np.max(np.abs(forward - backward))))
    return worst


def stationarity_residual(g: BlockGraph, params: ModelParams, rule: str = "heat_bath") -> float:
    """Total-variation distance between ``mu K`` and ``mu`` for one random-scan update."""
    from .errors import ResourceLimitError

    if g.n > 16:
        raise ResourceLimitError(f"stationarity check enumerates 2^n states; n={g.n} > 16")
    mu = _exact_probs(g, params)
    _, flip = _flip_matrix(g, params, rule)
    n = g.n
    x = np.arange(2 ** n)
    pushed = np.zeros_like(mu)
    for i in range(n):
        y = x ^ (1 << i)
        pushed += (mu * (1.0 - flip[:, i]) + mu[y] * flip[y, i]) / n
    return 0.5 * float(np.abs(pushed - mu).sum())
