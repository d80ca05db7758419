"""Exact computations by enumeration and binomial sums.

Configurations are indexed by integers ``x`` in ``[0, 2**n)``: bit ``i`` of
``x`` set means ``sigma_i = +1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp, rel_entr

from .errors import ResourceLimitError
from .graph import BlockGraph
from .hamiltonian import ModelParams, as_spins, energy_gap_bound, link_counts

MAX_ENUM_N = 20


class CompleteModel(NamedTuple):
    """Fully-connected two-block model with within coupling ``beta`` and between ``lam``."""

    n: int
    beta: float
    lam: float


def _check_enum(n: int, cap: int = MAX_ENUM_N):
    if n > cap:
        raise ResourceLimitError(f"enumeration of 2^{n} states exceeds the cap n <= {cap}")


@njit(cache=True)
def _gray_pair_sums(a_eps, a_delta):
    """Integer ``sigma^T A sigma`` for both matrices over all configurations.

    Walks the reflected Gray code so each step flips one spin and updates the
    integer local fields in O(n).
    """
    n = a_eps.shape[0]
    total = 1 << n
    se = np.empty(total, dtype=np.int64)
    sd = np.empty(total, dtype=np.int64)
    s = -np.ones(n, dtype=np.int64)
    fe = np.zeros(n, dtype=np.int64)
    fd = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            fe[i] += a_eps[i, j] * s[j]
            fd[i] += a_delta[i, j] * s[j]
    cur_e = 0
    cur_d = 0
    for i in range(n):
        cur_e += s[i] * fe[i]
        cur_d += s[i] * fd[i]
    se[0] = cur_e
    sd[0] = cur_d
    for k in range(1, total):
        i = 0
        while not (k >> i) & 1:
            i += 1
        si = s[i]
        # sigma^T A sigma changes by -4 s_i f_i (A has zero diagonal)
        cur_e -= 4 * si * fe[i]
        cur_d -= 4 * si * fd[i]
        for j in range(n):
            fe[j] -= 2 * si * a_eps[j, i]
            fd[j] -= 2 * si * a_delta[j, i]
        s[i] = -si
        x = k ^ (k >> 1)
        se[x] = cur_e
        sd[x] = cur_d
    return se, sd


def pair_sums(g: BlockGraph) -> tuple[np.ndarray, np.ndarray]:
    """``(sigma^T eps sigma, sigma^T delta sigma)`` for every configuration index."""
    _check_enum(g.n)
    a_eps = g.eps.astype(np.int64)
    a_delta = g.delta.astype(np.int64)
    se, sd = _gray_pair_sums(a_eps + a_eps.T, a_delta + a_delta.T)
    return se // 2, sd // 2


def log_weights(g: BlockGraph, params: ModelParams) -> np.ndarray:
    """``-H(sigma)`` for all configurations."""
    se, sd = pair_sums(g)
    scale = 1.0 / (2.0 * g.n * params.p)
    return scale * (params.beta * se + params.alpha * sd)


def gibbs_weights(g: BlockGraph, params: ModelParams) -> np.ndarray:
    """Normalized Gibbs probabilities of all configurations."""
    lw = log_weights(g, params)
    return np.exp(lw - logsumexp(lw))


def block_plus_counts(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Number of ``+1`` spins in each block for every configuration index."""
    half = n // 2
    x = np.arange(2 ** n, dtype=np.uint64)
    low = np.uint64((1 << half) - 1)
    return (np.bitwise_count(x & low).astype(np.int64),
            np.bitwise_count(x >> np.uint64(half)).astype(np.int64))


def admissible_magnetizations(n: int) -> np.ndarray:
    """Values a block magnetization can take for ``n`` agents, ascending."""
    half = n // 2
    return (2 * np.arange(half + 1) - half) / half


@dataclass(frozen=True)
class MagnetizationLaw:
    """Distribution of ``(m1, m2)``: ``probs[k1, k2]`` with ``k_i`` plus-spins in block i."""

    n: int
    probs: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return admissible_magnetizations(self.n)

    def as_dict(self) -> dict[tuple[float, float], float]:
        v = self.values
        k1, k2 = np.nonzero(self.probs)
        return {(float(v[a]), float(v[b])): float(self.probs[a, b]) for a, b in zip(k1, k2)}

    def rows(self) -> list[list[float]]:
        return [[m1, m2, pr] for (m1, m2), pr in self.as_dict().items()]

    @classmethod
    def from_counts(cls, n: int, k1, k2) -> "MagnetizationLaw":
        """Empirical law from per-sample plus-spin counts."""
        half = n // 2
        k1 = np.asarray(k1, dtype=np.int64)
        k2 = np.asarray(k2, dtype=np.int64)
        hist = np.bincount(k1 * (half + 1) + k2, minlength=(half + 1) ** 2).astype(float)
        return cls(n, hist.reshape(half + 1, half + 1) / max(len(k1), 1))

    def tv_distance(self, other: "MagnetizationLaw") -> float:
        if other.n != self.n:
            raise ValueError("laws live on different system sizes")
        return 0.5 * float(np.abs(self.probs - other.probs).sum())


def _law_from_config_weights(n: int, weights: np.ndarray) -> MagnetizationLaw:
    k1, k2 = block_plus_counts(n)
    half = n // 2
    probs = np.bincount(k1 * (half + 1) + k2, weights=weights, minlength=(half + 1) ** 2)
    return MagnetizationLaw(n, probs.reshape(half + 1, half + 1))


def enumerate_gibbs(model, params: ModelParams | None = None) -> MagnetizationLaw:
    """Exact law of ``m`` under the Gibbs measure by full enumeration.

    ``model`` is either a :class:`BlockGraph` (then ``params`` is required) or
    a :class:`CompleteModel`.
    """
    if isinstance(model, CompleteModel):
        n = int(model.n)
        _check_enum(n)
        k1, k2 = block_plus_counts(n)
        half = n // 2
        m1 = (2 * k1 - half) / half
        m2 = (2 * k2 - half) / half
        lw = (n / 8.0) * (2 * model.lam * m1 * m2 + model.beta * (m1 ** 2 + m2 ** 2))
        return _law_from_config_weights(n, np.exp(lw - logsumexp(lw)))
    if params is None:
        raise ValueError("params are required for a random-graph model")
    return _law_from_config_weights(model.n, gibbs_weights(model, params))


def log_partition_random(g: BlockGraph, params: ModelParams) -> float:
    return float(logsumexp(log_weights(g, params)))


def _log_binom(m: int, k: np.ndarray) -> np.ndarray:
    return gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)


def log_partition_complete(n: int, beta: float, lam: float, chunk_cells: int = 1 << 22) -> float:
    """``log`` of the fully-connected partition function via block binomials.

    Sums ``C(n/2, k1) C(n/2, k2) exp(-H(m1, m2))`` over all plus-spin counts.
    Cost is ``O(n^2)``; ``lam == 0`` factorizes and costs ``O(n)``.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    half = n // 2
    k = np.arange(half + 1)
    m = (2 * k - half) / half
    a = _log_binom(half, k) + (n / 8.0) * beta * m ** 2
    if lam == 0:
        return float(2 * logsumexp(a))
    rows = max(1, chunk_cells // (half + 1))
    parts = []
    for start in range(0, half + 1, rows):
        sl = slice(start, start + rows)
        block = a[sl, None] + a[None, :] + (n / 4.0) * lam * m[sl, None] * m[None, :]
        parts.append(logsumexp(block))
    return float(logsumexp(parts))


def relative_entropy(x, p):
    """Bernoulli relative entropy ``x log(x/p) + (1-x) log((1-x)/(1-p))``.

    Returns ``+inf`` for ``x`` outside ``[0, 1]``.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    inside = (x >= 0) & (x <= 1)
    xc = np.clip(x, 0.0, 1.0)
    val = rel_entr(xc, p) + rel_entr(1.0 - xc, 1.0 - p)
    out = np.where(inside, val, np.inf)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ConcentrationReport:
    """Worst relative edge-count deviations over the tested configurations.

    Within-block counts compare the edge sum over aligned pairs with
    ``p (|L+_b| - n)``: the aligned set includes the ``n`` diagonal pairs,
    which carry no edge variable.
    """

    n_tested: int
    gamma: float
    kappa: float
    worst_b: float
    worst_nb_plus: float
    worst_nb_minus: float
    member: bool
    member_fraction: float
    diagonal_adjustment: int


def _configs_for_report(n: int, sigma_source, seed: int):
    if isinstance(sigma_source, np.ndarray):
        yield np.atleast_2d(as_spins(sigma_source, n))
        return
    if isinstance(sigma_source, str):
        if sigma_source != "all":
            raise ValueError(f"unknown sigma source {sigma_source!r}")
        if n > 14:
            raise ResourceLimitError("sigma_source='all' is limited to n <= 14")
        x = np.arange(2 ** n, dtype=np.int64)
        yield (2 * ((x[:, None] >> np.arange(n)) & 1) - 1).astype(np.int8)
        return
    total = int(sigma_source)
    rng = np.random.default_rng(seed)
    batch = 4096
    for start in range(0, total, batch):
        k = min(batch, total - start)
        yield (2 * rng.integers(0, 2, size=(k, n)) - 1).astype(np.int8)


def concentration_report(g: BlockGraph, gamma: float, kappa: float, sigma_source="all",
                         seed: int = 0) -> ConcentrationReport:
    """Check the edge-count concentration inequalities for a set of configurations.

    ``sigma_source`` is ``"all"`` (every configuration, ``n <= 14``), an
    integer number of uniformly drawn configurations, or an explicit array of
    configurations.
    """
    if gamma <= 0 or kappa <= 0:
        raise ValueError("gamma and kappa must be positive")
    n = g.n
    eps = g.eps.astype(np.float32)
    delta = g.delta.astype(np.float32)
    n_eps = int(g.eps.sum())
    n_delta = int(g.delta.sum())
    worst = {"b": 0.0, "nb+": 0.0, "nb-": 0.0}
    tested = 0
    ok_count = 0

    def rel_dev(count, expected):
        with np.errstate(invalid="ignore", divide="ignore"):
            dev = np.abs(count - expected) / expected
        return np.where(expected > 0, dev, np.where(count == 0, 0.0, np.inf))

    for s in _configs_for_report(n, sigma_source, seed):
        sf = s.astype(np.float32)
        qe = np.rint(np.einsum("ki,ki->k", sf @ eps, sf)).astype(np.int64)
        qd = np.rint(np.einsum("ki,ki->k", sf @ delta, sf)).astype(np.int64)
        lc = link_counts(s)
        s_b = (n_eps + qe) // 2
        dev_b = rel_dev(s_b, g.p * (lc.lb_plus - n))
        s_half = n // 2
        mm = s[:, :s_half].sum(axis=1, dtype=np.int64) * s[:, s_half:].sum(axis=1, dtype=np.int64)
        plus_case = mm >= 0
        s_nb = np.where(plus_case, (n_delta + qd) // 2, (n_delta - qd) // 2)
        l_nb = np.where(plus_case, lc.lnb_plus, lc.lnb_minus)
        dev_nb = rel_dev(s_nb, g.q * l_nb)
        worst["b"] = max(worst["b"], float(dev_b.max()))
        if plus_case.any():
            worst["nb+"] = max(worst["nb+"], float(dev_nb[plus_case].max()))
        if (~plus_case).any():
            worst["nb-"] = max(worst["nb-"], float(dev_nb[~plus_case].max()))
        ok_count += int(np.count_nonzero((dev_b <= gamma) & (dev_nb <= kappa)))
        tested += len(s)
    member = worst["b"] <= gamma and worst["nb+"] <= kappa and worst["nb-"] <= kappa
    return ConcentrationReport(
        n_tested=tested, gamma=gamma, kappa=kappa, worst_b=worst["b"],
        worst_nb_plus=worst["nb+"], worst_nb_minus=worst["nb-"], member=member,
        member_fraction=ok_count / tested if tested else float("nan"),
        diagonal_adjustment=n,
    )


class Sandwich(NamedTuple):
    lower_slack: float
    upper_slack: float
    log_z: float
    log_z_tilde: float
    bound: float


def sandwich_check(g: BlockGraph, params: ModelParams, c: float = 3.0) -> Sandwich:
    """Compare ``log Z`` with ``log Z_tilde +- (beta gamma n + 2 |alpha a| kappa n)``.

    ``gamma = c / sqrt(p n)`` and ``kappa = c / sqrt(q n)``; ``Z_tilde`` is the
    fully-connected model at ``lam = alpha a``. Positive slacks mean the
    bound holds for this graph.
    """
    n = g.n
    gamma = c / np.sqrt(g.p * n)
    kappa = c / np.sqrt(g.q * n)
    bound = energy_gap_bound(params, n, gamma, kappa)
    log_z = log_partition_random(g, params)
    log_zt = log_partition_complete(n, params.beta, params.lam)
    return Sandwich(log_z - (log_zt - bound), (log_zt + bound) - log_z, log_z, log_zt, bound)
