"""Energies, block magnetizations and aligned-pair counts.

Conventions
-----------
* Pair sums run over ordered pairs. The random-graph energy never contains
  ``i == j`` (there is no edge variable for a self pair), while the
  fully-connected energy ``-(n/8)(beta m1^2 + beta m2^2 + 2 lam m1 m2)``
  implicitly contains the ``n`` diagonal terms. On the complete graph with
  ``p = q = 1`` and ``lam = alpha`` the two therefore differ by the
  configuration-independent constant ``beta / 2`` (see
  :func:`complete_graph_offset`).
* ``link_counts`` counts diagonal pairs inside the within-block aligned set so
  that ``|L+_b| = n^2 (m1^2 + m2^2 + 2) / 8`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import BlockGraph


def as_spins(sigma, n: int | None = None) -> np.ndarray:
    """Validate a configuration (or a batch, last axis = sites) of +-1 values."""
    s = np.asarray(sigma)
    if s.ndim == 0 or s.shape[-1] % 2:
        raise ValueError("spin configuration must have an even number of sites")
    if n is not None and s.shape[-1] != n:
        raise ValueError(f"configuration has {s.shape[-1]} sites, graph has {n}")
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spins must be +1 or -1")
    return s.astype(np.int8, copy=False)


class Magnetization(NamedTuple):
    m1: float
    m2: float

    def is_admissible(self, n: int) -> bool:
        """True when ``n * m_i / 2`` is an integer of the parity of ``n / 2``."""
        half = n // 2
        for m in self:
            s = m * half
            if abs(s - round(s)) > 1e-9 or abs(m) > 1 + 1e-12:
                return False
            if (round(s) - half) % 2:
                return False
        return True


class LinkCounts(NamedTuple):
    lb_plus: int
    lnb_plus: int
    lnb_minus: int


@dataclass(frozen=True)
class ModelParams:
    """Interaction parameters.

    ``a`` is the limiting ratio ``q / p`` used for the fully-connected
    comparison model; it defaults to the finite-size ratio.
    """

    beta: float
    alpha: float
    p: float
    q: float
    a: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (0 < self.q <= self.p <= 1):
            raise ValueError(f"need 0 < q <= p <= 1, got p={self.p}, q={self.q}")
        if abs(self.alpha) * self.q / self.p > self.beta * (1 + 1e-12):
            raise ValueError("need |alpha| q / p <= beta")
        if self.a is not None and not (0 <= self.a <= 1):
            raise ValueError(f"a must lie in [0, 1], got {self.a}")

    @classmethod
    def for_graph(cls, g: BlockGraph, beta: float, alpha: float, a: float | None = None):
        return cls(beta=beta, alpha=alpha, p=g.p, q=g.q, a=a)

    @property
    def ratio(self) -> float:
        return self.q / self.p if self.a is None else self.a

    @property
    def lam(self) -> float:
        """Between-block coupling of the fully-connected comparison model."""
        return self.alpha * self.ratio


def block_sums(sigma) -> tuple[np.ndarray, np.ndarray]:
    """Integer spin sums of the two blocks (vectorized over leading axes)."""
    s = as_spins(sigma)
    half = s.shape[-1] // 2
    return (s[..., :half].sum(axis=-1, dtype=np.int64),
            s[..., half:].sum(axis=-1, dtype=np.int64))


def magnetization(sigma) -> Magnetization:
    s1, s2 = block_sums(sigma)
    n = np.shape(sigma)[-1]
    if np.ndim(s1) == 0:
        return Magnetization(2.0 * int(s1) / n, 2.0 * int(s2) / n)
    return Magnetization(2.0 * s1 / n, 2.0 * s2 / n)


def link_counts(sigma) -> LinkCounts:
    """Aligned/unaligned ordered-pair counts, diagonal included in ``lb_plus``."""
    s = as_spins(sigma)
    half = s.shape[-1] // 2
    k1 = (s[..., :half] == 1).sum(axis=-1, dtype=np.int64)
    k2 = (s[..., half:] == 1).sum(axis=-1, dtype=np.int64)
    j1, j2 = half - k1, half - k2
    lb_plus = k1 * k1 + j1 * j1 + k2 * k2 + j2 * j2
    lnb_plus = 2 * (k1 * k2 + j1 * j2)
    lnb_minus = 2 * (k1 * j2 + j1 * k2)
    if s.ndim == 1:
        return LinkCounts(int(lb_plus), int(lnb_plus), int(lnb_minus))
    return LinkCounts(lb_plus, lnb_plus, lnb_minus)


def _check_params(g: BlockGraph, params: ModelParams):
    if not (np.isclose(params.p, g.p, rtol=1e-12) and np.isclose(params.q, g.q, rtol=1e-12)):
        raise ValueError("params.p / params.q do not match the graph")


def energy_random(g: BlockGraph, params: ModelParams, sigma) -> float | np.ndarray:
    """Quenched energy by the direct double sum over ordered edges.

    ``sigma`` may be a single configuration or a batch ``(k, n)``.
    """
    s = as_spins(sigma, g.n).astype(np.float64)
    _check_params(g, params)
    scale = 1.0 / (2.0 * g.n * params.p)
    e_in = np.einsum("...i,ij,...j->...", s, g.eps.astype(np.float64), s)
    e_out = np.einsum("...i,ij,...j->...", s, g.delta.astype(np.float64), s)
    return -scale * (params.beta * e_in + params.alpha * e_out)


def energy_random_rewrite(g: BlockGraph, params: ModelParams, sigma, form: str = "auto") -> float:
    """Same energy from aligned-pair indicator sums.

    ``form="plus"`` uses the between-block aligned set, ``form="minus"`` the
    anti-aligned one; ``"auto"`` picks ``plus`` when ``m1 m2 >= 0``.
    """
    s = as_spins(sigma, g.n)
    _check_params(g, params)
    if s.ndim != 1:
        raise ValueError("energy_random_rewrite takes a single configuration")
    aligned = s[:, None] == s[None, :]
    eps, delta = g.eps, g.delta
    eps_aligned = int(np.count_nonzero(eps & aligned))
    eps_total = int(np.count_nonzero(eps))
    delta_total = int(np.count_nonzero(delta))
    if form == "auto":
        m = magnetization(s)
        form = "plus" if m.m1 * m.m2 >= 0 else "minus"
    b, a = params.beta, params.alpha
    within = 2 * b * eps_aligned - b * eps_total
    if form == "plus":
        between = 2 * a * int(np.count_nonzero(delta & aligned)) - a * delta_total
    elif form == "minus":
        between = a * delta_total - 2 * a * int(np.count_nonzero(delta & ~aligned))
    else:
        raise ValueError(f"unknown form {form!r}")
    return -(within + between) / (2.0 * g.n * params.p)


def energy_complete(n: int, beta: float, lam: float, m) -> float | np.ndarray:
    """Fully-connected block energy ``-(n/8)(2 lam m1 m2 + beta m1^2 + beta m2^2)``."""
    m1, m2 = m
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    return -(n / 8.0) * (2.0 * lam * m1 * m2 + beta * m1 ** 2 + beta * m2 ** 2)


def complete_graph_offset(beta: float) -> float:
    """``energy_random - energy_complete`` on the complete graph with ``p = q = 1``."""
    return beta / 2.0


def energy_gap_bound(params: ModelParams, n: int, gamma: float, kappa: float) -> float:
    """Uniform bound ``beta gamma n + 2 |alpha a| kappa n`` on the energy difference."""
    if gamma < 0 or kappa < 0:
        raise ValueError("gamma and kappa must be non-negative")
    return params.beta * gamma * n + 2.0 * abs(params.lam) * kappa * n
