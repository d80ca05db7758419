"""Random directed two-block communication graphs.

Agents ``0 .. n/2-1`` form block S, agents ``n/2 .. n-1`` form its complement.
``eps[i, j]`` marks a within-block link, ``delta[i, j]`` a between-block link;
row ``i`` lists the agents whose decisions enter agent ``i``'s utility.

Randomness comes from NumPy's PCG64 generator seeded through ``SeedSequence``
(``numpy.random.default_rng(seed)``), which is platform independent, so a
``(n, p, q, seed, directed)`` tuple always reproduces the same bits.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 < value <= 1.0):
        raise ValueError(f"{name} must lie in (0, 1], got {value}")
    return value


def _check_n(n: int) -> int:
    if int(n) != n or n < 2 or n % 2:
        raise ValueError(f"n must be an even integer >= 2, got {n}")
    return int(n)


def block_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of within-block (off-diagonal) and between-block ordered pairs."""
    half = n // 2
    block = np.arange(n) >= half
    same = block[:, None] == block[None, :]
    within = same & ~np.eye(n, dtype=bool)
    return within, ~same


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BlockGraph:
    """Quenched communication structure ``(eps, delta)``.

    The adjacency matrices are held bit-packed, one row per agent
    (``numpy.packbits`` along axis 1, big-endian bit order). Use
    :meth:`from_dense` to build one from boolean matrices.
    """

    n: int
    p: float
    q: float
    eps_bits: np.ndarray = field(repr=False)
    delta_bits: np.ndarray = field(repr=False)
    directed: bool = True
    seed: int | None = None

    @classmethod
    def from_dense(cls, eps, delta, p: float, q: float, *, directed: bool = True,
                   seed: int | None = None) -> "BlockGraph":
        eps = np.asarray(eps, dtype=bool)
        delta = np.asarray(delta, dtype=bool)
        n = _check_n(eps.shape[0])
        if eps.shape != (n, n) or delta.shape != (n, n):
            raise ValueError("eps and delta must both be n x n")
        within, between = block_masks(n)
        if np.any(eps & ~within):
            raise ValueError("eps has entries on the diagonal or on between-block pairs")
        if np.any(delta & ~between):
            raise ValueError("delta has entries on within-block pairs")
        if not directed and (np.any(eps != eps.T) or np.any(delta != delta.T)):
            raise ValueError("undirected graph requires symmetric eps and delta")
        return cls(
            n=n,
            p=_check_prob("p", p),
            q=_check_prob("q", q),
            eps_bits=_readonly(np.packbits(eps, axis=1)),
            delta_bits=_readonly(np.packbits(delta, axis=1)),
            directed=bool(directed),
            seed=None if seed is None else int(seed),
        )

    @property
    def half(self) -> int:
        return self.n // 2

    @cached_property
    def eps(self) -> np.ndarray:
        return _readonly(np.unpackbits(self.eps_bits, axis=1, count=self.n).astype(bool))

    @cached_property
    def delta(self) -> np.ndarray:
        return _readonly(np.unpackbits(self.delta_bits, axis=1, count=self.n).astype(bool))

    @cached_property
    def kernel_words(self) -> "KernelWords":
        return KernelWords.build(self.eps, self.delta)

    def to_json(self) -> str:
        header = {
            "format_version": FORMAT_VERSION,
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "seed": self.seed,
            "directed": self.directed,
            "eps": base64.b64encode(self.eps_bits.tobytes()).decode("ascii"),
            "delta": base64.b64encode(self.delta_bits.tobytes()).decode("ascii"),
        }
        return json.dumps(header, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BlockGraph":
        d = json.loads(text)
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported graph format_version {d.get('format_version')!r}")
        n = _check_n(d["n"])
        row_bytes = (n + 7) // 8

        def decode(key):
            raw = np.frombuffer(base64.b64decode(d[key]), dtype=np.uint8)
            if raw.size != n * row_bytes:
                raise ValueError(f"{key}: expected {n * row_bytes} bytes, got {raw.size}")
            return np.unpackbits(raw.reshape(n, row_bytes), axis=1, count=n).astype(bool)

        return cls.from_dense(decode("eps"), decode("delta"), d["p"], d["q"],
                              directed=d["directed"], seed=d["seed"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "BlockGraph":
        with open(path) as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class KernelWords:
    """Block-aligned uint64 rows used by the sampling kernel.

    Columns of block S occupy words ``[0, W)`` and columns of the complement
    words ``[W, 2W)``, with ``W = ceil(n / 128)``. Because eps only links
    agents of the same block and delta only links different blocks, the
    within-block part of row ``i`` is one segment and the between-block part
    the other. ``out`` holds row ``i`` (in-influence of agent i per the
    utility model), ``inn`` holds column ``i`` (agents that listen to ``i``).
    """

    words: int
    out: np.ndarray
    inn: np.ndarray
    deg_out_eps: np.ndarray
    deg_in_eps: np.ndarray
    deg_out_delta: np.ndarray
    deg_in_delta: np.ndarray

    @classmethod
    def build(cls, eps: np.ndarray, delta: np.ndarray) -> "KernelWords":
        links = eps | delta
        out = pack_block_words(links)
        inn = pack_block_words(links.T)
        return cls(
            words=out.shape[1] // 2,
            out=_readonly(out),
            inn=_readonly(inn),
            deg_out_eps=_readonly(eps.sum(axis=1).astype(np.int64)),
            deg_in_eps=_readonly(eps.sum(axis=0).astype(np.int64)),
            deg_out_delta=_readonly(delta.sum(axis=1).astype(np.int64)),
            deg_in_delta=_readonly(delta.sum(axis=0).astype(np.int64)),
        )


def pack_block_words(rows: np.ndarray) -> np.ndarray:
    """Pack a boolean ``(k, n)`` array into block-aligned little-endian uint64 words."""
    rows = np.atleast_2d(np.asarray(rows, dtype=bool))
    n = rows.shape[1]
    half = n // 2
    w = -(-half // 64)
    padded = np.zeros((rows.shape[0], 2, w * 64), dtype=bool)
    padded[:, 0, :half] = rows[:, :half]
    padded[:, 1, :half] = rows[:, half:]
    packed = np.packbits(padded.reshape(rows.shape[0], -1), axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def gen_graph(n: int, p: float, q: float, seed: int, directed: bool = True) -> BlockGraph:
    """Draw a two-block random graph.

    Every within-block ordered pair ``(i, j)``, ``i != j``, carries an edge
    independently with probability ``p``; every between-block ordered pair
    with probability ``q``. With ``directed=False`` the draw for ``(i, j)``,
    ``i < j``, is mirrored onto ``(j, i)``.
    """
    n = _check_n(n)
    p = _check_prob("p", p)
    q = _check_prob("q", q)
    rng = np.random.default_rng(seed)
    u = rng.random((n, n))
    if not directed:
        upper = np.triu(u, 1)
        u = upper + upper.T
    within, between = block_masks(n)
    return BlockGraph.from_dense(within & (u < p), between & (u < q), p, q,
                                 directed=directed, seed=seed)


def edge_counts(g: BlockGraph) -> tuple[int, int]:
    """Number of set bits in ``eps`` and ``delta``."""
    return (int(np.bitwise_count(g.eps_bits).sum()),
            int(np.bitwise_count(g.delta_bits).sum()))


@dataclass(frozen=True)
class GraphSequence:
    """Non-increasing edge-probability schedules indexed by ``N = 1, 2, ...``.

    ``p_seq[N - 1]`` is the within-block probability at system size ``N``.
    """

    p_seq: tuple[float, ...]
    q_seq: tuple[float, ...]
    seed: int
    directed: bool = True

    def __post_init__(self):
        for name in ("p_seq", "q_seq"):
            seq = tuple(float(v) for v in getattr(self, name))
            if not seq or seq[0] != 1.0:
                raise ValueError(f"{name} must start at 1")
            if any(b > a for a, b in zip(seq, seq[1:])):
                raise ValueError(f"{name} must be non-increasing")
            if any(not (0.0 < v <= 1.0) for v in seq):
                raise ValueError(f"{name} entries must lie in (0, 1]")
            object.__setattr__(self, name, seq)


def survival_chains(probs: Sequence[float], shape, rng: np.random.Generator,
                    symmetric: bool = False) -> np.ndarray:
    """Simulate independent edge chains that start present and are thinned.

    Returns a boolean array of shape ``(len(probs),) + shape``; slice ``k``
    holds the chain states at index ``N = k + 1``. A present edge survives
    the step ``N - 1 -> N`` with probability ``probs[N-1] / probs[N-2]`` and
    a removed edge never comes back, so the marginal at index N is
    ``probs[N-1]``.
    """
    probs = np.asarray(probs, dtype=float)
    if probs[0] != 1.0 or np.any(np.diff(probs) > 0):
        raise ValueError("probabilities must start at 1 and be non-increasing")
    shape = tuple(np.atleast_1d(shape))
    states = np.empty((len(probs),) + shape, dtype=bool)
    alive = np.ones(shape, dtype=bool)
    states[0] = alive
    for k in range(1, len(probs)):
        u = rng.random(shape)
        if symmetric:
            upper = np.triu(u, 1)
            u = upper + upper.T
        alive = alive & (u < probs[k] / probs[k - 1])
        states[k] = alive
    return states


def gen_nested(seq: GraphSequence, upto: int) -> list[BlockGraph]:
    """Coupled graphs for ``N = 2, 4, ..., upto`` built from per-pair edge chains.

    Every ordered pair ``(i, j)`` owns an eps-chain driven by ``p_seq`` and an
    independent delta-chain driven by ``q_seq``. The graph at size N reads the
    eps-chain on pairs that are within-block for that N and the delta-chain
    on the others, so edge sets only shrink along the sequence on pairs that
    keep their block relation.
    """
    upto = int(upto)
    if upto < 2:
        raise ValueError("upto must be >= 2")
    if len(seq.p_seq) < upto or len(seq.q_seq) < upto:
        raise ValueError(f"sequences must be defined through index {upto}")
    rng = np.random.default_rng(seq.seed)
    sym = not seq.directed
    eps_chain = survival_chains(seq.p_seq[:upto], (upto, upto), rng, symmetric=sym)
    delta_chain = survival_chains(seq.q_seq[:upto], (upto, upto), rng, symmetric=sym)
    graphs = []
    for size in range(2, upto + 1, 2):
        within, between = block_masks(size)
        graphs.append(BlockGraph.from_dense(
            eps_chain[size - 1, :size, :size] & within,
            delta_chain[size - 1, :size, :size] & between,
            seq.p_seq[size - 1], seq.q_seq[size - 1],
            directed=seq.directed, seed=seq.seed,
        ))
    return graphs
