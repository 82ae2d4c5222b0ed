"""Simple undirected graphs, random generators and k-way cut evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K


class GraphError(ValueError):
    """Malformed graph input (self-loop, duplicate edge, id out of range)."""


@dataclass(frozen=True)
class Graph:
    """Immutable simple graph on vertices ``0 .. n-1``.

    ``edges`` is normalized to ``u < v`` pairs in lexicographic order.
    ``planted`` optionally carries the 4-way witness labelling produced by
    :func:`entropy_bench.planting.plant_graph` (labels 0/1 form one planted
    side, 2/3 the other).
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    planted: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"vertex count must be >= 1, got {self.n}")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u}, {v}) has a vertex outside [0, {self.n})")
            if (u, v) in seen:
                raise GraphError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        if self.planted is not None and len(self.planted) != self.n:
            raise GraphError("planted labelling length differs from n")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], planted=None) -> "Graph":
        norm = []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            norm.append((u, v) if u < v else (v, u))
        norm.sort()
        return cls(n, tuple(norm), None if planted is None else tuple(int(x) for x in planted))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbor_sets(self) -> tuple[int, ...]:
        """Per-vertex neighbour bitsets as Python ints (any n)."""
        adj = [0] * self.n
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return tuple(adj)

    @cached_property
    def bitsets(self) -> np.ndarray:
        """``uint64`` neighbour bitsets for the compiled enumeration paths."""
        if self.n > 64:
            raise GraphError(f"bitset kernels need n <= 64, got {self.n}")
        return np.array(self.neighbor_sets, dtype=np.uint64)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        deg = np.zeros(self.n + 1, np.int64)
        for u, v in self.edges:
            deg[u + 1] += 1
            deg[v + 1] += 1
        indptr = np.cumsum(deg)
        indices = np.empty(2 * self.m, np.int64)
        fill = indptr[:-1].copy()
        for u, v in self.edges:
            indices[fill[u]] = v
            fill[u] += 1
            indices[fill[v]] = u
            fill[v] += 1
        return indptr, indices

    def degrees(self) -> np.ndarray:
        indptr, _ = self.csr
        return np.diff(indptr)

    def neighbors(self, v: int) -> list[int]:
        bits = self.neighbor_sets[v]
        return [u for u in range(self.n) if bits >> u & 1]

    def is_bipartite(self) -> bool:
        color = [-1] * self.n
        for s in range(self.n):
            if color[s] >= 0:
                continue
            color[s] = 0
            stack = [s]
            while stack:
                v = stack.pop()
                for u in self.neighbors(v):
                    if color[u] < 0:
                        color[u] = 1 - color[v]
                        stack.append(u)
                    elif color[u] == color[v]:
                        return False
        return True

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {"n": self.n, "edges": [[u, v] for u, v in self.edges]}
        if self.planted is not None:
            d["planted_labels"] = list(self.planted)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        try:
            return cls.from_edges(int(d["n"]), d["edges"], d.get("planted_labels"))
        except (KeyError, TypeError, IndexError) as exc:
            raise GraphError(f"malformed graph JSON: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"

    def to_dimacs(self) -> str:
        lines = [f"p edge {self.n} {self.m}"]
        lines += [f"e {u + 1} {v + 1}" for u, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dimacs(cls, text: str) -> "Graph":
        n = None
        declared = None
        edges = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            parts = raw.split()
            if not parts or parts[0] == "c":
                continue
            if parts[0] == "p":
                if len(parts) != 4 or parts[1] != "edge":
                    raise GraphError(f"line {lineno}: expected 'p edge n m'")
                n, declared = int(parts[2]), int(parts[3])
            elif parts[0] == "e":
                if n is None:
                    raise GraphError(f"line {lineno}: edge before problem line")
                if len(parts) != 3:
                    raise GraphError(f"line {lineno}: expected 'e u v'")
                edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
            else:
                raise GraphError(f"line {lineno}: unknown record {parts[0]!r}")
        if n is None:
            raise GraphError("missing 'p edge n m' line")
        if declared != len(edges):
            raise GraphError(f"header declares {declared} edges, found {len(edges)}")
        return cls.from_edges(n, edges)


def load_graph(path: str | Path) -> Graph:
    """Read a graph from JSON, or DIMACS when the file does not start with ``{``."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: {exc}") from exc
        return Graph.from_dict(data)
    return Graph.from_dimacs(text)


def save_graph(g: Graph, path: str | Path) -> None:
    path = Path(path)
    if path.suffix in (".dimacs", ".col", ".txt"):
        path.write_text(g.to_dimacs())
    else:
        path.write_text(g.to_json())


# -- generators ---------------------------------------------------------------


def _pair_from_index(n: int, idx: np.ndarray) -> np.ndarray:
    """Decode lexicographic pair indices ``0 .. n(n-1)/2 - 1`` into ``(u, v)`` rows."""
    # row u starts at offset u*n - u*(u+1)/2
    starts = np.array([r * n - r * (r + 1) // 2 for r in range(n)], np.int64)
    u = np.searchsorted(starts, idx, side="right") - 1
    v = idx - starts[u] + u + 1
    return np.stack([u, v], axis=1)


def gen_gnp(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi-Gilbert G(n, p): each pair is an edge independently with probability ``p``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    keep = np.flatnonzero(rng.random(total) < p)
    pairs = _pair_from_index(n, keep)
    return Graph(n, tuple((int(a), int(b)) for a, b in pairs))


def gen_gnm(n: int, m: int, seed: int) -> Graph:
    """Uniform random simple graph with exactly ``m`` edges."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = n * (n - 1) // 2
    if not 0 <= m <= total:
        raise ValueError(f"m must lie in [0, {total}] for n={n}, got {m}")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(total, size=m, replace=False))
    pairs = _pair_from_index(n, chosen)
    return Graph(n, tuple((int(a), int(b)) for a, b in pairs))


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_bipartite(a: int, b: int) -> Graph:
    return Graph.from_edges(a + b, [(u, a + v) for u in range(a) for v in range(b)])


# -- cuts -----------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """A k-way label assignment; ``labels[v]`` is the part of vertex ``v``."""

    labels: tuple[int, ...]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        bad = [x for x in self.labels if not 0 <= x < self.k]
        if bad:
            raise ValueError(f"labels {bad[:5]} outside [0, {self.k})")

    @classmethod
    def of(cls, labels: Iterable[int], k: int) -> "Partition":
        return cls(tuple(int(x) for x in labels), k)

    def __len__(self) -> int:
        return len(self.labels)


def cut_value(g: Graph, labels: "Partition | Sequence[int]") -> int:
    """Number of edges whose endpoints carry different labels."""
    if isinstance(labels, Partition):
        labels = labels.labels
    if len(labels) != g.n:
        raise ValueError(f"partition has {len(labels)} labels for a graph with {g.n} vertices")
    return sum(1 for u, v in g.edges if labels[u] != labels[v])


def cut_value_fast(g: Graph, labels: np.ndarray) -> int:
    indptr, indices = g.csr
    return int(K.kcut_value(indptr, indices, np.asarray(labels, dtype=np.int64)))


def complement(labels: Sequence[int]) -> list[int]:
    """Swap the two sides of a 2-way partition."""
    return [1 - x for x in labels]


def canonical_2cut(labels: Sequence[int]) -> list[int]:
    """Representative with ``labels[0] == 0`` of a complement-identified bipartition."""
    return list(labels) if labels[0] == 0 else complement(labels)
