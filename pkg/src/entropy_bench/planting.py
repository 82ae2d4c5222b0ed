"""Planted-partition graphs with a prescribed exact Max-Cut and high 3-/4-cut witnesses.

Vertices are split into two planted sides A and B, each halved again into
A1/A2 and B1/B2. The construction places

* exactly ``target_cut`` edges across A|B,
* enough B1-B2 edges that the 3-way split (A, B1, B2) reaches ``min_3cut``,
* enough A1-A2 edges that the 4-way split (A1, A2, B1, B2) reaches ``min_4cut``,
* the remaining edges inside the four quarters.

A random graph built this way usually has some other bipartition beating the
planted one. Competing cuts are therefore removed by rewiring: an edge cut by
the competitor is moved to a free slot of the same block pair that the
competitor does not cut. Block-pair edge counts never change, so all planted
witness values are preserved. Competitors come from tabu restarts first and
from exhaustive enumeration once the heuristics find nothing; each exhaustive
check counts as one attempt against the budget.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .exact import brute_force_maxcut
from .graph import Graph, Partition, cut_value
from .heuristics import TabuParams, SaParams, simulated_annealing, tabu_search
from ._util import mix_seed

log = logging.getLogger(__name__)

DEFAULT_ATTEMPTS = 1000


class PlantingError(RuntimeError):
    """Attempt budget exhausted.

    ``best`` is the candidate with the smallest known maximum cut and
    ``best_max_cut`` that cut (exact or a heuristic lower bound).
    """

    def __init__(self, message: str, best: Graph | None, best_max_cut: int | None):
        super().__init__(message)
        self.best = best
        self.best_max_cut = best_max_cut


@dataclass(frozen=True)
class PlantedGraphSpec:
    n: int
    m: int
    target_cut: int
    min_3cut: int = 0
    min_4cut: int = 0
    side_sizes: tuple[int, int] | None = None

    def __post_init__(self):
        sides = self.side_sizes or (self.n // 2, self.n - self.n // 2)
        object.__setattr__(self, "side_sizes", tuple(sides))
        a, b = self.side_sizes
        if a + b != self.n or a < 1 or b < 1:
            raise ValueError(f"side sizes {self.side_sizes} must be positive and sum to n={self.n}")
        if self.target_cut > a * b:
            raise ValueError(f"target_cut {self.target_cut} exceeds {a}x{b} crossing slots")
        if self.m < self.target_cut:
            raise ValueError("m must be >= target_cut")
        if self.m - self.target_cut > a * (a - 1) // 2 + b * (b - 1) // 2:
            raise ValueError("too few within-side slots for the non-crossing edges")
        if self.m > self.n * (self.n - 1) // 2:
            raise ValueError("m exceeds the number of vertex pairs")


PRESETS = {
    "paper30": PlantedGraphSpec(n=30, m=233, target_cut=146, min_3cut=191, min_4cut=210, side_sizes=(15, 15)),
}


@dataclass
class VerificationReport:
    n: int
    m: int
    target_cut: int
    max2cut: int
    max2cut_ok: bool
    min_3cut: int
    best_3cut: int
    best_3cut_source: str
    ok_3cut: bool
    min_4cut: int
    best_4cut: int
    best_4cut_source: str
    ok_4cut: bool
    passed: bool
    witnesses: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return asdict(self)


# -- block layout ---------------------------------------------------------------


def _halves(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = len(vertices) // 2
    return vertices[:h], vertices[h:]


def _block_slots(blocks: list[np.ndarray]) -> dict[tuple[int, int], list[tuple[int, int]]]:
    slots = {}
    for i, j in itertools.combinations_with_replacement(range(4), 2):
        if i == j:
            pairs = itertools.combinations(blocks[i], 2)
        else:
            pairs = itertools.product(blocks[i], blocks[j])
        slots[(i, j)] = [(min(u, v), max(u, v)) for u, v in pairs]
    return slots


CROSS = [(0, 2), (0, 3), (1, 2), (1, 3)]
WITHIN = [(0, 0), (1, 1), (2, 2), (3, 3)]


def _allocate(spec: PlantedGraphSpec, slots) -> dict[tuple[int, int], int]:
    """Edge counts per block pair for the non-crossing edges."""
    internal = spec.m - spec.target_cut
    need3 = max(0, spec.min_3cut - spec.target_cut) if spec.min_3cut else 0
    need4 = max(0, spec.min_4cut - spec.target_cut) if spec.min_4cut else 0
    cap_a, cap_b = len(slots[(0, 1)]), len(slots[(2, 3)])
    if need3 > max(cap_a, cap_b):
        raise ValueError(f"3-cut target needs {need3} half-crossing edges; capacity is {max(cap_a, cap_b)}")
    # the 3-cut witness (A, B1, B2) lives on the side with more half-crossing room
    three_side, other_side = ((2, 3), (0, 1)) if cap_b >= cap_a else ((0, 1), (2, 3))
    alloc = {three_side: need3, other_side: 0}
    extra4 = max(0, need4 - need3)
    room = len(slots[other_side])
    alloc[other_side] = min(extra4, room)
    alloc[three_side] += extra4 - alloc[other_side]
    if alloc[three_side] > len(slots[three_side]):
        raise ValueError("4-cut target exceeds the half-crossing capacity of both sides")
    rest = internal - alloc[three_side] - alloc[other_side]
    if rest < 0:
        raise ValueError(
            f"m - target_cut = {internal} internal edges cannot reach the 3-/4-cut targets "
            f"(needs {alloc[three_side] + alloc[other_side]})"
        )
    for key in WITHIN:
        alloc[key] = 0
    within_cap = sum(len(slots[key]) for key in WITHIN)
    spill = max(0, rest - within_cap)
    rest -= spill
    alloc["within"] = rest
    alloc["spill"] = spill
    return alloc


def _sample(spec: PlantedGraphSpec, rng: np.random.Generator):
    a, _ = spec.side_sizes
    perm = rng.permutation(spec.n)
    a1, a2 = _halves(perm[:a])
    b1, b2 = _halves(perm[a:])
    blocks = [a1, a2, b1, b2]
    slots = _block_slots(blocks)
    alloc = _allocate(spec, slots)
    edges: set[tuple[int, int]] = set()

    def take(pool, count):
        for idx in rng.choice(len(pool), size=count, replace=False):
            edges.add(pool[idx])

    cross_pool = [e for key in CROSS for e in slots[key]]
    take(cross_pool, spec.target_cut)
    take(slots[(0, 1)], alloc[(0, 1)])
    take(slots[(2, 3)], alloc[(2, 3)])
    take([e for key in WITHIN for e in slots[key]], alloc["within"])
    if alloc["spill"]:
        free = [e for key in ((0, 1), (2, 3)) for e in slots[key] if e not in edges]
        take(free, alloc["spill"])
    labels = np.empty(spec.n, np.int64)
    for b, verts in enumerate(blocks):
        labels[verts] = b
    return edges, labels


def _block_key(labels, u, v) -> tuple[int, int]:
    i, j = labels[u], labels[v]
    return (i, j) if i <= j else (j, i)


def _rewire(edges: set, labels: np.ndarray, competitor, excess: int, rng: np.random.Generator) -> int:
    """Move up to ``excess`` competitor-cut edges to uncut free slots of the same block pair."""
    side = competitor
    n = len(labels)
    moved = 0
    for _ in range(max(excess, 1)):
        cut_edges = [e for e in edges if side[e[0]] != side[e[1]]]
        order = rng.permutation(len(cut_edges))
        done = False
        for idx in order:
            e = cut_edges[idx]
            key = _block_key(labels, *e)
            free = [
                (u, v)
                for u in range(n)
                for v in range(u + 1, n)
                if _block_key(labels, u, v) == key and side[u] == side[v] and (u, v) not in edges
            ]
            if free:
                f = free[rng.integers(len(free))]
                edges.remove(e)
                edges.add(f)
                moved += 1
                done = True
                break
        if not done:
            break
    return moved


def _heuristic_competitor(g: Graph, target: int, rng: np.random.Generator, restarts: int):
    for _ in range(restarts):
        res = tabu_search(g, 2, TabuParams(seed=int(rng.integers(2**63))))
        if res.best_value > target:
            return res.witness.labels, res.best_value
    return None


def plant_graph(
    spec: PlantedGraphSpec,
    seed: int,
    max_attempts: int = DEFAULT_ATTEMPTS,
    restarts: int = 8,
    workers: int | None = None,
) -> Graph:
    """Build a graph whose exact Max-Cut is ``spec.target_cut`` with the planted bipartition optimal.

    The returned graph carries the 4-way planted labelling in ``Graph.planted``.
    One attempt is either an exhaustive Max-Cut check or a discarded sample
    (no legal rewiring left, or ``20 m`` rewiring rounds without success).
    Raises :class:`PlantingError` once ``max_attempts`` are used up.
    """
    rng = np.random.default_rng(seed)
    edges, labels = _sample(spec, rng)
    attempts = rounds = 0
    best_graph, best_value = None, None
    while attempts < max_attempts:
        g = Graph.from_edges(spec.n, edges, labels)
        found = _heuristic_competitor(g, spec.target_cut, rng, restarts)
        if found is None:
            attempts += 1
            sol = brute_force_maxcut(g, workers=workers)
            log.info("attempt %d: exact max cut %d", attempts, sol.best_value)
            if sol.best_value <= spec.target_cut:
                report = _verify(g, spec, sol.best_value, rng)
                if report.passed:
                    return g
                # witnesses are fixed by construction, so a failure here is structural
                raise PlantingError(f"candidate failed verification: {report}", g, sol.best_value)
            competitor, value = sol.witness.labels, sol.best_value
        else:
            competitor, value = found
        if best_value is None or value < best_value:
            best_graph, best_value = g, value
        rounds += 1
        if _rewire(edges, labels, competitor, value - spec.target_cut, rng) == 0 or rounds >= 20 * spec.m:
            attempts += 1
            rounds = 0
            edges, labels = _sample(spec, rng)
    raise PlantingError(f"no verified graph within {max_attempts} attempts", best_graph, best_value)


# -- verification -----------------------------------------------------------------


def planted_witnesses(g: Graph) -> dict[int, list[Partition]]:
    """2-, 3- and 4-way partitions derived from the planted quarter labelling."""
    if g.planted is None:
        return {}
    q = np.asarray(g.planted)
    two = Partition.of(np.where(q <= 1, 0, 1), 2)
    three = [
        Partition.of(np.select([q <= 1, q == 2], [0, 1], 2), 3),
        Partition.of(np.select([q == 0, q == 1], [0, 1], 2), 3),
    ]
    four = [Partition.of(q, 4)]
    return {2: [two], 3: three, 4: four}


def _best_kcut(g: Graph, k: int, rng: np.random.Generator, runs: int = 20):
    best_val, best_part, source = -1, None, ""
    for w in planted_witnesses(g).get(k, []):
        v = cut_value(g, w)
        if v > best_val:
            best_val, best_part, source = v, w, "planted"
    for i in range(runs):
        s = int(rng.integers(2**63))
        for name, res in (
            ("tabu", tabu_search(g, k, TabuParams(max_iterations=1000, seed=s))),
            ("sa", simulated_annealing(g, k, SaParams(seed=mix_seed(s, 1)))),
        ):
            if res.best_value > best_val:
                best_val, best_part, source = res.best_value, res.witness, name
    return best_val, best_part, source


def _verify(g: Graph, spec: PlantedGraphSpec, max2: int, rng) -> VerificationReport:
    b3, w3, s3 = _best_kcut(g, 3, rng)
    b4, w4, s4 = _best_kcut(g, 4, rng)
    ok2 = max2 == spec.target_cut
    ok3 = b3 >= spec.min_3cut
    ok4 = b4 >= spec.min_4cut
    return VerificationReport(
        n=g.n, m=g.m, target_cut=spec.target_cut,
        max2cut=max2, max2cut_ok=ok2,
        min_3cut=spec.min_3cut, best_3cut=b3, best_3cut_source=s3, ok_3cut=ok3,
        min_4cut=spec.min_4cut, best_4cut=b4, best_4cut_source=s4, ok_4cut=ok4,
        passed=ok2 and ok3 and ok4 and g.m == spec.m,
        witnesses={"3": list(w3.labels) if w3 else None, "4": list(w4.labels) if w4 else None},
    )


def verify_planted(g: Graph, spec: PlantedGraphSpec, seed: int = 42, workers: int | None = None) -> VerificationReport:
    """Exact Max-Cut check plus heuristic 3-/4-cut lower bounds; never raises on failure."""
    if g.n != spec.n:
        raise ValueError(f"graph has {g.n} vertices, spec expects {spec.n}")
    sol = brute_force_maxcut(g, workers=workers)
    return _verify(g, spec, sol.best_value, np.random.default_rng(seed))
