"""Polynomial objectives with a sum constraint, and PSO / ECA population minimizers."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

MAX_DEGREE = 5


class ObjectiveError(ValueError):
    pass


# -- the two-variable benchmark -------------------------------------------------------


def eval_g(x: float, y: float) -> float:
    """``(x^4 + y^4)/4 - 5 (x^3 + y^3)/3 + 3 (x^2 + y^2)``; minima at 0 and 3 per axis, maxima at 2."""
    return (x**4 + y**4) / 4 - 5 * (x**3 + y**3) / 3 + 3 * (x**2 + y**2)


# -- polynomial objectives ------------------------------------------------------------


@dataclass(frozen=True)
class PolynomialObjective:
    """Sparse polynomial ``constant + sum_t coef[t] * prod_{i in t} v[i]`` of degree <= 5.

    Each key is a sorted index tuple and stands for one monomial, so a
    symmetric tensor entry is stored once with its permutation multiplicity
    already folded into the coefficient (``J_01 = J_10 = 0.5`` becomes
    ``{(0, 1): 1.0}``). ``R`` is the optional sum constraint ``sum(v) = R``.
    """

    dimension: int
    terms: Mapping[tuple[int, ...], float]
    R: float | None = None
    constant: float = 0.0
    _idx: np.ndarray = field(init=False, repr=False, compare=False)
    _coef: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ObjectiveError("dimension must be >= 1")
        clean: dict[tuple[int, ...], float] = {}
        for t, c in self.terms.items():
            t = tuple(int(i) for i in t)
            if not 1 <= len(t) <= MAX_DEGREE:
                raise ObjectiveError(f"term {t} must have degree 1..{MAX_DEGREE}")
            if list(t) != sorted(t):
                raise ObjectiveError(f"index tuple {t} must be sorted non-decreasing")
            if t[0] < 0 or t[-1] >= self.dimension:
                raise ObjectiveError(f"index tuple {t} out of range for dimension {self.dimension}")
            clean[t] = clean.get(t, 0.0) + float(c)
        object.__setattr__(self, "terms", clean)
        # pad with index `dimension`, which points at a constant 1 during evaluation
        idx = np.full((len(clean), MAX_DEGREE), self.dimension, np.int64)
        for row, t in enumerate(clean):
            idx[row, : len(t)] = t
        object.__setattr__(self, "_idx", idx)
        object.__setattr__(self, "_coef", np.fromiter(clean.values(), float, len(clean)))

    @property
    def degree(self) -> int:
        return max((len(t) for t in self.terms), default=0)

    def __call__(self, v) -> float:
        return eval_polynomial(self, v)

    def to_dict(self) -> dict:
        out = {
            "dimension": self.dimension,
            "R": self.R,
            "terms": [{"idx": list(t), "coef": c} for t, c in sorted(self.terms.items())],
        }
        if self.constant:
            out["constant"] = self.constant
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "PolynomialObjective":
        try:
            terms = {tuple(t["idx"]): float(t["coef"]) for t in d["terms"]}
            return cls(int(d["dimension"]), terms, d.get("R"), float(d.get("constant", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ObjectiveError(f"malformed polynomial objective: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "PolynomialObjective":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _extended(obj: PolynomialObjective, v) -> np.ndarray:
    v = np.asarray(v, float)
    if v.shape != (obj.dimension,):
        raise ObjectiveError(f"expected a vector of length {obj.dimension}, got shape {v.shape}")
    return np.append(v, 1.0)


def eval_polynomial(obj: PolynomialObjective, v) -> float:
    ve = _extended(obj, v)
    return float(obj.constant + np.prod(ve[obj._idx], axis=1) @ obj._coef)


def polynomial_gradient(obj: PolynomialObjective, v) -> np.ndarray:
    """Analytic gradient: each factor of each monomial is differentiated in turn."""
    ve = _extended(obj, v)
    vals = ve[obj._idx]
    grad = np.zeros(obj.dimension + 1)
    for p in range(MAX_DEGREE):
        others = np.prod(np.delete(vals, p, axis=1), axis=1)
        np.add.at(grad, obj._idx[:, p], obj._coef * others)
    return grad[: obj.dimension]


def g_as_polynomial() -> PolynomialObjective:
    terms = {}
    for i in range(2):
        terms[(i,) * 4] = 0.25
        terms[(i,) * 3] = -5.0 / 3.0
        terms[(i,) * 2] = 3.0
    return PolynomialObjective(2, terms)


def random_polynomial(dimension: int, n_terms: int, max_degree: int = MAX_DEGREE,
                      rng: np.random.Generator | None = None) -> PolynomialObjective:
    rng = rng or np.random.default_rng()
    terms = {}
    for _ in range(n_terms):
        deg = int(rng.integers(1, max_degree + 1))
        t = tuple(sorted(int(i) for i in rng.integers(0, dimension, deg)))
        terms[t] = terms.get(t, 0.0) + float(rng.normal())
    return PolynomialObjective(dimension, terms)


# -- feasible regions -----------------------------------------------------------------


def project_simplex(v, R: float) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) = R}`` by sort and threshold.

    ``R = 0`` yields the zero vector, the only feasible point.
    """
    v = np.asarray(v, float)
    if R < 0:
        raise ValueError("R must be >= 0")
    if R == 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - R
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("box bounds must be non-empty and of equal length")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("box lower bound exceeds upper bound")

    @classmethod
    def cube(cls, lo: float, hi: float, dimension: int) -> "Box":
        return cls((lo,) * dimension, (hi,) * dimension)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, (count, self.dimension))

    def repair(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def span(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)


@dataclass(frozen=True)
class Simplex:
    dimension: int
    R: float

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.R * rng.dirichlet(np.ones(self.dimension), count)

    def repair(self, x: np.ndarray) -> np.ndarray:
        return np.array([project_simplex(row, self.R) for row in np.atleast_2d(x)]).reshape(x.shape)

    def span(self) -> np.ndarray:
        return np.full(self.dimension, float(self.R))


Region = Box | Simplex

# default search box for the benchmark: contains every critical point {0, 2, 3} per axis
G_BOX = Box.cube(-1.0, 5.0, 2)


# -- optimizers -----------------------------------------------------------------------


@dataclass
class PsoParams:
    population: int = 14
    iterations: int = 200
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    seed: int = 0

    def validate(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class EcaParams:
    population: int = 14
    iterations: int = 200
    neighbors: int = 7
    eta: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 2 <= self.neighbors:
            raise ValueError("neighbors must be >= 2")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")


@dataclass
class ContinuousResult:
    best_point: np.ndarray
    best_value: float
    trace: list[float]
    wall_time: float
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "best_point": [float(x) for x in self.best_point],
            "best_value": self.best_value,
            "trace": self.trace,
            "evaluations": self.evaluations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _initial(region: Region, n: int, rng: np.random.Generator, init) -> np.ndarray:
    if init is None:
        return region.sample(rng, n)
    x = np.asarray(init, float)
    if x.shape != (n, region.dimension):
        raise ValueError(f"initial population must have shape {(n, region.dimension)}")
    return region.repair(x.copy())


def _evaluate(objective: Callable, x: np.ndarray) -> np.ndarray:
    return np.array([objective(row) for row in x], float)


def pso_minimize(
    objective: Callable,
    region: Region,
    params: PsoParams | None = None,
    init=None,
) -> ContinuousResult:
    """Inertia-weight particle swarm.

    ``v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)`` with fresh uniform
    ``r1, r2`` per coordinate; positions are repaired into ``region`` after
    every step (clamped to a box, projected onto a simplex). Velocities are
    limited to the region's span.
    """
    params = params or PsoParams()
    params.validate()
    rng = np.random.default_rng(params.seed)
    t0 = time.perf_counter()
    n, d = params.population, region.dimension
    x = _initial(region, n, rng, init)
    vmax = region.span()
    v = rng.uniform(-1, 1, (n, d)) * vmax * 0.1
    fx = _evaluate(objective, x)
    pbest, pval = x.copy(), fx.copy()
    g = int(np.argmin(pval))
    gbest, gval = pbest[g].copy(), float(pval[g])
    trace = [gval]
    evals = n
    for _ in range(params.iterations):
        r1, r2 = rng.random((n, d)), rng.random((n, d))
        v = params.inertia * v + params.cognitive * r1 * (pbest - x) + params.social * r2 * (gbest - x)
        v = np.clip(v, -vmax, vmax)
        x = region.repair(x + v)
        fx = _evaluate(objective, x)
        evals += n
        better = fx < pval
        pbest[better], pval[better] = x[better], fx[better]
        g = int(np.argmin(pval))
        if pval[g] < gval:
            gbest, gval = pbest[g].copy(), float(pval[g])
        trace.append(gval)
    return ContinuousResult(gbest, gval, trace, time.perf_counter() - t0, evals)


def eca_minimize(
    objective: Callable,
    region: Region,
    params: EcaParams | None = None,
    init=None,
) -> ContinuousResult:
    """Evolutionary centers algorithm.

    For each member ``x`` a group ``U`` of ``K`` members (``x`` plus ``K - 1``
    random peers) defines a center of mass ``c``, with masses given by rank
    inside ``U`` (best gets ``K``, worst gets 1). The trial point
    ``y = x + eta * r * (c - u_worst)`` with ``r ~ U(0, 1)`` per coordinate
    is repaired into ``region``. Parents and trials are pooled and the best
    ``N`` survive, so the incumbent never worsens.
    """
    params = params or EcaParams()
    params.validate()
    rng = np.random.default_rng(params.seed)
    t0 = time.perf_counter()
    n, d = params.population, region.dimension
    k = min(params.neighbors, n)
    x = _initial(region, n, rng, init)
    fx = _evaluate(objective, x)
    trace = [float(fx.min())]
    evals = n
    mass = np.arange(k, 0, -1, dtype=float)
    for _ in range(params.iterations):
        # K - 1 distinct peers per member: smallest random keys, self excluded
        keys = rng.random((n, n))
        np.fill_diagonal(keys, np.inf)
        group = np.hstack((np.arange(n)[:, None], np.argsort(keys, axis=1)[:, : k - 1]))
        order = np.take_along_axis(group, np.argsort(fx[group], axis=1, kind="stable"), axis=1)
        c = np.einsum("j,ijd->id", mass, x[order]) / mass.sum()
        trials = region.repair(x + params.eta * rng.random((n, d)) * (c - x[order[:, -1]]))
        ft = _evaluate(objective, trials)
        evals += n
        pool = np.vstack((x, trials))
        fpool = np.concatenate((fx, ft))
        keep = np.argsort(fpool, kind="stable")[:n]
        x, fx = pool[keep], fpool[keep]
        trace.append(float(fx[0]))
    return ContinuousResult(x[0].copy(), float(fx[0]), trace, time.perf_counter() - t0, evals)


OPTIMIZERS = {"pso": (pso_minimize, PsoParams), "eca": (eca_minimize, EcaParams)}


def population_near(point, count: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``count`` points drawn uniformly from the cube of half-width ``radius`` around ``point``."""
    p = np.asarray(point, float)
    return p + rng.uniform(-radius, radius, (count, p.size))


def g_objective(v) -> float:
    return eval_g(float(v[0]), float(v[1]))
