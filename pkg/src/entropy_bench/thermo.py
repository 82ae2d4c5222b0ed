"""Gibbs sampling over cut configurations and effective-temperature fitting.

Convention: configurations are weighted by ``exp(+beta * cut)``, so larger
``beta`` concentrates probability on larger cuts. An energy-based reading
``exp(-beta * E)`` is recovered with ``E = -cut``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import _kernels as K
from ._util import mix_seed, parallel_map, to_kernel_seed
from .exact import DensityOfStates
from .graph import Graph

BETA_RANGE = (0.0, 20.0)
BETA_TOL = 1e-6


class InsufficientDataError(ValueError):
    """Fewer usable histogram bins than the fit needs."""


@dataclass
class CutHistogram:
    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @classmethod
    def from_values(cls, values) -> "CutHistogram":
        vals, cnt = np.unique(np.asarray(values), return_counts=True)
        return cls({int(v): int(c) for v, c in zip(vals, cnt)})

    def merge(self, other: "CutHistogram") -> "CutHistogram":
        out = dict(self.counts)
        for k, c in other.counts.items():
            out[k] = out.get(k, 0) + c
        return CutHistogram(out)

    def proportions(self) -> dict[int, float]:
        n = self.total
        return {k: c / n for k, c in self.counts.items()}

    def to_csv(self) -> str:
        rows = ["k,frequency"] + [f"{k},{self.counts[k]}" for k in sorted(self.counts)]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "CutHistogram":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "k,frequency":
            raise ValueError("histogram CSV must start with header 'k,frequency'")
        counts = {}
        for ln in lines[1:]:
            a, b = ln.split(",")
            counts[int(a)] = counts.get(int(a), 0) + int(float(b))
        return cls(counts)

    @classmethod
    def load(cls, path: str | Path) -> "CutHistogram":
        return cls.from_csv(Path(path).read_text())


@dataclass
class GibbsFit:
    beta: float
    chi2_reduced: float
    dof: int
    residuals: dict[int, float]
    predicted: dict[int, float]
    sigmas: dict[int, float] = field(default_factory=dict)
    observed: dict[int, int] = field(default_factory=dict)
    beta_stderr: float = math.nan
    at_boundary: bool = False

    def report(self) -> dict:
        bins = [
            {
                "k": k,
                "observed": self.observed.get(k, 0),
                "predicted": self.predicted[k],
                "sigma": self.sigmas[k],
                "residual": self.residuals[k],
            }
            for k in sorted(self.residuals)
        ]
        return {
            "beta": self.beta,
            "beta_stderr": self.beta_stderr,
            "chi2_reduced": self.chi2_reduced,
            "dof": self.dof,
            "at_boundary": self.at_boundary,
            "bins": bins,
        }

    def to_json(self) -> str:
        return json.dumps(self.report(), indent=2) + "\n"


# -- sampling ---------------------------------------------------------------------


def gibbs_sample(
    g: Graph,
    beta: float,
    n_samples: int,
    burn_in: int | None = None,
    thinning: int | None = None,
    seed: int = 0,
) -> CutHistogram:
    """Metropolis chain with single-spin flips, stationary law proportional to ``exp(beta * cut)``.

    Defaults: ``burn_in = 100 n`` steps and ``thinning = n`` steps.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    burn_in = 100 * g.n if burn_in is None else burn_in
    thinning = g.n if thinning is None else thinning
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    indptr, indices = g.csr
    cuts, _, _ = K.metropolis_kernel(indptr, indices, float(beta), n_samples, burn_in, thinning,
                                     to_kernel_seed(seed), False)
    return CutHistogram.from_values(cuts)


def gibbs_sample_chains(
    g: Graph,
    beta: float,
    n_samples: int,
    chains: int,
    seed: int = 0,
    workers: int | None = None,
    **kwargs,
) -> CutHistogram:
    """Independent chains with derived seeds, histograms merged by addition."""
    per = [n_samples // chains + (1 if i < n_samples % chains else 0) for i in range(chains)]
    hists = parallel_map(
        lambda i: gibbs_sample(g, beta, per[i], seed=mix_seed(seed, i), **kwargs),
        [i for i in range(chains) if per[i] > 0],
        workers=workers,
    )
    out = CutHistogram({})
    for h in hists:
        out = out.merge(h)
    return out


def metropolis_trajectory(g: Graph, beta: float, steps: int, seed: int = 0) -> np.ndarray:
    """Packed spin configuration after every Metropolis step (``n <= 62``)."""
    if g.n > 62:
        raise ValueError("trajectory recording packs spins into int64; n must be <= 62")
    indptr, indices = g.csr
    _, states, _ = K.metropolis_kernel(indptr, indices, float(beta), 1, steps - 1, 1,
                                       to_kernel_seed(seed), True)
    return states


# -- model ------------------------------------------------------------------------


def _log_dos(dos: DensityOfStates | Mapping[int, float]) -> tuple[np.ndarray, np.ndarray]:
    counts = dos.counts if isinstance(dos, DensityOfStates) else dos
    ks = np.array(sorted(k for k, c in counts.items() if c > 0), dtype=float)
    if ks.size == 0:
        raise ValueError("density of states has no non-zero entries")
    logw = np.array([math.log(counts[int(k)]) for k in ks])
    return ks, logw


def predicted_cut_distribution(dos: DensityOfStates | Mapping[int, float], beta: float) -> dict[int, float]:
    """``P(k) = Omega(k) exp(beta k) / sum_k' Omega(k') exp(beta k')`` via log-sum-exp."""
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    ks, logw = _log_dos(dos)
    z = logw + beta * ks
    z -= z.max()
    p = np.exp(z)
    p /= p.sum()
    return {int(k): float(x) for k, x in zip(ks, p)}


def chi2_reduced(observed, predicted, sigmas, fitted_params: int = 1) -> float:
    """``sum(((obs - pred) / sigma)^2) / dof`` with ``dof = usable bins - fitted_params``.

    Arguments are aligned sequences; bins with ``sigma <= 0`` are skipped.
    """
    obs = np.asarray(observed, float)
    pred = np.asarray(predicted, float)
    sig = np.asarray(sigmas, float)
    if not (obs.shape == pred.shape == sig.shape):
        raise ValueError("observed, predicted and sigmas must be aligned")
    use = sig > 0
    dof = int(use.sum()) - fitted_params
    if dof <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    r = (obs[use] - pred[use]) / sig[use]
    return float(np.dot(r, r) / dof)


def frequency_sigma(f: float, total: int) -> float:
    """Binomial error bar ``sqrt(f (1 - f/N))`` with a one-count floor for degenerate bins."""
    s = f * (1.0 - f / total)
    if s <= 0:
        s = 1.0 * (1.0 - 1.0 / total)
    return math.sqrt(s)


def _golden_min(fn, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    # endpoints are candidates too; golden section never evaluates them
    return min((lo, x, hi), key=fn)


def _scan_then_refine(fn, lo: float, hi: float, tol: float, points: int = 201) -> float:
    """Grid scan followed by golden section inside the best grid bracket.

    chi2(beta) is not unimodal: once the predicted mass moves past the observed
    cut values it flattens into a plateau, where golden section alone drifts.
    """
    grid = np.linspace(lo, hi, points)
    vals = [fn(float(b)) for b in grid]
    i = int(np.argmin(vals))
    a, b = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, points - 1)])
    return _golden_min(fn, a, b, tol)


def _sandwich_stderr(counts, beta: float, ks: list[int], sig: np.ndarray, total: int) -> float:
    """Standard error of the weighted least-squares beta under multinomial sampling.

    Linearizing the estimator gives ``var = a' S a / (a' J)^2`` with
    ``J_k = N dp_k/dbeta = N p_k (k - <k>)``, weights ``a = J / sigma^2`` and
    ``S = N (diag(p) - p p')`` the multinomial covariance at the fitted beta.
    Unlike the chi-square curvature this accounts for the weights being
    estimated from the data.
    """
    q = predicted_cut_distribution(counts, beta)
    mean_k = sum(k * v for k, v in q.items())
    p = np.array([q.get(k, 0.0) for k in ks])
    jac = total * p * (np.asarray(ks, float) - mean_k)
    a = jac / sig**2
    denom = float(a @ jac) ** 2
    if denom <= 0:
        return math.inf
    var = total * (float(a**2 @ p) - float(a @ p) ** 2)
    return math.sqrt(max(var, 0.0) / denom)


def fit_beta(
    dos: DensityOfStates | Mapping[int, float],
    observed: CutHistogram,
    beta_range: tuple[float, float] = BETA_RANGE,
) -> GibbsFit:
    """Weighted least-squares fit of the inverse temperature.

    Bins are every k between the smallest and largest observed cut value that
    either was observed or has ``Omega(k) > 0``. Empty bins inside that range
    get the one-count sigma floor, so gaps in the data pull on the fit.
    """
    N = observed.total
    if N < 2:
        raise InsufficientDataError("need at least two observations")
    counts = dos.counts if isinstance(dos, DensityOfStates) else dos
    seen = [k for k, c in observed.counts.items() if c > 0]
    lo, hi = min(seen), max(seen)
    ks = sorted(k for k in set(seen) | {k for k, c in counts.items() if c > 0} if lo <= k <= hi)
    f = np.array([observed.counts.get(k, 0) for k in ks], float)
    sig = np.array([frequency_sigma(x, N) for x in f])
    if len(ks) < 3:
        raise InsufficientDataError(f"need >= 3 usable bins, got {len(ks)}")

    def expected(beta: float) -> np.ndarray:
        p = predicted_cut_distribution(counts, beta)
        return np.array([N * p.get(k, 0.0) for k in ks])

    def chi2(beta: float) -> float:
        r = (f - expected(beta)) / sig
        return float(np.dot(r, r))

    beta = _scan_then_refine(chi2, beta_range[0], beta_range[1], BETA_TOL)
    at_boundary = beta - beta_range[0] < 1e-4 or beta_range[1] - beta < 1e-4
    if at_boundary:
        warnings.warn(f"fitted beta {beta:.4g} sits at the search boundary {beta_range}", stacklevel=2)
    pred = expected(beta)
    dof = len(ks) - 1
    red = chi2(beta) / dof
    stderr = _sandwich_stderr(counts, beta, ks, sig, N)
    return GibbsFit(
        beta=beta,
        chi2_reduced=red,
        dof=dof,
        residuals={k: float((f[i] - pred[i]) / sig[i]) for i, k in enumerate(ks)},
        predicted={k: float(pred[i]) for i, k in enumerate(ks)},
        sigmas={k: float(sig[i]) for i, k in enumerate(ks)},
        observed={k: int(f[i]) for i, k in enumerate(ks)},
        beta_stderr=stderr,
        at_boundary=at_boundary,
    )


def total_variation(p: Mapping[int, float], q: Mapping[int, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
