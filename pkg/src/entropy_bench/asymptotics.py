"""Annealed cut-count statistics on G(n, 1/2) and Goemans-Williamson threshold formulas."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from scipy.special import log_ndtr

from ._util import mix_seed, parallel_map
from .exact import density_of_states_exact
from .graph import gen_gnp

ALPHA_GW = 0.87856
HASTAD = 16 / 17
P_STAR = 0.7632
POISSON_REGIME = (0.2, 5.0)
LN2 = math.log(2.0)


class RegimeWarning(UserWarning):
    """Expected count outside the finite-lambda window where the Poisson limit applies."""


class DegenerateDenominator(ArithmeticError):
    pass


@dataclass(frozen=True)
class AnnealedParams:
    n: int

    @property
    def mu(self) -> float:
        return self.n**2 / 8

    @property
    def sigma2(self) -> float:
        return self.n**2 / 16

    @property
    def n_configs(self) -> int:
        return 2 ** (self.n - 1)


@dataclass(frozen=True)
class GwParams:
    alpha_gw: float = ALPHA_GW
    hastad: float = HASTAD
    p_star: float = P_STAR
    beta: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha_gw < self.hastad < 1:
            raise ValueError("need 0 < alpha_gw < hastad < 1")
        if self.p_star <= 0:
            raise ValueError("p_star must be positive")


# -- first moment ---------------------------------------------------------------------


def log_expected_count_gaussian(n: int, k: float) -> float:
    if n < 2:
        raise ValueError("n must be >= 2")
    return (n + 1) * LN2 - math.log(n) - 0.5 * math.log(2 * math.pi) - 8 * (k - n * n / 8) ** 2 / n**2


def expected_count_gaussian(n: int, k: float) -> float:
    """Balanced-cut Gaussian approximation ``2^(n+1)/(n sqrt(2 pi)) exp(-8 (k - n^2/8)^2 / n^2)``."""
    return math.exp(log_expected_count_gaussian(n, k))


@lru_cache(maxsize=None)
def _size_classes(n: int) -> tuple[tuple[int, int], ...]:
    """``(multiplicity, crossing slots)`` per bipartition size class, complements identified."""
    out = []
    for s in range(n // 2 + 1):
        mult = comb(n, s) if 2 * s < n else comb(n, s) // 2
        out.append((mult, s * (n - s)))
    return tuple(out)


def expected_count_exact_fraction(n: int, k: int) -> Fraction:
    total = Fraction(0)
    for mult, slots in _size_classes(n):
        if 0 <= k <= slots:
            total += Fraction(mult * comb(slots, k), 2**slots)
    return total


def expected_count_exact(n: int, k: int) -> float:
    """E[Omega(k)] on G(n, 1/2) summed exactly over bipartition size classes.

    Each class of sizes ``(s, n - s)`` contributes its multiplicity times
    ``P(Binomial(s (n - s), 1/2) = k)``; the ``s = n/2`` class is halved so the
    total over ``k`` is ``2^(n-1)``. Rational arithmetic, so exact for any n
    up to the documented limit of 40.
    """
    if n > 40:
        raise ValueError("exact expectation is limited to n <= 40")
    return float(expected_count_exact_fraction(n, k))


# -- Poisson limit --------------------------------------------------------------------


def poisson_pmf(lam: float, m: int) -> float:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0:
        return 1.0 if m == 0 else 0.0
    return math.exp(m * math.log(lam) - lam - math.lgamma(m + 1))


def choose_tail_k(n: int, lambda_target: float = 1.0) -> int:
    """Cut value above the mode whose exact expected count is closest (in log) to ``lambda_target``."""
    mode = max(range(n * n // 4 + 1), key=lambda k: expected_count_exact_fraction(n, k))
    best, best_gap = mode, math.inf
    for k in range(mode, n * n // 4 + 1):
        lam = expected_count_exact(n, k)
        if lam <= 0:
            break
        gap = abs(math.log(lam / lambda_target))
        if gap < best_gap:
            best, best_gap = k, gap
    return best


@dataclass
class PoissonCheckReport:
    n: int
    k: int
    lambda_formula: float
    lambda_exact: float
    sample_mean: float
    sample_variance: float
    second_factorial_moment: float
    graphs_sampled: int
    seed: int
    in_regime: bool = True

    @property
    def dispersion(self) -> float:
        """Variance-to-mean ratio; 1 for a Poisson law."""
        return self.sample_variance / self.sample_mean if self.sample_mean else math.nan

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def sample_cut_counts(n: int, graphs: int, seed: int, workers: int | None = None) -> np.ndarray:
    """Exact DOS of ``graphs`` independent G(n, 1/2) draws; row i is graph i, column k is Omega(k)."""
    width = n * n // 4 + 1

    def one(i):
        dos = density_of_states_exact(gen_gnp(n, 0.5, mix_seed(seed, i)), workers=1)
        row = np.zeros(width, np.int64)
        for k, c in dos.counts.items():
            row[k] = c
        return row

    return np.array(parallel_map(one, range(graphs), workers=workers))


def poisson_limit_check(
    n: int,
    k: int,
    graphs: int = 2000,
    seed: int = 42,
    workers: int | None = None,
    regime: tuple[float, float] = POISSON_REGIME,
) -> PoissonCheckReport:
    """Moments of Omega(k) over sampled G(n, 1/2) graphs, for comparison with Poisson(lambda).

    A Poisson law has mean = variance = lambda and second factorial moment
    ``E[Omega (Omega - 1)] = lambda^2``.
    """
    lam = expected_count_exact(n, k)
    in_regime = regime[0] <= lam <= regime[1]
    if not in_regime:
        warnings.warn(f"lambda = {lam:.4g} at k = {k} lies outside {regime}", RegimeWarning, stacklevel=2)
    counts = sample_cut_counts(n, graphs, seed, workers)[:, k].astype(float)
    return PoissonCheckReport(
        n=n,
        k=k,
        lambda_formula=expected_count_gaussian(n, k),
        lambda_exact=lam,
        sample_mean=float(counts.mean()),
        sample_variance=float(counts.var(ddof=1)) if graphs > 1 else 0.0,
        second_factorial_moment=float((counts * (counts - 1)).mean()),
        graphs_sampled=graphs,
        seed=seed,
        in_regime=in_regime,
    )


# -- GW thresholds ----------------------------------------------------------------------


def log_gw_failure_bound(n: int, beta: float, alpha: float, c_max: float) -> float:
    return n * LN2 - beta * (1 - alpha) * c_max


def gw_failure_bound(n: int, beta: float, alpha: float = ALPHA_GW, c_max: float | None = None) -> float:
    """``exp(n ln 2 - beta (1 - alpha) c_max)``, the raw (possibly > 1) bound on sub-threshold mass.

    ``c_max`` defaults to ``n^2 / 8``. Clamp with :func:`clamp_probability` for a probability.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    c_max = n * n / 8 if c_max is None else c_max
    x = log_gw_failure_bound(n, beta, alpha, c_max)
    return math.inf if x > 709.78 else math.exp(x)


def clamp_probability(x: float) -> float:
    return min(1.0, max(0.0, x))


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _gw_z(n: int, beta: float, alpha: float, p_star: float) -> tuple[float, float]:
    m = n * n / 8 + beta * n * n / 16
    k_max = n * n / 8 + p_star * n**1.5 / 4
    k_gw = alpha * k_max
    return 4 * (k_gw - m) / n, 4 * (k_max - m) / n


def gw_gaussian_log_failure(n: int, beta: float = 1.0, alpha: float = ALPHA_GW, p_star: float = P_STAR) -> float:
    """``log(Phi(z(k_gw)) / Phi(z(k_max)))``: log of the sub-threshold probability.

    Both CDFs are taken in log space, so the ratio stays representable even
    when each factor underflows a double.
    """
    z_gw, z_max = _gw_z(n, beta, alpha, p_star)
    denom = float(log_ndtr(z_max))
    if not math.isfinite(denom):
        raise DegenerateDenominator(f"Phi(z(k_max)) vanishes at z = {z_max:.3g}")
    return float(log_ndtr(z_gw)) - denom


def gw_gaussian_success(n: int, beta: float = 1.0, alpha: float = ALPHA_GW, p_star: float = P_STAR) -> float:
    """``1 - Phi(z(k_gw)) / Phi(z(k_max))`` with ``z(x) = 4 (x - m) / n``, ``m = n^2/8 + beta n^2/16``.

    ``k_max = n^2/8 + p_star n^(3/2) / 4`` and ``k_gw = alpha k_max``.
    """
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    return -math.expm1(gw_gaussian_log_failure(n, beta, alpha, p_star))


def random_guess_ratio(n: int, c_max: float | None = None, p_star: float = P_STAR) -> float:
    """Expected random-assignment cut ``n^2/8`` over ``c_max`` (default ``n^2/8 + p_star n^(3/2)/4``)."""
    if c_max is None:
        c_max = n * n / 8 + p_star * n**1.5 / 4
    if c_max <= 0:
        raise ValueError("c_max must be positive")
    return (n * n / 8) / c_max


def random_guess_threshold_n(target: float = HASTAD, p_star: float = P_STAR, n_max: int = 10**7) -> int:
    """Smallest n at which :func:`random_guess_ratio` with the SK scaling reaches ``target``.

    The ratio is increasing in n, so a bisection over integers suffices.
    """
    lo, hi = 1, 1
    while random_guess_ratio(hi, p_star=p_star) < target:
        hi *= 2
        if hi > n_max:
            raise ValueError(f"ratio never reaches {target} below n = {n_max}")
    while lo < hi:
        mid = (lo + hi) // 2
        if random_guess_ratio(mid, p_star=p_star) >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass
class GwSweepRow:
    n: int
    failure_bound: float
    gaussian_success: float
    random_guess_ratio: float
    log_failure_bound: float
    gaussian_log_failure: float


def gw_sweep(ns, beta: float = 1.0, alpha: float = ALPHA_GW, p_star: float = P_STAR) -> list[GwSweepRow]:
    rows = []
    for n in ns:
        c_max = n * n / 8 + p_star * n**1.5 / 4
        rows.append(GwSweepRow(
            n=n,
            failure_bound=gw_failure_bound(n, beta, alpha, c_max),
            gaussian_success=gw_gaussian_success(n, beta, alpha, p_star),
            random_guess_ratio=random_guess_ratio(n, c_max),
            log_failure_bound=log_gw_failure_bound(n, beta, alpha, c_max),
            gaussian_log_failure=gw_gaussian_log_failure(n, beta, alpha, p_star),
        ))
    return rows


def gw_sweep_csv(rows: list[GwSweepRow]) -> str:
    lines = ["n,failure_bound,gaussian_success,random_guess_ratio,log_failure_bound,gaussian_log_failure"]
    for r in rows:
        lines.append(
            f"{r.n},{r.failure_bound:.10g},{r.gaussian_success:.17g},{r.random_guess_ratio:.10g},"
            f"{r.log_failure_bound:.10g},{r.gaussian_log_failure:.10g}"
        )
    return "\n".join(lines) + "\n"
