"""Classical Max-k-Cut benchmarks, density-of-states and Gibbs analysis,
annealed Poisson statistics and Goemans-Williamson threshold formulas."""

__version__ = "0.1.0"
