"""Simulation lab for random real trees coded by Brownian excursions.

Modules:
    excursion     normalized excursion sampling and path functionals
    realtree      tree metric, mass measure, ball volumes, branch points
    discretetree  finite marked subtrees and exact electrical quantities
    walk          continuous-time chains, spectral and Monte-Carlo heat kernels
    harness       seeded experiments, statistics, CSV reports
"""

from . import discretetree, excursion, harness, realtree, walk

__all__ = ["discretetree", "excursion", "harness", "realtree", "walk"]
__version__ = "0.1.0"
