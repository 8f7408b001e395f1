"""Benchmark drivers: manufactured solutions, ellipse slip studies,
convection cells, a kinematic subduction wedge, and an iterative-solver
conditioning survey."""

from .mms import run_babuska, run_mms

__all__ = ["run_mms", "run_babuska"]
