"""First-order convergence for smooth transport on Cartesian grids.

The cellular velocity field rotates a smooth profile while a manufactured
source keeps the exact solution known.  The L1 error halves with h for both
flux functions, while the discrete BV seminorm settles toward the BV of the
exact solution, so the computed rates shrink toward zero.

    python3 demos/smooth_convergence.py
"""
from _table import show

from bvfv import harness
from bvfv.harness import ExperimentConfig

for case in ("ex1-linear", "ex1-sinusoidal"):
    show(case, harness.run_experiment(ExperimentConfig(case)))
