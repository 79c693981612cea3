"""BV growth on unstructured meshes.

On non-Cartesian partitions no uniform BV bound is known; numerically the
seminorm still grows slower and slower under refinement.  This prints the
BV rate for a step profile on three mesh families.  Magnitudes shrinking
down the column indicate the growth is levelling off.

    python3 demos/polygonal_bv.py [case]
"""
import sys

from _table import show

from bvfv import harness
from bvfv.harness import ExperimentConfig

case = sys.argv[1] if len(sys.argv) > 1 else "ex2-linear"
for family in ("perturbed_cartesian", "hexagonal", "triangular"):
    rows = harness.run_experiment(ExperimentConfig(case, mesh=family, seed=1))
    show(f"{case} on {family}", rows, ("h", "h_mesh", "cells", "l1", "bv", "bv_rate"))
