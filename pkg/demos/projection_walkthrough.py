"""
Projecting invasion along a road network
========================================

The road network and habitat raster in ``data/`` are synthetic: random
two-leg roads on a 2 km square and thresholded smooth noise.  Each seed
point on a road may hold an introduction, which then spreads as a disk.
Because the projector reuses its random numbers, raising the spread rate
can only grow the invaded area.
"""
from pathlib import Path

import numpy as np

from tdabc.formats import parse_network_csv, parse_raster
from tdabc.projection import project, seed_points
from tdabc.svg import mask_svg

data = Path(__file__).parent / "data"
network = parse_network_csv(data / "synthetic_network.csv")
habitat = parse_raster(data / "synthetic_habitat.txt")

points = seed_points(network, spacing=10.0)
print(f"{len(network)} roads, {len(points)} seed points, {habitat.suitable.mean():.0%} of cells suitable")

###############################################################################
# Same seed, increasing spread rate.
for nu in (1.0, 2.5, 5.0):
    res = project(np.random.default_rng(1), points, habitat, lam=4e-5, nu=nu)
    print(f"nu={nu:4.1f}  introductions {len(res.introductions):3d}  "
          f"invaded {res.invaded_km2:.3f} km2 ({100 * res.fraction:.1f}% of suitable)")

###############################################################################
# Twenty more years at the largest rate.
later = project(np.random.default_rng(1), points, habitat, lam=4e-5, nu=5.0, horizon_years=20)
print(f"after 20 more years: {later.invaded_km2:.3f} km2")

with open("projection.svg", "w") as fh:
    fh.write(mask_svg(habitat.suitable, later.invaded))
print("wrote projection.svg")
