"""
A small coverage study
======================

Simulate many datasets from known parameters, fit each one, and count how
often the 95% interval contains the truth.  Twenty replicates give a
standard error near five percentage points, so expect noise.
"""
import numpy as np

from tdabc import ChainConfig, ModelParams
from tdabc.study import coverage_study, default_road_table

truth = ModelParams(lambdas=(4.03e-5,), nu=13.93, sigma2=25.0)
roads = default_road_table(np.random.default_rng(7), 10)
config = ChainConfig(iterations=5_000, burn_in=500)

result = coverage_study(seed=3, true_params=truth, roads=roads, replicates=20, config=config)

print(f"{'parameter':<10}{'coverage':>10}{'s.e.':>8}{'n':>5}{'failed':>8}")
for row in result.rows:
    print(f"{row.parameter:<10}{row.coverage:10.2f}{row.std_error:8.3f}{row.n_effective:5d}{row.n_failed:8d}")
