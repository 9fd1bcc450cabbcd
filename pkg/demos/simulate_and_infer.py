"""
Simulate a survey and fit it with the birth-death chain
=======================================================

Every number below comes from a synthetic dataset drawn with known
parameters, so the posterior can be compared with the truth.  No field
data is used here.
"""
import numpy as np

from tdabc import ChainConfig, ModelParams, run_chain, simulate_dataset
from tdabc.geometry import pattern_to_str
from tdabc.study import default_road_table, summarize_trace

rng = np.random.default_rng(2024)

###############################################################################
# Two groups of eight roads, ages between 6 and 56 years.
truth = ModelParams(lambdas=(3e-5, 9e-5), nu=13.93, sigma2=25.0)
roads = default_road_table(rng, 8, groups=2)
sim = simulate_dataset(rng, truth, roads, n_z=26)

for rec in sim.dataset.roads:
    print(f"group {rec.group} road {rec.road:2d} age {rec.age:4.0f}  {pattern_to_str(rec.observed)}")
print("mean observed spread rate:", round(float(sim.dataset.temporal.z.mean()), 2))

###############################################################################
# A short chain; the defaults run 250 000 iterations, which is overkill here.
config = ChainConfig(iterations=20_000, burn_in=2_000)
trace = run_chain(rng, sim.dataset, config)

# Each 95% interval misses its true value about one time in twenty, so an
# occasional miss is expected.
print(f"\n{'parameter':<10}{'median':>12}{'2.5%':>12}{'97.5%':>12}{'truth':>12}")
want = {"lambda_1": truth.lambdas[0], "lambda_2": truth.lambdas[1], "nu": truth.nu, "sigma2": truth.sigma2}
for row in summarize_trace(trace):
    print(f"{row.parameter:<10}{row.median:12.4g}{row.lower:12.4g}{row.upper:12.4g}{want[row.parameter]:12.4g}")

###############################################################################
# Introductions per road, averaged over the kept draws.
k_mean = trace.k.mean(axis=0)
print("\nposterior mean introductions per road:", np.round(k_mean, 2))
