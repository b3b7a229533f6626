"""Per-level Besov statistics of sampled paths."""

import numpy as np

from heatpath import GridSpec, Modulus, SeedSpec, SpaceSection, TimeSection, besov, sampler

J = 12
for sec, alpha in ((TimeSection(), 0.25), (SpaceSection(), 0.5)):
    paths = sampler.sample_paths(GridSpec(sec, J), SeedSpec(0), 10)
    rep = [besov.regularity_report(besov.schauder_coefficients(p), Modulus(alpha), 6.0) for p in paths]
    s = np.array([r.stats for r in rep])
    # flat in j: the norm is finite, but the statistics do not decay
    print(sec.kind, np.round(np.median(s, axis=0), 3))
    print("  slopes", np.round([r.slope for r in rep], 3))
    print("  in big space", all(r.in_big_space for r in rep), "| little-space violation",
          all(r.little_space_violation for r in rep))

# Exact coefficient sampling: normalized coefficients are close to N(0, 1) on average
cs = sampler.sample_coefficients(10, TimeSection(), SeedSpec(1), 5)
m, c = besov.coefficient_statistic(cs.normalized, 4.0)
print(m, c)
