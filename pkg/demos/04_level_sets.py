"""Box-counting dimension of level sets and local nondeterminism scans."""

import numpy as np

from heatpath import GridSpec, SeedSpec, SpaceSection, TimeSection, localtime, sampler

J = 12
for sec in (TimeSection(), SpaceSection()):
    dims = []
    for p in sampler.sample_paths(GridSpec(sec, J), SeedSpec(5), 20):
        t0 = np.random.default_rng(p.seed.replicate_index).integers(0, p.values.size)
        ls = localtime.level_set(p, float(p.values[t0]))
        if len(ls) >= localtime.MIN_LEVEL_CELLS:
            dims.append(localtime.box_dimension(ls).dim)
    print(sec.kind, len(dims), np.median(dims).round(3))

# Conditional variance of an increment given the past stays a fixed fraction of it
print(sampler.lnd_ratio_scan(7))
radii, mins, K = sampler.slnd_scan(7)
print(np.column_stack([radii, mins, mins / radii]).round(4), K)
