"""Occupation densities, Hölder exponents and moment scaling of local time."""

import numpy as np

from heatpath import GridSpec, SeedSpec, SpaceSection, TimeSection, localtime, sampler

J = 12
grid = GridSpec(TimeSection(), J)
path = sampler.sample_paths(grid, SeedSpec(3))[0]

fld = localtime.occupation_histogram(path, n_bins=24, stops=[0, 1024, 2048, 4096], method="linear")
print(fld.xi_grid.round(3))
print(fld.values[:, -1].round(2))
print("occupation identity", fld.occupation(), fld.time_grid)

# Two estimators of L(0, 1)
L = localtime.local_time_series(path, 0.0)
print(L[-1], localtime.fourier_local_time(path, 0.0, taper=True))

# The path is 1/4-Hölder, its local time in t is 3/4-Hölder
print(localtime.holder_exponent(path.values), localtime.holder_exponent(L, nonzero=True))

# E (L(h) - L(0))^2 ~ h^(3/2) on the time section, h^1 on a space section
lags = 2.0 ** -np.arange(9, 3, -1)
for sec in (TimeSection(), SpaceSection()):
    ps = sampler.sample_paths(GridSpec(sec, J), SeedSpec(0), 200)
    series = np.array([localtime.local_time_series(p, float(p.values[0])) for p in ps])
    ms = localtime.moment_scaling(series, 2.0 ** -J, lags)
    print(sec.kind, round(ms.slope, 3), "+/-", round(ms.stderr, 3))

# Berman's criterion decides when the local time has p derivatives in L^2
for p in (2.9, 3.1):
    print(p, localtime.berman_integral(TimeSection(), p))
