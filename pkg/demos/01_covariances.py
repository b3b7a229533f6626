"""Closed-form covariances against the independent oracles."""

import math

import numpy as np

from heatpath import kernels, verify
from heatpath.kernels import SpaceSection

# The time section is a bifractional Brownian motion up to a constant.
t = np.array([0.25, 0.5, 1.0])
print(kernels.cov_time_section(t[:, None], t[None, :]))

# F(u; t) in closed form vs adaptive Simpson on the defining integral
for u, tt in [(0.0, 1.0), (1.0, 1.0), (3.0, 0.5)]:
    print(u, tt, kernels.f_space(u, tt), verify.quadrature_f(u, tt, rtol=1e-12))

# Level-j coefficient variance grows like 2^(j/2) on the time section
for j in range(5):
    print(j, kernels.coeff_cov_time(j, 1, 1) / 2 ** (j / 2))
print("limit", 2 / math.sqrt(math.pi) * (1.5 + math.sqrt(2) - math.sqrt(3)))

# Bilinear-expansion oracle at 40 digits vs the stable closed form
sec = SpaceSection(t=0.5)
print(verify.bilinear_coeff_cov_oracle(8, 17, 19, sec), verify.closed_coeff_cov(8, 17, 19, sec))

# A small lattice run; the exact lattice mean shows the discretization bias
est = verify.lattice_wiener_oracle(0.7, 0.2, 0.3, -0.1, n=20_000)
print(est.covariance, est.closed_form, est.stderr, est.bias)
