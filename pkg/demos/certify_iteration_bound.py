"""Certify a worst-case iteration bound over the whole parameter set.

Runs the offline certification on a small family and prints the
resulting partition: polyhedral regions of the parameter set, each with
the exact number of QP iterations branch and bound will spend for any
parameter inside it. A few spot checks compare the certified counter
against the online solver.
"""

import warnings

import numpy as np

from miqpcert import DegeneracyWarning, certify, random_mpmiqp, solve_miqp

warnings.simplefilter("ignore", DegeneracyWarning)

family = random_mpmiqp(seed=11, n_c=2, n_b=2, m=4, n_theta=2)
partition = certify(family)

print(f"certified in {partition.t_cert_seconds:.2f} s")
print(f"regions    = {partition.region_count}")
print(f"kappa_max  = {partition.kappa_max} QP iterations, worst case")
print()

print("largest regions by inscribed radius:")
sized = sorted(partition.regions,
               key=lambda r: -r.region.chebyshev_center()[1])
for reg in sized[:5]:
    center, radius = reg.region.chebyshev_center()
    print(f"  kappa={reg.kappa_iterations:>3}  radius={radius:.3f}  "
          f"center={np.round(center, 3).tolist()}  rows={reg.region.nrows}")
print()

print("spot checks (certified bound vs online count):")
for reg in sized[:5]:
    center, _ = reg.region.chebyshev_center()
    online = solve_miqp(family, center)
    cert = partition.lookup(center)
    mark = "==" if cert == online.iterations else ">="
    assert cert >= online.iterations
    print(f"  theta={np.round(center, 3).tolist()}: "
          f"certified {cert} {mark} online {online.iterations}")
