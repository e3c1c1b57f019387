# coding: utf-8

# # Random smooth pairs never exceed the bound
#
# For random polynomial fields the squared defect stays far below the
# Poisson-bracket norm. A failing pair can be dumped and replayed with the
# command line tool (`quasisharp verify --dump-trial N`, then `--replay`).

# In[1]:

import numpy as np

from quasisharp import (
    build_marked_icosphere,
    median_state,
    nonlinearity_defect,
    poisson_l1,
    random_smooth_field,
    three_point_state,
)
from quasisharp.config import slack


# In[2]:

mesh = build_marked_icosphere(4)
delta = slack(mesh.max_edge_length)
print("slack delta(h) =", delta)


# In[3]:

for make in (three_point_state, median_state):
    z = make(mesh)
    gaps = []
    for trial in range(30):
        rng = np.random.default_rng([11, trial])
        F, G = random_smooth_field(mesh, rng), random_smooth_field(mesh, rng)
        pi = nonlinearity_defect(z, F, G)
        gaps.append(pi**2 - poisson_l1(F, G).l1_norm)
    gaps = np.array(gaps)
    print(f"{make.__name__:18s} worst Pi^2 - l1 = {gaps.max():.3f}   violations = {(gaps > delta).sum()}")


# Functionally dependent pairs give zero on both sides. Doubling is exact in
# floating point, so the bracket cancels exactly.

# In[4]:

F = random_smooth_field(mesh, 0)
G = F * 2.0
print("Pi =", nonlinearity_defect(three_point_state(mesh), F, G), " l1 =", poisson_l1(F, G).l1_norm)
