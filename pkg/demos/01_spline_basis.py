"""Spline bases on [0, 1]: construction, constraints, featurization.

Walks through the basis variants the regression model can use: plain
B-splines, the natural boundary constraint, and the default construction
with the constant direction removed.  Shows the properties downstream
code relies on (partition of unity, local support, bounded values) and the
per-entry scaling/centering that turns raw covariate tensors into centered
feature tensors.
"""

import numpy as np

from stareg import build_basis, eval_basis, featurize, fit_scaler

rng = np.random.default_rng(0)

# ---------------------------------------------------------------------------
# 1. unconstrained cubic B-splines: 4 internal knots -> 8 functions
plain = build_basis(order=4, n_internal=4, natural=False, drop_constant=False)
x = np.linspace(0, 1, 9)
values = eval_basis(plain, x)
print("unconstrained cubic basis:", plain.n_basis, "functions")
print("values at a few points (rows = x):")
for xi, row in zip(x[::4], values[::4]):
    print(f"  x={xi:.2f}: ", np.array_str(row, precision=3, suppress_small=True))
print("partition of unity, max |sum - 1|:", float(np.abs(values.sum(axis=1) - 1).max()))

# every function vanishes outside its own knot span
mid = eval_basis(plain, 0.05)
print("first function dominates near 0:", np.array_str(mid, precision=3, suppress_small=True))

# ---------------------------------------------------------------------------
# 2. natural constraint: zero curvature at both boundaries removes 2 df,
#    dropping the constant removes one more; the default has 5 functions
natural = build_basis(order=4, n_internal=4, natural=True, drop_constant=False)
default = build_basis()
print("\nnatural basis:", natural.n_basis, "functions; default basis:", default.n_basis)
grid = np.linspace(0, 1, 2001)
print("default basis sup norm per function:",
      np.array_str(np.abs(eval_basis(default, grid)).max(axis=0), precision=4))

# ---------------------------------------------------------------------------
# 3. featurizing a tensor covariate: per-entry min-max scaling + centering
samples = rng.uniform(-3.0, 5.0, size=(200, 4, 3))
responses = rng.standard_normal(200)
data = featurize(samples, responses, default)
print("\nfeature tensor shape (n, basis, entries...):", data.features.shape)
print("per-column means after centering, max |mean|:",
      float(np.abs(data.features.mean(axis=0)).max()))
print("intercept = response mean:", data.intercept)

# prediction-time inputs are clamped to the training range entry by entry
scaler = fit_scaler(samples, default)
wild = samples[0].copy()
wild[0, 0] = 1e9
clamped = scaler.map_unit(wild)
print("an out-of-range value maps to the boundary:", clamped[0, 0])
