"""The four low-rank factorizers on one spectra-like matrix.

Each method approximates amplitude rows R as W @ H with a rank-V component
matrix H.  They differ in sign constraints, how coefficients for new rows
are obtained, and cost.  The hyperplane variant keeps H nonnegative AND
answers new rows with a single projection W = R H^T, which is what makes it
cheap and interpretable downstream.
"""

import time

import numpy as np

from mlow import (
    fit_hyperplane_nmf,
    fit_nmf,
    fit_pca,
    fit_semi_nmf,
    infer_nmf_coefficients,
    least_squares_coefficients,
    project_coefficients,
)

rng = np.random.default_rng(1)

# rank-3 nonnegative structure with distinct level groups plus noise
levels = 60
parts = np.zeros((3, levels))
parts[0, :20] = rng.uniform(5, 10, 20)
parts[1, 20:40] = rng.uniform(5, 10, 20)
parts[2, 40:] = rng.uniform(5, 10, 20)
loads = rng.uniform(0.1, 1.0, size=(300, 3))
R = np.maximum(loads @ parts + 0.05 * rng.standard_normal((300, levels)), 0)
svd_floor = np.sqrt((np.linalg.svd(R, compute_uv=False)[3:] ** 2).sum())
print(f"spectra matrix {R.shape}, truncated-SVD error floor {svd_floor:.3f}\n")

def describe(name, H, W, negative_ok):
    err = np.linalg.norm(R - W @ H)
    unit = H / np.linalg.norm(H, axis=1, keepdims=True)
    cosines = unit @ unit.T
    off = cosines[~np.eye(len(H), dtype=bool)]
    print(f"{name:16s} error={err:8.3f} ({err / svd_floor:5.2f}x floor)  "
          f"min H={H.min():+.2e}  min W={W.min():+.2e}  mean |cos|={np.abs(off).mean():.3f}")
    if not negative_ok and (H.min() < 0 or W.min() < 0):
        print("  unexpected negative entries!")

comp = fit_pca(R, 3)
describe("pca", comp.values, project_coefficients(R, comp), negative_ok=True)

comp, W_train = fit_nmf(R, rank=3, iterations=800, seed=0)
describe("nmf", comp.values, W_train, negative_ok=False)

comp = fit_semi_nmf(R, rank=3, iterations=300, seed=0)
describe("semi_nmf", comp.values, least_squares_coefficients(R, comp), negative_ok=True)

comp_h = fit_hyperplane_nmf(R, rank=3, iterations=800, lam=20.0, seed=0)
describe("hyperplane_nmf", comp_h.values, project_coefficients(R, comp_h), negative_ok=False)

print("\n=== inference cost for one new row ===")
row = R[:1]
t0 = time.perf_counter()
for _ in range(100):
    project_coefficients(row, comp_h)
t_proj = (time.perf_counter() - t0) / 100
from mlow import ComponentMatrix
nmf_comp = ComponentMatrix(values=np.abs(comp_h.values), method="nmf", seed=0)
t0 = time.perf_counter()
for _ in range(100):
    infer_nmf_coefficients(row, nmf_comp, iterations=200)
t_iter = (time.perf_counter() - t0) / 100
print(f"projection:          {t_proj * 1e6:8.1f} us")
print(f"iterative inference: {t_iter * 1e6:8.1f} us   ({t_iter / t_proj:.0f}x slower)")

print("\n=== diversity penalty pulls components apart ===")
for lam in (0.0, 20.0, 200.0):
    comp = fit_hyperplane_nmf(R, rank=3, iterations=800, lam=lam, seed=0)
    unit = comp.values / np.linalg.norm(comp.values, axis=1, keepdims=True)
    off = (unit @ unit.T)[~np.eye(3, dtype=bool)]
    print(f"lambda={lam:5.0f}: mean pairwise cosine {off.mean():.4f}")
