"""Factorizer contracts: exact cases, oracle cross-checks, descent and
non-negativity properties."""

import numpy as np
import pytest

from mlow import (
    ComponentMatrix,
    InvalidInputError,
    InvalidMethodError,
    InvalidRankError,
    cosine_penalty_and_gradient,
    fit_hyperplane_nmf,
    fit_nmf,
    fit_pca,
    fit_semi_nmf,
    infer_nmf_coefficients,
    least_squares_coefficients,
    project_coefficients,
)
from mlow.factorization import EPSILON, component_from_dict, component_to_dict


def svd_tail_error(R, rank):
    s = np.linalg.svd(R, compute_uv=False)
    return float(np.sqrt((s[rank:] ** 2).sum()))


# ---------------------------------------------------------------- PCA

def test_pca_rank1_exact():
    R = np.array([[1.0, 2.0], [2.0, 4.0]])
    comp = fit_pca(R, 1)
    direction = comp.values[0] / np.linalg.norm(comp.values[0])
    assert np.allclose(np.abs(direction), np.array([1.0, 2.0]) / np.sqrt(5), atol=1e-12)
    recon = R @ comp.values.T @ comp.values
    assert np.abs(recon - R).max() < 1e-12


def test_pca_identity_full_rank():
    R = np.eye(3)
    comp = fit_pca(R, 3)
    recon = R @ comp.values.T @ comp.values
    assert np.abs(recon - R).max() < 1e-12


def test_pca_error_equals_svd_tail():
    rng = np.random.default_rng(9)
    R = rng.standard_normal((50, 20))
    comp = fit_pca(R, 5)
    err = np.linalg.norm(R - R @ comp.values.T @ comp.values)
    assert err == pytest.approx(svd_tail_error(R, 5), rel=1e-9)


def test_pca_rank_errors():
    with pytest.raises(InvalidRankError):
        fit_pca(np.ones((4, 3)), 4)
    with pytest.raises(InvalidRankError):
        fit_pca(np.ones((4, 3)), 0)


# ---------------------------------------------------------------- NMF

def test_nmf_rank1_exact_case():
    R = np.array([[1.0, 2.0], [2.0, 4.0]])
    comp, W = fit_nmf(R, rank=1, iterations=500, seed=0)
    assert np.linalg.norm(R - W @ comp.values) < 1e-8


def test_nmf_full_rank_drives_error_to_zero():
    rng = np.random.default_rng(0)
    R = rng.uniform(0.1, 1.0, size=(6, 6))
    comp, W = fit_nmf(R, rank=6, iterations=2000, seed=0)
    assert np.linalg.norm(R - W @ comp.values) / np.linalg.norm(R) < 1e-8


def test_nmf_low_rank_product_close_to_svd_oracle():
    # truncated-SVD oracle error is ~0 for an exact rank-5 product; the
    # multiplicative fit at F=1000 lands under 1e-3 for this frozen seed pair
    rng = np.random.default_rng(100)
    R = rng.uniform(0, 1, (40, 5)) @ rng.uniform(0, 1, (5, 30))
    assert svd_tail_error(R, 5) < 1e-10
    comp, W = fit_nmf(R, rank=5, iterations=1000, seed=2)
    assert np.linalg.norm(R - W @ comp.values) / np.linalg.norm(R) < 1e-3


def test_nmf_monotone_descent_and_nonnegativity():
    rng = np.random.default_rng(4)
    for trial in range(5):
        R = rng.uniform(0, 1, (40, 30))
        comp, W = fit_nmf(R, rank=5, iterations=200, seed=trial, track_objective=True)
        trace = comp.objective_trace
        assert np.all(np.diff(trace) <= 1e-10)
        assert comp.values.min() >= 0.0
        assert W.min() >= 0.0


def test_nmf_rejects_negative_input():
    with pytest.raises(InvalidInputError):
        fit_nmf(np.array([[1.0, -0.5], [0.0, 1.0]]), rank=1, iterations=10, seed=0)


# ------------------------------------------------------- NMF inference

def test_infer_identity_components_returns_input():
    H = np.eye(4)
    cm = ComponentMatrix(values=H, method="nmf", seed=0)
    R_new = np.array([[0.2, 0.0, 1.5, 0.7]])
    W = infer_nmf_coefficients(R_new, cm, iterations=200)
    assert np.abs(W - R_new).max() < 1e-9


def test_infer_zero_rows_give_zero_coefficients():
    H = np.array([[1.0, 0.5, 0.2], [0.1, 1.0, 0.3]])
    cm = ComponentMatrix(values=H, method="nmf", seed=0)
    W = infer_nmf_coefficients(np.zeros((2, 3)), cm, iterations=50)
    assert np.all(W == 0.0)


def test_infer_recovers_true_weights_vs_grid_oracle():
    # oracle: exhaustive grid over the first weight with exact 1-D
    # minimization of the second, independent of the multiplicative path
    H = np.array([[1.0, 0.3, 0.0, 0.2], [0.0, 0.5, 1.0, 0.4]])
    w_true = np.array([0.7, 1.3])
    R_new = (w_true[None, :] @ H)
    grid = np.linspace(0.0, 2.0, 2001)
    best, best_err = None, np.inf
    for a in grid:
        b = max(0.0, float((R_new[0] - a * H[0]) @ H[1] / (H[1] @ H[1])))
        err = np.linalg.norm(R_new[0] - a * H[0] - b * H[1])
        if err < best_err:
            best, best_err = np.array([a, b]), err
    assert np.abs(best - w_true).max() < 1e-3  # grid resolution
    cm = ComponentMatrix(values=H, method="nmf", seed=0)
    W = infer_nmf_coefficients(R_new, cm, iterations=200)
    assert np.abs(W[0] - w_true).max() / np.abs(w_true).max() < 1e-4


def test_infer_requires_nmf_method():
    cm = ComponentMatrix(values=np.eye(3), method="pca", seed=0)
    with pytest.raises(InvalidMethodError):
        infer_nmf_coefficients(np.ones((1, 3)), cm)


# --------------------------------------------------------------- Semi-NMF

def test_semi_nmf_orthonormal_disjoint_w_is_projection():
    H = np.zeros((2, 4))
    H[0, :2] = [0.6, 0.8]
    H[1, 2:] = [0.8, 0.6]
    cm = ComponentMatrix(values=H, method="semi_nmf", seed=0)
    rng = np.random.default_rng(2)
    R = rng.standard_normal((5, 4))
    W = least_squares_coefficients(R, cm)
    assert np.allclose(W, R @ H.T, rtol=1e-7, atol=1e-9)


def test_semi_nmf_w_step_solves_normal_equations():
    R = np.array([[1.0, 2.0], [2.0, 4.0]])
    comp = fit_semi_nmf(R, rank=1, iterations=50, seed=0)
    H = comp.values
    W = least_squares_coefficients(R, comp)
    # least-squares oracle: residual orthogonal to the row space of H
    assert np.linalg.norm((R - W @ H) @ H.T) / np.linalg.norm(R @ H.T) < 1e-8


def test_semi_nmf_objective_final_below_initial():
    rng = np.random.default_rng(6)
    for trial in range(5):
        R = rng.uniform(0, 1, (40, 30))
        comp = fit_semi_nmf(R, rank=5, iterations=200, seed=trial, track_objective=True)
        trace = comp.objective_trace
        assert trace[-1] <= trace[0]
        assert comp.values.min() >= 0.0


# ------------------------------------------------------ Hyperplane-NMF

def test_hyperplane_rank1_recovers_direction():
    R = np.array([[1.0, 2.0], [2.0, 4.0]])
    comp = fit_hyperplane_nmf(R, rank=1, iterations=1000, lam=0.0, seed=0)
    h = comp.values[0]
    assert h.min() >= 0.0
    assert np.allclose(h, np.array([1.0, 2.0]) / np.sqrt(5), atol=1e-8)
    recon = R @ comp.values.T @ comp.values
    assert np.linalg.norm(recon - R) / np.linalg.norm(R) < 1e-6


def test_hyperplane_defaults_match_reference_setup():
    from mlow import MlowConfig

    cfg = MlowConfig()
    assert (cfg.horizon, cfg.freq_levels, cfg.rank) == (96, 168, 10)
    assert cfg.lam == 20.0
    assert cfg.iterations == 1000


def test_hyperplane_large_lambda_keeps_orthogonal_blocks_apart():
    rng = np.random.default_rng(3)
    R = np.zeros((60, 20))
    R[:30, :10] = rng.uniform(0.5, 1.5, size=(30, 10))
    R[30:, 10:] = rng.uniform(0.5, 1.5, size=(30, 10))
    comp = fit_hyperplane_nmf(R, rank=2, iterations=1000, lam=1e6, seed=0)
    h0, h1 = comp.values
    cos = h0 @ h1 / (np.linalg.norm(h0) * np.linalg.norm(h1))
    assert cos < 0.05


def test_hyperplane_nonnegative_all_iterations_and_descent():
    rng = np.random.default_rng(10)
    for trial in range(3):
        R = rng.uniform(0, 1, (40, 30))
        comp = fit_hyperplane_nmf(R, rank=5, iterations=300, lam=20.0, seed=trial,
                                  track_objective=True)
        assert comp.min_entry_trace.min() >= 0.0
        trace = comp.objective_trace
        assert trace[-1] < trace[0]
        tol = 1e-10 * np.maximum(1.0, np.abs(trace[:-1]))
        assert (np.diff(trace) <= tol).mean() >= 0.95


def test_hyperplane_diversity_monotone_in_lambda():
    rng = np.random.default_rng(900)
    Wt = rng.uniform(0, 1, size=(100, 4))
    Ht = rng.uniform(0, 1, size=(4, 30)) ** 2 * 5
    R = np.maximum(Wt @ Ht + 0.02 * (Wt @ Ht).mean() * rng.standard_normal((100, 30)), 0)

    def mean_cos(H):
        unit = H / np.linalg.norm(H, axis=1, keepdims=True)
        G = unit @ unit.T
        v = len(H)
        return (G.sum() - v) / (v * (v - 1))

    cosines = [
        mean_cos(fit_hyperplane_nmf(R, rank=4, iterations=1000, lam=lam, seed=0).values)
        for lam in (0.0, 20.0, 200.0)
    ]
    assert cosines[0] >= cosines[1] - 1e-9
    assert cosines[1] >= cosines[2] - 1e-9


def test_hyperplane_determinism_bit_identical():
    rng = np.random.default_rng(77)
    R = rng.uniform(0, 1, (30, 20))
    a = fit_hyperplane_nmf(R, rank=4, iterations=100, lam=20.0, seed=123)
    b = fit_hyperplane_nmf(R, rank=4, iterations=100, lam=20.0, seed=123)
    assert np.array_equal(a.values, b.values)
    c = fit_hyperplane_nmf(R, rank=4, iterations=100, lam=20.0, seed=124)
    assert not np.array_equal(a.values, c.values)


def test_hyperplane_rejects_negative_input():
    with pytest.raises(InvalidInputError):
        fit_hyperplane_nmf(np.array([[1.0, -1.0]]), rank=1, iterations=10, lam=0.0, seed=0)


# --------------------------------------------------- cosine penalty

def test_cosine_penalty_disjoint_rows():
    H = np.array([[1.0, 2.0, 0.0, 0.0], [0.0, 0.0, 3.0, 1.0]])
    penalty, gp, gm = cosine_penalty_and_gradient(H)
    assert penalty == pytest.approx(0.0, abs=1e-15)
    assert np.all(gm == 0.0)


def test_cosine_penalty_identical_rows():
    h = np.array([1.0, 0.5, 2.0])
    H = np.vstack([h, h])
    penalty, gp, gm = cosine_penalty_and_gradient(H)
    assert penalty == pytest.approx(2.0)  # both ordered pairs
    g = gp - gm
    assert np.abs(g @ h).max() < 1e-12  # tangent to the sphere


def test_cosine_gradient_tangent_in_general():
    rng = np.random.default_rng(15)
    H = rng.uniform(0.1, 2.0, size=(5, 8))
    _, gp, gm = cosine_penalty_and_gradient(H)
    g = gp - gm
    dots = np.einsum("ij,ij->i", g, H)
    assert np.abs(dots).max() < 1e-10


def test_cosine_gradient_matches_finite_differences():
    # The ordered-pair penalty counts each pair twice; the per-row split
    # gradient differentiates the one-sided sum, i.e. half the reported
    # penalty.  Central differences at step 1e-6 on that half-sum.  The FD
    # oracle has ~1e-9 absolute roundoff, so the relative check applies on
    # entries the oracle can resolve and the rest are held to that floor.
    rng = np.random.default_rng(21)
    step = 1e-6
    for trial in range(10):
        H = rng.uniform(0.1, 2.0, size=(4, 10))
        _, gp, gm = cosine_penalty_and_gradient(H)
        g = gp - gm

        def half_penalty(M):
            return cosine_penalty_and_gradient(M)[0] / 2.0

        fd = np.zeros_like(H)
        for i in range(H.shape[0]):
            for j in range(H.shape[1]):
                up = H.copy()
                up[i, j] += step
                dn = H.copy()
                dn[i, j] -= step
                fd[i, j] = (half_penalty(up) - half_penalty(dn)) / (2 * step)
        rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1e-4)
        assert rel.max() < 1e-5
        assert np.abs(g - fd).max() < 2e-9


# ----------------------------------------------- projection coefficients

def test_project_zero_input():
    cm = ComponentMatrix(values=np.ones((2, 3)), method="hyperplane_nmf", seed=0)
    assert np.all(project_coefficients(np.zeros((4, 3)), cm) == 0.0)


def test_project_orthonormal_rows_identity_on_span():
    H = np.zeros((2, 4))
    H[0, :2] = [0.6, 0.8]
    H[1, 2:] = [0.8, 0.6]
    cm = ComponentMatrix(values=H, method="pca", seed=0)
    R = np.array([[1.2, 1.6, 0.0, 0.0]])  # 2 * first row
    W = project_coefficients(R, cm)
    assert np.allclose(W @ H, R, atol=1e-12)


def test_project_method_and_shape_errors():
    cm = ComponentMatrix(values=np.ones((2, 3)), method="nmf", seed=0)
    with pytest.raises(InvalidMethodError):
        project_coefficients(np.ones((1, 3)), cm)
    cm2 = ComponentMatrix(values=np.ones((2, 3)), method="pca", seed=0)
    with pytest.raises(InvalidInputError):
        project_coefficients(np.ones((1, 4)), cm2)


# ------------------------------------------------- shared properties

def test_eckart_young_lower_bound_all_methods():
    rng = np.random.default_rng(30)
    for trial in range(5):
        R = rng.uniform(0, 1, (25, 18))
        floor = svd_tail_error(R, 4)
        comp_pca = fit_pca(R, 4)
        err_pca = np.linalg.norm(R - R @ comp_pca.values.T @ comp_pca.values)
        assert err_pca >= floor - 1e-9
        comp_nmf, W = fit_nmf(R, rank=4, iterations=300, seed=trial)
        assert np.linalg.norm(R - W @ comp_nmf.values) >= floor - 1e-9
        comp_semi = fit_semi_nmf(R, rank=4, iterations=300, seed=trial)
        W_semi = least_squares_coefficients(R, comp_semi)
        assert np.linalg.norm(R - W_semi @ comp_semi.values) >= floor - 1e-9
        comp_hyp = fit_hyperplane_nmf(R, rank=4, iterations=300, lam=20.0, seed=trial)
        W_hyp = project_coefficients(R, comp_hyp)
        assert np.linalg.norm(R - W_hyp @ comp_hyp.values) >= floor - 1e-9


def test_component_json_round_trip_exact():
    rng = np.random.default_rng(8)
    comp = fit_hyperplane_nmf(rng.uniform(0, 1, (20, 12)), rank=3, iterations=50,
                              lam=20.0, seed=5)
    back = component_from_dict(component_to_dict(comp))
    assert np.array_equal(back.values, comp.values)
    assert back.method == comp.method
    assert back.lam == comp.lam
    assert back.seed == comp.seed
