"""Low-rank factorizers for pooled magnitude-spectrum matrices.

Four interchangeable methods produce a component matrix ``H`` (rank x levels)
such that a spectrum row ``R`` is approximated by ``W @ H``:

* ``pca``            -- truncated SVD of the uncentered, unscaled matrix.
* ``nmf``            -- classic multiplicative updates, both factors nonnegative.
* ``semi_nmf``       -- H nonnegative, W solved by (ridge) least squares.
* ``hyperplane_nmf`` -- H nonnegative with W pinned to the projection R @ H.T,
                        plus a pairwise-cosine diversity penalty on the rows.

All iterative fits are deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    InvalidInputError,
    InvalidMethodError,
    InvalidRankError,
    NumericalError,
)

__all__ = [
    "EPSILON",
    "METHODS",
    "SpectraMatrix",
    "ComponentMatrix",
    "fit_pca",
    "fit_nmf",
    "infer_nmf_coefficients",
    "fit_semi_nmf",
    "fit_hyperplane_nmf",
    "fit_components",
    "cosine_penalty_and_gradient",
    "project_coefficients",
    "least_squares_coefficients",
    "infer_coefficients",
    "component_to_dict",
    "component_from_dict",
    "save_component_csv",
]

logger = logging.getLogger(__name__)

# Guard added to multiplicative-update denominators and norm clamps; the raw
# update rules are undefined at exact zeros.
EPSILON = 1e-12

METHODS = ("pca", "nmf", "semi_nmf", "hyperplane_nmf")


@dataclass(frozen=True)
class SpectraMatrix:
    """Pooled amplitude rows, levels 0..K, one row per (channel, offset).

    Column 0 (the mean level) is excluded from factorization; ``working``
    is the N x K matrix the factorizers actually see.
    """

    values: np.ndarray
    n_channels: int = 1

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def levels(self) -> int:
        return self.values.shape[1]

    @property
    def working(self) -> np.ndarray:
        return self.values[:, 1:]


@dataclass(frozen=True)
class ComponentMatrix:
    """Learned components H (rank x levels 1..K) plus fit configuration.

    ``objective_trace`` / ``min_entry_trace``, when present, hold one value
    per iteration boundary (index 0 = at initialization) and are not
    serialized.
    """

    values: np.ndarray
    method: str
    seed: int
    iterations: int = 0
    lam: float = 0.0
    objective_trace: np.ndarray | None = field(default=None, compare=False)
    min_entry_trace: np.ndarray | None = field(default=None, compare=False)

    @property
    def rank(self) -> int:
        return self.values.shape[0]

    @property
    def levels(self) -> int:
        return self.values.shape[1]


def _working_matrix(spectra) -> np.ndarray:
    if isinstance(spectra, SpectraMatrix):
        R = spectra.working
    else:
        R = np.asarray(spectra, dtype=np.float64)
    if R.ndim == 1:
        R = R[None, :]
    if R.ndim != 2:
        raise InvalidInputError(f"spectra must be a matrix, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise InvalidInputError("spectra contain non-finite values")
    return R


def _nonnegative_working(spectra) -> np.ndarray:
    R = _working_matrix(spectra)
    if R.min(initial=0.0) < 0.0:
        raise InvalidInputError("spectra must be elementwise nonnegative")
    return R


def _check_rank(rank: int, n: int, k: int) -> None:
    if rank < 1:
        raise InvalidRankError(f"rank must be >= 1, got {rank}")
    if rank > min(n, k):
        raise InvalidRankError(f"rank {rank} exceeds min(n_samples, levels) = {min(n, k)}")


def _svd_rows(R: np.ndarray, rank: int) -> np.ndarray:
    """Top-``rank`` right singular vectors as rows, each flipped to a
    nonnegative sum so the decomposition is sign-deterministic."""
    try:
        _, _, vt = np.linalg.svd(R, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    H = vt[:rank].copy()
    H[H.sum(axis=1) < 0] *= -1.0
    return H


def fit_pca(spectra, rank: int, seed: int = 0) -> ComponentMatrix:
    """Best rank-``rank`` subspace of the raw spectra (no centering, no scaling).

    Mean subtraction would make level energies signed and standardization
    would equalize levels that are genuinely unequal, so both are skipped;
    the components are plain top right singular vectors.
    """
    R = _working_matrix(spectra)
    _check_rank(rank, *R.shape)
    H = _svd_rows(R, rank)
    return ComponentMatrix(values=H, method="pca", seed=seed)


def _nmf_objective(R: np.ndarray, W: np.ndarray, H: np.ndarray) -> float:
    return 0.5 * float(np.linalg.norm(R - W @ H) ** 2)


def fit_nmf(
    spectra,
    rank: int,
    iterations: int = 1000,
    seed: int = 0,
    track_objective: bool = False,
) -> tuple[ComponentMatrix, np.ndarray]:
    """Alternating multiplicative updates from a seeded positive init.

    Per iteration: ``W *= (R H^T) / (W H H^T)`` then ``H *= (W^T R) / (W^T W H)``
    (denominators epsilon-guarded).  The half-squared Frobenius objective is
    non-increasing across iterations.  Returns ``(components, coefficients)``;
    the training coefficients are returned for inspection but new data goes
    through :func:`infer_nmf_coefficients`.
    """
    R = _nonnegative_working(spectra)
    n, k = R.shape
    _check_rank(rank, n, k)
    if iterations < 1:
        raise InvalidInputError(f"iterations must be >= 1, got {iterations}")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(R.mean(), EPSILON) / rank)
    W = rng.uniform(EPSILON, 1.0, size=(n, rank)) * scale
    H = rng.uniform(EPSILON, 1.0, size=(rank, k)) * scale
    trace = [_nmf_objective(R, W, H)] if track_objective else None
    for _ in range(iterations):
        W *= (R @ H.T) / (W @ (H @ H.T) + EPSILON)
        H *= (W.T @ R) / ((W.T @ W) @ H + EPSILON)
        if trace is not None:
            trace.append(_nmf_objective(R, W, H))
    components = ComponentMatrix(
        values=H,
        method="nmf",
        seed=seed,
        iterations=iterations,
        objective_trace=None if trace is None else np.asarray(trace),
        min_entry_trace=None,
    )
    return components, W


def infer_nmf_coefficients(
    spectrum_rows,
    components: ComponentMatrix,
    iterations: int = 200,
    seed: int | None = None,
) -> np.ndarray:
    """Nonnegative coefficients for new rows with H held fixed.

    Solves ``min_{W >= 0} 0.5 * ||R_new - W H||^2`` by multiplicative updates
    on W alone.  This is the expensive inference route; the projection methods
    answer the same question with one matrix product.
    """
    if components.method != "nmf":
        raise InvalidMethodError(
            f"iterative coefficient inference is defined for method 'nmf', got {components.method!r}"
        )
    R = _nonnegative_working(spectrum_rows)
    H = components.values
    if R.shape[1] != H.shape[1]:
        raise InvalidInputError(f"row length {R.shape[1]} != component levels {H.shape[1]}")
    rng = np.random.default_rng(components.seed + 1 if seed is None else seed)
    scale = np.sqrt(max(R.mean(), EPSILON) / components.rank)
    W = rng.uniform(EPSILON, 1.0, size=(R.shape[0], components.rank)) * scale
    for _ in range(iterations):
        W *= (R @ H.T) / (W @ (H @ H.T) + EPSILON)
    return W


def _ridge_gram_inverse(H: np.ndarray) -> np.ndarray:
    """Inverse of H H^T with a trace-scaled ridge; H H^T alone is often
    ill-conditioned for near-collinear rows."""
    rank = H.shape[0]
    gram = H @ H.T
    ridge = 1e-8 * max(np.trace(gram), EPSILON) / rank
    try:
        return np.linalg.inv(gram + ridge * np.eye(rank))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"H H^T inversion failed: {exc}") from exc


def least_squares_coefficients(spectrum_rows, components: ComponentMatrix) -> np.ndarray:
    """Ridge least-squares coefficients ``W = R H^T (H H^T + eps I)^-1``."""
    R = _working_matrix(spectrum_rows)
    H = components.values
    if R.shape[1] != H.shape[1]:
        raise InvalidInputError(f"row length {R.shape[1]} != component levels {H.shape[1]}")
    return R @ H.T @ _ridge_gram_inverse(H)


def fit_semi_nmf(
    spectra,
    rank: int,
    iterations: int = 1000,
    seed: int = 0,
    track_objective: bool = False,
) -> ComponentMatrix:
    """Nonnegative H with unconstrained W refit by least squares each iteration.

    The H step is the sign-split multiplicative rule
    ``H *= sqrt((A+ + G- H) / (A- + G+ H))`` with ``A = W^T R``, ``G = W^T W``,
    ``X+ = max(X, 0)``, ``X- = max(-X, 0)``; it keeps H nonnegative while W
    may take either sign.
    """
    R = _working_matrix(spectra)
    n, k = R.shape
    _check_rank(rank, n, k)
    if iterations < 1:
        raise InvalidInputError(f"iterations must be >= 1, got {iterations}")
    rng = np.random.default_rng(seed)
    H = rng.uniform(1e-3, 1.0, size=(rank, k)) * np.sqrt(max(abs(R).mean(), EPSILON))
    trace = [] if track_objective else None
    for _ in range(iterations):
        W = R @ H.T @ _ridge_gram_inverse(H)
        if trace is not None:
            trace.append(_nmf_objective(R, W, H))
        A = W.T @ R
        G = W.T @ W
        num = np.maximum(A, 0.0) + np.maximum(-G, 0.0) @ H
        den = np.maximum(-A, 0.0) + np.maximum(G, 0.0) @ H + EPSILON
        H *= np.sqrt(num / den)
        if not np.all(np.isfinite(H)):
            raise NumericalError("semi-NMF update produced non-finite components")
    if trace is not None:
        W = R @ H.T @ _ridge_gram_inverse(H)
        trace.append(_nmf_objective(R, W, H))
    return ComponentMatrix(
        values=H,
        method="semi_nmf",
        seed=seed,
        iterations=iterations,
        objective_trace=None if trace is None else np.asarray(trace),
    )


def cosine_penalty_and_gradient(components) -> tuple[float, np.ndarray, np.ndarray]:
    """Pairwise-cosine diversity penalty and its split gradient.

    ``penalty = sum_{i != j} cos(h_i, h_j)`` over ordered pairs (each
    unordered pair counts twice).  For the per-row function
    ``f_i = sum_{j != i} cos(h_i, h_j)`` the gradient splits into two
    elementwise-nonnegative parts when H >= 0:

        grad_plus[i]  = sum_{j != i} h_j / (|h_i| |h_j|)
        grad_minus[i] = sum_{j != i} (h_i . h_j / (|h_i|^3 |h_j|)) h_i

    with ``d f_i / d h_i = grad_plus[i] - grad_minus[i]``.  Row norms are
    clamped at EPSILON.
    """
    H = components.values if isinstance(components, ComponentMatrix) else np.asarray(components, dtype=np.float64)
    norms = np.maximum(np.linalg.norm(H, axis=1), EPSILON)
    unit = H / norms[:, None]
    cosines = unit @ unit.T
    np.fill_diagonal(cosines, 0.0)
    penalty = float(cosines.sum())
    grad_plus = (unit.sum(axis=0)[None, :] - unit) / norms[:, None]
    grad_minus = (cosines.sum(axis=1) / norms**2)[:, None] * H
    return penalty, grad_plus, grad_minus


def _hyperplane_init(R: np.ndarray, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Top singular rows with non-positive entries replaced by random
    positives drawn at the row's own scale (mean of its positive entries)."""
    H = _svd_rows(R, rank)
    for i in range(rank):
        row = H[i]
        neg = row <= 0.0
        if not neg.any():
            continue
        positive = row[row > 0.0]
        scale = positive.mean() if positive.size else 1e-2
        row[neg] = rng.uniform(1e-3, max(scale, 2e-3), size=int(neg.sum()))
    return H


def _normalize_rows(H: np.ndarray) -> np.ndarray:
    return H / np.maximum(np.linalg.norm(H, axis=1), EPSILON)[:, None]


def hyperplane_objective(R: np.ndarray, H: np.ndarray, lam: float) -> float:
    """||R - (R H^T) H||_F^2 + lam * pairwise-cosine penalty."""
    W = R @ H.T
    penalty = cosine_penalty_and_gradient(H)[0]
    return float(np.linalg.norm(R - W @ H) ** 2) + lam * penalty


def fit_hyperplane_nmf(
    spectra,
    rank: int,
    iterations: int = 1000,
    lam: float = 20.0,
    seed: int = 0,
    track_objective: bool = False,
) -> ComponentMatrix:
    """Nonnegative components with coefficients pinned to ``W = R H^T``.

    Per iteration: recompute ``W = R H^T``, then apply the multiplicative
    step ``H *= (W^T R + lam * grad_minus) / (W^T W H + lam * grad_plus)``
    and renormalize each row to unit norm.  The attraction part of the
    cosine gradient sits in the denominator, so larger ``lam`` pushes rows
    apart.  Rows are unit-normalized every iteration: the raw update is
    scale-neutral and otherwise alternates between two scale phases instead
    of settling.  Runs exactly ``iterations`` steps, no early stopping.
    """
    R = _nonnegative_working(spectra)
    n, k = R.shape
    _check_rank(rank, n, k)
    if iterations < 1:
        raise InvalidInputError(f"iterations must be >= 1, got {iterations}")
    if lam < 0.0:
        raise InvalidInputError(f"lam must be >= 0, got {lam}")
    rng = np.random.default_rng(seed)
    H = _normalize_rows(_hyperplane_init(R, rank, rng))
    obj_trace = [hyperplane_objective(R, H, lam)] if track_objective else None
    min_trace = [float(H.min())] if track_objective else None
    for _ in range(iterations):
        W = R @ H.T
        _, grad_plus, grad_minus = cosine_penalty_and_gradient(H)
        numerator = W.T @ R + lam * grad_minus
        denominator = (W.T @ W) @ H + lam * grad_plus + EPSILON
        H = H * (numerator / denominator)
        collapsed = np.linalg.norm(H, axis=1) < EPSILON
        if collapsed.any():
            logger.info("re-seeding %d collapsed component row(s)", int(collapsed.sum()))
            H[collapsed] = rng.uniform(1e-3, 1e-2, size=(int(collapsed.sum()), k))
        H = _normalize_rows(H)
        if obj_trace is not None:
            obj_trace.append(hyperplane_objective(R, H, lam))
            min_trace.append(float(H.min()))
    return ComponentMatrix(
        values=H,
        method="hyperplane_nmf",
        seed=seed,
        iterations=iterations,
        lam=lam,
        objective_trace=None if obj_trace is None else np.asarray(obj_trace),
        min_entry_trace=None if min_trace is None else np.asarray(min_trace),
    )


def fit_components(
    spectra,
    method: str,
    rank: int,
    iterations: int = 1000,
    lam: float = 20.0,
    seed: int = 0,
    track_objective: bool = False,
) -> ComponentMatrix:
    """Dispatch to the requested factorizer."""
    if method == "pca":
        return fit_pca(spectra, rank, seed=seed)
    if method == "nmf":
        return fit_nmf(spectra, rank, iterations, seed, track_objective)[0]
    if method == "semi_nmf":
        return fit_semi_nmf(spectra, rank, iterations, seed, track_objective)
    if method == "hyperplane_nmf":
        return fit_hyperplane_nmf(spectra, rank, iterations, lam, seed, track_objective)
    raise InvalidMethodError(f"unknown method {method!r}; expected one of {METHODS}")


def project_coefficients(spectrum_rows, components: ComponentMatrix) -> np.ndarray:
    """Hyperplane projection ``W = R H^T``: a single matrix product.

    Defined for the methods whose coefficient rule is the projection
    (``pca`` and ``hyperplane_nmf``).
    """
    if components.method not in ("pca", "hyperplane_nmf"):
        raise InvalidMethodError(
            f"projection coefficients are defined for pca/hyperplane_nmf, got {components.method!r}"
        )
    R = _working_matrix(spectrum_rows)
    H = components.values
    if R.shape[1] != H.shape[1]:
        raise InvalidInputError(f"row length {R.shape[1]} != component levels {H.shape[1]}")
    return R @ H.T


def infer_coefficients(spectrum_rows, components: ComponentMatrix, nmf_iterations: int = 200) -> np.ndarray:
    """Method-appropriate coefficients for amplitude rows (levels 1..K)."""
    if components.method in ("pca", "hyperplane_nmf"):
        return project_coefficients(spectrum_rows, components)
    if components.method == "semi_nmf":
        return least_squares_coefficients(spectrum_rows, components)
    if components.method == "nmf":
        return infer_nmf_coefficients(spectrum_rows, components, iterations=nmf_iterations)
    raise InvalidMethodError(f"unknown method {components.method!r}")


def component_to_dict(components: ComponentMatrix) -> dict:
    """JSON-ready form; floats survive a round trip exactly (shortest repr)."""
    return {
        "method": components.method,
        "rank": components.rank,
        "levels": components.levels,
        "lambda": components.lam,
        "iterations": components.iterations,
        "seed": components.seed,
        "rows": [[float(x) for x in row] for row in components.values],
    }


def component_from_dict(payload: dict) -> ComponentMatrix:
    values = np.asarray(payload["rows"], dtype=np.float64)
    if values.ndim != 2 or values.shape != (payload["rank"], payload["levels"]):
        raise InvalidInputError("component payload shape does not match declared rank/levels")
    return ComponentMatrix(
        values=values,
        method=payload["method"],
        seed=int(payload["seed"]),
        iterations=int(payload["iterations"]),
        lam=float(payload["lambda"]),
    )


def save_component_csv(components: ComponentMatrix, path) -> None:
    """One row per component, columns level_1..level_K."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component"] + [f"level_{k}" for k in range(1, components.levels + 1)])
        for v, row in enumerate(components.values):
            writer.writerow([v] + [repr(float(x)) for x in row])


def component_json_text(components: ComponentMatrix) -> str:
    return json.dumps(component_to_dict(components), sort_keys=True, separators=(",", ":"))
