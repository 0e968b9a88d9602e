"""Set-level metrics over distance matrices laid out as (generated, reference)."""
import numpy as np


def _check(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or 0 in D.shape:
        raise ValueError(f"distance matrix must be a non-empty 2-D array, got shape {D.shape}")
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise ValueError("distance matrix entries must be finite and non-negative")
    return D


def mmd(D: np.ndarray) -> float:
    """Minimum Matching Distance: mean over references of the closest generated item."""
    return float(_check(D).min(axis=0).mean())


def cov(D: np.ndarray) -> float:
    """Coverage: fraction of references that are the nearest one for some generated item."""
    D = _check(D)
    matched = np.unique(np.argmin(D, axis=1))
    return matched.size / D.shape[1]


def union_matrix(D_gg: np.ndarray, D_gr: np.ndarray, D_rr: np.ndarray) -> np.ndarray:
    """Distances over generated-then-reference items."""
    D_gg, D_gr, D_rr = (np.asarray(m, dtype=np.float64) for m in (D_gg, D_gr, D_rr))
    n_g, n_r = D_gr.shape
    if D_gg.shape != (n_g, n_g) or D_rr.shape != (n_r, n_r):
        raise ValueError(f"inconsistent blocks: {D_gg.shape}, {D_gr.shape}, {D_rr.shape}")
    return np.block([[D_gg, D_gr], [D_gr.T, D_rr]])


def one_nna(D_full: np.ndarray, n_gen: int) -> float:
    """Leave-one-out 1-NN accuracy over the union; the first ``n_gen`` items are generated.

    Ties go to the lowest index. 0.5 means the sets are indistinguishable.
    """
    D = _check(D_full)
    n = D.shape[0]
    if D.shape != (n, n):
        raise ValueError(f"1-NNA needs a square matrix over the union, got {D.shape}")
    if n_gen < 2 or n - n_gen < 2:
        raise ValueError(f"1-NNA needs at least two items per set, got {n_gen} and {n - n_gen}")
    D = D.copy()
    np.fill_diagonal(D, np.inf)
    labels = np.arange(n) < n_gen
    nearest = np.argmin(D, axis=1)
    return float(np.mean(labels[nearest] == labels))
