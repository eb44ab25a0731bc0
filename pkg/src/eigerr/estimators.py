"""Eigenvector-error predictors and their bootstrap validation.

Two predictors for the expected scaled error n * E||u_i - u_tilde_i||^2:

* ``h_exact``: the full double sum over eigenvalue pairs, needing all p
  eigenvalues.
* ``h_hat``: the large-p estimator built only from the eigenvalue, its two
  neighbor gaps, and the bulk density value p*rho(lambda).

``bootstrap_error`` checks either against Monte-Carlo draws from the scaled
Wishart distribution, and ``sample_size_bound`` encodes the n >= h/2 validity
threshold implied by the residual cap ||u - u_tilde||^2 <= 2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .spectral import eig_sym
from .wishart import child_seed, sample_wishart_scaled, sqrt_psd

__all__ = [
    "HValue",
    "ErrorSample",
    "BootstrapConfig",
    "BootstrapResult",
    "h_exact",
    "h_exact_all",
    "h_hat",
    "aligned_residual",
    "bootstrap_error",
    "sample_size_bound",
    "regime_violation",
    "write_estimates_csv",
]


@dataclass(frozen=True)
class HValue:
    """Predictors attached to one eigenvalue (1-based index)."""

    index: int
    lam: float
    h_exact: float | None = None
    h_hat: float | None = None
    with_correction: bool = True


@dataclass(frozen=True)
class ErrorSample:
    """One aligned residual ||u_i - u_tilde_i||^2 from one Wishart draw."""

    index: int
    residual: float
    n: int
    replicate: int

    def __post_init__(self):
        if not 0.0 <= self.residual <= 2.0:
            raise ValueError("aligned residual must lie in [0, 2]")


@dataclass(frozen=True)
class BootstrapConfig:
    """Monte-Carlo setup: R replicates of a scaled Wishart draw at size n."""

    R: int
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("need at least one replicate")
        if self.n < 1:
            raise ValueError("sample count n must be positive")


@dataclass(frozen=True)
class BootstrapResult:
    """Per-index scaled error statistics plus the crossing diagnostic.

    ``crossing_count[i]`` counts replicates in which an adjacent sample
    eigenvector matched u_i better than its index partner did, the signature
    of a near-degenerate crossing where index pairing may swap vectors.
    """

    n_mean: np.ndarray
    n_std: np.ndarray
    crossing_count: np.ndarray
    R: int
    n: int


def h_exact(eigenvalues, i):
    """Exact error coefficient sum_{j != i} lam_i lam_j / (lam_i - lam_j)^2.

    ``i`` is 1-based. Raises on tied eigenvalues (the sum diverges).
    """
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    p = ev.size
    if not 1 <= i <= p:
        raise ValueError(f"index {i} out of range 1..{p}")
    lam = ev[i - 1]
    diff = lam - ev
    diff[i - 1] = np.inf
    if np.any(diff == 0):
        raise ValueError("tied eigenvalues: h is undefined")
    return float(np.sum(lam * ev / diff ** 2))


def h_exact_all(eigenvalues, chunk=512):
    """All p exact coefficients with the O(p^2) double loop, row-chunked."""
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    p = ev.size
    out = np.empty(p)
    for start in range(0, p, chunk):
        stop = min(start + chunk, p)
        lam = ev[start:stop, None]
        diff = lam - ev[None, :]
        for row in range(start, stop):
            diff[row - start, row] = np.inf
        if np.any(diff == 0):
            raise ValueError("tied eigenvalues: h is undefined")
        out[start:stop] = np.sum(lam * ev[None, :] / diff ** 2, axis=1)
    return out


def h_hat(lam, s_minus, s_plus, p, rho, include_correction=True):
    """Large-p error estimate from local quantities only.

    lam^2 [ (1/s-^2 + 1/s+^2) + p*rho(lam) (1/s- + 1/s+) ]; dropping the
    second bracket gives the nearest-neighbor-only variant
    (include_correction=False).
    """
    sm = np.asarray(s_minus, dtype=float)
    sp = np.asarray(s_plus, dtype=float)
    if np.any(sm <= 0) or np.any(sp <= 0):
        raise ValueError("gaps must be positive")
    lam = np.asarray(lam, dtype=float)
    out = lam * lam * (1.0 / sm ** 2 + 1.0 / sp ** 2)
    if include_correction:
        out = out + lam * lam * p * rho * (1.0 / sm + 1.0 / sp)
    return float(out) if out.ndim == 0 else out


def aligned_residual(u, u_tilde):
    """Squared eigenvector distance 2(1 - |<u, u_tilde>|) after sign alignment.

    Both inputs must be unit-norm within 1e-8; the result is clamped to
    [0, 2] (the bound is exact once the inner product is aligned to be
    nonnegative).
    """
    u = np.asarray(u, dtype=float).ravel()
    ut = np.asarray(u_tilde, dtype=float).ravel()
    if abs(np.linalg.norm(u) - 1.0) > 1e-8 or abs(np.linalg.norm(ut) - 1.0) > 1e-8:
        raise ValueError("inputs must be unit vectors")
    return float(np.clip(2.0 * (1.0 - abs(float(u @ ut))), 0.0, 2.0))


def _replicate_residuals(c, c_root, cfg, r):
    seed = child_seed(cfg.seed, r)
    draw = sample_wishart_scaled(c_root, cfg.n, seed)
    _, v_tilde = eig_sym(draw.matrix)
    u = c.eigenvectors
    dots = np.abs(np.einsum("ij,ij->j", u, v_tilde))
    residuals = np.clip(2.0 * (1.0 - dots), 0.0, 2.0)
    # Adjacent-column overlap check: flags indices where the sample vector
    # one slot over matches better, i.e. a probable eigenvalue crossing.
    crossing = np.zeros(u.shape[1], dtype=bool)
    up = np.abs(np.einsum("ij,ij->j", u[:, :-1], v_tilde[:, 1:]))
    down = np.abs(np.einsum("ij,ij->j", u[:, 1:], v_tilde[:, :-1]))
    crossing[:-1] |= up > dots[:-1]
    crossing[1:] |= down > dots[1:]
    return residuals, crossing


def bootstrap_error(c, cfg):
    """Monte-Carlo estimate of n * E||u_i - u_tilde_i||^2 per index.

    Draws R scaled Wishart replicates around ``c`` (child seeds keyed by
    replicate, so each replicate is reproducible in isolation), pairs sample
    eigenvectors with population ones in sorted-index order, and accumulates
    sign-aligned residuals in replicate order.
    """
    p = c.matrix.shape[0]
    if cfg.n < p:
        raise ValueError(f"need n >= p, got n={cfg.n}, p={p}")
    c_root = sqrt_psd(c)
    scaled = np.empty((cfg.R, p))
    crossings = np.zeros(p, dtype=np.int64)
    for r in range(cfg.R):
        residuals, crossing = _replicate_residuals(c, c_root, cfg, r)
        scaled[r] = cfg.n * residuals
        crossings += crossing
    n_mean = scaled.mean(axis=0)
    n_std = scaled.std(axis=0, ddof=1) if cfg.R > 1 else np.zeros(p)
    return BootstrapResult(n_mean=n_mean, n_std=n_std, crossing_count=crossings,
                           R=cfg.R, n=cfg.n)


def sample_size_bound(h):
    """Minimal admissible sample count n >= h/2 for the error law to hold."""
    if h <= 0:
        raise ValueError("h must be positive")
    return h / 2.0


def regime_violation(n, h):
    """True when n is below the h/2 validity bound."""
    return n < sample_size_bound(h)


def write_estimates_csv(path, rows):
    """Export per-index predictor/bootstrap rows.

    Columns: index, lambda, h_exact, h_hat, h_hat_uncorrected, n_mean_error,
    n_std_error, regime_violation. Missing entries are left empty.
    """
    header = ["index", "lambda", "h_exact", "h_hat", "h_hat_uncorrected",
              "n_mean_error", "n_std_error", "regime_violation"]

    def cell(value):
        if value is None:
            return ""
        if isinstance(value, bool):
            return str(int(value))
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        return repr(float(value))

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell(row.get(col)) for col in header])
