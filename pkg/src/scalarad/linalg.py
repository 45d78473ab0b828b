"""Dense helpers for Jacobian math: products, norms, and a damped pseudo-inverse.

Matrices are row-major ``float64`` numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ArityError, NotSPDError, RankDeficiencyError, UsageError

DEFAULT_DAMPING = 1e-8

# relative pivot floor below which an undamped system counts as singular
_RANK_TOL = 1e-13


@dataclass(frozen=True)
class DampedPseudoInverseConfig:
    lam: float = DEFAULT_DAMPING

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise UsageError(f"damping must be non-negative, got {self.lam}")


def as_matrix(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    if a.ndim != 2:
        raise ArityError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def matvec(a, x) -> np.ndarray:
    a = as_matrix(a)
    x = np.asarray(x, dtype=float).ravel()
    if a.shape[1] != x.shape[0]:
        raise ArityError(f"cannot multiply {a.shape[0]}x{a.shape[1]} matrix by length-{x.shape[0]} vector")
    return a @ x


def norm2(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float).ravel()))


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`NotSPDError` on a bad pivot."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ArityError(f"matrix must be square, got {a.shape}")
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as e:
        raise NotSPDError("matrix is not symmetric positive definite") from e


def _cho_solve(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = solve_triangular(low, b, lower=True, check_finite=False)
    return solve_triangular(low.T, y, lower=False, check_finite=False)


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``."""
    a = as_matrix(a)
    b = np.asarray(b, dtype=float).ravel()
    if a.shape[0] != b.shape[0]:
        raise ArityError(f"right-hand side has length {b.shape[0]}, expected {a.shape[0]}")
    return _cho_solve(cholesky(a), b)


def pinv_solve(jac, r, cfg: DampedPseudoInverseConfig | float | None = None) -> np.ndarray:
    """Return ``J^T (J J^T + lam I)^-1 r``.

    With ``lam = 0`` and full row rank this is the minimum-norm solution of
    ``J @ d = r``. Requires ``m <= n``.
    """
    if cfg is None:
        lam = DEFAULT_DAMPING
    elif isinstance(cfg, DampedPseudoInverseConfig):
        lam = cfg.lam
    else:
        lam = DampedPseudoInverseConfig(float(cfg)).lam
    jac = as_matrix(jac)
    r = np.asarray(r, dtype=float).ravel()
    m, n = jac.shape
    if m > n:
        raise ArityError(f"pinv_solve needs m <= n, got {m}x{n}")
    if r.shape[0] != m:
        raise ArityError(f"residual has length {r.shape[0]}, expected {m}")
    if not np.all(np.isfinite(r)):
        raise UsageError("residual must be finite")
    gram = jac @ jac.T
    if lam > 0.0:
        gram[np.diag_indices(m)] += lam
        low = cholesky(gram)
    else:
        try:
            low = cholesky(gram)
        except NotSPDError:
            raise RankDeficiencyError("J J^T is singular; pass a positive damping") from None
        scale = max(float(np.max(np.diag(gram))), np.finfo(float).tiny)
        if float(np.min(np.diag(low))) ** 2 <= _RANK_TOL * scale:
            raise RankDeficiencyError("J J^T is numerically singular; pass a positive damping")
    return jac.T @ _cho_solve(low, r)
