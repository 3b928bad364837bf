"""Dense linear-algebra primitives the rest of the package builds on.

Everything operates on finite float64 2-D arrays.  numpy is the only
backend; callers never reach into LAPACK directly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, DimensionError, SingularityError

ORTHO_TOL = 1e-10
RANK_RTOL = 1e-12
SYM_TOL = 1e-10
PSD_MIN_EIG = 1e-12


def as_matrix(a) -> np.ndarray:
    """Return `a` as a float64 2-D array, rejecting NaN and Inf entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got ndim={m.ndim}")
    if m.size and not np.isfinite(m).all():
        raise ContractViolationError("matrix contains NaN or Inf entries")
    return m


def linf(a) -> float:
    """Largest absolute entry; 0 for empty arrays."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


@dataclass(frozen=True)
class ThinSVD:
    """Top-k singular triplets: u is (n, k), sigma is (k,), v is (m, k).

    Columns of u and v are orthonormal and sigma is nonnegative and
    nonincreasing; violations are rejected at construction.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        k = self.sigma.shape[0]
        if self.u.ndim != 2 or self.v.ndim != 2 or self.sigma.ndim != 1:
            raise DimensionError("ThinSVD parts have wrong dimensionality")
        if self.u.shape[1] != k or self.v.shape[1] != k:
            raise DimensionError("factor widths disagree with sigma length")
        if k and (np.any(np.diff(self.sigma) > 0) or self.sigma[-1] < 0):
            raise ContractViolationError("sigma must be nonnegative and nonincreasing")
        for f in (self.u, self.v):
            if k and linf(f.T @ f - np.eye(k)) > ORTHO_TOL:
                raise ContractViolationError("singular vectors are not orthonormal")

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def truncated_svd(m, k: int) -> ThinSVD:
    """Best rank-k approximation factors of m.

    Sign convention: the largest-magnitude entry of each left singular vector
    is made positive (ties broken by first index), so repeated calls on the
    same input give bit-identical factors.
    """
    m = as_matrix(m)
    if not 0 <= k <= min(m.shape):
        raise DimensionError(f"k={k} out of range for shape {m.shape}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    u = u[:, :k].copy()
    s = s[:k].copy()
    v = vt[:k].T.copy()
    for j in range(k):
        pivot = int(np.argmax(np.abs(u[:, j])))
        if u[pivot, j] < 0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    return ThinSVD(u=u, sigma=s, v=v)


def projection_onto(u) -> np.ndarray:
    """Orthogonal projector onto the column space of full-column-rank u."""
    u = as_matrix(u)
    n, r = u.shape
    if r == 0:
        return np.zeros((n, n))
    q, s, _ = np.linalg.svd(u, full_matrices=False)
    if s[-1] <= RANK_RTOL * s[0]:
        raise SingularityError("projection requires full column rank")
    p = q @ q.T
    return (p + p.T) / 2.0


def inv_sqrt_psd(a) -> np.ndarray:
    """Inverse principal square root of a symmetric positive-definite matrix."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError("inv_sqrt_psd needs a square matrix")
    if a.shape[0] == 0:
        return a.copy()
    if linf(a - a.T) >= SYM_TOL:
        raise ContractViolationError("matrix is not symmetric")
    sym = (a + a.T) / 2.0  # kill round-off asymmetry before eigh
    w, q = np.linalg.eigh(sym)
    if w[0] <= PSD_MIN_EIG:
        raise SingularityError("matrix is not positive definite")
    b = (q / np.sqrt(w)) @ q.T
    return (b + b.T) / 2.0
