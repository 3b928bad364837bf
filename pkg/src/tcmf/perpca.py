"""Riemannian factorization backend: Stiefel gradient steps with a
generalized polar retraction.

Works on the covariances S_i = M_i M_i^T, computed once per solve, so the
per-iteration cost does not depend on the column counts.  Each iteration
takes a variance-ascent step along the projected covariance directions,
retracts the local bases, retracts the shared basis toward the average of
its per-source copies, then corrects every local basis against the new
shared one.  Because the correction is idempotent, running it at the end
of an iteration instead of the start of the next leaves the trajectory
unchanged while keeping every iteration boundary orthonormal and mutually
orthogonal.  Coefficient factors are read off at the end as v = M^T u.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, DivergenceError, SingularityError
from .jimf import FactorEstimate, JimfRequest, spectral_init
from .numerics import as_matrix, inv_sqrt_psd
from .parallel import thread_map

POWER_ITERATIONS = 20


@dataclass(frozen=True)
class PerpcaParams:
    step_size: float = 0.1
    iterations: int = 500

    def __post_init__(self):
        if self.step_size < 0.0:
            raise ConfigurationError("step_size must be nonnegative")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be nonnegative")


def generalized_retraction(u, v) -> np.ndarray:
    """Map the displaced basis u + v back onto the Stiefel manifold:
    (u + v) ((u + v)^T (u + v))^{-1/2}."""
    u = as_matrix(u)
    v = as_matrix(v)
    if u.shape != v.shape:
        raise DimensionError("u and v must have the same shape")
    w = u + v
    try:
        b = inv_sqrt_psd(w.T @ w)
    except SingularityError as err:
        raise SingularityError("u + v is rank deficient; retraction undefined") from err
    return w @ b


def perpca_gradient(u_g, u_l, s) -> np.ndarray:
    """Projected covariance directions (I - u_g u_g^T - u_l u_l^T) S [u_g u_l].

    Assumes u_g and u_l are orthonormal and mutually orthogonal; the first
    r1 columns drive the shared basis, the rest the local one.
    """
    u_g = as_matrix(u_g)
    u_l = as_matrix(u_l)
    s = as_matrix(s)
    stacked = s @ np.hstack((u_g, u_l))
    return stacked - u_g @ (u_g.T @ stacked) - u_l @ (u_l.T @ stacked)


def _lambda_max(c: np.ndarray) -> float:
    # deterministic power iteration; only used to scale the step size
    n = c.shape[0]
    if n == 0:
        return 0.0
    v = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(POWER_ITERATIONS):
        w = c @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(v @ (c @ v))


def _orthonormal(a: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(a)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def perpca_solve(
    req: JimfRequest,
    params: PerpcaParams,
    callback=None,
    divergence_window: int = 50,
) -> FactorEstimate:
    """Run the retraction loop for params.iterations rounds.

    The step size is params.step_size divided by the largest covariance
    eigenvalue across sources (estimated by power iteration), so the default
    works across data scales.  callback(tau, u_g, u_l_list), when given, is
    invoked after every iteration, at which point all bases are orthonormal
    and the local ones are orthogonal to the shared one.  Ends with an exact
    deflation plus QR pass on each local basis before the coefficients are
    read off.
    """
    mats = [as_matrix(m) for m in req.matrices]
    start = req.warm_start if req.warm_start is not None else spectral_init(mats, req.r1, req.r2)
    # warm starts from other backends are only near-orthonormal
    u_g = _orthonormal(start.u_g)
    u_l = [_orthonormal(ul - u_g @ (u_g.T @ ul)) for ul in start.u_l]
    n = len(mats)
    r1 = req.r1
    covs = [m @ m.T for m in mats]
    scale = max((_lambda_max(c) for c in covs), default=0.0)
    eta = params.step_size / scale if scale > 0.0 else 0.0
    eye_n = np.eye(u_g.shape[0])
    trace = []
    rises = 0

    for tau in range(params.iterations):

        def advance(i):
            grad = perpca_gradient(u_g, u_l[i], covs[i])
            cand = u_g + eta * grad[:, :r1]
            ul_new = generalized_retraction(u_l[i], eta * grad[:, r1:])
            return cand, ul_new

        results = thread_map(advance, range(n))
        acc = np.zeros_like(u_g)
        for i, (cand, ul_new) in enumerate(results):
            acc += cand
            u_l[i] = ul_new
        u_g = generalized_retraction(u_g, acc / n - u_g)

        def correct(i):
            return generalized_retraction(u_l[i], -u_g @ (u_g.T @ u_l[i]))

        u_l = list(thread_map(correct, range(n)))

        obj = 0.0
        for i in range(n):
            k = eye_n - u_g @ u_g.T - u_l[i] @ u_l[i].T
            obj += float(np.trace(k @ covs[i] @ k))
        if not np.isfinite(obj):
            trace.append(obj)
            raise DivergenceError("objective overflowed", objective_trace=trace)
        if trace and obj > trace[-1]:
            rises += 1
            if rises >= divergence_window:
                trace.append(obj)
                raise DivergenceError(
                    f"objective rose for {rises} consecutive iterations",
                    objective_trace=trace,
                )
        else:
            rises = 0
        trace.append(obj)
        if callback is not None:
            callback(tau + 1, u_g, list(u_l))

    u_l = [_orthonormal(ul - u_g @ (u_g.T @ ul)) for ul in u_l]
    v_g = [m.T @ u_g for m in mats]
    v_l = [m.T @ ul for m, ul in zip(mats, u_l)]
    return FactorEstimate(u_g=u_g, v_g=v_g, u_l=u_l, v_l=v_l)
