"""Gradient-descent factorization backend with per-iteration orthogonality
correction.

Objective over sources i (beta >= 0):

    sum_i  0.5 * ||M_i - u_g v_g[i]^T - u_l[i] v_l[i]^T||_F^2
         + 0.5 * beta * (||u_g^T u_g - I||_F^2 + ||u_l[i]^T u_l[i] - I||_F^2)

Each iteration first corrects every source, replacing u_l[i] by its component
orthogonal to u_g and compensating v_g[i] so the reconstruction is untouched,
then takes one gradient step per block.  The shared factor moves as the
average of the per-source updated copies, accumulated in ascending source
order so results do not depend on thread count.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DivergenceError, SingularityError
from .jimf import FactorEstimate, JimfRequest, spectral_init
from .numerics import as_matrix
from .parallel import thread_map

RANK_RTOL = 1e-12
EARLY_STOP_TOL = 1e-12
EARLY_STOP_WINDOW = 20


@dataclass(frozen=True)
class HmfParams:
    step_size: float = 5e-3
    iterations: int = 500
    beta: float = 1e-5
    divergence_window: int = 50
    early_stop: bool = False

    def __post_init__(self):
        if self.step_size < 0.0:
            raise ConfigurationError("step_size must be nonnegative")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be nonnegative")
        if self.beta < 0.0:
            raise ConfigurationError("beta must be nonnegative")
        if self.divergence_window < 1:
            raise ConfigurationError("divergence_window must be positive")


def _frob_sq(a) -> float:
    return float(np.sum(a * a))


def hmf_objective(est: FactorEstimate, matrices, beta: float) -> float:
    """Evaluate the objective above at the given estimate."""
    mats = [as_matrix(m) for m in matrices]
    gram_g = est.u_g.T @ est.u_g
    reg_g = 0.5 * beta * _frob_sq(gram_g - np.eye(est.r1))
    total = 0.0
    for i, m in enumerate(mats):
        resid = m - est.reconstruction(i)
        ul = est.u_l[i]
        gram_l = ul.T @ ul
        total += 0.5 * _frob_sq(resid) + reg_g
        total += 0.5 * beta * _frob_sq(gram_l - np.eye(ul.shape[1]))
    return total


def hmf_gradients(est: FactorEstimate, source_index: int, matrix, beta: float):
    """Gradient blocks (u_g, v_g, u_l, v_l) of the source's term.

    With E = u_g v_g^T + u_l v_l^T - M:
        d/du_g = E v_g + 2 beta u_g (u_g^T u_g - I)
        d/dv_g = E^T u_g
        d/du_l = E v_l + 2 beta u_l (u_l^T u_l - I)
        d/dv_l = E^T u_l
    """
    m = as_matrix(matrix)
    u_g = est.u_g
    v_g = est.v_g[source_index]
    u_l = est.u_l[source_index]
    v_l = est.v_l[source_index]
    e = u_g @ v_g.T + u_l @ v_l.T - m
    g_u_g = e @ v_g + 2.0 * beta * (u_g @ (u_g.T @ u_g - np.eye(u_g.shape[1])))
    g_v_g = e.T @ u_g
    g_u_l = e @ v_l + 2.0 * beta * (u_l @ (u_l.T @ u_l - np.eye(u_l.shape[1])))
    g_v_l = e.T @ u_l
    return g_u_g, g_v_g, g_u_l, g_v_l


def _check_full_rank(u_g: np.ndarray):
    if u_g.shape[1] == 0:
        return
    sv = np.linalg.svd(u_g, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= RANK_RTOL * sv[0]:
        raise SingularityError("shared factor lost column rank; cannot correct")


def _correct_arrays(u_g, v_g, u_l, v_l):
    # returns (u_l_new, v_g_new); exact identity u_g v_g'^T + u_l' v_l^T ==
    # u_g v_g^T + u_l v_l^T by construction
    if u_g.shape[1] == 0 or u_l.shape[1] == 0:
        return u_l, v_g
    g = np.linalg.solve(u_g.T @ u_g, u_g.T @ u_l)
    return u_l - u_g @ g, v_g + v_l @ g.T


def hmf_correct(est: FactorEstimate, source_index: int) -> FactorEstimate:
    """Restore u_g^T u_l[i] = 0 for one source without moving its
    reconstruction: u_l[i] loses its component along u_g and v_g[i] absorbs
    the matching coefficient shift."""
    _check_full_rank(est.u_g)
    ul, vg = _correct_arrays(est.u_g, est.v_g[source_index], est.u_l[source_index], est.v_l[source_index])
    v_g = list(est.v_g)
    u_l = list(est.u_l)
    v_g[source_index] = vg
    u_l[source_index] = ul
    return replace(est, v_g=v_g, u_l=u_l)


def hmf_solve(req: JimfRequest, params: HmfParams, objective_out: list | None = None) -> FactorEstimate:
    """Run the correct-then-step loop for params.iterations rounds.

    Starts from req.warm_start when given, otherwise from spectral_init.
    Records the objective once per iteration (appended to objective_out when
    provided) and raises DivergenceError, trace attached, after
    params.divergence_window consecutive rises.  Ends with one extra
    correction pass so the returned estimate satisfies the orthogonality
    contract.
    """
    mats = [as_matrix(m) for m in req.matrices]
    start = req.warm_start if req.warm_start is not None else spectral_init(mats, req.r1, req.r2)
    u_g = start.u_g.copy()
    v_g = [v.copy() for v in start.v_g]
    u_l = [u.copy() for u in start.u_l]
    v_l = [v.copy() for v in start.v_l]
    n = len(mats)
    eta = params.step_size
    beta = params.beta
    eye_g = np.eye(req.r1)
    trace = [] if objective_out is None else objective_out
    rises = 0
    flats = 0

    for _ in range(params.iterations):
        try:
            _check_full_rank(u_g)
        except SingularityError:
            # rank collapse after runaway growth is divergence, not bad input
            if trace and trace[-1] > 1e6 * max(trace[0], 1e-300):
                raise DivergenceError(
                    "shared factor collapsed while the objective grew",
                    objective_trace=trace,
                )
            raise
        gram_g = u_g.T @ u_g
        reg_g_val = 0.5 * beta * _frob_sq(gram_g - eye_g)
        reg_g_grad = 2.0 * beta * (u_g @ (gram_g - eye_g))

        def advance(i):
            ul, vg = _correct_arrays(u_g, v_g[i], u_l[i], v_l[i])
            vl = v_l[i]
            e = u_g @ vg.T + ul @ vl.T - mats[i]
            gram_l = ul.T @ ul - np.eye(ul.shape[1])
            obj_i = 0.5 * _frob_sq(e) + reg_g_val + 0.5 * beta * _frob_sq(gram_l)
            cand = u_g - eta * (e @ vg + reg_g_grad)
            vg_new = vg - eta * (e.T @ u_g)
            ul_new = ul - eta * (e @ vl + 2.0 * beta * (ul @ gram_l))
            vl_new = vl - eta * (e.T @ ul)
            return cand, vg_new, ul_new, vl_new, obj_i

        results = thread_map(advance, range(n))
        acc = np.zeros_like(u_g)
        obj = 0.0
        for i, (cand, vg_new, ul_new, vl_new, obj_i) in enumerate(results):
            acc += cand
            obj += obj_i
            v_g[i] = vg_new
            u_l[i] = ul_new
            v_l[i] = vl_new
        u_g = acc / n

        if not np.isfinite(obj):
            trace.append(obj)
            raise DivergenceError("objective overflowed", objective_trace=trace)
        if trace and obj > trace[-1]:
            rises += 1
            if rises >= params.divergence_window:
                trace.append(obj)
                raise DivergenceError(
                    f"objective rose for {rises} consecutive iterations",
                    objective_trace=trace,
                )
        else:
            rises = 0
        if params.early_stop and trace and abs(obj - trace[-1]) < EARLY_STOP_TOL:
            flats += 1
        else:
            flats = 0
        trace.append(obj)
        if params.early_stop and flats >= EARLY_STOP_WINDOW:
            break

    _check_full_rank(u_g)
    for i in range(n):
        u_l[i], v_g[i] = _correct_arrays(u_g, v_g[i], u_l[i], v_l[i])
    return FactorEstimate(u_g=u_g, v_g=v_g, u_l=u_l, v_l=v_l)
