"""Hessian eigen-analysis, critical point classification, and saddle criteria.

The two checkers evaluate, at a first-order critical factor X with
D = ||X X^T - M*||_F and sigma_r = r-th largest singular value of X:

* plain least-squares objective -- criterion
      D^2 > 2 (1+d)/(1-d) tr(M*) sigma_r^2
  implies a Hessian eigenvalue at most
      2 (1+d) sigma_r^2 - D^2 (1-d) / tr(M*);

* penalized objective f + lam f^l -- criterion
      D^2 >= tr(M*) sigma_r^2 *
             [(1+d) + lam (l-1) (1+d)^(l/2) D^(l-2)] /
             [(1-d)/2 + lam C (1-d)^(l/2) D^(l-2)]
  implies an eigenvalue at most
      [2 (1+d) sigma_r^2 - D^2 (1-d)/tr(M*)]
      + lam D^(l-2) [2 (1+d)^(l/2) (l-1) sigma_r^2 - 2 (1-d)^(l/2) C D^2/tr(M*)],

  where C = c_of_l_exact(l, m): the checker uses the sign-correct Taylor
  constant, for which the implication is a theorem; the larger unsigned
  variant c_of_l(l, m) produces bounds that concrete critical points
  falsify (see notes in losses).

`delta` is always supplied by the caller (a known or estimated isometry
constant at rank >= r + r*); the checkers never derive it from the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import (
    LossSpec,
    c_of_l_exact,
    gradient,
    h_lambda_gradient,
    hessian_matrix,
    hessian_quadratic_form,
)

__all__ = [
    "CriticalPointReport",
    "TheoremVerdict",
    "classify_point",
    "thm1_check",
    "thm4_check",
    "escape_direction",
    "near_region_radius",
    "global_benign_condition",
    "lifted_region_threshold",
    "landscape_sweep",
    "SweepResult",
]

NOT_CRITICAL = "not_critical"
STRICT_SADDLE = "strict_saddle"
SECOND_ORDER_POINT = "second_order_point"

_BOUNDARY_SLACK = 1e-12


def _as_factor(inst, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X

def _sigma_r(X, r):
    """r-th largest singular value of the factor (0 for rank-deficient X)."""
    s = np.linalg.svd(X, compute_uv=False)
    return float(s[r - 1]) if s.size >= r else 0.0


def _distance(X, mstar):
    return float(np.linalg.norm(X @ X.T - mstar, "fro"))


def default_grad_tol(inst):
    return 1e-8 * max(1.0, float(np.linalg.norm(inst.b)))


@dataclass(frozen=True)
class CriticalPointReport:
    grad_norm: float
    lambda_min: float
    lambda_max: float
    sigma_r: float
    distance: float
    classification: str


def classify_point(inst, X, spec=LossSpec(), grad_tol=None, eig_tol=None):
    """Classify X as not critical, a strict saddle, or a second-order point.

    Tolerances default to 1e-8 * max(1, ||b||) for the gradient and
    1e-8 * max(1, lambda_max) for the eigenvalue cut, keeping the
    classification stable across problem scales.
    """
    X = _as_factor(inst, X)
    gn = float(np.linalg.norm(gradient(inst, X, spec)))
    evals = np.linalg.eigvalsh(hessian_matrix(inst, X, spec))
    lam_min, lam_max = float(evals[0]), float(evals[-1])
    if grad_tol is None:
        grad_tol = default_grad_tol(inst)
    if eig_tol is None:
        eig_tol = 1e-8 * max(1.0, lam_max)
    if gn > grad_tol:
        cls = NOT_CRITICAL
    elif lam_min < -eig_tol:
        cls = STRICT_SADDLE
    else:
        cls = SECOND_ORDER_POINT
    return CriticalPointReport(
        grad_norm=gn,
        lambda_min=lam_min,
        lambda_max=lam_max,
        sigma_r=_sigma_r(X, inst.r),
        distance=_distance(X, inst.mstar),
        classification=cls,
    )


@dataclass(frozen=True)
class TheoremVerdict:
    criterion_satisfied: bool
    predicted_bound: float
    observed_lambda_min: float
    consistent: bool
    grad_norm: float
    distance: float
    sigma_r: float
    delta: float


def _verdict(criterion, bound, observed, gn, D, sr, delta, tol):
    consistent = (not criterion) or (observed <= bound + tol)
    return TheoremVerdict(
        criterion_satisfied=bool(criterion),
        predicted_bound=float(bound),
        observed_lambda_min=float(observed),
        consistent=bool(consistent),
        grad_norm=float(gn),
        distance=float(D),
        sigma_r=float(sr),
        delta=float(delta),
    )


def thm1_check(inst, X, delta, consistency_tol=1e-6):
    """Far-from-truth saddle criterion for the plain objective.

    Meaningful at first-order critical points; the verdict records the
    gradient norm so callers can discard non-critical inputs.
    """
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    X = _as_factor(inst, X)
    spec = LossSpec(l=2, lam=0.0)
    gn = float(np.linalg.norm(gradient(inst, X, spec)))
    observed = float(np.linalg.eigvalsh(hessian_matrix(inst, X, spec))[0])
    D = _distance(X, inst.mstar)
    sr = _sigma_r(X, inst.r)
    tr = float(np.trace(inst.mstar))
    if tr <= 0.0:
        # degenerate M* = 0: nothing to certify
        return _verdict(False, 0.0, observed, gn, D, sr, delta, consistency_tol)
    threshold = 2.0 * (1.0 + delta) / (1.0 - delta) * tr * sr**2
    criterion = D**2 > threshold + _BOUNDARY_SLACK
    bound = 2.0 * (1.0 + delta) * sr**2 - D**2 * (1.0 - delta) / tr
    return _verdict(criterion, bound, observed, gn, D, sr, delta, consistency_tol)


def thm4_check(inst, X, delta, spec, consistency_tol=1e-6):
    """Far-from-truth saddle criterion for the penalized objective.

    Reduces exactly to thm1_check when lam = 0 (and proportionally at
    l = 2, where f + lam f^2 = (1 + lam) f).
    """
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    X = _as_factor(inst, X)
    gn = float(np.linalg.norm(gradient(inst, X, spec)))
    observed = float(np.linalg.eigvalsh(hessian_matrix(inst, X, spec))[0])
    D = _distance(X, inst.mstar)
    sr = _sigma_r(X, inst.r)
    tr = float(np.trace(inst.mstar))
    if tr <= 0.0:
        return _verdict(False, 0.0, observed, gn, D, sr, delta, consistency_tol)
    l, lam = spec.l, spec.lam
    C = c_of_l_exact(l, inst.operator.m)
    amp = lam * D ** (l - 2)
    numer = (1.0 + delta) + amp * (l - 1) * (1.0 + delta) ** (l / 2)
    denom = (1.0 - delta) / 2.0 + amp * C * (1.0 - delta) ** (l / 2)
    criterion = D**2 >= tr * sr**2 * numer / denom - _BOUNDARY_SLACK
    bound = (
        2.0 * (1.0 + delta) * sr**2
        - D**2 * (1.0 - delta) / tr
        + amp * (
            2.0 * (1.0 + delta) ** (l / 2) * (l - 1) * sr**2
            - 2.0 * (1.0 - delta) ** (l / 2) * C * D**2 / tr
        )
    )
    return _verdict(criterion, bound, observed, gn, D, sr, delta, consistency_tol)


def _sign_fix(v):
    # deterministic eigenvector orientation: largest-magnitude entry positive
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def escape_direction(inst, X, spec=LossSpec()):
    """Rank-one descent direction u q^T at a first-order critical point.

    u is the eigenvector of the smallest eigenvalue of the penalized
    residual gradient on matrix space; q is the right-singular vector of X
    for its r-th singular value (lowest-index kernel vector when X is rank
    deficient).  When the saddle criterion holds, the Hessian quadratic
    form along the returned direction is strictly negative.
    """
    X = _as_factor(inst, X)
    G = h_lambda_gradient(inst, X @ X.T, spec)
    evals, evecs = np.linalg.eigh(G)
    u = _sign_fix(evecs[:, 0])
    _, _, Vt = np.linalg.svd(X)
    q = _sign_fix(Vt[inst.r - 1]) if Vt.shape[0] >= inst.r else np.eye(inst.r)[inst.r - 1]
    return np.outer(u, q)


def _rank_and_tail_eigenvalue(mstar):
    evals = np.linalg.eigvalsh(np.asarray(mstar, dtype=float))[::-1]
    if evals.size == 0 or evals[0] <= 0.0:
        return 0, 0.0
    tol = mstar.shape[0] * np.finfo(float).eps * evals[0]
    rstar = int(np.sum(evals > tol))
    return rstar, float(evals[rstar - 1])


def near_region_radius(mstar, delta, tau):
    """Frobenius radius tau * lambda_{r*}(M*) of the benign region near M*.

    Valid for tau in the open interval (0, 1 - delta^2).
    """
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if not (0.0 < tau < 1.0 - delta**2):
        raise ValueError(f"tau must lie in (0, 1 - delta^2) = (0, {1 - delta**2}), got {tau}")
    rstar, lam_tail = _rank_and_tail_eigenvalue(mstar)
    if rstar == 0:
        return 0.0
    return tau * lam_tail


def global_benign_condition(mstar, delta, r):
    """Smallness condition on M* under which no spurious point exists anywhere.

    Returns (holds, lhs, rhs) for
        ||M*||_F tr(M*) / lambda_{r*}(M*)  <=  sqrt(r)/(2 sqrt(2)) * sqrt((1-d)^5/(1+d)).
    """
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    mstar = np.asarray(mstar, dtype=float)
    rhs = np.sqrt(r) / (2.0 * np.sqrt(2.0)) * np.sqrt((1.0 - delta) ** 5 / (1.0 + delta))
    rstar, lam_tail = _rank_and_tail_eigenvalue(mstar)
    if rstar == 0:
        return True, 0.0, float(rhs)
    lhs = float(np.linalg.norm(mstar, "fro")) * float(np.trace(mstar)) / lam_tail
    return bool(lhs <= rhs), lhs, float(rhs)


def lifted_region_threshold(mstar, X, delta):
    """Amplification threshold (1+d)/(1-d) tr(M*) sigma_r^2 of the lifted approach.

    The plain far-region criterion threshold is exactly twice this value.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    r = X.shape[1]
    sr = _sigma_r(X, r)
    return (1.0 + delta) / (1.0 - delta) * float(np.trace(mstar)) * sr**2


@dataclass(frozen=True)
class SweepResult:
    s_values: np.ndarray
    t_values: np.ndarray
    lambda_min: np.ndarray     # (grid, grid), [i, j] at Xhat + s_i d1 + t_j d2
    d1: np.ndarray
    d2: np.ndarray


def landscape_sweep(inst, xhat, xstar, half_width, grid_points, spec=LossSpec(),
                    d2_seed=0):
    """Smallest Hessian eigenvalue on a 2-D slice through a critical point.

    The first direction points from the critical point to the ground-truth
    factor; the second is a seeded random direction made orthonormal to the
    first under the trace inner product.  grid_points must be odd so the
    center cell sits exactly at the critical point.
    """
    if grid_points < 1 or grid_points % 2 == 0:
        raise ValueError("grid_points must be odd so the center is the critical point")
    Xhat = _as_factor(inst, xhat)
    Xstar = _as_factor(inst, xstar)
    diff = Xstar - Xhat
    nrm = np.linalg.norm(diff)
    if nrm == 0.0:
        raise ValueError("critical point coincides with the ground-truth factor")
    d1 = diff / nrm
    rng = np.random.default_rng(d2_seed)
    while True:
        d2 = rng.standard_normal(Xhat.shape)
        d2 -= np.sum(d2 * d1) * d1
        nrm2 = np.linalg.norm(d2)
        if nrm2 > 1e-8:
            d2 /= nrm2
            break
    grid = np.linspace(-half_width, half_width, grid_points)
    vals = np.empty((grid_points, grid_points))
    for i, s in enumerate(grid):
        for j, t in enumerate(grid):
            H = hessian_matrix(inst, Xhat + s * d1 + t * d2, spec)
            vals[i, j] = np.linalg.eigvalsh(H)[0]
    return SweepResult(s_values=grid, t_values=grid.copy(), lambda_min=vals,
                       d1=d1, d2=d2)
