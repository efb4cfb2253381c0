"""Gradient descent and perturbed gradient descent on the factored objective.

Runs are deterministic in the config seed: the same seed produces the same
small random initialization and, for the perturbed variant, the same noise
injections.  A run stops once the Gram distance to the ground truth falls
below converge_tol, or at max_iters, or when the objective blows past 1e6
times its initial value (recorded as divergence).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .landscape import classify_point, SECOND_ORDER_POINT
from .losses import LossSpec, f_lambda_value, gradient, hessian_matrix

__all__ = [
    "PGDConfig",
    "Trajectory",
    "auto_step",
    "gradient_descent",
    "perturbed_gd",
    "find_spurious_minima",
    "distance_to_truth",
]

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class PGDConfig:
    """Step size and stopping/perturbation policy for (perturbed) descent.

    step = None selects step_fraction / ||H(X_0)||_2 where H is the Hessian
    at the initial point of the plain least-squares objective
    (step_hessian = "plain", the default) or of the penalized objective
    ("penalized"; slower near the optimum but stabler for strong
    penalties).  grad_trigger is the gradient norm below which the
    perturbed variant injects Gaussian noise of scale perturb_radius;
    setting it to 0 disables perturbation entirely.
    """

    step: float | None = None
    step_fraction: float = 0.05
    step_hessian: str = "plain"
    max_iters: int = 100_000
    grad_trigger: float = 1e-6
    perturb_radius: float = 1e-4
    init_scale: float = 1e-3
    seed: int = 0
    converge_tol: float = 1e-6
    record_every: int = 1

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.step_fraction <= 0:
            raise ValueError("step_fraction must be positive")
        if self.step_hessian not in ("plain", "penalized"):
            raise ValueError("step_hessian must be 'plain' or 'penalized'")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("grad_trigger", "perturb_radius", "init_scale", "converge_tol"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    """Recorded (iter, f, dist, grad_norm, perturbed) rows plus the final factor."""

    iters: np.ndarray
    f_values: np.ndarray
    distances: np.ndarray
    grad_norms: np.ndarray
    perturbed: np.ndarray
    final_x: np.ndarray
    termination: str                      # converged | max_iters | diverged
    step: float = 0.0
    perturb_events: int = 0

    @property
    def final_iter(self):
        return int(self.iters[-1]) if self.iters.size else 0


def distance_to_truth(X, mstar):
    """Frobenius distance ||X X^T - M*||_F."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] != mstar.shape[0]:
        raise ValueError(
            f"factor has {X.shape[0]} rows, ground truth is {mstar.shape[0]} x {mstar.shape[1]}"
        )
    return float(np.linalg.norm(X @ X.T - mstar, "fro"))


def auto_step(inst, X0, spec, fraction=0.05):
    """fraction / ||H(X_0)||_2, the default constant step."""
    H = hessian_matrix(inst, X0, spec)
    lead = float(np.abs(np.linalg.eigvalsh(H)).max())
    return fraction / max(lead, 1e-12)


def _descend(inst, spec, config, x0, perturb):
    rng = np.random.default_rng(config.seed)
    if x0 is None:
        X = config.init_scale * rng.standard_normal((inst.n, inst.r))
    else:
        X = np.array(x0, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
    if config.step is not None:
        step = config.step
    else:
        step_spec = spec if config.step_hessian == "penalized" else LossSpec(spec.l, 0.0)
        step = auto_step(inst, X, step_spec, fraction=config.step_fraction)

    op = inst.operator
    l, lam = spec.l, spec.lam

    def evaluate(X):
        # one measurement pass per iteration: value and gradient share it
        s = op.apply(X @ X.T) - inst.b
        f = 0.5 * float(s @ s)
        w = s
        if lam:
            f += lam / l * float(np.sum(s**l))
            w = s + lam * s ** (l - 1)
        G = op.adjoint(w)
        return f, (G + G.T) @ X

    rows = []
    f0, _ = evaluate(X)
    termination = "max_iters"
    n_perturb = 0
    it = 0
    while True:
        f, g = evaluate(X)
        dist = distance_to_truth(X, inst.mstar)
        gn = float(np.linalg.norm(g))
        fired = False
        if perturb and gn < config.grad_trigger and dist > config.converge_tol:
            X = X + config.perturb_radius * rng.standard_normal(X.shape)
            f, g = evaluate(X)
            gn = float(np.linalg.norm(g))
            fired = True
            n_perturb += 1
        if it % config.record_every == 0 or fired:
            rows.append((it, f, dist, gn, int(fired)))
        if dist <= config.converge_tol:
            termination = "converged"
            break
        if not np.isfinite(f) or f > DIVERGENCE_FACTOR * max(f0, 1.0):
            termination = "diverged"
            break
        if it >= config.max_iters:
            break
        X = X - step * g
        it += 1
    if rows[-1][0] != it:
        f, g = evaluate(X)
        rows.append((it, f, distance_to_truth(X, inst.mstar),
                     float(np.linalg.norm(g)), 0))
    rec = np.array(rows, dtype=float)
    return Trajectory(
        iters=rec[:, 0].astype(int),
        f_values=rec[:, 1],
        distances=rec[:, 2],
        grad_norms=rec[:, 3],
        perturbed=rec[:, 4].astype(int),
        final_x=X,
        termination=termination,
        step=step,
        perturb_events=n_perturb,
    )


def gradient_descent(inst, spec, config, x0=None):
    """Constant-step descent X <- X - step * grad f_lam^l(X).

    x0 overrides the seeded small random initialization when given.
    """
    return _descend(inst, spec, config, x0, perturb=False)


def perturbed_gd(inst, spec, config, x0=None):
    """Descent with Gaussian noise injected whenever the gradient stalls.

    Identical to gradient_descent when grad_trigger = 0 (no randomness is
    consumed beyond the initialization).
    """
    return _descend(inst, spec, config, x0, perturb=True)


def _newton_polish(inst, spec, X, max_steps=50):
    # drive the gradient to round-off at an isolated minimum
    n, r = X.shape
    for _ in range(max_steps):
        g = gradient(inst, X, spec)
        if np.linalg.norm(g) < 1e-12:
            break
        H = hessian_matrix(inst, X, spec)
        evals = np.linalg.eigvalsh(H)
        if evals[0] <= 1e-10:
            H = H + (abs(evals[0]) + 1e-8) * np.eye(n * r)
        try:
            d = np.linalg.solve(H, g.ravel())
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(d)):
            break
        X = X - d.reshape(n, r)
    return X


def find_spurious_minima(inst, spec, n_starts, config, grad_tol=1e-8,
                         eig_tol=1e-8, warm_starts=(), polish=True):
    """Multi-start hunt for second-order points away from the ground truth.

    Runs gradient descent from n_starts seeded initializations (seeds
    config.seed, config.seed + 1, ...), optionally polishes each endpoint
    with a few Newton steps, and keeps points that are numerically
    second-order (grad_norm <= grad_tol, lambda_min >= -eig_tol) and not
    the ground truth (distance > 10 * converge_tol).  Near-duplicates --
    within 1e-4 in (distance, lambda_min, lambda_max) -- collapse to the
    first representative found.  Returns (X, CriticalPointReport) pairs;
    an empty list is a legitimate outcome.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    found = []
    starts = [np.asarray(w, dtype=float) for w in warm_starts]
    starts += [None] * n_starts
    for i, x0 in enumerate(starts):
        # penalized-Hessian steps: hunts run at strong penalty weights where
        # plain-objective steps overshoot
        cfg = replace(config, seed=config.seed + i, step_hessian="penalized")
        traj = gradient_descent(inst, spec, cfg, x0=x0)
        if traj.termination == "diverged":
            continue
        X = traj.final_x
        if polish:
            X = _newton_polish(inst, spec, X)
        report = classify_point(inst, X, spec, grad_tol=grad_tol, eig_tol=eig_tol)
        if report.grad_norm > grad_tol:
            continue
        if report.lambda_min < -eig_tol:
            continue
        if report.distance <= 10.0 * config.converge_tol:
            continue
        key = (report.distance, report.lambda_min, report.lambda_max)
        dup = any(
            all(abs(a - b) < 1e-4 for a, b in zip(key, k)) for k, _, _ in found
        )
        if not dup:
            found.append((key, X, report))
    return [(X, report) for _, X, report in found]
