"""Objective values, derivatives, and algebraic identities.

For a factor X (n x r) with Gram matrix M = X X^T and residual vector
s = A(M) - b the objectives are

    f(X)        = 1/2 ||s||_2^2
    f^l(X)      = 1/l sum_i s_i^l          (even penalty order l >= 2)
    f_lam^l(X)  = f(X) + lam * f^l(X)

and the lifted counterparts on matrix space

    h(M)   = 1/2 ||A(M) - b||_2^2
    h^l(M) = 1/l sum_i (A(M) - b)_i^l.

All derivatives here are the true derivatives of these functions, so
finite-difference checks close at machine-level accuracy.  In particular
the gradient of f carries the factor 2 produced by differentiating the
Gram parameterization:

    grad f_lam^l(X) = 2 * (sum_i (s_i + lam s_i^(l-1)) A_i) X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import ProblemInstance

__all__ = [
    "LossSpec",
    "residual",
    "f_value",
    "fl_value",
    "f_lambda_value",
    "gradient",
    "hessian_quadratic_form",
    "hessian_matvec",
    "hessian_matrix",
    "h_value",
    "h_gradient",
    "h_lambda_gradient",
    "h_directional_derivative",
    "taylor_remainder_coefficient",
    "taylor_identity_residual",
    "scalar_demo",
    "c_of_l",
    "c_of_l_exact",
]

HESSIAN_SIZE_LIMIT = 2000


def _check_order(l):
    if l < 2 or l % 2 != 0:
        raise ValueError(f"penalty order must be an even integer >= 2, got {l}")


@dataclass(frozen=True)
class LossSpec:
    """Penalty order l (even, >= 2) and coefficient lam >= 0.

    lam = 0 reduces f_lam^l to f for every l.
    """

    l: int = 2
    lam: float = 0.0

    def __post_init__(self):
        _check_order(self.l)
        if self.lam < 0:
            raise ValueError(f"penalty coefficient must be >= 0, got {self.lam}")


def _check_factor(inst, X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape != (inst.n, inst.r):
        raise ValueError(
            f"{name} has shape {X.shape}, expected ({inst.n}, {inst.r})"
        )
    return X


def residual(inst, X):
    """Measurement residual A(X X^T) - b."""
    X = _check_factor(inst, X)
    return inst.operator.apply(X @ X.T) - inst.b


def f_value(inst, X):
    """Least-squares objective 1/2 ||A(X X^T) - b||^2."""
    s = residual(inst, X)
    return 0.5 * float(s @ s)


def fl_value(inst, X, l):
    """High-order penalty 1/l * sum_i residual_i^l for even l."""
    _check_order(l)
    s = residual(inst, X)
    return float(np.sum(s**l)) / l


def f_lambda_value(inst, X, spec):
    """Penalized objective f(X) + lam * f^l(X)."""
    if spec.lam == 0.0:
        return f_value(inst, X)
    return f_value(inst, X) + spec.lam * fl_value(inst, X, spec.l)


def _weighted_adjoint(inst, s, spec):
    # sum_i (s_i + lam s_i^(l-1)) A_i
    w = s if spec.lam == 0.0 else s + spec.lam * s ** (spec.l - 1)
    return inst.operator.adjoint(w)


def gradient(inst, X, spec):
    """Gradient of f_lam^l at X: 2 * (sum_i (s_i + lam s_i^(l-1)) A_i) X."""
    X = _check_factor(inst, X)
    s = residual(inst, X)
    G = _weighted_adjoint(inst, s, spec)
    return 2.0 * (0.5 * (G + G.T)) @ X


def hessian_quadratic_form(inst, X, U, spec):
    """Second directional derivative of f_lam^l at X along U.

    Equals sum_i (1 + lam (l-1) s_i^(l-2)) <A_i, U X^T + X U^T>^2
         + 2 <sum_i (s_i + lam s_i^(l-1)) A_i, U U^T>.
    """
    X = _check_factor(inst, X)
    U = _check_factor(inst, U, name="U")
    s = residual(inst, X)
    a = inst.operator.apply(U @ X.T + X @ U.T)
    c = np.ones_like(s) if spec.lam == 0.0 else 1.0 + spec.lam * (spec.l - 1) * s ** (spec.l - 2)
    G = _weighted_adjoint(inst, s, spec)
    return float(c @ (a * a)) + 2.0 * float(np.sum(G * (U @ U.T)))


def hessian_matvec(inst, X, spec, U):
    """Action of the Hessian bilinear form: U -> H[U] with <V, H[U]> = H[V, U]."""
    X = _check_factor(inst, X)
    U = _check_factor(inst, U, name="U")
    s = residual(inst, X)
    c = np.ones_like(s) if spec.lam == 0.0 else 1.0 + spec.lam * (spec.l - 1) * s ** (spec.l - 2)
    G = _weighted_adjoint(inst, s, spec)
    a = inst.operator.apply(U @ X.T + X @ U.T)
    adj = inst.operator.adjoint(c * a)
    return (adj + adj.T) @ X + (G + G.T) @ U


def hessian_matrix(inst, X, spec):
    """Dense nr x nr Hessian of f_lam^l at X (guarded at nr <= 2000).

    Columns are exact Hessian-vector products against the coordinate basis
    of n x r matrices (row-major vec); the result is symmetrized to remove
    round-off asymmetry.  vec(U)^T H vec(U) reproduces the quadratic form.
    """
    X = _check_factor(inst, X)
    n, r = X.shape
    dim = n * r
    if dim > HESSIAN_SIZE_LIMIT:
        raise ValueError(
            f"dense Hessian of size {dim} exceeds the {HESSIAN_SIZE_LIMIT} guard; "
            "probe hessian_quadratic_form instead"
        )
    H = np.empty((dim, dim))
    E = np.zeros((n, r))
    for k in range(dim):
        E[k // r, k % r] = 1.0
        H[:, k] = hessian_matvec(inst, X, spec, E).ravel()
        E[k // r, k % r] = 0.0
    return 0.5 * (H + H.T)


def h_value(inst, M, l=2):
    """Lifted objective h^l(M) = 1/l sum_i (A(M) - b)_i^l (l = 2 gives h)."""
    _check_order(l)
    s = inst.operator.apply(M) - inst.b
    return float(np.sum(s**l)) / l


def h_gradient(inst, M, l):
    """Gradient of h^l: sum_i (A(M) - b)_i^(l-1) A_i, symmetric."""
    _check_order(l)
    s = inst.operator.apply(M) - inst.b
    G = inst.operator.adjoint(s ** (l - 1))
    return 0.5 * (G + G.T)


def h_lambda_gradient(inst, M, spec):
    """Gradient of h + lam h^l; at a critical X it annihilates the factor."""
    G = h_gradient(inst, M, 2)
    if spec.lam:
        G = G + spec.lam * h_gradient(inst, M, spec.l)
    return G


def h_directional_derivative(inst, M, N, p, l):
    """p-th directional derivative of h^l at M along the symmetric matrix N.

    Equals (l-1)!/(l-p)! * sum_i (A(M) - b)_i^(l-p) <A_i, N>^p for
    1 <= p <= l.
    """
    _check_order(l)
    if not (1 <= p <= l):
        raise ValueError(f"derivative order p must lie in [1, l], got {p}")
    s = inst.operator.apply(M) - inst.b
    aN = inst.operator.apply(N)
    coeff = math.factorial(l - 1) / math.factorial(l - p)
    return coeff * float(np.sum(s ** (l - p) * aN**p))


def taylor_remainder_coefficient(l):
    """Coefficient closing the expansion of h^l from M to the exact fit.

    Summing the degree >= 2 terms of the finite Taylor expansion of h^l
    along Delta = M* - M gives exactly ((l-1)/l) * sum_i <A_i, Delta>^l for
    even l: the p-th term carries sign (-1)^p, and
    sum_{p=2..l} (-1)^p C(l,p)/l = (l-1)/l.  At l = 2 this is the familiar
    1/2 of the quadratic expansion.
    """
    _check_order(l)
    return (l - 1) / l


def taylor_identity_residual(inst, M, l):
    """Defect of the exact finite expansion of h^l around M, evaluated at M*.

    Returns h^l(M*) - [h^l(M) + <grad h^l(M), M* - M> + c_l * ||A(M - M*)||_l^l]
    with c_l = taylor_remainder_coefficient(l).  The identity is exact, so
    the result is zero up to round-off for every symmetric M.
    """
    _check_order(l)
    M = np.asarray(M, dtype=float)
    target = h_value(inst, inst.mstar, l)
    base = h_value(inst, M, l)
    G = h_gradient(inst, M, l)
    linear = float(np.sum(G * (inst.mstar - M)))
    s = inst.operator.apply(M - inst.mstar)
    tail = taylor_remainder_coefficient(l) * float(np.sum(s**l))
    return target - (base + linear + tail)


def scalar_demo(x, a, l):
    """One-dimensional analogue g(x) = (1/l)(x^2 - a)^l with g', g''."""
    _check_order(l)
    d = x * x - a
    g = d**l / l
    gp = 2.0 * x * d ** (l - 1)
    gpp = 2.0 * d ** (l - 2) * ((l - 1) * 2.0 * x * x + d)
    return g, gp, gpp


def c_of_l(l, m):
    """Penalty constant m^((2-l)/2) * ((2^l - 1)/l - 1).

    This is the printed form of the constant appearing in the high-order
    saddle criterion; it keeps the unsigned sum of the Taylor weights.
    C(2) = 1/2 and C(4, m=1) = 11/4.
    """
    _check_order(l)
    if m < 1:
        raise ValueError("m must be >= 1")
    return m ** ((2 - l) / 2) * ((2**l - 1) / l - 1)


def c_of_l_exact(l, m):
    """Penalty constant with the sign-correct Taylor weight (l-1)/l.

    The signed sum of the high-order Taylor terms is ((l-1)/l) times the
    l-norm of the measured difference (see taylor_remainder_coefficient),
    which makes m^((2-l)/2) * (l-1)/l the constant for which the saddle
    criterion and eigenvalue bound are actually valid.  Coincides with
    c_of_l at l = 2.
    """
    _check_order(l)
    if m < 1:
        raise ValueError("m must be >= 1")
    return m ** ((2 - l) / 2) * (l - 1) / l
