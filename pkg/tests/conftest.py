"""Shared builders and independent derivative oracles for the test suite."""

import numpy as np
import pytest

import bmsense as bm
from bmsense.losses import f_lambda_value


def grad_fd(inst, X, spec, h=None):
    """Five-point central differences of the penalized objective."""
    X = np.asarray(X, dtype=float)
    if h is None:
        h = 1e-5 * max(1.0, float(np.linalg.norm(X)))
    g = np.zeros_like(X)
    for i in range(X.shape[0]):
        for j in range(X.shape[1]):
            vals = []
            for k in (-2, -1, 1, 2):
                Xk = X.copy()
                Xk[i, j] += k * h
                vals.append(f_lambda_value(inst, Xk, spec))
            fm2, fm1, fp1, fp2 = vals
            g[i, j] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
    return g


def second_diff(inst, X, U, spec, h=None):
    """Central second difference of t -> f(X + t U) at t = 0."""
    if h is None:
        h = 1e-3 * max(1.0, float(np.linalg.norm(X)))
    fp = f_lambda_value(inst, X + h * U, spec)
    f0 = f_lambda_value(inst, X, spec)
    fm = f_lambda_value(inst, X - h * U, spec)
    return (fp - 2.0 * f0 + fm) / h**2


def random_instance(rng, n=None, r=None, kind=None):
    """Small random instance with ||X*||-scale spectrum, any operator kind."""
    n = n if n is not None else int(rng.integers(2, 9))
    rstar = int(rng.integers(1, min(3, n) + 1))
    if r is None:
        r = min(n, rstar + int(rng.integers(0, 2)))
    else:
        rstar = min(rstar, r)
    kind = kind if kind is not None else rng.choice(["gaussian", "epsilon_mask", "identity"])
    if kind == "gaussian":
        op = bm.make_gaussian_operator(n, int(rng.integers(n, 2 * n + 1)),
                                       int(rng.integers(0, 2**31)))
    elif kind == "epsilon_mask":
        op = bm.make_epsilon_operator(n, float(rng.uniform(0.1, 0.9)))
    else:
        op = bm.make_identity_operator(n)
    xstar = rng.standard_normal((n, rstar))
    xstar /= max(np.linalg.norm(xstar), 1e-9)
    return bm.make_instance(op, xstar, r)


def odd_ones_factor(n, scale=1.0):
    x = np.array([1.0 if (i + 1) % 2 == 1 else 0.0 for i in range(n)])
    return scale * x.reshape(-1, 1)


def scalar_instance(mstar=1.0):
    """n = 1 problem with the single sensing matrix [1]."""
    op = bm.make_explicit_operator(np.ones((1, 1, 1)))
    return bm.make_instance(op, np.array([[np.sqrt(mstar)]]), 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
