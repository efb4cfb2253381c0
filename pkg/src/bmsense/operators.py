"""Sensing operators for symmetric matrix recovery.

A sensing operator maps a symmetric n x n matrix M to a measurement vector
A(M) = (<A_1, M>, ..., <A_m, M>).  Two storage forms are supported:

* an explicit stack of m sensing matrices, and
* an entrywise "epsilon mask" that keeps entries on an index set Omega and
  scales the remaining entries by epsilon, realized as m = n^2 conceptual
  rank-one measurements flattened in row-major order.

The mask keeps Omega = {(i,i)} U {(i,2k)} U {(2k,i)} for i in 1..n and
k in 1..floor(n/2) (1-based), i.e. the diagonal plus every even-indexed
row and column.  The unobserved (epsilon-scaled) entries are exactly the
off-diagonal pairs with both indices odd.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SensingOperator",
    "ProblemInstance",
    "make_explicit_operator",
    "make_epsilon_operator",
    "make_gaussian_operator",
    "make_identity_operator",
    "make_instance",
    "mask_claimed_delta",
    "mask_two_sided_delta",
    "estimate_rip_constant",
    "write_operator",
    "read_operator",
]

_SYM_TOL = 1e-12


def _check_symmetric(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > _SYM_TOL * scale:
        raise ValueError(f"{name} must be symmetric")
    return M


def _mask_weights(n, epsilon):
    """Entrywise weights of the epsilon mask: 1 on Omega, epsilon elsewhere."""
    W = np.full((n, n), epsilon)
    even = (np.arange(1, n + 1) % 2 == 0)
    W[even, :] = 1.0
    W[:, even] = 1.0
    np.fill_diagonal(W, 1.0)
    return W


@dataclass(frozen=True)
class SensingOperator:
    """Linear measurement map on symmetric n x n matrices.

    kind is one of "explicit", "gaussian" (explicit matrices built from a
    seed) or "epsilon_mask".  For the mask form `matrices` is None and the
    weights grid carries the entrywise scaling; m equals n^2 with row-major
    flattening.  `claimed_delta` is informational metadata (a restricted
    isometry constant attributed to the operator by construction); it is
    never computed from the data and never used implicitly.
    """

    kind: str
    n: int
    m: int
    matrices: np.ndarray | None = None       # (m, n, n) for explicit forms
    epsilon: float | None = None
    seed: int | None = None
    claimed_delta: float | None = None
    weights: np.ndarray | None = field(default=None, repr=False)

    def apply(self, M):
        """Measure a symmetric matrix: component i equals <A_i, M>.

        The mask form returns the entrywise-scaled matrix flattened
        row-major.
        """
        M = _check_symmetric(M)
        if M.shape[0] != self.n:
            raise ValueError(f"matrix side {M.shape[0]} does not match operator n={self.n}")
        if self.kind == "epsilon_mask":
            return (self.weights * M).ravel()
        return np.tensordot(self.matrices, M, axes=([1, 2], [0, 1]))

    def adjoint(self, y):
        """Transpose map: sum_i y_i A_i, symmetric for symmetric inputs."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise ValueError(f"measurement vector has length {y.size}, expected m={self.m}")
        if self.kind == "epsilon_mask":
            return self.weights * y.reshape(self.n, self.n)
        return np.tensordot(y, self.matrices, axes=(0, 0))


def make_explicit_operator(matrices):
    """Wrap a stack of symmetric sensing matrices as an operator."""
    A = np.asarray(matrices, dtype=float)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected an (m, n, n) stack, got shape {A.shape}")
    for i in range(A.shape[0]):
        _check_symmetric(A[i], name=f"A_{i}")
    return SensingOperator(kind="explicit", n=A.shape[1], m=A.shape[0], matrices=A)


def mask_claimed_delta(epsilon):
    """Restricted isometry constant attributed to the mask by construction."""
    return (1.0 - epsilon) / (1.0 + epsilon)


def mask_two_sided_delta(n, epsilon):
    """Exact best two-sided isometry constant of the mask at rank >= 2.

    The measured energy of a unit-Frobenius symmetric matrix lies in
    [epsilon^2, 1]; both extremes are attained by rank <= 2 matrices
    whenever an off-Omega entry exists (n >= 3), so the optimally rescaled
    two-sided constant is (1 - eps^2) / (1 + eps^2).  For n <= 2 the mask
    observes everything and the constant is 0.
    """
    if n <= 2:
        return 0.0
    return (1.0 - epsilon**2) / (1.0 + epsilon**2)


def make_epsilon_operator(n, epsilon):
    """Entrywise mask operator: identity on Omega, epsilon-scaling elsewhere."""
    if n < 2:
        raise ValueError("mask operator needs n >= 2")
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return SensingOperator(
        kind="epsilon_mask",
        n=n,
        m=n * n,
        epsilon=float(epsilon),
        claimed_delta=mask_claimed_delta(epsilon),
        weights=_mask_weights(n, float(epsilon)),
    )


def make_gaussian_operator(n, m, seed):
    """m random sensing matrices with i.i.d. Gaussian entries.

    Each matrix is symmetrized as (G + G^T)/2 and scaled by 1/sqrt(m) so
    that ||A(M)||^2 concentrates near ||M||_F^2.  Deterministic in seed.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, n, n))
    A = 0.5 * (G + np.transpose(G, (0, 2, 1))) / np.sqrt(m)
    return SensingOperator(kind="gaussian", n=n, m=m, matrices=A, seed=int(seed))


def make_identity_operator(n):
    """Exact isometry on symmetric matrices via the orthonormal symmetric basis.

    Uses the m = n(n+1)/2 matrices {e_i e_i^T} U {(e_i e_j^T + e_j e_i^T)/sqrt(2)},
    so ||A(M)||^2 = ||M||_F^2 exactly and every restricted isometry constant
    on symmetric matrices is 0.
    """
    mats = []
    for i in range(n):
        E = np.zeros((n, n))
        E[i, i] = 1.0
        mats.append(E)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0 / np.sqrt(2.0)
            mats.append(E)
    op = SensingOperator(
        kind="explicit", n=n, m=n * (n + 1) // 2, matrices=np.array(mats),
        claimed_delta=0.0,
    )
    return op


@dataclass(frozen=True)
class ProblemInstance:
    """A sensing operator together with its planted ground truth.

    mstar is symmetric PSD with rank rstar, b = A(mstar) exactly by
    construction, and r >= rstar is the search rank for the factor X.
    """

    operator: SensingOperator
    mstar: np.ndarray
    b: np.ndarray
    rstar: int
    r: int

    @property
    def n(self):
        return self.operator.n


def make_instance(op, xstar, r):
    """Build an instance with ground truth M* = X* X*^T from an n x r* factor."""
    xstar = np.asarray(xstar, dtype=float)
    if xstar.ndim == 1:
        xstar = xstar.reshape(-1, 1)
    if xstar.shape[0] != op.n:
        raise ValueError(f"factor has {xstar.shape[0]} rows, operator expects n={op.n}")
    mstar = xstar @ xstar.T
    svals = np.linalg.svd(xstar, compute_uv=False)
    tol = max(xstar.shape) * np.finfo(float).eps * (svals[0] if svals.size else 0.0)
    rstar = int(np.sum(svals > tol))
    if r < rstar:
        raise ValueError(f"search rank r={r} is below the true rank r*={rstar}")
    b = op.apply(mstar)
    return ProblemInstance(operator=op, mstar=mstar, b=b, rstar=rstar, r=int(r))


def estimate_rip_constant(op, p, samples, seed):
    """Empirical lower bound on the best-rescaled isometry constant at rank p.

    Draws `samples` random symmetric matrices of rank <= p as Y Y^T - Z Z^T
    with Gaussian factors (ceil(p/2) and floor(p/2) columns), evaluates the
    energy ratios rho_i = ||A(M_i)||^2 / ||M_i||_F^2, and returns

        delta_hat = (rho_max - rho_min) / (rho_max + rho_min),
        scale_hat = 2 / (rho_max + rho_min),

    i.e. the constant of the two-sided bound after the optimal rescaling of
    the sampled ratios.  delta_hat never exceeds the true constant; it
    approaches it as the samples cover the extremal directions.
    """
    if p < 1 or p > op.n:
        raise ValueError(f"rank p must lie in [1, n], got {p}")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    k_pos = (p + 1) // 2
    k_neg = p // 2
    rhos = np.empty(samples)
    for i in range(samples):
        Y = rng.standard_normal((op.n, k_pos))
        M = Y @ Y.T
        if k_neg:
            Z = rng.standard_normal((op.n, k_neg))
            M -= Z @ Z.T
        M /= np.linalg.norm(M, "fro")
        rhos[i] = np.sum(op.apply(M) ** 2)
    hi, lo = float(rhos.max()), float(rhos.min())
    if hi - lo <= 1e-15 * hi:
        return 0.0, 1.0 / hi
    return (hi - lo) / (hi + lo), 2.0 / (hi + lo)


def _fmt(x):
    return f"{x:.17g}"


def write_operator(op, path):
    """Serialize an operator to a line-oriented text file.

    Gaussian operators store (n, m, seed) and are rebuilt deterministically;
    masks store (n, epsilon); explicit operators store every matrix entry
    row-major with 17 significant digits.
    """
    lines = [f"kind {op.kind}", f"n {op.n}", f"m {op.m}"]
    if op.kind == "epsilon_mask":
        lines.append(f"epsilon {_fmt(op.epsilon)}")
    elif op.kind == "gaussian":
        lines.append(f"seed {op.seed}")
    else:
        lines.append("entries")
        for i in range(op.m):
            for row in op.matrices[i]:
                lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_operator(path):
    """Inverse of write_operator."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = {}
    entry_start = None
    for idx, ln in enumerate(lines):
        if ln == "entries":
            entry_start = idx + 1
            break
        key, val = ln.split(maxsplit=1)
        header[key] = val
    kind = header["kind"]
    n, m = int(header["n"]), int(header["m"])
    if kind == "epsilon_mask":
        return make_epsilon_operator(n, float(header["epsilon"]))
    if kind == "gaussian":
        op = make_gaussian_operator(n, m, int(header["seed"]))
        return op
    vals = [float(v) for ln in lines[entry_start:] for v in ln.split()]
    A = np.array(vals).reshape(m, n, n)
    return make_explicit_operator(A)
