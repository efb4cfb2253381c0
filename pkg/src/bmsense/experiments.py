"""Experiment harness: config parsing, runners, and CSV/JSON emission.

Configs are JSON files with explicit keys (see README for the schema).
Runners return in-memory results and write delimited output with
17-significant-digit decimals so repeated runs with the same config and
seed are byte-identical.  Figures are rendered next to the data files by
the CLI layer; the numeric files remain the source of truth and carry no
judgment -- trend assertions live in the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .landscape import (
    classify_point,
    escape_direction,
    landscape_sweep,
    thm1_check,
    thm4_check,
)
from .losses import LossSpec, hessian_matrix, hessian_quadratic_form
from .operators import (
    estimate_rip_constant,
    make_epsilon_operator,
    make_gaussian_operator,
    make_identity_operator,
    make_instance,
    mask_two_sided_delta,
)
from .optimizer import PGDConfig, find_spurious_minima, perturbed_gd

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "build_operator",
    "build_ground_truth_factor",
    "build_instance",
    "run_table1",
    "run_ratio",
    "run_pgd_compare",
    "run_landscape",
    "run_theorem_audit",
    "run_rip_estimate",
    "generate_audit_points",
    "write_csv",
    "write_trajectory_csv",
    "write_matrix",
    "NOT_FOUND",
    "EXPERIMENTS",
]

NOT_FOUND = "NOT_FOUND"


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_trajectory_csv(path, traj):
    """Fixed per-iteration schema: iter,f,dist,grad_norm,perturbed."""
    rows = zip(traj.iters, traj.f_values, traj.distances, traj.grad_norms,
               traj.perturbed)
    write_csv(path, ["iter", "f", "dist", "grad_norm", "perturbed"], rows)


def write_matrix(path, X):
    with open(path, "w") as fh:
        for row in np.atleast_2d(X):
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    raw: dict

    def section(self, name, default=None):
        val = self.raw.get(name, default)
        if val is None:
            raise ConfigError(f"config is missing the '{name}' section")
        return val


VALID_EXPERIMENTS = ("table1", "ratio", "pgd_compare", "landscape",
                     "theorem_audit", "rip_estimate")


def load_config(path, seed_override=None):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    experiment = raw.get("experiment")
    if experiment not in VALID_EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {VALID_EXPERIMENTS}, got {experiment!r}"
        )
    seed = int(raw.get("seed", 0)) if seed_override is None else int(seed_override)
    return ExperimentConfig(experiment=experiment, seed=seed, raw=raw)


def build_operator(opcfg, default_seed=0):
    kind = opcfg.get("kind")
    n = opcfg.get("n")
    if kind is None or n is None:
        raise ConfigError("operator section needs 'kind' and 'n'")
    n = int(n)
    if kind == "epsilon_mask":
        if "epsilon" not in opcfg:
            raise ConfigError("epsilon_mask operator needs 'epsilon'")
        return make_epsilon_operator(n, float(opcfg["epsilon"]))
    if kind == "gaussian":
        if "m" not in opcfg:
            raise ConfigError("gaussian operator needs 'm'")
        return make_gaussian_operator(n, int(opcfg["m"]),
                                      int(opcfg.get("seed", default_seed)))
    if kind == "identity":
        return make_identity_operator(n)
    raise ConfigError(f"unknown operator kind {kind!r}")


def build_ground_truth_factor(gtcfg, n, default_seed=0):
    """Ground-truth factor X* (n x r*) from its config description.

    kinds: odd_ones (indicator of odd 1-based coordinates), ones,
    random_rank1 (seeded unit direction), diag (explicit diagonal values).
    `scale` multiplies the factor.
    """
    kind = gtcfg.get("kind", "odd_ones")
    scale = float(gtcfg.get("scale", 1.0))
    if kind == "odd_ones":
        x = np.array([1.0 if (i + 1) % 2 == 1 else 0.0 for i in range(n)])
        return scale * x.reshape(-1, 1)
    if kind == "ones":
        return scale * np.ones((n, 1))
    if kind == "random_rank1":
        rng = np.random.default_rng(int(gtcfg.get("seed", default_seed)))
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        return scale * x.reshape(-1, 1)
    if kind == "diag":
        vals = gtcfg.get("values")
        if vals is None:
            raise ConfigError("diag ground truth needs 'values'")
        vals = np.asarray(vals, dtype=float)
        if vals.size > n or np.any(vals < 0):
            raise ConfigError("diag values must be >= 0 and fit the side length")
        r = int(np.sum(vals > 0))
        X = np.zeros((n, max(r, 1)))
        col = 0
        for i, v in enumerate(vals):
            if v > 0:
                X[i, col] = math.sqrt(v)
                col += 1
        return scale * X
    raise ConfigError(f"unknown ground truth kind {kind!r}")


def build_instance(cfg, n_override=None):
    opcfg = dict(cfg.section("operator"))
    if n_override is not None:
        opcfg["n"] = n_override
    op = build_operator(opcfg, default_seed=cfg.seed)
    xstar = build_ground_truth_factor(cfg.raw.get("ground_truth", {}), op.n,
                                      default_seed=cfg.seed)
    r = int(cfg.raw.get("rank", xstar.shape[1]))
    return make_instance(op, xstar, r)


def _loss_section(cfg):
    loss = cfg.section("loss", {"l": 4, "lambdas": [0.0]})
    l = int(loss.get("l", 4))
    lambdas = [float(v) for v in loss.get("lambdas", [0.0])]
    if not lambdas:
        raise ConfigError("loss.lambdas must be non-empty")
    return l, lambdas


def _pgd_config(cfg, seed=None):
    o = dict(cfg.raw.get("optimizer", {}))
    return PGDConfig(
        step=o.get("step"),
        max_iters=int(o.get("max_iters", 100_000)),
        grad_trigger=float(o.get("grad_trigger", 1e-6)),
        perturb_radius=float(o.get("perturb_radius", 1e-4)),
        init_scale=float(o.get("init_scale", 1e-3)),
        seed=int(cfg.seed if seed is None else seed),
        converge_tol=float(o.get("converge_tol", 1e-6)),
        record_every=int(o.get("record_every", 1)),
    )


def _pad_factor(xstar, r):
    n, rstar = xstar.shape
    if r == rstar:
        return xstar
    return np.hstack([xstar, np.zeros((n, r - rstar))])


# ---------------------------------------------------------------------------
# table1 / ratio


def _hunt_config(cfg, inst):
    base = _pgd_config(cfg)
    hunt = cfg.raw.get("hunt", {})
    spread = float(hunt.get("init_spread", float(np.linalg.norm(inst.mstar) ** 0.5)))
    return replace(base, init_scale=spread, max_iters=int(hunt.get("max_iters", 4000))), \
        int(hunt.get("n_starts", 30))


def run_table1(cfg):
    """Spurious-minimum and ground-truth Hessian eigenvalues per (n, lambda).

    For each side length the spurious point is hunted once on the plain
    objective; for every penalty weight the hunt re-runs with the same
    seeded starts plus a warm start from that reference point, and the
    closest found point (in Gram distance to the reference) is reported,
    so one basin is tracked across the lambda column.  Rows where no
    spurious second-order point is found carry a NOT_FOUND marker.
    """
    l, lambdas = _loss_section(cfg)
    n_list = [int(v) for v in cfg.section("n_list")]
    header = ["n", "lambda", "lambda_min_spurious", "lambda_max_spurious",
              "lambda_min_truth", "lambda_max_truth"]
    rows = []
    for n in n_list:
        inst = build_instance(cfg, n_override=n)
        hunt_cfg, n_starts = _hunt_config(cfg, inst)
        xtruth = _pad_factor(
            build_ground_truth_factor(cfg.raw.get("ground_truth", {}), inst.n,
                                      default_seed=cfg.seed), inst.r)
        reference = None
        base = find_spurious_minima(inst, LossSpec(l=l, lam=0.0), n_starts, hunt_cfg)
        if base:
            reference = min(base, key=lambda pr: pr[1].distance)[0]
        for lam in lambdas:
            spec = LossSpec(l=l, lam=lam)
            truth_evals = np.linalg.eigvalsh(hessian_matrix(inst, xtruth, spec))
            warm = (reference,) if reference is not None else ()
            found = find_spurious_minima(inst, spec, n_starts, hunt_cfg,
                                         warm_starts=warm)
            if not found:
                rows.append((n, lam, NOT_FOUND, NOT_FOUND,
                             truth_evals[0], truth_evals[-1]))
                continue
            if reference is not None:
                ref_gram = reference @ reference.T
                X, rep = min(
                    found,
                    key=lambda pr: np.linalg.norm(pr[0] @ pr[0].T - ref_gram, "fro"),
                )
            else:
                X, rep = min(found, key=lambda pr: pr[1].distance)
            rows.append((n, lam, rep.lambda_min, rep.lambda_max,
                         truth_evals[0], truth_evals[-1]))
    return header, rows


def run_ratio(cfg):
    """Conditioning ratio lambda_max/lambda_min at the spurious point."""
    header, rows = run_table1(cfg)
    out = []
    skipped = []
    for n, lam, lmin, lmax, _, _ in rows:
        if lmin == NOT_FOUND:
            skipped.append((n, lam))
            continue
        out.append((n, lam, lmax / lmin))
    return ["n", "lambda", "ratio"], out, skipped


# ---------------------------------------------------------------------------
# pgd_compare


def run_pgd_compare(cfg):
    """Perturbed-descent trajectories for each penalty weight over many seeds.

    Returns (curve_rows, summary_rows): curves carry every recorded
    iteration of every run; the summary gives iterations-to-convergence
    with max_iters as the sentinel for runs that never reached the
    distance tolerance.
    """
    l, lambdas = _loss_section(cfg)
    n_seeds = int(cfg.raw.get("n_seeds", 10))
    inst_seeds = [cfg.seed + i for i in range(n_seeds)]
    curve_rows = []
    summary_rows = []
    for i, s in enumerate(inst_seeds):
        opcfg = dict(cfg.section("operator"))
        opcfg["seed"] = int(opcfg.get("seed", 0)) + i
        op = build_operator(opcfg, default_seed=s)
        gtcfg = dict(cfg.raw.get("ground_truth", {}))
        gtcfg["seed"] = int(gtcfg.get("seed", 0)) + i
        xstar = build_ground_truth_factor(gtcfg, op.n, default_seed=s)
        inst = make_instance(op, xstar, int(cfg.raw.get("rank", xstar.shape[1])))
        for lam in lambdas:
            spec = LossSpec(l=l, lam=lam)
            traj = perturbed_gd(inst, spec, _pgd_config(cfg, seed=s))
            for it, f, d, g, p in zip(traj.iters, traj.f_values, traj.distances,
                                      traj.grad_norms, traj.perturbed):
                curve_rows.append((s, lam, it, f, d, g, p))
            converged = traj.termination == "converged"
            iters = traj.final_iter if converged else _pgd_config(cfg).max_iters
            summary_rows.append((s, lam, iters, int(converged)))
    return curve_rows, summary_rows


# ---------------------------------------------------------------------------
# landscape


def _locate_center(cfg, inst, spec):
    mode = cfg.raw.get("center", "zero")
    if mode == "zero":
        return np.zeros((inst.n, inst.r))
    if mode == "spurious":
        hunt_cfg, n_starts = _hunt_config(cfg, inst)
        found = find_spurious_minima(inst, spec, n_starts, hunt_cfg)
        if not found:
            raise ConfigError("no spurious center found; use center='zero'")
        return min(found, key=lambda pr: pr[1].distance)[0]
    raise ConfigError(f"unknown center mode {mode!r}")


def run_landscape(cfg):
    """One lambda_min grid per penalty weight on a fixed 2-D slice."""
    l, lambdas = _loss_section(cfg)
    inst = build_instance(cfg)
    xtruth = _pad_factor(
        build_ground_truth_factor(cfg.raw.get("ground_truth", {}), inst.n,
                                  default_seed=cfg.seed), inst.r)
    half_width = float(cfg.raw.get("half_width", 2.0))
    grid_points = int(cfg.raw.get("grid_points", 11))
    center = _locate_center(cfg, inst, LossSpec(l=l, lam=float(lambdas[0])))
    grids = []
    for lam in lambdas:
        sweep = landscape_sweep(inst, center, xtruth, half_width, grid_points,
                                LossSpec(l=l, lam=lam),
                                d2_seed=int(cfg.raw.get("d2_seed", 0)))
        grids.append((lam, sweep))
    return grids


# ---------------------------------------------------------------------------
# theorem_audit


@dataclass(frozen=True)
class AuditPoint:
    """A first-order critical point paired with a certified isometry constant.

    `universal` marks points critical for every penalty spec (zero factors
    and diagonal-embedding saddles); hunted minima are critical only for
    the spec they were found under, carried in found_spec.
    """

    point_id: str
    inst: object
    X: np.ndarray
    delta: float
    universal: bool
    found_spec: LossSpec | None = None


def _identity_audit_instances():
    spectra = {
        "sep": [10.0, 0.1],
        "close": [2.0, 1.0],
        "tri": [1.0, 0.5, 0.25],
        "wide": [3.0, 1.5, 0.2, 0.05],
    }
    out = []
    for name, vals in spectra.items():
        n = len(vals)
        op = make_identity_operator(n)
        X = np.zeros((n, min(2, n)))
        for c, v in enumerate(vals[: X.shape[1]]):
            X[c, c] = math.sqrt(v)
        inst = make_instance(op, X, X.shape[1])
        out.append((f"identity-{name}", inst, np.array(vals)))
    return out


def _mask_audit_instances():
    cases = [("mask4", 4, 0.3, [2.0, 1.0, 0.5, 0.25]),
             ("mask5", 5, 0.3, [3.0, 1.0, 0.4, 0.2, 0.1]),
             ("mask6", 6, 0.1, [2.5, 1.5, 0.8, 0.4, 0.2, 0.1])]
    out = []
    for name, n, eps, vals in cases:
        op = make_epsilon_operator(n, eps)
        X = np.zeros((n, 2))
        X[0, 0] = math.sqrt(vals[0])
        X[1, 1] = math.sqrt(vals[1])
        inst = make_instance(op, X, 2)
        # embeddings re-use the full diagonal below, so pass all values
        out.append((name, inst, np.array(vals[:2]), mask_two_sided_delta(n, eps)))
    return out


def _diag_embeddings(inst, diag_vals, r):
    """All factors embedding subsets of <= r planted diagonal directions."""
    n = inst.n
    idx = [i for i, v in enumerate(diag_vals) if v > 0]
    points = [np.zeros((n, r))]
    subsets = [(i,) for i in idx]
    if r >= 2:
        subsets += [(i, j) for k, i in enumerate(idx) for j in idx[k + 1:]]
    for sub in subsets:
        X = np.zeros((n, r))
        for c, i in enumerate(sub):
            X[i, c] = math.sqrt(diag_vals[i])
        points.append(X)
    return points


def generate_audit_points(cfg=None, include_hunted=True, seed=0):
    """Critical points with certified deltas for the theorem audit.

    Universal points: the zero factor and diagonal-subset embeddings under
    the exact-isometry operator (delta 0) and under epsilon masks with
    diagonal ground truth (delta (1-eps^2)/(1+eps^2), exact for the mask).
    Hunted points: spurious second-order points of the odd-ones mask
    family, found by multi-start descent per penalty spec.
    """
    points = []
    for name, inst, diag_vals in _identity_audit_instances():
        mstar_diag = np.zeros(inst.n)
        mstar_diag[: diag_vals.size] = diag_vals
        for k, X in enumerate(_diag_embeddings(inst, mstar_diag, inst.r)):
            points.append(AuditPoint(f"{name}/p{k}", inst, X, 0.0, True))
    for name, inst, planted, delta in _mask_audit_instances():
        mstar_diag = np.diag(inst.mstar)
        for k, X in enumerate(_diag_embeddings(inst, mstar_diag, inst.r)):
            points.append(AuditPoint(f"{name}/p{k}", inst, X, delta, True))
    hunted_specs = [LossSpec(2, 0.0), LossSpec(2, 0.5), LossSpec(4, 0.0),
                    LossSpec(4, 0.5), LossSpec(4, 5.0)]
    for n in (3, 5, 7):
        op = make_epsilon_operator(n, 0.3)
        xstar = np.array([1.0 if (i + 1) % 2 == 1 else 0.0 for i in range(n)])
        inst = make_instance(op, xstar, 1)
        delta = mask_two_sided_delta(n, 0.3)
        points.append(AuditPoint(f"oddmask{n}/zero", inst,
                                 np.zeros((n, 1)), delta, True))
        if not include_hunted:
            continue
        hunt_cfg = PGDConfig(init_scale=float(np.linalg.norm(xstar)),
                             max_iters=4000, seed=seed)
        for spec in hunted_specs:
            for k, (X, _) in enumerate(find_spurious_minima(inst, spec, 12, hunt_cfg)):
                points.append(AuditPoint(
                    f"oddmask{n}/l{spec.l}lam{spec.lam:g}/m{k}",
                    inst, X, delta, False, found_spec=spec,
                ))
    return points


def run_theorem_audit(cfg):
    """Verdicts for both saddle checkers over the generated audit points.

    Universal points are audited under every (l, lambda) combination in
    the config; hunted minima only under the spec they are critical for.
    Returns (header, rows, all_consistent).
    """
    l_list = [int(v) for v in cfg.raw.get("l_list", [2, 4])]
    lam_list = [float(v) for v in cfg.raw.get("lambda_list", [0.0, 0.5, 5.0])]
    points = generate_audit_points(cfg, seed=cfg.seed)
    header = ["point_id", "grad_norm", "D", "sigma_r", "criterion", "bound",
              "lambda_min", "consistent"]
    rows = []
    all_ok = True

    def emit(pid, v):
        nonlocal all_ok
        rows.append((pid, v.grad_norm, v.distance, v.sigma_r,
                     int(v.criterion_satisfied), v.predicted_bound,
                     v.observed_lambda_min, int(v.consistent)))
        all_ok = all_ok and v.consistent

    for p in points:
        if p.universal:
            emit(f"{p.point_id}:thm1", thm1_check(p.inst, p.X, p.delta))
            for l in l_list:
                for lam in lam_list:
                    spec = LossSpec(l=l, lam=lam)
                    emit(f"{p.point_id}:thm4:l{l}:lam{lam:g}",
                         thm4_check(p.inst, p.X, p.delta, spec))
        else:
            spec = p.found_spec
            if spec.lam == 0.0:
                emit(f"{p.point_id}:thm1", thm1_check(p.inst, p.X, p.delta))
            emit(f"{p.point_id}:thm4:l{spec.l}:lam{spec.lam:g}",
                 thm4_check(p.inst, p.X, p.delta, spec))
    return header, rows, all_ok


# ---------------------------------------------------------------------------
# rip_estimate


def run_rip_estimate(cfg):
    op = build_operator(cfg.section("operator"), default_seed=cfg.seed)
    p = int(cfg.raw.get("p", 2))
    samples = int(cfg.raw.get("samples", 10_000))
    delta_hat, scale_hat = estimate_rip_constant(op, p, samples, cfg.seed)
    result = {
        "delta_hat": delta_hat,
        "scale_hat": scale_hat,
        "claimed_delta": op.claimed_delta,
    }
    if op.kind == "epsilon_mask":
        result["two_sided_delta"] = mask_two_sided_delta(op.n, op.epsilon)
    return result


EXPERIMENTS = {
    "table1": run_table1,
    "ratio": run_ratio,
    "pgd_compare": run_pgd_compare,
    "landscape": run_landscape,
    "theorem_audit": run_theorem_audit,
    "rip_estimate": run_rip_estimate,
}
