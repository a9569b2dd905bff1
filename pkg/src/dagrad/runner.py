"""Deterministic experiment runner: seeded runs, CSV records, grid sweeps.

Each run owns its state and PRNG (seeded Philox), so seeds may execute in
parallel without changing any emitted value.  Records are written as tidy
CSV with a fixed schema ``k,loss,subopt,grad_inf,gamma,lambda,seed``; one
row per recorded step per seed, followed by per-k aggregate rows (mean and
two standard errors) with "mean"/"se2" in the seed column.  A run halts at
the first non-finite iterate or once suboptimality exceeds 1e6 times its
initial value; what was recorded up to that point is kept and flagged.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .config import (
    RunConfig,
    build_gamma_schedule,
    build_problem,
    build_x0,
    parse_momentum,
    rescale_gamma,
)
from .numerics import grad_inf_norm, make_rng
from .optimizers import (
    AdaGradState,
    AdamState,
    ConfigError,
    DualAvgState,
    HeavyBallState,
    InlineAvgState,
    MadgradState,
    VariantState,
    adagrad_step,
    adam_step,
    dual_avg_step,
    heavy_ball_step,
    inline_avg_step,
    madgrad_step,
    madgrad_theoretical_step,
    variant_step,
)
from .problems import L1Median, StochasticQuadratic, suboptimality
from .schedules import (
    Constant,
    ConstantC,
    DecayingC,
    lambda_weight,
    momentum_coeff,
    step_size,
)

OUTPUT_DIR_ENV = "DAGRAD_OUTPUT_DIR"
CSV_HEADER = "k,loss,subopt,grad_inf,gamma,lambda,seed"
DIVERGENCE_FACTOR = 1e6


@dataclass
class RunRecord:
    """Recorded time series for one seeded run."""

    seed: int
    rows: list  # (k, loss, subopt, grad_inf, gamma, lambda, seed)
    diverged: bool
    wall_time: float


@dataclass
class ResolvedRun:
    """A config resolved against concrete problem/schedule objects."""

    problem: object
    x0: np.ndarray
    gamma_sched: object
    momentum_sched: object
    optimizer_name: str
    eps: float
    weight_decay: float
    g_bound: object
    adam_betas: tuple[float, float]
    hb_beta: float
    steps: int
    record_every: int


def resolve(cfg: RunConfig) -> ResolvedRun:
    """Build problem/schedules and check optimizer-problem compatibility."""
    cfg.validate()
    problem = build_problem(cfg)
    x0 = build_x0(cfg, problem)
    gamma_sched = build_gamma_schedule(cfg, problem, x0)
    momentum_sched = parse_momentum(cfg.momentum_spec)
    op = cfg.optimizer_params
    name = cfg.optimizer_name

    default_eps = 1e-8 if name in ("adam", "amsgrad") else (
        0.0 if name == "madgrad_theory" else 1e-6)
    eps = float(op.get("eps", default_eps))
    wd = float(op.get("weight_decay", 0.0))

    g_bound = None
    if name == "madgrad_theory":
        if eps != 0.0:
            raise ConfigError("the theoretical variant is defined with eps = 0")
        spec = op.get("g_bound", "auto")
        if spec == "auto":
            if problem.g_inf_bound is None:
                raise ConfigError(
                    f"theoretical variant needs a gradient bound, but problem "
                    f"{cfg.problem_name!r} has none")
            g_bound = float(problem.g_inf_bound)
        else:
            g_bound = float(spec)

    if problem.emits_sparse:
        c_ok = isinstance(momentum_sched, ConstantC) and momentum_sched.c == 1.0
        if name != "madgrad" or not c_ok:
            raise ConfigError(
                "sparse-gradient problems require the momentum-free cube-root "
                "optimizer (madgrad with momentum constant:1.0)")
        if wd != 0.0:
            raise ConfigError("weight decay is not valid with sparse gradients")

    if name == "inline_avg":
        if not isinstance(gamma_sched, Constant) or not isinstance(momentum_sched, ConstantC):
            raise ConfigError("inline_avg uses fixed (eta, c); configure a "
                              "constant step size and constant momentum")

    return ResolvedRun(
        problem=problem, x0=x0, gamma_sched=gamma_sched,
        momentum_sched=momentum_sched, optimizer_name=name, eps=eps,
        weight_decay=wd, g_bound=g_bound,
        adam_betas=(float(op.get("beta1", 0.9)), float(op.get("beta2", 0.999))),
        hb_beta=float(op.get("beta", 0.9)),
        steps=cfg.steps, record_every=cfg.record_every)


# ---------------------------------------------------------------------------
# single-seed execution
# ---------------------------------------------------------------------------


def _record_ks(steps: int, record_every: int) -> np.ndarray:
    ks = list(range(0, steps, record_every))
    ks.append(steps)
    return np.array(sorted(set(ks)), dtype=np.int64)


def _make_row(rr: ResolvedRun, x: np.ndarray, k: int, xi: int, seed: int):
    gamma_k = step_size(rr.gamma_sched, k)
    lam_k = lambda_weight(gamma_k, k)
    # near-divergent iterates overflow to inf here, which is exactly the
    # signal the blow-up rule looks for
    with np.errstate(over="ignore", invalid="ignore"):
        loss = rr.problem.loss(x, xi)
        subopt = suboptimality(rr.problem, x)
        ginf = grad_inf_norm(rr.problem.grad(x, xi))
    return (k, loss, subopt, ginf, gamma_k, lam_k, seed)


def _fast_path_ok(rr: ResolvedRun) -> bool:
    return (rr.optimizer_name in ("madgrad", "madgrad_theory")
            and isinstance(rr.problem, (L1Median, StochasticQuadratic))
            and isinstance(rr.gamma_sched, Constant)
            and isinstance(rr.momentum_sched, (ConstantC, DecayingC)))


def _run_seed_fused(rr: ResolvedRun, seed: int) -> tuple[list, bool]:
    prob = rr.problem
    rng = make_rng(seed)
    xis = prob.presample(rng, rr.steps + 1)
    rec_ks = _record_ks(rr.steps, rr.record_every)
    ms = rr.momentum_sched
    decaying = isinstance(ms, DecayingC)
    c_const = ms.c if isinstance(ms, ConstantC) else 0.0
    c_r, c_j = (ms.r, ms.j) if decaying else (0.0, 0.0)
    theory = rr.optimizer_name == "madgrad_theory"
    g2 = np.full(prob.dim, (rr.g_bound or 1.0) ** 2)
    xrec, n_valid = kernels.madgrad_trace(
        prob.points, xis, rr.x0, rr.gamma_sched.gamma, rr.eps, rr.weight_decay,
        c_const, c_r, c_j, decaying, theory, g2,
        isinstance(prob, StochasticQuadratic), rec_ks)
    rows = [_make_row(rr, xrec[i], int(rec_ks[i]), int(xis[rec_ks[i]]), seed)
            for i in range(n_valid)]
    return rows, n_valid < rec_ks.shape[0]


def _init_state(rr: ResolvedRun):
    name, x0 = rr.optimizer_name, rr.x0
    if name in ("madgrad", "madgrad_theory"):
        return MadgradState.init(x0, eps=rr.eps, weight_decay=rr.weight_decay,
                                 g_bound=rr.g_bound)
    if name in ("adagrad_da", "adagrad_md"):
        return AdaGradState.init(x0, form=name.split("_")[1], eps=rr.eps)
    if name == "dual_avg":
        return DualAvgState.init(x0)
    if name == "dual_avg_momentum":
        return DualAvgState.init(x0, momentum=rr.momentum_sched)
    if name == "sgd":
        return HeavyBallState.init(x0, alpha=step_size(rr.gamma_sched, 0), beta=0.0)
    if name == "heavy_ball":
        return HeavyBallState.init(x0, alpha=step_size(rr.gamma_sched, 0), beta=rr.hb_beta)
    if name == "inline_avg":
        return InlineAvgState.init(x0, eta=rr.gamma_sched.gamma, c=rr.momentum_sched.c)
    if name in ("adam", "amsgrad"):
        b1, b2 = rr.adam_betas
        return AdamState.init(x0, beta1=b1, beta2=b2, eps=rr.eps,
                              amsgrad=name == "amsgrad")
    if name.startswith("variant_"):
        policy = {"variant_unweighted": "unweighted_denominator",
                  "variant_weighted": "weighted_denominator",
                  "variant_numerator": "weighted_numerator",
                  "variant_cube_root": "cube_root"}[name]
        return VariantState.init(x0, policy, eps=rr.eps)
    raise ConfigError(f"unknown optimizer {name!r}")


def _apply_step(rr: ResolvedRun, state, g, k: int):
    name = rr.optimizer_name
    gamma_k = step_size(rr.gamma_sched, k)
    if name == "madgrad":
        return madgrad_step(state, g, gamma_k, momentum_coeff(rr.momentum_sched, k + 1))
    if name == "madgrad_theory":
        return madgrad_theoretical_step(state, g, gamma_k,
                                        momentum_coeff(rr.momentum_sched, k + 1),
                                        gamma_next=step_size(rr.gamma_sched, k + 1))
    # weight decay for the remaining methods enters as an L2 gradient term
    if rr.weight_decay != 0.0:
        g = g + rr.weight_decay * state.x
    if name in ("adagrad_da", "adagrad_md"):
        return adagrad_step(state, g, gamma_k)
    if name in ("dual_avg", "dual_avg_momentum"):
        return dual_avg_step(state, g, lambda_weight(gamma_k, k))
    if name in ("sgd", "heavy_ball"):
        if state.alpha != gamma_k:
            state = replace(state, alpha=gamma_k)
        return heavy_ball_step(state, g)
    if name == "inline_avg":
        return inline_avg_step(state, g)
    if name in ("adam", "amsgrad"):
        return adam_step(state, g, gamma_k)
    return variant_step(state, g, gamma_k)


def _run_seed_generic(rr: ResolvedRun, seed: int) -> tuple[list, bool]:
    prob = rr.problem
    rng = make_rng(seed)
    xis = prob.presample(rng, rr.steps + 1)
    rec_set = set(int(k) for k in _record_ks(rr.steps, rr.record_every))
    state = _init_state(rr)
    rows = []
    diverged = False
    for k in range(rr.steps + 1):
        if k in rec_set:
            rows.append(_make_row(rr, state.x, k, int(xis[k]), seed))
        if k == rr.steps:
            break
        g = prob.grad(state.x, int(xis[k]))
        # overflow here is the run diverging; detected and handled below
        with np.errstate(over="ignore", invalid="ignore"):
            state = _apply_step(rr, state, g, k)
        if not np.all(np.isfinite(state.x)):
            diverged = True
            break
    return rows, diverged


def _truncate_divergent(rows: list, diverged: bool) -> tuple[list, bool]:
    """Apply the suboptimality blow-up rule, keeping the offending row."""
    if not rows:
        return rows, diverged
    initial = rows[0][2]
    limit = DIVERGENCE_FACTOR * initial if initial > 0 else np.inf
    for i, row in enumerate(rows):
        if not np.isfinite(row[2]) or row[2] > limit:
            return rows[:i + 1], True
    return rows, diverged


def run_seed(rr: ResolvedRun, seed: int) -> RunRecord:
    t0 = time.perf_counter()
    if _fast_path_ok(rr):
        rows, diverged = _run_seed_fused(rr, seed)
    else:
        rows, diverged = _run_seed_generic(rr, seed)
    rows, diverged = _truncate_divergent(rows, diverged)
    return RunRecord(seed=seed, rows=rows, diverged=diverged,
                     wall_time=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# multi-seed runs, aggregation, CSV
# ---------------------------------------------------------------------------


def run_resolved(rr: ResolvedRun, seeds, workers: int = 1) -> list[RunRecord]:
    seeds = list(seeds)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: run_seed(rr, s), seeds))
    return [run_seed(rr, s) for s in seeds]


def aggregate(records: list[RunRecord]) -> list:
    """Mean and 2-standard-error rows at every k recorded by all seeds."""
    if not records:
        return []
    common = set(row[0] for row in records[0].rows)
    for rec in records[1:]:
        common &= set(row[0] for row in rec.rows)
    by_k = {}
    for rec in records:
        for row in rec.rows:
            if row[0] in common:
                by_k.setdefault(row[0], []).append(row)
    out = []
    n = len(records)
    for k in sorted(common):
        rows = by_k[k]
        cols = np.array([[r[1], r[2], r[3]] for r in rows])
        mean = cols.mean(axis=0)
        if n > 1:
            se = cols.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            se = np.zeros(3)
        gamma_k, lam_k = rows[0][4], rows[0][5]
        out.append((k, mean[0], mean[1], mean[2], gamma_k, lam_k, "mean"))
        out.append((k, 2 * se[0], 2 * se[1], 2 * se[2], gamma_k, lam_k, "se2"))
    return out


def _fmt_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, records: list[RunRecord], agg_rows: list) -> None:
    lines = [CSV_HEADER]
    for rec in records:
        for row in rec.rows:
            lines.append(",".join(_fmt_cell(v) for v in row))
    for row in agg_rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def resolve_output_dir(explicit=None) -> Path:
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path.cwd()


def run_config(cfg: RunConfig, output_dir=None, workers: int = 1,
               write: bool = True):
    """Execute a config over all its seeds; returns (records, agg, csv_path)."""
    rr = resolve(cfg)
    records = run_resolved(rr, cfg.seeds, workers=workers)
    agg = aggregate(records)
    csv_path = None
    if write:
        out_dir = resolve_output_dir(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / cfg.output
        write_csv(csv_path, records, agg)
    return records, agg, csv_path


# ---------------------------------------------------------------------------
# hyper-parameter grid sweep
# ---------------------------------------------------------------------------


def grid_lrs(i_min: int, i_max: int) -> list[float]:
    """The sweep grid {1, 2.5, 5} x 10^i for i in [i_min, i_max]."""
    if i_max < i_min:
        raise ConfigError("empty exponent range")
    return [float(f"{m}e{i}") for i in range(i_min, i_max + 1) for m in ("1", "2.5", "5")]


@dataclass
class SweepRow:
    lr: float
    decay: float
    final_subopt_mean: float
    final_subopt_se2: float
    diverged_seeds: int
    best: bool = False


def grid_sweep(cfg: RunConfig, i_min: int, i_max: int, decays=(0.0,),
               output_dir=None, workers: int = 1, write: bool = True):
    """Run the LR/decay grid; returns rows sorted by final mean suboptimality."""
    base = resolve(cfg)
    rows = []
    for lr in grid_lrs(i_min, i_max):
        for decay in decays:
            rr = replace(base, gamma_sched=rescale_gamma(base.gamma_sched, lr),
                         weight_decay=float(decay))
            records = run_resolved(rr, cfg.seeds, workers=workers)
            agg = aggregate(records)
            mean_rows = [r for r in agg if r[6] == "mean"]
            se_rows = [r for r in agg if r[6] == "se2"]
            n_div = sum(1 for rec in records if rec.diverged)
            if mean_rows and n_div == 0:
                final_mean = float(mean_rows[-1][2])
                final_se2 = float(se_rows[-1][2])
            else:
                final_mean, final_se2 = float("inf"), float("nan")
            rows.append(SweepRow(lr=lr, decay=float(decay),
                                 final_subopt_mean=final_mean,
                                 final_subopt_se2=final_se2,
                                 diverged_seeds=n_div))
    rows.sort(key=lambda r: (r.final_subopt_mean, r.lr, r.decay))
    if rows and np.isfinite(rows[0].final_subopt_mean):
        rows[0].best = True
    if write:
        out_dir = resolve_output_dir(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / (Path(cfg.output).stem + "_sweep.csv")
        lines = ["lr,decay,final_subopt_mean,final_subopt_se2,diverged_seeds,best"]
        for r in rows:
            lines.append(",".join([repr(r.lr), repr(r.decay),
                                   _fmt_cell(r.final_subopt_mean),
                                   _fmt_cell(r.final_subopt_se2),
                                   str(r.diverged_seeds),
                                   "1" if r.best else "0"]))
        Path(path).write_text("\n".join(lines) + "\n")
    return rows
