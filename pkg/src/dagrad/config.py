"""Flat INI experiment configs: one file per experiment, diffable, seedable.

Sections: ``[run]`` (steps, seeds, record stride, output name), ``[problem]``,
``[optimizer]``, ``[schedule]`` (step-size and momentum specs) and optional
``[init]`` (initial point).  Spec strings are colon-separated, e.g.
``constant:0.025``, ``stagewise:0.1:1500,2250:0.1``, ``decaying:0.5:0``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import problems as problems_mod
from . import schedules as sched_mod
from .numerics import make_rng
from .optimizers import ConfigError
from .theory import rate_bound

OPTIMIZER_NAMES = (
    "sgd", "heavy_ball", "inline_avg", "adam", "amsgrad",
    "adagrad_md", "adagrad_da", "dual_avg", "dual_avg_momentum",
    "madgrad", "madgrad_theory",
    "variant_unweighted", "variant_weighted", "variant_numerator",
    "variant_cube_root",
)


@dataclass
class RunConfig:
    steps: int
    seeds: tuple[int, ...]
    record_every: int
    output: str
    problem_name: str
    problem_params: dict = field(default_factory=dict)
    optimizer_name: str = "madgrad"
    optimizer_params: dict = field(default_factory=dict)
    gamma_spec: str = "constant:0.01"
    momentum_spec: str = "constant:1.0"
    steps_per_epoch: int = 1
    x0_spec: str = "zeros"

    def validate(self) -> None:
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.problem_name not in problems_mod.PROBLEM_BUILDERS:
            raise ConfigError(f"unknown problem {self.problem_name!r}; "
                              f"known: {sorted(problems_mod.PROBLEM_BUILDERS)}")
        if self.optimizer_name not in OPTIMIZER_NAMES:
            raise ConfigError(f"unknown optimizer {self.optimizer_name!r}; "
                              f"known: {OPTIMIZER_NAMES}")


def _parse_seeds(spec: str) -> tuple[int, ...]:
    spec = spec.strip()
    if ":" in spec:
        lo, hi = spec.split(":")
        return tuple(range(int(lo), int(hi)))
    return tuple(int(tok) for tok in spec.split(",") if tok.strip())


def load_config(path) -> RunConfig:
    """Parse an experiment config file into a validated RunConfig."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        run = parser["run"]
        prob = parser["problem"]
        opt = parser["optimizer"]
        sched = parser["schedule"]
    except KeyError as exc:
        raise ConfigError(f"config missing section {exc}") from exc

    problem_params = {k: v for k, v in prob.items() if k != "name"}
    optimizer_params = {k: v for k, v in opt.items() if k != "name"}
    cfg = RunConfig(
        steps=run.getint("steps", 0),
        seeds=_parse_seeds(run.get("seeds", "0")),
        record_every=run.getint("record_every", 1),
        output=run.get("output", path.stem + ".csv"),
        problem_name=prob.get("name", ""),
        problem_params=problem_params,
        optimizer_name=opt.get("name", ""),
        optimizer_params=optimizer_params,
        gamma_spec=sched.get("gamma", "constant:0.01"),
        momentum_spec=sched.get("momentum", "constant:1.0"),
        steps_per_epoch=sched.getint("steps_per_epoch", 1),
        x0_spec=parser.get("init", "x0", fallback="zeros"),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_problem(cfg: RunConfig):
    name = cfg.problem_name
    p = dict(cfg.problem_params)
    try:
        if name == "l1_median":
            return problems_mod.L1Median.from_seed(
                dim=int(p.get("dim", 10)), num_points=int(p.get("num_points", 25)),
                seed=int(p.get("seed", 0)), spread=float(p.get("spread", 1.0)))
        if name == "quadratic":
            return problems_mod.StochasticQuadratic.from_seed(
                dim=int(p.get("dim", 10)), num_points=int(p.get("num_points", 25)),
                seed=int(p.get("seed", 0)), spread=float(p.get("spread", 1.0)))
        if name == "logistic":
            if "fixture" in p:
                fx = p["fixture"]
                fx_path = Path(fx)
                if not fx_path.exists():
                    fx_path = problems_mod.packaged_fixture_path(fx)
                return problems_mod.load_logistic_fixture(fx_path)
            return problems_mod.SyntheticLogistic.from_seed(
                dim=int(p.get("dim", 10)), num_samples=int(p.get("num_samples", 200)),
                seed=int(p.get("seed", 0)), label_flip=float(p.get("label_flip", 0.1)))
        if name == "adam_stress":
            return problems_mod.AdamStress(
                dim=int(p.get("dim", 1)), big=float(p.get("big", 3.0)),
                slope=float(p.get("slope", 0.01)))
        if name == "sparse_bow":
            return problems_mod.SparseBagOfWords.from_seed(
                dim=int(p.get("dim", 100)), num_docs=int(p.get("num_docs", 200)),
                nnz=int(p.get("nnz", 8)), seed=int(p.get("seed", 0)),
                label_flip=float(p.get("label_flip", 0.05)))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad problem parameters for {name!r}: {exc}") from exc
    raise ConfigError(f"unknown problem {name!r}")


def build_x0(cfg: RunConfig, problem) -> np.ndarray:
    spec = cfg.x0_spec.strip()
    dim = problem.dim
    if spec == "zeros":
        return np.zeros(dim)
    kind, _, rest = spec.partition(":")
    if kind == "constant":
        return np.full(dim, float(rest))
    if kind == "list":
        vals = np.array([float(t) for t in rest.split(",")])
        if vals.shape[0] != dim:
            raise ConfigError(f"x0 list has length {vals.shape[0]}, problem dim is {dim}")
        return vals
    if kind == "gauss":
        scale_s, _, seed_s = rest.partition(":")
        rng = make_rng(int(seed_s or 0))
        return float(scale_s) * rng.normal(size=dim)
    raise ConfigError(f"unknown x0 spec {spec!r}")


def parse_momentum(spec: str) -> sched_mod.MomentumSchedule:
    kind, _, rest = spec.strip().partition(":")
    try:
        if kind == "constant":
            return sched_mod.ConstantC(float(rest))
        if kind == "decaying":
            r, _, j = rest.partition(":")
            return sched_mod.DecayingC(float(r), float(j or 0.0))
    except ValueError as exc:
        raise ConfigError(f"bad momentum spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown momentum spec {spec!r}")


def parse_step_size(spec: str) -> sched_mod.StepSizeSchedule:
    kind, _, rest = spec.strip().partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == "constant":
            return sched_mod.Constant(float(parts[0]))
        if kind == "sqrt_decay":
            return sched_mod.SqrtDecay(float(parts[0]), float(parts[1]) if len(parts) > 1 else 0.0)
        if kind == "stagewise":
            bounds = tuple(int(t) for t in parts[1].split(",")) if parts[1] else ()
            return sched_mod.Stagewise(float(parts[0]), bounds, float(parts[2]))
        if kind == "inv_sqrt_warmup":
            return sched_mod.InverseSqrtWarmup(float(parts[0]), int(parts[1]))
        if kind == "poly":
            return sched_mod.PolynomialDecay(float(parts[0]), int(parts[1]),
                                             float(parts[2]) if len(parts) > 2 else 1.0)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad step-size spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown step-size spec {spec!r}")


def build_gamma_schedule(cfg: RunConfig, problem, x0) -> sched_mod.StepSizeSchedule:
    """Resolve the step-size spec; ``rate_opt`` computes the optimal
    constant step for this problem instance and horizon.

    Schedules are indexed by optimizer step; ``steps_per_epoch`` rescales
    epoch-based stagewise boundaries into step counts.
    """
    spec = cfg.gamma_spec.strip()
    if spec == "rate_opt":
        if problem.g_inf_bound is None:
            raise ConfigError("rate_opt requires a problem with a gradient bound")
        dist0 = float(np.linalg.norm(x0 - problem.x_star))
        _, gamma_opt = rate_bound(cfg.steps, dist0, problem.g_inf_bound, problem.dim)
        if gamma_opt <= 0.0:
            raise ConfigError("rate_opt step size is zero (x0 equals the optimum)")
        return sched_mod.Constant(gamma_opt)
    sched = parse_step_size(spec)
    if cfg.steps_per_epoch > 1 and isinstance(sched, sched_mod.Stagewise):
        sched = replace(sched, boundaries=tuple(
            b * cfg.steps_per_epoch for b in sched.boundaries))
    return sched


def rescale_gamma(sched, new_base: float):
    """Return a copy of a schedule with its base learning rate replaced
    (used by the grid sweep, which rescales rather than reshapes)."""
    if isinstance(sched, sched_mod.Constant):
        return sched_mod.Constant(new_base)
    if isinstance(sched, sched_mod.Stagewise):
        return replace(sched, gamma0=new_base)
    if isinstance(sched, sched_mod.SqrtDecay):
        return replace(sched, a=new_base)
    if isinstance(sched, sched_mod.InverseSqrtWarmup):
        return replace(sched, peak=new_base)
    if isinstance(sched, sched_mod.PolynomialDecay):
        return replace(sched, gamma0=new_base)
    raise ConfigError(f"cannot rescale schedule {sched!r}")


# ---------------------------------------------------------------------------
# packaged presets
# ---------------------------------------------------------------------------


def preset_dir() -> Path:
    return Path(__file__).parent / "presets"


def list_presets() -> list[tuple[str, str]]:
    """(name, one-line description) for every packaged preset config."""
    out = []
    for p in sorted(preset_dir().glob("*.cfg")):
        desc = ""
        with open(p) as fh:
            first = fh.readline().strip()
            if first.startswith("#"):
                desc = first.lstrip("# ")
        out.append((p.stem, desc))
    return out


def resolve_config_arg(arg: str) -> Path:
    """Resolve a CLI config argument: an existing file path, else a preset name."""
    p = Path(arg)
    if p.exists():
        return p
    candidate = preset_dir() / f"{arg}.cfg"
    if candidate.exists():
        return candidate
    raise ConfigError(f"no config file or preset named {arg!r} "
                      f"(presets: {[n for n, _ in list_presets()]})")
