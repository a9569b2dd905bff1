"""Named verification suites driving the theory checks at their stated sizes.

Each suite returns a list of :class:`CheckResult`; ``max_slack`` is the worst
signed violation observed (nonpositive means every case held with margin).
The same functions back the ``verify`` CLI verb and the acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import theory
from .config import RunConfig, load_config, resolve_config_arg
from .numerics import make_rng
from .optimizers import (
    HeavyBallState,
    InlineAvgState,
    heavy_ball_step,
    inline_avg_step,
)
from .problems import L1Median
from .runner import aggregate, grid_sweep, resolve, run_resolved
from .schedules import DecayingC, ck_lemma_violation


@dataclass
class CheckResult:
    name: str
    cases: int
    max_slack: float
    passed: bool
    detail: str = ""


def format_report(results: list[CheckResult]) -> str:
    """Fixed-width verification report."""
    name_w = max(36, max((len(r.name) for r in results), default=0) + 2)
    lines = [f"{'check':<{name_w}}{'cases':>8}  {'max-slack':>12}  result",
             "-" * (name_w + 32)]
    for r in results:
        status = "pass" if r.passed else "FAIL"
        line = f"{r.name:<{name_w}}{r.cases:>8}  {r.max_slack:>12.3e}  {status}"
        if r.detail and not r.passed:
            line += f"  [{r.detail}]"
        lines.append(line)
    n_fail = sum(1 for r in results if not r.passed)
    lines.append(f"{len(results)} checks, {n_fail} failures")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# lemma fuzzing
# ---------------------------------------------------------------------------


def fuzz_error_sum_lemma(cases: int = 10_000, seed: int = 2024,
                         slack: float = 1e-12) -> CheckResult:
    rng = make_rng(seed)
    worst = -np.inf
    worst_case = ""
    for i in range(cases):
        t = int(rng.integers(1, 40))
        dim = int(rng.integers(1, 4))
        g_bound = float(rng.uniform(0.2, 3.0))
        if rng.random() < 0.5:
            gamma = float(rng.uniform(0.01, 2.0))
            lam = gamma * np.sqrt(np.arange(t) + 1.0)
        else:
            lam = np.sort(rng.uniform(0.01, 5.0, size=t))
        g = rng.uniform(-g_bound, g_bound, size=(t, dim))
        v = theory.error_sum_violation(lam, g, g_bound)
        if v > worst:
            worst, worst_case = v, f"case {i}: T={t} D={dim} G={g_bound:.3f}"
    return CheckResult("error-sum-lemma-fuzz", cases, worst, worst <= slack, worst_case)


def fuzz_ck_lemma(cases: int = 10_000, seed: int = 2025,
                  slack: float = 1e-12) -> CheckResult:
    rng = make_rng(seed)
    worst = -np.inf
    worst_case = ""
    for i in range(cases):
        r = float(rng.uniform(0.01, 0.99))
        j = float(rng.uniform(0.0, 10.0))
        k_max = int(rng.integers(1, 2000))
        v = ck_lemma_violation(r, j, k_max)
        if v > worst:
            worst, worst_case = v, f"case {i}: r={r:.4f} j={j:.3f} k_max={k_max}"
    return CheckResult("ck-lemma-fuzz", cases, worst, worst <= slack, worst_case)


def suite_lemmas(cases: int = 10_000, seed: int = 7) -> list[CheckResult]:
    return [fuzz_error_sum_lemma(cases, seed),
            fuzz_ck_lemma(cases, seed + 1)]


# ---------------------------------------------------------------------------
# support-function properties
# ---------------------------------------------------------------------------


def suite_support(cases: int = 1000, seed: int = 11) -> list[CheckResult]:
    rng = make_rng(seed)
    worst_grad = 0.0
    worst_ineq = -np.inf
    n_bad = 0
    for _ in range(cases):
        dim = int(rng.integers(1, 7))
        a = rng.uniform(0.1, 3.0, size=dim)
        a_next = a + rng.uniform(0.0, 2.0, size=dim)
        s = rng.normal(scale=2.0, size=dim)
        delta = rng.normal(scale=1.0, size=dim)
        x0 = rng.normal(size=dim)
        rep = theory.check_support_properties(a, a_next, s, delta, x0)
        worst_grad = max(worst_grad, rep.gradient_max_rel_err)
        v_next, _ = theory.support_value(a_next, s, x0)
        v_cur, _ = theory.support_value(a, s, x0)
        worst_ineq = max(worst_ineq, v_next - v_cur)
        if not rep.all_ok:
            n_bad += 1
    results = [
        CheckResult("support-gradient-vs-fd", cases, worst_grad, worst_grad <= 1e-6),
        CheckResult("support-monotone+smooth", cases, worst_ineq, n_bad == 0),
    ]

    # closed form vs derivative-free numeric maximization, low dimensions
    from scipy.optimize import minimize
    nm_cases = 50
    worst_gap = 0.0
    for _ in range(nm_cases):
        dim = int(rng.integers(1, 5))
        a = rng.uniform(0.2, 2.0, size=dim)
        s = rng.normal(scale=1.5, size=dim)
        x0 = rng.normal(size=dim)
        closed, z = theory.support_value(a, s, x0)

        def neg(x, a=a, s=s, x0=x0):
            d = x - x0
            return float(s @ d) + 0.5 * float(np.sum(a * d * d))

        best = -np.inf
        for start in (x0, z, x0 + 1.0):
            res = minimize(neg, start, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
            best = max(best, -res.fun)
        worst_gap = max(worst_gap, abs(best - closed))
    results.append(CheckResult("support-closedform-vs-numeric", nm_cases,
                               worst_gap, worst_gap <= 1e-6))
    return results


# ---------------------------------------------------------------------------
# Lyapunov inequality on instrumented runs
# ---------------------------------------------------------------------------


def standard_l1_problem() -> tuple[L1Median, np.ndarray]:
    problem = L1Median.from_seed(dim=10, num_points=25, seed=1234, spread=1.0)
    x0 = np.full(10, 0.8)
    return problem, x0


def suite_lyapunov(steps: int = 1000, n_seeds: int = 5,
                   slack: float = 1e-9) -> list[CheckResult]:
    problem, x0 = standard_l1_problem()
    momentum = DecayingC(0.5, 0.0)
    dist0 = float(np.linalg.norm(x0 - problem.x_star))
    _, gamma = theory.rate_bound(steps, dist0, problem.g_inf_bound, problem.dim)
    worst = -np.inf
    worst_alt = -np.inf
    cases = 0
    rng = make_rng(99)
    for seed in range(n_seeds):
        trace = theory.trace_theoretical_run(problem, x0, gamma, momentum, steps, seed)
        alt = problem.x_star + rng.normal(scale=0.5, size=problem.dim)
        for k in range(steps):
            worst = max(worst, theory.lyapunov_violation(trace, k, problem))
            cases += 1
        for k in range(0, steps, 97):
            worst_alt = max(worst_alt, theory.lyapunov_violation(trace, k, problem, x_star=alt))
    return [
        CheckResult("lyapunov-per-step", cases, worst, worst <= slack),
        CheckResult("lyapunov-any-comparator", n_seeds * (steps // 97 + 1),
                    worst_alt, worst_alt <= slack),
    ]


# ---------------------------------------------------------------------------
# cube-root allocation
# ---------------------------------------------------------------------------


def suite_allocation(cases: int = 100, seed: int = 5) -> list[CheckResult]:
    rng = make_rng(seed)
    worst_linf = 0.0
    worst_norm = 0.0
    worst_mu = 0.0
    worst_obj = -np.inf
    for i in range(cases):
        dim = int(rng.integers(1, 9))
        q = np.exp(rng.uniform(-2.0, 2.0, size=dim))
        c = float(np.exp(rng.uniform(-1.0, 2.0)))
        s = theory.cube_root_allocation(q, c)
        worst_norm = max(worst_norm, abs(float(s @ s) - c))
        worst_mu = max(worst_mu, theory.allocation_stationarity_spread(q, s))
        oracle = theory.allocation_oracle_pg(q, c)
        worst_linf = max(worst_linf, float(np.max(np.abs(s - oracle))))
        if i < 5:
            # the closed form must beat random feasible points
            obj = float(np.sum(q / s))
            draws = np.abs(rng.normal(size=(10_000, dim))) + 1e-9
            draws *= np.sqrt(c) / np.linalg.norm(draws, axis=1, keepdims=True)
            rand_obj = np.min(np.sum(q / draws, axis=1))
            worst_obj = max(worst_obj, obj - float(rand_obj))
    return [
        CheckResult("allocation-vs-pg-oracle", cases, worst_linf, worst_linf <= 1e-6),
        CheckResult("allocation-norm-constraint", cases, worst_norm, worst_norm <= 1e-10),
        CheckResult("allocation-stationarity", cases, worst_mu, worst_mu <= 1e-9),
        CheckResult("allocation-beats-random", 5, worst_obj, worst_obj <= 0.0),
    ]


# ---------------------------------------------------------------------------
# algebraic identities
# ---------------------------------------------------------------------------


def momentum_equivalence_max_dev(dim: int = 10, steps: int = 1000, seed: int = 3,
                                 c: float = 0.1, eta: float = 0.5) -> float:
    """Max trajectory gap between averaging-form and buffer-form momentum
    under the mapping (beta, alpha) = (1 - c, c * eta), same gradients."""
    rng = make_rng(seed)
    x0 = rng.normal(size=dim)
    grads = rng.normal(size=(steps, dim))
    hb = HeavyBallState.init(x0, alpha=c * eta, beta=1.0 - c)
    ia = InlineAvgState.init(x0, eta=eta, c=c)
    worst = 0.0
    for k in range(steps):
        hb = heavy_ball_step(hb, grads[k])
        ia = inline_avg_step(ia, grads[k])
        worst = max(worst, float(np.max(np.abs(hb.x - ia.x))))
    return worst


def implicit_reg_max_err(steps: int = 1000, dim: int = 5, seed: int = 4) -> float:
    """Recursive rewrite of plain dual averaging vs its direct sum form.

    recursive: x_{k+1} = x_k - (1/sqrt(k+1)) [g_k + (sqrt(k+1)-sqrt(k))(x_k - x0)]
    direct:    x_{k+1} = x0 - (1/sqrt(k+1)) sum_{i<=k} g_i
    """
    rng = make_rng(seed)
    x0 = rng.normal(size=dim)
    grads = rng.normal(size=(steps, dim))
    x_rec = x0.copy()
    run_sum = np.zeros(dim)
    worst = 0.0
    for k in range(steps):
        root_next = np.sqrt(k + 1.0)
        root_cur = np.sqrt(float(k))
        x_rec = x_rec - (grads[k] + (root_next - root_cur) * (x_rec - x0)) / root_next
        run_sum = run_sum + grads[k]
        x_direct = x0 - run_sum / root_next
        worst = max(worst, float(np.max(np.abs(x_rec - x_direct))))
    return worst


def effective_step_max_err(steps: int = 1000, dim: int = 5, seed: int = 6,
                           gamma: float = 0.05) -> float:
    """Front-weighted dual averaging vs its effective-step decomposition:
    ``x_{k+1} = x0 - gamma*g_k - (1/sqrt(k+1)) sum_{i<k} lam_i g_i``."""
    from .optimizers import DualAvgState, dual_avg_step
    from .schedules import lambda_weight

    rng = make_rng(seed)
    x0 = rng.normal(size=dim)
    grads = rng.normal(size=(steps, dim))
    st = DualAvgState.init(x0)
    prior = np.zeros(dim)  # sum_{i<k} lam_i g_i, accumulated left to right
    worst = 0.0
    for k in range(steps):
        lam = lambda_weight(gamma, k)
        st = dual_avg_step(st, grads[k], lam)
        x_direct = x0 - gamma * grads[k] - prior / np.sqrt(k + 1.0)
        worst = max(worst, float(np.max(np.abs(st.x - x_direct))))
        prior = prior + lam * grads[k]
    return worst


def suite_identities(steps: int = 1000, seed: int = 0) -> list[CheckResult]:
    dev = momentum_equivalence_max_dev(steps=steps, seed=seed + 3)
    imp = implicit_reg_max_err(steps=steps, seed=seed + 4)
    eff = effective_step_max_err(steps=steps, seed=seed + 6)
    return [
        CheckResult("momentum-equivalence", steps, dev, dev <= 1e-9),
        CheckResult("implicit-regularization-rewrite", steps, imp, imp <= 1e-10),
        CheckResult("effective-step-decomposition", steps, eff, eff <= 1e-12),
    ]


# ---------------------------------------------------------------------------
# convergence-rate bound properties
# ---------------------------------------------------------------------------


def suite_bounds(seed: int = 13) -> list[CheckResult]:
    rng = make_rng(seed)
    results = []

    worst = -np.inf
    cases = 200
    for _ in range(cases):
        k = int(rng.integers(10, 100_000))
        dist0 = float(np.exp(rng.uniform(-2, 2)))
        g = float(np.exp(rng.uniform(-2, 2)))
        dim = int(rng.integers(1, 50))
        _, gopt = theory.rate_bound(k, dist0, g, dim)
        obj_opt = theory.rate_pre_bound(gopt, k, dist0, g, dim)
        grid = gopt * np.logspace(-3, 3, 61)
        obj_grid = min(theory.rate_pre_bound(float(gg), k, dist0, g, dim)
                       for gg in grid)
        # optimal gamma must do at least as well as the whole grid
        worst = max(worst, (obj_opt - obj_grid) / obj_grid)
    results.append(CheckResult("gamma-opt-minimizes-grid", cases, worst, worst <= 1e-3))

    # constant bound history: front-weighted rhs obeys the summation-property
    # closed form and stays within a constant factor of the flat rhs
    worst_gap = -np.inf
    worst_ratio = 0.0
    cases2 = 50
    for _ in range(cases2):
        k = int(rng.integers(1, 5000))
        g = float(np.exp(rng.uniform(-1, 1)))
        dist0 = float(np.exp(rng.uniform(-1, 1)))
        dim = int(rng.integers(1, 20))
        hist = np.full(k + 1, g)
        mad, ada = theory.adaptive_bounds(hist, dist0, dim)
        cap = (6.0 * dist0 * np.sqrt(dim) * g
               * np.sqrt((2.0 / 3.0) * (k + 2.0) ** 1.5) / (k + 1.0) ** 1.25)
        worst_gap = max(worst_gap, mad - cap)
        worst_ratio = max(worst_ratio, mad / ada)
    results.append(CheckResult("adaptive-bound-summation-cap", cases2,
                               worst_gap, worst_gap <= 1e-9))
    results.append(CheckResult("adaptive-bound-same-order", cases2,
                               worst_ratio - 1.0, worst_ratio <= 1.0))

    # an early outlier bound decays at power 5/4 vs linearly: the ratio
    # front-weighted/flat must shrink with the horizon
    ratios = []
    for k in (10, 100, 1000, 10_000):
        hist = np.full(k + 1, 1e-3)
        hist[0] = 10.0
        mad, ada = theory.adaptive_bounds(hist, 1.0, 4)
        ratios.append(mad / ada)
    monotone = all(r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
    results.append(CheckResult("adaptive-outlier-decay", len(ratios),
                               ratios[-1] - 1.0, monotone and ratios[-1] < 1.0))
    return results


# ---------------------------------------------------------------------------
# empirical convergence-rate check
# ---------------------------------------------------------------------------


@dataclass
class RateCheckResult:
    ks: np.ndarray
    means: np.ndarray
    se2s: np.ndarray
    bounds: np.ndarray
    max_margin: float  # max over k >= k_min of (mean - 2se) - bound
    passed: bool
    wall_time: float


def rate_bound_empirical(config_path=None, k_min: int = 100,
                       workers: int = 1) -> RateCheckResult:
    """Run the rate-check preset and compare mean suboptimality against the
    bound curve at every recorded step count >= ``k_min``."""
    import time

    t0 = time.perf_counter()
    path = config_path or resolve_config_arg("rate-check-l1median")
    cfg = load_config(path)
    rr = resolve(cfg)
    dist0 = float(np.linalg.norm(rr.x0 - rr.problem.x_star))
    records = run_resolved(rr, cfg.seeds, workers=workers)
    agg = aggregate(records)
    means = {r[0]: r[2] for r in agg if r[6] == "mean"}
    se2s = {r[0]: r[2] for r in agg if r[6] == "se2"}
    ks = np.array([k for k in sorted(means) if k >= k_min])
    mean_arr = np.array([means[k] for k in ks])
    se2_arr = np.array([se2s[k] for k in ks])
    bound_arr = np.array([
        theory.rate_bound(int(k), dist0, rr.problem.g_inf_bound, rr.problem.dim)[0]
        for k in ks])
    margins = (mean_arr - se2_arr) - bound_arr
    max_margin = float(np.max(margins)) if margins.size else float("-inf")
    return RateCheckResult(ks=ks, means=mean_arr, se2s=se2_arr, bounds=bound_arr,
                           max_margin=max_margin, passed=max_margin <= 0.0,
                           wall_time=time.perf_counter() - t0)


def suite_rate_bound(workers: int = 1) -> list[CheckResult]:
    res = rate_bound_empirical(workers=workers)
    return [CheckResult("rate-bound-empirical", len(res.ks), res.max_margin,
                        res.passed, f"{res.wall_time:.1f}s")]


# ---------------------------------------------------------------------------
# behavioral smoke test on the logistic benchmark
# ---------------------------------------------------------------------------


@dataclass
class SmokeResult:
    finals: dict  # method -> (mean, se2, best_lr)
    gap: float    # madgrad_mean - best_baseline_mean
    tol: float    # 2 * combined SE
    passed: bool


def behavioral_smoke(steps: int = 4000, n_seeds: int = 10,
                     workers: int = 1) -> SmokeResult:
    """Tuned-grid comparison on a noisy logistic instance: the cube-root
    method's final mean suboptimality must land within two combined standard
    errors of the best of the momentum/Adam/AdaGrad-DA baselines.

    The instance carries 30% label noise so every method sits in the
    stochastic regime rather than racing burn-in floors.
    """
    base = RunConfig(
        steps=steps, seeds=tuple(range(n_seeds)), record_every=steps,
        output="smoke.csv", problem_name="logistic",
        problem_params={"dim": "10", "num_samples": "150", "seed": "11",
                        "label_flip": "0.3"},
        optimizer_name="madgrad", gamma_spec="constant:0.1",
        momentum_spec="decaying:0.5:0")
    grids = {
        "madgrad": (base, (-4, -2)),
        "sgd_m": (replace(base, optimizer_name="heavy_ball",
                          momentum_spec="constant:0.1"), (-4, -2)),
        "adam": (replace(base, optimizer_name="adam",
                         momentum_spec="constant:0.1"), (-4, -2)),
        "adagrad_da": (replace(base, optimizer_name="adagrad_da",
                               momentum_spec="constant:1.0"), (-3, -1)),
    }
    finals = {}
    for method, (cfg, (i_min, i_max)) in grids.items():
        rows = grid_sweep(cfg, i_min, i_max, decays=(0.0,), write=False,
                          workers=workers)
        best = rows[0]
        finals[method] = (best.final_subopt_mean, best.final_subopt_se2, best.lr)
    baselines = {m: v for m, v in finals.items() if m != "madgrad"}
    best_m = min(baselines, key=lambda m: baselines[m][0])
    mad_mean, mad_se2, _ = finals["madgrad"]
    best_mean, best_se2, _ = baselines[best_m]
    gap = mad_mean - best_mean
    # the per-method "se2" is already 2*SE; combine for the difference
    tol = float(np.hypot(mad_se2, best_se2))
    return SmokeResult(finals=finals, gap=gap, tol=tol, passed=gap <= tol)


def suite_smoke(workers: int = 1) -> list[CheckResult]:
    res = behavioral_smoke(workers=workers)
    detail = ", ".join(f"{m}={v[0]:.5f}@lr{v[2]:g}" for m, v in res.finals.items())
    return [CheckResult("logistic-behavioral-smoke", len(res.finals),
                        res.gap - res.tol, res.passed, detail)]


# ---------------------------------------------------------------------------
# suite registry
# ---------------------------------------------------------------------------

SUITES = {
    "lemmas": suite_lemmas,
    "support": suite_support,
    "lyapunov": suite_lyapunov,
    "allocation": suite_allocation,
    "identities": suite_identities,
    "bounds": suite_bounds,
    "rate": suite_rate_bound,
    "smoke": suite_smoke,
}


def run_suite(name: str) -> tuple[list[CheckResult], str, int]:
    """Run a named suite (or "all"); returns (results, report, exit_code)."""
    if name == "all":
        results = []
        for fn in SUITES.values():
            results.extend(fn())
    elif name in SUITES:
        results = SUITES[name]()
    else:
        raise ValueError(f"unknown suite {name!r}; "
                         f"choose from {sorted(SUITES) + ['all']}")
    report = format_report(results)
    code = 0 if all(r.passed for r in results) else 1
    return results, report, code
