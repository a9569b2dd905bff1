"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one `ACCEPTANCE <n> <name>: PASS/FAIL` line (run pytest
with -s to see them all).
"""

import time

import numpy as np

from dagrad.config import RunConfig, load_config, resolve_config_arg
from dagrad.numerics import make_rng
from dagrad.optimizers import ConfigError, MadgradState, madgrad_step
from dagrad.problems import SparseBagOfWords
from dagrad.runner import grid_lrs, resolve, run_config
from dagrad.theory import (
    allocation_oracle_pg,
    allocation_stationarity_spread,
    cube_root_allocation,
)
from dagrad.verification import (
    behavioral_smoke,
    effective_step_max_err,
    fuzz_ck_lemma,
    fuzz_error_sum_lemma,
    implicit_reg_max_err,
    momentum_equivalence_max_dev,
    suite_lyapunov,
    suite_support,
    rate_bound_empirical,
)


def _report(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {num} {name}: {status}{suffix}")
    assert ok, f"criterion {num} ({name}) failed{suffix}"


def test_01_momentum_equivalence():
    t0 = time.perf_counter()
    dev = momentum_equivalence_max_dev(dim=10, steps=1000, seed=3)
    wall = time.perf_counter() - t0
    _report(1, "momentum-equivalence", dev <= 1e-9 and wall < 1.0,
            f"max dev {dev:.2e}, {wall:.2f}s")


def test_02_rate_bound_empirical():
    # the preset must actually be the stated workload: D=10, G=1 exactly,
    # optimal constant step, decaying momentum, 1e4 steps, 50 seeds
    cfg = load_config(resolve_config_arg("rate-check-l1median"))
    assert cfg.steps == 10_000 and len(cfg.seeds) == 50
    assert cfg.gamma_spec == "rate_opt"
    assert cfg.momentum_spec == "decaying:0.5:0"
    rr = resolve(cfg)
    assert rr.problem.dim == 10 and rr.problem.g_inf_bound == 1.0

    res = rate_bound_empirical(k_min=100)
    ok = res.passed and res.wall_time < 120.0
    _report(2, "rate-bound-empirical", ok,
            f"max margin {res.max_margin:.3e} over {len(res.ks)} checkpoints, "
            f"{res.wall_time:.1f}s")


def test_03_lemma_fuzzing():
    t0 = time.perf_counter()
    r1 = fuzz_error_sum_lemma(cases=10_000)
    r2 = fuzz_ck_lemma(cases=10_000)
    wall = time.perf_counter() - t0
    ok = r1.passed and r2.passed and wall < 30.0
    _report(3, "lemma-fuzzing", ok,
            f"violations {r1.max_slack:.2e}/{r2.max_slack:.2e}, {wall:.1f}s")


def test_04_lyapunov_per_step():
    results = suite_lyapunov(steps=1000, n_seeds=5, slack=1e-9)
    per_step = results[0]
    ok = all(r.passed for r in results) and per_step.cases == 5000
    _report(4, "lyapunov-per-step", ok,
            f"{per_step.cases} steps, worst {per_step.max_slack:.2e}")


def test_05_cube_root_allocation():
    rng = make_rng(5)
    worst_linf = worst_norm = worst_mu = 0.0
    for _ in range(100):
        dim = int(rng.integers(1, 9))
        q = np.exp(rng.uniform(-2.0, 2.0, size=dim))
        c = float(np.exp(rng.uniform(-1.0, 2.0)))
        s = cube_root_allocation(q, c)
        worst_linf = max(worst_linf, float(np.max(np.abs(s - allocation_oracle_pg(q, c)))))
        worst_norm = max(worst_norm, abs(float(s @ s) - c))
        worst_mu = max(worst_mu, allocation_stationarity_spread(q, s))
    ok = worst_linf <= 1e-6 and worst_norm <= 1e-10 and worst_mu <= 1e-9
    _report(5, "cube-root-allocation", ok,
            f"linf {worst_linf:.2e}, norm {worst_norm:.2e}, mu {worst_mu:.2e}")


def test_06_support_properties():
    results = suite_support(cases=1000)
    ok = all(r.passed for r in results)
    grad = next(r for r in results if r.name == "support-gradient-vs-fd")
    _report(6, "support-function-properties", ok,
            f"fd rel err {grad.max_slack:.2e} over {grad.cases} cases")


def test_07_algebraic_identities():
    imp = implicit_reg_max_err(steps=1000)
    eff = effective_step_max_err(steps=1000)
    ok = imp <= 1e-10 and eff <= 1e-10
    _report(7, "algebraic-identities", ok, f"implicit {imp:.2e}, effective {eff:.2e}")


def test_08_sparsity():
    problem = SparseBagOfWords.from_seed(dim=120, num_docs=200, nnz=8, seed=21)
    rng = make_rng(0)
    xis = problem.presample(rng, 1000)
    st = MadgradState.init(np.zeros(120), eps=1e-6)
    ok = True
    for k in range(1000):
        g = problem.grad(st.x, int(xis[k]))
        nxt = madgrad_step(st, g, 0.05, 1.0)
        mask = np.ones(120, dtype=bool)
        mask[g.indices] = False
        same = (np.array_equal(nxt.x[mask], st.x[mask])
                and np.array_equal(nxt.s[mask], st.s[mask])
                and np.array_equal(nxt.nu[mask], st.nu[mask]))
        if not same:
            ok = False
            break
        st = nxt
    # momentum with sparse problems must be rejected at config time
    cfg = RunConfig(steps=10, seeds=(0,), record_every=5, output="x.csv",
                    problem_name="sparse_bow",
                    problem_params={"dim": "40", "num_docs": "20", "nnz": "4",
                                    "seed": "2"},
                    optimizer_name="madgrad", gamma_spec="constant:0.05",
                    momentum_spec="constant:0.9")
    rejected = False
    try:
        resolve(cfg)
    except ConfigError:
        rejected = True
    _report(8, "sparsity", ok and rejected,
            f"bit-identity over 1000 steps, momentum rejected={rejected}")


def test_09_determinism(tmp_path):
    identical = True
    for preset in ("fastmri-madgrad", "sparse-bow-madgrad"):
        cfg = load_config(resolve_config_arg(preset))
        _, _, p1 = run_config(cfg, output_dir=tmp_path / "a")
        _, _, p2 = run_config(cfg, output_dir=tmp_path / "b")
        identical = identical and p1.read_bytes() == p2.read_bytes()
    _report(9, "byte-identical-reruns", identical)


def test_10_sweep_grid():
    expected = [1e-4, 2.5e-4, 5e-4, 1e-3, 2.5e-3, 5e-3]
    got = grid_lrs(-4, -3)
    _report(10, "sweep-grid-exact", got == expected, f"{got}")


def test_11_behavioral_smoke():
    res = behavioral_smoke()
    detail = ", ".join(f"{m}={v[0]:.5f}" for m, v in res.finals.items())
    _report(11, "behavioral-smoke", res.passed,
            f"gap {res.gap:.2e} vs tol {res.tol:.2e}; {detail}")
