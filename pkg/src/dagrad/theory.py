"""Executable checks of the convergence analysis behind the cube-root method.

Covers the diagonal support-function identities, the error-sum and
momentum-coefficient lemmas, the per-step Lyapunov inequality evaluated on
instrumented runs of the theoretical variant, the convergence-rate bound
and its optimal step size, the time-varying-bound comparison, and the
cube-root allocation problem with an independent projected-gradient oracle.

Inequalities proved exactly are checked with small absolute slack
(1e-9..1e-12) covering floating-point rounding only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_vector, make_rng, to_dense, weighted_inv_sq_norm
from .optimizers import MadgradState, madgrad_theoretical_step
from .schedules import MomentumSchedule, momentum_coeff

# ---------------------------------------------------------------------------
# diagonal support function
# ---------------------------------------------------------------------------


def support_value(a, s, x0) -> tuple[float, np.ndarray]:
    """Value and maximizer of the diagonal-scaled support function.

    For A = diag(a) with a > 0, max_x {-<s, x-x0> - 0.5*||x-x0||_A^2}
    equals ``sum_d s_d^2 / (2 a_d)``, attained at ``z = x0 - s/a``.
    """
    a = as_vector(a)
    s = as_vector(s, a.shape[0])
    x0 = as_vector(x0, a.shape[0])
    if np.any(a <= 0.0):
        raise ValueError("scaling entries must be > 0")
    value = float(np.sum(s * s / (2.0 * a)))
    return value, x0 - s / a


@dataclass
class SupportPropertyReport:
    monotone_ok: bool
    gradient_ok: bool
    smooth_ok: bool
    gradient_max_rel_err: float

    @property
    def all_ok(self) -> bool:
        return self.monotone_ok and self.gradient_ok and self.smooth_ok


def check_support_properties(a, a_next, s, delta, x0,
                             slack: float = 1e-10,
                             fd_rel_tol: float = 1e-6) -> SupportPropertyReport:
    """Check the three support-function properties used by the analysis.

    1. monotone decrease under accumulator growth: V_{a'}(-s) <= V_a(-s)
       whenever a' >= a elementwise;
    2. gradient identity: the gradient of V in its argument, at -s, equals
       z - x0 (checked against central differences of the closed form);
    3. the diagonal-smoothness upper bound at offset ``delta`` (an equality
       for the quadratic closed form, so rounding-level slack suffices).
    """
    a = as_vector(a)
    a_next = as_vector(a_next, a.shape[0])
    s = as_vector(s, a.shape[0])
    delta = as_vector(delta, a.shape[0])
    x0 = as_vector(x0, a.shape[0])
    if np.any(a_next < a):
        raise ValueError("a_next must be elementwise >= a")

    v_cur, z = support_value(a, s, x0)
    v_next, _ = support_value(a_next, s, x0)
    monotone_ok = v_next <= v_cur + slack

    grad_closed = z - x0  # = -s/a
    max_rel = 0.0
    u = -s
    for d in range(a.shape[0]):
        h = 1e-6 * max(1.0, abs(u[d]))
        up = u.copy()
        um = u.copy()
        up[d] += h
        um[d] -= h
        fp, _ = support_value(a, -up, x0)
        fm, _ = support_value(a, -um, x0)
        fd = (fp - fm) / (2.0 * h)
        max_rel = max(max_rel, abs(fd - grad_closed[d]) / max(1.0, abs(grad_closed[d])))
    gradient_ok = max_rel <= fd_rel_tol

    def value_at(arg):
        return support_value(a, arg, x0)[0]

    lhs = value_at(s + delta)
    rhs = value_at(s) + float(delta @ (s / a)) + 0.5 * weighted_inv_sq_norm(delta, a)
    smooth_ok = lhs <= rhs + slack
    return SupportPropertyReport(monotone_ok, gradient_ok, smooth_ok, max_rel)


# ---------------------------------------------------------------------------
# lemmas
# ---------------------------------------------------------------------------


def error_sum_violation(lambdas, g_rows, g_bound: float) -> float:
    """Worst violation, per coordinate and at every prefix length k, of

    ``sum_t lam_t^2 g_t^2 / (lam_t G^2 + sum_{i<t} lam_i g_i^2)^(1/3)
      <= (3/2) lam_k (sum_{i<=k} lam_i g_i^2)^(2/3)``

    for a nondecreasing positive weight sequence and |g| <= G.  Returns
    ``max(lhs - rhs)``, nonpositive when the bound holds everywhere.
    """
    lam = as_vector(lambdas)
    g = np.atleast_2d(np.asarray(g_rows, dtype=np.float64))
    if g.shape[0] != lam.shape[0]:
        raise ValueError("one row of gradients per weight")
    if np.any(lam <= 0.0):
        raise ValueError("weights must be > 0")
    if np.any(np.diff(lam) < 0.0):
        raise ValueError("weights must be nondecreasing")
    if g_bound <= 0.0 or np.any(np.abs(g) > g_bound):
        raise ValueError("need |g| <= G with G > 0")

    lam_col = lam[:, None]
    wsq = lam_col * (g * g)                      # lam_t g_t^2
    totals = np.cumsum(wsq, axis=0)              # sum_{i<=t}
    prior = totals - wsq                         # sum_{i<t}
    denom = np.cbrt(lam_col * g_bound**2 + prior)
    lhs = np.cumsum(lam_col * wsq / denom, axis=0)
    rhs = 1.5 * lam_col * np.cbrt(totals) ** 2
    return float(np.max(lhs - rhs))


def check_error_sum_lemma(lambdas, g_rows, g_bound: float, slack: float = 1e-12) -> bool:
    """True iff the error-sum bound holds at every prefix, with ``slack``
    covering floating-point rounding."""
    return error_sum_violation(lambdas, g_rows, g_bound) <= slack


# ---------------------------------------------------------------------------
# instrumented runs of the theoretical variant
# ---------------------------------------------------------------------------


@dataclass
class TheoryTrace:
    """Full per-step history of a theoretical-variant run.

    Index convention: ``xs[k]``/``ss[k]``/``nus[k]`` are the values *before*
    step k (so entry 0 is the initial state and entry ``steps`` the final
    one); ``gs[k]``/``xis[k]`` belong to step k; ``lambdas[k]`` covers
    k = 0..steps; ``cs[k]`` is the momentum coefficient that produced
    ``xs[k]``.
    """

    x0: np.ndarray
    gamma: float
    g_bound: np.ndarray
    steps: int
    xs: np.ndarray
    zs: np.ndarray
    ss: np.ndarray
    nus: np.ndarray
    gs: np.ndarray
    xis: np.ndarray
    lambdas: np.ndarray
    cs: np.ndarray


def trace_theoretical_run(problem, x0, gamma: float, momentum: MomentumSchedule,
                          steps: int, seed: int) -> TheoryTrace:
    """Run the theoretical variant on ``problem`` recording everything."""
    x0 = as_vector(x0, problem.dim)
    if problem.g_inf_bound is None:
        raise ValueError("problem must declare a gradient bound")
    gb = np.broadcast_to(np.float64(problem.g_inf_bound), x0.shape).copy()
    dim = x0.shape[0]
    st = MadgradState.init(x0, eps=0.0, g_bound=problem.g_inf_bound)
    rng = make_rng(seed)
    xis = problem.presample(rng, steps)

    xs = np.zeros((steps + 1, dim))
    zs = np.zeros((steps + 1, dim))
    ss = np.zeros((steps + 1, dim))
    nus = np.zeros((steps + 1, dim))
    gs = np.zeros((steps, dim))
    lambdas = gamma * np.sqrt(np.arange(steps + 1) + 1.0)
    cs = np.array([momentum_coeff(momentum, k) for k in range(steps + 1)])

    xs[0] = st.x
    for k in range(steps):
        g = to_dense(problem.grad(st.x, int(xis[k])), dim)
        gs[k] = g
        st = madgrad_theoretical_step(st, g, gamma, cs[k + 1])
        xs[k + 1] = st.x
        ss[k + 1] = st.s
        nus[k + 1] = st.nu
        zs[k + 1] = x0 - st.s / np.cbrt(lambdas[k + 1] * gb * gb + st.nu)
    return TheoryTrace(x0=x0, gamma=gamma, g_bound=gb, steps=steps, xs=xs,
                       zs=zs, ss=ss, nus=nus, gs=gs, xis=xis,
                       lambdas=lambdas, cs=cs)


def lyapunov_violation(trace: TheoryTrace, k: int, problem, x_star=None) -> float:
    """Signed violation (lhs - rhs) of the per-step Lyapunov upper bound
    on V at step ``k`` of a trace.

    At k = 0 this is the base case ``V_{A_1}(-s_1) <= (lam_0^2/2)
    ||g_0||^2_{A_0^-1}``; for k >= 1 the full inequality with the comparator
    term (any fixed comparator is valid; defaults to the problem optimum).
    """
    if not 0 <= k < trace.steps:
        raise ValueError("k out of range for this trace")
    xstar = as_vector(problem.x_star if x_star is None else x_star, trace.x0.shape[0])
    g2 = trace.g_bound * trace.g_bound

    def alpha(idx: int) -> np.ndarray:
        return np.cbrt(trace.lambdas[idx] * g2 + trace.nus[idx])

    lam_k = float(trace.lambdas[k])
    g_k = trace.gs[k]
    a_k = alpha(k)
    a_k1 = alpha(k + 1)
    v_next, _ = support_value(a_k1, trace.ss[k + 1], trace.x0)

    if k == 0:
        return v_next - 0.5 * lam_k**2 * weighted_inv_sq_norm(g_k, a_k)

    xi = int(trace.xis[k])
    c_k = float(trace.cs[k])
    v_cur, _ = support_value(a_k, trace.ss[k], trace.x0)
    f_k = problem.loss(trace.xs[k], xi)
    f_km1 = problem.loss(trace.xs[k - 1], xi)
    f_st = problem.loss(xstar, xi)
    rhs = (v_cur
           + 0.5 * lam_k**2 * weighted_inv_sq_norm(g_k, a_k)
           + lam_k * float(g_k @ (trace.x0 - xstar))
           - (lam_k / c_k) * (f_k - f_st)
           + lam_k * (1.0 - c_k) / c_k * (f_km1 - f_st))
    return v_next - rhs


def check_lyapunov_step(trace: TheoryTrace, k: int, problem, x_star=None,
                        slack: float = 1e-9) -> bool:
    """True iff the per-step Lyapunov inequality holds at step ``k``."""
    return lyapunov_violation(trace, k, problem, x_star) <= slack


# ---------------------------------------------------------------------------
# convergence-rate bound
# ---------------------------------------------------------------------------


def rate_bound(k: int, dist0: float, g_bound: float, dim: int,
                 convention: str = "k") -> tuple[float, float]:
    """Convergence-rate bound and the optimal constant step size.

    ``bound = 6/sqrt(k) * dist0 * G * sqrt(D)`` and
    ``gamma_opt = dist0^(3/2) / (k^(3/4) D^(3/4) G^(1/2))``.
    The statement uses k; the derivation's quantities are (k+1)-indexed,
    exposed via ``convention="k_plus_1"``.
    """
    if k < 1 or dim < 1 or g_bound <= 0.0 or dist0 < 0.0:
        raise ValueError("need k >= 1, dim >= 1, G > 0, dist0 >= 0")
    if convention not in ("k", "k_plus_1"):
        raise ValueError("convention must be 'k' or 'k_plus_1'")
    kk = float(k) if convention == "k" else k + 1.0
    bound = 6.0 / math.sqrt(kk) * dist0 * g_bound * math.sqrt(dim)
    gamma_opt = dist0**1.5 / (kk**0.75 * dim**0.75 * g_bound**0.5)
    return bound, gamma_opt


def rate_pre_bound(gamma: float, k: int, dist0: float, g_bound: float,
                       dim: int) -> float:
    """The two-term bound minimized over gamma by the optimal step size:
    ``3 g^(2/3) G^(4/3) D + 3/(k+1) g^(-2/3) G^(2/3) dist0^2``."""
    if gamma <= 0.0:
        raise ValueError("gamma must be > 0")
    return (3.0 * gamma ** (2.0 / 3.0) * g_bound ** (4.0 / 3.0) * dim
            + 3.0 / (k + 1.0) * gamma ** (-2.0 / 3.0) * g_bound ** (2.0 / 3.0) * dist0**2)


def adaptive_bounds(g_hist, dist0: float, dim: int) -> tuple[float, float]:
    """Time-varying-bound right-hand sides at k = len(g_hist) - 1.

    Front-weighted accumulator: ``6/(k+1)^(5/4) * dist0 * sqrt(D) *
    sqrt(sum (i+1)^(1/2) G_i^2)``; unweighted accumulator:
    ``6/(k+1) * dist0 * sqrt(D) * sqrt(sum G_i^2)``.  An early outlier G_i
    is damped at the 5/4 power rather than linearly.
    """
    g_hist = as_vector(g_hist)
    if g_hist.size < 1 or np.any(g_hist <= 0.0):
        raise ValueError("need a nonempty positive bound history")
    k = g_hist.size - 1
    i = np.arange(g_hist.size, dtype=np.float64)
    weighted = float(np.sum(np.sqrt(i + 1.0) * g_hist**2))
    flat = float(np.sum(g_hist**2))
    mad = 6.0 / (k + 1.0) ** 1.25 * dist0 * math.sqrt(dim) * math.sqrt(weighted)
    ada = 6.0 / (k + 1.0) * dist0 * math.sqrt(dim) * math.sqrt(flat)
    return mad, ada


# ---------------------------------------------------------------------------
# cube-root allocation
# ---------------------------------------------------------------------------


def cube_root_allocation(sq_sums, c: float) -> np.ndarray:
    """Closed-form minimizer of ``sum_d q_d / s_d`` s.t. ``||s||_2^2 = c``, s > 0.

    ``s_d = q_d^(1/3) / sqrt(c^-1 sum_d q_d^(2/3))``.
    """
    q = as_vector(sq_sums)
    if c <= 0.0:
        raise ValueError("c must be > 0")
    if np.any(q <= 0.0):
        raise ValueError("squared sums must be > 0 (constraint boundary)")
    scale = math.sqrt(float(np.sum(np.cbrt(q) ** 2)) / c)
    return np.cbrt(q) / scale


def allocation_stationarity_spread(sq_sums, s) -> float:
    """Relative spread of the implied multiplier ``mu_d = q_d / s_d^3``
    across coordinates (0 at an exact stationary point)."""
    q = as_vector(sq_sums)
    s = as_vector(s, q.shape[0])
    mu = q / s**3
    return float((np.max(mu) - np.min(mu)) / np.mean(mu))


def allocation_oracle_pg(sq_sums, c: float, max_iter: int = 20_000,
                         tol: float = 3e-9) -> np.ndarray:
    """Independent projected-gradient solver for the allocation problem.

    Descends ``sum_d q_d / s_d`` along the tangential (projected) gradient
    with a Barzilai-Borwein step and monotone backtracking, re-projecting
    onto the sphere ``||s||_2 = sqrt(c)``; stops once the tangential
    gradient norm falls below ``tol`` relative to the gradient norm, or
    progress stalls at rounding level.
    """
    q = as_vector(sq_sums)
    if c <= 0.0 or np.any(q <= 0.0):
        raise ValueError("need c > 0 and positive squared sums")
    dim = q.shape[0]
    root_c = math.sqrt(c)
    s = np.full(dim, root_c / math.sqrt(dim))

    def objective(v):
        return float(np.sum(q / v))

    f = objective(s)
    grad = -q / (s * s)
    t = 0.1 * root_c / (np.linalg.norm(grad) + 1e-300)
    prev_s = None
    prev_grad = None
    for _ in range(max_iter):
        tangential = grad - (float(grad @ s) / c) * s
        if np.linalg.norm(tangential) <= tol * np.linalg.norm(grad):
            break
        if prev_s is not None:
            ds = s - prev_s
            dg = grad - prev_grad
            curv = float(ds @ dg)
            if curv > 0.0:
                t = float(ds @ ds) / curv
        tt = t
        accepted = False
        for _ in range(60):
            trial = s - tt * tangential
            if np.all(trial > 0.0):
                trial = trial * (root_c / np.linalg.norm(trial))
                f_trial = objective(trial)
                if f_trial <= f:
                    accepted = True
                    break
            tt *= 0.5
        if not accepted or np.linalg.norm(trial - s) <= 1e-14 * root_c:
            break
        prev_s, prev_grad = s, grad
        s, f = trial, f_trial
        grad = -q / (s * s)
    return s
