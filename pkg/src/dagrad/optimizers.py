"""Optimizer step functions: each is a pure transition on an explicit state.

The family covers the adaptive dual-averaged method (plain, momentum-free
sparse, and the gradient-bound theoretical variant), its design lineage
(plain dual averaging with optional iterate averaging, both AdaGrad forms),
the rejected denominator-weighting variants, and the SGD/heavy-ball/Adam/
AMSGrad baselines.

Conventions shared by the dual-averaging family: the gradient weight at
step k is ``lambda_k = gamma_k * sqrt(k+1)``; iterates are anchored at the
frozen initial point ``x0``; ``eps`` is added outside the root.  The
momentum coefficient passed to a step is the one producing the *next*
iterate, i.e. callers evaluate their momentum schedule at ``k + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .numerics import SparseGrad, as_vector, to_dense
from .schedules import (
    ConstantC,
    DecayingC,
    MomentumSchedule,
    lambda_weight,
    momentum_coeff,
)


class ConfigError(ValueError):
    """Invalid optimizer/problem/run configuration."""


class GradientBoundError(ValueError):
    """A gradient violated the declared infinity-norm bound."""


def _check_dense_grad(g, dim: int) -> np.ndarray:
    g = as_vector(g, dim)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains non-finite entries")
    return g


def _check_step_args(gamma_k: float, c_next: float) -> None:
    if gamma_k <= 0.0:
        raise ValueError("gamma_k must be > 0")
    if not 0.0 < c_next <= 1.0:
        raise ValueError("c_next must be in (0, 1]")


# ---------------------------------------------------------------------------
# adaptive dual averaging with cube-root scaling
# ---------------------------------------------------------------------------


@dataclass
class MadgradState:
    """State: frozen x0, weighted gradient sum s, weighted squared sum nu,
    averaged iterate x, and the step counter."""

    x0: np.ndarray
    s: np.ndarray
    nu: np.ndarray
    x: np.ndarray
    k: int
    eps: float
    weight_decay: float
    g_bound: Union[float, np.ndarray, None] = None

    @classmethod
    def init(cls, x0, eps: float = 1e-6, weight_decay: float = 0.0,
             g_bound: Union[float, np.ndarray, None] = None) -> "MadgradState":
        x0 = as_vector(x0)
        if eps < 0.0 or weight_decay < 0.0:
            raise ValueError("eps and weight_decay must be >= 0")
        if g_bound is not None:
            gb = as_vector(g_bound) if np.ndim(g_bound) else float(g_bound)
            if np.any(np.asarray(gb) <= 0.0):
                raise ValueError("g_bound must be > 0")
            g_bound = gb
        d = x0.shape[0]
        return cls(x0=x0.copy(), s=np.zeros(d), nu=np.zeros(d), x=x0.copy(),
                   k=0, eps=eps, weight_decay=weight_decay, g_bound=g_bound)


def madgrad_step(st: MadgradState, g, gamma_k: float, c_next: float) -> MadgradState:
    """One step of the cube-root dual-averaged update.

    ``s' = s + lam*g``, ``nu' = nu + lam*g^2``,
    ``z' = x0 - s'/(cbrt(nu') + eps)``, ``x' = (1-c_next)*x + c_next*z'``
    with ``lam = gamma_k*sqrt(k+1)``.  Weight decay, if set, enters as an
    additive L2 gradient term before the update.  Sparse samples are only
    accepted momentum-free (c_next = 1), where untouched coordinates are
    skipped and stay bit-identical.
    """
    _check_step_args(gamma_k, c_next)
    lam = lambda_weight(gamma_k, st.k)
    if isinstance(g, SparseGrad):
        if c_next != 1.0:
            raise ConfigError("sparse gradients require momentum-free updates (c = 1)")
        if st.weight_decay != 0.0:
            raise ConfigError("weight decay densifies the update; not valid with sparse gradients")
        if g.dim != st.x0.shape[0]:
            raise ValueError("sparse gradient dimension mismatch")
        if not np.all(np.isfinite(g.values)):
            raise ValueError("gradient contains non-finite entries")
        nu_new = st.nu[g.indices] + lam * (g.values * g.values)
        if st.eps == 0.0 and np.any(nu_new == 0.0):
            raise ZeroDivisionError("zero cube-root denominator with eps == 0")
        s1 = st.s.copy()
        nu1 = st.nu.copy()
        x1 = st.x.copy()
        kernels.madgrad_sparse_k(s1, nu1, x1, st.x0, g.indices, g.values, lam, st.eps)
        return replace(st, s=s1, nu=nu1, x=x1, k=st.k + 1)

    g = _check_dense_grad(g, st.x0.shape[0])
    if st.weight_decay != 0.0:
        g = g + st.weight_decay * st.x
    if st.eps == 0.0 and np.any((st.nu == 0.0) & (g == 0.0)):
        raise ZeroDivisionError("zero cube-root denominator with eps == 0")
    s1, nu1, x1 = kernels.madgrad_step_k(st.s, st.nu, st.x, st.x0, g, lam, c_next, st.eps)
    return replace(st, s=s1, nu=nu1, x=x1, k=st.k + 1)


def madgrad_theoretical_step(st: MadgradState, g, gamma_k: float, c_next: float,
                             gamma_next: Optional[float] = None) -> MadgradState:
    """Theoretical variant: the denominator gains a ``lam_{k+1} * G^2`` term.

    ``z' = x0 - s'/cbrt(lam_next*G^2 + nu')`` with
    ``lam_next = gamma_next*sqrt(k+2)`` (``gamma_next`` defaults to
    ``gamma_k``, the constant-step case the analysis assumes).  Requires a
    declared gradient bound, checked against every sample; scalar or
    per-coordinate bounds are accepted.
    """
    _check_step_args(gamma_k, c_next)
    if st.g_bound is None:
        raise ConfigError("theoretical variant requires a gradient bound G")
    if st.eps != 0.0:
        raise ConfigError("theoretical variant is defined with eps = 0")
    g = to_dense(g, st.x0.shape[0])
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains non-finite entries")
    gb = np.broadcast_to(np.asarray(st.g_bound, dtype=np.float64), g.shape)
    if np.any(np.abs(g) > gb):
        raise GradientBoundError(
            f"gradient inf-norm {np.max(np.abs(g)):.6g} exceeds declared bound")
    if st.weight_decay != 0.0:
        g = g + st.weight_decay * st.x
    lam = lambda_weight(gamma_k, st.k)
    gn = gamma_k if gamma_next is None else gamma_next
    lam_next = gn * math.sqrt(st.k + 2.0)
    g2 = np.ascontiguousarray(gb * gb)
    s1, nu1, x1 = kernels.madgrad_theory_step_k(st.s, st.nu, st.x, st.x0, g, lam,
                                                lam_next, c_next, g2)
    return replace(st, s=s1, nu=nu1, x=x1, k=st.k + 1)


# ---------------------------------------------------------------------------
# plain dual averaging, optionally with iterate averaging
# ---------------------------------------------------------------------------


@dataclass
class DualAvgState:
    """Euclidean dual averaging anchored at x0: x' = x0 - s'/beta_{k+1}.

    ``beta_rule`` maps the post-step counter n to the divisor beta_n
    (default sqrt(n)).  With ``momentum`` set, gradients are taken at a
    moving average of the argmin points instead (double averaging).
    """

    x0: np.ndarray
    s: np.ndarray
    x: np.ndarray
    k: int
    beta_rule: Optional[Callable[[int], float]] = None
    momentum: Optional[MomentumSchedule] = None

    @classmethod
    def init(cls, x0, beta_rule=None, momentum=None) -> "DualAvgState":
        x0 = as_vector(x0)
        return cls(x0=x0.copy(), s=np.zeros_like(x0), x=x0.copy(), k=0,
                   beta_rule=beta_rule, momentum=momentum)


def dual_avg_step(st: DualAvgState, g, lambda_k: float) -> DualAvgState:
    g = _check_dense_grad(g, st.x0.shape[0])
    n = st.k + 1
    beta_next = math.sqrt(n) if st.beta_rule is None else float(st.beta_rule(n))
    if beta_next <= 0.0:
        raise ValueError("beta_{k+1} must be > 0")
    c_next = 1.0 if st.momentum is None else momentum_coeff(st.momentum, n)
    s1, _, x1 = kernels.dual_avg_step_k(st.s, st.x, st.x0, g, lambda_k, beta_next, c_next)
    return replace(st, s=s1, x=x1, k=n)


# ---------------------------------------------------------------------------
# AdaGrad, both forms
# ---------------------------------------------------------------------------


@dataclass
class AdaGradState:
    """Coordinate-wise AdaGrad state.

    form "da": x' = x0 - (sum gamma*g) / (sqrt(sum gamma*g^2) + eps), the
    dual-averaging display with the step size inside both sums.
    form "md": x' = x - gamma*g / (sqrt(sum g^2) + eps), the mirror-descent
    update found in mainstream frameworks (classical accumulator).
    """

    form: str
    x0: np.ndarray
    x: np.ndarray
    acc: np.ndarray
    s: Optional[np.ndarray]
    k: int
    eps: float

    @classmethod
    def init(cls, x0, form: str = "da", eps: float = 1e-6) -> "AdaGradState":
        if form not in ("da", "md"):
            raise ValueError("form must be 'da' or 'md'")
        if eps < 0.0:
            raise ValueError("eps must be >= 0")
        x0 = as_vector(x0)
        s = np.zeros_like(x0) if form == "da" else None
        return cls(form=form, x0=x0.copy(), x=x0.copy(), acc=np.zeros_like(x0),
                   s=s, k=0, eps=eps)


def adagrad_step(st: AdaGradState, g, gamma: float) -> AdaGradState:
    if gamma <= 0.0:
        raise ValueError("gamma must be > 0")
    g = _check_dense_grad(g, st.x0.shape[0])
    if st.form == "da":
        new_acc = st.acc + gamma * (g * g)
        if st.eps == 0.0 and np.any(new_acc == 0.0):
            raise ZeroDivisionError("zero square-root denominator with eps == 0")
        s1, acc1, x1 = kernels.adagrad_da_step_k(st.s, st.acc, st.x0, g, gamma, st.eps)
        return replace(st, s=s1, acc=acc1, x=x1, k=st.k + 1)
    new_acc = st.acc + g * g
    if st.eps == 0.0 and np.any(new_acc == 0.0):
        raise ZeroDivisionError("zero square-root denominator with eps == 0")
    acc1, x1 = kernels.adagrad_md_step_k(st.acc, st.x, g, gamma, st.eps)
    return replace(st, acc=acc1, x=x1, k=st.k + 1)


# ---------------------------------------------------------------------------
# momentum baselines
# ---------------------------------------------------------------------------


@dataclass
class HeavyBallState:
    """SGD with momentum in buffer form: m' = beta*m + g, x' = x - alpha*m'."""

    x: np.ndarray
    m: np.ndarray
    alpha: float
    beta: float

    @classmethod
    def init(cls, x0, alpha: float, beta: float = 0.0) -> "HeavyBallState":
        if alpha <= 0.0 or not 0.0 <= beta < 1.0:
            raise ValueError("need alpha > 0 and 0 <= beta < 1")
        x0 = as_vector(x0)
        return cls(x=x0.copy(), m=np.zeros_like(x0), alpha=alpha, beta=beta)


def heavy_ball_step(st: HeavyBallState, g) -> HeavyBallState:
    g = _check_dense_grad(g, st.x.shape[0])
    m1, x1 = kernels.heavy_ball_step_k(st.m, st.x, g, st.alpha, st.beta)
    return replace(st, x=x1, m=m1)


@dataclass
class InlineAvgState:
    """Momentum in averaging form: z' = z - eta*g, x' = (1-c)*x + c*z'.

    Trajectory-identical to HeavyBallState under (beta, alpha) = (1-c, c*eta).
    """

    x: np.ndarray
    z: np.ndarray
    eta: float
    c: float

    @classmethod
    def init(cls, x0, eta: float, c: float) -> "InlineAvgState":
        if eta <= 0.0 or not 0.0 < c <= 1.0:
            raise ValueError("need eta > 0 and 0 < c <= 1")
        x0 = as_vector(x0)
        return cls(x=x0.copy(), z=x0.copy(), eta=eta, c=c)


def inline_avg_step(st: InlineAvgState, g) -> InlineAvgState:
    g = _check_dense_grad(g, st.x.shape[0])
    z1, x1 = kernels.inline_avg_step_k(st.z, st.x, g, st.eta, st.c)
    return replace(st, x=x1, z=z1)


@dataclass
class AdamState:
    """Adam with bias correction; the amsgrad flag swaps in the running max
    of the corrected second moment before the square root."""

    x: np.ndarray
    m: np.ndarray
    v: np.ndarray
    vhat_max: np.ndarray
    beta1: float
    beta2: float
    eps: float
    k: int
    amsgrad: bool

    @classmethod
    def init(cls, x0, beta1: float = 0.9, beta2: float = 0.999,
             eps: float = 1e-8, amsgrad: bool = False) -> "AdamState":
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0 or eps < 0.0:
            raise ValueError("need 0 <= beta1, beta2 < 1 and eps >= 0")
        x0 = as_vector(x0)
        zeros = np.zeros_like(x0)
        return cls(x=x0.copy(), m=zeros.copy(), v=zeros.copy(),
                   vhat_max=zeros.copy(), beta1=beta1, beta2=beta2, eps=eps,
                   k=0, amsgrad=amsgrad)


def adam_step(st: AdamState, g, gamma: float) -> AdamState:
    if gamma <= 0.0:
        raise ValueError("gamma must be > 0")
    g = _check_dense_grad(g, st.x.shape[0])
    t = st.k + 1
    bc1 = 1.0 - st.beta1**t
    bc2 = 1.0 - st.beta2**t
    m1, v1, vmax1, x1 = kernels.adam_step_k(st.m, st.v, st.vhat_max, st.x, g,
                                            gamma, st.beta1, st.beta2, st.eps,
                                            bc1, bc2, st.amsgrad)
    return replace(st, x=x1, m=m1, v=v1, vhat_max=vmax1, k=t)


# ---------------------------------------------------------------------------
# rejected weighting variants
# ---------------------------------------------------------------------------

UNWEIGHTED_DENOMINATOR = "unweighted_denominator"
WEIGHTED_DENOMINATOR = "weighted_denominator"
WEIGHTED_NUMERATOR = "weighted_numerator"
CUBE_ROOT = "cube_root"

VARIANT_POLICIES = (UNWEIGHTED_DENOMINATOR, WEIGHTED_DENOMINATOR,
                    WEIGHTED_NUMERATOR, CUBE_ROOT)


@dataclass
class VariantState:
    """State for the alternative denominator-weighting policies.

    ``num`` and ``den`` are the running numerator / denominator sums of the
    policy's displayed update; ``wsum`` is the scalar sum of sqrt weights
    used by the weighted-numerator policy.
    """

    policy: str
    x0: np.ndarray
    x: np.ndarray
    num: np.ndarray
    den: np.ndarray
    wsum: float
    k: int
    eps: float

    @classmethod
    def init(cls, x0, policy: str, eps: float = 1e-6) -> "VariantState":
        if policy not in VARIANT_POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        if eps < 0.0:
            raise ValueError("eps must be >= 0")
        x0 = as_vector(x0)
        return cls(policy=policy, x0=x0.copy(), x=x0.copy(),
                   num=np.zeros_like(x0), den=np.zeros_like(x0), wsum=0.0,
                   k=0, eps=eps)


def variant_step(st: VariantState, g, gamma_k: float) -> VariantState:
    """Apply one step of the selected weighting policy, anchored at x0.

    unweighted_denominator: x' = x0 - (sum lam_i g_i) / (sqrt(sum gamma_i g_i^2) + eps)
    weighted_denominator:   x' = x0 - (sum lam_i g_i) / (sqrt(sum lam_i g_i^2) + eps)
    weighted_numerator:     x' = x0 - gamma_k/sqrt(k+1)
                                   * sqrt(sum w_i) / (sqrt(sum w_i g_i^2) + eps) * g_k
                            with w_i = sqrt(i+1)
    cube_root:              the cube-root update (momentum-free)
    """
    if gamma_k <= 0.0:
        raise ValueError("gamma_k must be > 0")
    g = _check_dense_grad(g, st.x0.shape[0])
    lam = lambda_weight(gamma_k, st.k)
    w = math.sqrt(st.k + 1.0)
    if st.policy == UNWEIGHTED_DENOMINATOR:
        num1 = st.num + lam * g
        den1 = st.den + gamma_k * (g * g)
        _require_nonzero(den1, st.eps)
        x1 = st.x0 - num1 / (np.sqrt(den1) + st.eps)
        return replace(st, num=num1, den=den1, x=x1, k=st.k + 1)
    if st.policy == WEIGHTED_DENOMINATOR:
        num1 = st.num + lam * g
        den1 = st.den + lam * (g * g)
        _require_nonzero(den1, st.eps)
        x1 = st.x0 - num1 / (np.sqrt(den1) + st.eps)
        return replace(st, num=num1, den=den1, x=x1, k=st.k + 1)
    if st.policy == WEIGHTED_NUMERATOR:
        wsum1 = st.wsum + w
        den1 = st.den + w * (g * g)
        _require_nonzero(den1, st.eps)
        x1 = st.x0 - (gamma_k / w) * (math.sqrt(wsum1) / (np.sqrt(den1) + st.eps)) * g
        return replace(st, den=den1, wsum=wsum1, x=x1, k=st.k + 1)
    # cube_root: identical to the momentum-free cube-root update
    num1 = st.num + lam * g
    den1 = st.den + lam * (g * g)
    _require_nonzero(den1, st.eps)
    x1 = st.x0 - num1 / (np.cbrt(den1) + st.eps)
    return replace(st, num=num1, den=den1, x=x1, k=st.k + 1)


def _require_nonzero(den: np.ndarray, eps: float) -> None:
    if eps == 0.0 and np.any(den == 0.0):
        raise ZeroDivisionError("zero denominator entry with eps == 0")


# ---------------------------------------------------------------------------
# flat-text state snapshots
# ---------------------------------------------------------------------------

_STATE_TYPES = {
    "madgrad": MadgradState,
    "dual_avg": DualAvgState,
    "adagrad": AdaGradState,
    "heavy_ball": HeavyBallState,
    "inline_avg": InlineAvgState,
    "adam": AdamState,
    "variant": VariantState,
}
_TYPE_NAMES = {v: k for k, v in _STATE_TYPES.items()}

_HEADER = "dagrad-state v1"


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, np.ndarray):
        return "vec " + " ".join(repr(float(t)) for t in v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return repr(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return "str " + v
    if isinstance(v, ConstantC):
        return f"momentum constant:{v.c!r}"
    if isinstance(v, DecayingC):
        return f"momentum decaying:{v.r!r}:{v.j!r}"
    raise TypeError(f"cannot serialize field value {v!r}")


def _parse(raw: str):
    if raw == "none":
        return None
    if raw in ("true", "false"):
        return raw == "true"
    if raw.startswith("vec"):
        body = raw[3:].strip()
        vals = [float(t) for t in body.split()] if body else []
        return np.array(vals, dtype=np.float64)
    if raw.startswith("str "):
        return raw[4:]
    if raw.startswith("momentum "):
        kind, _, rest = raw[9:].partition(":")
        if kind == "constant":
            return ConstantC(float(rest))
        r, _, j = rest.partition(":")
        return DecayingC(float(r), float(j))
    try:
        return int(raw)
    except ValueError:
        return float(raw)


def state_to_text(st) -> str:
    """Serialize a state record to a flat text block (exact float round-trip)."""
    name = _TYPE_NAMES.get(type(st))
    if name is None:
        raise TypeError(f"unknown state type {type(st).__name__}")
    if isinstance(st, DualAvgState) and st.beta_rule is not None:
        raise ValueError("custom beta rules are not serializable")
    lines = [_HEADER, f"type={name}"]
    for fname in st.__dataclass_fields__:
        if fname == "beta_rule":
            continue
        lines.append(f"{fname}={_fmt(getattr(st, fname))}")
    return "\n".join(lines) + "\n"


def state_from_text(text: str):
    """Rebuild a state record from :func:`state_to_text` output."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0] != _HEADER:
        raise ValueError("not a state snapshot")
    fields = {}
    for ln in lines[1:]:
        key, _, raw = ln.partition("=")
        fields[key] = raw
    cls = _STATE_TYPES.get(fields.pop("type", ""))
    if cls is None:
        raise ValueError("snapshot has unknown state type")
    kwargs = {k: _parse(v) for k, v in fields.items()}
    return cls(**kwargs)
