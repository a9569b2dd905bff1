"""Hot per-step update kernels, jitted with numba when available.

Every kernel has a vectorized pure-numpy implementation (``*_np``) and, when
the numba backend is active, a scalar-loop ``@njit`` twin compiled with
default (strict IEEE) floating-point semantics.  Within one backend, results
are bit-reproducible run to run; across backends they agree except for the
last ulp or two of ``cbrt``, whose libm implementations differ.

The module-level names (``madgrad_step_k`` etc.) are bound to the active
backend at import time; see :mod:`dagrad.backend`.
"""

from __future__ import annotations

import numpy as np

from .backend import NUMBA_ENABLED

# ---------------------------------------------------------------------------
# pure numpy implementations
# ---------------------------------------------------------------------------


def madgrad_step_k_np(s, nu, x, x0, g, lam, c_next, eps):
    s1 = s + lam * g
    nu1 = nu + lam * (g * g)
    z1 = x0 - s1 / (np.cbrt(nu1) + eps)
    x1 = (1.0 - c_next) * x + c_next * z1
    return s1, nu1, x1


def madgrad_theory_step_k_np(s, nu, x, x0, g, lam, lam_next, c_next, g2):
    s1 = s + lam * g
    nu1 = nu + lam * (g * g)
    z1 = x0 - s1 / np.cbrt(lam_next * g2 + nu1)
    x1 = (1.0 - c_next) * x + c_next * z1
    return s1, nu1, x1


def madgrad_sparse_k_np(s, nu, x, x0, idx, vals, lam, eps):
    # momentum-free (c = 1) path: mutates the touched coordinates in place
    sv = s[idx] + lam * vals
    nv = nu[idx] + lam * (vals * vals)
    zv = x0[idx] - sv / (np.cbrt(nv) + eps)
    s[idx] = sv
    nu[idx] = nv
    x[idx] = zv


def adagrad_da_step_k_np(s, acc, x0, g, gamma, eps):
    s1 = s + gamma * g
    acc1 = acc + gamma * (g * g)
    x1 = x0 - s1 / (np.sqrt(acc1) + eps)
    return s1, acc1, x1


def adagrad_md_step_k_np(acc, x, g, gamma, eps):
    acc1 = acc + g * g
    x1 = x - gamma * g / (np.sqrt(acc1) + eps)
    return acc1, x1


def adam_step_k_np(m, v, vmax, x, g, gamma, b1, b2, eps, bc1, bc2, amsgrad):
    m1 = b1 * m + (1.0 - b1) * g
    v1 = b2 * v + (1.0 - b2) * (g * g)
    mhat = m1 / bc1
    vhat = v1 / bc2
    if amsgrad:
        vmax1 = np.maximum(vmax, vhat)
        denom = np.sqrt(vmax1) + eps
    else:
        vmax1 = vmax
        denom = np.sqrt(vhat) + eps
    x1 = x - gamma * mhat / denom
    return m1, v1, vmax1, x1


def heavy_ball_step_k_np(m, x, g, alpha, beta):
    m1 = beta * m + g
    x1 = x - alpha * m1
    return m1, x1


def inline_avg_step_k_np(z, x, g, eta, c):
    z1 = z - eta * g
    x1 = (1.0 - c) * x + c * z1
    return z1, x1


def dual_avg_step_k_np(s, x, x0, g, lam, beta_next, c_next):
    s1 = s + lam * g
    z1 = x0 - s1 / beta_next
    x1 = (1.0 - c_next) * x + c_next * z1
    return s1, z1, x1


def madgrad_trace_np(points, xi, x0, gamma, eps, wd, c_const, c_r, c_j,
                     decaying_c, theory, g2, quadratic, record_ks):
    """Fused dense run loop for the adaptive dual-averaged method.

    Runs on a finite-support problem (``quadratic`` selects x - p gradients,
    otherwise coordinate-wise sign gradients), with ``xi`` the presampled
    support indices (length steps + 1; the final draw is record-only).
    Iterates recorded at the requested step counts; stops early at the first
    non-finite iterate.  Returns ``(x_records, n_valid)``.
    """
    dim = x0.shape[0]
    steps = xi.shape[0] - 1
    n_rec = record_ks.shape[0]
    xrec = np.zeros((n_rec, dim))
    s = np.zeros(dim)
    nu = np.zeros(dim)
    x = x0.copy()
    ri = 0
    for k in range(steps + 1):
        if ri < n_rec and record_ks[ri] == k:
            xrec[ri] = x
            ri += 1
        if k == steps:
            break
        p = points[xi[k]]
        if quadratic:
            g = x - p
        else:
            g = np.sign(x - p)
        if wd != 0.0:
            g = g + wd * x
        lam = gamma * np.sqrt(k + 1.0)
        if decaying_c:
            c_next = (c_r + 1.0) / ((k + 1.0) + c_j + c_r + 1.0)
        else:
            c_next = c_const
        if theory:
            lam_next = gamma * np.sqrt(k + 2.0)
            s, nu, x = madgrad_theory_step_k_np(s, nu, x, x0, g, lam, lam_next, c_next, g2)
        else:
            s, nu, x = madgrad_step_k_np(s, nu, x, x0, g, lam, c_next, eps)
        if not np.all(np.isfinite(x)):
            break
    return xrec, ri


# ---------------------------------------------------------------------------
# numba twins
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def madgrad_step_k(s, nu, x, x0, g, lam, c_next, eps):
        n = s.shape[0]
        s1 = np.empty(n)
        nu1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            s1[d] = s[d] + lam * g[d]
            nu1[d] = nu[d] + lam * (g[d] * g[d])
            z = x0[d] - s1[d] / (np.cbrt(nu1[d]) + eps)
            x1[d] = (1.0 - c_next) * x[d] + c_next * z
        return s1, nu1, x1

    @njit(cache=True)
    def madgrad_theory_step_k(s, nu, x, x0, g, lam, lam_next, c_next, g2):
        n = s.shape[0]
        s1 = np.empty(n)
        nu1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            s1[d] = s[d] + lam * g[d]
            nu1[d] = nu[d] + lam * (g[d] * g[d])
            z = x0[d] - s1[d] / np.cbrt(lam_next * g2[d] + nu1[d])
            x1[d] = (1.0 - c_next) * x[d] + c_next * z
        return s1, nu1, x1

    @njit(cache=True)
    def madgrad_sparse_k(s, nu, x, x0, idx, vals, lam, eps):
        for i in range(idx.shape[0]):
            d = idx[i]
            sv = s[d] + lam * vals[i]
            nv = nu[d] + lam * (vals[i] * vals[i])
            s[d] = sv
            nu[d] = nv
            x[d] = x0[d] - sv / (np.cbrt(nv) + eps)

    @njit(cache=True)
    def adagrad_da_step_k(s, acc, x0, g, gamma, eps):
        n = s.shape[0]
        s1 = np.empty(n)
        acc1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            s1[d] = s[d] + gamma * g[d]
            acc1[d] = acc[d] + gamma * (g[d] * g[d])
            x1[d] = x0[d] - s1[d] / (np.sqrt(acc1[d]) + eps)
        return s1, acc1, x1

    @njit(cache=True)
    def adagrad_md_step_k(acc, x, g, gamma, eps):
        n = acc.shape[0]
        acc1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            acc1[d] = acc[d] + g[d] * g[d]
            x1[d] = x[d] - gamma * g[d] / (np.sqrt(acc1[d]) + eps)
        return acc1, x1

    @njit(cache=True)
    def adam_step_k(m, v, vmax, x, g, gamma, b1, b2, eps, bc1, bc2, amsgrad):
        n = m.shape[0]
        m1 = np.empty(n)
        v1 = np.empty(n)
        vmax1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            m1[d] = b1 * m[d] + (1.0 - b1) * g[d]
            v1[d] = b2 * v[d] + (1.0 - b2) * (g[d] * g[d])
            mhat = m1[d] / bc1
            vhat = v1[d] / bc2
            if amsgrad:
                vmax1[d] = max(vmax[d], vhat)
                denom = np.sqrt(vmax1[d]) + eps
            else:
                vmax1[d] = vmax[d]
                denom = np.sqrt(vhat) + eps
            x1[d] = x[d] - gamma * mhat / denom
        return m1, v1, vmax1, x1

    @njit(cache=True)
    def heavy_ball_step_k(m, x, g, alpha, beta):
        n = m.shape[0]
        m1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            m1[d] = beta * m[d] + g[d]
            x1[d] = x[d] - alpha * m1[d]
        return m1, x1

    @njit(cache=True)
    def inline_avg_step_k(z, x, g, eta, c):
        n = z.shape[0]
        z1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            z1[d] = z[d] - eta * g[d]
            x1[d] = (1.0 - c) * x[d] + c * z1[d]
        return z1, x1

    @njit(cache=True)
    def dual_avg_step_k(s, x, x0, g, lam, beta_next, c_next):
        n = s.shape[0]
        s1 = np.empty(n)
        z1 = np.empty(n)
        x1 = np.empty(n)
        for d in range(n):
            s1[d] = s[d] + lam * g[d]
            z1[d] = x0[d] - s1[d] / beta_next
            x1[d] = (1.0 - c_next) * x[d] + c_next * z1[d]
        return s1, z1, x1

    @njit(cache=True)
    def madgrad_trace(points, xi, x0, gamma, eps, wd, c_const, c_r, c_j,
                      decaying_c, theory, g2, quadratic, record_ks):
        dim = x0.shape[0]
        steps = xi.shape[0] - 1
        n_rec = record_ks.shape[0]
        xrec = np.zeros((n_rec, dim))
        s = np.zeros(dim)
        nu = np.zeros(dim)
        x = x0.copy()
        g = np.empty(dim)
        ri = 0
        for k in range(steps + 1):
            if ri < n_rec and record_ks[ri] == k:
                for d in range(dim):
                    xrec[ri, d] = x[d]
                ri += 1
            if k == steps:
                break
            row = xi[k]
            for d in range(dim):
                diff = x[d] - points[row, d]
                if quadratic:
                    g[d] = diff
                else:
                    g[d] = 1.0 if diff > 0.0 else (-1.0 if diff < 0.0 else 0.0)
            if wd != 0.0:
                for d in range(dim):
                    g[d] = g[d] + wd * x[d]
            lam = gamma * np.sqrt(k + 1.0)
            if decaying_c:
                c_next = (c_r + 1.0) / ((k + 1.0) + c_j + c_r + 1.0)
            else:
                c_next = c_const
            ok = True
            if theory:
                lam_next = gamma * np.sqrt(k + 2.0)
                for d in range(dim):
                    s[d] = s[d] + lam * g[d]
                    nu[d] = nu[d] + lam * (g[d] * g[d])
                    z = x0[d] - s[d] / np.cbrt(lam_next * g2[d] + nu[d])
                    x[d] = (1.0 - c_next) * x[d] + c_next * z
                    if not np.isfinite(x[d]):
                        ok = False
            else:
                for d in range(dim):
                    s[d] = s[d] + lam * g[d]
                    nu[d] = nu[d] + lam * (g[d] * g[d])
                    z = x0[d] - s[d] / (np.cbrt(nu[d]) + eps)
                    x[d] = (1.0 - c_next) * x[d] + c_next * z
                    if not np.isfinite(x[d]):
                        ok = False
            if not ok:
                break
        return xrec, ri

else:
    madgrad_step_k = madgrad_step_k_np
    madgrad_theory_step_k = madgrad_theory_step_k_np
    madgrad_sparse_k = madgrad_sparse_k_np
    adagrad_da_step_k = adagrad_da_step_k_np
    adagrad_md_step_k = adagrad_md_step_k_np
    adam_step_k = adam_step_k_np
    heavy_ball_step_k = heavy_ball_step_k_np
    inline_avg_step_k = inline_avg_step_k_np
    dual_avg_step_k = dual_avg_step_k_np
    madgrad_trace = madgrad_trace_np
