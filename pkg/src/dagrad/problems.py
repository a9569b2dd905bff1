"""Convex stochastic test problems with known optima and exact expectations.

Every instance draws samples from a finite, seeded support so that the exact
expected loss is computable by enumeration (or a full pass, for the logistic
instances).  Samples are referred to by integer id; ``presample`` draws a
whole run's worth of ids in one call so the stream is reproducible and
independent of scheduling.
"""

from __future__ import annotations

import functools
from pathlib import Path

import numpy as np
from scipy.special import expit

from .numerics import SparseGrad, as_vector, make_rng, sparse_grad, to_dense


def _logistic_loss_grad(a, y, x):
    z = y * float(a @ x)
    return float(np.logaddexp(0.0, -z)), (-y * expit(-z)) * a


def _solve_logistic(features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """High-accuracy deterministic minimizer of the mean logistic loss.

    L-BFGS to get close, then Newton steps (the Hessian is PD once labels
    are noisy) down to inf-norm gradient ~1e-12.
    """
    from scipy.optimize import minimize

    n, dim = features.shape

    def fg(x):
        z = labels * (features @ x)
        loss = float(np.mean(np.logaddexp(0.0, -z)))
        grad = -(features.T @ (labels * expit(-z))) / n
        return loss, grad

    res = minimize(fg, np.zeros(dim), jac=True, method="L-BFGS-B",
                   options={"maxiter": 5000, "ftol": 1e-16, "gtol": 1e-10})
    x = res.x
    for _ in range(50):
        z = labels * (features @ x)
        sig = expit(-z)
        grad = -(features.T @ (labels * sig)) / n
        if np.max(np.abs(grad)) < 1e-12:
            break
        w = sig * (1.0 - sig)
        hess = (features.T * w) @ features / n
        hess[np.diag_indices_from(hess)] += 1e-12
        x = x - np.linalg.solve(hess, grad)
    return x


class L1Median:
    """f(x, xi) = ||x - xi||_1 over a finite point set; x* is the
    coordinate-wise median and every gradient has inf-norm exactly 1."""

    emits_sparse = False
    domain = None

    def __init__(self, points):
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self.num_samples, self.dim = self.points.shape
        self.x_star = np.median(self.points, axis=0)
        self.g_inf_bound = 1.0
        self.f_star = self.mean_loss(self.x_star)

    @classmethod
    def from_seed(cls, dim: int, num_points: int, seed: int, spread: float = 1.0):
        rng = make_rng(seed)
        return cls(rng.uniform(-spread, spread, size=(num_points, dim)))

    def presample(self, rng, count: int) -> np.ndarray:
        return rng.integers(0, self.num_samples, size=count, dtype=np.int64)

    def sample(self, rng) -> int:
        return int(self.presample(rng, 1)[0])

    def loss(self, x, i: int) -> float:
        return float(np.sum(np.abs(x - self.points[i])))

    def grad(self, x, i: int) -> np.ndarray:
        # subgradient 0 at kinks (x_d == xi_d)
        return np.sign(x - self.points[i])

    def mean_loss(self, x) -> float:
        return float(np.mean(np.sum(np.abs(x[None, :] - self.points), axis=1)))

    def near_kink(self, x, i: int, h: float) -> np.ndarray:
        return np.abs(x - self.points[i]) <= 10.0 * h


class StochasticQuadratic:
    """f(x, xi) = 0.5*||x - xi||^2 over a finite point set; x* is the mean.
    No global gradient bound exists."""

    emits_sparse = False
    domain = None
    g_inf_bound = None

    def __init__(self, points):
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self.num_samples, self.dim = self.points.shape
        self.x_star = np.mean(self.points, axis=0)
        self.f_star = self.mean_loss(self.x_star)

    @classmethod
    def from_seed(cls, dim: int, num_points: int, seed: int, spread: float = 1.0):
        rng = make_rng(seed)
        return cls(rng.uniform(-spread, spread, size=(num_points, dim)))

    def presample(self, rng, count: int) -> np.ndarray:
        return rng.integers(0, self.num_samples, size=count, dtype=np.int64)

    def sample(self, rng) -> int:
        return int(self.presample(rng, 1)[0])

    def loss(self, x, i: int) -> float:
        d = x - self.points[i]
        return 0.5 * float(d @ d)

    def grad(self, x, i: int) -> np.ndarray:
        return x - self.points[i]

    def mean_loss(self, x) -> float:
        d = x[None, :] - self.points
        return 0.5 * float(np.mean(np.sum(d * d, axis=1)))


class SyntheticLogistic:
    """Mean logistic loss on seeded Gaussian features with a planted,
    noisily-labeled separator.  The reference optimum is solved once (at
    fixture build time) by a deterministic high-accuracy solver."""

    emits_sparse = False
    domain = None

    def __init__(self, features, labels, x_star, seed: int = -1):
        self.features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        self.labels = as_vector(labels)
        if set(np.unique(self.labels)) - {-1.0, 1.0}:
            raise ValueError("labels must be +1/-1")
        self.num_samples, self.dim = self.features.shape
        self.x_star = as_vector(x_star, self.dim)
        self.seed = seed
        self.g_inf_bound = float(np.max(np.abs(self.features)))
        self.f_star = self.mean_loss(self.x_star)

    @classmethod
    def from_seed(cls, dim: int, num_samples: int, seed: int, label_flip: float = 0.1):
        rng = make_rng(seed)
        features = rng.normal(size=(num_samples, dim))
        planted = rng.normal(size=dim)
        labels = np.where(features @ planted >= 0.0, 1.0, -1.0)
        flips = rng.random(num_samples) < label_flip
        labels[flips] *= -1.0
        x_star = _solve_logistic(features, labels)
        return cls(features, labels, x_star, seed=seed)

    def presample(self, rng, count: int) -> np.ndarray:
        return rng.integers(0, self.num_samples, size=count, dtype=np.int64)

    def sample(self, rng) -> int:
        return int(self.presample(rng, 1)[0])

    def loss(self, x, i: int) -> float:
        return _logistic_loss_grad(self.features[i], self.labels[i], x)[0]

    def grad(self, x, i: int) -> np.ndarray:
        return _logistic_loss_grad(self.features[i], self.labels[i], x)[1]

    def mean_loss(self, x) -> float:
        z = self.labels * (self.features @ x)
        return float(np.mean(np.logaddexp(0.0, -z)))


class AdamStress:
    """Alternating-linear online problem on the box [-1, 1]^D.

    With probability ``(1 + slope)/(big + 1)`` the sample loss is
    ``big * sum(x)``, otherwise ``-sum(x)``, so the expectation is
    ``slope * sum(x)`` and the box optimum sits at -1 in every coordinate.
    Demonstration problem: rare large gradients push exponential-moving-
    average methods the wrong way.
    """

    emits_sparse = False

    def __init__(self, dim: int = 1, big: float = 3.0, slope: float = 0.01):
        if big <= 1.0 or not 0.0 < slope < 1.0:
            raise ValueError("need big > 1 and slope in (0, 1)")
        self.dim = dim
        self.big = float(big)
        self.slope = float(slope)
        self.p_big = (1.0 + slope) / (big + 1.0)
        self.num_samples = 2
        self.x_star = -np.ones(dim)
        self.f_star = -slope * dim
        self.g_inf_bound = self.big
        self.domain = (-1.0, 1.0)

    def presample(self, rng, count: int) -> np.ndarray:
        return (rng.random(count) < self.p_big).astype(np.int64)

    def sample(self, rng) -> int:
        return int(self.presample(rng, 1)[0])

    def _coeff(self, i: int) -> float:
        return self.big if i == 1 else -1.0

    def loss(self, x, i: int) -> float:
        return self._coeff(i) * float(np.sum(x))

    def grad(self, x, i: int) -> np.ndarray:
        return np.full(self.dim, self._coeff(i))

    def mean_loss(self, x) -> float:
        return self.slope * float(np.sum(x))


class SparseBagOfWords:
    """Logistic loss on sparse count features; gradients are emitted sparse
    with support equal to the sample's feature set."""

    emits_sparse = True
    domain = None

    def __init__(self, dim: int, doc_indices, doc_values, labels):
        self.dim = dim
        self.doc_indices = [np.asarray(ix, dtype=np.int64) for ix in doc_indices]
        self.doc_values = [np.asarray(v, dtype=np.float64) for v in doc_values]
        self.labels = as_vector(labels)
        self.num_samples = len(self.doc_indices)
        self.g_inf_bound = float(max(np.max(np.abs(v)) for v in self.doc_values))

    @classmethod
    def from_seed(cls, dim: int, num_docs: int, nnz: int, seed: int,
                  label_flip: float = 0.05):
        rng = make_rng(seed)
        planted = rng.normal(size=dim)
        idxs, vals, labels = [], [], []
        for _ in range(num_docs):
            ix = np.sort(rng.choice(dim, size=nnz, replace=False)).astype(np.int64)
            v = rng.integers(1, 4, size=nnz).astype(np.float64)
            z = float(v @ planted[ix])
            y = 1.0 if z >= 0.0 else -1.0
            if rng.random() < label_flip:
                y = -y
            idxs.append(ix)
            vals.append(v)
            labels.append(y)
        return cls(dim, idxs, vals, labels)

    def presample(self, rng, count: int) -> np.ndarray:
        return rng.integers(0, self.num_samples, size=count, dtype=np.int64)

    def sample(self, rng) -> int:
        return int(self.presample(rng, 1)[0])

    def _margin(self, x, i: int) -> float:
        ix, v = self.doc_indices[i], self.doc_values[i]
        return self.labels[i] * float(v @ x[ix])

    def loss(self, x, i: int) -> float:
        return float(np.logaddexp(0.0, -self._margin(x, i)))

    def grad(self, x, i: int) -> SparseGrad:
        ix, v = self.doc_indices[i], self.doc_values[i]
        gfac = -self.labels[i] * float(expit(-self._margin(x, i)))
        return sparse_grad(ix, gfac * v, self.dim)

    def mean_loss(self, x) -> float:
        total = 0.0
        for i in range(self.num_samples):
            total += np.logaddexp(0.0, -self._margin(x, i))
        return float(total / self.num_samples)

    def _dense_features(self) -> np.ndarray:
        dense = np.zeros((self.num_samples, self.dim))
        for i, (ix, v) in enumerate(zip(self.doc_indices, self.doc_values)):
            dense[i, ix] = v
        return dense

    @functools.cached_property
    def x_star(self) -> np.ndarray:
        return _solve_logistic(self._dense_features(), self.labels)

    @functools.cached_property
    def f_star(self) -> float:
        return self.mean_loss(self.x_star)


def suboptimality(problem, x) -> float:
    """Exact expected loss gap F(x) - F(x*) for a problem with known optimum."""
    x = as_vector(x, problem.dim)
    return problem.mean_loss(x) - problem.f_star


def finite_diff_check(problem, x, xi: int, h: float) -> float:
    """Max relative error of the gradient oracle vs central differences.

    ``h`` must lie in [1e-8, 1e-3].  Coordinates flagged by the problem as
    lying within a kink neighbourhood of a non-smooth loss are skipped.
    Relative error is measured against max(1, |g_d|).
    """
    if not 1e-8 <= h <= 1e-3:
        raise ValueError("h must be in [1e-8, 1e-3]")
    x = as_vector(x, problem.dim)
    g = to_dense(problem.grad(x, xi), problem.dim)
    skip = None
    if hasattr(problem, "near_kink"):
        skip = problem.near_kink(x, xi, h)
    worst = 0.0
    for d in range(problem.dim):
        if skip is not None and skip[d]:
            continue
        xp = x.copy()
        xm = x.copy()
        xp[d] += h
        xm[d] -= h
        fd = (problem.loss(xp, xi) - problem.loss(xm, xi)) / (2.0 * h)
        worst = max(worst, abs(fd - g[d]) / max(1.0, abs(g[d])))
    return worst


# ---------------------------------------------------------------------------
# fixture files for the synthetic logistic problem
# ---------------------------------------------------------------------------

_FIXTURE_MAGIC = "# dagrad synthetic logistic fixture"


def write_logistic_fixture(problem: SyntheticLogistic, path) -> None:
    """Write a plain-text fixture: a magic line, a header line naming
    ``D=<dim> n=<count> seed=<seed>``, the reference optimum, then one
    whitespace-separated row per sample (features then +1/-1 label)."""
    lines = [_FIXTURE_MAGIC,
             f"D={problem.dim} n={problem.num_samples} seed={problem.seed}",
             "x_star: " + " ".join(repr(float(v)) for v in problem.x_star)]
    for a, y in zip(problem.features, problem.labels):
        lines.append(" ".join(repr(float(v)) for v in a) + f" {int(y)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_logistic_fixture(path) -> SyntheticLogistic:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != _FIXTURE_MAGIC:
        raise ValueError(f"{path} is not a logistic fixture")
    header = dict(item.split("=") for item in lines[1].split())
    dim, n, seed = int(header["D"]), int(header["n"]), int(header["seed"])
    if not lines[2].startswith("x_star:"):
        raise ValueError("fixture missing x_star line")
    x_star = np.array([float(t) for t in lines[2].split()[1:]])
    rows = [[float(t) for t in ln.split()] for ln in lines[3:3 + n]]
    data = np.array(rows)
    if data.shape != (n, dim + 1):
        raise ValueError("fixture rows do not match header dimensions")
    return SyntheticLogistic(data[:, :dim], data[:, dim], x_star, seed=seed)


def packaged_fixture_path(name: str = "synthetic_logistic_d10_n200_s7.txt") -> Path:
    return Path(__file__).parent / "fixtures" / name


PROBLEM_BUILDERS = {
    "l1_median": L1Median,
    "quadratic": StochasticQuadratic,
    "logistic": SyntheticLogistic,
    "adam_stress": AdamStress,
    "sparse_bow": SparseBagOfWords,
}
