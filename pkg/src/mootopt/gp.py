"""Gaussian-process surrogate over labeled rows, with UCB / PI / EI.

Rows encode to fixed-length vectors (normalized numerics, one-hot
symbolics). The GP fits the scalarized target g = 1 - chebyshev so larger
is better and the acquisition formulas apply as maximizers. The kernel is
RBF with the signal variance pinned to the target variance; the length
scale comes from a small grid searched by log marginal likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import ndtr

from .data import Dataset, Row
from .objective import chebyshev

LENGTH_SCALE_GRID = (0.1, 0.3, 1.0, 3.0)
NOISE_VAR = 1e-6
JITTER_MAX = 1e-2
SIGNAL_VAR_FLOOR = 1e-12
POOL_CAP = 4096

KAPPA_DEFAULT = 2.0
EPSILON_DEFAULT = 0.01


class GpFitError(RuntimeError):
    """Kernel matrix could not be factorized even after jitter escalation."""


def encode_rows(ds: Dataset, rows: list[Row]) -> np.ndarray:
    """Encode rows as numeric vectors: norm values then one-hot blocks.

    Missing numerics sit at the 0.5 midpoint; a missing symbolic leaves
    its one-hot block all zero.
    """
    views = ds.x_views()
    ids = np.array([r.id for r in rows], dtype=np.int64)
    parts = []
    if views["num_pos"]:
        parts.append(np.nan_to_num(views["X_num"][ids], nan=0.5))
    for j, alphabet in enumerate(views["alphabets"]):
        codes = views["X_sym"][ids, j]
        block = np.zeros((len(ids), len(alphabet)))
        known = codes >= 0
        block[np.nonzero(known)[0], codes[known]] = 1.0
        parts.append(block)
    if not parts:
        return np.zeros((len(ids), 0))
    return np.hstack(parts)


def encode_row(ds: Dataset, row: Row) -> np.ndarray:
    return encode_rows(ds, [row])[0]


@dataclass
class GpModel:
    X: np.ndarray           # training inputs, one encoded row per line
    y_mean: float
    alpha: np.ndarray       # K^-1 (y - y_mean)
    L: np.ndarray           # Cholesky factor of K + jitter*I
    length_scale: float
    signal_var: float
    jitter: float
    log_marginal: float

    def predict_batch(self, Xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and sd at each query point (noise-free latent)."""
        ks = self.signal_var * np.exp(
            -cdist(Xs, self.X, "sqeuclidean") / (2.0 * self.length_scale ** 2))
        mu = self.y_mean + ks @ self.alpha
        v = solve_triangular(self.L, ks.T, lower=True)
        var = self.signal_var - np.einsum("ij,ij->j", v, v)
        return mu, np.sqrt(np.maximum(var, 0.0))

    def predict(self, x: np.ndarray) -> tuple[float, float]:
        mu, sigma = self.predict_batch(np.asarray(x, dtype=float).reshape(1, -1))
        return float(mu[0]), float(sigma[0])


def _try_fit(X: np.ndarray, y: np.ndarray, length_scale: float,
             signal_var: float) -> GpModel:
    n = len(y)
    y_mean = float(y.mean())
    yc = y - y_mean
    k = signal_var * np.exp(
        -cdist(X, X, "sqeuclidean") / (2.0 * length_scale ** 2))
    jitter = NOISE_VAR
    while True:
        try:
            L = np.linalg.cholesky(k + jitter * np.eye(n))
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > JITTER_MAX * (1.0 + 1e-12):
                raise GpFitError(
                    f"kernel factorization failed up to jitter {JITTER_MAX}") from None
    alpha = solve_triangular(
        L.T, solve_triangular(L, yc, lower=True), lower=False)
    lml = (-0.5 * float(yc @ alpha)
           - float(np.log(np.diag(L)).sum())
           - 0.5 * n * math.log(2.0 * math.pi))
    return GpModel(X=X, y_mean=y_mean, alpha=alpha, L=L,
                   length_scale=length_scale, signal_var=signal_var,
                   jitter=jitter, log_marginal=lml)


def fit(X: np.ndarray, y: np.ndarray, length_scale: float | None = None,
        grid: tuple[float, ...] = LENGTH_SCALE_GRID) -> GpModel:
    """Fit a GP to raw vectors/targets.

    With length_scale=None the grid is searched and the model with the
    highest log marginal likelihood wins (first winner on ties).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError(f"need at least 2 training points, got {len(y)}")
    signal_var = max(float(y.var()), SIGNAL_VAR_FLOOR)
    if length_scale is not None:
        return _try_fit(X, y, length_scale, signal_var)
    best = None
    for ls in grid:
        model = _try_fit(X, y, ls, signal_var)
        if best is None or model.log_marginal > best.log_marginal:
            best = model
    assert best is not None
    return best


def fit_gp(labeled: list[Row], ds: Dataset,
           length_scale: float | None = None) -> GpModel:
    """Fit the surrogate to labeled rows on the target g = 1 - chebyshev."""
    if len(labeled) < 2:
        raise ValueError(f"need at least 2 labeled rows, got {len(labeled)}")
    X = encode_rows(ds, labeled)
    g = np.array([1.0 - chebyshev(r, ds) for r in labeled])
    return fit(X, g, length_scale=length_scale)


def incumbent(labeled: list[Row], ds: Dataset) -> float:
    """Best scalarized objective among labeled rows (f* used by PI and EI)."""
    return max(1.0 - chebyshev(r, ds) for r in labeled)


def _phi(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def ucb(mu: float, sigma: float, kappa: float = KAPPA_DEFAULT) -> float:
    """Upper confidence bound mu + kappa * sigma."""
    return mu + kappa * sigma


def pi(mu: float, sigma: float, f_star: float,
       epsilon: float = EPSILON_DEFAULT) -> float:
    """Probability that a sample improves on the incumbent by epsilon."""
    d = mu - f_star - epsilon
    if sigma == 0.0:
        return 1.0 if d > 0.0 else 0.0
    return _cdf(d / sigma)


def ei(mu: float, sigma: float, f_star: float,
       epsilon: float = EPSILON_DEFAULT) -> float:
    """Expected improvement over the incumbent; exactly 0 when sigma is 0."""
    if sigma == 0.0:
        return 0.0
    d = mu - f_star - epsilon
    z = d / sigma
    return d * _cdf(z) + sigma * _phi(z)


GP_ACQUISITIONS = ("ucb", "pi", "ei")


def _scores(fn: str, mu: np.ndarray, sigma: np.ndarray, f_star: float,
            kappa: float, epsilon: float) -> np.ndarray:
    if fn == "ucb":
        return mu + kappa * sigma
    d = mu - f_star - epsilon
    safe = np.where(sigma > 0.0, sigma, 1.0)
    z = d / safe
    if fn == "pi":
        return np.where(sigma > 0.0, ndtr(z), (d > 0.0).astype(float))
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return np.where(sigma > 0.0, d * ndtr(z) + sigma * pdf, 0.0)


def acquire_gp(model: GpModel, f_star: float, pool: list[Row], fn: str,
               ds: Dataset, kappa: float = KAPPA_DEFAULT,
               epsilon: float = EPSILON_DEFAULT,
               rng=None, cap: int = POOL_CAP) -> Row:
    """Pick the candidate row maximizing the chosen acquisition.

    Pools larger than `cap` are thinned to a seeded uniform subsample so
    prediction stays tractable on the biggest tables. Ties break toward
    the lowest row id regardless of pool order.
    """
    if not pool:
        raise ValueError("cannot acquire from an empty pool")
    if fn not in GP_ACQUISITIONS:
        raise ValueError(f"unknown GP acquisition {fn!r}")
    candidates = sorted(pool, key=lambda r: r.id)
    if len(candidates) > cap:
        if rng is None:
            raise ValueError(f"pool of {len(candidates)} rows needs an rng to subsample")
        candidates = sorted(rng.sample(candidates, cap), key=lambda r: r.id)
    mu, sigma = model.predict_batch(encode_rows(ds, candidates))
    scores = _scores(fn, mu, sigma, f_star, kappa, epsilon)
    return candidates[int(np.argmax(scores))]
