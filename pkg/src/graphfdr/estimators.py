"""Edge-weight estimators, edge p-values and confidence bounds.

Two models are covered. For a Gaussian graphical model the edge weight is
the precision-matrix entry, estimated by a debiased graphical lasso
(two-sided scenario). For a ferromagnetic Ising model the edge weight is
``E[X_u X_v] - tanh(theta)``, estimated by the empirical second moment
(one-sided scenario).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from scipy import special

from .errors import DegenerateDenominator, DegenerateVariance, NonConvergence
from .graph import Edge, Scenario

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 200
# floor on a strictly positive sigma before dividing (sigma^2 >= 1e-12)
SIGMA_FLOOR = 1e-6


def normal_cdf(x):
    """Standard normal CDF."""
    return special.ndtr(x)


def normal_sf(x):
    """Upper tail ``1 - Phi(x)`` without cancellation for large ``x``."""
    return special.ndtr(np.negative(x, dtype=float))


def normal_quantile(p):
    """Inverse of :func:`normal_cdf`; ``p`` must lie strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError(f"normal_quantile requires 0 < p < 1, got {p!r}")
    out = special.ndtri(arr)
    return float(out) if np.ndim(p) == 0 else out


@dataclass(frozen=True)
class EdgeStatistics:
    """Per-edge weight estimates and standard deviations.

    ``what`` and ``sigma_hat`` are symmetric ``d x d`` arrays whose diagonal
    is unused and set to zero. ``n`` is the sample size entering the
    ``sqrt(n)`` scaling of every test statistic.
    """

    what: np.ndarray
    sigma_hat: np.ndarray
    n: int
    scenario: Scenario

    def __post_init__(self):
        what = np.array(self.what, dtype=float)
        sig = np.array(self.sigma_hat, dtype=float)
        if what.shape != sig.shape or what.ndim != 2 or what.shape[0] != what.shape[1]:
            raise ValueError("what and sigma_hat must be matching square matrices")
        if not (np.allclose(what, what.T, rtol=0, atol=1e-12) and np.allclose(sig, sig.T, rtol=0, atol=1e-12)):
            raise ValueError("edge statistics must be symmetric")
        if np.any(sig < 0):
            raise ValueError("sigma_hat must be nonnegative")
        np.fill_diagonal(what, 0.0)
        np.fill_diagonal(sig, 0.0)
        what.setflags(write=False)
        sig.setflags(write=False)
        object.__setattr__(self, "what", what)
        object.__setattr__(self, "sigma_hat", sig)
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario))
        if int(self.n) < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "n", int(self.n))

    @property
    def d(self) -> int:
        return self.what.shape[0]

    def zscores(self, mu: float = 0.0) -> np.ndarray:
        """Matrix of ``sqrt(n) * W_e(mu) / sigma_e`` (inf/nan where sigma is 0)."""
        w = np.abs(self.what) if self.scenario is Scenario.TWO_SIDED else self.what
        with np.errstate(divide="ignore", invalid="ignore"):
            return math.sqrt(self.n) * (w - mu) / self.sigma_hat

    def pvalue_matrix(self, mu: float = 0.0, degenerate: str = "one") -> np.ndarray:
        """Filtered p-values for every pair at level ``mu``.

        Pairs with ``sigma_hat == 0`` get p = 1 when ``degenerate="one"`` and
        raise :class:`DegenerateVariance` when ``degenerate="raise"``.
        """
        zero = self.sigma_hat == 0
        np.fill_diagonal(zero, False)
        if zero.any() and degenerate == "raise":
            u, v = np.argwhere(np.triu(zero, 1))[0]
            raise DegenerateVariance(f"zero standard deviation on edge ({u}, {v})", (int(u), int(v)))
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.abs(self.what) if self.scenario is Scenario.TWO_SIDED else self.what
            z = math.sqrt(self.n) * (w - mu) / np.maximum(self.sigma_hat, SIGMA_FLOOR)
        if self.scenario is Scenario.TWO_SIDED:
            p = 2.0 * special.ndtr(-z)
        else:
            p = special.ndtr(-z)
        p = np.clip(np.nan_to_num(p, nan=1.0), 0.0, 1.0)
        p[zero] = 1.0
        np.fill_diagonal(p, 1.0)
        return p

    def degenerate_pairs(self) -> list[Edge]:
        iu, ju = np.nonzero(np.triu(self.sigma_hat == 0, k=1))
        return list(zip(iu.tolist(), ju.tolist()))


def _check_sigma(stats: EdgeStatistics, e: Edge) -> float:
    u, v = e
    s = float(stats.sigma_hat[u, v])
    if s == 0.0:
        raise DegenerateVariance(f"zero standard deviation on edge ({u}, {v})", (u, v))
    return max(s, SIGMA_FLOOR)


def edge_pvalue(stats: EdgeStatistics, e: Edge) -> float:
    """Unfiltered p-value of edge ``e``.

    Two-sided: ``2 - 2 Phi(|sqrt(n) W / sigma|)``; one-sided:
    ``1 - Phi(sqrt(n) W / sigma)``.
    """
    u, v = e
    s = _check_sigma(stats, e)
    z = math.sqrt(stats.n) * float(stats.what[u, v]) / s
    if stats.scenario is Scenario.TWO_SIDED:
        p = 2.0 * float(normal_sf(abs(z)))
    else:
        p = float(normal_sf(z))
    return min(1.0, max(0.0, p))


def filtered_pvalue(stats: EdgeStatistics, e: Edge, mu: float) -> float:
    """p-value for the hypothesis that the edge weight does not exceed ``mu``.

    The two-sided raw value ``2 - 2 Phi(z)`` exceeds one when ``|W| < mu``;
    it is clamped to [0, 1].
    """
    u, v = e
    s = _check_sigma(stats, e)
    w = float(stats.what[u, v])
    if stats.scenario is Scenario.TWO_SIDED:
        z = math.sqrt(stats.n) * (abs(w) - mu) / s
        p = 2.0 * float(normal_sf(z))
    else:
        z = math.sqrt(stats.n) * (w - mu) / s
        p = float(normal_sf(z))
    return min(1.0, max(0.0, p))


def lower_conf_bound(stats: EdgeStatistics, e: Edge, alpha: float) -> float:
    """One-sided lower confidence bound ``W - Phi^{-1}(1 - alpha) sigma / sqrt(n)``.

    Uses ``|W|`` in the two-sided scenario. How ``alpha`` is split between
    tails is left to the caller.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    u, v = e
    s = _check_sigma(stats, e)
    w = float(stats.what[u, v])
    if stats.scenario is Scenario.TWO_SIDED:
        w = abs(w)
    # Phi^{-1}(1 - alpha) = -Phi^{-1}(alpha), exact for tiny alpha
    return w + normal_quantile(alpha) * s / math.sqrt(stats.n)


def sample_covariance(X) -> np.ndarray:
    """Uncentered second-moment matrix ``X^T X / n`` (the model has mean zero)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be an n x d matrix with n >= 1")
    return X.T @ X / X.shape[0]


@numba.njit(cache=True)
def _glasso_bcd(S, lam, tol, max_iter):
    d = S.shape[0]
    W = S.copy()
    B = np.zeros((d, d))
    idx = np.empty(d - 1, dtype=np.int64)
    n_iter = 0
    converged = False
    for sweep in range(max_iter):
        n_iter = sweep + 1
        W_old = W.copy()
        for j in range(d):
            c = 0
            for k in range(d):
                if k != j:
                    idx[c] = k
                    c += 1
            beta = np.empty(d - 1)
            for a in range(d - 1):
                beta[a] = B[j, idx[a]]
            # lasso: min 0.5 b'W11 b - s12'b + lam |b|_1, coordinate descent
            for inner in range(1000):
                dmax = 0.0
                for a in range(d - 1):
                    ka = idx[a]
                    r = S[ka, j]
                    for b in range(d - 1):
                        if b != a:
                            r -= W[ka, idx[b]] * beta[b]
                    if r > lam:
                        new = (r - lam) / W[ka, ka]
                    elif r < -lam:
                        new = (r + lam) / W[ka, ka]
                    else:
                        new = 0.0
                    diff = abs(new - beta[a])
                    if diff > dmax:
                        dmax = diff
                    beta[a] = new
                if dmax < tol * 1e-2:
                    break
            for a in range(d - 1):
                B[j, idx[a]] = beta[a]
                s = 0.0
                for b in range(d - 1):
                    s += W[idx[a], idx[b]] * beta[b]
                W[idx[a], j] = s
                W[j, idx[a]] = s
        change = np.max(np.abs(W - W_old))
        if change < tol:
            converged = True
            break
    Theta = np.zeros((d, d))
    for j in range(d):
        s = 0.0
        for k in range(d):
            if k != j:
                s += W[j, k] * B[j, k]
        t22 = 1.0 / (W[j, j] - s)
        Theta[j, j] = t22
        for k in range(d):
            if k != j:
                Theta[k, j] = -B[j, k] * t22
    return Theta, n_iter, converged


def graphical_lasso(S, lam: float, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Sparse precision estimate by block coordinate descent.

    Minimizes ``-logdet(Theta) + tr(S Theta) + lam * sum_{i != j} |Theta_ij|``.
    Only off-diagonal entries are penalized, so the working covariance keeps
    the diagonal of ``S``. Emits :class:`NonConvergence` (a warning) if
    ``max_iter`` sweeps do not bring the sweep-to-sweep change of the working
    covariance below ``tol``; the estimate is returned either way.

    Parameters
    ----------
    S : array, shape (d, d)
        Symmetric covariance matrix.
    lam : float
        Off-diagonal l1 penalty, ``lam >= 0``.

    Returns
    -------
    theta : array, shape (d, d)
        Symmetric precision estimate.
    """
    S = np.ascontiguousarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be square")
    if not np.allclose(S, S.T, rtol=0, atol=1e-10):
        raise ValueError("S must be symmetric")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    diag = np.diag(S)
    if np.any(diag <= 1e-12):
        j = int(np.argmin(diag))
        raise DegenerateDenominator(f"covariance diagonal vanishes at coordinate {j}")
    d = S.shape[0]
    if d == 1:
        return np.array([[1.0 / S[0, 0]]])
    theta, n_iter, converged = _glasso_bcd(S, float(lam), float(tol), int(max_iter))
    if not converged:
        warnings.warn(f"graphical lasso stopped after {n_iter} sweeps without reaching tol={tol}", NonConvergence, stacklevel=2)
    if not np.all(np.isfinite(theta)):
        raise DegenerateDenominator("graphical lasso produced a non-finite estimate (singular covariance)")
    return (theta + theta.T) / 2.0


LAMBDA_SCALE = 0.1


def default_lambda(d: int, n: int, scale: float = 1.0) -> float:
    """``0.1 * scale * sqrt(log d / n)``.

    ``scale`` should be the typical variance (``ggm_edge_statistics`` uses
    the mean of ``diag(S)``) so the penalty rescales with the data, as the
    glasso solution does. The small constant keeps shrinkage light, leaving
    little for the debiasing step to undo.
    """
    return LAMBDA_SCALE * scale * math.sqrt(math.log(d) / n) if d > 1 else 0.0


@dataclass(frozen=True)
class PrecisionEstimate:
    """Graphical-lasso fit together with its one-step debiased correction."""

    theta_hat: np.ndarray
    theta_d: np.ndarray
    sigma_hat: np.ndarray
    sample_cov: np.ndarray

    def edge_statistics(self, n: int) -> EdgeStatistics:
        sym = (self.theta_d + self.theta_d.T) / 2.0
        return EdgeStatistics(sym, self.sigma_hat, n, Scenario.TWO_SIDED)


def debias(theta_hat, sample_cov) -> PrecisionEstimate:
    """One-step bias correction of a precision estimate.

    ``Td[u, v] = T[u, v] - T[:, u] @ (S @ T[:, v] - e_v) / (T[:, u] @ S[:, u])``.
    The standard deviation uses the symmetrized ``Td``:
    ``sigma[u, v] = sqrt(Td[u, u] Td[v, v] + Td[u, v]^2)``.
    """
    T = np.asarray(theta_hat, dtype=float)
    S = np.asarray(sample_cov, dtype=float)
    d = T.shape[0]
    denom = np.einsum("iu,iu->u", T, S)
    bad = np.abs(denom) < 1e-12
    if bad.any():
        raise DegenerateDenominator(f"debiasing denominator vanishes at coordinate {int(np.argmax(bad))}")
    resid = S @ T - np.eye(d)
    correction = (T.T @ resid) / denom[:, None]
    theta_d = T - correction
    sym = (theta_d + theta_d.T) / 2.0
    dg = np.diag(sym)
    var = np.outer(dg, dg) + sym**2
    sigma = np.sqrt(np.maximum(var, 0.0))
    np.fill_diagonal(sigma, 0.0)
    return PrecisionEstimate(theta_hat=T, theta_d=theta_d, sigma_hat=sigma, sample_cov=S)


def ggm_edge_statistics(X, lam: float | None = None, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> EdgeStatistics:
    """Debiased graphical-lasso edge statistics for Gaussian data (two-sided)."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two samples")
    S = sample_covariance(X)
    if lam is None:
        lam = default_lambda(d, n, float(np.mean(np.diag(S))))
    theta = graphical_lasso(S, lam, tol=tol, max_iter=max_iter)
    return debias(theta, S).edge_statistics(n)


def ising_edge_statistics(X, theta: float) -> EdgeStatistics:
    """Second-moment edge statistics for +-1 data (one-sided).

    ``W[u, v] = mean(X_u X_v) - tanh(theta)`` and
    ``sigma[u, v] = sqrt(1 - mean(X_u X_v)^2)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an n x d matrix with n >= 2")
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    bad = np.argwhere((X != 1) & (X != -1))
    if bad.size:
        i, j = bad[0]
        raise ValueError(f"non-±1 entry at row {i}, col {j}")
    n, d = X.shape
    m = X.T @ X / n
    np.fill_diagonal(m, 0.0)
    var = 1.0 - m**2
    off = ~np.eye(d, dtype=bool)
    deg = np.argwhere(np.triu(off & (np.abs(m) >= 1.0), 1))
    if deg.size:
        u, v = (int(x) for x in deg[0])
        raise DegenerateVariance(f"columns {u} and {v} are perfectly (anti)correlated", (u, v))
    what = m - math.tanh(theta)
    np.fill_diagonal(what, 0.0)
    sigma = np.sqrt(np.maximum(var, 0.0))
    np.fill_diagonal(sigma, 0.0)
    return EdgeStatistics(what, sigma, n, Scenario.ONE_SIDED)
