"""Repeated density estimation: clr transform, functional PCA, and the
approximating exponential family fitted by natural-parameter MLE.

Training densities from past rounds are mapped into a linear space by the
centered log-ratio transform; functional PCA of those curves yields a mean
curve and K eigencurves, which become the carrier and sufficient statistics
of an exponential family. A new round's density is then estimated by
maximizing the family's concave log-likelihood in the K-dimensional natural
parameter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grids import DensityEstimate, GridFunction, SupportGrid, trapezoid_integral
from .kde import EstimationError

DEFAULT_CLR_FLOOR = 1e-6
DEFAULT_VARIANCE_THRESHOLD = 0.99
DEFAULT_K_MAX = 10

_GRAD_TOL = 1e-8
_NEWTON_MAX_ITER = 100
_FALLBACK_MAX_ITER = 5000
_HESSIAN_COND_LIMIT = 1e12


class MleConvergenceError(EstimationError):
    """Natural-parameter MLE failed to converge, even after fallback."""

    def __init__(self, message: str, theta: np.ndarray, grad_norm: float):
        super().__init__(message)
        self.theta = theta
        self.grad_norm = grad_norm


@dataclass(frozen=True, eq=False)
class ClrCurve:
    """Centered log-ratio transform of a density: integrates to zero."""

    g: GridFunction

    def __post_init__(self):
        total = trapezoid_integral(self.g)
        if abs(total) > 1e-6:
            raise ValueError(f"clr curve integrates to {total!r}, expected 0")

    @property
    def grid(self) -> SupportGrid:
        return self.g.grid


@dataclass(frozen=True, eq=False)
class ExpFamilyModel:
    """Approximating exponential family: mean curve plus K eigencurves.

    Eigencurves are orthonormal under the trapezoidal inner product and
    eigenvalues are sorted nonincreasing. Immutable; safe to share across
    concurrent fits.
    """

    mu: GridFunction
    eigencurves: list[GridFunction] = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvalues", vals)
        if len(self.eigencurves) != vals.size:
            raise ValueError("one eigenvalue per eigencurve required")
        if len(self.eigencurves) == 0:
            raise ValueError("model needs at least one eigencurve")
        if (np.diff(vals) > 1e-12).any():
            raise ValueError("eigenvalues must be sorted nonincreasing")

    @property
    def K(self) -> int:
        return len(self.eigencurves)

    @property
    def grid(self) -> SupportGrid:
        return self.mu.grid

    def phi_matrix(self) -> np.ndarray:
        """Eigencurve values stacked as a (K, n_points) array."""
        return np.stack([c.values for c in self.eigencurves])


def clr_transform(f: DensityEstimate, floor: float = DEFAULT_CLR_FLOOR) -> ClrCurve:
    """log density, floored at `floor` and centered to integrate to zero."""
    if floor <= 0:
        raise ValueError("clr floor must be positive")
    grid = f.grid
    logf = np.log(np.maximum(f.f.values, floor))
    mean = trapezoid_integral(GridFunction(grid, logf)) / (grid.hi - grid.lo)
    return ClrCurve(GridFunction(grid, logf - mean))


def fpca(
    curves: list[ClrCurve],
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD,
    k_max: int = DEFAULT_K_MAX,
) -> ExpFamilyModel:
    """Functional PCA of clr curves on their common grid.

    The covariance operator is discretized with trapezoidal quadrature
    weights and symmetrized before the eigendecomposition, so eigencurves
    come out orthonormal under the weighted inner product. K is the smallest
    number of leading components whose eigenvalue mass reaches
    `variance_threshold`, capped at `k_max`. Signs are fixed so each
    eigencurve has nonnegative inner product with the first curve's centered
    residual.
    """
    if len(curves) < 2:
        raise ValueError(f"fpca needs at least 2 curves, got {len(curves)}")
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError("variance_threshold must be in (0, 1]")
    if k_max < 1:
        raise ValueError("k_max must be positive")
    grid = curves[0].grid
    for c in curves[1:]:
        if c.grid != grid:
            raise ValueError("all curves must share one grid")

    data = np.stack([c.g.values for c in curves])
    mu = data.mean(axis=0)
    resid = data - mu

    w = grid.trapezoid_weights
    sqrt_w = np.sqrt(w)
    cov = resid.T @ resid / len(curves)
    sym = sqrt_w[:, None] * cov * sqrt_w[None, :]
    eigvals, eigvecs = np.linalg.eigh(sym)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]

    total = eigvals.sum()
    if total <= 0.0:
        k = 1  # degenerate: all curves identical
    else:
        frac = np.cumsum(eigvals) / total
        k = int(np.searchsorted(frac, variance_threshold - 1e-12) + 1)
    k = min(k, k_max, len(eigvals))

    first_resid = resid[0]
    eigencurves = []
    for j in range(k):
        phi = eigvecs[:, j] / sqrt_w
        if float(np.sum(w * phi * first_resid)) < 0.0:
            phi = -phi
        eigencurves.append(GridFunction(grid, phi))
    return ExpFamilyModel(mu=GridFunction(grid, mu), eigencurves=eigencurves, eigenvalues=eigvals[:k])


def _exponent(model: ExpFamilyModel, theta: np.ndarray) -> np.ndarray:
    return model.mu.values + theta @ model.phi_matrix()


def log_partition(model: ExpFamilyModel, theta: np.ndarray) -> float:
    """log integral of exp(mu + theta . phi), stabilized by max subtraction."""
    theta = _check_theta(model, theta)
    a = _exponent(model, theta)
    amax = float(a.max())
    w = model.grid.trapezoid_weights
    return amax + float(np.log(np.sum(w * np.exp(a - amax))))


def family_density(model: ExpFamilyModel, theta: np.ndarray) -> DensityEstimate:
    """Family member exp(mu + theta . phi - B(theta)) as a valid density."""
    theta = _check_theta(model, theta)
    a = _exponent(model, theta)
    vals = np.exp(a - log_partition(model, theta))
    g = GridFunction(model.grid, vals)
    return DensityEstimate(GridFunction(model.grid, vals / trapezoid_integral(g)))


def _check_theta(model: ExpFamilyModel, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (model.K,):
        raise ValueError(f"theta must have length K={model.K}, got shape {theta.shape}")
    return theta


def _moments(model: ExpFamilyModel, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of the eigencurves under f_theta."""
    phi = model.phi_matrix()
    f = family_density(model, theta).f.values
    w = model.grid.trapezoid_weights * f
    mean = phi @ w
    second = (phi * w) @ phi.T
    return mean, second - np.outer(mean, mean)


def mle_objective(model: ExpFamilyModel, theta: np.ndarray, suff_mean: np.ndarray) -> float:
    """Concave log-likelihood-per-bid: theta . s_bar - B(theta)."""
    theta = _check_theta(model, theta)
    return float(theta @ suff_mean - log_partition(model, theta))


def sufficient_means(model: ExpFamilyModel, samples: np.ndarray) -> np.ndarray:
    """Sample means of each eigencurve at the bids (linear interpolation)."""
    samples = np.asarray(samples, dtype=float)
    pts = model.grid.points
    return np.array([np.mean(np.interp(samples, pts, c.values)) for c in model.eigencurves])


def fit_theta_mle(samples: np.ndarray, model: ExpFamilyModel) -> np.ndarray:
    """Maximize theta . s_bar - B(theta) by damped Newton from zero.

    Falls back to backtracking gradient ascent when the Hessian is
    ill-conditioned; raises MleConvergenceError (carrying the last iterate
    and gradient norm) if that also fails to converge.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EstimationError("fit_theta_mle needs at least one sample")
    grid = model.grid
    if samples.min() < grid.lo or samples.max() > grid.hi:
        raise EstimationError(
            f"samples outside grid support [{grid.lo}, {grid.hi}]"
        )
    s_bar = sufficient_means(model, samples)

    theta = np.zeros(model.K)
    value = mle_objective(model, theta, s_bar)
    for _ in range(_NEWTON_MAX_ITER):
        mean, cov = _moments(model, theta)
        grad = s_bar - mean
        if np.max(np.abs(grad)) < _GRAD_TOL:
            return theta
        try:
            if np.linalg.cond(cov) > _HESSIAN_COND_LIMIT:
                break
            step = np.linalg.solve(cov, grad)
        except np.linalg.LinAlgError:
            break
        # Damping: halve until the concave objective improves.
        scale = 1.0
        for _ in range(60):
            candidate = theta + scale * step
            cand_value = mle_objective(model, candidate, s_bar)
            if cand_value >= value:
                break
            scale *= 0.5
        else:
            break
        theta, value = candidate, cand_value
    else:
        mean, _ = _moments(model, theta)
        grad = s_bar - mean
        if np.max(np.abs(grad)) < _GRAD_TOL:
            return theta
    return _gradient_ascent(model, theta, s_bar)


def _gradient_ascent(model: ExpFamilyModel, theta: np.ndarray, s_bar: np.ndarray) -> np.ndarray:
    value = mle_objective(model, theta, s_bar)
    step = 1.0
    grad_norm = np.inf
    for _ in range(_FALLBACK_MAX_ITER):
        mean, _ = _moments(model, theta)
        grad = s_bar - mean
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < _GRAD_TOL:
            return theta
        scale = step
        for _ in range(60):
            candidate = theta + scale * grad
            cand_value = mle_objective(model, candidate, s_bar)
            if cand_value > value:
                break
            scale *= 0.5
        else:
            break
        theta, value = candidate, cand_value
        step = min(scale * 2.0, 1e6)  # reuse the accepted scale, gently growing
    raise MleConvergenceError(
        f"natural-parameter MLE did not converge (gradient inf-norm {grad_norm:.3e})",
        theta=theta,
        grad_norm=grad_norm,
    )


def save_model(model: ExpFamilyModel, path) -> None:
    """Persist a model as self-describing JSON (exact float round-trip)."""
    grid = model.grid
    payload = {
        "grid": {"lo": grid.lo, "hi": grid.hi, "n_points": grid.n_points},
        "mu": model.mu.values.tolist(),
        "eigencurves": [c.values.tolist() for c in model.eigencurves],
        "eigenvalues": model.eigenvalues.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> ExpFamilyModel:
    with open(path) as fh:
        payload = json.load(fh)
    grid = SupportGrid(**payload["grid"])
    return ExpFamilyModel(
        mu=GridFunction(grid, np.array(payload["mu"])),
        eigencurves=[GridFunction(grid, np.array(c)) for c in payload["eigencurves"]],
        eigenvalues=np.array(payload["eigenvalues"]),
    )
