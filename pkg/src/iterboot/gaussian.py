"""The exactly solvable generator/reward pair: isotropic Gaussian data
with an exponential reward.

The generator is N(theta, sigma2 * I_d) with a learnable mean and fixed
variance; the reward is exp(-||x||^2 / (2*kappa2)). Everything the
simulator needs about this pair has a closed form: the expected reward
of a parameter, its supremum, and the exact law of a reward-accepted
sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GaussianModel",
    "ExpReward",
    "sample",
    "reward",
    "expected_reward",
    "optimal_reward",
    "mle_update",
    "post_selection_params",
]


@dataclass
class GaussianModel:
    """N(theta, sigma2 * I_d). Only ``theta`` changes after construction,
    and only by wholesale replacement during a run."""

    theta: np.ndarray
    sigma2: float
    d: int = field(default=0)

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1).copy()
        if self.d == 0:
            object.__setattr__(self, "d", theta.size)
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if theta.size != self.d:
            raise ValueError(f"theta has {theta.size} coordinates, expected d={self.d}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2!r}")
        self.theta = theta


@dataclass(frozen=True)
class ExpReward:
    """R(x) = exp(-||x||^2 / (2*kappa2)); values lie in (0, 1]."""

    kappa2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa2) and self.kappa2 > 0):
            raise ValueError(f"kappa2 must be positive, got {self.kappa2!r}")


def sample(m: GaussianModel, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from N(theta, sigma2 * I_d).

    Returns a (d,) vector, or an (size, d) array when ``size`` is given.
    """
    scale = math.sqrt(m.sigma2)
    if size is None:
        return m.theta + scale * rng.standard_normal(m.d)
    return m.theta + scale * rng.standard_normal((size, m.d))


def reward(r: ExpReward, x: np.ndarray) -> float | np.ndarray:
    """Reward of a single (d,) sample or a batch of shape (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim <= 1:
        return float(np.exp(-0.5 * float(x @ x) / r.kappa2))
    return np.exp(-0.5 * np.einsum("ij,ij->i", x, x) / r.kappa2)


def expected_reward(m: GaussianModel, r: ExpReward) -> float:
    """E_{x ~ N(theta, sigma2 I_d)}[R(x)], in closed form:
    (1 + sigma2/kappa2)^(-d/2) * exp(-||theta||^2 / (2*(sigma2+kappa2)))."""
    rho = m.sigma2 / r.kappa2
    norm2 = float(m.theta @ m.theta)
    return (1.0 + rho) ** (-m.d / 2.0) * math.exp(-norm2 / (2.0 * (m.sigma2 + r.kappa2)))


def optimal_reward(d: int, sigma2: float, kappa2: float) -> float:
    """sup_theta of the expected reward, attained at theta = 0:
    (1 + sigma2/kappa2)^(-d/2)."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if sigma2 <= 0 or kappa2 <= 0:
        raise ValueError("sigma2 and kappa2 must be positive")
    return (1.0 + sigma2 / kappa2) ** (-d / 2.0)


def mle_update(D: np.ndarray) -> np.ndarray:
    """Maximum-likelihood mean update: the coordinate-wise sample mean.

    ``D`` is an (n, d) array of accepted samples; an empty batch is a
    schedule bug and raises.
    """
    D = np.asarray(D, dtype=np.float64)
    if D.ndim == 1:
        D = D.reshape(-1, 1)
    if D.shape[0] == 0:
        raise ValueError("mle_update needs a non-empty batch")
    return D.mean(axis=0)


def post_selection_params(m: GaussianModel, r: ExpReward) -> tuple[np.ndarray, float]:
    """Exact law of an accepted sample: reweighting N(theta, sigma2 I_d)
    by R gives N(theta/(1+rho), sigma2/(1+rho) * I_d) with rho = sigma2/kappa2."""
    rho = m.sigma2 / r.kappa2
    return m.theta / (1.0 + rho), m.sigma2 / (1.0 + rho)
