"""Loss-based model interface and the gradient-descent updater.

A :class:`LossModel` bundles the four behaviors the bootstrapping loop
needs from a trainable generator: per-sample loss, its gradient in the
parameters, sampling, and a reward in [0, 1]. :func:`gd_update` applies
one averaged gradient step; :class:`GaussianNll` is the Gaussian
negative-log-likelihood instance whose GD step with eta = sigma2
coincides exactly with the MLE mean update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from . import gaussian

__all__ = [
    "LossModel",
    "GdUpdater",
    "DivergenceError",
    "gd_update",
    "GaussianNll",
    "gaussian_nll",
    "check_gradient",
]


class DivergenceError(RuntimeError):
    """Raised when an update produces a non-finite parameter vector."""


@runtime_checkable
class LossModel(Protocol):
    """Behavior contract for loss-driven models.

    Implementations must be stateless apart from construction
    parameters so they can be shared freely across runs. ``loss`` is
    non-negative; ``grad`` must be the true gradient of ``loss`` in
    theta (checkable with :func:`check_gradient`). Models may
    additionally provide ``gd_step(theta, D, eta)`` with an
    algebraically equivalent but numerically preferable form of the
    averaged gradient step, and ``expected_reward(theta)`` when a
    closed form exists.
    """

    def loss(self, x: np.ndarray, theta: np.ndarray) -> float: ...

    def grad(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray: ...

    def sample(
        self, theta: np.ndarray, rng: np.random.Generator, size: int | None = None
    ) -> np.ndarray: ...

    def reward(self, x: np.ndarray) -> float | np.ndarray: ...


@dataclass(frozen=True)
class GdUpdater:
    """Plain gradient descent with a fixed learning rate."""

    eta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be positive, got {self.eta!r}")


def gd_update(
    theta: np.ndarray, D: np.ndarray, model: LossModel, upd: GdUpdater
) -> np.ndarray:
    """One averaged gradient step: theta - (eta/|D|) * sum_x grad(x, theta).

    Uses the model's own ``gd_step`` when it provides one. Raises
    ``ValueError`` on an empty batch and :class:`DivergenceError` when
    the step produces non-finite coordinates.
    """
    theta = np.asarray(theta, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if D.ndim == 1:
        D = D.reshape(-1, theta.size)
    if D.shape[0] == 0:
        raise ValueError("gd_update needs a non-empty batch")
    step = getattr(model, "gd_step", None)
    if step is not None:
        new = np.asarray(step(theta, D, upd.eta), dtype=np.float64)
    else:
        grads = np.stack([np.asarray(model.grad(x, theta), dtype=np.float64) for x in D])
        new = theta - upd.eta * grads.mean(axis=0)
    if not np.all(np.isfinite(new)):
        raise DivergenceError(f"gradient step produced non-finite theta: {new}")
    return new


@dataclass(frozen=True)
class GaussianNll:
    """Gaussian negative log-likelihood, constant term dropped:
    loss(x, theta) = ||x - theta||^2 / (2*sigma2), grad = (theta - x)/sigma2.

    Sampling and reward delegate to the Gaussian/exponential-reward
    pair, so a GD-driven run over this model explores exactly the same
    stochastic system as the MLE-driven one.
    """

    sigma2: float
    kappa2: float
    d: int

    def __post_init__(self) -> None:
        gaussian.ExpReward(self.kappa2)  # validates kappa2
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2!r}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")

    def loss(self, x: np.ndarray, theta: np.ndarray) -> float:
        diff = np.asarray(x, dtype=np.float64) - np.asarray(theta, dtype=np.float64)
        return float(diff @ diff) / (2.0 * self.sigma2)

    def grad(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return (np.asarray(theta, dtype=np.float64) - np.asarray(x, dtype=np.float64)) / self.sigma2

    def sample(
        self, theta: np.ndarray, rng: np.random.Generator, size: int | None = None
    ) -> np.ndarray:
        return gaussian.sample(gaussian.GaussianModel(theta, self.sigma2), rng, size)

    def reward(self, x: np.ndarray) -> float | np.ndarray:
        return gaussian.reward(gaussian.ExpReward(self.kappa2), x)

    def expected_reward(self, theta: np.ndarray) -> float:
        return gaussian.expected_reward(
            gaussian.GaussianModel(theta, self.sigma2), gaussian.ExpReward(self.kappa2)
        )

    def gd_step(self, theta: np.ndarray, D: np.ndarray, eta: float) -> np.ndarray:
        # (1-c)*theta + c*mean(D) with c = eta/sigma2 equals the averaged
        # gradient step exactly, and is bitwise mean(D) when eta == sigma2.
        c = eta / self.sigma2
        return (1.0 - c) * theta + c * D.mean(axis=0)


def gaussian_nll(sigma2: float, kappa2: float, d: int) -> GaussianNll:
    """Gaussian NLL loss model over N(theta, sigma2 I_d) with the
    exponential reward of flatness kappa2."""
    return GaussianNll(sigma2=sigma2, kappa2=kappa2, d=d)


def check_gradient(
    model: LossModel, theta: np.ndarray, x: np.ndarray, h: float = 1e-5
) -> float:
    """Max absolute error between ``model.grad`` and a central finite
    difference of ``model.loss``, coordinate by coordinate."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h!r}")
    theta = np.asarray(theta, dtype=np.float64)
    analytic = np.asarray(model.grad(x, theta), dtype=np.float64)
    worst = 0.0
    for j in range(theta.size):
        step = np.zeros_like(theta)
        step[j] = h
        numeric = (model.loss(x, theta + step) - model.loss(x, theta - step)) / (2.0 * h)
        worst = max(worst, abs(numeric - analytic[j]))
    return worst
