"""Closed-form analytics for the Gaussian/exponential-reward setting.

Under MLE updates the parameter after T iterations has an exact
Gaussian marginal law: the mean contracts by (1+rho) per step and the
variance is a weighted sum of the per-iteration sampling noises, with
rho = sigma2/kappa2. From that law everything else follows in closed
form: the expected final reward, the gap to the optimum, the variance
floor of constant schedules, the budget-optimal schedule (counts
proportional to (1+rho)^t), and expected cost curves. A brute-force
enumerator over integer compositions serves as an independent oracle
for the optimal-schedule construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Literal, Sequence

import numpy as np

from .engine import CostModel
from .gaussian import ExpReward, GaussianModel, expected_reward, optimal_reward
from .policy import Schedule

__all__ = [
    "MarginalLaw",
    "PolicyEvaluation",
    "marginal",
    "expected_final_reward",
    "optimal_schedule",
    "brute_force_optimal",
    "t_star",
    "variance_floor",
    "cost_curve",
    "BRUTE_FORCE_MAX_BUDGET",
    "BRUTE_FORCE_MAX_ITERS",
]

BRUTE_FORCE_MAX_BUDGET = 60
BRUTE_FORCE_MAX_ITERS = 4


@dataclass(frozen=True)
class MarginalLaw:
    """Exact law of theta^(T) under MLE updates: N(mu, sigma2_T * I_d)."""

    mu: np.ndarray
    sigma2_T: float
    T: int
    d: int


@dataclass(frozen=True)
class PolicyEvaluation:
    """Analytic curves over schedule prefixes T = 1..len(schedule).

    ``reward`` is the expected final reward E[r(theta^(T))], ``gap`` is
    r* minus that, ``cum_cost`` the expected cumulative cost, and
    ``mean_N`` the expected per-iteration draw count used for the
    generation term. ``mu`` (shape (T, d)) and ``sigma2_T`` carry the
    marginal-law trajectory.
    """

    T: np.ndarray
    reward: np.ndarray
    gap: np.ndarray
    cum_cost: np.ndarray
    mean_N: np.ndarray
    mu: np.ndarray
    sigma2_T: np.ndarray
    n: tuple[int, ...]
    r_star: float
    label: str = ""


def _counts(schedule: Schedule | Sequence[int]) -> tuple[int, ...]:
    if isinstance(schedule, Schedule):
        return schedule.n
    return tuple(int(v) for v in schedule)


def _sigma2_T(ns: Sequence[int], sigma2: float, rho: float) -> float:
    T = len(ns)
    return sigma2 * sum(
        1.0 / (n * (1.0 + rho) ** (2 * (T - t) - 1)) for t, n in enumerate(ns)
    )


def marginal(
    theta0: np.ndarray | float,
    schedule: Schedule | Sequence[int],
    sigma2: float,
    kappa2: float,
) -> MarginalLaw:
    """Marginal law of theta^(T) for an MLE run over ``schedule``:

    mu_T = theta0 / (1+rho)^T,
    sigma2_T = sigma2 * sum_t 1 / (n_t * (1+rho)^(2(T-t)-1)).
    """
    ns = _counts(schedule)
    if not ns:
        raise ValueError("marginal needs a non-empty schedule")
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=np.float64))
    rho = sigma2 / kappa2
    T = len(ns)
    mu = theta0 / (1.0 + rho) ** T
    return MarginalLaw(mu=mu, sigma2_T=_sigma2_T(ns, sigma2, rho), T=T, d=theta0.size)


def expected_final_reward(law: MarginalLaw, sigma2: float, kappa2: float) -> float:
    """E over theta^(T) of the expected reward, in closed form:
    (kappa2 / (sigma2+kappa2+sigma2_T))^(d/2)
        * exp(-||mu||^2 / (2*(sigma2+kappa2+sigma2_T))).
    """
    s = sigma2 + kappa2 + law.sigma2_T
    norm2 = float(law.mu @ law.mu)
    return (kappa2 / s) ** (law.d / 2.0) * math.exp(-norm2 / (2.0 * s))


def _hypothesis_bound(T: int, d: int, sigma2: float, kappa2: float) -> float:
    rho = sigma2 / kappa2
    return (1.0 + rho) ** T * math.sqrt(d * (sigma2 + kappa2))


def optimal_schedule(
    C: int,
    T: int,
    sigma2: float,
    kappa2: float,
    theta0: np.ndarray | float | None = None,
) -> Schedule:
    """Budget-optimal schedule: counts proportional to (1+rho)^t.

    The continuous optimum n_t = C*(1+rho)^t / sum_k (1+rho)^k is
    rounded by largest-remainder apportionment so the entries sum to C
    exactly; zero entries (possible when C barely exceeds T) are
    repaired by moving units from the largest entry and flagged via
    ``clamped``. Proportionality fixes the schedule only up to shifts
    for a fixed T, so the t=0-anchored representative is returned.

    When ``theta0`` is supplied, warns if it violates the
    initial-condition hypothesis ||theta0|| <= (1+rho)^T*sqrt(d*(sigma2+kappa2))
    under which this schedule is provably optimal.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if C < T:
        raise ValueError(f"budget below one sample per iteration: C={C} < T={T}")
    rho = sigma2 / kappa2
    weights = np.array([(1.0 + rho) ** t for t in range(T)])
    continuous = C * weights / weights.sum()
    floors = np.floor(continuous).astype(int)
    remainder = int(C - floors.sum())
    # Stable sort on descending fractional part; earlier index wins ties.
    order = np.argsort(-(continuous - floors), kind="stable")
    floors[order[:remainder]] += 1
    clamped = False
    while (floors == 0).any():
        clamped = True
        floors[int(np.argmax(floors == 0))] += 1
        floors[int(np.argmax(floors))] -= 1
    if theta0 is not None:
        theta0 = np.atleast_1d(np.asarray(theta0, dtype=np.float64))
        bound = _hypothesis_bound(T, theta0.size, sigma2, kappa2)
        norm = float(np.linalg.norm(theta0))
        if norm > bound:
            warnings.warn(
                f"||theta0|| = {norm:.6g} exceeds the optimality hypothesis "
                f"bound {bound:.6g}; the schedule may not be optimal",
                stacklevel=2,
            )
    return Schedule(
        tuple(int(v) for v in floors),
        family_tag=f"optimal(C={C},T={T},rho={rho})",
        clamped=clamped,
    )


def brute_force_optimal(
    C: int, T: int, sigma2: float, kappa2: float
) -> tuple[Schedule, float]:
    """Exhaustively minimize sigma2_T over all compositions of C into T
    positive parts. Independent oracle for :func:`optimal_schedule`;
    capped at C <= 60, T <= 4 to keep the enumeration manageable."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if C < T:
        raise ValueError(f"budget below one sample per iteration: C={C} < T={T}")
    if C > BRUTE_FORCE_MAX_BUDGET or T > BRUTE_FORCE_MAX_ITERS:
        raise ValueError(
            f"instance too large for enumeration: need C <= {BRUTE_FORCE_MAX_BUDGET} "
            f"and T <= {BRUTE_FORCE_MAX_ITERS}, got C={C}, T={T}"
        )
    rho = sigma2 / kappa2
    w = np.array([sigma2 / (1.0 + rho) ** (2 * (T - t) - 1) for t in range(T)])
    if T == 1:
        comps = np.array([[C]])
    else:
        cuts = np.array(list(combinations(range(1, C), T - 1)))
        bounds = np.hstack(
            [np.zeros((len(cuts), 1), dtype=int), cuts, np.full((len(cuts), 1), C)]
        )
        comps = np.diff(bounds, axis=1)
    values = (w / comps).sum(axis=1)
    best = int(np.argmin(values))
    schedule = Schedule(
        tuple(int(v) for v in comps[best]),
        family_tag=f"brute_force(C={C},T={T},rho={rho})",
    )
    return schedule, float(values[best])


def variance_floor(n0: int, sigma2: float, kappa2: float) -> float:
    """Limit of sigma2_T as T grows under the constant schedule n_t = n0:
    (sigma2/n0) * (1+rho) / ((1+rho)^2 - 1)."""
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    rho = sigma2 / kappa2
    return (sigma2 / n0) * (1.0 + rho) / ((1.0 + rho) ** 2 - 1.0)


def _gauss_hermite_inv_reward(
    mu: np.ndarray, var: float, sigma2: float, kappa2: float, nodes: int = 64
) -> float:
    """E[1/r(theta)] for theta ~ N(mu, var*I_d) by per-coordinate
    Gauss-Hermite quadrature. 1/r factorizes across coordinates, so a
    one-dimensional rule per coordinate suffices. Requires
    var < sigma2+kappa2, else the expectation diverges."""
    s = sigma2 + kappa2
    if var >= s:
        raise ValueError(
            f"E[1/r] diverges: marginal variance {var:.6g} >= sigma2+kappa2 = {s:.6g}"
        )
    rho = sigma2 / kappa2
    z, w = np.polynomial.hermite.hermgauss(nodes)
    out = (1.0 + rho) ** (mu.size / 2.0)
    for m in mu:
        theta = m + math.sqrt(2.0 * var) * z
        out *= float((w * np.exp(theta**2 / (2.0 * s))).sum()) / math.sqrt(math.pi)
    return out


def cost_curve(
    schedule: Schedule | Sequence[int],
    theta0: np.ndarray | float,
    sigma2: float,
    kappa2: float,
    cost: CostModel,
    n_t_expectation: Literal["ratio", "quadrature"] = "ratio",
    label: str = "",
) -> PolicyEvaluation:
    """Analytic reward/gap/cost curves over prefixes of ``schedule``.

    The generation term needs E[N_t] = n_t * E[1/r(theta^(t))]. The
    default "ratio" mode approximates that by n_t / E[r(theta^(t))]
    (ratio of expectations in place of expectation of the ratio);
    "quadrature" computes E[1/r] with a 64-node Gauss-Hermite rule.
    """
    ns = _counts(schedule)
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=np.float64))
    if n_t_expectation not in ("ratio", "quadrature"):
        raise ValueError(f"unknown n_t_expectation {n_t_expectation!r}")
    rho = sigma2 / kappa2
    d = theta0.size
    r_star = optimal_reward(d, sigma2, kappa2)
    model0 = GaussianModel(theta0, sigma2)
    rw = ExpReward(kappa2)

    T_total = len(ns)
    rewards = np.empty(T_total)
    cum_cost = np.empty(T_total)
    mean_N = np.empty(T_total)
    mus = np.empty((T_total, d))
    sig2s = np.empty(T_total)

    mu = theta0.copy()
    sig2 = 0.0
    running = 0.0
    for t, n_t in enumerate(ns):
        # Law of theta^(t) (before this iteration): N(mu, sig2); at t=0
        # it is the point mass at theta0, so E[r] and E[1/r] are exact.
        if t == 0:
            r_before = expected_reward(model0, rw)
            inv_r = 1.0 / r_before
        else:
            r_before = expected_final_reward(
                MarginalLaw(mu=mu, sigma2_T=sig2, T=t, d=d), sigma2, kappa2
            )
            if n_t_expectation == "ratio":
                inv_r = 1.0 / r_before
            else:
                inv_r = _gauss_hermite_inv_reward(mu, sig2, sigma2, kappa2)
        expected_draws = n_t * inv_r
        running += cost.c_g * expected_draws + cost.c_t * n_t
        # One-step recursion for the law of theta^(t+1).
        mu = mu / (1.0 + rho)
        sig2 = sig2 / (1.0 + rho) ** 2 + sigma2 / (n_t * (1.0 + rho))
        rewards[t] = expected_final_reward(
            MarginalLaw(mu=mu, sigma2_T=sig2, T=t + 1, d=d), sigma2, kappa2
        )
        cum_cost[t] = running
        mean_N[t] = expected_draws
        mus[t] = mu
        sig2s[t] = sig2

    return PolicyEvaluation(
        T=np.arange(1, T_total + 1),
        reward=rewards,
        gap=r_star - rewards,
        cum_cost=cum_cost,
        mean_N=mean_N,
        mu=mus,
        sigma2_T=sig2s,
        n=tuple(ns),
        r_star=r_star,
        label=label,
    )


def t_star(evaluation: PolicyEvaluation, eps: float) -> int | None:
    """Smallest evaluated T with gap <= eps, or None if never reached
    within the evaluated range (constant policies have a positive gap
    floor, so None is a real outcome, not just a truncation)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    hits = np.flatnonzero(evaluation.gap <= eps)
    if hits.size == 0:
        return None
    return int(evaluation.T[hits[0]])
