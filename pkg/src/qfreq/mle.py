"""Maximum-likelihood frequency estimation for the DFS and product-state schemes.

The DFS likelihood depends on the data only through ``nu_e``, the number of
runs with an even count of ``+`` results, so exact finite-``nu`` moments are
sums over ``nu_e = 0..nu``. Uncertainties follow the bias-corrected definition

    Delta alpha = < (alpha_est / |d<alpha_est>/d alpha| - alpha)^2 >^(1/2)

with the bias factor from central differences on the exact mean. Frequencies
are measured from the point where the accumulated phase is zero (the laser
reference), so the result does not depend on the absolute laser frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.stats import binom
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .dfs import (
    ImperfectionModel,
    Target,
    count_distribution,
    dfs_precision_bound,
    product_probabilities,
)

DEGENERATE_BIAS = 1e-12


@dataclass(frozen=True)
class ExperimentBudget:
    """``nu`` repetitions of interrogation time ``t``; total time ``T = nu t``."""

    nu: int
    t: float

    def __post_init__(self):
        if int(self.nu) != self.nu or self.nu < 1:
            raise ValueError(f"nu must be a positive integer, got {self.nu!r}")
        if not self.t > 0:
            raise ValueError("t must be positive")

    @property
    def T(self) -> float:
        return self.nu * self.t

    @classmethod
    def from_total_time(cls, T: float, t: float) -> Tuple["ExperimentBudget", bool]:
        """Budget with ``nu = floor(T/t)``; the flag is True when ``T`` was not a multiple."""
        ratio = T / t
        nu = int(math.floor(ratio + 1e-9))
        return cls(max(nu, 1), t), abs(ratio - nu) > 1e-9 * max(ratio, 1.0)


@dataclass(frozen=True)
class EstimatorResult:
    """Mean estimate, bias factor ``|d<est>/d alpha|`` and uncertainty."""

    estimate: float
    bias_factor: float
    uncertainty: float

    @property
    def degenerate(self) -> bool:
        return self.bias_factor < DEGENERATE_BIAS


def _clamped_arccos(x, lo_mask, hi_mask, low_value):
    out = np.arccos(np.clip(x, -1.0, 1.0))
    out = np.where(lo_mask, low_value, out)
    return np.where(hi_mask, 0.0, out)


def dfs_phase_estimate(nu_e, nu: int, n_atoms: int, visibility: float):
    """ML estimate of the single-atom phase, in ``[0, pi/N]``. Vectorizes over ``nu_e``."""
    nu_e = np.asarray(nu_e)
    if np.any(nu_e < 0) or np.any(nu_e > nu):
        raise ValueError(f"nu_e must lie in [0, {nu}]")
    if visibility <= 0:
        raise ValueError("zero fringe visibility: the phase is not identifiable")
    lo = nu * (1 - visibility) / 2
    hi = nu * (1 + visibility) / 2
    x = (2 * nu_e - nu) / (nu * visibility)
    return _clamped_arccos(x, nu_e < lo, nu_e > hi, math.pi) / n_atoms


def dfs_ml_estimate(
    nu_e,
    budget: ExperimentBudget,
    n_atoms: int,
    imp: ImperfectionModel,
    target: Target,
    laser_freqs=(0.0, 0.0),
):
    """ML estimate of ``delta`` or ``Omega`` from the even-count statistic."""
    phi = dfs_phase_estimate(nu_e, budget.nu, n_atoms, imp.visibility(n_atoms))
    est = target.from_phase(phi, budget.t, laser_freqs)
    return float(est) if np.ndim(est) == 0 else est


def nu_e_distribution(nu: int, n_atoms: int, imp: ImperfectionModel, phi: float) -> np.ndarray:
    """``p(nu_e)`` for ``nu_e = 0..nu``: binomial with the even-parity probability."""
    p_even = (1 + imp.visibility(n_atoms) * math.cos(n_atoms * phi)) / 2
    return binom.pmf(np.arange(nu + 1), nu, p_even)


def _bias_corrected(mean_fn, values_fn, alpha0: float, h_alpha: float) -> EstimatorResult:
    """Exact moments of an estimator given its pmf/values at parameter ``alpha``."""
    bias = abs(mean_fn(alpha0 + h_alpha) - mean_fn(alpha0 - h_alpha)) / (2 * h_alpha)
    p, est = values_fn(alpha0)
    mean = float(p @ est)
    if bias < DEGENERATE_BIAS:
        return EstimatorResult(mean, bias, math.inf)
    msd = float(p @ (est / bias - alpha0) ** 2)
    return EstimatorResult(mean, bias, math.sqrt(msd))


def dfs_uncertainty(
    budget: ExperimentBudget,
    n_atoms: int,
    imp: ImperfectionModel,
    target: Target,
    phi: float = None,
) -> EstimatorResult:
    """Exact finite-``nu`` uncertainty of the DFS ML estimator.

    ``phi`` is the true single-atom phase, by default the operating point
    ``pi/(2N)``. The central-difference step moves ``N phi`` by 1e-4 rad.
    """
    N, nu, t = n_atoms, budget.nu, budget.t
    phi0 = math.pi / (2 * N) if phi is None else phi
    vis = imp.visibility(N)
    nu_e = np.arange(nu + 1)
    est = target.from_phase(dfs_phase_estimate(nu_e, nu, N, vis), t)
    slope = target.c * t  # d(phi)/d(alpha)

    def values(alpha):
        return nu_e_distribution(nu, N, imp, alpha * slope), est

    def mean(alpha):
        p, e = values(alpha)
        return float(p @ e)

    return _bias_corrected(mean, values, phi0 / slope, 1e-4 / N / slope)


def product_ml_estimate(
    n,
    n_atoms: int,
    nu: int,
    eta_h: float,
    eta_m: float,
    gamma: float,
    t: float,
    laser_freq: float = 0.0,
):
    """ML estimate of ``omega_1`` from ``n`` ``+`` results among ``N nu / 2`` atom readouts."""
    n = np.asarray(n)
    total = n_atoms * nu / 2
    if np.any(n < 0) or np.any(n > total):
        raise ValueError(f"n must lie in [0, {total:g}]")
    k = eta_h**2 * eta_m * math.exp(-gamma * t)
    if k <= 0:
        raise ValueError("zero fringe visibility: the frequency is not identifiable")
    lo = n_atoms * nu * (1 - k) / 4
    hi = n_atoms * nu * (1 + k) / 4
    x = (4 * n - n_atoms * nu) / (n_atoms * nu * k)
    est = _clamped_arccos(x, n < lo, n > hi, math.pi) / t + laser_freq
    return float(est) if est.ndim == 0 else est


def product_count_distribution(
    n_atoms: int, nu: int, eta_h: float, eta_m: float, gamma: float, t: float, detuning: float
) -> np.ndarray:
    """Distribution of the ``+`` count over ``N nu / 2`` readouts of one atom set."""
    p_plus, _ = product_probabilities(eta_h, eta_m, gamma, t, detuning)
    return binom.pmf(np.arange(n_atoms * nu // 2 + 1), n_atoms * nu // 2, p_plus)


@dataclass(frozen=True)
class ProductUncertainty:
    delta_Omega: float
    delta_delta: float
    omega1: EstimatorResult
    omega2: EstimatorResult


def product_uncertainty(
    n_atoms: int, nu: int, eta_h: float, eta_m: float, gamma: float, t: float
) -> ProductUncertainty:
    """Exact uncertainty of ``Omega_est`` and ``delta_est`` for product-state Ramsey.

    Both atom sets operate at ``detuning * t = pi/2`` and are independent.
    """
    if n_atoms < 2 or n_atoms % 2:
        raise ValueError("need an even number of atoms")
    if (n_atoms * nu) % 2:
        raise ValueError("N nu / 2 must be an integer")
    n = np.arange(n_atoms * nu // 2 + 1)
    est = product_ml_estimate(n, n_atoms, nu, eta_h, eta_m, gamma, t)

    def values(detuning):
        return product_count_distribution(n_atoms, nu, eta_h, eta_m, gamma, t, detuning), est

    def mean(detuning):
        p, e = values(detuning)
        return float(p @ e)

    d0 = math.pi / (2 * t)
    single = _bias_corrected(mean, values, d0, 1e-4 / t)
    spread = math.hypot(single.uncertainty, single.uncertainty)
    return ProductUncertainty(spread / 2, spread, single, single)


@dataclass(frozen=True)
class SimulatedRuns:
    counts: np.ndarray
    nu_e: int
    seed: int


def simulate_runs(
    budget: ExperimentBudget, n_atoms: int, imp: ImperfectionModel, phi: float, rng_seed: int
) -> SimulatedRuns:
    """Draw the ``+`` count of every run from ``C(N, n) q_n``."""
    weights = count_distribution(n_atoms, imp, phi)
    rng = np.random.default_rng(rng_seed)
    counts = rng.choice(n_atoms + 1, size=budget.nu, p=weights / weights.sum())
    return SimulatedRuns(counts, int(np.sum(counts % 2 == 0)), rng_seed)


def simulate_nu_e(
    budget: ExperimentBudget,
    n_atoms: int,
    imp: ImperfectionModel,
    phi: float,
    n_reps: int,
    rng_seed: int,
) -> np.ndarray:
    """``nu_e`` from ``n_reps`` independent simulated experiments."""
    weights = count_distribution(n_atoms, imp, phi)
    rng = np.random.default_rng(rng_seed)
    counts = rng.choice(n_atoms + 1, size=(n_reps, budget.nu), p=weights / weights.sum())
    return np.sum(counts % 2 == 0, axis=1)


class DFSFrequencyEstimator(BaseEstimator):
    """Maximum-likelihood estimator for the DFS schemes.

    ``fit`` takes the ``+`` count of each run (shape ``(nu,)``) or the raw
    outcomes (shape ``(nu, N)``, 1 for ``+``) and sets ``estimate_``,
    ``nu_e_`` and the Cramer-Rao bound ``bound_`` for the fitted budget.
    """

    def __init__(
        self,
        n_atoms=20,
        t=3.0,
        xi=0.6,
        eta_h=0.98,
        eta_m=0.99,
        target="omega",
        laser_freqs=(0.0, 0.0),
    ):
        self.n_atoms = n_atoms
        self.t = t
        self.xi = xi
        self.eta_h = eta_h
        self.eta_m = eta_m
        self.target = target
        self.laser_freqs = laser_freqs

    def _counts(self, X):
        X = check_array(X, ensure_2d=False, dtype=None)
        if X.ndim == 2:
            if X.shape[1] != self.n_atoms:
                raise ValueError(f"expected {self.n_atoms} outcomes per run, got {X.shape[1]}")
            X = X.sum(axis=1)
        counts = np.asarray(X).astype(int)
        if np.any(counts < 0) or np.any(counts > self.n_atoms):
            raise ValueError("run counts must lie in [0, n_atoms]")
        return counts

    def fit(self, X, y=None):
        counts = self._counts(X)
        imp = ImperfectionModel(self.xi, self.eta_h, self.eta_m)
        target = Target(self.target)
        budget = ExperimentBudget(counts.size, self.t)
        self.nu_e_ = int(np.sum(counts % 2 == 0))
        self.n_runs_ = counts.size
        self.estimate_ = dfs_ml_estimate(
            self.nu_e_, budget, self.n_atoms, imp, target, self.laser_freqs
        )
        self.bound_ = dfs_precision_bound(self.n_atoms, imp, budget.T, self.t, target)
        return self

    def uncertainty(self):
        """Exact estimator uncertainty at the operating point for the fitted ``nu``."""
        check_is_fitted(self, "estimate_")
        imp = ImperfectionModel(self.xi, self.eta_h, self.eta_m)
        budget = ExperimentBudget(self.n_runs_, self.t)
        return dfs_uncertainty(budget, self.n_atoms, imp, Target(self.target))


class ProductFrequencyEstimator(BaseEstimator):
    """Product-state Ramsey baseline: the first N/2 atoms probe ``omega1``, the rest ``omega2``.

    ``fit`` takes outcomes of shape ``(nu, N)`` with 1 for ``+``.
    """

    def __init__(
        self, n_atoms=20, t=0.5, gamma=1.0, eta_h=0.98, eta_m=0.99, laser_freqs=(0.0, 0.0)
    ):
        self.n_atoms = n_atoms
        self.t = t
        self.gamma = gamma
        self.eta_h = eta_h
        self.eta_m = eta_m
        self.laser_freqs = laser_freqs

    def fit(self, X, y=None):
        X = check_array(X, dtype=None)
        if X.shape[1] != self.n_atoms or self.n_atoms % 2:
            raise ValueError(f"expected an even {self.n_atoms} outcomes per run")
        if not np.isin(X, (0, 1)).all():
            raise ValueError("outcomes must be 0 or 1")
        nu, half = X.shape[0], self.n_atoms // 2
        args = (self.n_atoms, nu, self.eta_h, self.eta_m, self.gamma, self.t)
        self.omega1_ = product_ml_estimate(int(X[:, :half].sum()), *args, self.laser_freqs[0])
        self.omega2_ = product_ml_estimate(int(X[:, half:].sum()), *args, self.laser_freqs[1])
        self.Omega_ = (self.omega1_ + self.omega2_) / 2
        self.delta_ = self.omega1_ - self.omega2_
        self.n_runs_ = nu
        return self
