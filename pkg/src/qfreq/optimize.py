"""Probe-state and interrogation-time optimization for conventional Ramsey.

Only symmetric states with real, non-negative amplitudes are searched.
Sector phases commute with the dynamics and leave the QFI unchanged, and a
non-symmetric input never beats its symmetrized counterpart.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .dynamics import dephased_fock_matrix
from .fisher import qfi_unchecked
from .symstate import SymmetricState, ghz_state, product_state

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class OptimizationConfig:
    """Search settings. Time-grid bounds are ``grid_lo / (2 gamma N^2)`` and
    ``grid_hi / (2 gamma)``, log-spaced over ``grid_points`` points."""

    n_restarts: int = 32
    rel_tol: float = 1e-8
    max_iter: int = 5000
    grid_points: int = 60
    grid_lo: float = 1e-2
    grid_hi: float = 10.0
    refine_rtol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.n_restarts < 1 or self.max_iter < 1 or self.grid_points < 3:
            raise ValueError("n_restarts, max_iter >= 1 and grid_points >= 3 required")
        if not (self.rel_tol > 0 and self.refine_rtol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.grid_lo or not 0 < self.grid_hi:
            raise ValueError("grid bounds must be positive")

    def time_grid(self, n_atoms: int, gamma: float) -> np.ndarray:
        lo = self.grid_lo / (2 * gamma * n_atoms**2)
        hi = self.grid_hi / (2 * gamma)
        if not lo < hi:
            raise ValueError("time grid bounds are not ordered")
        return np.geomspace(lo, hi, self.grid_points)


@dataclass
class StateOptimum:
    state: SymmetricState
    qfi: float
    converged: bool
    restart_values: List[float] = field(default_factory=list)


@dataclass
class OptimalPrecision:
    t_opt: float
    state: SymmetricState
    delta_opt: float
    qfi: float
    converged: bool


def input_qfi(amps: np.ndarray, gamma: float, t: float) -> float:
    """Frequency QFI after time ``t`` for Fock amplitudes ``amps``."""
    rho = dephased_fock_matrix(amps, gamma, t)
    return qfi_unchecked(rho, np.arange(amps.size) - (amps.size - 1) / 2, t)


def _angles_to_amps(theta: np.ndarray) -> np.ndarray:
    """Hyperspherical angles to a unit vector with non-negative entries."""
    s = np.concatenate(([1.0], np.cumprod(np.sin(theta))))
    c = np.concatenate((np.cos(theta), [1.0]))
    return np.abs(s * c)


def _amps_to_angles(amps: np.ndarray) -> np.ndarray:
    a = np.abs(np.asarray(amps, dtype=float))
    tail = np.sqrt(np.cumsum(a[::-1] ** 2)[::-1])
    return np.arctan2(tail[1:], a[:-1])


def _to_sphere(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    n = np.linalg.norm(a)
    if n == 0:
        a = np.ones_like(a)
        n = np.linalg.norm(a)
    return a / n


NM_XATOL = 1e-6


def _nelder_mead(fun, x0, config):
    return minimize(
        fun,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": config.max_iter,
            "xatol": NM_XATOL,
            "fatol": config.rel_tol,
            "adaptive": True,
        },
    )


def _local_search(x0, gamma, t, config):
    # the objective is scaled by t^2 so fatol acts on an O(N^2) quantity
    scale = t * t
    res = _nelder_mead(
        lambda th: -input_qfi(_angles_to_amps(th), gamma, t) / scale,
        _amps_to_angles(_to_sphere(x0)),
        config,
    )
    amps = _angles_to_amps(res.x)
    return amps, input_qfi(amps, gamma, t), bool(res.success)


def optimize_state_at_t(
    n_atoms: int,
    gamma: float,
    t: float,
    config: OptimizationConfig = OptimizationConfig(),
    starts: Optional[Sequence[np.ndarray]] = None,
) -> StateOptimum:
    """Maximize the QFI over symmetric inputs at fixed interrogation time.

    Restarts are run in order: any ``starts`` given, then GHZ, then the product
    state, then seeded uniform random points, up to ``config.n_restarts``.
    Ties keep the first restart that reached the value.
    """
    if gamma < 0 or not t > 0:
        raise ValueError("need gamma >= 0 and t > 0")
    N = n_atoms
    rng = np.random.default_rng(config.seed)
    seeds = [np.asarray(s, dtype=float) for s in (starts or [])]
    seeds += [ghz_state(N).amplitudes.real, product_state(N).amplitudes.real]
    seeds = seeds[: max(config.n_restarts, 1)]
    while len(seeds) < config.n_restarts:
        seeds.append(rng.random(N + 1))

    best_amps, best_val, converged = None, -math.inf, False
    values = []
    for x0 in seeds:
        amps, val, ok = _local_search(x0, gamma, t, config)
        values.append(val)
        converged |= ok
        if val > best_val * (1 + 1e-12) or best_amps is None:
            best_amps, best_val = amps, val
    if not converged:
        log.warning("no restart converged at N=%d, t=%g; result is approximate", N, t)
    return StateOptimum(SymmetricState(N, best_amps), best_val, converged, values)


def golden_section(
    f: Callable[[float], float], a: float, c: float, tol: float
) -> Tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, c]`` until the bracket is narrower than ``tol``."""
    x1 = c - GOLDEN * (c - a)
    x2 = a + GOLDEN * (c - a)
    f1, f2 = f(x1), f(x2)
    while c - a > tol:
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - GOLDEN * (c - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (c - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def minimize_over_time(
    bound: Callable[[float], float],
    n_atoms: int,
    gamma: float,
    config: OptimizationConfig = OptimizationConfig(),
) -> Tuple[float, float]:
    """Grid scan in log-time followed by golden-section refinement.

    Returns ``(t_opt, bound(t_opt))``.
    """
    grid = config.time_grid(n_atoms, gamma)
    vals = [bound(t) for t in grid]
    i = int(np.argmin(vals))
    lo, hi = max(i - 1, 0), min(i + 1, len(grid) - 1)
    if i in (0, len(grid) - 1):
        log.warning("time optimum at the edge of the grid (t=%g)", grid[i])
    x, v = golden_section(
        lambda lt: bound(math.exp(lt)), math.log(grid[lo]), math.log(grid[hi]), config.refine_rtol
    )
    if vals[i] < v:
        return float(grid[i]), float(vals[i])
    return math.exp(x), float(v)


def product_precision_opt(
    n_atoms: int, gamma: float, T: float, config: OptimizationConfig = OptimizationConfig()
) -> float:
    """Best bound for a product-state probe, minimized over interrogation time."""
    return product_precision_time(n_atoms, gamma, T, config)[1]


def product_precision_time(
    n_atoms: int, gamma: float, T: float, config: OptimizationConfig = OptimizationConfig()
) -> Tuple[float, float]:
    amps = product_state(n_atoms).amplitudes.real
    return minimize_over_time(
        lambda t: _bound(input_qfi(amps, gamma, t), t, T), n_atoms, gamma, config
    )


def _bound(qfi: float, t: float, T: float) -> float:
    # scans may probe t > T; the per-shot bound is still well defined there
    return math.inf if qfi <= 0 else 1.0 / math.sqrt(T / t * qfi)


def _joint_search(amps, t0, gamma, T, config):
    """Nelder-Mead over state angles and log-time together, started at ``(amps, t0)``."""

    def objective(z):
        t = math.exp(z[-1])
        return _bound(input_qfi(_angles_to_amps(z[:-1]), gamma, t), t, T)

    res = _nelder_mead(objective, np.append(_amps_to_angles(amps), math.log(t0)), config)
    return _angles_to_amps(res.x[:-1]), math.exp(res.x[-1]), bool(res.success)


def optimal_precision(
    n_atoms: int, gamma: float, T: float, config: OptimizationConfig = OptimizationConfig()
) -> OptimalPrecision:
    """Jointly optimize the input state and the interrogation time.

    A log-time grid scan warm-starts each local search from the previous
    optimum (plus GHZ and product seeds). The best grid point is polished by a
    joint search over state and time, and the full multi-start search then
    runs at the polished time; if it finds a better state, that state is
    polished again.
    """
    if not gamma > 0 or not T > 0:
        raise ValueError("gamma and T must be positive")
    N = n_atoms
    scan = replace(config, n_restarts=3)
    warm = product_state(N).amplitudes.real
    best = (math.inf, None, None)
    for t in config.time_grid(N, gamma):
        opt = optimize_state_at_t(N, gamma, t, scan, starts=[warm])
        warm = opt.state.amplitudes.real
        b = _bound(opt.qfi, t, T)
        if b < best[0]:
            best = (b, warm, t)
    _, amps, t_opt = best

    converged = False
    for _ in range(3):
        amps, t_opt, ok = _joint_search(amps, t_opt, gamma, T, config)
        full = optimize_state_at_t(N, gamma, t_opt, config, starts=[amps])
        converged = ok and full.converged
        if full.qfi <= input_qfi(amps, gamma, t_opt) * (1 + config.rel_tol):
            break
        amps = full.state.amplitudes.real
    else:
        log.warning("joint search did not settle at N=%d", N)
        converged = False
    qfi = input_qfi(amps, gamma, t_opt)
    return OptimalPrecision(
        t_opt, SymmetricState(N, amps), _bound(qfi, t_opt, T), qfi, converged
    )
