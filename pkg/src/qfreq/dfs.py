"""Decoherence-free-subspace Ramsey schemes with imperfect preparation and readout.

Two schemes are covered. Both have ``N`` atoms (N even) split into sets A and B.

* ``Target.DELTA`` estimates ``delta = omega1 - omega2`` from the balanced
  pattern state ``(|i> + |not i>)/sqrt(2)`` under common-sign noise.
* ``Target.OMEGA`` estimates ``Omega = (omega1 + omega2)/2`` from a GHZ state
  under opposite-sign noise.

In both cases one run yields a sequence of N ``+/-`` outcomes and the
probability of a sequence depends only on the number ``n`` of ``+`` results.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import comb

from .dynamics import FullDensityMatrix
from .symstate import FullState, MAX_FULL_ATOMS

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
KET_PLUS = np.array([1, 1]) / np.sqrt(2)
KET_MINUS = np.array([1, -1]) / np.sqrt(2)


class Target(enum.Enum):
    DELTA = "delta"
    OMEGA = "omega"

    @property
    def c(self) -> float:
        """Prefactor of ``t`` in ``d(phi)/d(alpha)``."""
        return 0.5 if self is Target.DELTA else 1.0

    def phase(self, alpha: float, t: float, laser_freqs=(0.0, 0.0)) -> float:
        """Single-atom phase ``phi(alpha)`` accumulated in time ``t``."""
        if self is Target.DELTA:
            return alpha * t / 2
        return (alpha - 0.5 * (laser_freqs[0] + laser_freqs[1])) * t

    def from_phase(self, phi: float, t: float, laser_freqs=(0.0, 0.0)) -> float:
        """Inverse of :meth:`phase`."""
        if self is Target.DELTA:
            return 2 * phi / t
        return phi / t + 0.5 * (laser_freqs[0] + laser_freqs[1])


def _check_unit(name, v):
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


@dataclass(frozen=True)
class ImperfectionModel:
    """Preparation weight ``xi``, gate parameter ``eta_h``, readout parameter ``eta_m``."""

    xi: float = 1.0
    eta_h: float = 1.0
    eta_m: float = 1.0

    def __post_init__(self):
        _check_unit("xi", self.xi)
        _check_unit("eta_h", self.eta_h)
        _check_unit("eta_m", self.eta_m)

    def visibility(self, n_atoms: int) -> float:
        """Fringe contrast ``xi * eta_h^N * eta_m^N``."""
        return self.xi * self.eta_h**n_atoms * self.eta_m**n_atoms

    def fidelity(self, n_atoms: int) -> float:
        """Overlap of the prepared state with the ideal input."""
        return self.xi + (1 - self.xi) / 2**n_atoms


def _check_even(n_atoms: int) -> None:
    if n_atoms < 2 or n_atoms % 2:
        raise ValueError(f"DFS schemes need an even number of atoms >= 2, got {n_atoms}")


def outcome_probability(n: int, n_atoms: int, imp: ImperfectionModel, phi: float) -> float:
    """Probability of one particular sequence containing ``n`` ``+`` results."""
    if not 0 <= n <= n_atoms:
        raise ValueError(f"n must lie in [0, {n_atoms}], got {n}")
    sign = -1.0 if n % 2 else 1.0
    return (1 + sign * imp.visibility(n_atoms) * math.cos(n_atoms * phi)) / 2**n_atoms


def outcome_probabilities(n_atoms: int, imp: ImperfectionModel, phi: float) -> np.ndarray:
    """Per-sequence probabilities ``q_n`` for ``n = 0..N``."""
    n = np.arange(n_atoms + 1)
    sign = 1 - 2 * (n % 2)
    return (1 + sign * imp.visibility(n_atoms) * np.cos(n_atoms * phi)) / 2.0**n_atoms


def count_distribution(n_atoms: int, imp: ImperfectionModel, phi: float) -> np.ndarray:
    """Distribution of the ``+`` count per run: ``C(N, n) q_n``."""
    return comb(n_atoms, np.arange(n_atoms + 1)) * outcome_probabilities(n_atoms, imp, phi)


def readout_povm(eta_m: float) -> Tuple[np.ndarray, np.ndarray]:
    """Faulty computational-basis readout ``(Pi_0, Pi_1)``."""
    _check_unit("eta_m", eta_m)
    good, bad = (1 + eta_m) / 2, (1 - eta_m) / 2
    return np.diag([good, bad]), np.diag([bad, good])


def hadamard_channel(rho: np.ndarray, eta_h: float) -> np.ndarray:
    """Single-atom faulty Hadamard ``eta_h H rho H + (1 - eta_h) Tr(rho) I/2``."""
    _check_unit("eta_h", eta_h)
    return eta_h * HADAMARD @ rho @ HADAMARD + (1 - eta_h) * np.trace(rho) * np.eye(2) / 2


def compose_faulty_povm(eta_h: float, eta_m: float) -> Tuple[np.ndarray, np.ndarray]:
    """Faulty sigma_x measurement ``(Pi_+, Pi_-)`` in the computational basis.

    A faulty Hadamard followed by faulty readout; ``+`` corresponds to reading
    ``|0>`` after the gate.
    """
    _check_unit("eta_h", eta_h)
    _check_unit("eta_m", eta_m)
    e = eta_h * eta_m
    p_plus = np.outer(KET_PLUS, KET_PLUS)
    p_minus = np.outer(KET_MINUS, KET_MINUS)
    return (
        (1 + e) / 2 * p_plus + (1 - e) / 2 * p_minus,
        (1 + e) / 2 * p_minus + (1 - e) / 2 * p_plus,
    )


def dfs_fisher(
    n_atoms: int, imp: ImperfectionModel, phi: float, target: Target, t: float
) -> float:
    """Closed-form Fisher information of one run about ``target``."""
    _check_even(n_atoms)
    v = imp.visibility(n_atoms)
    s = math.sin(n_atoms * phi)
    c = math.cos(n_atoms * phi)
    denom = 1 - (v * c) ** 2
    if denom <= 0:
        return 0.0
    return (target.c * n_atoms * t * v) ** 2 * s * s / denom


def dfs_precision_bound(
    n_atoms: int, imp: ImperfectionModel, T: float, t: float, target: Target
) -> float:
    """Cramer-Rao bound at the optimal operating point ``N phi = pi/2``."""
    _check_even(n_atoms)
    if not t > 0 or T < t:
        raise ValueError("need T >= t > 0")
    v = imp.visibility(n_atoms)
    if v == 0:
        return math.inf
    omega_bound = 1.0 / (math.sqrt(T * t) * n_atoms * v)
    return omega_bound if target is Target.OMEGA else 2 * omega_bound


def product_probabilities(
    eta_h: float, eta_m: float, gamma: float, t: float, detuning: float
) -> Tuple[float, float]:
    """``(P_+, P_-)`` for one product-state atom under uncorrelated dephasing."""
    k = eta_h**2 * eta_m * math.exp(-gamma * t) * math.cos(detuning * t)
    return (1 + k) / 2, (1 - k) / 2


def product_fisher(
    n_atoms: int, eta_h: float, eta_m: float, gamma: float, t: float, detuning: float
) -> float:
    """Fisher information about ``omega_1`` from the N/2 atoms of set A."""
    k = eta_h**2 * eta_m * math.exp(-gamma * t)
    s = math.sin(detuning * t)
    c = math.cos(detuning * t)
    return 0.5 * n_atoms * (t * k) ** 2 * s * s / (1 - (k * c) ** 2)


@dataclass(frozen=True)
class BaselineResult:
    t_opt: float
    delta_omega1: float
    delta_Omega: float
    delta_delta: float


def classical_baseline(
    n_atoms: int, eta_h: float, eta_m: float, gamma: float, T: float
) -> BaselineResult:
    """Product-state Ramsey with N/2 atoms per frequency, uncorrelated dephasing.

    Evaluated at the optimal operating point ``detuning * t = pi/2`` and time
    ``t = 1/(2 gamma)``.
    """
    _check_even(n_atoms)
    if not gamma > 0 or not T > 0:
        raise ValueError("gamma and T must be positive")
    d1 = math.sqrt(4 * gamma * math.e / (n_atoms * T)) / (eta_h**2 * eta_m)
    d_Omega = d1 / math.sqrt(2)
    return BaselineResult(1 / (2 * gamma), d1, d_Omega, 2 * d_Omega)


def fidelity_threshold(n_atoms: int, eta_h: float, eta_m: float, gamma_t: float) -> float:
    """Smallest ``xi`` for which the DFS bound beats the product-state baseline."""
    _check_even(n_atoms)
    if not gamma_t > 0:
        raise ValueError("gamma_t must be positive")
    return 1.0 / (
        eta_h ** (n_atoms - 2) * eta_m ** (n_atoms - 1) * math.sqrt(2 * n_atoms * gamma_t * math.e)
    )


def imperfect_input(state: FullState, xi: float) -> FullDensityMatrix:
    """``xi |psi><psi| + (1 - xi) I / 2^N``."""
    _check_unit("xi", xi)
    dim = state.dim
    rho = xi * state.projector() + (1 - xi) * np.eye(dim) / dim
    return FullDensityMatrix(state.n_atoms, rho)


def sequence_probabilities(rho: FullDensityMatrix, eta_h: float, eta_m: float) -> np.ndarray:
    """Probability of every ``+/-`` sequence under per-atom faulty sigma_x readout.

    Index bit ``j`` (atom 0 most significant) is 0 for ``+`` and 1 for ``-``.
    """
    N = rho.n_atoms
    if N > MAX_FULL_ATOMS:
        raise ValueError("too many atoms for full simulation")
    povm = np.stack(compose_faulty_povm(eta_h, eta_m))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    out, row, col = letters[:N], letters[N : 2 * N], letters[2 * N : 3 * N]
    # Tr[(x)_j Pi_{s_j} rho] = sum Pi[s_j, col_j, row_j] rho[row, col]
    terms = [f"{out[j]}{col[j]}{row[j]}" for j in range(N)]
    spec = ",".join(terms) + f",{row}{col}->{out}"
    tensor = rho.entries.reshape((2,) * (2 * N))
    probs = np.einsum(spec, *([povm] * N), tensor, optimize=True)
    return np.real(probs).reshape(-1)
