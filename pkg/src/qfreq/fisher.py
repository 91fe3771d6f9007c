"""Quantum and classical Fisher information and Cramer-Rao bounds.

Generators are the parameter derivative ``H_0' = dH_0/d(alpha)``, which in
every scheme here is diagonal in the working basis. For conventional Ramsey
``H_0 = (omega - omega_L)/2 S_z``, so the frequency generator is ``S_z/2``,
i.e. ``n_0 - N/2`` in Fock space. Getting this factor of two wrong is the
easy mistake; :meth:`GeneratorSpec.frequency` encodes it once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .dynamics import PSD_TOL, FullDensityMatrix, SymDensityMatrix
from .symstate import FullState, SchemeKind, SchemeSpec, SymmetricState, z_signs

EIG_CUTOFF = 1e-12
PROB_SUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """Real diagonal of ``H_0'`` in the symmetric (length N+1) or full (2^N) basis."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            if np.any(vals.imag != 0):
                raise ValueError("generator diagonal must be real")
            vals = vals.real
        vals = np.array(vals, dtype=float)
        if vals.ndim != 1 or not np.all(np.isfinite(vals)):
            raise ValueError("generator must be a finite 1-d diagonal")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.size

    @classmethod
    def number(cls, n_atoms: int) -> "GeneratorSpec":
        """``n_0``: the number of atoms in ``|0>``."""
        return cls(np.arange(n_atoms + 1, dtype=float))

    @classmethod
    def frequency(cls, n_atoms: int) -> "GeneratorSpec":
        """``d/d(omega)`` of ``(omega - omega_L)/2 S_z`` in Fock space: ``n_0 - N/2``."""
        return cls(np.arange(n_atoms + 1) - n_atoms / 2)

    @classmethod
    def collective_z(cls, n_atoms: int, scale: float = 1.0) -> "GeneratorSpec":
        """``scale * S_z`` over the full basis."""
        return cls(scale * z_signs(n_atoms).sum(axis=1))

    @classmethod
    def for_scheme(cls, scheme: SchemeSpec) -> "GeneratorSpec":
        """Full-basis generator for the natural target of ``scheme``.

        Conventional: ``omega``. DFS_DELTA: ``delta = omega1 - omega2`` at fixed
        mean. DFS_OMEGA: ``Omega = (omega1 + omega2)/2`` at fixed difference.
        """
        z = z_signs(scheme.n_atoms)
        if scheme.kind is SchemeKind.DFS_DELTA:
            in_a = np.array(scheme.partition) == 0
            weights = np.where(in_a, 0.25, -0.25)
        else:
            weights = np.full(scheme.n_atoms, 0.5)
        return cls(z @ weights)


@dataclass(frozen=True)
class PrecisionResult:
    """Per-shot Fisher information and the Cramer-Rao bound it implies."""

    fisher: float
    qfi: Optional[float]
    bound: float
    t_used: float
    nu_used: float

    @classmethod
    def from_fisher(cls, fisher: float, t: float, T: float, qfi: Optional[float] = None):
        return cls(fisher, qfi, cramer_rao(fisher, t, T), t, T / t)


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, (SymDensityMatrix, FullDensityMatrix)):
        return rho.entries
    return np.asarray(rho, dtype=complex)


def qfi_pure(state: Union[SymmetricState, FullState], gen: GeneratorSpec, t: float) -> float:
    """``4 t^2 Var(H_0')`` for a pure state."""
    if state.dim != gen.dim:
        raise ValueError(f"state dimension {state.dim} != generator dimension {gen.dim}")
    w = np.abs(state.amplitudes) ** 2
    mean = w @ gen.values
    var = w @ gen.values**2 - mean**2
    return float(4 * t * t * max(var, 0.0))


def qfi_mixed(rho, gen: GeneratorSpec, t: float, cutoff: float = EIG_CUTOFF) -> float:
    """QFI of ``exp(-i H_0 t) rho~ exp(i H_0 t)`` with respect to the parameter.

    Uses the eigendecomposition ``rho = sum_j p_j |j><j|`` and
    ``F_Q = 2 t^2 sum_jk (p_j - p_k)^2 / (p_j + p_k) |<j|H_0'|k>|^2``, skipping
    pairs with ``p_j + p_k <= cutoff * Tr(rho)``. The numerator is evaluated as
    ``|<j|[H_0', rho]|k>|^2``, built from the entries of ``rho`` rather than from
    eigenvalue differences, so coherences far below machine epsilon (strongly
    dephased GHZ states) keep full relative precision.
    """
    m = _as_matrix(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("rho must be a square matrix")
    if m.shape[0] != gen.dim:
        raise ValueError(f"rho dimension {m.shape[0]} != generator dimension {gen.dim}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.conj().T)) > 1e-12 * scale:
        raise ValueError("rho is not Hermitian")
    if np.all(m.imag == 0):
        m = m.real
    return qfi_unchecked(m, gen.values, t, cutoff)


def qfi_unchecked(m: np.ndarray, gen_values: np.ndarray, t: float, cutoff: float = EIG_CUTOFF) -> float:
    """Core of :func:`qfi_mixed` without input validation, for inner loops."""
    trace = float(np.trace(m).real)
    p, v = np.linalg.eigh(m)
    if p[0] < -PSD_TOL:
        raise ValueError(f"rho has a negative eigenvalue {p[0]!r}")
    p = np.clip(p, 0.0, None)
    # [H, rho]_ab = (h_a - h_b) rho_ab for diagonal H
    comm = (gen_values[:, None] - gen_values[None, :]) * m
    a = v.conj().T @ comm @ v
    psum = p[:, None] + p[None, :]
    keep = psum > cutoff * trace
    terms = np.abs(a[keep]) ** 2 / psum[keep]
    return float(2 * t * t * np.sum(terms))


def cramer_rao(fisher: float, t: float, T: float) -> float:
    """``1/sqrt((T/t) F)``; ``math.inf`` when there is no information."""
    if not t > 0 or T < t:
        raise ValueError(f"need T >= t > 0, got t={t!r}, T={T!r}")
    if fisher < 0:
        raise ValueError("Fisher information cannot be negative")
    if fisher == 0:
        return math.inf
    return 1.0 / math.sqrt(T / t * fisher)


def ghz_precision(n_atoms: int, gamma: float, t: float, T: float) -> float:
    """Bound for a GHZ probe under collective dephasing at interrogation time ``t``."""
    return 1.0 / (math.sqrt(T * t) * n_atoms * math.exp(-gamma * n_atoms**2 * t))


def ghz_optimal_precision(n_atoms: int, gamma: float, T: float):
    """Return ``(t_opt, delta_opt)`` with ``t_opt = 1/(2 gamma N^2)``.

    The optimum ``sqrt(2 e gamma / T)`` does not depend on ``N``.
    """
    if not gamma > 0 or not T > 0:
        raise ValueError("gamma and T must be positive")
    t_opt = 1.0 / (2 * gamma * n_atoms**2)
    return t_opt, math.sqrt(2 * math.e * gamma / T)


def classical_fisher(p, dp, cutoff: float = EIG_CUTOFF) -> float:
    """``sum_k (dp_k)^2 / p_k`` over outcomes with ``p_k > cutoff``."""
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    if p.shape != dp.shape:
        raise ValueError("p and dp must have the same shape")
    if np.any(p < -1e-15):
        raise ValueError("negative probability")
    if abs(p.sum() - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probabilities sum to {p.sum()!r}")
    keep = p > cutoff
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def fd_step(alpha: float) -> float:
    return max(1e-6, 1e-6 * abs(alpha))


def classical_fisher_fd(
    prob_fn: Callable[[float], np.ndarray], alpha: float, h: Optional[float] = None
) -> float:
    """Fisher information with ``dp/d(alpha)`` from central differences."""
    h = fd_step(alpha) if h is None else h
    dp = (np.asarray(prob_fn(alpha + h)) - np.asarray(prob_fn(alpha - h))) / (2 * h)
    return classical_fisher(prob_fn(alpha), dp)
