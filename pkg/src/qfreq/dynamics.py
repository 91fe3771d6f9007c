"""Collective-dephasing dynamics: closed-form solutions and Langevin trajectories.

Every scheme has a free Hamiltonian ``H_0`` and noise operator ``L`` that are
diagonal in the computational basis, so the averaged master equation is
solved elementwise and a single noise realization is a pure phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .symstate import MAX_FULL_ATOMS, FullState, SchemeSpec, SymmetricState

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


def _check_density(entries: np.ndarray, dim: int) -> np.ndarray:
    rho = np.array(entries, dtype=complex)
    rho.setflags(write=False)
    if rho.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got {rho.shape}")
    scale = max(1.0, float(np.max(np.abs(rho))))
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL * scale:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL * dim:
        raise ValueError(f"density matrix trace is {np.trace(rho)!r}")
    return rho


@dataclass(frozen=True, eq=False)
class SymDensityMatrix:
    n_atoms: int
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _check_density(self.entries, self.n_atoms + 1))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


@dataclass(frozen=True, eq=False)
class FullDensityMatrix:
    n_atoms: int
    entries: np.ndarray

    def __post_init__(self):
        if self.n_atoms > MAX_FULL_ATOMS:
            raise ValueError(f"full representation limited to N <= {MAX_FULL_ATOMS}")
        object.__setattr__(self, "entries", _check_density(self.entries, 2**self.n_atoms))

    def purity(self) -> float:
        return float(np.real(np.sum(self.entries * self.entries.T)))

    def coherence(self, a: int, b: int) -> complex:
        return complex(self.entries[a, b])


@dataclass(frozen=True)
class NoiseParams:
    """Dephasing rate ``gamma`` and evolution time ``t``."""

    gamma: float
    t: float

    def __post_init__(self):
        for name in ("gamma", "t"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


def evolve_symmetric(
    state: SymmetricState, delta: float, noise: NoiseParams
) -> SymDensityMatrix:
    """Closed-form solution of the collective-dephasing equation in Fock space.

    ``rho_kl = a_k a_l^* exp(-gamma t (k-l)^2) exp(-i delta t (k-l))``
    """
    rho = dephased_fock_matrix(state.amplitudes, noise.gamma, noise.t, delta)
    return SymDensityMatrix(state.n_atoms, rho)


def dephased_fock_matrix(amps: np.ndarray, gamma: float, t: float, delta: float = 0.0):
    """Unvalidated array form of :func:`evolve_symmetric` for inner loops.

    Real amplitudes with ``delta = 0`` give a real matrix.
    """
    k = np.arange(amps.size)
    diff = k[:, None] - k[None, :]
    rho = np.outer(amps, np.conj(amps)) * np.exp(-gamma * t * diff**2)
    if delta != 0:
        rho = rho * np.exp(-1j * delta * t * diff)
    return rho


def evolve_full(
    state: Union[FullState, FullDensityMatrix], scheme: SchemeSpec, noise: NoiseParams
) -> FullDensityMatrix:
    """Averaged state under ``H_0`` and collective noise ``L`` for time ``t``.

    Accepts a pure state or a density matrix (e.g. an imperfectly prepared
    input). Exact because ``H_0`` and ``L`` are both diagonal.
    """
    if state.n_atoms != scheme.n_atoms:
        raise ValueError("state and scheme disagree on the number of atoms")
    if isinstance(state, FullState):
        rho0 = state.projector()
    else:
        rho0 = state.entries
    E = scheme.energies()
    L = scheme.noise_diagonal()
    dE = E[:, None] - E[None, :]
    dL = L[:, None] - L[None, :]
    rho = rho0 * np.exp(-1j * dE * noise.t) * np.exp(-0.25 * noise.gamma * dL**2 * noise.t)
    return FullDensityMatrix(scheme.n_atoms, rho)


def _exact_paths(state: FullState, scheme: SchemeSpec, noise: NoiseParams, W: np.ndarray):
    E = scheme.energies()
    L = scheme.noise_diagonal()
    phase = E[None, :] * noise.t + np.sqrt(noise.gamma / 2) * L[None, :] * W[:, None]
    return state.amplitudes[None, :] * np.exp(-1j * phase)


def langevin_trajectory(
    state: FullState, scheme: SchemeSpec, noise: NoiseParams, rng_seed: int
) -> FullState:
    """One realization of the Stratonovich Langevin equation.

    The path solution is ``exp(-i H_0 t) exp(-i sqrt(gamma/2) L W) |psi>`` with
    the integrated noise ``W ~ Normal(0, t)`` drawn from ``default_rng(rng_seed)``.
    """
    W = np.random.default_rng(rng_seed).standard_normal(1) * np.sqrt(noise.t)
    return FullState(state.n_atoms, _exact_paths(state, scheme, noise, W)[0])


def langevin_ensemble(
    state: FullState, scheme: SchemeSpec, noise: NoiseParams, n_paths: int, rng_seed: int
) -> np.ndarray:
    """``n_paths`` exact trajectories as rows of a complex array.

    Row ``i`` equals ``langevin_trajectory(..., rng_seed + i)``.
    """
    W = _path_draws(n_paths, rng_seed, 1)[:, 0] * np.sqrt(noise.t)
    return _exact_paths(state, scheme, noise, W)


def _path_draws(n_paths: int, rng_seed: int, size: int) -> np.ndarray:
    # independent stream per path: seed + path index
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    out = np.empty((n_paths, size))
    for i in range(n_paths):
        out[i] = np.random.default_rng(rng_seed + i).standard_normal(size)
    return out


def euler_maruyama_ensemble(
    state: FullState,
    scheme: SchemeSpec,
    noise: NoiseParams,
    n_steps: int,
    n_paths: int,
    rng_seed: int,
) -> np.ndarray:
    """Euler-Maruyama integration of the Ito form, renormalized every step.

    ``|dpsi> = (-i H_0 - gamma/4 L^2)|psi> dt - i sqrt(gamma/2) L |psi> dW``

    Path ``i`` draws its increments from ``default_rng(rng_seed + i)``.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    increments = _path_draws(n_paths, rng_seed, n_steps)
    dt = noise.t / n_steps
    E = scheme.energies()
    L = scheme.noise_diagonal()
    drift = (-1j * E - 0.25 * noise.gamma * L**2) * dt
    diffusion = -1j * np.sqrt(noise.gamma / 2) * L
    psi = np.tile(state.amplitudes, (n_paths, 1))
    for k in range(n_steps):
        dW = increments[:, k : k + 1] * np.sqrt(dt)
        psi = psi + psi * (drift[None, :] + diffusion[None, :] * dW)
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    return psi


def euler_maruyama_trajectory(
    state: FullState, scheme: SchemeSpec, noise: NoiseParams, n_steps: int, rng_seed: int
) -> FullState:
    psi = euler_maruyama_ensemble(state, scheme, noise, n_steps, 1, rng_seed)[0]
    return FullState(state.n_atoms, psi)


def trajectory_average(
    trajectories: Union[Sequence[FullState], np.ndarray], n_atoms: int = None
) -> FullDensityMatrix:
    """``(1/M) sum_m |psi_m><psi_m|`` over a list of states or an ``(M, 2^N)`` array."""
    if isinstance(trajectories, np.ndarray):
        if n_atoms is None:
            raise ValueError("n_atoms is required for array input")
        psi = trajectories
    else:
        if len(trajectories) == 0:
            raise ValueError("need at least one trajectory")
        sizes = {s.n_atoms for s in trajectories}
        if len(sizes) != 1:
            raise ValueError("trajectories have inconsistent atom numbers")
        n_atoms = sizes.pop()
        psi = np.stack([s.amplitudes for s in trajectories])
    if psi.shape[0] == 0:
        raise ValueError("need at least one trajectory")
    rho = psi.T @ psi.conj() / psi.shape[0]
    # symmetrize away rounding so the Hermiticity check is exact
    rho = 0.5 * (rho + rho.conj().T)
    return FullDensityMatrix(n_atoms, rho)


def coherence_samples(paths: np.ndarray, a: int, b: int) -> np.ndarray:
    """Per-path ``psi_a psi_b^*``; its mean is ``rho_ab`` of the averaged state."""
    return paths[:, a] * paths[:, b].conj()
