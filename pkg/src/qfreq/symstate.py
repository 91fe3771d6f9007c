"""Probe states in the symmetric (Fock) subspace and in the full 2^N space.

Basis conventions
-----------------
* Symmetric states are amplitude vectors ``(a_0, ..., a_N)`` where ``a_k``
  multiplies the Fock state ``|k, N-k>`` (k atoms in ``|0>``).
* Full states are indexed by bitstrings. Atom 0 is the most significant bit,
  so the pattern ``"0101"`` is basis index ``int("0101", 2)``. Bit value 0 is
  the atomic state ``|0>`` with ``sigma_z = +1``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import comb

MAX_FULL_ATOMS = 12
NORM_TOL = 1e-12


def _frozen(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_norm(amplitudes: np.ndarray) -> None:
    norm2 = float(np.sum(np.abs(amplitudes) ** 2))
    if abs(norm2 - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (|psi|^2 = {norm2!r})")


@lru_cache(maxsize=None)
def z_signs(n_atoms: int) -> np.ndarray:
    """Matrix of single-atom ``sigma_z`` eigenvalues, shape ``(2**N, N)``."""
    idx = np.arange(2**n_atoms)[:, None]
    shifts = np.arange(n_atoms - 1, -1, -1)[None, :]
    bits = (idx >> shifts) & 1
    signs = 1 - 2 * bits
    signs.setflags(write=False)
    return signs


@lru_cache(maxsize=None)
def excitation_sector(n_atoms: int) -> np.ndarray:
    """Number of atoms in ``|0>`` for every full basis index."""
    zeros = np.sum(z_signs(n_atoms) > 0, axis=1)
    zeros.setflags(write=False)
    return zeros


@dataclass(frozen=True, eq=False)
class SymmetricState:
    """Pure permutation-symmetric state of ``n_atoms`` two-level atoms."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.n_atoms + 1,):
            raise ValueError(
                f"expected {self.n_atoms + 1} amplitudes, got shape {amps.shape}"
            )
        _check_norm(amps)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    def embed(self) -> "FullState":
        """The same state written over the 2^N computational basis."""
        N = self.n_atoms
        if N > MAX_FULL_ATOMS:
            raise ValueError(f"full representation limited to N <= {MAX_FULL_ATOMS}")
        k = excitation_sector(N)
        amps = self.amplitudes[k] / np.sqrt(comb(N, k))
        return FullState(N, amps)


@dataclass(frozen=True, eq=False)
class FullState:
    """Pure state over the full computational basis (oracle scale only)."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_atoms <= MAX_FULL_ATOMS:
            raise ValueError(f"n_atoms must be in [1, {MAX_FULL_ATOMS}]")
        amps = _frozen(self.amplitudes)
        if amps.shape != (2**self.n_atoms,):
            raise ValueError(
                f"expected {2 ** self.n_atoms} amplitudes, got shape {amps.shape}"
            )
        _check_norm(amps)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_atoms

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def ghz_state(n_atoms: int) -> SymmetricState:
    """``(|N,0> + |0,N>)/sqrt(2)``."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    amps = np.zeros(n_atoms + 1, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return SymmetricState(n_atoms, amps)


def product_state(n_atoms: int) -> SymmetricState:
    """``[(|0> + |1>)/sqrt(2)]^N`` as a binomial ("coherent") Fock superposition."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    k = np.arange(n_atoms + 1)
    amps = np.sqrt(comb(n_atoms, k) / 2.0**n_atoms)
    # normalize away the last-ulp drift of comb() at large N
    amps /= np.linalg.norm(amps)
    return SymmetricState(n_atoms, amps)


def _parse_pattern(pattern: Union[str, Sequence[int]]) -> Tuple[int, ...]:
    bits = tuple(int(b) for b in pattern)
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"pattern must contain only 0/1, got {pattern!r}")
    return bits


def basis_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def dfs_pattern_state(pattern: Union[str, Sequence[int]]) -> FullState:
    """``(|i_1...i_N> + |complement>)/sqrt(2)`` for a balanced bit pattern.

    Atoms with ``i_j = 0`` form set A, the others set B. The state is
    annihilated by ``S_z`` and so lies in the collective-dephasing DFS.
    """
    bits = _parse_pattern(pattern)
    N = len(bits)
    if N == 0 or N % 2 or sum(bits) != N // 2:
        raise ValueError(f"pattern must be balanced with even length, got {pattern!r}")
    amps = np.zeros(2**N, dtype=complex)
    amps[basis_index(bits)] = 1 / np.sqrt(2)
    amps[basis_index([1 - b for b in bits])] = 1 / np.sqrt(2)
    return FullState(N, amps)


def ghz_full(n_atoms: int) -> FullState:
    """``(|0...0> + |1...1>)/sqrt(2)`` over the full basis."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    amps = np.zeros(2**n_atoms, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return FullState(n_atoms, amps)


def symmetrize(state: FullState) -> SymmetricState:
    """Map an arbitrary state to the symmetric state with the same sector norms.

    ``a_k`` is the norm of the projection of ``state`` onto the subspace with
    k atoms in ``|0>``. Sector phases are dropped (set real, non-negative);
    they do not change the QFI under collective dephasing.
    """
    N = state.n_atoms
    weights = np.bincount(
        excitation_sector(N), weights=np.abs(state.amplitudes) ** 2, minlength=N + 1
    )
    amps = np.sqrt(weights)
    amps /= np.linalg.norm(amps)
    return SymmetricState(N, amps)


def random_full_state(n_atoms: int, rng: np.random.Generator) -> FullState:
    """Haar-random pure state, used by property tests and demos."""
    z = rng.normal(size=2**n_atoms) + 1j * rng.normal(size=2**n_atoms)
    return FullState(n_atoms, z / np.linalg.norm(z))


class SchemeKind(enum.Enum):
    CONVENTIONAL = "conventional"
    DFS_DELTA = "dfs_delta"
    DFS_OMEGA = "dfs_omega"


@dataclass(frozen=True, eq=False)
class SchemeSpec:
    """Per-atom frequencies, noise couplings and lasers of a Ramsey scheme.

    The free Hamiltonian in the rotating frame is
    ``H_0 = 1/2 sum_j (omega_j - laser_j) sigma_z^j`` and the collective noise
    operator is ``L = sum_j coupling_j sigma_z^j``. Use the classmethod
    constructors rather than building one by hand.
    """

    n_atoms: int
    omegas: np.ndarray
    couplings: np.ndarray
    laser_freqs: np.ndarray
    kind: SchemeKind
    partition: Optional[Tuple[int, ...]] = field(default=None)

    def __post_init__(self):
        N = self.n_atoms
        if N < 1:
            raise ValueError("n_atoms must be >= 1")
        for name in ("omegas", "couplings", "laser_freqs"):
            arr = _frozen(getattr(self, name), dtype=float)
            if arr.shape != (N,):
                raise ValueError(f"{name} must have length {N}")
            object.__setattr__(self, name, arr)
        if self.kind is SchemeKind.CONVENTIONAL:
            if np.ptp(self.omegas) != 0 or np.any(self.couplings != 1):
                raise ValueError("conventional scheme needs equal omegas and couplings 1")
            return
        part = self.partition
        if part is None or len(part) != N or N % 2 or sum(part) != N // 2:
            raise ValueError("DFS schemes need a balanced A/B partition of even N")
        in_a = np.array(part) == 0
        if np.ptp(self.omegas[in_a]) != 0 or np.ptp(self.omegas[~in_a]) != 0:
            raise ValueError("omegas must be constant on each set")
        if self.kind is SchemeKind.DFS_DELTA:
            expected = np.ones(N)
        else:
            expected = np.where(in_a, -1.0, 1.0)
        if np.any(self.couplings != expected):
            raise ValueError(f"couplings inconsistent with {self.kind.value}")

    @classmethod
    def conventional(cls, n_atoms: int, omega: float = 0.0, laser_freq: float = 0.0):
        return cls(
            n_atoms,
            np.full(n_atoms, float(omega)),
            np.ones(n_atoms),
            np.full(n_atoms, float(laser_freq)),
            SchemeKind.CONVENTIONAL,
        )

    @classmethod
    def dfs_delta(cls, partition, omega1: float, omega2: float, laser_freq: float = 0.0):
        """Scheme for ``delta = omega1 - omega2``; set A (bit 0) has ``omega1``."""
        part = _parse_pattern(partition)
        in_a = np.array(part) == 0
        return cls(
            len(part),
            np.where(in_a, omega1, omega2),
            np.ones(len(part)),
            np.full(len(part), float(laser_freq)),
            SchemeKind.DFS_DELTA,
            part,
        )

    @classmethod
    def dfs_omega(
        cls,
        partition,
        omega1: float,
        omega2: float,
        laser_freqs: Tuple[float, float] = (0.0, 0.0),
    ):
        """Scheme for ``Omega = (omega1 + omega2)/2`` with opposite noise couplings."""
        part = _parse_pattern(partition)
        in_a = np.array(part) == 0
        return cls(
            len(part),
            np.where(in_a, omega1, omega2),
            np.where(in_a, -1.0, 1.0),
            np.where(in_a, laser_freqs[0], laser_freqs[1]),
            SchemeKind.DFS_OMEGA,
            part,
        )

    @property
    def detunings(self) -> np.ndarray:
        return self.omegas - self.laser_freqs

    def energies(self) -> np.ndarray:
        """Diagonal of ``H_0`` over the 2^N basis."""
        return 0.5 * z_signs(self.n_atoms) @ self.detunings

    def noise_diagonal(self) -> np.ndarray:
        """Diagonal of the noise operator ``L`` over the 2^N basis."""
        return z_signs(self.n_atoms) @ self.couplings

    def apply_noise_operator(self, state: FullState) -> np.ndarray:
        return self.noise_diagonal() * state.amplitudes
