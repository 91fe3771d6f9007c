import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qfreq.dynamics import (
    FullDensityMatrix,
    NoiseParams,
    coherence_samples,
    euler_maruyama_ensemble,
    euler_maruyama_trajectory,
    evolve_full,
    evolve_symmetric,
    langevin_ensemble,
    langevin_trajectory,
    trajectory_average,
)
from qfreq.symstate import (
    SchemeSpec,
    SymmetricState,
    dfs_pattern_state,
    excitation_sector,
    ghz_full,
    ghz_state,
    product_state,
    random_full_state,
)


def random_symmetric(N, rng):
    z = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    return SymmetricState(N, z / np.linalg.norm(z))


def test_unitary_limit_is_pure():
    s = product_state(5)
    rho = evolve_symmetric(s, 0.7, NoiseParams(0.0, 2.0))
    psi = s.amplitudes * np.exp(-1j * 0.7 * 2.0 * np.arange(6))
    np.testing.assert_allclose(rho.entries, np.outer(psi, psi.conj()), atol=1e-15)
    assert rho.purity() == pytest.approx(1.0, abs=1e-12)


def test_ghz_coherence_decay():
    # gamma t = 0.25, N = 2: |rho_{N,0}| = exp(-gamma N^2 t) / 2 = exp(-1) / 2
    rho = evolve_symmetric(ghz_state(2), 0.0, NoiseParams(1.0, 0.25))
    assert abs(rho.entries[2, 0]) == pytest.approx(0.18393972058572117, rel=1e-14)


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(-1.0, 1.0)
    with pytest.raises(ValueError):
        NoiseParams(1.0, math.nan)


@settings(max_examples=30, deadline=None)
@given(
    N=st.integers(1, 8),
    gamma=st.floats(0, 5),
    t=st.floats(0, 3),
    delta=st.floats(-10, 10),
    seed=st.integers(0, 2**32 - 1),
)
def test_symmetric_evolution_is_a_state(N, gamma, t, delta, seed):
    s = random_symmetric(N, np.random.default_rng(seed))
    rho = evolve_symmetric(s, delta, NoiseParams(gamma, t)).entries
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_superdecoherence_full_space():
    for N in (2, 3, 4):
        noise = NoiseParams(0.8, 0.4)
        rho = evolve_full(ghz_full(N), SchemeSpec.conventional(N), noise)
        assert abs(rho.entries[0, -1]) == pytest.approx(0.5 * math.exp(-0.8 * N * N * 0.4), rel=1e-13)


def test_dfs_state_stays_pure_under_dfs_delta():
    N, w1, w2, t = 4, 2.5, 1.0, 1.7
    scheme = SchemeSpec.dfs_delta("0101", w1, w2)
    state = dfs_pattern_state("0101")
    rho = evolve_full(state, scheme, NoiseParams(3.0, t))
    assert rho.purity() == pytest.approx(1.0, abs=1e-12)
    # relative phase between the two branches is (w1 - w2) N/2 t
    rel = rho.entries[0b0101, 0b1010] / abs(rho.entries[0b0101, 0b1010])
    assert rel == pytest.approx(np.exp(-1j * (w1 - w2) * N / 2 * t), abs=1e-12)


def test_identity_at_zero_time():
    state = random_full_state(3, np.random.default_rng(1))
    rho = evolve_full(state, SchemeSpec.conventional(3, omega=1.0), NoiseParams(0.0, 0.0))
    np.testing.assert_allclose(rho.entries, state.projector(), atol=1e-15)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_symmetric_matches_full_conventional(N):
    rng = np.random.default_rng(N)
    s = random_symmetric(N, rng)
    noise = NoiseParams(0.37, 0.9)
    delta = 1.3
    sym = evolve_symmetric(s, delta, noise).entries
    full = evolve_full(s.embed(), SchemeSpec.conventional(N, omega=delta), noise).entries
    # restrict the full matrix to the Fock basis |k, N-k>
    k = excitation_sector(N)
    basis = np.zeros((2**N, N + 1))
    basis[np.arange(2**N), k] = 1.0
    basis /= np.linalg.norm(basis, axis=0)
    restricted = basis.T @ full @ basis
    np.testing.assert_allclose(restricted, sym, atol=1e-10)


def test_decay_exponent_exact():
    N = 4
    scheme = SchemeSpec.dfs_omega("0110", 0.3, 0.9, laser_freqs=(0.1, 0.2))
    state = random_full_state(N, np.random.default_rng(7))
    noise = NoiseParams(1.1, 0.6)
    rho = evolve_full(state, scheme, noise).entries
    rho0 = state.projector()
    L = scheme.noise_diagonal()
    ratio = np.abs(rho) / np.abs(rho0)
    expected = np.exp(-0.25 * noise.gamma * (L[:, None] - L[None, :]) ** 2 * noise.t)
    np.testing.assert_allclose(ratio, expected, rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(gamma=st.floats(0, 10), t=st.floats(0, 10), seed=st.integers(0, 1000))
def test_dark_states_keep_purity(gamma, t, seed):
    scheme = SchemeSpec.dfs_omega("0011", 1.0, 2.0)
    rho = evolve_full(ghz_full(4), scheme, NoiseParams(gamma, t))
    assert rho.purity() == pytest.approx(1.0, abs=1e-12)


def test_langevin_without_noise_is_deterministic():
    state = ghz_full(3)
    scheme = SchemeSpec.conventional(3, omega=0.4)
    noise = NoiseParams(0.0, 1.5)
    a = langevin_trajectory(state, scheme, noise, 1)
    b = langevin_trajectory(state, scheme, noise, 2)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    expected = state.amplitudes * np.exp(-1j * scheme.energies() * 1.5)
    np.testing.assert_allclose(a.amplitudes, expected, atol=1e-15)


def test_langevin_seed_reproducible():
    state = ghz_full(3)
    scheme = SchemeSpec.conventional(3)
    noise = NoiseParams(1.0, 0.3)
    a = langevin_trajectory(state, scheme, noise, 42)
    b = langevin_trajectory(state, scheme, noise, 42)
    assert a.amplitudes.tobytes() == b.amplitudes.tobytes()
    assert np.linalg.norm(a.amplitudes) == pytest.approx(1.0, abs=1e-14)


def test_langevin_ghz_coherence_monte_carlo():
    N, noise = 3, NoiseParams(1.0, 0.3)
    paths = langevin_ensemble(ghz_full(N), SchemeSpec.conventional(N), noise, 100_000, 2024)
    samples = coherence_samples(paths, 0, 2**N - 1)
    mean = samples.mean()
    se = np.sqrt(np.mean(np.abs(samples - mean) ** 2) / samples.size)
    target = math.exp(-2.7) / 2  # 0.03362...
    assert abs(abs(mean) - target) < 3 * se


def test_trajectory_average_matches_evolve_full():
    N = 2
    scheme = SchemeSpec.conventional(N, omega=0.5)
    noise = NoiseParams(0.6, 0.5)
    state = random_full_state(N, np.random.default_rng(3))
    paths = langevin_ensemble(state, scheme, noise, 100_000, 11)
    rho_mc = trajectory_average(paths, n_atoms=N).entries
    rho = evolve_full(state, scheme, noise).entries
    # per-element standard errors from the samples
    for a in range(4):
        for b in range(4):
            s = coherence_samples(paths, a, b)
            se = np.sqrt(np.mean(np.abs(s - s.mean()) ** 2) / s.size)
            # populations do not fluctuate, so allow round-off there
            assert abs(rho_mc[a, b] - rho[a, b]) <= 3 * se + 1e-12


def test_trajectory_average_trivial_cases():
    s = random_full_state(2, np.random.default_rng(0))
    rho = trajectory_average([s])
    np.testing.assert_allclose(rho.entries, s.projector(), atol=1e-15)
    rho5 = trajectory_average([s] * 5)
    np.testing.assert_allclose(rho5.entries, s.projector(), atol=1e-15)
    assert isinstance(rho5, FullDensityMatrix)
    with pytest.raises(ValueError):
        trajectory_average([])
    with pytest.raises(ValueError):
        trajectory_average([s, ghz_full(3)])


def test_euler_maruyama_rejects_zero_steps():
    with pytest.raises(ValueError):
        euler_maruyama_trajectory(ghz_full(2), SchemeSpec.conventional(2), NoiseParams(1, 1), 0, 0)


def test_euler_maruyama_noiseless_phase_error_is_first_order():
    state = ghz_full(2)
    scheme = SchemeSpec.conventional(2, omega=1.0)
    noise = NoiseParams(0.0, 1.0)
    exact = state.amplitudes * np.exp(-1j * scheme.energies())
    errs = []
    for n in (100, 200, 400):
        psi = euler_maruyama_trajectory(state, scheme, noise, n, 0).amplitudes
        errs.append(np.max(np.abs(psi - exact)))
    # bounded by C dt; renormalization makes it even second order here
    for n, e in zip((100, 200, 400), errs):
        assert e < 1.0 / n
    assert errs[0] / errs[1] > 1.9
    assert errs[1] / errs[2] > 1.9


def em_expected_ghz_coherence(N, gamma, t, n_steps):
    """Exact mean of the renormalized Euler-Maruyama GHZ coherence at zero detuning.

    Both branches keep equal modulus, so each step multiplies the coherence by
    z / conj(z) with z = 1 - gamma N^2 dt / 4 - i sqrt(gamma/2) N dW; the steps
    are independent, so the mean is (1/2) m^n with m a Gaussian quadrature.
    """
    dt = t / n_steps
    a = 1 - gamma * N * N * dt / 4
    b = math.sqrt(gamma / 2) * N * math.sqrt(dt)
    integrand = lambda x: math.cos(2 * math.atan(b * x / a)) * math.exp(-x * x / 2)
    m = quad(integrand, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)[0] / math.sqrt(2 * math.pi)
    return 0.5 * m**n_steps


def test_euler_maruyama_ensemble_close_to_analytic():
    # the 5% band is about one standard error of a 10^4-path mean
    N, noise = 2, NoiseParams(1.0, 0.5)
    paths = euler_maruyama_ensemble(ghz_full(N), SchemeSpec.conventional(N), noise, 1000, 10_000, 5)
    mean = coherence_samples(paths, 0, 3).mean()
    target = math.exp(-2) / 2
    assert abs(abs(mean) - target) < 0.05 * target


def test_euler_maruyama_ensemble_within_standard_errors():
    N, noise = 2, NoiseParams(1.0, 0.5)
    paths = euler_maruyama_ensemble(ghz_full(N), SchemeSpec.conventional(N), noise, 1000, 10_000, 5)
    s = coherence_samples(paths, 0, 3)
    se = np.sqrt(np.mean(np.abs(s - s.mean()) ** 2) / s.size)
    assert abs(abs(s.mean()) - math.exp(-2) / 2) < 3 * se
    # discretization bias at this step count is far below the sampling error
    assert abs(em_expected_ghz_coherence(N, 1.0, 0.5, 1000) - math.exp(-2) / 2) < 0.1 * se


def test_euler_maruyama_matches_its_exact_weak_mean():
    # coarse steps: discretization bias is larger than the Monte-Carlo error
    N, noise, n = 2, NoiseParams(1.0, 0.5), 16
    paths = euler_maruyama_ensemble(ghz_full(N), SchemeSpec.conventional(N), noise, n, 200_000, 9)
    s = coherence_samples(paths, 0, 3)
    se = np.sqrt(np.mean(np.abs(s - s.mean()) ** 2) / s.size)
    expected = em_expected_ghz_coherence(N, 1.0, 0.5, n)
    assert abs(s.mean().real - expected) < 3 * se
    assert abs(expected - math.exp(-2) / 2) > 5 * se


def test_euler_maruyama_weak_error_halves():
    exact = math.exp(-2) / 2
    errs = [abs(em_expected_ghz_coherence(2, 1.0, 0.5, n) - exact) for n in (64, 128, 256)]
    assert errs[0] > errs[1] > errs[2]
    assert 1.7 < errs[0] / errs[1] < 2.3
    assert 1.7 < errs[1] / errs[2] < 2.3


def test_ensemble_rows_use_per_path_seeds():
    state, scheme = ghz_full(3), SchemeSpec.conventional(3, omega=0.2)
    noise = NoiseParams(1.0, 0.3)
    paths = langevin_ensemble(state, scheme, noise, 4, 100)
    for i in range(4):
        row = langevin_trajectory(state, scheme, noise, 100 + i).amplitudes
        np.testing.assert_array_equal(paths[i], row)
    em = euler_maruyama_ensemble(state, scheme, noise, 7, 3, 50)
    for i in range(3):
        row = euler_maruyama_trajectory(state, scheme, noise, 7, 50 + i).amplitudes
        np.testing.assert_array_equal(em[i], row)
