import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from qfreq.dfs import imperfect_input, sequence_probabilities
from qfreq.dynamics import NoiseParams, evolve_full, evolve_symmetric
from qfreq.fisher import (
    GeneratorSpec,
    PrecisionResult,
    classical_fisher,
    classical_fisher_fd,
    cramer_rao,
    ghz_optimal_precision,
    ghz_precision,
    qfi_mixed,
    qfi_pure,
)
from qfreq.symstate import (
    FullState,
    SchemeSpec,
    SymmetricState,
    dfs_pattern_state,
    ghz_full,
    ghz_state,
    product_state,
    random_full_state,
    symmetrize,
)


def ghz_qfi_closed_form(N, gamma, t):
    return t * t * N * N * math.exp(-2 * gamma * N * N * t)


def test_qfi_pure_ghz():
    assert qfi_pure(ghz_state(2), GeneratorSpec.number(2), 1.0) == pytest.approx(4.0, abs=1e-14)


@pytest.mark.parametrize("N", [1, 3, 8, 20])
def test_qfi_pure_product_is_binomial(N):
    t = 0.7
    assert qfi_pure(product_state(N), GeneratorSpec.number(N), t) == pytest.approx(t * t * N, rel=1e-12)


def test_qfi_pure_eigenstate_is_zero():
    s = SymmetricState(3, [0, 0, 1, 0])
    assert qfi_pure(s, GeneratorSpec.number(3), 2.0) == 0.0


def test_qfi_pure_dimension_mismatch():
    with pytest.raises(ValueError):
        qfi_pure(ghz_state(3), GeneratorSpec.number(2), 1.0)


@pytest.mark.parametrize("N", [1, 2, 5, 8, 10])
@pytest.mark.parametrize("gt", [0.0, 0.1, 0.5, 1.0])
@pytest.mark.parametrize("delta", [0.0, 0.3])
def test_qfi_mixed_ghz(N, gt, delta):
    # at N = 10, gt = 1 the coherence is ~1e-44, far below eps relative to the populations
    t = 0.8
    gamma = gt / t
    rho = evolve_symmetric(ghz_state(N), delta, NoiseParams(gamma, t))
    got = qfi_mixed(rho, GeneratorSpec.frequency(N), t)
    assert got == pytest.approx(ghz_qfi_closed_form(N, gamma, t), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(N=st.integers(1, 8), t=st.floats(0.01, 5), seed=st.integers(0, 10_000))
def test_qfi_mixed_pure_limit(N, t, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    s = SymmetricState(N, z / np.linalg.norm(z))
    gen = GeneratorSpec.frequency(N)
    rho = evolve_symmetric(s, 0.0, NoiseParams(0.0, t))
    assert qfi_mixed(rho, gen, t) == pytest.approx(qfi_pure(s, gen, t), rel=1e-9, abs=1e-12)


def test_qfi_mixed_rejects_bad_input():
    gen = GeneratorSpec.number(1)
    with pytest.raises(ValueError):
        qfi_mixed(np.array([[0.5, 0.3], [0.1, 0.5]]), gen, 1.0)
    with pytest.raises(ValueError):
        qfi_mixed(np.array([[1.5, 0], [0, -0.5]]), gen, 1.0)
    with pytest.raises(ValueError):
        qfi_mixed(np.eye(3) / 3, gen, 1.0)


def test_qfi_mixed_maximally_mixed_is_zero():
    assert qfi_mixed(np.eye(4) / 4, GeneratorSpec.number(3), 1.0) == 0.0


@pytest.mark.parametrize("N", [2, 3, 4])
def test_symmetrization_theorem(N):
    rng = np.random.default_rng(100 + N)
    noise = NoiseParams(0.4, 0.6)
    scheme = SchemeSpec.conventional(N)
    full_gen = GeneratorSpec.collective_z(N, 0.5)
    sym_gen = GeneratorSpec.frequency(N)
    for _ in range(20):
        state = random_full_state(N, rng)
        full = qfi_mixed(evolve_full(state, scheme, noise), full_gen, noise.t)
        sym = qfi_mixed(evolve_symmetric(symmetrize(state), 0.0, noise), sym_gen, noise.t)
        assert full == pytest.approx(sym, abs=1e-8)


def test_number_generator_scaling():
    # S_z = 2 n_0 - N, so the S_z QFI is four times the n_0 QFI
    N, t = 4, 0.5
    rho = evolve_full(ghz_full(N), SchemeSpec.conventional(N), NoiseParams(0.3, t))
    sz = qfi_mixed(rho, GeneratorSpec.collective_z(N), t)
    sym = evolve_symmetric(ghz_state(N), 0.0, NoiseParams(0.3, t))
    assert sz == pytest.approx(4 * qfi_mixed(sym, GeneratorSpec.number(N), t), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(N=st.integers(1, 6), seed=st.integers(0, 10_000), delta=st.floats(-5, 5))
def test_qfi_independent_of_operating_point(N, seed, delta):
    rng = np.random.default_rng(seed)
    amps = np.abs(rng.normal(size=N + 1))
    s = SymmetricState(N, amps / np.linalg.norm(amps))
    noise = NoiseParams(0.5, 0.7)
    gen = GeneratorSpec.frequency(N)
    a = qfi_mixed(evolve_symmetric(s, 0.0, noise), gen, noise.t)
    b = qfi_mixed(evolve_symmetric(s, delta, noise), gen, noise.t)
    assert a == pytest.approx(b, rel=1e-8, abs=1e-12)


def test_cramer_rao():
    assert cramer_rao(4.0, 1.0, 4.0) == pytest.approx(0.25)
    assert cramer_rao(0.0, 1.0, 2.0) == math.inf
    with pytest.raises(ValueError):
        cramer_rao(1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        cramer_rao(1.0, 0.0, 1.0)
    r = PrecisionResult.from_fisher(4.0, 0.5, 2.0)
    assert r.nu_used == 4.0
    assert r.bound == pytest.approx(0.25)


@pytest.mark.parametrize("N", [1, 2, 6, 17])
def test_ghz_optimal_precision_independent_of_N(N):
    t_opt, d = ghz_optimal_precision(N, 1.0, 1.0)
    assert d == pytest.approx(math.sqrt(2 * math.e), rel=1e-12)
    assert d == pytest.approx(ghz_precision(N, 1.0, t_opt, 1.0), rel=1e-12)


def test_ghz_optimal_time_n6():
    assert ghz_optimal_precision(6, 1.0, 1.0)[0] == pytest.approx(1 / 72, rel=1e-15)


@pytest.mark.parametrize("N,gamma", [(2, 1.0), (5, 0.3), (10, 2.0)])
def test_ghz_optimal_time_matches_numerical_minimum(N, gamma):
    t_opt, d = ghz_optimal_precision(N, gamma, 3.0)
    res = minimize_scalar(
        lambda lt: ghz_precision(N, gamma, math.exp(lt), 3.0),
        bracket=(math.log(t_opt) - 1, math.log(t_opt) + 1),
        tol=1e-12,
    )
    assert math.exp(res.x) == pytest.approx(t_opt, rel=1e-6)
    assert res.fun == pytest.approx(d, rel=1e-12)


def test_ghz_optimal_rejects_nonpositive():
    with pytest.raises(ValueError):
        ghz_optimal_precision(2, 0.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.05, 3.0), t=st.floats(0.1, 2))
def test_classical_fisher_two_outcome(alpha, t):
    c, s = math.cos(alpha * t), math.sin(alpha * t)
    if abs(s) < 1e-3:
        return
    p = [(1 + c) / 2, (1 - c) / 2]
    dp = [-t * s / 2, t * s / 2]
    assert classical_fisher(p, dp) == pytest.approx(t * t, rel=1e-10)

    def probs(a):
        return np.array([(1 + math.cos(a * t)) / 2, (1 - math.cos(a * t)) / 2])

    assert classical_fisher_fd(probs, alpha) == pytest.approx(t * t, rel=1e-5)


def test_classical_fisher_constant_distribution():
    assert classical_fisher_fd(lambda a: np.array([0.2, 0.3, 0.5]), 1.0) == 0.0


def test_classical_fisher_validation():
    with pytest.raises(ValueError):
        classical_fisher([1.2, -0.2], [0, 0])
    with pytest.raises(ValueError):
        classical_fisher([0.5, 0.4], [0, 0])
    with pytest.raises(ValueError):
        classical_fisher([0.5, 0.5], [0, 0, 0])


def test_generator_validation():
    with pytest.raises(ValueError):
        GeneratorSpec(np.array([1j, 0]))
    with pytest.raises(ValueError):
        GeneratorSpec(np.ones((2, 2)))


@pytest.mark.parametrize("eta", [1.0, 0.9])
def test_measurement_fisher_below_qfi_dfs_omega(eta):
    N, t, xi = 4, 0.7, 0.8
    state = ghz_full(N)
    noise = NoiseParams(0.5, t)

    def rho_at(Omega):
        scheme = SchemeSpec.dfs_omega("0011", Omega + 0.1, Omega - 0.1)
        return evolve_full(imperfect_input(state, xi), scheme, noise)

    Omega0 = math.pi / (2 * N * t) + 0.05
    F = classical_fisher_fd(lambda a: sequence_probabilities(rho_at(a), eta, eta), Omega0)
    scheme = SchemeSpec.dfs_omega("0011", Omega0 + 0.1, Omega0 - 0.1)
    FQ = qfi_mixed(rho_at(Omega0), GeneratorSpec.for_scheme(scheme), t)
    assert 0 < F <= FQ * (1 + 1e-6)


def test_measurement_fisher_below_qfi_dfs_delta():
    N, t = 4, 0.9
    state = dfs_pattern_state("0101")

    def rho_at(delta):
        scheme = SchemeSpec.dfs_delta("0101", 1.0 + delta / 2, 1.0 - delta / 2)
        return evolve_full(imperfect_input(state, 0.9), scheme, NoiseParams(1.0, t))

    d0 = 0.4
    F = classical_fisher_fd(lambda a: sequence_probabilities(rho_at(a), 0.95, 0.97), d0)
    scheme = SchemeSpec.dfs_delta("0101", 1.0 + d0 / 2, 1.0 - d0 / 2)
    FQ = qfi_mixed(rho_at(d0), GeneratorSpec.for_scheme(scheme), t)
    assert 0 < F <= FQ * (1 + 1e-6)


def test_measurement_fisher_below_qfi_product():
    N, t = 3, 0.6
    plus = np.ones(2**N) / math.sqrt(2**N)
    state = FullState(N, plus)

    def rho_at(w):
        return evolve_full(state, SchemeSpec.conventional(N, omega=w), NoiseParams(0.4, t))

    w0 = 1.1
    F = classical_fisher_fd(lambda a: sequence_probabilities(rho_at(a), 1.0, 1.0), w0)
    FQ = qfi_mixed(rho_at(w0), GeneratorSpec.collective_z(N, 0.5), t)
    assert 0 < F <= FQ * (1 + 1e-6)
