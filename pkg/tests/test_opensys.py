import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from sacsim.errors import DimensionMismatch, InvariantViolation
from sacsim.opensys import (
    ChannelDilation,
    DensityVector,
    density_energy,
    density_flow,
    devectorize,
    dilate_kraus_set,
    evolve_density_vector,
    kraus_from_dilation,
    lindblad_generator,
    mixture_dilation_simulate,
    to_hw_coordinates,
    vectorize_density,
)
from sacsim.statespace import (
    DensityMatrix,
    PureState,
    bloch_vector,
    random_density,
    random_hermitian,
    random_state,
    random_unitary,
    trace_distance,
)

seeds = st.integers(0, 2**32 - 1)


def lindblad_rhs(h, jumps):
    def rhs(_t, y):
        d = h.shape[0]
        rho = y.reshape(d, d)
        out = -1j * (h @ rho - rho @ h)
        for g, op in jumps:
            ldl = op.conj().T @ op
            out += g * (op @ rho @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        return out.reshape(-1)

    return rhs


def ode_oracle(h, jumps, rho0, t):
    sol = solve_ivp(lindblad_rhs(h, jumps), (0, t), rho0.astype(complex).reshape(-1),
                    method="DOP853", rtol=1e-12, atol=1e-13)
    d = h.shape[0]
    return sol.y[:, -1].reshape(d, d)


def random_jumps(d, rng, count=2):
    return [(float(rng.uniform(0.05, 1.0)), rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) for _ in range(count)]


def random_kraus(d, n, rng):
    u = random_unitary(d * n, rng)
    return [u[i * d : (i + 1) * d, :d] for i in range(n)]


def test_vectorization_round_trip(rng):
    rho = random_density(3, rng)
    dv = vectorize_density(rho)
    np.testing.assert_allclose(dv.vec(), rho.entries.reshape(-1), atol=1e-14)
    np.testing.assert_allclose(devectorize(dv).entries, rho.entries, atol=1e-14)
    assert abs(dv.trace - 1) < 1e-14
    np.testing.assert_allclose(dv.coefficients[1:], bloch_vector(rho), atol=1e-14)


def test_purity_identity_static(rng):
    for d in (2, 3, 5):
        rho = random_density(d, rng)
        dv = vectorize_density(rho)
        assert abs(dv.purity - rho.purity()) < 1e-12


@pytest.mark.parametrize("case", range(20))
def test_vectorized_evolution_matches_ode(case):
    rng = np.random.default_rng(1000 + case)
    d = int(rng.integers(2, 5))
    h = random_hermitian(d, rng)
    jumps = random_jumps(d, rng, int(rng.integers(0, 3)))
    rho0 = random_density(d, rng)
    t = float(rng.uniform(0.1, 2.0))
    traj = evolve_density_vector(lindblad_generator(h, jumps), vectorize_density(rho0), t, samples=20)
    ref = ode_oracle(h, jumps, rho0.entries, t)
    assert trace_distance(traj.density_matrices()[-1], ref) < 1e-8
    assert np.max(np.abs(traj.traces() - 1)) < 1e-10
    for dv, rho in zip(traj.vectors, traj.density_matrices()):
        assert abs(dv.purity - rho.purity()) < 1e-10


def test_unitary_generator_matches_conjugation(rng):
    d = 3
    h = random_hermitian(d, rng)
    rho0 = random_density(d, rng)
    traj = evolve_density_vector(lindblad_generator(h), vectorize_density(rho0), 1.7)
    u = expm(-1.7j * h)
    assert trace_distance(traj.density_matrices()[-1], u @ rho0.entries @ u.conj().T) < 1e-10
    assert np.max(np.abs(traj.purities() - traj.purities()[0])) < 1e-10


def test_density_flow_obeys_hamilton_form(rng):
    # dQ/dt = (d/2) dE/dP, dP/dt = -(d/2) dE/dQ for a unitary generator
    d = 3
    gen = lindblad_generator(random_hermitian(d, rng))
    ln = gen.hw_matrix
    dv = vectorize_density(random_density(d, rng))
    n0 = dv.coefficients
    eps = 1e-6
    m = d * d

    def energy(n):
        return density_energy(ln, DensityVector(d, n))

    dE_dQ = np.array([(energy(n0 + eps * e) - energy(n0 - eps * e)) / (2 * eps) for e in np.eye(m)])
    dE_dP = np.array([(energy(n0 + 1j * eps * e) - energy(n0 - 1j * eps * e)) / (2 * eps) for e in np.eye(m)])
    dq, dp = density_flow(ln, dv)
    assert np.max(np.abs(dq - 0.5 * d * dE_dP)) < 1e-6
    assert np.max(np.abs(dp + 0.5 * d * dE_dQ)) < 1e-6


def test_hw_generator_is_hermitian_for_closed_system(rng):
    ln = lindblad_generator(random_hermitian(4, rng)).hw_matrix
    assert np.max(np.abs(ln - ln.conj().T)) < 1e-12


def test_to_hw_coordinates_of_identity():
    d = 3
    gen = lindblad_generator(np.zeros((d, d)))
    np.testing.assert_allclose(to_hw_coordinates(np.eye(d * d), d), np.eye(d * d), atol=1e-14)
    assert np.max(np.abs(gen.hw_matrix)) == 0


def test_amplitude_damping_closed_form():
    g = 0.7
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    gen = lindblad_generator(np.zeros((2, 2)), [(g, lower)])
    rho0 = DensityMatrix(np.array([[0.25, 0.2 - 0.1j], [0.2 + 0.1j, 0.75]]))
    traj = evolve_density_vector(gen, vectorize_density(rho0), 3.0, samples=31)
    for t, rho in zip(traj.times, traj.density_matrices()):
        assert abs(rho.entries[1, 1].real - np.exp(-g * t) * 0.75) < 1e-8
        assert abs(rho.entries[0, 1] - np.exp(-g * t / 2) * rho0.entries[0, 1]) < 1e-8
    assert not gen.is_unital()


def test_dephasing_is_unital():
    z = np.diag([1.0, -1.0])
    assert lindblad_generator(np.eye(2), [(0.3, z)]).is_unital()


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        lindblad_generator(np.eye(2), [(-0.1, np.eye(2))])


def test_time_dependent_generator(rng):
    d = 2
    h0, h1 = random_hermitian(d, rng), random_hermitian(d, rng)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    jumps = [(0.4, lower)]
    rho0 = random_density(d, rng)
    traj = evolve_density_vector(lambda t: lindblad_generator(h0 + np.sin(t) * h1, jumps),
                                 vectorize_density(rho0), 1.5, samples=4, steps=3000)

    def rhs(t, y):
        return lindblad_rhs(h0 + np.sin(t) * h1, jumps)(t, y)

    sol = solve_ivp(rhs, (0, 1.5), rho0.entries.reshape(-1), method="DOP853", rtol=1e-12, atol=1e-13)
    assert trace_distance(traj.density_matrices()[-1], sol.y[:, -1].reshape(d, d)) < 1e-6
    assert abs(traj.times[-1] - 1.5) < 1e-12


def test_trace_breach_is_reported():
    bad = DensityVector(2, np.array([1.5, 0, 0, 0]))
    with pytest.raises(InvariantViolation):
        bad.check()
    with pytest.raises(InvariantViolation):
        evolve_density_vector(lindblad_generator(np.eye(2)), bad, 1.0)


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        DensityVector(2, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        evolve_density_vector(lindblad_generator(np.eye(3)), vectorize_density(DensityMatrix.maximally_mixed(2)), 1.0)


@given(seed=seeds, d=st.integers(2, 4), n=st.integers(1, 4))
def test_dilation_round_trip(seed, d, n):
    kraus = random_kraus(d, n, np.random.default_rng(seed))
    dil = dilate_kraus_set(kraus)
    assert isinstance(dil, ChannelDilation)
    back = kraus_from_dilation(dil.unitary, d, n)
    assert max(np.max(np.abs(a - b)) for a, b in zip(back, kraus)) < 1e-12
    assert np.max(np.abs(dil.unitary.conj().T @ dil.unitary - np.eye(d * n))) < 1e-12


def test_dilation_applies_channel(rng):
    kraus = random_kraus(3, 2, rng)
    dil = dilate_kraus_set(kraus)
    rho = random_density(3, rng)
    joint = np.kron(rho.entries, np.diag([1.0, 0.0]))
    out = dil.unitary @ joint @ dil.unitary.conj().T
    reduced = np.einsum("ajbj->ab", out.reshape(3, 2, 3, 2))
    np.testing.assert_allclose(dil.apply(rho), reduced, atol=1e-12)


def test_dilation_is_reproducible(rng):
    kraus = random_kraus(2, 3, rng)
    assert np.array_equal(dilate_kraus_set(kraus).unitary, dilate_kraus_set(kraus).unitary)


def test_non_trace_preserving_kraus_rejected():
    with pytest.raises(ValueError):
        dilate_kraus_set([np.eye(2) * 0.5])


def test_mixture_dilation_monte_carlo(rng):
    d = 2
    kraus = random_kraus(d, 2, rng)
    psis = [random_state(d, rng) for _ in range(3)]
    w = [0.5, 0.3, 0.2]
    rho = sum(wi * p.projector() for wi, p in zip(w, psis))
    oracle = sum(k @ rho @ k.conj().T for k in kraus)
    est = mixture_dilation_simulate(dilate_kraus_set(kraus), list(zip(w, psis)), 100_000, seed=7)
    assert trace_distance(est, oracle) < 0.01
    again = mixture_dilation_simulate(dilate_kraus_set(kraus), list(zip(w, psis)), 100_000, seed=7)
    assert np.array_equal(est.entries, again.entries)


def test_mixture_rejects_bad_weights(rng):
    dil = dilate_kraus_set([np.eye(2)])
    with pytest.raises(ValueError):
        mixture_dilation_simulate(dil, [(0.7, random_state(2, rng))], 10, 0)
