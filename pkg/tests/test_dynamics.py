import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from sacsim.dynamics import (
    QuadraticHamiltonian,
    SymplecticMap,
    apply_symplectic,
    classical_hamiltonian,
    evolve,
    exact_propagator,
    flow_field,
    flow_jacobian,
    symplectic_form,
    unitary_to_symplectic,
)
from sacsim.errors import DimensionMismatch, NotHermitian, NotUnitary
from sacsim.statespace import (
    HiddenParticleSet,
    PureState,
    computational_basis,
    from_phase_space,
    hw_eigenbasis,
    random_hermitian,
    random_state,
    random_unitary,
    to_phase_space,
)

seeds = st.integers(0, 2**32 - 1)


def _case(seed, d):
    rng = np.random.default_rng(seed)
    return random_hermitian(d, rng), random_state(d, rng), rng


@given(seed=seeds, d=st.integers(2, 16), t=st.floats(0, 10))
def test_exact_matches_expm(seed, d, t):
    h, psi, _ = _case(seed, d)
    traj = evolve(QuadraticHamiltonian(h), to_phase_space(psi, computational_basis(d)), t)
    ref = sla.expm(-1j * t * h) @ psi.amps
    assert np.linalg.norm(from_phase_space(traj.final).amps - ref) < 1e-8


@given(seed=seeds, d=st.integers(2, 8), t=st.floats(0, 3))
def test_midpoint_matches_expm(seed, d, t):
    h, psi, _ = _case(seed, d)
    traj = evolve(QuadraticHamiltonian(h), to_phase_space(psi, computational_basis(d)), t, "midpoint", 1e-3)
    ref = sla.expm(-1j * t * h) @ psi.amps
    assert np.linalg.norm(from_phase_space(traj.final).amps - ref) < 1e-5


def test_evolution_in_hw_basis_matches_expm(rng):
    d = 6
    h, psi = random_hermitian(d, rng), random_state(d, rng)
    b = hw_eigenbasis(2, 3, d)
    for method in ("exact", "midpoint"):
        traj = evolve(QuadraticHamiltonian(h), to_phase_space(psi, b), 1.3, method)
        assert traj.final.basis is b
        out = from_phase_space(traj.final).amps
        assert np.linalg.norm(out - sla.expm(-1.3j * h) @ psi.amps) < 1e-5


def test_energy_equals_expectation(rng):
    d = 5
    h, psi = random_hermitian(d, rng), random_state(d, rng)
    for b in (computational_basis(d), hw_eigenbasis(1, 1, d)):
        e = classical_hamiltonian(QuadraticHamiltonian(h), to_phase_space(psi, b))
        assert abs(e - np.vdot(psi.amps, h @ psi.amps).real) < 1e-12


def test_flow_obeys_hamilton_equations_with_half_factor(rng):
    # dq/dt = (1/2) dH/dp, dp/dt = -(1/2) dH/dq, checked by central differences
    d = 4
    h = QuadraticHamiltonian(random_hermitian(d, rng))
    hps = to_phase_space(random_state(d, rng), hw_eigenbasis(1, 0, d))
    y = hps.coords
    eps = 1e-6

    def energy(v):
        return classical_hamiltonian(h, HiddenParticleSet.from_coords(hps.basis, v))

    grad = np.array([(energy(y + eps * e) - energy(y - eps * e)) / (2 * eps) for e in np.eye(2 * d)])
    dq, dp = flow_field(h, hps)
    assert np.max(np.abs(dq - 0.5 * grad[d:])) < 1e-6
    assert np.max(np.abs(dp + 0.5 * grad[:d])) < 1e-6


def test_flow_field_matches_schrodinger(rng):
    d = 3
    h, psi = random_hermitian(d, rng), random_state(d, rng)
    dq, dp = flow_field(QuadraticHamiltonian(h), to_phase_space(psi, computational_basis(d)))
    dpsi = -1j * h @ psi.amps
    np.testing.assert_allclose(dq + 1j * dp, dpsi, atol=1e-14)


def test_flow_jacobian_finite_difference(rng):
    d, t = 4, 0.7
    h = QuadraticHamiltonian(random_hermitian(d, rng))
    basis = computational_basis(d)
    jac = flow_jacobian(h, t, basis)
    assert jac.symplectic_defect() < 1e-10
    y0 = to_phase_space(random_state(d, rng), basis).coords
    eps = 1e-6

    def flow(y):
        return evolve(h, HiddenParticleSet.from_coords(basis, y), t, samples=2).final.coords

    fd = np.column_stack([(flow(y0 + eps * e) - flow(y0 - eps * e)) / (2 * eps) for e in np.eye(2 * d)])
    assert np.max(np.abs(fd - jac.matrix)) < 1e-5


def test_long_midpoint_run_conserves_norm_and_energy(rng):
    d = 4
    h, psi = random_hermitian(d, rng), random_state(d, rng)
    traj = evolve(QuadraticHamiltonian(h), to_phase_space(psi, computational_basis(d)), 10.0, "midpoint", 1e-3, samples=500)
    assert traj.max_norm_drift() < 1e-9
    assert traj.max_energy_drift() < 1e-7


def test_exact_conserves_energy(rng):
    d = 6
    h, psi = random_hermitian(d, rng), random_state(d, rng)
    traj = evolve(QuadraticHamiltonian(h), to_phase_space(psi, computational_basis(d)), 10.0)
    assert traj.max_energy_drift() < 1e-9
    assert traj.max_norm_drift() < 1e-12


def test_sample_grid():
    h = QuadraticHamiltonian(np.diag([1.0, -1.0]))
    hps = to_phase_space(PureState.basis_state(0, 2), computational_basis(2))
    tr = evolve(h, hps, 1.0, "midpoint", 0.01, samples=11)
    np.testing.assert_allclose(tr.times, np.linspace(0, 1, 11), atol=1e-12)
    assert len(evolve(h, hps, 0.0).states) == 1


@given(seed=seeds, d=st.integers(1, 16))
def test_unitary_maps_are_orthosymplectic(seed, d):
    u = random_unitary(d, np.random.default_rng(seed))
    s = unitary_to_symplectic(u)
    assert s.symplectic_defect() < 1e-10
    assert s.orthogonality_defect() < 1e-10
    np.testing.assert_allclose(s.to_unitary(), u, atol=1e-15)


@given(seed=seeds, d=st.integers(2, 16))
def test_picture_equivalence(seed, d):
    rng = np.random.default_rng(seed)
    u, psi = random_unitary(d, rng), random_state(d, rng)
    b = computational_basis(d)
    lhs = apply_symplectic(unitary_to_symplectic(u), to_phase_space(psi, b))
    rhs = to_phase_space(PureState.from_vector(u @ psi.amps, normalize=False), b)
    assert np.max(np.abs(lhs.coords - rhs.coords)) < 1e-12


@given(seed=seeds, d=st.integers(2, 8))
def test_composition_is_symplectic(seed, d):
    rng = np.random.default_rng(seed)
    a, b = (unitary_to_symplectic(random_unitary(d, rng)) for _ in range(2))
    c = a @ b
    assert isinstance(c, SymplecticMap)
    assert c.symplectic_defect() < 1e-10


def test_symplectic_form_squares_to_minus_identity():
    delta = symplectic_form(3)
    np.testing.assert_array_equal(delta @ delta, -np.eye(6))


def test_non_symplectic_rejected():
    with pytest.raises(ValueError):
        SymplecticMap(np.diag([2.0, 1.0]))


def test_non_unitary_rejected():
    with pytest.raises(NotUnitary):
        unitary_to_symplectic(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitian):
        QuadraticHamiltonian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_dimension_mismatch():
    h = QuadraticHamiltonian(np.eye(3))
    with pytest.raises(DimensionMismatch):
        evolve(h, to_phase_space(PureState.basis_state(0, 2), computational_basis(2)), 1.0)


def test_time_dependent_midpoint_against_fine_oracle():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    h = QuadraticHamiltonian(z, time_dependence=lambda t: z + np.cos(t) * x)
    psi = PureState.basis_state(0, 2)
    traj = evolve(h, to_phase_space(psi, computational_basis(2)), 2.0, "midpoint", 1e-3)
    # piecewise-exact product on a much finer grid
    n = 20000
    u = np.eye(2, dtype=complex)
    for i in range(n):
        tm = (i + 0.5) * 2.0 / n
        u = exact_propagator(z + np.cos(tm) * x, 2.0 / n) @ u
    assert np.linalg.norm(from_phase_space(traj.final).amps - u @ psi.amps) < 1e-5
    with pytest.raises(ValueError):
        evolve(h, to_phase_space(psi, computational_basis(2)), 1.0, "exact")


def test_random_hamiltonian_has_unit_operator_norm(rng):
    for d in (2, 7, 16):
        assert abs(np.linalg.norm(random_hermitian(d, rng), 2) - 1) < 1e-12
