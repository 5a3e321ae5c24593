import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sacsim.dynamics import QuadraticHamiltonian, evolve, unitary_to_symplectic
from sacsim.errors import NotUnitary
from sacsim.models.field import (
    field_grid,
    free,
    gaussian_packet,
    grid_points,
    harmonic,
    momentum_basis,
    position_moments,
)
from sacsim.models.locality import (
    ClusterState,
    LinearOptics,
    MultiParty,
    QuantumWalk,
    Qudit,
    cluster_amplitude_count,
    cnot,
    growth_verdict,
    hilbert_bandwidth,
    linear_cluster_state,
    sac_cost,
)
from sacsim.models.optics import BeamSplitter, OpticalMesh, PhaseShifter, mesh_decompose
from sacsim.models.walk import WalkSpec, classical_walk_sigma, run_walk, walk_step_unitary
from sacsim.statespace import from_phase_space, random_state, random_unitary, shift_operator, to_phase_space

seeds = st.integers(0, 2**32 - 1)


# -- walk ---------------------------------------------------------------------------


def test_walk_matches_direct_unitary(rng):
    spec = WalkSpec(100, 100, random_state(2, rng).amps)
    res = run_walk(spec)
    u = walk_step_unitary(spec)
    psi = spec.initial_state().amps
    worst = 0.0
    for t in range(spec.steps + 1):
        worst = max(worst, np.max(np.abs(res.amplitudes[t] - psi)))
        psi = u @ psi
    assert worst < 1e-10


def test_walk_light_cone_and_normalization(rng):
    res = run_walk(WalkSpec(40, 40, random_state(2, rng).amps))
    assert res.light_cone_leak() == 0.0
    for t in (0, 10, 40):
        assert abs(res.distribution(t).sum() - 1) < 1e-10
        p = res.distribution(t)
        assert np.all(p[np.abs(res.spec.positions) > t] == 0.0)


def test_walk_spreads_ballistically():
    coin = np.array([1, 1j]) / np.sqrt(2)
    res = run_walk(WalkSpec(100, 100, coin))
    ratio = res.sigma(100) / res.sigma(50)
    assert 1.8 <= ratio <= 2.2
    assert res.sigma(100) > 5 * classical_walk_sigma(100)


def test_walk_first_step():
    res = run_walk(WalkSpec(3, 1, [1.0, 0.0]))
    # Hadamard then shift: coin 0 moves to x=-1, coin 1 to x=+1
    p = res.distribution(1)
    np.testing.assert_allclose(p, [0, 0, 0.5, 0, 0.5, 0, 0], atol=1e-15)


def test_walk_rejects_wrapping():
    with pytest.raises(ValueError):
        WalkSpec(5, 6, [1.0, 0.0])
    with pytest.raises(ValueError):
        WalkSpec(5, 2, [1.0, 1.0])


def test_walk_csv_outputs(tmp_path):
    res = run_walk(WalkSpec(3, 2, [1.0, 0.0]))
    lines = res.write_distribution_csv(tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "x,prob" and len(lines) == 8
    lines = res.write_trajectory_csv(tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "step,t,basis,index,q,p,energy"
    assert len(lines) == 1 + 3 * 14
    q, p = res.mode_trajectory(0, 0)
    assert q.shape == (3,)


# -- optics -------------------------------------------------------------------------


@given(seed=seeds, n=st.integers(1, 8))
def test_mesh_reconstructs(seed, n):
    u = random_unitary(n, np.random.default_rng(seed))
    mesh = mesh_decompose(u)
    assert mesh.reconstruction_error() < 1e-10
    assert mesh.splitter_count <= n * (n - 1) // 2
    assert mesh.phase_count == n
    for s in mesh.symplectic_maps():
        assert s.symplectic_defect() < 1e-10
        assert s.orthogonality_defect() < 1e-10
    full = unitary_to_symplectic(mesh.unitary())
    assert full.symplectic_defect() < 1e-10


def test_splitter_block_is_unitary():
    b = BeamSplitter(0, 0.3, 1.1).block()
    np.testing.assert_allclose(b.conj().T @ b, np.eye(2), atol=1e-15)


def test_mesh_json_round_trip(rng):
    mesh = mesh_decompose(random_unitary(4, rng))
    back = OpticalMesh.from_json(json.loads(json.dumps(mesh.to_json())))
    np.testing.assert_allclose(back.unitary(), mesh.unitary(), atol=1e-14)
    assert back.splitter_count == mesh.splitter_count


def test_mesh_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        mesh_decompose(np.ones((3, 3)))


def test_phase_shifter_matrix():
    m = PhaseShifter(1, np.pi).matrix(3)
    np.testing.assert_allclose(np.diag(m), [1, -1, 1], atol=1e-15)


# -- locality and cost --------------------------------------------------------------


def test_bandwidth_of_shift():
    x = shift_operator(1, 7)
    assert hilbert_bandwidth(x, cyclic=True) == 1
    assert hilbert_bandwidth(x) == 6


def test_bandwidth_of_banded_matrix():
    a = np.diag(np.ones(9)) + np.diag(np.ones(7), 2) + np.diag(np.ones(7), -2)
    assert hilbert_bandwidth(a) == 2
    assert hilbert_bandwidth(a, ordering=list(range(9))) == 2


@given(seed=seeds)
def test_bandwidth_under_relabeling(seed):
    rng = np.random.default_rng(seed)
    n = 8
    perm = rng.permutation(n)
    a = np.diag(np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    scrambled = a[np.ix_(perm, perm)]
    # putting basis state perm^-1[k] at position k undoes the scramble
    assert hilbert_bandwidth(scrambled, ordering=np.argsort(perm)) == 1
    i, j = np.nonzero(scrambled)
    assert hilbert_bandwidth(scrambled) == np.max(np.abs(i - j))


def test_cnot_bandwidth_depends_on_ordering():
    assert hilbert_bandwidth(cnot(3, 0, 2)) == 1
    assert hilbert_bandwidth(cnot(3, 2, 0)) == 4
    for n in (3, 4, 5, 6):
        assert hilbert_bandwidth(cnot(n, n - 1, 0)) == 2 ** (n - 1)


def test_cluster_state():
    psi = linear_cluster_state(3)
    assert abs(np.linalg.norm(psi) - 1) < 1e-15
    assert cluster_amplitude_count(4) == (16, False)
    assert cluster_amplitude_count(20) == (2**20, True)


def test_cost_reports():
    r = sac_cost(Qudit(3))
    assert (r.particles_per_run, r.bases, r.qst_runs, r.qpt_runs) == (3, 9, 9, 81)
    r = sac_cost(MultiParty(10))
    assert r.particles_per_run == 1024 and r.verdict == "inefficient"
    assert sac_cost(MultiParty(3, 3)).particles_per_run == 27
    assert sac_cost(LinearOptics(1024)).verdict == "efficient"
    assert sac_cost(QuantumWalk(100)).verdict == "efficient"
    assert sac_cost(QuantumWalk(100)).particles_per_run == 402
    assert sac_cost(ClusterState(6)).verdict == "inefficient"
    assert sac_cost(ClusterState(20)).extrapolated
    assert sac_cost(Qudit(4)).qpt_runs == 4**4


def test_growth_verdict():
    assert growth_verdict(lambda s: s**3) == "efficient"
    assert growth_verdict(lambda s: 2**s) == "inefficient"


# -- field --------------------------------------------------------------------------


def test_field_grid_is_hermitian_tridiagonal():
    h = field_grid(harmonic(), 32, (-5, 5))
    m = h.matrix
    np.testing.assert_allclose(m, m.conj().T)
    assert hilbert_bandwidth(m) == 1


def test_field_grid_validation():
    with pytest.raises(ValueError):
        grid_points(4, (-1, 1))
    with pytest.raises(ValueError):
        grid_points(16, (1, -1))


def test_harmonic_period_return():
    x = grid_points(256, (-10, 10))
    psi = gaussian_packet(x, center=1.0, width=1.0)
    h = field_grid(harmonic(), 256, (-10, 10))
    traj = evolve(h, to_phase_space(psi, momentum_basis(256)), 2 * np.pi, samples=9)
    final = from_phase_space(traj.final)
    assert abs(np.vdot(psi.amps, final.amps)) ** 2 >= 0.999
    assert traj.max_norm_drift() < 1e-9
    mean_half, _ = position_moments(from_phase_space(traj.states[4]), x)
    assert mean_half == pytest.approx(-1.0, abs=1e-2)


def test_free_packet_spreads():
    x = grid_points(256, (-20, 20))
    psi = gaussian_packet(x)
    h = field_grid(free, 256, (-20, 20))
    traj = evolve(QuadraticHamiltonian(h.matrix), to_phase_space(psi, momentum_basis(256)), 2.0, samples=2)
    _, v0 = position_moments(psi, x)
    _, v1 = position_moments(from_phase_space(traj.final), x)
    # continuum: sigma^2(t) = (w^2 + t^2 / w^2) / 2
    assert v0 == pytest.approx(0.5, rel=1e-3)
    assert v1 == pytest.approx(2.5, rel=2e-2)
