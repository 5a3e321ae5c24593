"""Tomography on hidden particles and simulator verification.

State tomography measures every HW operator M_jk. Each measurement is a
classical readout of one fixed-basis particle set: the particles of the state
prepared in the eigenbasis B_jk are read directly and the outcome
probabilities are q_i^2 + p_i^2. Process tomography repeats this for a
complete family of d^2 input states, giving d^4 runs in total.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .dynamics import (
    QuadraticHamiltonian,
    apply_symplectic,
    evolve,
    unitary_to_symplectic,
)
from .errors import DimensionMismatch
from .opensys import ChannelDilation
from .statespace import (
    NEG_EIG_TOL,
    TOL,
    BasisLabel,
    DensityMatrix,
    HiddenParticleSet,
    PureState,
    _bloch_sum,
    _physical_density,
    computational_basis,
    from_phase_space,
    hw_eigenbasis,
    hw_indices,
    operator_norm_distance,
    to_phase_space,
)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    basis: BasisLabel
    probabilities: np.ndarray
    q: np.ndarray | None = None
    p: np.ndarray | None = None
    shots: int | None = None

    def __post_init__(self):
        pr = np.asarray(self.probabilities, dtype=float)
        if pr.size != self.basis.dim:
            raise DimensionMismatch("one probability per basis vector is required")
        if np.any(pr < 0):
            raise ValueError("negative probability")
        if abs(pr.sum() - 1.0) > TOL:
            raise ValueError(f"probabilities sum to {pr.sum()!r}")
        object.__setattr__(self, "probabilities", pr)

    @property
    def key(self) -> tuple[int, int]:
        return (self.basis.j, self.basis.k)


def readout(hps: HiddenParticleSet, shots: int | None = None, rng: np.random.Generator | None = None) -> MeasurementRecord:
    """Classical readout of particle positions and momenta.

    With ``shots`` the outcome frequencies of a multinomial sample replace
    the exact q^2 + p^2.
    """
    probs = hps.q**2 + hps.p**2
    probs = probs / probs.sum()
    if shots is not None:
        if rng is None:
            raise ValueError("finite-shot readout needs an rng")
        probs = rng.multinomial(shots, probs) / shots
    return MeasurementRecord(hps.basis, probs, hps.q.copy(), hps.p.copy(), shots)


def measure_basis_probabilities(
    state: PureState,
    basis: BasisLabel,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> MeasurementRecord:
    return readout(to_phase_space(state, basis), shots, rng)


def _pooled_expectation(rec: MeasurementRecord) -> complex:
    lam = rec.basis.eigenvalues
    if lam is None:
        raise ValueError(f"basis {rec.basis.label} carries no eigenvalues")
    # degenerate eigenvalues: sum probabilities per distinct eigenvalue first
    keys = np.round(np.angle(lam) / (2 * np.pi) * 1e8).astype(np.int64) % 100_000_000
    total = 0j
    for key in np.unique(keys):
        mask = keys == key
        total += np.conj(lam[mask].mean()) * rec.probabilities[mask].sum()
    return total


def expectations_from_probabilities(
    records: Mapping[tuple[int, int], MeasurementRecord] | Sequence[MeasurementRecord],
    d: int | None = None,
) -> np.ndarray:
    """n_jk = sum_m conj(lambda_m) Pr(m) for every (j, k) != (0, 0)."""
    if not isinstance(records, Mapping):
        records = {r.key: r for r in records}
    if d is None:
        d = next(iter(records.values())).basis.dim
    out = []
    for key in hw_indices(d):
        if key not in records:
            raise KeyError(f"missing measurement record for M{key}")
        out.append(_pooled_expectation(records[key]))
    return np.array(out, dtype=complex)


def qst_linear_inversion(n, d: int, clip: bool = False, neg_tol: float = NEG_EIG_TOL) -> DensityMatrix:
    """rho = (1 + sum n_jk M_jk)/d.

    Nonphysical estimates raise NonPhysicalState unless ``clip`` asks for
    negative eigenvalues to be clipped and the trace renormalized.
    """
    n = np.asarray(n, dtype=complex).reshape(-1)
    if n.size != d * d - 1:
        raise DimensionMismatch(f"expected {d * d - 1} coefficients, got {n.size}")
    raw = (np.eye(d, dtype=complex) + _bloch_sum(n, d, False)) / d
    return _physical_density(raw, neg_tol, clip=clip)


def _raw_inversion(n, d: int) -> np.ndarray:
    raw = (np.eye(d, dtype=complex) + _bloch_sum(n, d, False)) / d
    return 0.5 * (raw + raw.conj().T)


@dataclass
class QSTResult:
    rho: DensityMatrix | None
    bloch: np.ndarray
    runs: int
    trace: float
    records: dict = field(repr=False, default_factory=dict)
    fidelity: float | None = None
    raw: np.ndarray | None = field(repr=False, default=None)

    @property
    def description(self) -> np.ndarray:
        """The classical description [psi]: 2(d^2 - 1) reals (Re n, Im n)."""
        return np.concatenate([self.bloch.real, self.bloch.imag])


ReadoutFn = Callable[[BasisLabel], MeasurementRecord]


def _tomograph(read: ReadoutFn, d: int, clip: bool = False, strict: bool = True) -> QSTResult:
    records = {key: read(hw_eigenbasis(*key, d)) for key in hw_indices(d, include_identity=True)}
    trace = float(records[(0, 0)].probabilities.sum())
    n = expectations_from_probabilities(records, d)
    rho = qst_linear_inversion(n, d, clip=clip) if strict else None
    return QSTResult(rho, n, len(records), trace, records, raw=_raw_inversion(n, d))


def sac_qst(
    state: PureState,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
    clip: bool = False,
) -> QSTResult:
    """Tomography of a pure state from one fixed-basis particle set per M_jk (d^2 runs)."""
    res = _tomograph(lambda b: measure_basis_probabilities(state, b, shots, rng), state.dim, clip)
    res.fidelity = res.rho.fidelity(state)
    return res


# -- process tomography ---------------------------------------------------------


def qpt_input_states(d: int) -> list[PureState]:
    """|i>, (|i>+|j>)/sqrt2, (|i>+i|j>)/sqrt2 for i < j: d^2 states."""
    states = [PureState.basis_state(i, d) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            for phase in (1.0, 1j):
                v = np.zeros(d, dtype=complex)
                v[i], v[j] = 1.0, phase
                states.append(PureState.from_vector(v))
    return states


@dataclass(frozen=True, eq=False)
class ProcessEstimate:
    dim: int
    choi: np.ndarray
    run_count: int
    transfer: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.choi, dtype=complex)
        if np.max(np.abs(c - c.conj().T)) > TOL:
            raise ValueError("Choi estimate is not Hermitian")
        if abs(np.trace(c) - 1.0) > TOL:
            raise ValueError("Choi estimate does not have unit trace")
        object.__setattr__(self, "choi", c)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.transfer @ np.asarray(rho).reshape(-1)).reshape(d, d)


Channel = np.ndarray | ChannelDilation | Callable[[PureState], PureState | DensityMatrix]


def _channel_reader(channel: Channel, d: int) -> Callable[[PureState], ReadoutFn]:
    if isinstance(channel, ChannelDilation):
        if channel.dim != d:
            raise DimensionMismatch(f"channel acts on dim {channel.dim}, expected {d}")
        a = channel.ancilla_dim
        ident_a = np.eye(a)

        def reader(phi: PureState) -> ReadoutFn:
            joint = PureState(np.kron(phi.amps, ident_a[0]))

            def read(b: BasisLabel) -> MeasurementRecord:
                big = BasisLabel("dilated", np.kron(b.vectors, ident_a))
                s = unitary_to_symplectic(big.vectors.conj().T @ channel.unitary @ big.vectors)
                out = apply_symplectic(s, to_phase_space(joint, big))
                # tracing out the ancilla = projective readout over its basis
                probs = (out.q**2 + out.p**2).reshape(d, a).sum(axis=1)
                return MeasurementRecord(b, probs / probs.sum())

            return read

        return reader

    if callable(channel):

        def reader(phi: PureState) -> ReadoutFn:
            out = channel(phi)
            if isinstance(out, PureState):
                if out.dim != d:
                    raise DimensionMismatch("channel output dimension mismatch")
                return lambda b: measure_basis_probabilities(out, b)
            rho = out.entries if isinstance(out, DensityMatrix) else np.asarray(out)
            if rho.shape != (d, d):
                raise DimensionMismatch("channel output dimension mismatch")

            def read(b: BasisLabel) -> MeasurementRecord:
                pr = np.clip(np.real(np.einsum("ij,ik,kj->j", b.vectors.conj(), rho, b.vectors)), 0, None)
                return MeasurementRecord(b, pr / pr.sum())

            return read

        return reader

    u = np.asarray(channel, dtype=complex)
    if u.shape != (d, d):
        raise DimensionMismatch(f"unitary has shape {u.shape}, expected {(d, d)}")

    def reader(phi: PureState) -> ReadoutFn:
        def read(b: BasisLabel) -> MeasurementRecord:
            s = unitary_to_symplectic(b.vectors.conj().T @ u @ b.vectors)
            return readout(apply_symplectic(s, to_phase_space(phi, b)))

        return read

    return reader


def choi_from_transfer(transfer: np.ndarray, d: int) -> np.ndarray:
    """Normalized Choi matrix (E x 1)(|eta><eta|)/d from a row-major transfer matrix."""
    # E(|i><j|)[a, b] = transfer[a*d + b, i*d + j]
    t = transfer.reshape(d, d, d, d)
    c = np.einsum("abij->aibj", t).reshape(d * d, d * d) / d
    return 0.5 * (c + c.conj().T)


def sac_qpt(channel: Channel, d: int) -> ProcessEstimate:
    """Process tomography: sac state tomography on each of the d^2 inputs.

    ``channel`` is a unitary matrix (run as a symplectic map on the
    particles), a ChannelDilation (run on system+ancilla particles, ancilla
    traced out by readout), or a callable returning a PureState or density
    matrix.
    """
    reader = _channel_reader(channel, d)
    inputs = qpt_input_states(d)
    runs = 0
    outputs = []
    for phi in inputs:
        res = _tomograph(reader(phi), d, strict=False)
        runs += res.runs
        outputs.append(res.raw.reshape(-1))
    phi_mat = np.array([s.projector().reshape(-1) for s in inputs])
    transfer = np.linalg.solve(phi_mat, np.array(outputs)).T
    return ProcessEstimate(d, choi_from_transfer(transfer, d), runs, transfer)


# -- verification ---------------------------------------------------------------


class SACSimulator:
    """Hidden-particle simulator of exp(-itH) run in a chosen particle basis."""

    def __init__(self, hamiltonian: QuadraticHamiltonian, t: float, method: str = "exact",
                 dt: float = 1e-3, basis: BasisLabel | None = None):
        self.hamiltonian = hamiltonian
        self.t = t
        self.method = method
        self.dt = dt
        self.basis = basis or computational_basis(hamiltonian.dim)
        self.calls = 0

    def __call__(self, state: PureState) -> PureState:
        self.calls += 1
        hps = to_phase_space(state, self.basis)
        traj = evolve(self.hamiltonian, hps, self.t, self.method, self.dt, samples=2)
        return from_phase_space(traj.final)

    @property
    def matrix(self) -> np.ndarray:
        d = self.hamiltonian.dim
        return np.column_stack([self(PureState.basis_state(i, d)).amps for i in range(d)])


@dataclass
class VerificationReport:
    strong_distance: float
    weak_distances: dict[str, float]
    epsilon: float
    epsilon0: float
    runs: int
    strong_method: str

    @property
    def total_bound(self) -> float:
        return self.strong_distance + self.epsilon0

    @property
    def passed(self) -> bool:
        return self.strong_distance <= self.epsilon

    def to_json(self) -> dict:
        return {
            "strong_distance": self.strong_distance,
            "weak": dict(self.weak_distances),
            "epsilon": self.epsilon,
            "epsilon0": self.epsilon0,
            "total_bound": self.total_bound,
            "pass": self.passed,
            "runs": self.runs,
            "strong_method": self.strong_method,
        }


def verify_simulator(
    simulatee,
    simulator,
    inputs: Sequence[PureState] | None = None,
    epsilon: float = 1e-6,
    epsilon0: float = 0.0,
    observables: Mapping[str, np.ndarray] | None = None,
) -> VerificationReport:
    """Compare a simulator against the unitary it should reproduce.

    Strong distance is ||U - U_sim|| (operator norm) when the simulator
    exposes ``matrix`` (or is itself a matrix); otherwise it is the sup of
    ||U psi - sim(psi)|| over the probe states. Weak distances use
    f_O(psi) = <psi|O|psi> on the outputs. ``total_bound`` adds the declared
    initialization error epsilon0.
    """
    u = np.asarray(simulatee, dtype=complex)
    d = u.shape[0]
    probes = list(inputs) if inputs is not None else qpt_input_states(d)
    for s in probes:
        if s.dim != d:
            raise DimensionMismatch("probe state dimension mismatch")

    mat = None
    if isinstance(simulator, np.ndarray):
        mat = simulator
        run = lambda s: PureState.from_vector(mat @ s.amps)
    else:
        run = simulator
        mat = getattr(simulator, "matrix", None)
    runs = 0

    outputs = {}

    def sim(s, i):
        nonlocal runs
        if i not in outputs:
            runs += 1
            outputs[i] = run(s).amps
        return outputs[i]

    if mat is not None:
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != u.shape:
            raise DimensionMismatch("simulator and simulatee dimensions differ")
        strong = operator_norm_distance(u, mat)
        method = "operator-norm"
    else:
        strong = max(np.linalg.norm(u @ s.amps - sim(s, i)) for i, s in enumerate(probes))
        method = "probe-sup"

    weak = {}
    for name, obs in (observables or {}).items():
        obs = np.asarray(obs, dtype=complex)
        vals = []
        for i, s in enumerate(probes):
            ref = u @ s.amps
            out = sim(s, i) if mat is None else mat @ s.amps
            vals.append(abs(np.vdot(ref, obs @ ref) - np.vdot(out, obs @ out)))
        weak[name] = float(max(vals))

    return VerificationReport(float(strong), weak, epsilon, epsilon0, runs, method)
