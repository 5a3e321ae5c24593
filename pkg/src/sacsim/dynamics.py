"""Hamiltonian flow of hidden particles and discrete symplectic maps.

With psi = q + ip in a basis B, the Schrodinger equation i dpsi/dt = H psi is
the linear flow

    dq/dt =  C q + A p,     dp/dt = -A q + C p,      B^dag H B = A + iC,

which is Hamilton's equations for the energy <psi|H|psi> = y^T K y with
K = [[A, -C], [C, A]], up to the factor 1/2 that the real coordinates carry:
dy/dt = (1/2) Delta^T grad(<psi|H|psi>), Delta = [[0, -1], [1, 0]].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, NotHermitian, NotUnitary
from .io import write_csv
from .statespace import TOL, BasisLabel, HiddenParticleSet, computational_basis

HERMITIAN_TOL = 1e-12
DEFAULT_DT = 1e-3
DEFAULT_SAMPLES = 200


def symplectic_form(n: int) -> np.ndarray:
    """Delta = [[0, -1], [1, 0]] on (q_1..q_n, p_1..p_n)."""
    z = np.zeros((n, n))
    i = np.eye(n)
    return np.block([[z, -i], [i, z]])


def realify(a: np.ndarray) -> np.ndarray:
    """Real 2n x 2n image [[Re a, -Im a], [Im a, Re a]] of a complex n x n matrix."""
    a = np.asarray(a, dtype=complex)
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def _check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.conj().T)) > tol * scale:
        raise NotHermitian("Hamiltonian matrix is not Hermitian")


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """Hermitian H (hbar = 1), optionally time dependent via ``time_dependence(t)``."""

    matrix: np.ndarray
    time_dependence: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("Hamiltonian must be square")
        _check_hermitian(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_time_dependent(self) -> bool:
        return self.time_dependence is not None

    def at(self, t: float) -> np.ndarray:
        if self.time_dependence is None:
            return self.matrix
        m = np.asarray(self.time_dependence(t), dtype=complex)
        if m.shape != self.matrix.shape:
            raise DimensionMismatch(f"H({t}) has shape {m.shape}")
        _check_hermitian(m)
        return m

    def in_basis(self, basis: BasisLabel, t: float = 0.0) -> np.ndarray:
        b = basis.vectors
        return b.conj().T @ self.at(t) @ b


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """Real 2n x 2n matrix S with S Delta S^T = Delta.

    ``blocks`` holds (V, W) when S came from a unitary U = V + iW.
    """

    matrix: np.ndarray
    blocks: tuple[np.ndarray, np.ndarray] | None = None
    tol: float = TOL

    def __post_init__(self):
        s = np.array(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise DimensionMismatch("symplectic matrix must be 2n x 2n")
        s.setflags(write=False)
        object.__setattr__(self, "matrix", s)
        defect = self.symplectic_defect()
        if defect >= self.tol:
            raise ValueError(f"matrix is not symplectic: |S D S^T - D|_inf = {defect:.3e}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def symplectic_defect(self) -> float:
        s = self.matrix
        delta = symplectic_form(self.n)
        return float(np.max(np.abs(s @ delta @ s.T - delta)))

    def orthogonality_defect(self) -> float:
        s = self.matrix
        return float(np.max(np.abs(s @ s.T - np.eye(2 * self.n))))

    def compose(self, other: "SymplecticMap") -> "SymplecticMap":
        """self after other."""
        if self.n != other.n:
            raise DimensionMismatch("cannot compose maps of different size")
        return SymplecticMap(self.matrix @ other.matrix)

    __matmul__ = compose

    def to_unitary(self) -> np.ndarray:
        """U = V + iW read from the first block column."""
        n = self.n
        return self.matrix[:n, :n] + 1j * self.matrix[n:, :n]


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[HiddenParticleSet]
    energies: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        if np.any(np.diff(self.times) < 0):
            raise ValueError("trajectory times must be monotone")

    @property
    def final(self) -> HiddenParticleSet:
        return self.states[-1]

    def norms(self) -> np.ndarray:
        return np.array([s.norm2() for s in self.states])

    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms() - 1.0)))

    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(self.energies - self.energies[0])))

    def rows(self) -> Iterator[tuple]:
        for step, (t, s, e) in enumerate(zip(self.times, self.states, self.energies)):
            for i in range(s.dim):
                yield (step, t, s.basis.label, i, s.q[i], s.p[i], e)

    def write_csv(self, path):
        return write_csv(path, ("step", "t", "basis", "index", "q", "p", "energy"), self.rows())


def _check_dims(h: QuadraticHamiltonian, hps: HiddenParticleSet) -> None:
    if h.dim != hps.dim:
        raise DimensionMismatch(f"Hamiltonian dim {h.dim} != particle count {hps.dim}")


def energy_form(h_basis: np.ndarray) -> np.ndarray:
    """Symmetric K with <psi|H|psi> = y^T K y."""
    return realify(h_basis)


def flow_generator(h_basis: np.ndarray) -> np.ndarray:
    """Real G with dy/dt = G y, i.e. the real image of -iH."""
    return realify(-1j * h_basis)


def classical_hamiltonian(h: QuadraticHamiltonian, hps: HiddenParticleSet, t: float = 0.0) -> float:
    _check_dims(h, hps)
    y = hps.coords
    return float(y @ energy_form(h.in_basis(hps.basis, t)) @ y)


def flow_field(h: QuadraticHamiltonian, hps: HiddenParticleSet, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """(dq/dt, dp/dt) of the hidden particles at time t."""
    _check_dims(h, hps)
    dy = flow_generator(h.in_basis(hps.basis, t)) @ hps.coords
    return dy[: hps.dim], dy[hps.dim :]


def exact_propagator(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-itH) for Hermitian H via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def unitary_to_symplectic(u, tol: float = TOL) -> SymplecticMap:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionMismatch("unitary must be square")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) >= tol:
        raise NotUnitary("matrix is not unitary")
    return SymplecticMap(realify(u), blocks=(u.real.copy(), u.imag.copy()))


def apply_symplectic(s: SymplecticMap, hps: HiddenParticleSet) -> HiddenParticleSet:
    if s.n != hps.dim:
        raise DimensionMismatch(f"map acts on {s.n} particles, set has {hps.dim}")
    return HiddenParticleSet.from_coords(hps.basis, s.matrix @ hps.coords)


def flow_jacobian(h: QuadraticHamiltonian, t: float, basis: BasisLabel | None = None) -> SymplecticMap:
    """Jacobian d(y_out)/d(y_in) of the time-t flow; for this linear flow it is S of exp(-itH)."""
    if h.is_time_dependent:
        raise ValueError("flow_jacobian needs a time-independent Hamiltonian")
    basis = basis or computational_basis(h.dim)
    return unitary_to_symplectic(exact_propagator(h.in_basis(basis), t))


def _sample_steps(n_steps: int, samples: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, n_steps, max(samples, 2))).astype(int))


def evolve(
    h: QuadraticHamiltonian,
    hps0: HiddenParticleSet,
    t: float,
    method: str = "exact",
    dt: float = DEFAULT_DT,
    samples: int = DEFAULT_SAMPLES,
) -> Trajectory:
    """Propagate hidden particles for time t.

    ``exact`` applies the symplectic image of exp(-isH) at each sample time s.
    ``midpoint`` takes implicit-midpoint steps of size <= dt; for this linear
    flow a step is the Cayley transform, which is symplectic and orthogonal.
    Time-dependent Hamiltonians are frozen at each step's midpoint.
    """
    _check_dims(h, hps0)
    if t < 0:
        raise ValueError("t must be >= 0")
    basis = hps0.basis
    y0 = hps0.coords

    if method == "exact":
        if h.is_time_dependent:
            raise ValueError("exact method needs a time-independent Hamiltonian")
        hb = h.in_basis(basis)
        times = np.array([0.0]) if t == 0 else np.linspace(0.0, t, max(samples, 2))
        w, v = np.linalg.eigh(hb)
        states = []
        for s in times:
            u = (v * np.exp(-1j * s * w)) @ v.conj().T
            states.append(HiddenParticleSet.from_coords(basis, realify(u) @ y0))
        k = energy_form(hb)
        energies = [float(st.coords @ k @ st.coords) for st in states]
        return Trajectory(times, states, energies)

    if method != "midpoint":
        raise ValueError(f"unknown method {method!r}")
    if dt <= 0:
        raise ValueError("dt must be > 0")

    n_steps = 0 if t == 0 else max(1, math.ceil(t / dt - 1e-9))
    step = t / n_steps if n_steps else 0.0
    keep = set(_sample_steps(n_steps, samples).tolist()) if n_steps else {0}
    eye = np.eye(2 * h.dim)

    def cayley(g):
        return np.linalg.solve(eye - 0.5 * step * g, eye + 0.5 * step * g)

    fixed = None if h.is_time_dependent or not n_steps else cayley(flow_generator(h.in_basis(basis)))
    y = y0.copy()
    times, states, energies = [], [], []

    def record(i, y):
        ti = i * step
        times.append(ti)
        states.append(HiddenParticleSet.from_coords(basis, y))
        energies.append(float(y @ energy_form(h.in_basis(basis, ti)) @ y))

    record(0, y)
    for i in range(1, n_steps + 1):
        m = fixed if fixed is not None else cayley(flow_generator(h.in_basis(basis, (i - 0.5) * step)))
        y = m @ y
        if i in keep:
            record(i, y)
    return Trajectory(np.array(times), states, np.array(energies))
