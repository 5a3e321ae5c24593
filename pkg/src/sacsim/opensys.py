"""Mixed states and nonunitary evolution.

Two routes are provided:

* density vectors: rho is expanded over the d^2 HW operators,
  rho = (1/d) sum_jk n_jk M_jk with n_00 = 1, and the d^2 "second-order"
  particles (Q_jk, P_jk) = (Re n_jk, Im n_jk) evolve under the vectorized
  generator i d|rho>/dt = L |rho>. Purity is (1/d) sum (Q^2 + P^2).
* mixture plus dilation: a channel is embedded in a unitary on
  system x ancilla, inputs are sampled from a mixture with weights w_i and
  the ancilla readout picks the Kraus branch K_j = <j|U|0>.

Vectorization is row-major: |rho> = sum_ij rho_ij |ij>, so
(A x B)|rho> = |A rho B^T>.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.linalg as sla

from .dynamics import apply_symplectic, unitary_to_symplectic
from .errors import DimensionMismatch, InvariantViolation, NotHermitian, NotUnitary
from .io import write_csv
from .statespace import (
    TOL,
    DensityMatrix,
    PureState,
    _phase_fix,
    computational_basis,
    hw_indices,
    hw_operator,
    to_phase_space,
)

log = logging.getLogger(__name__)

TRACE_TOL = 1e-10
PURITY_TOL = 1e-10


@lru_cache(maxsize=None)
def hw_vectorized_basis(d: int) -> np.ndarray:
    """Columns |M_jk> (row-major vec) for all (j, k), j-major, (0,0) first."""
    b = np.column_stack([hw_operator(j, k, d).reshape(-1) for j, k in hw_indices(d, True)])
    b.setflags(write=False)
    return b


@dataclass(frozen=True, eq=False)
class DensityVector:
    dim: int
    coefficients: np.ndarray

    def __post_init__(self):
        n = np.array(self.coefficients, dtype=complex).reshape(-1)
        if n.size != self.dim**2:
            raise DimensionMismatch(f"expected {self.dim ** 2} coefficients, got {n.size}")
        n.setflags(write=False)
        object.__setattr__(self, "coefficients", n)

    @property
    def Q(self) -> np.ndarray:
        return self.coefficients.real

    @property
    def P(self) -> np.ndarray:
        return self.coefficients.imag

    @property
    def trace(self) -> float:
        return float(self.coefficients[0].real)

    @property
    def purity(self) -> float:
        return float(np.sum(self.Q**2 + self.P**2) / self.dim)

    def vec(self) -> np.ndarray:
        """|rho> in the row-major product basis."""
        return hw_vectorized_basis(self.dim) @ self.coefficients / self.dim

    def check(self, tol: float = TRACE_TOL) -> None:
        if abs(self.coefficients[0] - 1.0) > tol:
            raise InvariantViolation(f"trace coordinate n_00 = {self.coefficients[0]!r}")
        pur = self.purity
        if not (1.0 / self.dim - tol <= pur <= 1.0 + tol):
            raise InvariantViolation(f"purity {pur!r} outside [1/d, 1]")


def vectorize_density(rho: DensityMatrix) -> DensityVector:
    d = rho.dim
    n = hw_vectorized_basis(d).conj().T @ rho.entries.reshape(-1)
    return DensityVector(d, n)


def devectorize(dv: DensityVector) -> DensityMatrix:
    d = dv.dim
    rho = dv.vec().reshape(d, d)
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def unitary_liouvillian(h) -> np.ndarray:
    """H x 1 - 1 x H*: the generator of i d|rho>/dt = [H, rho]."""
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise NotHermitian("Hamiltonian is not Hermitian")
    eye = np.eye(h.shape[0])
    return np.kron(h, eye) - np.kron(eye, h.conj())


def to_hw_coordinates(op: np.ndarray, d: int) -> np.ndarray:
    """Matrix of a superoperator acting on the coefficients n_jk."""
    b = hw_vectorized_basis(d)
    return b.conj().T @ op @ b / d


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    hamiltonian: np.ndarray
    jumps: tuple[tuple[float, np.ndarray], ...]
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def hw_matrix(self) -> np.ndarray:
        return to_hw_coordinates(self.matrix, self.dim)

    def trace_defect(self) -> float:
        """max |<eta| L|, which vanishes for trace-preserving generators."""
        eta = np.eye(self.dim).reshape(-1)
        return float(np.max(np.abs(eta @ self.matrix)))

    def is_unital(self, tol: float = TOL) -> bool:
        eta = np.eye(self.dim).reshape(-1)
        return bool(np.max(np.abs(self.matrix @ eta)) < tol)


def lindblad_generator(h, jumps: Sequence[tuple[float, np.ndarray]] = ()) -> LindbladGenerator:
    """Effective Hamiltonian of the Lindblad equation on vectorized states.

    L = H x 1 - 1 x H* + i sum_i g_i (L_i x L_i* - 1/2 L_i^dag L_i x 1 - 1/2 1 x L_i^T L_i*)
    """
    h = np.asarray(h, dtype=complex)
    gen = unitary_liouvillian(h)
    d = h.shape[0]
    eye = np.eye(d)
    clean = []
    for gamma, op in jumps:
        if gamma < 0:
            raise ValueError(f"negative rate {gamma}")
        op = np.asarray(op, dtype=complex)
        if op.shape != (d, d):
            raise DimensionMismatch("jump operator shape mismatch")
        ldl = op.conj().T @ op
        gen = gen + 1j * gamma * (np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
        clean.append((float(gamma), op))
    out = LindbladGenerator(h, tuple(clean), gen)
    if out.trace_defect() > TRACE_TOL * max(1.0, np.max(np.abs(gen))):
        raise InvariantViolation("generator does not preserve the trace")
    return out


def density_energy(gen_hw: np.ndarray, dv: DensityVector) -> float:
    """Classical energy <rho|L|rho> = (1/d) n^dag L_n n (real part)."""
    n = dv.coefficients
    return float(np.real(np.vdot(n, gen_hw @ n)) / dv.dim)


def density_flow(gen_hw: np.ndarray, dv: DensityVector) -> tuple[np.ndarray, np.ndarray]:
    """(dQ/dt, dP/dt) from dn/dt = -i L_n n."""
    dn = -1j * gen_hw @ dv.coefficients
    return dn.real, dn.imag


@dataclass
class DensityTrajectory:
    times: np.ndarray
    vectors: list[DensityVector]

    @property
    def final(self) -> DensityVector:
        return self.vectors[-1]

    def purities(self) -> np.ndarray:
        return np.array([v.purity for v in self.vectors])

    def traces(self) -> np.ndarray:
        return np.array([v.coefficients[0] for v in self.vectors])

    def density_matrices(self) -> list[DensityMatrix]:
        return [devectorize(v) for v in self.vectors]

    def rows(self) -> Iterator[tuple]:
        for step, (t, v) in enumerate(zip(self.times, self.vectors)):
            pur, tr = v.purity, v.trace
            for (j, k), q, p in zip(hw_indices(v.dim, True), v.Q, v.P):
                yield (step, t, j, k, q, p, pur, tr)

    def write_csv(self, path):
        return write_csv(path, ("step", "t", "j", "k", "Q", "P", "purity", "trace"), self.rows())


def evolve_density_vector(
    gen: LindbladGenerator | Callable[[float], LindbladGenerator],
    dv0: DensityVector,
    t: float,
    samples: int = 200,
    steps: int = 1000,
) -> DensityTrajectory:
    """Integrate i dn/dt = L_n n for the HW coefficients.

    A fixed generator is exponentiated densely at each sample time. A
    callable ``gen(t)`` is integrated piecewise-constant over ``steps``
    intervals, frozen at interval midpoints. The trace coordinate and the
    purity identity are checked at every sample.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    d = dv0.dim
    times = np.array([0.0]) if t == 0 else np.linspace(0.0, t, max(samples, 2))
    n0 = dv0.coefficients

    if isinstance(gen, LindbladGenerator):
        if gen.dim != d:
            raise DimensionMismatch("generator and state dimensions differ")
        ln = gen.hw_matrix
        coeffs = [sla.expm(-1j * s * ln) @ n0 for s in times]
    else:
        h = t / steps
        grid = np.arange(steps + 1) * h
        keep = {int(i) for i in np.unique(np.round(times / h).astype(int))}
        n, coeffs, kept_t = n0.copy(), [], []
        for i in range(steps + 1):
            if i in keep:
                coeffs.append(n.copy())
                kept_t.append(grid[i])
            if i < steps:
                n = sla.expm(-1j * h * gen((i + 0.5) * h).hw_matrix) @ n
        times = np.array(kept_t)

    vectors = []
    for s, c in zip(times, coeffs):
        dv = DensityVector(d, c)
        if abs(c[0] - 1.0) > TRACE_TOL:
            raise InvariantViolation(f"trace coordinate drifted to {c[0]!r} at t={s}")
        rho = dv.vec().reshape(d, d)
        direct = float(np.real(np.trace(rho @ rho)))
        if abs(direct - dv.purity) > PURITY_TOL:
            raise InvariantViolation(f"purity identity broken at t={s}")
        log.debug("t=%.6g purity=%.15g", s, dv.purity)
        vectors.append(dv)
    return DensityTrajectory(times, vectors)


# -- dilation ---------------------------------------------------------------------


def kraus_from_dilation(u: np.ndarray, d: int, a: int) -> list[np.ndarray]:
    """K_j = <j|_A U |0>_A with system-major ordering (index s*a + j)."""
    t = np.asarray(u).reshape(d, a, d, a)
    return [t[:, j, :, 0].copy() for j in range(a)]


@dataclass(frozen=True, eq=False)
class ChannelDilation:
    dim: int
    ancilla_dim: int
    unitary: np.ndarray

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        n = self.dim * self.ancilla_dim
        if u.shape != (n, n):
            raise DimensionMismatch(f"dilation unitary must be {n} x {n}")
        if np.max(np.abs(u.conj().T @ u - np.eye(n))) > TOL:
            raise NotUnitary("dilation is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @property
    def kraus(self) -> list[np.ndarray]:
        return kraus_from_dilation(self.unitary, self.dim, self.ancilla_dim)

    def apply(self, rho) -> np.ndarray:
        r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
        return sum(k @ r @ k.conj().T for k in self.kraus)


def dilate_kraus_set(kraus: Sequence[np.ndarray], tol: float = 1e-8) -> ChannelDilation:
    """Unitary U on system x ancilla with <j|U|0> = K_j.

    The isometry V = sum_j K_j x |j> fills the ancilla-|0> columns; the
    remaining columns are an orthonormal complement built by Gram-Schmidt on
    pivoted columns of I - V V^dag, phase-fixed, so the result is reproducible.
    """
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks:
        raise ValueError("empty Kraus set")
    d = ks[0].shape[0]
    for k in ks:
        if k.shape != (d, d):
            raise DimensionMismatch("Kraus operators must all be d x d")
    if np.max(np.abs(sum(k.conj().T @ k for k in ks) - np.eye(d))) > tol:
        raise ValueError("Kraus set is not trace preserving")
    a = len(ks)
    v = np.stack(ks, axis=1).reshape(d * a, d)
    u = np.zeros((d * a, d * a), dtype=complex)
    u[:, 0::a] = v
    if a > 1:
        m = d * a - d
        comp = np.eye(d * a) - v @ v.conj().T
        rounded = np.round(comp.real, 10) + 1j * np.round(comp.imag, 10)
        _, _, piv = sla.qr(rounded, pivoting=True, mode="economic")
        q, _ = np.linalg.qr(comp[:, np.sort(piv[:m])])
        # Gram-Schmidt against V once more to wash out roundoff
        q = q - v @ (v.conj().T @ q)
        q, _ = np.linalg.qr(q)
        extra = np.column_stack([_phase_fix(q[:, c]) for c in range(m)])
        free = [c for c in range(d * a) if c % a]
        u[:, free] = extra
    return ChannelDilation(d, a, u)


def mixture_dilation_simulate(
    channel: ChannelDilation,
    mixture: Sequence[tuple[float, PureState]],
    shots: int,
    seed: int | np.random.Generator,
) -> DensityMatrix:
    """Monte Carlo estimate of E(rho) for rho = sum_i w_i |psi_i><psi_i|.

    Each input psi_i x |0>_A is propagated as particles under the symplectic
    image of the dilation; the ancilla readout selects branch j with
    probability q_ij = |K_j psi_i|^2. Shots are tallied as integer counts
    (multinomial over i, then over j), so the reduction does not depend on
    summation order and a fixed seed reproduces the estimate bit for bit.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    w = np.array([m[0] for m in mixture], dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > TOL:
        raise ValueError("mixture weights must be non-negative and sum to 1")
    d, a = channel.dim, channel.ancilla_dim
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s = unitary_to_symplectic(channel.unitary)
    basis = computational_basis(d * a)
    ancilla0 = np.eye(a)[0]

    acc = np.zeros((d, d), dtype=complex)
    for (wi, psi), ni in zip(mixture, rng.multinomial(shots, w / w.sum())):
        if psi.dim != d:
            raise DimensionMismatch("mixture state dimension mismatch")
        if ni == 0:
            continue
        out = apply_symplectic(s, to_phase_space(PureState(np.kron(psi.amps, ancilla0)), basis))
        branches = out.amplitudes.reshape(d, a)
        q = np.sum(np.abs(branches) ** 2, axis=0)
        for j, nj in enumerate(rng.multinomial(ni, q / q.sum())):
            if nj:
                phi = branches[:, j] / np.sqrt(q[j])
                acc += nj * np.outer(phi, phi.conj())
    rho = acc / shots
    return DensityMatrix(0.5 * (rho + rho.conj().T) / np.trace(rho).real)
