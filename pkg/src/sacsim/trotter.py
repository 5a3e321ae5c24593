"""Trotter-Suzuki sequencing of local-Hamiltonian evolution.

exp(-itH) for H = sum_l H_l is approximated by [U_chi(tau)]^r, tau = t/r, with

    U_1(tau) = prod_{l=1..L} U_l(tau/2) prod_{l=L..1} U_l(tau/2)
    U_p(tau) = U_{p-1}(s tau)^2 U_{p-1}((1 - 4s) tau) U_{p-1}(s tau)^2,
    s = s_p = 1 / (4 - 4^(1/(2p-1))),

and the operator-norm error scales as t^(2chi+1) / r^(2chi).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .dynamics import SymplecticMap, apply_symplectic, exact_propagator, unitary_to_symplectic
from .errors import DimensionMismatch
from .io import write_csv
from .statespace import HiddenParticleSet, operator_norm_distance

MAX_DIM = 4096
ROUNDOFF_FLOOR = 1e-12


def embed_operator(op: np.ndarray, support: Sequence[int], n: int, d: int) -> np.ndarray:
    """Kronecker-embed an operator on ``support`` (party indices) into n parties of dim d.

    Party 0 is the most significant tensor factor.
    """
    support = list(support)
    k = len(support)
    if len(set(support)) != k or any(not 0 <= s < n for s in support):
        raise ValueError(f"invalid support {support} for {n} parties")
    op = np.asarray(op, dtype=complex)
    if op.shape != (d**k, d**k):
        raise DimensionMismatch(f"term on {k} parties must be {d ** k} x {d ** k}")
    rest = [i for i in range(n) if i not in support]
    full = np.kron(op, np.eye(d ** len(rest))).reshape((d,) * (2 * n))
    inv = np.argsort(support + rest)
    axes = list(inv) + [n + i for i in inv]
    return full.transpose(axes).reshape(d**n, d**n)


@dataclass(frozen=True, eq=False)
class LocalHamiltonian:
    n: int
    d: int
    terms: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    def __post_init__(self):
        if self.d**self.n > MAX_DIM:
            raise ValueError(f"total dimension {self.d ** self.n} exceeds {MAX_DIM}")
        clean = []
        for support, op in self.terms:
            op = np.asarray(op, dtype=complex)
            if np.max(np.abs(op - op.conj().T)) > 1e-12:
                raise ValueError(f"term on {support} is not Hermitian")
            clean.append((tuple(support), op))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def locality(self) -> int:
        return max(len(s) for s, _ in self.terms)

    @property
    def dim(self) -> int:
        return self.d**self.n

    @cached_property
    def embedded(self) -> list[np.ndarray]:
        return [embed_operator(op, s, self.n, self.d) for s, op in self.terms]

    @cached_property
    def _eig(self):
        return [np.linalg.eigh(h) for h in self.embedded]

    def matrix(self) -> np.ndarray:
        return sum(self.embedded)

    def term_propagator(self, index: int, duration: float) -> np.ndarray:
        w, v = self._eig[index]
        return (v * np.exp(-1j * duration * w)) @ v.conj().T

    @property
    def hidden_particles(self) -> int:
        """One (q, p) pair per product basis state: d^n."""
        return self.d**self.n


@dataclass
class TrotterPlan:
    steps: list[tuple[int, float]]
    order: int
    repetitions: int
    t: float
    s_values: list[float] = field(default_factory=list)

    @property
    def tau(self) -> float:
        return self.t / self.repetitions

    def __len__(self):
        return len(self.steps)

    def total_time_per_term(self, n_terms: int) -> np.ndarray:
        out = np.zeros(n_terms)
        for lam, dt in self.steps:
            out[lam] += dt
        return out


def suzuki_s(p: int) -> float:
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * p - 1)))


def _suzuki_sequence(n_terms: int, tau: float, p: int) -> list[tuple[int, float]]:
    if p == 1:
        half = tau / 2
        return [(lam, half) for lam in range(n_terms)] + [(lam, half) for lam in reversed(range(n_terms))]
    s = suzuki_s(p)
    outer = _suzuki_sequence(n_terms, s * tau, p - 1)
    middle = _suzuki_sequence(n_terms, (1 - 4 * s) * tau, p - 1)
    return outer + outer + middle + outer + outer


def suzuki_plan(h: LocalHamiltonian, t: float, r: int, chi: int) -> TrotterPlan:
    """Every exponential of [U_chi(t/r)]^r in execution order (term indices are 0-based)."""
    if r < 1 or chi < 1 or int(r) != r or int(chi) != chi:
        raise ValueError("r and chi must be positive integers")
    tau = t / r
    one = _suzuki_sequence(h.n_terms, tau, chi)
    return TrotterPlan(one * r, chi, r, t, [suzuki_s(p) for p in range(2, chi + 1)])


@dataclass
class PlanResult:
    unitary: np.ndarray
    symplectic: SymplecticMap


def execute_plan(plan: TrotterPlan, h: LocalHamiltonian) -> PlanResult:
    """Multiply the term exponentials in plan order; also return the composed symplectic map."""
    if h.dim > MAX_DIM:
        raise ValueError(f"dimension {h.dim} exceeds {MAX_DIM}")
    u = np.eye(h.dim, dtype=complex)
    cache: dict[tuple[int, float], np.ndarray] = {}
    for lam, dt in plan.steps:
        if not 0 <= lam < h.n_terms:
            raise ValueError(f"plan refers to missing term {lam}")
        key = (lam, dt)
        if key not in cache:
            cache[key] = h.term_propagator(lam, dt)
        u = cache[key] @ u
    return PlanResult(u, unitary_to_symplectic(u))


def run_plan_on_particles(plan: TrotterPlan, h: LocalHamiltonian, hps: HiddenParticleSet) -> HiddenParticleSet:
    """Apply each term's symplectic map in turn; every map acts on all d^n particles."""
    b = hps.basis.vectors
    maps: dict[tuple[int, float], SymplecticMap] = {}
    for lam, dt in plan.steps:
        key = (lam, dt)
        if key not in maps:
            maps[key] = unitary_to_symplectic(b.conj().T @ h.term_propagator(lam, dt) @ b)
        hps = apply_symplectic(maps[key], hps)
    return hps


@dataclass
class ScanResult:
    rows: list[tuple[int, float, float]]
    chi: int
    t: float
    slope: float | None
    fit_skipped: bool

    def write_csv(self, path):
        return write_csv(path, ("r", "error", "bound"), self.rows)

    def summary(self) -> dict:
        return {
            "chi": self.chi,
            "t": self.t,
            "slope": self.slope,
            "expected_slope": -2 * self.chi,
            "fit_skipped": self.fit_skipped,
            "rows": [{"r": r, "error": e, "bound": b} for r, e, b in self.rows],
        }


def fit_loglog_slope(r_values, errors, floor: float = ROUNDOFF_FLOOR) -> float | None:
    r = np.asarray(r_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    mask = e > floor
    if mask.sum() < 2:
        return None
    return float(np.polyfit(np.log(r[mask]), np.log(e[mask]), 1)[0])


def error_scan(h: LocalHamiltonian, t: float, chi: int, r_values: Sequence[int]) -> ScanResult:
    """Operator-norm error of the chi-th order formula against exp(-itH) for each r.

    ``bound`` is the scaling t^(2chi+1) / r^(2chi) with unit prefactor. Points at
    the roundoff floor are excluded from the slope fit; the fit is skipped if
    fewer than two remain.
    """
    exact = exact_propagator(h.matrix(), t)
    rows = []
    for r in r_values:
        if r < 1:
            raise ValueError("r must be >= 1")
        approx = execute_plan(suzuki_plan(h, t, int(r), chi), h).unitary
        rows.append((int(r), operator_norm_distance(exact, approx), abs(t) ** (2 * chi + 1) / r ** (2 * chi)))
    slope = fit_loglog_slope([r for r, _, _ in rows], [e for _, e, _ in rows])
    return ScanResult(rows, chi, t, slope, slope is None)


# -- stock models -----------------------------------------------------------------

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def x_plus_z() -> LocalHamiltonian:
    """Single qubit, two non-commuting terms X and Z."""
    return LocalHamiltonian(1, 2, (((0,), PAULI_X), ((0,), PAULI_Z)))


def ising_chain(n: int = 3, coupling: float = 1.0, field_x: float = 0.8, field_z: float = 0.3) -> LocalHamiltonian:
    """Open chain: J Z_i Z_{i+1} + hx X_i + hz Z_i (2-local)."""
    zz = np.kron(PAULI_Z, PAULI_Z)
    terms = [((i, i + 1), coupling * zz) for i in range(n - 1)]
    terms += [((i,), field_x * PAULI_X + field_z * PAULI_Z) for i in range(n)]
    return LocalHamiltonian(n, 2, tuple(terms))


def commuting_z(n: int = 2) -> LocalHamiltonian:
    return LocalHamiltonian(n, 2, tuple(((i,), PAULI_Z) for i in range(n)))
