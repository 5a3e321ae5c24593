"""State representations, the Heisenberg-Weyl operator basis and the
quantum <-> phase-space maps.

A pure state of dimension d in some orthonormal basis {|b_i>} is carried by
d "hidden particles" with position q_i = Re<b_i|psi> and momentum
p_i = Im<b_i|psi>. The unit-norm condition becomes sum_i q_i^2 + p_i^2 = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.stats import unitary_group

from .errors import DimensionMismatch, InvalidParticleSet, NonPhysicalState, NotHermitian

# structural checks (eigen-residuals, symplecticity, ...) and round trips
TOL = 1e-10
ROUNDTRIP_TOL = 1e-12
NORM_TOL = 1e-12
PARTICLE_NORM_TOL = 1e-9
NEG_EIG_TOL = 1e-8


def _as_complex(a) -> np.ndarray:
    return np.array(a, dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector of complex amplitudes in the computational basis."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(_as_complex(self.amps).reshape(-1))
        if amps.size < 1:
            raise ValueError("state must have dimension >= 1")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: <psi|psi> = {norm2!r}")
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def momenta(self) -> np.ndarray:
        """Conjugate momenta pi_i = i * conj(psi_i)."""
        return 1j * self.amps.conj()

    @classmethod
    def from_vector(cls, vec, normalize: bool = True) -> "PureState":
        v = _as_complex(vec).reshape(-1)
        if normalize:
            n = np.linalg.norm(v)
            if n == 0:
                raise ValueError("cannot normalize the zero vector")
            v = v / n
        return cls(v)

    @classmethod
    def basis_state(cls, i: int, d: int) -> "PureState":
        v = np.zeros(d, dtype=complex)
        v[i] = 1.0
        return cls(v)

    def projector(self) -> np.ndarray:
        return np.outer(self.amps, self.amps.conj())

    def __repr__(self):
        return f"PureState(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class BasisLabel:
    """An orthonormal basis, stored as the columns of ``vectors``.

    ``kind`` is ``"computational"`` or ``"hw"``; for HW eigenbases ``j, k``
    name the operator M_jk and ``eigenvalues`` holds the eigenvalue attached
    to each column.
    """

    kind: str
    vectors: np.ndarray
    j: int | None = None
    k: int | None = None
    eigenvalues: np.ndarray | None = None

    def __post_init__(self):
        vecs = _frozen(_as_complex(self.vectors))
        if vecs.ndim != 2 or vecs.shape[0] != vecs.shape[1]:
            raise ValueError("basis vectors must form a square matrix")
        gram = vecs.conj().T @ vecs
        if np.max(np.abs(gram - np.eye(vecs.shape[0]))) > ROUNDTRIP_TOL:
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", vecs)
        if self.eigenvalues is not None:
            object.__setattr__(self, "eigenvalues", _frozen(_as_complex(self.eigenvalues)))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def label(self) -> str:
        if self.kind == "hw":
            return f"hw({self.j},{self.k})"
        return self.kind

    def __repr__(self):
        return f"BasisLabel({self.label}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class HiddenParticleSet:
    """d classical particles (q_i, p_i) encoding amplitudes in ``basis``.

    The unit-norm constraint is not enforced here, so perturbed or
    unnormalized sets can be propagated (e.g. for finite-difference checks);
    ``from_phase_space`` enforces it.
    """

    basis: BasisLabel
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = _frozen(np.array(self.q, dtype=float).reshape(-1))
        p = _frozen(np.array(self.p, dtype=float).reshape(-1))
        if q.size != p.size or q.size != self.basis.dim:
            raise DimensionMismatch(
                f"q ({q.size}), p ({p.size}) and basis ({self.basis.dim}) sizes differ"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.q.size

    @property
    def coords(self) -> np.ndarray:
        """Stacked phase-space vector (q_1..q_d, p_1..p_d)."""
        return np.concatenate([self.q, self.p])

    @property
    def amplitudes(self) -> np.ndarray:
        """Complex amplitudes q + ip in the particle basis."""
        return self.q + 1j * self.p

    def norm2(self) -> float:
        return float(np.sum(self.q**2 + self.p**2))

    @classmethod
    def from_coords(cls, basis: BasisLabel, y) -> "HiddenParticleSet":
        y = np.asarray(y, dtype=float)
        d = basis.dim
        return cls(basis, y[:d], y[d:])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    hermitian_defect: float = 0.0

    def __post_init__(self):
        rho = _frozen(_as_complex(self.entries))
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
            raise NotHermitian("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(rho)[0])
        if lam_min < -TOL:
            raise NonPhysicalState(f"minimum eigenvalue {lam_min:.3e} is negative")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_state(cls, state: PureState) -> "DensityMatrix":
        rho = state.projector()
        return cls(0.5 * (rho + rho.conj().T))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d, dtype=complex) / d)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def fidelity(self, state: PureState) -> float:
        """<psi|rho|psi>, insensitive to the global phase of psi."""
        return float(np.real(np.vdot(state.amps, self.entries @ state.amps)))

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


# -- random ensembles -----------------------------------------------------------


def random_state(d: int, rng: np.random.Generator) -> PureState:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState.from_vector(v)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(d, random_state=rng)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """GUE-like Hermitian matrix rescaled to operator norm ``scale``."""
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (a + a.conj().T)
    return scale * h / np.linalg.norm(h, 2)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


# -- phase-space maps -----------------------------------------------------------


def computational_basis(d: int) -> BasisLabel:
    return BasisLabel("computational", np.eye(d, dtype=complex))


def to_phase_space(state: PureState, basis: BasisLabel) -> HiddenParticleSet:
    if state.dim != basis.dim:
        raise DimensionMismatch(f"state dim {state.dim} != basis dim {basis.dim}")
    c = basis.vectors.conj().T @ state.amps
    return HiddenParticleSet(basis, c.real, c.imag)


def from_phase_space(hps: HiddenParticleSet) -> PureState:
    n2 = hps.norm2()
    if abs(n2 - 1.0) > PARTICLE_NORM_TOL:
        raise InvalidParticleSet(f"sum(q^2 + p^2) = {n2!r} deviates from 1")
    v = hps.basis.vectors @ hps.amplitudes
    return PureState(v / np.linalg.norm(v))


# -- Heisenberg-Weyl basis ------------------------------------------------------


def _check_hw_indices(j: int, k: int, d: int) -> None:
    if d < 1:
        raise ValueError("d must be >= 1")
    if not (0 <= j < d and 0 <= k < d):
        raise ValueError(f"HW indices (j={j}, k={k}) out of range for d={d}")


def shift_operator(j: int, d: int) -> np.ndarray:
    """X_j = sum_i |i><i+j| (mod d)."""
    x = np.zeros((d, d), dtype=complex)
    i = np.arange(d)
    x[i, (i + j) % d] = 1.0
    return x


def clock_operator(k: int, d: int) -> np.ndarray:
    """Z_k = sum_l omega^(lk) |l><l|, omega = exp(2 pi i / d)."""
    l = np.arange(d)
    return np.diag(np.exp(2j * np.pi * ((l * k) % d) / d))


def hw_operator(j: int, k: int, d: int) -> np.ndarray:
    _check_hw_indices(j, k, d)
    return shift_operator(j, d) @ clock_operator(k, d)


def hw_indices(d: int, include_identity: bool = False) -> list[tuple[int, int]]:
    """(j, k) pairs in j-major order; (0, 0) first when included."""
    idx = [(j, k) for j in range(d) for k in range(d)]
    return idx if include_identity else idx[1:]


def _phase_fix(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-8)
    if nz.size:
        v = v * np.exp(-1j * np.angle(v[nz[0]]))
        v[nz[0]] = abs(v[nz[0]])
    return v


@lru_cache(maxsize=None)
def _hw_eigensystem(j: int, k: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    m = hw_operator(j, k, d)
    t, z = sla.schur(m, output="complex")
    lam = np.diag(t)
    ang = np.mod(np.angle(lam), 2 * np.pi)
    ang[ang > 2 * np.pi - 1e-6] -= 2 * np.pi
    order = np.argsort(ang, kind="stable")
    ang, z = ang[order], z[:, order]

    # group numerically equal eigenvalues
    groups, start = [], 0
    for i in range(1, d + 1):
        if i == d or ang[i] - ang[i - 1] > 1e-6:
            groups.append((start, i))
            start = i

    vecs = []
    for a, b in groups:
        zc = z[:, a:b]
        r = b - a
        proj = zc @ zc.conj().T
        # pivots from a rounded projector so exact ties break by lowest index
        rounded = np.round(proj.real, 10) + 1j * np.round(proj.imag, 10)
        _, _, piv = sla.qr(rounded, pivoting=True, mode="economic")
        q, _ = np.linalg.qr(proj[:, np.sort(piv[:r])])
        vecs.extend(_phase_fix(q[:, c]) for c in range(r))
    v = np.column_stack(vecs)
    eig = np.einsum("ij,ij->j", v.conj(), m @ v)
    return v, eig


def hw_eigenbasis(j: int, k: int, d: int) -> BasisLabel:
    """Deterministically ordered, phase-fixed eigenbasis of M_jk.

    Eigenvalues are sorted by phase angle in [0, 2pi). Degenerate
    eigenspaces (composite d) are spanned by Gram-Schmidt on pivoted
    projector columns, and each vector's first nonzero entry is made real
    positive.
    """
    _check_hw_indices(j, k, d)
    if j == 0 and k == 0:
        return BasisLabel("hw", np.eye(d, dtype=complex), 0, 0, np.ones(d, dtype=complex))
    v, eig = _hw_eigensystem(j, k, d)
    return BasisLabel("hw", v, j, k, eig)


# -- Bloch representation -------------------------------------------------------


def bloch_vector(rho: DensityMatrix) -> np.ndarray:
    """n_jk = tr(M_jk^dagger rho) for (j, k) != (0, 0), j-major."""
    d = rho.dim
    return np.array(
        [np.trace(hw_operator(j, k, d).conj().T @ rho.entries) for j, k in hw_indices(d)],
        dtype=complex,
    )


def _bloch_sum(coeffs: Sequence[complex], d: int, include_identity: bool) -> np.ndarray:
    out = np.zeros((d, d), dtype=complex)
    for (j, k), c in zip(hw_indices(d, include_identity), coeffs):
        out += c * hw_operator(j, k, d)
    return out


def state_from_bloch(n, d: int, neg_tol: float = NEG_EIG_TOL) -> DensityMatrix:
    """rho = (1 + sum n_jk M_jk) / d, Hermitian-symmetrized.

    The size of the anti-Hermitian part removed is kept in
    ``hermitian_defect``. Raises NonPhysicalState when the smallest
    eigenvalue is below ``-neg_tol``.
    """
    n = np.asarray(n, dtype=complex).reshape(-1)
    if n.size != d * d - 1:
        raise DimensionMismatch(f"expected {d * d - 1} Bloch coefficients, got {n.size}")
    raw = (np.eye(d, dtype=complex) + _bloch_sum(n, d, False)) / d
    return _physical_density(raw, neg_tol)


def _physical_density(raw: np.ndarray, neg_tol: float, clip: bool = False) -> DensityMatrix:
    herm = 0.5 * (raw + raw.conj().T)
    defect = float(np.max(np.abs(raw - herm)))
    w, v = np.linalg.eigh(herm)
    if clip and w[0] < 0:
        w = np.clip(w, 0.0, None)
        herm = (v * (w / w.sum())) @ v.conj().T
        herm = 0.5 * (herm + herm.conj().T)
    elif w[0] < -neg_tol:
        raise NonPhysicalState(f"reconstructed state has eigenvalue {w[0]:.3e}")
    herm = herm / np.trace(herm).real
    # eigenvalues in (-neg_tol, -TOL) are tolerated at this stage
    obj = object.__new__(DensityMatrix)
    object.__setattr__(obj, "entries", _frozen(herm))
    object.__setattr__(obj, "hermitian_defect", defect)
    return obj


# -- distances ------------------------------------------------------------------


def operator_norm_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    diff = a - b
    if diff.ndim == 1:
        return float(np.linalg.norm(diff))
    return float(np.linalg.norm(diff, 2))


def trace_distance(rho, sigma) -> float:
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    s = sigma.entries if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    diff = r - s
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


# -- JSON schema: {"dim": d, "re": [...], "im": [...]} row-major ----------------------


def to_json_dict(obj) -> dict:
    if isinstance(obj, PureState):
        arr = obj.amps
    elif isinstance(obj, DensityMatrix):
        arr = obj.entries
    else:
        arr = np.asarray(obj, dtype=complex)
    if arr.ndim == 2 and arr.shape[0] != arr.shape[1]:
        raise ValueError("only vectors and square matrices are serializable")
    flat = arr.reshape(-1)
    return {"dim": int(arr.shape[0]), "re": flat.real.tolist(), "im": flat.imag.tolist()}


def from_json_dict(obj: dict) -> np.ndarray:
    d = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise ValueError("re and im lengths differ")
    arr = re + 1j * im
    if arr.size == d:
        return arr
    if arr.size == d * d:
        return arr.reshape(d, d)
    raise ValueError(f"{arr.size} entries do not match dim={d}")


def state_from_json(obj: dict) -> PureState:
    return PureState(from_json_dict(obj))


def basis_for(label: str | tuple[int, int] | None, d: int) -> BasisLabel:
    """Parse ``"computational"``, ``"j,k"`` or ``(j, k)`` into a basis."""
    if label is None or label == "computational":
        return computational_basis(d)
    if isinstance(label, str):
        s = label.strip().removeprefix("hw").strip("()")
        j, k = (int(x) for x in s.split(","))
    else:
        j, k = label
    return hw_eigenbasis(j, k, d)


def stack_states(states: Iterable[PureState]) -> np.ndarray:
    return np.column_stack([s.amps for s in states])
