"""Beam-splitter mesh decomposition of an N-mode unitary.

A triangular nulling sweep: for rows r = N-1 .. 1 and columns c = 0 .. r-1,
right-multiplying by the inverse of a splitter on modes (c, c+1) zeroes
U[r, c]. What remains is diagonal and becomes N output phase shifters, so
U = D T_K ... T_1 with at most N(N-1)/2 splitters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dynamics import SymplecticMap, unitary_to_symplectic
from ..errors import NotUnitary
from ..statespace import TOL


@dataclass(frozen=True)
class BeamSplitter:
    """Acts on modes (mode, mode+1) as [[e^{i phi} cos t, -sin t], [e^{i phi} sin t, cos t]]."""

    mode: int
    theta: float
    phi: float

    def block(self) -> np.ndarray:
        c, s, e = np.cos(self.theta), np.sin(self.theta), np.exp(1j * self.phi)
        return np.array([[e * c, -s], [e * s, c]])

    def matrix(self, n: int) -> np.ndarray:
        m = np.eye(n, dtype=complex)
        m[self.mode : self.mode + 2, self.mode : self.mode + 2] = self.block()
        return m


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phi: float

    def matrix(self, n: int) -> np.ndarray:
        m = np.eye(n, dtype=complex)
        m[self.mode, self.mode] = np.exp(1j * self.phi)
        return m


@dataclass
class OpticalMesh:
    n_modes: int
    elements: list = field(default_factory=list)  # execution order: first element sees the input
    target: np.ndarray | None = None

    @property
    def splitter_count(self) -> int:
        return sum(isinstance(e, BeamSplitter) for e in self.elements)

    @property
    def phase_count(self) -> int:
        return sum(isinstance(e, PhaseShifter) for e in self.elements)

    def unitary(self) -> np.ndarray:
        u = np.eye(self.n_modes, dtype=complex)
        for e in self.elements:
            u = e.matrix(self.n_modes) @ u
        return u

    def reconstruction_error(self) -> float:
        return float(np.max(np.abs(self.unitary() - self.target)))

    def symplectic_maps(self) -> list[SymplecticMap]:
        return [unitary_to_symplectic(e.matrix(self.n_modes)) for e in self.elements]

    def to_json(self) -> dict:
        elems = []
        for e in self.elements:
            if isinstance(e, BeamSplitter):
                elems.append({"type": "beam_splitter", "modes": [e.mode, e.mode + 1], "theta": e.theta, "phi": e.phi})
            else:
                elems.append({"type": "phase_shifter", "mode": e.mode, "phi": e.phi})
        return {"n_modes": self.n_modes, "elements": elems}

    @classmethod
    def from_json(cls, obj: dict) -> "OpticalMesh":
        elems = []
        for e in obj["elements"]:
            if e["type"] == "beam_splitter":
                elems.append(BeamSplitter(int(e["modes"][0]), float(e["theta"]), float(e["phi"])))
            else:
                elems.append(PhaseShifter(int(e["mode"]), float(e["phi"])))
        mesh = cls(int(obj["n_modes"]), elems)
        mesh.target = mesh.unitary()
        return mesh


def mesh_decompose(u, tol: float = TOL) -> OpticalMesh:
    u = np.array(u, dtype=complex)
    n = u.shape[0]
    if u.shape != (n, n) or np.max(np.abs(u.conj().T @ u - np.eye(n))) >= tol:
        raise NotUnitary("mesh_decompose needs a unitary matrix")
    work = u.copy()
    splitters = []
    for r in range(n - 1, 0, -1):
        for c in range(r):
            a, b = work[r, c], work[r, c + 1]
            theta = float(np.arctan2(abs(a), abs(b)))
            phi = float(np.angle(a) - np.angle(b)) if abs(a) > 0 and abs(b) > 0 else 0.0
            bs = BeamSplitter(c, theta, phi)
            blk = bs.block()
            work[:, c : c + 2] = work[:, c : c + 2] @ blk.conj().T
            work[r, c] = 0.0
            splitters.append(bs)
    phases = [PhaseShifter(m, float(np.angle(work[m, m]))) for m in range(n)]
    return OpticalMesh(n, splitters + phases, u)
