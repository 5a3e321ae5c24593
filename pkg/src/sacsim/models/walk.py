"""Coined quantum walk on a cycle of 2d+1 sites, run as hidden particles."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..dynamics import Trajectory, unitary_to_symplectic
from ..io import write_csv
from ..statespace import HiddenParticleSet, PureState, computational_basis, shift_operator, to_phase_space

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class WalkSpec:
    half_width: int
    steps: int
    coin_state: np.ndarray
    coin_op: np.ndarray = HADAMARD

    def __post_init__(self):
        if self.half_width < 1 or self.steps < 0:
            raise ValueError("need half_width >= 1 and steps >= 0")
        if self.steps > self.half_width:
            raise ValueError(f"steps T={self.steps} exceeds half-width d={self.half_width}; the walk would wrap")
        c = np.array(self.coin_state, dtype=complex).reshape(-1)
        if c.size != 2 or abs(np.vdot(c, c).real - 1) > 1e-12:
            raise ValueError("coin state must be a normalized 2-vector")
        op = np.array(self.coin_op, dtype=complex)
        if op.shape != (2, 2) or np.max(np.abs(op.conj().T @ op - np.eye(2))) > 1e-12:
            raise ValueError("coin operator must be a 2x2 unitary")
        object.__setattr__(self, "coin_state", c)
        object.__setattr__(self, "coin_op", op)

    @property
    def walker_dim(self) -> int:
        return 2 * self.half_width + 1

    @property
    def dim(self) -> int:
        return 2 * self.walker_dim

    @property
    def positions(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def mode_index(self, coin: int, x: int) -> int:
        """Coin-major ordering: index = c (2d+1) + x + d."""
        if coin not in (0, 1) or abs(x) > self.half_width:
            raise ValueError(f"no mode ({coin}, {x})")
        return coin * self.walker_dim + x + self.half_width

    def initial_state(self) -> PureState:
        w = np.zeros(self.walker_dim, dtype=complex)
        w[self.half_width] = 1.0
        return PureState(np.kron(self.coin_state, w))


def walker_shift(half_width: int) -> np.ndarray:
    """X = sum_x |x><x+1| on sites -d..d, cyclic, so X|x+1> = |x>."""
    return shift_operator(1, 2 * half_width + 1)


def walk_step_unitary(spec: WalkSpec) -> np.ndarray:
    """U = S (C x 1) with S = |0><0| x X^dag + |1><1| x X."""
    x = walker_shift(spec.half_width)
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    s = np.kron(p0, x.conj().T) + np.kron(p1, x)
    return s @ np.kron(spec.coin_op, np.eye(spec.walker_dim))


@dataclass
class WalkResult:
    spec: WalkSpec
    amplitudes: np.ndarray  # (T+1, dim), row t is the state after t steps

    @property
    def trajectory(self) -> Trajectory:
        """Phase-space record of every mode; energy is undefined for a discrete map (NaN)."""
        basis = computational_basis(self.spec.dim)
        states = [HiddenParticleSet(basis, a.real, a.imag) for a in self.amplitudes]
        n = len(states)
        return Trajectory(np.arange(n, dtype=float), states, np.full(n, np.nan))

    def mode_trajectory(self, coin: int, x: int) -> tuple[np.ndarray, np.ndarray]:
        a = self.amplitudes[:, self.spec.mode_index(coin, x)]
        return a.real.copy(), a.imag.copy()

    def distribution(self, step: int | None = None) -> np.ndarray:
        step = self.spec.steps if step is None else step
        a = self.amplitudes[step].reshape(2, self.spec.walker_dim)
        return np.sum(np.abs(a) ** 2, axis=0)

    def sigma(self, step: int | None = None) -> float:
        p = self.distribution(step)
        x = self.spec.positions
        mean = np.sum(p * x)
        return float(np.sqrt(np.sum(p * (x - mean) ** 2)))

    def light_cone_leak(self) -> float:
        """Largest |amplitude| found at |x| > t over all steps t (exactly 0 for a local walk)."""
        x = np.abs(np.tile(self.spec.positions, 2))
        worst = 0.0
        for t, a in enumerate(self.amplitudes):
            outside = np.abs(a[x > t])
            if outside.size:
                worst = max(worst, float(outside.max()))
        return worst

    def distribution_rows(self) -> Iterator[tuple]:
        for x, p in zip(self.spec.positions, self.distribution()):
            yield (int(x), p)

    def write_distribution_csv(self, path):
        return write_csv(path, ("x", "prob"), self.distribution_rows())

    def write_trajectory_csv(self, path):
        return self.trajectory.write_csv(path)


def classical_walk_sigma(steps: int) -> float:
    """Unbiased +-1 random walk: sigma(T) = sqrt(T)."""
    return float(np.sqrt(steps))


def run_walk(spec: WalkSpec) -> WalkResult:
    """Iterate the symplectic image of one walk step on all 2(2d+1) hidden particles."""
    s = unitary_to_symplectic(walk_step_unitary(spec)).matrix
    hps = to_phase_space(spec.initial_state(), computational_basis(spec.dim))
    y = hps.coords
    n = spec.dim
    amps = np.empty((spec.steps + 1, n), dtype=complex)
    amps[0] = hps.amplitudes
    for t in range(1, spec.steps + 1):
        y = s @ y
        amps[t] = y[:n] + 1j * y[n:]
    return WalkResult(spec, amps)
