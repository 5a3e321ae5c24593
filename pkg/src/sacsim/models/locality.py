"""Hilbert-space bandwidth and hidden-particle cost accounting."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from ..trotter import PAULI_X, PAULI_Z, embed_operator
from .walk import WalkSpec, walk_step_unitary

NONZERO_TOL = 1e-12
CLUSTER_ENUM_MAX = 16


def _nonzero_offsets(a: np.ndarray, ordering: Sequence[int] | None, tol: float) -> tuple[np.ndarray, int]:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("bandwidth needs a square matrix")
    n = a.shape[0]
    if ordering is not None:
        order = np.asarray(ordering)
        if sorted(order.tolist()) != list(range(n)):
            raise ValueError("ordering must be a permutation of the basis indices")
        a = a[np.ix_(order, order)]
    i, j = np.nonzero(np.abs(a) > tol)
    return np.abs(i - j), n


def hilbert_bandwidth(a, ordering: Sequence[int] | None = None, cyclic: bool = False, tol: float = NONZERO_TOL) -> int:
    """max |i - j| over entries with |A_ij| > tol after relabeling.

    ``ordering[k]`` is the basis index placed at position k. With ``cyclic``
    the distance is measured around the ring, min(|i-j|, n-|i-j|), so a
    periodic shift has bandwidth 1.
    """
    off, n = _nonzero_offsets(a, ordering, tol)
    if off.size == 0:
        return 0
    if cyclic:
        off = np.minimum(off, n - off)
    return int(off.max())


def cnot(n: int, control: int, target: int) -> np.ndarray:
    """CNOT on n qubits; qubit 0 is the most significant bit."""
    dim = 2**n
    u = np.zeros((dim, dim))
    for s in range(dim):
        bits = [(s >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        out = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        u[out, s] = 1.0
    return u


def linear_cluster_state(n: int) -> np.ndarray:
    """CZ-chain applied to |+>^n."""
    dim = 2**n
    idx = np.arange(dim)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    signs = np.ones(dim)
    for q in range(n - 1):
        signs *= np.where(bits[:, q] & bits[:, q + 1], -1.0, 1.0)
    return signs / np.sqrt(dim)


def cluster_amplitude_count(n: int) -> tuple[int, bool]:
    """Nonzero computational-basis amplitudes of the n-qubit linear cluster state.

    Enumerated for n <= 16; beyond that the count 2^n is extrapolated and
    flagged.
    """
    if n <= CLUSTER_ENUM_MAX:
        return int(np.count_nonzero(np.abs(linear_cluster_state(n)) > NONZERO_TOL)), False
    return 2**n, True


# -- cost descriptors -------------------------------------------------------------


@dataclass(frozen=True)
class Qudit:
    d: int


@dataclass(frozen=True)
class MultiParty:
    n: int
    d: int = 2


@dataclass(frozen=True)
class LinearOptics:
    modes: int


@dataclass(frozen=True)
class QuantumWalk:
    half_width: int


@dataclass(frozen=True)
class ClusterState:
    n: int


@dataclass
class CostReport:
    kind: str
    size_parameter: str
    size: int
    particles_per_run: int
    bases: int
    qst_runs: int
    qpt_runs: int
    hilbert_bandwidth: int | None
    verdict: str
    extrapolated: bool = False

    def to_json(self) -> dict:
        return asdict(self)


def growth_verdict(particles: Callable[[int], int]) -> str:
    """'efficient' iff the count grows polynomially in the size parameter.

    A polynomial has a constant doubling ratio f(2s)/f(s); an exponential's
    ratio keeps growing. Compared at s = 8, 16, 32 in log space.
    """
    f8, f16, f32 = (float(particles(s)) for s in (8, 16, 32))
    r1, r2 = np.log(f16 / f8), np.log(f32 / f16)
    return "efficient" if r2 <= 1.5 * r1 + 1e-9 else "inefficient"


def _generic_party_bandwidth(n: int, d: int) -> int:
    # a generic term on the most significant party moves states by multiples of d^(n-1)
    if d == 2 and n <= 12:
        return hilbert_bandwidth(single_party_operator(n, 0))
    return (d - 1) * d ** (n - 1)


def _walk_bandwidth(half_width: int) -> int:
    hw = min(half_width, 256)  # the band does not depend on the width
    u = walk_step_unitary(WalkSpec(hw, 0, [1.0, 0.0]))
    return hilbert_bandwidth(u, walk_ordering(hw), cyclic=True)


def sac_cost(desc) -> CostReport:
    """Hidden particles, bases and tomography runs needed to simulate ``desc``.

    Tomography of a dimension-D object needs D^2 fixed-basis runs per state
    and D^2 inputs for a process, so qpt_runs = D^4.
    """
    extrapolated = False
    if isinstance(desc, Qudit):
        kind, pname, size = "qudit", "d", desc.d
        fn = lambda s: s
        band = None
    elif isinstance(desc, MultiParty):
        kind, pname, size = "multi_party", "n", desc.n
        fn = lambda s, d=desc.d: d**s
        band = _generic_party_bandwidth(desc.n, desc.d)
    elif isinstance(desc, LinearOptics):
        kind, pname, size = "linear_optics", "N", desc.modes
        fn = lambda s: s
        band = 1  # splitters couple neighbouring modes
    elif isinstance(desc, QuantumWalk):
        kind, pname, size = "quantum_walk", "d", desc.half_width
        fn = lambda s: 2 * (2 * s + 1)
        band = _walk_bandwidth(desc.half_width)
    elif isinstance(desc, ClusterState):
        kind, pname, size = "cluster_state", "n", desc.n
        fn = lambda s: cluster_amplitude_count(s)[0]
        extrapolated = cluster_amplitude_count(desc.n)[1]
        band = _generic_party_bandwidth(desc.n, 2)
    else:
        raise ValueError(f"unknown system descriptor {desc!r}")
    if size < 1:
        raise ValueError("size parameter must be >= 1")
    particles = fn(size)
    bases = particles**2
    return CostReport(kind, pname, size, particles, bases, bases, bases * bases, band, growth_verdict(fn), extrapolated)


def walk_ordering(half_width: int) -> list[int]:
    """Position-major relabeling of coin-major walk modes: position k holds (c, x)."""
    w = 2 * half_width + 1
    return [c * w + x for x in range(w) for c in range(2)]


def single_party_operator(n: int, party: int = 0) -> np.ndarray:
    """A generic (X + Z) term on one qubit, embedded in n qubits."""
    return embed_operator(PAULI_X + PAULI_Z, (party,), n, 2)
