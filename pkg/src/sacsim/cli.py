"""Experiment runner.

    sacsim <subcommand> [--config cfg.json] [--out DIR] [--seed N] [--tol X] [flags]

Each run writes CSV/JSON artifacts plus ``manifest.json`` (config echo,
versions, checksums, wall time) to the output directory. Flags override
values from the config file. Exit status: 0 success, 2 invalid config,
3 numerical-invariant breach.
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import __version__
from .dynamics import QuadraticHamiltonian, evolve, exact_propagator, unitary_to_symplectic
from .errors import InvariantViolation, SacError
from .io import sha256_file, write_csv, write_json
from .models import field as fieldmod
from .models.locality import ClusterState, LinearOptics, MultiParty, QuantumWalk, Qudit, sac_cost
from .models.optics import mesh_decompose
from .models.walk import WalkSpec, classical_walk_sigma, run_walk
from .opensys import (
    dilate_kraus_set,
    evolve_density_vector,
    lindblad_generator,
    mixture_dilation_simulate,
    vectorize_density,
)
from .statespace import (
    DensityMatrix,
    PureState,
    basis_for,
    clock_operator,
    from_json_dict,
    from_phase_space,
    random_hermitian,
    random_state,
    random_unitary,
    to_json_dict,
    to_phase_space,
    trace_distance,
)
from .tomography import SACSimulator, sac_qpt, sac_qst, verify_simulator
from .trotter import error_scan, ising_chain, x_plus_z

log = logging.getLogger("sacsim")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3
DEFAULT_SEED = 0
DEFAULT_TOL = 1e-9


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str
    seed: int = DEFAULT_SEED
    tol: float = DEFAULT_TOL
    out: str = "out"
    params: dict[str, Any] = field(default_factory=dict)

    def echo(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "tol": self.tol, "params": dict(self.params)}


def component_rng(seed: int, name: str) -> np.random.Generator:
    """Independent stream per named component, derived only from (seed, name)."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


# -- parameter schemas ----------------------------------------------------------------


def _floats(s) -> list[float]:
    if isinstance(s, str):
        return [float(x) for x in s.split(",") if x.strip()]
    return [float(x) for x in s]


def _ints(s) -> list[int]:
    if isinstance(s, str):
        return [int(x) for x in s.split(",") if x.strip()]
    return [int(x) for x in s]


def _opt(conv):
    return lambda v: None if v is None else conv(v)


# name -> (type converter, default, validator or None)
SCHEMAS: dict[str, dict[str, tuple[Callable, Any, Callable | None]]] = {
    "evolve": {
        "dim": (int, 4, lambda v: v >= 1),
        "t": (float, 1.0, lambda v: v >= 0),
        "method": (str, "exact", lambda v: v in ("exact", "midpoint")),
        "dt": (float, 1e-3, lambda v: v > 0),
        "samples": (int, 200, lambda v: v >= 2),
        "basis": (str, "computational", None),
        "hamiltonian": (_opt(dict), None, None),
        "state": (_opt(dict), None, None),
    },
    "walk": {
        "T": (int, 100, lambda v: v >= 0),
        "d": (int, 100, lambda v: v >= 1),
        "coin": (_opt(_floats), None, lambda v: v is None or len(v) == 4),
    },
    "tomography": {
        "dim": (int, 2, lambda v: 1 <= v <= 8),
        "channel": (str, "unitary", lambda v: v in ("identity", "unitary", "dephasing", "amplitude_damping")),
        "gamma": (float, 0.3, lambda v: 0 <= v <= 1),
        "epsilon": (float, 1e-8, lambda v: v >= 0),
        "epsilon0": (float, 0.0, lambda v: v >= 0),
        "shots": (_opt(int), None, lambda v: v is None or v >= 1),
    },
    "lindblad": {
        "dim": (int, 2, lambda v: 2 <= v <= 8),
        "gamma": (float, 1.0, lambda v: v >= 0),
        "dephasing": (float, 0.0, lambda v: v >= 0),
        "t": (float, 1.0, lambda v: v >= 0),
        "samples": (int, 200, lambda v: v >= 2),
        "shots": (int, 100000, lambda v: v >= 1),
    },
    "trotter-scan": {
        "model": (str, "xz", lambda v: v in ("xz", "chain")),
        "n": (int, 3, lambda v: 2 <= v <= 10),
        "chi": (int, 1, lambda v: 1 <= v <= 4),
        "t": (float, 1.0, lambda v: v > 0),
        "r": (_ints, [4, 8, 16, 32, 64], lambda v: len(v) >= 1 and min(v) >= 1),
    },
    "optics": {
        "modes": (int, 8, lambda v: 1 <= v <= 64),
        "unitary": (_opt(dict), None, None),
    },
    "cost": {
        "kind": (str, "qudit", lambda v: v in ("qudit", "parties", "optics", "walk", "cluster")),
        "size": (int, 3, lambda v: v >= 1),
        "d": (int, 2, lambda v: v >= 2),
    },
    "field": {
        "N": (int, 256, lambda v: 8 <= v <= 4096),
        "box": (_floats, [-10.0, 10.0], lambda v: len(v) == 2 and v[1] > v[0]),
        "potential": (str, "harmonic", lambda v: v in ("harmonic", "free")),
        "t": (float, 2 * np.pi, lambda v: v >= 0),
        "width": (float, 1.0, lambda v: v > 0),
        "samples": (int, 50, lambda v: v >= 2),
    },
}


def build_config(subcommand: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    merged = {**file_values.get("params", {}), **{k: v for k, v in file_values.items() if k != "params"}}
    merged.update(flag_values)
    if merged.get("subcommand", subcommand) != subcommand:
        raise ConfigError("config file is for a different subcommand")
    try:
        seed = int(merged.pop("seed", DEFAULT_SEED))
        tol = float(merged.pop("tol", DEFAULT_TOL))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not tol > 0:
        raise ConfigError("tol must be positive")
    out = str(merged.pop("out", "out"))
    merged.pop("subcommand", None)
    merged.pop("config", None)

    schema = SCHEMAS[subcommand]
    unknown = set(merged) - set(schema)
    if unknown:
        raise ConfigError(f"unknown parameters for {subcommand}: {sorted(unknown)}")
    params = {}
    for name, (conv, default, check) in schema.items():
        raw = merged.get(name, default)
        try:
            val = conv(raw) if raw is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {raw!r}") from exc
        if check is not None and not check(val):
            raise ConfigError(f"invalid value for {name}: {raw!r}")
        params[name] = val
    if subcommand == "walk" and params["T"] > params["d"]:
        raise ConfigError("walk needs T <= d")
    return ExperimentConfig(subcommand, seed, tol, out, params)


# -- subcommands ----------------------------------------------------------------------


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvariantViolation(msg)


def _cmd_evolve(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    rng = component_rng(cfg.seed, "evolve")
    if p["hamiltonian"] is not None:
        hmat = from_json_dict(p["hamiltonian"])
    else:
        hmat = random_hermitian(p["dim"], rng)
    d = hmat.shape[0]
    psi0 = PureState(from_json_dict(p["state"])) if p["state"] is not None else random_state(d, rng)
    h = QuadraticHamiltonian(hmat)
    traj = evolve(h, to_phase_space(psi0, basis_for(p["basis"], d)), p["t"], p["method"], p["dt"], p["samples"])
    final = from_phase_space(traj.final)
    oracle_err = float(np.linalg.norm(final.amps - exact_propagator(hmat, p["t"]) @ psi0.amps))
    summary = {
        "initial_state": to_json_dict(psi0),
        "hamiltonian": to_json_dict(hmat),
        "final_state": to_json_dict(final),
        "oracle_error": oracle_err,
        "max_norm_drift": traj.max_norm_drift(),
        "max_energy_drift": traj.max_energy_drift(),
    }
    files = [traj.write_csv(out / "trajectory.csv"), write_json(out / "summary.json", summary)]
    _require(traj.max_norm_drift() < cfg.tol, f"norm drift {traj.max_norm_drift():.3e}")
    return files


def _cmd_walk(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    if p["coin"] is None:
        coin = random_state(2, component_rng(cfg.seed, "walk.coin")).amps
    else:
        c = p["coin"]
        coin = PureState.from_vector([c[0] + 1j * c[1], c[2] + 1j * c[3]]).amps
    res = run_walk(WalkSpec(p["d"], p["T"], coin))
    T = p["T"]
    summary = {
        "coin_state": to_json_dict(coin),
        "sigma_T": res.sigma(T),
        "sigma_half": res.sigma(T // 2),
        "sigma_ratio": res.sigma(T) / res.sigma(T // 2) if T >= 2 else None,
        "classical_sigma_T": classical_walk_sigma(T),
        "light_cone_leak": res.light_cone_leak(),
        "total_probability": float(res.distribution().sum()),
        "origin_mode_weight": [float(abs(res.amplitudes[T, res.spec.mode_index(c, 0)]) ** 2) for c in (0, 1)],
    }
    files = [
        res.write_trajectory_csv(out / "trajectory.csv"),
        res.write_distribution_csv(out / "distribution.csv"),
        write_json(out / "summary.json", summary),
    ]
    _require(res.light_cone_leak() == 0.0, "amplitude found outside the light cone")
    _require(abs(summary["total_probability"] - 1) < cfg.tol, "walk lost normalization")
    return files


def _kraus_for(name: str, d: int, gamma: float) -> list[np.ndarray]:
    """Kraus sets for the stock channels; amplitude damping decays |1> -> |0>."""
    if name == "dephasing":
        return [np.diag(np.eye(d)[i]).astype(complex) for i in range(d)]
    k0 = np.eye(d, dtype=complex)
    k0[1, 1] = np.sqrt(1 - gamma)
    k1 = np.zeros((d, d), dtype=complex)
    k1[0, 1] = np.sqrt(gamma)
    return [k0, k1]


def _cmd_tomography(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    d = p["dim"]
    rng = component_rng(cfg.seed, "tomography")
    psi = random_state(d, rng)
    qst = sac_qst(psi, shots=p["shots"], rng=component_rng(cfg.seed, "tomography.shots"), clip=p["shots"] is not None)

    if p["channel"] in ("dephasing", "amplitude_damping"):
        kraus = _kraus_for(p["channel"], d, p["gamma"])
        channel = dilate_kraus_set(kraus)
        oracle = sum(np.outer(k.reshape(-1), k.reshape(-1).conj()) for k in kraus) / d
    else:
        u = np.eye(d, dtype=complex) if p["channel"] == "identity" else random_unitary(d, rng)
        channel = u
        oracle = np.outer(u.reshape(-1), u.reshape(-1).conj()) / d
    qpt = sac_qpt(channel, d)

    h = random_hermitian(d, rng)
    sim = SACSimulator(QuadraticHamiltonian(h), 1.0)
    report = verify_simulator(exact_propagator(h, 1.0), sim, epsilon=p["epsilon"], epsilon0=p["epsilon0"],
                              observables={"Z": clock_operator(1, d)})
    qst_out = {
        "state": to_json_dict(psi),
        "rho": to_json_dict(qst.rho),
        "description": qst.description,
        "fidelity": qst.fidelity,
        "runs": qst.runs,
    }
    qpt_out = {
        "channel": p["channel"],
        "choi": to_json_dict(qpt.choi),
        "run_count": qpt.run_count,
        "choi_trace_distance_to_oracle": trace_distance(qpt.choi, oracle),
    }
    files = [
        write_json(out / "qst.json", qst_out),
        write_json(out / "qpt.json", qpt_out),
        write_json(out / "verification.json", report.to_json()),
    ]
    _require(qpt.run_count == d**4, "QPT run count mismatch")
    if p["shots"] is None:
        _require(1 - qst.fidelity < cfg.tol, f"QST fidelity {qst.fidelity!r}")
        _require(qpt_out["choi_trace_distance_to_oracle"] < cfg.tol, "QPT Choi estimate off")
    return files


def _cmd_lindblad(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    d = p["dim"]
    lower = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    jumps = [(p["gamma"], lower)]
    if p["dephasing"] > 0:
        jumps.append((p["dephasing"], clock_operator(1, d)))
    gen = lindblad_generator(np.zeros((d, d)), jumps)
    rho0 = DensityMatrix.from_state(PureState.basis_state(1, d)) if d == 2 else \
        DensityMatrix.from_state(random_state(d, component_rng(cfg.seed, "lindblad.state")))
    traj = evolve_density_vector(gen, vectorize_density(rho0), p["t"], p["samples"])
    final = traj.density_matrices()[-1]
    summary: dict[str, Any] = {
        "final_rho": to_json_dict(final),
        "max_trace_drift": float(np.max(np.abs(traj.traces() - 1))),
        "purity_initial": traj.vectors[0].purity,
        "purity_final": traj.final.purity,
    }
    if d == 2 and p["dephasing"] == 0:
        decay = np.exp(-p["gamma"] * p["t"])
        summary["rho11_closed_form"] = float(decay)
        summary["rho11_error"] = float(abs(final.entries[1, 1].real - decay))
        kraus = [np.array([[1, 0], [0, np.sqrt(decay)]]), np.array([[0, np.sqrt(1 - decay)], [0, 0]])]
        est = mixture_dilation_simulate(dilate_kraus_set(kraus), [(1.0, PureState.basis_state(1, 2))],
                                        p["shots"], component_rng(cfg.seed, "lindblad.mc"))
        summary["mixture_dilation_trace_distance"] = trace_distance(est, final)
    files = [traj.write_csv(out / "density_trajectory.csv"), write_json(out / "summary.json", summary)]
    _require(summary["max_trace_drift"] < cfg.tol, "trace coordinate drifted")
    return files


def _cmd_trotter(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    h = x_plus_z() if p["model"] == "xz" else ising_chain(p["n"])
    scan = error_scan(h, p["t"], p["chi"], p["r"])
    summary = scan.summary()
    summary["model"] = p["model"]
    summary["hidden_particles"] = h.hidden_particles
    return [scan.write_csv(out / "scan.csv"), write_json(out / "summary.json", summary)]


def _cmd_optics(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    u = from_json_dict(p["unitary"]) if p["unitary"] is not None else random_unitary(p["modes"], component_rng(cfg.seed, "optics"))
    mesh = mesh_decompose(u)
    maps = mesh.symplectic_maps()
    s_total = unitary_to_symplectic(mesh.unitary())
    summary = {
        "n_modes": mesh.n_modes,
        "splitters": mesh.splitter_count,
        "phase_shifters": mesh.phase_count,
        "max_splitters": mesh.n_modes * (mesh.n_modes - 1) // 2,
        "reconstruction_error": mesh.reconstruction_error(),
        "max_element_symplectic_defect": max(m.symplectic_defect() for m in maps),
        "composed_symplectic_defect": s_total.symplectic_defect(),
        "composed_orthogonality_defect": s_total.orthogonality_defect(),
    }
    files = [write_json(out / "mesh.json", mesh.to_json()), write_json(out / "summary.json", summary)]
    _require(summary["reconstruction_error"] < 1e-10, "mesh does not reconstruct the target")
    return files


def _cmd_cost(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    kind, size = p["kind"], p["size"]
    desc = {
        "qudit": lambda: Qudit(size),
        "parties": lambda: MultiParty(size, p["d"]),
        "optics": lambda: LinearOptics(size),
        "walk": lambda: QuantumWalk(size),
        "cluster": lambda: ClusterState(size),
    }[kind]()
    return [write_json(out / "cost.json", sac_cost(desc).to_json())]


def _cmd_field(cfg: ExperimentConfig, out: Path) -> list[Path]:
    p = cfg.params
    box = tuple(p["box"])
    pot = fieldmod.harmonic() if p["potential"] == "harmonic" else fieldmod.free
    h = fieldmod.field_grid(pot, p["N"], box)
    x = fieldmod.grid_points(p["N"], box)
    psi0 = fieldmod.gaussian_packet(x, width=p["width"])
    traj = evolve(h, to_phase_space(psi0, basis_for(None, p["N"])), p["t"], samples=p["samples"])
    final = from_phase_space(traj.final)
    variances = [fieldmod.position_moments(from_phase_space(s), x)[1] for s in traj.states]
    summary = {
        "return_fidelity": float(abs(np.vdot(psi0.amps, final.amps)) ** 2),
        "max_norm_drift": traj.max_norm_drift(),
        "variance_initial": variances[0],
        "variance_final": variances[-1],
    }
    rows = ((i, xi, q, pp) for i, (xi, q, pp) in enumerate(zip(x, traj.final.q, traj.final.p)))
    files = [
        traj.write_csv(out / "trajectory.csv"),
        write_csv(out / "final_field.csv", ("index", "x", "q", "p"), rows),
        write_json(out / "summary.json", summary),
    ]
    _require(traj.max_norm_drift() < cfg.tol, "field norm drift")
    return files


COMMANDS = {
    "evolve": _cmd_evolve,
    "walk": _cmd_walk,
    "tomography": _cmd_tomography,
    "lindblad": _cmd_lindblad,
    "trotter-scan": _cmd_trotter,
    "optics": _cmd_optics,
    "cost": _cmd_cost,
    "field": _cmd_field,
}


def run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    status = EXIT_OK
    error = None
    try:
        files = COMMANDS[cfg.subcommand](cfg, out)
    except InvariantViolation as exc:
        status, error, files = EXIT_INVARIANT, str(exc), [p for p in out.iterdir() if p.name != "manifest.json"]
    manifest = {
        "config": cfg.echo(),
        "seed": cfg.seed,
        "versions": {
            "sacsim": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "files": {p.name: sha256_file(p) for p in sorted(files)},
        "wall_time_s": time.perf_counter() - start,
        "exit_status": status,
        "error": error,
    }
    write_json(out / "manifest.json", manifest)
    if error:
        log.error("invariant breach: %s", error)
    return status


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--tol", type=float, help="invariant tolerance (default 1e-9)")

    ap = argparse.ArgumentParser(prog="sacsim", description=__doc__.splitlines()[0], parents=[common])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add(name, help_, *flags):
        sp = sub.add_parser(name, help=help_, parents=[common], argument_default=argparse.SUPPRESS)
        for flag, kw in flags:
            sp.add_argument(flag, **kw)
        return sp

    add("evolve", "hidden-particle trajectory of a random or given Hamiltonian",
        ("--dim", {"type": int}), ("--t", {"type": float}), ("--method", {"choices": ["exact", "midpoint"]}),
        ("--dt", {"type": float}), ("--samples", {"type": int}), ("--basis", {"help": "computational or j,k"}))
    add("walk", "coined quantum walk phase-space data",
        ("--T", {"type": int}), ("--d", {"type": int}), ("--coin", {"help": "re0,im0,re1,im1"}))
    add("tomography", "state/process tomography and simulator verification",
        ("--dim", {"type": int}), ("--channel", {}), ("--gamma", {"type": float}), ("--shots", {"type": int}),
        ("--epsilon", {"type": float}), ("--epsilon0", {"type": float}))
    add("lindblad", "density-vector evolution under a Lindblad generator",
        ("--dim", {"type": int}), ("--gamma", {"type": float}), ("--dephasing", {"type": float}),
        ("--t", {"type": float}), ("--samples", {"type": int}), ("--shots", {"type": int}))
    add("trotter-scan", "Trotter-Suzuki error vs number of steps",
        ("--model", {"choices": ["xz", "chain"]}), ("--n", {"type": int}), ("--chi", {"type": int}),
        ("--t", {"type": float}), ("--r", {"help": "comma-separated step counts"}))
    add("optics", "beam-splitter mesh decomposition", ("--modes", {"type": int}))
    add("cost", "hidden-particle cost report",
        ("--kind", {"choices": ["qudit", "parties", "optics", "walk", "cluster"]}), ("--size", {"type": int}),
        ("--d", {"type": int}))
    add("field", "discretized 1-D field evolution",
        ("--N", {"type": int}), ("--box", {"help": "a,b"}), ("--potential", {"choices": ["harmonic", "free"]}),
        ("--t", {"type": float}), ("--width", {"type": float}), ("--samples", {"type": int}))
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = vars(_parser().parse_args(argv))
    sub = args.pop("subcommand")
    try:
        file_values = {}
        if "config" in args:
            try:
                file_values = json.loads(Path(args["config"]).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            if not isinstance(file_values, dict):
                raise ConfigError("config must be a JSON object")
        cfg = build_config(sub, file_values, args)
    except ConfigError as exc:
        print(f"sacsim: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except (SacError, ValueError) as exc:
        print(f"sacsim: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
