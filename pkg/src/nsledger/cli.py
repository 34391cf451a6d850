"""Configuration-driven entry points.

Subcommands
-----------
simulate      run a scenario, write trajectory.csv, ledger.csv,
              verdicts.json and report.txt
problem-c     integrate the linear drift problem against a stored drift
              trajectory and report uniqueness/decay/fixed-point numbers
verify        run selected checks on a stored ledger or trajectory
converge      refinement study over a list of truncation levels
estimate-c    empirical continuity constants of the trilinear form
print-config  dump the full default configuration

All numeric artifacts are deterministic for a fixed (config, seed): CSV
cells are written with repr round-tripping and no timestamps.  Exit status
is 0 only when every requested verdict passed and no error occurred.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .basis import build_basis
from .convergence import refinement_study
from .ledger import (
    EnergyLedger,
    Verdict,
    check_energy_equality,
    check_energy_inequality,
    compute_ledger,
    load_ledger,
    right_continuity_modulus,
    sample_norm_squared,
    save_ledger,
    save_verdicts,
    total_variation,
)
from .scenarios import make_scenario
from .solver import (
    SolverConfig,
    SolverError,
    load_trajectory,
    save_trajectory,
    simulate_nse,
    solve_problem_c,
)
from .trilinear import build_tensor, estimate_C, load_tensor, save_tensor

DEFAULT_CONFIG = {
    "scenario": "taylor_green",  # shear_mode | taylor_green | random_field | from_file
    "nu": 0.05,
    "tau": 0.0,
    "t_end": 2.0,
    "m": 100,
    "amplitude": 1.0,
    "seed": None,  # mandatory for random_field
    "init_file": None,  # for from_file
    # forcing terms: mode index is 1-based (column a_j of the trajectory CSV),
    # waveform is amplitude*cos(omega*t), part selects the dual or H summand
    "forcing": [],  # e.g. [{"mode": 1, "amplitude": 0.1, "omega": 2.0, "part": "dual"}]
    "tolerances": {
        "rel_tol": 1e-10,
        "abs_tol": 1e-12,
        "ledger_tol": None,  # derived from the integrator tolerances when null
    },
    "solver": {
        "max_step": 0.05,
        "dense_output_points": 401,
    },
    "problem_c": {
        "drift": None,  # path to a stored drift trajectory (csv or npz)
        "g": [],  # forcing terms, same schema as "forcing"
        "z_tau": "zero",  # zero | drift_start | random
        "fixed_point_tol": 1e-6,
    },
}


class ConfigError(ValueError):
    pass


def _merge(defaults, override, path=""):
    if isinstance(defaults, dict):
        if override is None:
            return {k: _merge(v, None, f"{path}{k}.") for k, v in defaults.items()}
        if not isinstance(override, dict):
            raise ConfigError(f"config field {path[:-1] or '<root>'}: expected a mapping")
        unknown = set(override) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config field {path}{sorted(unknown)[0]}")
        return {k: _merge(v, override.get(k), f"{path}{k}.") for k, v in defaults.items()}
    return defaults if override is None else override


def load_config(path: str | None) -> dict:
    raw = {}
    if path is not None:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config root must be a mapping")
    return _merge(DEFAULT_CONFIG, raw)


def _positive(cfg, key):
    v = cfg[key]
    if not isinstance(v, (int, float)) or v <= 0:
        raise ConfigError(f"config field {key}: must be a positive number, got {v!r}")
    return float(v)


def validate_config(cfg: dict) -> dict:
    _positive(cfg, "nu")
    tau, t_end = cfg["tau"], cfg["t_end"]
    if not (isinstance(tau, (int, float)) and isinstance(t_end, (int, float)) and tau < t_end):
        raise ConfigError(f"config fields tau/t_end: need tau < t_end, got [{tau}, {t_end}]")
    if not isinstance(cfg["m"], int) or cfg["m"] < 1:
        raise ConfigError(f"config field m: must be a positive integer, got {cfg['m']!r}")
    if cfg["scenario"] not in ("shear_mode", "taylor_green", "random_field", "from_file"):
        raise ConfigError(f"config field scenario: unknown name {cfg['scenario']!r}")
    if cfg["scenario"] == "random_field" and cfg["seed"] is None:
        raise ConfigError("config field seed: mandatory for the random_field scenario")
    tol = cfg["tolerances"]
    for key in ("rel_tol", "abs_tol"):
        if not (0 < tol[key] < 1):
            raise ConfigError(f"config field tolerances.{key}: must lie in (0, 1)")
    if cfg["solver"]["max_step"] <= 0:
        raise ConfigError("config field solver.max_step: must be positive")
    if int(cfg["solver"]["dense_output_points"]) < 2:
        raise ConfigError("config field solver.dense_output_points: must be >= 2")
    for section in ("forcing", cfg["problem_c"]["g"]):
        terms = cfg["forcing"] if section == "forcing" else section
        for term in terms:
            if not isinstance(term, dict) or "mode" not in term:
                raise ConfigError("config field forcing: each term needs a 'mode' index")
            if int(term["mode"]) < 1 or int(term["mode"]) > cfg["m"]:
                raise ConfigError(
                    f"config field forcing: mode {term['mode']} outside 1..{cfg['m']}"
                )
            if term.get("part", "dual") not in ("dual", "h"):
                raise ConfigError("config field forcing: part must be 'dual' or 'h'")
    if cfg["problem_c"]["z_tau"] not in ("zero", "drift_start", "random"):
        raise ConfigError(
            f"config field problem_c.z_tau: unknown kind {cfg['problem_c']['z_tau']!r}"
        )
    return cfg


def _forcing_terms(raw_terms) -> tuple:
    return tuple(
        (int(t["mode"]) - 1, float(t.get("amplitude", 0.0)), float(t.get("omega", 0.0)), t.get("part", "dual"))
        for t in raw_terms
    )


def _scenario_from(cfg: dict):
    return make_scenario(
        cfg["scenario"],
        nu=cfg["nu"],
        tau=float(cfg["tau"]),
        t_end=float(cfg["t_end"]),
        amplitude=float(cfg["amplitude"]),
        seed=cfg["seed"],
        init_path=cfg["init_file"],
        forcing_terms=_forcing_terms(cfg["forcing"]),
    )


def _solver_config(cfg: dict) -> SolverConfig:
    return SolverConfig(
        nu=float(cfg["nu"]),
        rel_tol=float(cfg["tolerances"]["rel_tol"]),
        abs_tol=float(cfg["tolerances"]["abs_tol"]),
        max_step=float(cfg["solver"]["max_step"]),
        dense_output_points=int(cfg["solver"]["dense_output_points"]),
    )


def _ledger_tol(cfg: dict, scfg: SolverConfig, override: float | None) -> float:
    if override is not None:
        return float(override)
    configured = cfg["tolerances"]["ledger_tol"]
    if configured is not None:
        return float(configured)
    return scfg.ledger_tol()


def _tensor_for(basis, cache_path: str | None):
    if cache_path and Path(cache_path).exists():
        return load_tensor(cache_path, basis)
    tensor = build_tensor(basis)
    if cache_path:
        save_tensor(tensor, cache_path)
    return tensor


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_effective_config(cfg: dict, out: Path) -> None:
    with open(out / "config.yaml", "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True)


def _report(out: Path, lines: list[str]) -> None:
    with open(out / "report.txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _exit_from(verdicts: dict[str, Verdict]) -> int:
    return 0 if all(v.passed for v in verdicts.values()) else 1


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = validate_config(load_config(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    scenario = _scenario_from(cfg)
    scfg = _solver_config(cfg)
    out = _out_dir(args)
    _dump_effective_config(cfg, out)

    basis = build_basis(cfg["m"])
    tensor = _tensor_for(basis, args.tensor)
    y0 = scenario.initial_field(basis)
    forcing = scenario.forcing(basis)
    traj = simulate_nse(y0, forcing, cfg["m"], (scenario.tau, scenario.t_end), scfg, tensor)

    ledger = compute_ledger(traj)
    tol = _ledger_tol(cfg, scfg, args.tol)
    verdicts = {
        "energy_equality": check_energy_equality(ledger, tol),
        "energy_inequality": check_energy_inequality(ledger, 2 * tol),
    }

    save_trajectory(traj, out / "trajectory.csv")
    save_ledger(ledger, out / "ledger.csv")
    save_verdicts(verdicts, out / "verdicts.json")
    lines = [
        f"simulate scenario={cfg['scenario']} m={cfg['m']} nu={cfg['nu']}"
        f" interval=[{scenario.tau}, {scenario.t_end}]",
        f"V(tau)={float(ledger.v_values[0])!r}  V(T)={float(ledger.v_values[-1])!r}",
    ]
    for name, verdict in verdicts.items():
        lines.append(
            f"{name}: {verdict.status} worst={verdict.worst_violation:.6e} tol={verdict.tolerance:.6e}"
        )
    _report(out, lines)
    return _exit_from(verdicts)


def cmd_problem_c(args) -> int:
    cfg = validate_config(load_config(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    drift_path = args.drift or cfg["problem_c"]["drift"]
    if not drift_path:
        raise ConfigError("config field problem_c.drift: a drift trajectory path is required")
    if not Path(drift_path).exists():
        raise ConfigError(f"config field problem_c.drift: file not found: {drift_path}")
    scfg = _solver_config(cfg)
    out = _out_dir(args)
    _dump_effective_config(cfg, out)

    basis = build_basis(max(cfg["m"], _peek_level(drift_path)))
    tensor = _tensor_for(basis, args.tensor)
    drift = load_trajectory(drift_path, basis)
    tau, t_end = float(cfg["tau"]), float(cfg["t_end"])
    if not drift.covers(tau, t_end):
        raise ConfigError(
            f"config field problem_c.drift: drift interval [{drift.tau}, {drift.t_end}]"
            f" does not cover [{tau}, {t_end}]"
        )

    m = cfg["m"]
    g_terms = _forcing_terms(cfg["problem_c"]["g"])
    scenario = _scenario_from({**cfg, "forcing": cfg["problem_c"]["g"]})
    g = scenario.forcing(basis)
    kind = cfg["problem_c"]["z_tau"]
    if kind == "zero":
        from .basis import SpectralField

        z_tau = SpectralField.zero(basis)
    elif kind == "drift_start":
        z_tau = drift.field_at(tau)
    else:
        from .scenarios import random_coefficients

        seed = cfg["seed"]
        if seed is None:
            raise ConfigError("config field seed: mandatory for z_tau=random")
        z_tau = random_coefficients(basis, seed)

    traj = solve_problem_c(drift, g, z_tau, m, (tau, t_end), scfg, tensor)
    save_trajectory(traj, out / "trajectory.csv")

    norms = traj.norms_h()
    lam1 = float(basis.lambdas[0])
    envelope = float(np.linalg.norm(z_tau.coeffs)) * np.exp(-cfg["nu"] * lam1 * (traj.grid - tau))
    drift_states = np.zeros((len(traj.grid), basis.m))
    for i, t in enumerate(traj.grid):
        drift_states[i, : drift.m] = drift.coeffs_at(t)
    z_states = np.zeros((len(traj.grid), basis.m))
    z_states[:, : traj.m] = traj.states
    sup_z = float(np.max(norms))
    sup_dev = float(np.max(np.linalg.norm(z_states - drift_states, axis=1)))

    verdicts: dict[str, Verdict] = {}
    tol = _ledger_tol(cfg, scfg, args.tol)
    if kind == "zero" and not g_terms:
        status = "PASS" if sup_z <= 1e-12 else "FAIL"
        verdicts["uniqueness_zero"] = Verdict(status, sup_z, float(traj.grid[int(np.argmax(norms))]), 1e-12)
    if not g_terms:
        excess = float(np.max(norms - envelope * (1 + 1e-6)))
        status = "PASS" if excess <= 0.0 else "FAIL"
        verdicts["decay_envelope"] = Verdict(status, excess, float(traj.grid[int(np.argmax(norms - envelope))]), 0.0)
    if kind == "drift_start":
        fp_tol = args.tol if args.tol is not None else float(cfg["problem_c"]["fixed_point_tol"])
        status = "PASS" if sup_dev <= fp_tol else "FAIL"
        verdicts["fixed_point"] = Verdict(status, sup_dev, float(traj.grid[int(np.argmax(np.linalg.norm(z_states - drift_states, axis=1)))]), fp_tol)

    with open(out / "norms.csv", "w") as fh:
        fh.write("t,z_norm,decay_envelope,drift_distance\n")
        dev = np.linalg.norm(z_states - drift_states, axis=1)
        for i, t in enumerate(traj.grid):
            fh.write(f"{float(t)!r},{float(norms[i])!r},{float(envelope[i])!r},{float(dev[i])!r}\n")
    save_verdicts(verdicts, out / "verdicts.json")
    lines = [
        f"problem-c m={m} nu={cfg['nu']} interval=[{tau}, {t_end}] drift={drift_path} (m={drift.m})",
        f"z_tau kind={kind}  |z_tau|={float(np.linalg.norm(z_tau.coeffs))!r}",
        f"sup_t |z(t)| = {sup_z!r}",
        f"sup_t |z(t) - y(t)| = {sup_dev!r}",
        f"ledger tol = {tol:.6e}",
    ]
    for name, verdict in verdicts.items():
        lines.append(
            f"{name}: {verdict.status} worst={verdict.worst_violation:.6e} tol={verdict.tolerance:.6e}"
        )
    _report(out, lines)
    return _exit_from(verdicts)


def _peek_level(path: str) -> int:
    path = str(path)
    if path.endswith(".npz"):
        return int(np.load(path)["m"])
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("m="):
                        return int(tok.split("=", 1)[1])
            else:
                break
    raise ValueError(f"{path}: missing trajectory header")


def _sniff_kind(path: str) -> str:
    if str(path).endswith(".npz"):
        return "trajectory"
    with open(path) as fh:
        head = fh.readline()
    if head.startswith("# nsledger trajectory"):
        return "trajectory"
    if head.startswith("t,kinetic"):
        return "ledger"
    raise ValueError(f"{path}: not a recognized trajectory or ledger file")


def cmd_verify(args) -> int:
    path = args.input
    if not Path(path).exists():
        raise ConfigError(f"input file not found: {path}")
    kind = _sniff_kind(path)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    known = ("equality", "inequality", "bv", "continuity")
    for c in checks:
        if c not in known:
            raise ConfigError(f"unknown check {c!r}; choose from {known}")
    tol = args.tol if args.tol is not None else 1e-6

    traj = None
    if kind == "trajectory":
        basis = build_basis(_peek_level(path))
        traj = load_trajectory(path, basis)
        ledger = compute_ledger(traj)
    else:
        if "continuity" in checks:
            raise ConfigError("the continuity check needs a trajectory input, not a ledger")
        ledger = load_ledger(path)

    verdicts: dict[str, Verdict] = {}
    if "equality" in checks:
        verdicts["energy_equality"] = check_energy_equality(ledger, tol)
    if "inequality" in checks:
        verdicts["energy_inequality"] = check_energy_inequality(ledger, 2 * tol)
    if "bv" in checks:
        if traj is not None:
            coarse = total_variation(sample_norm_squared(traj, 1))
            fine = total_variation(sample_norm_squared(traj, 2))
        else:
            coarse = fine = total_variation(2.0 * ledger.kinetic)
        # converged estimate: refining the sampling grid must not move TV
        # by more than 5 percent (plus the absolute tolerance)
        growth = fine - coarse
        limit = max(0.05 * coarse, tol)
        status = "PASS" if growth <= limit else "FAIL"
        verdicts["bounded_variation"] = Verdict(status, float(growth), float(coarse), limit)
    if "continuity" in checks:
        span = traj.t_end - traj.tau
        s = traj.tau + 0.25 * span
        deltas = [span * f for f in (0.05, 0.025, 0.0125, 0.00625)]
        moduli = right_continuity_modulus(traj, s, deltas)
        increase = float(np.max(np.diff(moduli), initial=0.0))
        ratios = moduli / np.asarray(deltas)
        spread = float(np.max(ratios) / max(np.min(ratios), 1e-300))
        ok = increase <= tol and spread <= 4.0
        verdicts["right_continuity"] = Verdict(
            "PASS" if ok else "FAIL", increase, [float(x) for x in moduli], tol
        )

    out = _out_dir(args)
    save_verdicts(verdicts, out / "verdicts.json")
    lines = [f"verify input={path} kind={kind} checks={','.join(checks)}"]
    for name, verdict in verdicts.items():
        lines.append(
            f"{name}: {verdict.status} worst={verdict.worst_violation:.6e} tol={verdict.tolerance:.6e}"
        )
    _report(out, lines)
    return _exit_from(verdicts)


def cmd_converge(args) -> int:
    cfg = validate_config(load_config(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    levels = [int(x) for x in args.levels.split(",")]
    scenario = _scenario_from(cfg)
    scfg = _solver_config(cfg)
    out = _out_dir(args)
    _dump_effective_config(cfg, out)

    basis = build_basis(max(levels))
    tensor = _tensor_for(basis, args.tensor)
    report = refinement_study(scenario, levels, scfg, tensor)
    report.to_csv(out / "report.csv")
    _report(out, [report.summary()])
    print(report.summary())
    return 0


def cmd_estimate_c(args) -> int:
    basis = build_basis(args.m)
    tensor = _tensor_for(basis, args.tensor)
    est = estimate_C(basis, tensor, args.trials, args.seed if args.seed is not None else 0)
    payload = {
        "m": args.m,
        "trials": est.samples,
        "C_hat": est.c_hat,
        "C_half_hat": est.c_half_hat,
        "C_configured": est.inflated(),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = _out_dir(args)
        with open(out / "continuity.json", "w") as fh:
            fh.write(text + "\n")
    return 0


def cmd_print_config(args) -> int:
    print(yaml.safe_dump(DEFAULT_CONFIG, sort_keys=False), end="")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsledger",
        description="spectral Galerkin Navier-Stokes runs with energy-ledger verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="YAML configuration file (defaults apply when omitted)")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--tol", type=float, help="override the derived ledger tolerance")
        p.add_argument("--tensor", help="tensor cache path (.npz); loaded if present, else written")

    p = sub.add_parser("simulate", help="run a scenario and verify its energy ledger")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("problem-c", help="linear drift problem against a stored trajectory")
    common(p)
    p.add_argument("--drift", help="drift trajectory path (overrides config)")
    p.set_defaults(func=cmd_problem_c)

    p = sub.add_parser("verify", help="run checks on a stored ledger or trajectory")
    p.add_argument("--input", required=True, help="ledger.csv or trajectory file")
    p.add_argument("--checks", default="equality,inequality,bv", help="comma-separated checks")
    p.add_argument("--tol", type=float, help="absolute tolerance (default 1e-6)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="refinement study over truncation levels")
    common(p)
    p.add_argument("--levels", required=True, help="comma-separated increasing levels")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("estimate-c", help="empirical continuity constants of the trilinear form")
    p.add_argument("--m", type=int, default=100, help="basis size (default 100)")
    p.add_argument("--trials", type=int, default=200, help="sample count (default 200)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional output directory for continuity.json")
    p.add_argument("--tensor", help="tensor cache path (.npz)")
    p.set_defaults(func=cmd_estimate_c)

    p = sub.add_parser("print-config", help="dump the full default configuration")
    p.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        at = "" if exc.time is None else f" (t={exc.time})"
        print(f"solver failure: {exc}{at}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
