"""
Batch front end.

``iongate run CONFIG`` validates an experiment config against the bundled
JSON schema, runs it and writes CSV tables, a JSON summary and a run
manifest into the output directory.  ``iongate list`` prints the bundled
configs.  Frequencies in configs carry their unit in the key name
(``_mhz``, ``_khz``, ``_ghz``) and are converted to rad/s here, once.

Exit codes: 0 success, 2 config/schema problem, 3 physics precondition
violated, 4 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from scipy import constants

from . import __version__
from .atomic import HyperfineSystem, differential_stark_ratio, field_insensitive_pairs, level_diagram
from .comb import raman_spectrum, transition_rate, write_spectrum_csv
from .dynamics import (CD111_MASS, TrapConfig, force_for_phase, numeric_loop_phase, round_trip_phase,
                       sample_trajectory, shoelace_phase)
from .errors import ConfigError, ConvergenceError, IonGateError, PreconditionError
from .gates import (cirac_zoller_cnot, cirac_zoller_phase_gate, computational_inputs, fast_gate,
                    ideal_cnot, ideal_phase_gate, ideal_sigma_phi, ideal_sigma_z, sigma_phi_drives,
                    sigma_phi_gate, sigma_z_drive, sigma_z_gate, solve_fast_schedule,
                    spin_motion_phases_from_pairs, truth_table_from_states)
from .hilbert import FockBasis
from .noise import (BeamGeometry, DisturbanceSpec, infidelity_scaling_experiment, monte_carlo_gate_sweep,
                    sigma_phi_fidelity, sigma_z_fidelity)

EXIT_OK, EXIT_SCHEMA, EXIT_PRECONDITION, EXIT_CONVERGENCE = 0, 2, 3, 4
TWO_PI = 2 * np.pi
#: Cd-111 ground-state hyperfine splitting used when a config gives no qubit frequency.
DEFAULT_QUBIT_GHZ = 14.53

EXPERIMENTS = ("gate_truth_table", "phase_sweep", "fast_scaling", "clock_states", "comb_spectrum", "trajectory")
COMPUTATIONAL = ("uu", "ud", "du", "dd")


def _config_dir():
    return resources.files("iongate") / "configs"


def load_schema() -> dict:
    return json.loads((_config_dir() / "config.schema.json").read_text())


def bundled_configs() -> list[dict]:
    """Bundled configs sorted by file name, each with its experiment and description."""
    out = []
    for entry in sorted(_config_dir().iterdir(), key=lambda p: p.name):
        if not entry.name.endswith(".json") or entry.name == "config.schema.json":
            continue
        data = json.loads(entry.read_text())
        out.append({"name": entry.name[:-5], "file": str(entry), "experiment": data.get("experiment"),
                    "description": data.get("description", "")})
    return out


def resolve_config_path(name: str) -> Path:
    """A file path, or the name of a bundled config (with or without ``.json``)."""
    p = Path(name)
    if p.exists():
        return p
    stem = name[:-5] if name.endswith(".json") else name
    candidate = _config_dir() / f"{stem}.json"
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"config not found: {name}")


def validate_config(config) -> None:
    """Raise :class:`ConfigError` listing every schema violation."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("config failed schema validation:\n  " + "\n  ".join(lines))


# ----------------------------------------------------------------------------
# parameter conversion
# ----------------------------------------------------------------------------

def trap_from_params(p: dict) -> TrapConfig:
    """Trap with ions an integer number of optical periods apart, plus an optional offset."""
    mass = p.get("ion_mass_amu", CD111_MASS / constants.atomic_mass) * constants.atomic_mass
    trap = TrapConfig.from_lamb_dicke(p["eta_2"], TWO_PI * p["com_frequency_mhz"] * 1e6, mass)
    offset = p.get("spacing_offset_periods", 0.0)
    if offset:
        x1, x2 = trap.ion_positions
        trap = trap.with_positions((x1, x2 + offset * TWO_PI / trap.delta_k))
    return trap


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_json(path: Path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


# ----------------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------------

def run_gate_truth_table(p: dict, out: Path, prefix: str, seed: int, workers: int) -> dict:
    trap = trap_from_params(p["trap"])
    basis = FockBasis(p["n_max"])
    scheme = p["scheme"]
    method = p.get("method", "numeric")
    delta = TWO_PI * p.get("detuning_khz", 20.0) * 1e3
    inputs = computational_inputs(basis)
    extra = {}
    if scheme == "sigma_z":
        drive = sigma_z_drive(trap, delta, optical_phase=p.get("optical_phase", 0.0))
        outputs = sigma_z_gate(trap, drive, inputs, method=method, exploratory=p.get("exploratory", False))
        ideal = ideal_sigma_z()
    elif scheme == "sigma_phi":
        omega_q = TWO_PI * p.get("qubit_frequency_ghz", DEFAULT_QUBIT_GHZ) * 1e9
        factory = getattr(BeamGeometry, p.get("geometry", "phase_sensitive"))
        geometry = factory(trap, omega_q, delta)
        red, blue = geometry.sideband_pairs(0.0)
        drives = sigma_phi_drives(trap, delta, red, blue)
        outputs = sigma_phi_gate(trap, drives, inputs, method=method, exploratory=p.get("exploratory", False))
        (s1, _), (s2, _) = spin_motion_phases_from_pairs(red, blue, trap.ion_positions)
        ideal = ideal_sigma_phi(s1, s2)
        extra = {"phi_s": [float(s1), float(s2)]}
    elif scheme == "cirac_zoller":
        outputs = cirac_zoller_phase_gate(inputs, trap, mode=p.get("sideband_mode", 1))
        ideal = ideal_phase_gate()
    elif scheme == "cnot":
        phi = p.get("cnot_phase", 0.0)
        outputs = cirac_zoller_cnot(inputs, phi, trap, mode=p.get("sideband_mode", 1))
        ideal = ideal_cnot(phi)
    else:   # fast_kick
        schedule = solve_fast_schedule(trap, seed=seed)
        outputs = fast_gate(schedule, inputs).states
        ideal = ideal_sigma_z()
        (out / f"{prefix}schedule.json").write_text(schedule.to_json() + "\n")
    table = truth_table_from_states(outputs)
    rows = table.row_fidelities(ideal)
    _write_rows(out / f"{prefix}fidelities.csv", ["input", "fidelity", "purity"],
                [(lab, float(f), float(pur)) for lab, f, pur in zip(COMPUTATIONAL, rows, table.purities)])
    _write_rows(out / f"{prefix}truth_table.csv", ["input", "output", "real", "imag"],
                [(COMPUTATIONAL[j], COMPUTATIONAL[i], float(table.matrix[i, j].real), float(table.matrix[i, j].imag))
                 for j in range(4) for i in range(4)])
    summary = {"scheme": scheme, "method": method, "process_fidelity": table.process_fidelity(ideal),
               "min_row_fidelity": float(rows.min()), "min_purity": float(min(table.purities)), **extra}
    _write_json(out / f"{prefix}summary.json", summary)
    return {"truncation": table.truncation, "resolved": {"delta_rad_s": delta, "delta_k_per_m": trap.delta_k,
                                                         "omega_1_rad_s": trap.omega_1,
                                                         "ion_positions_m": list(trap.ion_positions)}}


def run_phase_sweep(p: dict, out: Path, prefix: str, seed: int, workers: int) -> dict:
    trap = trap_from_params(p["trap"])
    basis = FockBasis(p["n_max"])
    delta = TWO_PI * p.get("detuning_khz", 20.0) * 1e3
    method = p.get("method", "analytic")
    if p["gate"] == "sigma_z":
        gate = sigma_z_fidelity(trap, basis, delta, method=method)
    else:
        omega_q = TWO_PI * p.get("qubit_frequency_ghz", DEFAULT_QUBIT_GHZ) * 1e9
        geometry = getattr(BeamGeometry, p.get("geometry", "phase_sensitive"))(trap, omega_q, delta)
        gate = sigma_phi_fidelity(trap, geometry, basis, delta, wrapped=p["gate"] == "sigma_phi_wrapped",
                                  method=method)
    d = p["distribution"]
    spec = DisturbanceSpec(d["kind"], d.get("low", 0.0), d.get("high", 0.0))
    result = monte_carlo_gate_sweep(gate, spec, p["trials"], seed=seed, workers=workers)
    result.write_csv(out / f"{prefix}sweep.csv")
    result.write_summary(out / f"{prefix}summary.json")
    return {"truncation": {}, "resolved": {"delta_rad_s": delta, "delta_k_per_m": trap.delta_k}}


def run_fast_scaling(p: dict, out: Path, prefix: str, seed: int, workers: int) -> dict:
    g = p["grid"]
    if not 0 < g["start"] < g["stop"] < 1:
        raise PreconditionError("grid must satisfy 0 < start < stop < 1")
    grid = np.geomspace(g["start"], g["stop"], g["points"])
    omega = TWO_PI * p.get("trap_frequency_mhz", 2.1) * 1e6
    delta_k = p.get("delta_k_per_um", 40.0) * 1e6
    rows, fits = [], []
    for n in p["cycles"]:
        res = infidelity_scaling_experiment(n, grid, trials=p["trials"], seed=seed, omega=omega, delta_k=delta_k,
                                            delta_k_sigma_x=p.get("delta_k_sigma_x", 10.0),
                                            thermal_scale=p.get("thermal_scale", 1.0),
                                            bootstrap=p.get("bootstrap", 500))
        rows += [(n, r["x"], r["mean_infidelity"], r["rms_phase"]) for r in res.rows()]
        fits.append({"cycles": n, "slope": res.slope, "slope_ci": list(res.slope_ci),
                     "prefactor": res.prefactor, "expected_slope": 2 * n})
    _write_rows(out / f"{prefix}scaling.csv", ["cycles", "x", "mean_infidelity", "rms_phase"], rows)
    _write_json(out / f"{prefix}summary.json", {"fits": fits})
    return {"truncation": {}, "resolved": {"omega_rad_s": omega, "delta_k_per_m": delta_k, "grid": grid.tolist()}}


def run_clock_states(p: dict, out: Path, prefix: str, seed: int, workers: int) -> dict:
    system = HyperfineSystem(p["nuclear_spin"], TWO_PI * p["hyperfine_constant_ghz"] * 1e9,
                             p.get("g_j", 2.0023), p.get("g_i", 0.0))
    lo, hi = p.get("field_range_tesla", [0.0, 0.1])
    fields = np.linspace(lo, hi, p.get("diagram_points", 101))
    ghz = TWO_PI * 1e9
    _write_rows(out / f"{prefix}levels.csv", ["B_T", "label", "energy_GHz"],
                [(b, lab, e / ghz) for b, lab, e in level_diagram(system, fields)])
    pairs = field_insensitive_pairs(system, (lo, hi), grid=p.get("grid", 512))
    _write_rows(out / f"{prefix}pairs.csv",
                ["level_1", "level_2", "B_T", "splitting_GHz", "amplitude_residual", "double_root"],
                [(q.level_1.label, q.level_2.label, q.field, q.splitting / ghz, q.amplitude_residual,
                  int(q.double_root)) for q in pairs])
    ratios = p.get("stark_detuning_ratios", [])
    stark_rows = []
    if pairs and ratios:
        pair = pairs[0]
        for r in ratios:
            stark_rows.append((r, differential_stark_ratio(pair, r * pair.splitting, (1.0, 1.0))))
    _write_rows(out / f"{prefix}stark.csv", ["detuning_over_splitting", "differential_ratio"], stark_rows)
    _write_json(out / f"{prefix}summary.json",
                {"pairs": [{"levels": [q.level_1.label, q.level_2.label], "B_T": q.field} for q in pairs],
                 "zero_field_splitting_GHz": system.zero_field_splitting / ghz})
    return {"truncation": {}, "resolved": {"hyperfine_constant_rad_s": system.hyperfine_constant}}


def run_comb_spectrum(p: dict, out: Path, prefix: str, seed: int, workers: int) -> dict:
    mhz = TWO_PI * 1e6
    omegas = tuple(f * mhz for f in p["mode_frequencies_mhz"])
    scan = p.get("scan_range_mhz")
    lines = raman_spectrum(omegas, p["eo_offset_mhz"] * mhz,
                           None if scan is None else (scan[0] * mhz, scan[1] * mhz),
                           p.get("resolution_mhz", 0.0) * mhz)
    write_spectrum_csv(lines, out / f"{prefix}spectrum.csv")
    phi = p.get("modulation_index", 1.0)
    thetas = np.linspace(0.0, TWO_PI, p.get("theta_points", 64), endpoint=False)
    _write_rows(out / f"{prefix}rates.csv", ["theta", "k", "rate"],
                [(float(t), k, transition_rate(k, phi, t)) for t in thetas for k in range(p.get("max_order", 4) + 1)])
    return {"truncation": {}, "resolved": {"mode_frequencies_rad_s": list(omegas)}}


def run_trajectory(p: dict, out: Path, prefix: str, seed: int, workers: int) -> dict:
    trap = trap_from_params(p.get("trap", {"com_frequency_mhz": 2.1, "eta_2": 0.1}))
    delta = TWO_PI * p["detuning_khz"] * 1e3
    x0 = trap.q(2)
    force = force_for_phase(p["loop_phase"], delta, x0)
    traj = sample_trajectory(force, delta, x0, TWO_PI / delta, p.get("samples", 2000))
    _write_rows(out / f"{prefix}trajectory.csv", ["t_s", "re_alpha", "im_alpha", "phase"],
                [(float(t), float(a.real), float(a.imag), float(ph))
                 for t, a, ph in zip(traj.times, traj.alphas, traj.geometric_phase)])
    # the loop phase is twice the enclosed area, which is what the shoelace sum returns
    summary = {"analytic_phase": round_trip_phase(force, delta, x0),
               "shoelace_phase": shoelace_phase(traj.alphas),
               "closed": traj.is_closed(), "force_N": force}
    if "n_max" in p:
        phase, loss = numeric_loop_phase(force, delta, x0, p["n_max"])
        summary.update(numeric_phase=phase, numeric_amplitude_loss=loss)
    _write_json(out / f"{prefix}summary.json", summary)
    return {"truncation": {}, "resolved": {"delta_rad_s": delta, "x0_m": x0}}


RUNNERS = {"gate_truth_table": run_gate_truth_table, "phase_sweep": run_phase_sweep,
           "fast_scaling": run_fast_scaling, "clock_states": run_clock_states,
           "comb_spectrum": run_comb_spectrum, "trajectory": run_trajectory}


def run(config_path, out_dir=None, seed=None, workers=None) -> Path:
    """Validate and execute one config; return the output directory.

    Raises the library's error types; :func:`main` maps them to exit codes.
    """
    path = resolve_config_path(str(config_path))
    try:
        config = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validate_config(config)
    seed = config.get("seed", 0) if seed is None else seed
    workers = workers or os.cpu_count() or 1
    out_cfg = config.get("output", {})
    out = Path(out_dir or out_cfg.get("directory") or f"iongate_out/{path.stem}")
    out.mkdir(parents=True, exist_ok=True)
    prefix = out_cfg.get("prefix", "")
    prefix = f"{prefix}_" if prefix else ""
    info = RUNNERS[config["experiment"]](config["parameters"], out, prefix, seed, workers)
    manifest = {"config": str(path), "experiment": config["experiment"], "parameters": config["parameters"],
                "seed": seed, "workers": workers, "version": __version__,
                "resolved": info["resolved"], "truncation": info["truncation"],
                "outputs": sorted(f.name for f in out.iterdir() if f.name != f"{prefix}manifest.json"),
                "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    _write_json(out / f"{prefix}manifest.json", manifest)
    return out


def _cmd_list(args) -> int:
    catalog = bundled_configs()
    if args.json:
        print(json.dumps(catalog, indent=2))
    else:
        width = max(len(c["name"]) for c in catalog)
        for c in catalog:
            print(f"{c['name']:<{width}}  [{c['experiment']}]  {c['description']}")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        out = run(args.config, args.out, args.seed, args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (PreconditionError, IonGateError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    print(f"wrote results to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iongate", description="Trapped-ion gate simulations from JSON configs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config (path or bundled name)")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--seed", type=int, help="override the config's seed")
    p_run.add_argument("--workers", type=int, help="worker threads for sweeps (default: available cores)")
    p_run.set_defaults(func=_cmd_run)
    p_list = sub.add_parser("list", help="list bundled configs")
    p_list.add_argument("--json", action="store_true", help="machine-readable catalog")
    p_list.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
