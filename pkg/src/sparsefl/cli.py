"""Command-line front end: simulate -> identify -> analyze -> synthesize -> close the loop.

Subcommands
-----------
defaults      print the default JSON config (reproduces the built-in Van der
              Pol demo end to end)
simulate      integrate the configured plant under the excitation input and
              write dataset.csv
identify      run the dictionary build and joint sparse regression on a
              dataset; write model.json, coefficients.csv, identify_report.txt
lie           compute the Lie chain / relative degree of a model; write
              lie.json and lie_report.txt
synthesize    build the tracking controller from a model; write controller.json
closedloop    simulate the true plant under a saved controller; write
              trajectory.csv
pipeline      run all stages and write a summary

Exit codes: 0 success, 2 config error, 3 identification infeasible,
4 divergence, 5 relative-degree failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import control, data, dictionary, dynamics, lie, regression
from .control import ControlSingularityError, ReferenceSignal
from .data import DatasetError
from .dictionary import LibrarySpec
from .dynamics import ControlAffineSystem, DivergenceError, InputSignal
from .lie import RelativeDegreeError
from .regression import RegressionConfig, RegressionError, SparseModel

__all__ = ["main", "default_config", "PipelineConfig", "ConfigError"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IDENTIFICATION = 3
EXIT_DIVERGENCE = 4
EXIT_RELATIVE_DEGREE = 5


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


# Default configuration: reproduces the built-in Van der Pol demo
# (identification from 100 clean samples, lambda = 0.05, gains [5, 4]).
_DEFAULT_CONFIG = {
    "system": {"name": "vdp", "theta": 1.0, "sigma": 1.0, "mu": 1.0},
    "simulation": {"x0": [2.0, 0.0], "dt": 0.01, "steps": 99},
    "excitation": {
        "kind": "sine_sum",
        "amplitudes": [1.0, 1.0, 1.0],
        "frequencies": [2.8284271247461903, 5.196152422706632, 8.94427190999916],
        "phases": [0.0, 0.7, 1.9],
        "rate": 1.0,  # chirp only
    },
    "library": {
        "poly_order": 3,
        "trig_orders": [],
        "include_constant": True,
        "output_state_index": 0,
        "output_poly_order": 3,
        "cross_trig": False,
        "normalize_columns": False,
    },
    "regression": {
        "lambda": 0.05,
        "max_outer_iters": 25,
        "max_alt_iters": 30,
        "constraint_tol": 1e-6,
        "coef_tol": 1e-10,
        "constraint_mode": "per_sample",
        "solver_mode": "alternating_constrained",
        "penalty_weight": 1e8,
        "relative_degree": 2,
    },
    "controller": {"gains": [5.0, 4.0], "poles": None},
    "stabilization": {
        "x0": [2.0, 0.0],
        "dt": 0.01,
        "steps": 1000,
        "reference": {"kind": "zero", "amplitude": 0.0, "frequency": 1.0, "phase": 0.0},
    },
    "tracking": {
        "x0": [2.0, 0.0],
        "dt": 0.01,
        "steps": 2000,
        "reference": {"kind": "sinusoid", "amplitude": 1.0, "frequency": 1.0, "phase": 0.0},
    },
    "seed": 0,
    "out_dir": "out",
}


def default_config() -> dict:
    return copy.deepcopy(_DEFAULT_CONFIG)


def _check_keys(section: dict, allowed: dict, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key {path + key!r}")
    for key, sub in allowed.items():
        if isinstance(sub, dict) and key in section:
            if not isinstance(section[key], dict):
                raise ConfigError(f"config key {path + key!r} must be an object")
            _check_keys(section[key], sub, path + key + ".")


class PipelineConfig:
    """Validated configuration; unknown keys are rejected."""

    def __init__(self, raw: dict):
        merged = default_config()
        _check_keys(raw, _DEFAULT_CONFIG, "")
        for key, value in raw.items():
            if isinstance(value, dict):
                merged[key].update(value)
            else:
                merged[key] = value
        self.raw = merged
        try:
            self.system = self._build_system(merged["system"])
            self.excitation = self._build_excitation(merged["excitation"])
            self.library = LibrarySpec(
                poly_order=int(merged["library"]["poly_order"]),
                trig_orders=tuple(merged["library"]["trig_orders"]),
                include_constant=bool(merged["library"]["include_constant"]),
                output_state_index=int(merged["library"]["output_state_index"]),
                output_poly_order=int(merged["library"]["output_poly_order"]),
                cross_trig=bool(merged["library"]["cross_trig"]),
                normalize_columns=bool(merged["library"]["normalize_columns"]),
            )
            reg = merged["regression"]
            self.regression = RegressionConfig(
                lam=float(reg["lambda"]),
                max_outer_iters=int(reg["max_outer_iters"]),
                max_alt_iters=int(reg["max_alt_iters"]),
                constraint_tol=float(reg["constraint_tol"]),
                coef_tol=float(reg["coef_tol"]),
                constraint_mode=str(reg["constraint_mode"]),
                solver_mode=str(reg["solver_mode"]),
                penalty_weight=float(reg["penalty_weight"]),
                relative_degree=int(reg["relative_degree"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        self.seed = int(merged["seed"])
        self.out_dir = Path(merged["out_dir"])

    @staticmethod
    def _build_system(section: dict) -> ControlAffineSystem:
        name = section.get("name")
        if name == "vdp":
            return dynamics.vdp_system(
                float(section.get("theta", 1.0)),
                float(section.get("sigma", 1.0)),
                float(section.get("mu", 1.0)),
            )
        if name == "chain3":
            return dynamics.chain_integrator_system(3)
        raise ConfigError(f"unknown system {name!r} (available: vdp, chain3)")

    @staticmethod
    def _build_excitation(section: dict) -> InputSignal:
        kind = section.get("kind", "sine_sum")
        if kind == "zero":
            return dynamics.zero_input()
        if kind == "constant":
            return dynamics.constant_input(float(section.get("amplitudes", [1.0])[0]))
        if kind == "sine_sum":
            return dynamics.sine_sum_input(
                section["amplitudes"], section["frequencies"], section.get("phases")
            )
        if kind == "chirp":
            return dynamics.chirp_input(
                float(section["amplitudes"][0]),
                float(section["frequencies"][0]),
                float(section.get("rate", 1.0)),
            )
        raise ConfigError(f"unknown excitation kind {kind!r}")

    @staticmethod
    def _build_reference(section: dict) -> ReferenceSignal:
        kind = section.get("kind", "zero")
        if kind == "zero":
            return control.zero_reference()
        if kind == "constant":
            return control.constant_reference(float(section.get("amplitude", 0.0)))
        if kind == "sinusoid":
            return control.sinusoid_reference(
                float(section.get("amplitude", 1.0)),
                float(section.get("frequency", 1.0)),
                float(section.get("phase", 0.0)),
            )
        raise ConfigError(f"unknown reference kind {kind!r}")

    def scenario(self, name: str) -> tuple[np.ndarray, float, int, ReferenceSignal]:
        section = self.raw[name]
        return (
            np.array(section["x0"], dtype=float),
            float(section["dt"]),
            int(section["steps"]),
            self._build_reference(section["reference"]),
        )


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def _apply_overrides(raw: dict, args: argparse.Namespace) -> dict:
    if getattr(args, "lam", None) is not None:
        raw.setdefault("regression", {})["lambda"] = args.lam
    if getattr(args, "gains", None) is not None:
        raw.setdefault("controller", {})["gains"] = _parse_number_list(args.gains)
        raw["controller"]["poles"] = None
    if getattr(args, "poles", None) is not None:
        raw.setdefault("controller", {})["poles"] = _parse_number_list(args.poles)
        raw["controller"]["gains"] = None
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        raw["out_dir"] = args.out
    return raw


def _parse_number_list(text: str) -> list:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        try:
            out.append(float(piece))
        except ValueError:
            try:
                z = complex(piece.replace(" ", ""))
            except ValueError:
                raise ConfigError(f"cannot parse number {piece!r}") from None
            out.append([z.real, z.imag])
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [v if isinstance(v, str) else repr(float(v)) for v in row]
            )


def _read_model(path: str) -> SparseModel:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return regression.model_from_dict(payload)
    except FileNotFoundError:
        raise ConfigError(f"model file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"model stage input {path} is corrupted: {exc}") from None


def _read_controller(path: str) -> control.ControllerSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return control.ControllerSpec.from_dict(payload)
    except FileNotFoundError:
        raise ConfigError(f"controller file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"controller stage input {path} is corrupted: {exc}") from None


# -- stages ---------------------------------------------------------------------


def cmd_simulate(cfg: PipelineConfig, out_dir: Path) -> Path:
    sim = cfg.raw["simulation"]
    if cfg.excitation.kind == "zero" and cfg.regression.constraint_enabled:
        print(
            "warning: zero excitation with the relative-degree constraint enabled "
            "downstream makes the constraint vacuous",
            file=sys.stderr,
        )
    ds = dynamics.integrate(
        cfg.system,
        np.array(sim["x0"], dtype=float),
        cfg.excitation,
        float(sim["dt"]),
        int(sim["steps"]),
    )
    out = out_dir / "dataset.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    data.save_csv(ds, out)
    return out


def cmd_identify(dataset_path: Path, cfg: PipelineConfig, out_dir: Path) -> Path:
    try:
        d = data.load_csv(dataset_path)
    except FileNotFoundError:
        raise ConfigError(f"dataset file not found: {dataset_path}") from None
    except DatasetError as exc:
        raise ConfigError(f"identify stage input is corrupted: {exc}") from None
    derivative_note = "measured derivatives"
    if d.Xdot is None:
        d = data.estimate_derivatives(d)
        derivative_note = "derivatives estimated by second-order finite differences"
    ds = dictionary.build_dictionaries(cfg.library, d)
    model = regression.solve(ds, d, cfg.regression)

    _write_json(out_dir / "model.json", regression.model_to_dict(model))
    labels, rows, columns = regression.coefficient_table(model)
    _write_csv(
        out_dir / "coefficients.csv",
        ["entry"] + columns,
        ([lab] + row for lab, row in zip(labels, rows)),
    )

    lines = ["Identified model", "=" * 40, f"[{derivative_note}]", ""]
    lines += ["Discovered equations after applying the threshold:"]
    lines += ["  " + eq for eq in regression.discovered_equations(model)]
    lines += ["", "Coefficient table:", regression.format_coefficient_table(model)]
    lines += ["", "Diagnostics:"]
    for key, value in model.diagnostics.to_dict().items():
        lines.append(f"  {key}: {value}")
    (out_dir / "identify_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_dir / "model.json"


def cmd_lie(model_path: Path, out_dir: Path) -> lie.LieChain:
    model = _read_model(str(model_path))
    system = model.system()
    chain = lie.relative_degree(system)
    payload = {
        "relative_degree": chain.relative_degree,
        "n_states": system.n,
        "lf_powers": [str(e) for e in chain.lf_powers],
        "lg_mixed": [str(e) for e in chain.lg_mixed],
    }
    from .symexpr import format_expression as fmt

    lines = ["Lie derivative chain", "=" * 40]
    for k, e in enumerate(chain.lf_powers):
        lines.append(f"Lf^{k} c = {fmt(e, digits=6)}")
    for k, e in enumerate(chain.lg_mixed):
        lines.append(f"Lg Lf^{k} c = {fmt(e, digits=6)}")
    if chain.relative_degree is None:
        lines.append("relative degree: undefined")
    else:
        lines.append(f"relative degree: {chain.relative_degree} (state dimension {system.n})")
        if chain.relative_degree == system.n:
            coords = lie.normal_form(system, chain)
            payload["normal_form"] = [str(e) for e in coords]
            lines.append("normal-form coordinates:")
            for i, e in enumerate(coords):
                lines.append(f"  z{i + 1} = {fmt(e, digits=6)}")
            lines.append("transformed dynamics:")
            for i in range(system.n - 1):
                lines.append(f"  dz{i + 1}/dt = z{i + 2}")
            lines.append(
                f"  dz{system.n}/dt = {fmt(chain.lf_powers[system.n], digits=6)}"
                f" + ({fmt(chain.lg_mixed[system.n - 1], digits=6)})*u"
            )
            lines.append("  y = z1")
    _write_json(out_dir / "lie.json", payload)
    (out_dir / "lie_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if chain.relative_degree is None:
        raise RelativeDegreeError("relative degree undefined for the identified model")
    return chain


def cmd_synthesize(model_path: Path, cfg: PipelineConfig, out_dir: Path) -> Path:
    model = _read_model(str(model_path))
    system = model.system()
    chain = lie.relative_degree(system)
    section = cfg.raw["controller"]
    gains = section.get("gains")
    poles_raw = section.get("poles")
    if poles_raw is not None:
        poles = [
            complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p)
            for p in poles_raw
        ]
        spec = control.synthesize(chain, poles=poles)
    elif gains is not None:
        spec = control.synthesize(chain, gains=[float(a) for a in gains])
    else:
        raise ConfigError("controller section must set gains or poles")
    _write_json(out_dir / "controller.json", spec.to_dict())
    return out_dir / "controller.json"


def cmd_closedloop(
    controller_path: Path, cfg: PipelineConfig, out_dir: Path, scenario: str
) -> Path:
    spec = _read_controller(str(controller_path))
    x0, dt, steps, reference = cfg.scenario(scenario)
    traj = dynamics.simulate_closed_loop(cfg.system, spec, reference, x0, dt, steps)
    out = out_dir / f"{scenario}.csv"
    header = ["t"] + [f"x{i + 1}" for i in range(traj.n)] + ["u", "y", "r"]
    rows = []
    for i in range(traj.m):
        row = [traj.times[i], *traj.X[i], traj.U[i], traj.Y[i], reference.value(traj.times[i])]
        rows.append(row)
    _write_csv(out, header, rows)
    return out


def cmd_pipeline(cfg: PipelineConfig, out_dir: Path) -> dict:
    dataset_path = cmd_simulate(cfg, out_dir)
    model_path = cmd_identify(dataset_path, cfg, out_dir)
    chain = cmd_lie(model_path, out_dir)
    controller_path = cmd_synthesize(model_path, cfg, out_dir)
    stabilization_path = cmd_closedloop(controller_path, cfg, out_dir, "stabilization")
    cmd_closedloop(controller_path, cfg, out_dir, "tracking")

    # overlay of the true plant and the identified model from the same start
    model = _read_model(str(model_path))
    sim = cfg.raw["simulation"]
    x0 = np.array(sim["x0"], dtype=float)
    dt, steps = float(sim["dt"]), int(sim["steps"])
    true_traj = dynamics.integrate(cfg.system, x0, cfg.excitation, dt, steps)
    ident_traj = dynamics.integrate(model.system(), x0, cfg.excitation, dt, steps)
    header = (
        ["t"]
        + [f"x{i + 1}_true" for i in range(cfg.system.n)]
        + [f"x{i + 1}_identified" for i in range(cfg.system.n)]
    )
    rows = [
        [true_traj.times[i], *true_traj.X[i], *ident_traj.X[i]] for i in range(true_traj.m)
    ]
    _write_csv(out_dir / "identified_vs_true.csv", header, rows)

    summary = _summarize(cfg, model, chain, out_dir, stabilization_path)
    _write_json(out_dir / "summary.json", summary)
    lines = ["Pipeline summary", "=" * 40]
    for key, value in summary.items():
        lines.append(f"{key}: {value}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return summary


def _summarize(
    cfg: PipelineConfig,
    model: SparseModel,
    chain: lie.LieChain,
    out_dir: Path,
    stabilization_path: Path,
) -> dict:
    # coefficient error against the configured true plant
    true_sys = cfg.system
    max_err = 0.0
    for l in range(true_sys.n):
        diff_f = model.f[l] - true_sys.f[l]
        diff_g = model.g[l] - true_sys.g[l]
        max_err = max(max_err, diff_f.max_abs_coefficient(), diff_g.max_abs_coefficient())

    with stabilization_path.open(encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        last = None
        max_u = 0.0
        u_idx = header.index("u")
        for row in reader:
            last = row
            max_u = max(max_u, abs(float(row[u_idx])))
    final_state = [float(v) for v in last[1 : 1 + true_sys.n]]
    final_norm = float(np.linalg.norm(final_state))

    outputs = {p.name for p in out_dir.iterdir() if p.is_file()}
    outputs.update({"summary.json", "summary.txt"})  # written right after
    return {
        "seed": cfg.seed,
        "max_coefficient_error": max_err,
        "relative_degree": chain.relative_degree,
        "constraint_residual": model.diagnostics.constraint_residual,
        "stabilization_final_state_norm": final_norm,
        "stabilization_max_input": max_u,
        "outputs": sorted(outputs),
    }


# -- entry point ------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsefl",
        description="Identify a control-affine system from data and feedback-linearize it.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file (defaults reproduce the VdP demo)")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--seed", type=int, help="seed recorded in outputs")
        p.add_argument("--lambda", dest="lam", type=float, help="sparsity threshold override")
        p.add_argument("--gains", help="comma-separated error-dynamics gains a0,a1,...")
        p.add_argument("--poles", help="comma-separated closed-loop poles")

    p = sub.add_parser("defaults", help="print the default config")
    p.add_argument("--out", help="write to a file instead of stdout")

    p = sub.add_parser("simulate", help="generate an excitation dataset")
    add_common(p)

    p = sub.add_parser("identify", help="identify a sparse model from a dataset")
    add_common(p)
    p.add_argument("--data", required=True, help="dataset CSV path")

    p = sub.add_parser("lie", help="Lie chain and relative degree of a model")
    add_common(p)
    p.add_argument("--model", required=True, help="model.json path")

    p = sub.add_parser("synthesize", help="build the tracking controller")
    add_common(p)
    p.add_argument("--model", required=True, help="model.json path")

    p = sub.add_parser("closedloop", help="simulate the plant under a controller")
    add_common(p)
    p.add_argument("--controller", required=True, help="controller.json path")
    p.add_argument(
        "--scenario",
        choices=["stabilization", "tracking"],
        default="stabilization",
        help="which configured scenario to run",
    )

    p = sub.add_parser("pipeline", help="run every stage end to end")
    add_common(p)
    return parser


def _join_value_flags(argv: list[str]) -> list[str]:
    """Rewrite ``--poles -2,-6`` to ``--poles=-2,-6`` so argparse accepts it."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        if argv[i] in ("--poles", "--gains") and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_join_value_flags(list(argv)))
    try:
        if args.command == "defaults":
            text = json.dumps(default_config(), indent=2, sort_keys=True)
            if args.out:
                Path(args.out).write_text(text + "\n", encoding="utf-8")
            else:
                print(text)
            return EXIT_OK

        raw = _apply_overrides(_load_config_file(args.config), args)
        cfg = PipelineConfig(raw)
        out_dir = cfg.out_dir
        out_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "simulate":
            path = cmd_simulate(cfg, out_dir)
            print(f"wrote {path}")
        elif args.command == "identify":
            path = cmd_identify(Path(args.data), cfg, out_dir)
            print(f"wrote {path}")
        elif args.command == "lie":
            cmd_lie(Path(args.model), out_dir)
            print(f"wrote {out_dir / 'lie.json'}")
        elif args.command == "synthesize":
            path = cmd_synthesize(Path(args.model), cfg, out_dir)
            print(f"wrote {path}")
        elif args.command == "closedloop":
            path = cmd_closedloop(Path(args.controller), cfg, out_dir, args.scenario)
            print(f"wrote {path}")
        elif args.command == "pipeline":
            summary = cmd_pipeline(cfg, out_dir)
            print(json.dumps(summary, indent=2, sort_keys=True))
        return EXIT_OK
    except RegressionError as exc:
        print(f"identification failed: {exc}", file=sys.stderr)
        if getattr(exc, "diagnostics", None) is not None:
            print(f"diagnostics: {exc.diagnostics.to_dict()}", file=sys.stderr)
        return EXIT_IDENTIFICATION
    except (DivergenceError, ControlSingularityError) as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except RelativeDegreeError as exc:
        print(f"relative-degree failure: {exc}", file=sys.stderr)
        return EXIT_RELATIVE_DEGREE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, DatasetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
