"""Command-line front end: config parsing, dispatch, CSV/JSON output.

Config files are TOML with the sections documented in the README
([system], [grid], and optionally [oracle], [experiment], [simulate]).
Parsing is strict: unknown sections or keys are hard errors, so a physics
misconfiguration cannot silently fall back to a default.  All defaults are
resolved at parse time and recorded in every output's provenance block.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import __version__, analytic, experiments, oracle
from ._backend import backend_name
from .errors import IoError, ParseError, QrsimError, UnknownKey
from .model import SystemParams, TimeGrid, Trajectory, validate

_SYSTEM_KEYS = {
    "omega_q": float,
    "omega_r": float,
    "omega_d": float,
    "g": float,
    "kappa": float,
    "epsilon": float,
    "n_th": float,
    "temperature_ratio": float,
}
_SYSTEM_REQUIRED = ("omega_q", "omega_r", "omega_d", "g", "kappa")
_GRID_KEYS = {"t_start": float, "t_end": float, "n_steps": int}
_ORACLE_KEYS = {"n_fock": int, "frame": str, "coupling": str, "dt": float, "engine": str}
_EXPERIMENT_KEYS = {
    "kind": str,
    "sweep": str,
    "values": list,
    "sigma_z0": float,
    "variant": str,
}
_SIMULATE_KEYS = {"source": str, "variant": str, "sigma_z0": float}
_SCHEMA = {
    "system": _SYSTEM_KEYS,
    "grid": _GRID_KEYS,
    "oracle": _ORACLE_KEYS,
    "experiment": _EXPERIMENT_KEYS,
    "simulate": _SIMULATE_KEYS,
}

#: defaults applied at parse time (every other key is either required or None)
DEFAULTS = {
    "system.epsilon": 0.0,
    "grid.t_start": 0.0,
    "oracle.n_fock": 20,
    "oracle.frame": "rotating",
    "oracle.coupling": "rwa",
    "oracle.engine": "auto",
    "experiment.sigma_z0": -1.0,
    "experiment.variant": "reduced",
    "simulate.source": "analytic",
    "simulate.variant": "reduced",
    "simulate.sigma_z0": -1.0,
}


@dataclass(frozen=True)
class SimulateSpec:
    """What the `simulate` subcommand should integrate."""

    source: str = "analytic"
    variant: str = "reduced"
    sigma_z0: float = -1.0

    def __post_init__(self):
        if self.source not in ("analytic", "oracle"):
            raise ValueError(f"simulate source must be 'analytic' or 'oracle', got {self.source!r}")
        if self.source == "analytic" and self.variant not in ("full", "reduced", "ensemble"):
            raise ValueError(
                f"analytic variant must be 'full', 'reduced' or 'ensemble', got {self.variant!r}"
            )


@dataclass(frozen=True)
class ResolvedConfig:
    """Fully resolved and validated configuration."""

    params: SystemParams
    grid: TimeGrid
    oracle: oracle.OracleConfig | None
    experiment: experiments.ExperimentConfig | None
    simulate: SimulateSpec | None
    advisories: tuple[str, ...]


def _coerce(section: str, key: str, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"[{section}] {key} must be a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"[{section}] {key} must be an integer, got {value!r}")
        return int(value)
    if kind is str:
        if not isinstance(value, str):
            raise ParseError(f"[{section}] {key} must be a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ParseError(f"[{section}] {key} must be a list of numbers, got {value!r}")
        return [float(v) for v in value]
    raise AssertionError(kind)


def _parse_override(text: str):
    if "=" not in text:
        raise ParseError(f"override {text!r} is not of the form key=value or section.key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"override value {raw!r} is not valid TOML: {exc}") from exc
    return key, value


def _apply_overrides(data: dict, overrides) -> None:
    for text in overrides or ():
        key, value = _parse_override(text)
        if "." in key:
            section, name = key.split(".", 1)
        else:
            hits = [s for s, keys in _SCHEMA.items() if key in keys and s in data]
            if not hits:
                hits = [s for s, keys in _SCHEMA.items() if key in keys]
            if len(hits) != 1:
                raise UnknownKey(
                    f"override key {key!r} is "
                    + ("ambiguous" if hits else "not a known config key")
                    + "; use section.key"
                )
            section, name = hits[0], key
        if section not in _SCHEMA:
            raise UnknownKey(f"override section {section!r} is not a known config section")
        if name not in _SCHEMA[section]:
            raise UnknownKey(f"override key {name!r} is not valid in [{section}]")
        data.setdefault(section, {})[name] = value


def parse_config(path: str, overrides=()) -> ResolvedConfig:
    """Parse, override, and validate a TOML config file.

    Unknown sections/keys raise UnknownKey; syntax errors raise ParseError
    with the line/column from the TOML parser; model invariant violations
    propagate as their named errors.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc

    _apply_overrides(data, overrides)

    for section in data:
        if section not in _SCHEMA:
            raise UnknownKey(f"unknown config section [{section}]")
        if not isinstance(data[section], dict):
            raise ParseError(f"[{section}] must be a section, not a value")
        for key in data[section]:
            if key not in _SCHEMA[section]:
                raise UnknownKey(f"unknown key {key!r} in [{section}]")

    for section in ("system", "grid"):
        if section not in data:
            raise ParseError(f"missing required section [{section}]")

    def resolved(section: str, key: str):
        if key in data.get(section, {}):
            return _coerce(section, key, data[section][key], _SCHEMA[section][key])
        return DEFAULTS.get(f"{section}.{key}")

    system = data["system"]
    for key in _SYSTEM_REQUIRED:
        if key not in system:
            raise ParseError(f"[system] is missing required key {key!r}")
    if "n_th" not in system and "temperature_ratio" not in system:
        raise ParseError("[system] needs n_th or temperature_ratio")
    params = SystemParams(
        omega_q=resolved("system", "omega_q"),
        omega_r=resolved("system", "omega_r"),
        omega_d=resolved("system", "omega_d"),
        g=resolved("system", "g"),
        kappa=resolved("system", "kappa"),
        epsilon=resolved("system", "epsilon"),
        n_th=resolved("system", "n_th"),
        temperature_ratio=resolved("system", "temperature_ratio"),
    )

    for key in ("t_end", "n_steps"):
        if key not in data["grid"]:
            raise ParseError(f"[grid] is missing required key {key!r}")
    grid = TimeGrid(
        t_start=resolved("grid", "t_start"),
        t_end=resolved("grid", "t_end"),
        n_steps=resolved("grid", "n_steps"),
    )

    oracle_cfg = None
    if "oracle" in data:
        oracle_cfg = oracle.OracleConfig(
            frame=resolved("oracle", "frame"),
            coupling=resolved("oracle", "coupling"),
            dt=resolved("oracle", "dt"),
            hilbert=oracle.HilbertSpec(resolved("oracle", "n_fock")),
            engine=resolved("oracle", "engine"),
        )

    experiment_cfg = None
    if "experiment" in data:
        if "kind" not in data["experiment"]:
            raise ParseError("[experiment] is missing required key 'kind'")
        values = resolved("experiment", "values")
        experiment_cfg = experiments.ExperimentConfig(
            kind=resolved("experiment", "kind"),
            base=params,
            grid=grid,
            sweep=resolved("experiment", "sweep"),
            values=tuple(values) if values is not None else None,
            oracle=oracle_cfg,
            sigma_z0=resolved("experiment", "sigma_z0"),
            variant=resolved("experiment", "variant"),
        )

    simulate_cfg = None
    if "simulate" in data:
        simulate_cfg = SimulateSpec(
            source=resolved("simulate", "source"),
            variant=resolved("simulate", "variant"),
            sigma_z0=resolved("simulate", "sigma_z0"),
        )
        if simulate_cfg.source == "oracle" and oracle_cfg is None:
            raise ParseError("[simulate] source = 'oracle' requires an [oracle] section")

    return ResolvedConfig(
        params=params,
        grid=grid,
        oracle=oracle_cfg,
        experiment=experiment_cfg,
        simulate=simulate_cfg,
        advisories=tuple(validate(params)),
    )


def serialize_params(params: SystemParams) -> str:
    """Emit a [system] section that parses back to bit-identical values."""
    lines = ["[system]"]
    for field in dataclasses.fields(SystemParams):
        value = getattr(params, field.name)
        if value is None:
            continue
        lines.append(f"{field.name} = {value!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _format_number(x: float) -> str:
    # repr of a Python float is the shortest decimal that round-trips
    return repr(float(x))


def _flatten(prefix: str, value, out: list[str]) -> None:
    if isinstance(value, dict):
        for k in value:
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], out)
    else:
        out.append(f"# {prefix} = {json.dumps(value)}")


def write_output(table: experiments.ResultTable, path: str, fmt: str) -> None:
    """Write a ResultTable as CSV or JSON.

    CSV: '#'-prefixed provenance (and warning) comment lines, a header row,
    then one comma-separated data row per entry with shortest round-trip
    number formatting; UTF-8, newline-terminated.  JSON: an object with
    "columns", "rows", "provenance", and "warnings" members.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    try:
        if fmt == "csv":
            lines: list[str] = []
            _flatten("", table.provenance, lines)
            for warning in table.warnings:
                lines.append(f"# warning: {warning}")
            lines.append(",".join(table.columns))
            for row in table.rows:
                lines.append(",".join(_format_number(x) for x in row))
            text = "\n".join(lines) + "\n"
        else:
            text = json.dumps(
                {
                    "columns": table.columns,
                    "rows": [[float(x) for x in row] for row in table.rows],
                    "provenance": table.provenance,
                    "warnings": list(table.warnings),
                },
                indent=2,
            )
            text += "\n"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_json_table(path: str) -> experiments.ResultTable:
    """Parse a JSON output file back into a ResultTable."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return experiments.ResultTable(
        columns=list(payload["columns"]),
        rows=[list(map(float, row)) for row in payload["rows"]],
        provenance=payload["provenance"],
        warnings=list(payload["warnings"]),
    )


def _trajectory_table(
    traj: Trajectory, resolved: ResolvedConfig, spec: SimulateSpec
) -> experiments.ResultTable:
    provenance = {
        "version": __version__,
        "backend": backend_name(),
        "kind": "simulate",
        "source": spec.source,
        "variant": spec.variant,
        "sigma_z0": spec.sigma_z0,
        "system": dataclasses.asdict(resolved.params),
        "grid": dataclasses.asdict(resolved.grid),
        "oracle": None,
    }
    if spec.source == "oracle":
        oc = dataclasses.asdict(resolved.oracle)
        oc["hilbert"] = dataclasses.asdict(resolved.oracle.hilbert)
        provenance["oracle"] = oc
    columns = ["t", "sigma_z", "photon_number", "re_a", "im_a"]
    rows = [
        [float(t)] + [float(traj[c][i]) for c in ("sigma_z", "photon_number", "re_a", "im_a")]
        for i, t in enumerate(traj.times)
    ]
    return experiments.ResultTable(columns, rows, provenance, list(traj.warnings))


def _run_simulate(resolved: ResolvedConfig) -> experiments.ResultTable:
    spec = resolved.simulate or SimulateSpec()
    if spec.source == "oracle":
        rho0 = oracle.mixed_initial_state(resolved.params, spec.sigma_z0, resolved.oracle.hilbert)
        traj, _ = oracle.evolve(rho0, resolved.grid, resolved.params, resolved.oracle)
    elif spec.variant == "ensemble":
        traj = analytic.ensemble_relaxation(spec.sigma_z0, resolved.grid, resolved.params)
    else:
        traj = analytic.integrate_sigma_z(
            spec.sigma_z0, resolved.grid, resolved.params, variant=spec.variant
        )
    return _trajectory_table(traj, resolved, spec)


_SUBCOMMAND_KINDS = {
    "sweep": ("photon_pull_sweep", "stationary_compare"),
    "compare": ("relaxation_compare", "rate_equation_demo"),
    "fidelity": ("fidelity_vs_tau",),
}


def _require_kind(resolved: ResolvedConfig, subcommand: str) -> experiments.ExperimentConfig:
    cfg = resolved.experiment
    allowed = _SUBCOMMAND_KINDS[subcommand]
    if cfg is None:
        raise ParseError(f"`{subcommand}` needs an [experiment] section (kind in {allowed})")
    if cfg.kind not in allowed:
        raise ParseError(
            f"`{subcommand}` handles kinds {allowed}, but the config says {cfg.kind!r}"
        )
    return cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrsim",
        description="Driven dissipative qubit-resonator simulator",
    )
    parser.add_argument("--version", action="version", version=f"qrsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "parse a config and report validation warnings"),
        ("simulate", "single trajectory (analytic or oracle per [simulate])"),
        ("sweep", "parameter sweep (photon_pull_sweep or stationary_compare)"),
        ("compare", "analytic vs oracle (relaxation_compare) or full vs reduced demo"),
        ("fidelity", "fidelity vs measurement time"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="TOML config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            metavar="KEY=VALUE",
            default=[],
            help="override a config key (section.key=value)",
        )
        if name != "validate":
            p.add_argument("-o", "--output", required=True, help="output file")
            p.add_argument(
                "--format",
                choices=("csv", "json"),
                default=None,
                help="output format (default: from the output extension)",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        resolved = parse_config(args.config, args.overrides)
        for advisory in resolved.advisories:
            print(f"warning: {advisory}", file=sys.stderr)
        if args.command == "validate":
            print(f"{args.config}: OK ({len(resolved.advisories)} warning(s))")
            return 0
        if args.command == "simulate":
            table = _run_simulate(resolved)
        else:
            table = experiments.run_experiment(_require_kind(resolved, args.command))
        for warning in table.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        fmt = args.format or ("json" if args.output.endswith(".json") else "csv")
        write_output(table, args.output, fmt)
        print(f"wrote {args.output} ({len(table.rows)} rows)", file=sys.stderr)
        return 0
    except QrsimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
