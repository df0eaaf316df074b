"""Command-line surface: verification suites and deterministic runs.

Config files are strict INI-style `key = value` sections.  Each command
reads its own section plus the shared [run] section; unknown sections or
keys are rejected outright, so a config that parses is exactly the run
it names and round-trips losslessly through `render_config`.

Exit codes: 0 success, 1 runtime/estimation failure, 2 usage or config
error.
"""

import argparse
import configparser
import csv
import json
import math
import os
import sys

from .drift import WitnessConfig, witness_lower_bound
from .estimators import EstimatorOverflowError, MCConfig, estimate_partition
from .fields import DealiasingError, LatticeSizeError
from .scan import ScanConfig, Schedule, run_scan
from .verify import SUITES, format_table, rows_pass, run_suite
from .wick import SumBudgetError

SCAN_CSV_COLUMNS = [
    "c",
    "N",
    "K",
    "lambda",
    "z1_mean",
    "z1_stderr",
    "z2_mean",
    "z2_stderr",
    "witness_mean",
    "witness_stderr",
    "event_prob",
    "cap_hit_rate",
    "flags",
]

ESTIMATE_CSV_COLUMNS = [
    "d", "N", "coupling", "K", "cap", "p", "nsamples",
    "mean", "stderr", "event_prob", "cap_hit_rate", "flags",
]

WITNESS_CSV_COLUMNS = [
    "d", "N", "M", "gamma", "coupling", "K", "cap", "nsamples",
    "witness_mean", "witness_stderr", "event_prob", "cap_hit_rate", "flags",
]


class ConfigError(ValueError):
    """Malformed or rejected configuration, reported with its field."""


# ---------------------------------------------------------------------------
# config schema


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_float(text: str) -> float:
    return float(text.strip())


def _parse_int_tuple(text: str) -> tuple:
    return tuple(int(x.strip()) for x in text.split(",") if x.strip())


def _parse_float_tuple(text: str) -> tuple:
    return tuple(float(x.strip()) for x in text.split(",") if x.strip())


def _parse_schedule_kinds(text: str) -> tuple:
    kinds = tuple(x.strip() for x in text.split(",") if x.strip())
    for k in kinds:
        if k not in ("log", "const"):
            raise ValueError(f"schedule kind must be 'log' or 'const', got {k!r}")
    if not kinds:
        raise ValueError("need at least one schedule kind")
    return kinds


def _parse_format(text: str) -> str:
    value = text.strip()
    if value not in ("csv", "json", "both"):
        raise ValueError(f"format must be csv, json or both, got {value!r}")
    return value


_REQUIRED = object()

# key -> (converter, default); _REQUIRED marks keys the section must set
_RUN_SCHEMA = {
    "master_seed": (_parse_int, 0),
    "workers": (_parse_int, None),
    "out": (str.strip, None),
    "format": (_parse_format, None),
}

_COMMAND_SCHEMAS = {
    "estimate": {
        "d": (_parse_int, _REQUIRED),
        "N": (_parse_int, _REQUIRED),
        "coupling": (_parse_float, _REQUIRED),
        "K": (_parse_float, math.inf),
        "cap": (_parse_float, math.inf),
        "p": (_parse_float, 1.0),
        "nsamples": (_parse_int, 10_000),
    },
    "witness": {
        "d": (_parse_int, _REQUIRED),
        "N": (_parse_int, _REQUIRED),
        "M": (_parse_int, None),
        "gamma": (_parse_float, _REQUIRED),
        "coupling": (_parse_float, _REQUIRED),
        "K": (_parse_float, _REQUIRED),
        "cap": (_parse_float, _REQUIRED),
        "nsamples": (_parse_int, 10_000),
    },
    "scan": {
        "d": (_parse_int, 2),
        "c_values": (_parse_float_tuple, (0.0, 2.0, 64.0)),
        "N_values": (_parse_int_tuple, (8, 16, 32)),
        "schedules": (_parse_schedule_kinds, ("log", "const")),
        "kappa": (_parse_float, 1.0),
        "K0": (_parse_float, 10.0),
        "gamma": (_parse_float, 0.05),
        "cap_margin": (_parse_float, 16.0),
        "nsamples": (_parse_int, 10_000),
    },
}


def parse_config(text: str, command: str, partial: bool = False) -> dict:
    """Parse and fully resolve a config for one command.

    Returns {"run": {...}, command: {...}} with every key present
    (defaults applied).  Rejects unknown sections, unknown keys, bad
    values and missing required keys with the offending field named;
    with `partial` the required-key check is deferred to the caller
    (missing keys are simply absent) so --set overrides can fill them.
    """
    if command not in _COMMAND_SCHEMAS:
        raise ConfigError(f"no config schema for command {command!r}")
    cp = configparser.ConfigParser(
        delimiters=("=",), interpolation=None, strict=True
    )
    cp.optionxform = str  # keys are case sensitive (N, K, K0, ...)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    schemas = {"run": _RUN_SCHEMA, command: _COMMAND_SCHEMAS[command]}
    for section in cp.sections():
        if section not in schemas:
            raise ConfigError(
                f"unknown section [{section}]; expected [run] and [{command}]"
            )

    resolved = {}
    for section, schema in schemas.items():
        values = {}
        raw = cp[section] if cp.has_section(section) else {}
        for key in raw:
            if key not in schema:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
        for key, (convert, default) in schema.items():
            if key in raw:
                try:
                    values[key] = convert(raw[key])
                except ValueError as exc:
                    raise ConfigError(
                        f"bad value for '{key}' in section [{section}]: "
                        f"{raw[key]!r} ({exc})"
                    ) from exc
            elif default is _REQUIRED:
                if not partial:
                    raise ConfigError(
                        f"missing required key '{key}' in section [{section}]"
                    )
            else:
                values[key] = default
        resolved[section] = values
    return resolved


def _render_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_render_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)  # shortest round-trip representation, lossless
    return str(value)


def render_config(config: dict, command: str) -> str:
    """Serialize a resolved config back to canonical text (lossless)."""
    lines = []
    for section in ("run", command):
        schema = _RUN_SCHEMA if section == "run" else _COMMAND_SCHEMAS[command]
        lines.append(f"[{section}]")
        for key in schema:
            value = config[section][key]
            if value is None:
                continue
            lines.append(f"{key} = {_render_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _load_config(args, command: str) -> dict:
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    else:
        text = ""
    config = parse_config(text, command, partial=True)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        schema = _COMMAND_SCHEMAS[command]
        if key in schema:
            section = command
        elif key in _RUN_SCHEMA:
            section = "run"
        else:
            raise ConfigError(f"--set: unknown key {key!r} for command {command!r}")
        convert = (_RUN_SCHEMA if section == "run" else schema)[key][0]
        try:
            config[section][key] = convert(raw)
        except ValueError as exc:
            raise ConfigError(f"--set: bad value for {key!r}: {raw!r} ({exc})") from exc
    for key, (_, default) in _COMMAND_SCHEMAS[command].items():
        if default is _REQUIRED and key not in config[command]:
            raise ConfigError(f"missing required key '{key}' in section [{command}]")
    config[command] = {
        k: config[command][k] for k in _COMMAND_SCHEMAS[command] if k in config[command]
    }
    return config


def _provenance(config: dict, command: str, seed: int, workers: int,
                out: str, fmt: str) -> dict:
    """The config as actually run, with the resolved [run] section."""
    return {
        "run": {"master_seed": seed, "workers": workers, "out": out, "format": fmt},
        command: dict(config[command]),
    }


def _resolve_run(args, run_cfg: dict, command: str) -> tuple:
    """(master_seed, workers, out_stem, format) with flag > config > env."""
    seed = args.seed if args.seed is not None else run_cfg["master_seed"]
    if args.workers is not None:
        workers = args.workers
    elif run_cfg["workers"] is not None:
        workers = run_cfg["workers"]
    else:
        env = os.environ.get("LOGLAB_WORKERS", "").strip()
        if env:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ConfigError(f"LOGLAB_WORKERS is not an integer: {env!r}") from exc
        else:
            workers = 1
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    out = args.out or run_cfg["out"] or f"{command}_results"
    fmt = args.format or run_cfg["format"] or "csv"
    return seed, workers, out, fmt


# ---------------------------------------------------------------------------
# emission


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _emit(out: str, fmt: str, header: list, rows: list, payload: dict) -> list:
    written = []
    if fmt in ("csv", "both"):
        path = out + ".csv"
        _write_csv(path, header, rows)
        written.append(path)
    if fmt in ("json", "both"):
        path = out + ".json"
        _write_json(path, payload)
        written.append(path)
    return written


def _flags_of(record) -> str:
    return "unreliable" if record.unreliable else ""


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        names = ", ".join(sorted(SUITES))
        print(f"unknown suite {args.suite!r}; choose from: {names}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else 0
    workers = args.workers
    if workers is None:
        env = os.environ.get("LOGLAB_WORKERS", "").strip()
        try:
            workers = int(env) if env else 1
        except ValueError as exc:
            raise ConfigError(f"LOGLAB_WORKERS is not an integer: {env!r}") from exc
    rows = run_suite(args.suite, master_seed=seed, workers=workers)
    print(f"suite {args.suite} (seed {seed})")
    print(format_table(rows))
    ok = rows_pass(rows)
    print(f"{sum(r.passed for r in rows)}/{len(rows)} checks passed")
    return 0 if ok else 1


def cmd_estimate(args) -> int:
    config = _load_config(args, "estimate")
    seed, workers, out, fmt = _resolve_run(args, config["run"], "estimate")
    section = config["estimate"]
    try:
        mc = MCConfig(
            d=section["d"],
            N=section["N"],
            coupling=section["coupling"],
            K=section["K"],
            cap=section["cap"],
            p=section["p"],
            nsamples=section["nsamples"],
            master_seed=seed,
            workers=workers,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    record = estimate_partition(mc)
    row = [
        mc.d, mc.N, mc.coupling, mc.K, mc.cap, mc.p, mc.nsamples,
        record.mean, record.stderr, record.indicator_hit_rate,
        record.cap_hit_rate, _flags_of(record),
    ]
    payload = {
        "command": "estimate",
        "master_seed": seed,
        "workers": workers,
        "config": _provenance(config, "estimate", seed, workers, out, fmt),
        "rows": [dict(zip(ESTIMATE_CSV_COLUMNS, row))],
    }
    written = _emit(out, fmt, ESTIMATE_CSV_COLUMNS, [row], payload)
    print(f"mean {record.mean:.6g}  stderr {record.stderr:.6g}  -> {', '.join(written)}")
    return 0


def cmd_witness(args) -> int:
    config = _load_config(args, "witness")
    seed, workers, out, fmt = _resolve_run(args, config["run"], "witness")
    section = config["witness"]
    try:
        wc = WitnessConfig(
            d=section["d"],
            N=section["N"],
            M=section["M"] if section["M"] is not None else section["N"],
            gamma=section["gamma"],
            coupling=section["coupling"],
            K=section["K"],
            cap=section["cap"],
            nsamples=section["nsamples"],
            master_seed=seed,
            workers=workers,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    record = witness_lower_bound(wc)
    flags = "cap_saturated" if record.cap_hit_rate > 0.5 else ""
    row = [
        wc.d, wc.N, wc.M, wc.gamma, wc.coupling, wc.K, wc.cap, wc.nsamples,
        record.mean, record.stderr, record.indicator_hit_rate,
        record.cap_hit_rate, flags,
    ]
    payload = {
        "command": "witness",
        "master_seed": seed,
        "workers": workers,
        "config": _provenance(config, "witness", seed, workers, out, fmt),
        "rows": [dict(zip(WITNESS_CSV_COLUMNS, row))],
    }
    written = _emit(out, fmt, WITNESS_CSV_COLUMNS, [row], payload)
    print(
        f"witness {record.mean:.6g}  stderr {record.stderr:.6g}"
        f"  -> {', '.join(written)}"
    )
    return 0


def cmd_scan(args) -> int:
    config = _load_config(args, "scan")
    seed, workers, out, fmt = _resolve_run(args, config["run"], "scan")
    section = config["scan"]
    try:
        schedules = tuple(
            Schedule(kind, kappa=section["kappa"], K0=section["K0"])
            for kind in section["schedules"]
        )
        sc = ScanConfig(
            d=section["d"],
            c_values=section["c_values"],
            N_values=section["N_values"],
            schedules=schedules,
            gamma=section["gamma"],
            cap_margin=section["cap_margin"],
            nsamples=section["nsamples"],
            master_seed=seed,
            workers=workers,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = run_scan(sc)
    rows = [
        [
            r.c, r.N, r.K, r.coupling, r.z1_mean, r.z1_stderr, r.z2_mean,
            r.z2_stderr, r.witness_mean, r.witness_stderr, r.event_prob,
            r.cap_hit_rate, r.flags,
        ]
        for r in result.rows
    ]
    json_rows = []
    for r in result.rows:
        d = dict(zip(SCAN_CSV_COLUMNS, rows[len(json_rows)]))
        d["schedule"] = r.schedule
        d["cap"] = r.cap
        json_rows.append(d)
    payload = {
        "command": "scan",
        "master_seed": seed,
        "workers": workers,
        "config": _provenance(config, "scan", seed, workers, out, fmt),
        "rows": json_rows,
        "labels": {
            sched: {repr(c): result.labels[(sched, c)] for c in section["c_values"]}
            for sched in section["schedules"]
        },
        "brackets": {k: list(v) for k, v in result.brackets.items()},
    }
    written = _emit(out, fmt, SCAN_CSV_COLUMNS, rows, payload)
    for sched in section["schedules"]:
        lo, hi = result.brackets[sched]
        print(f"{sched}: crossover bracket c in ({lo}, {hi}]")
    print(f"{len(rows)} rows -> {', '.join(written)}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides the config file)")
    shared.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: config, then LOGLAB_WORKERS, then 1)")
    shared.add_argument("--out", default=None, help="output path stem")
    shared.add_argument("--format", choices=("csv", "json", "both"), default=None,
                        help="output format (default csv)")

    parser = argparse.ArgumentParser(
        prog="loglab",
        description="Deterministic Monte Carlo toolkit for truncated "
        "quartic Gibbs measures over a log-correlated Gaussian field.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", parents=[shared],
                              help="run a named verification suite")
    p_verify.add_argument("suite", help="suite name (see docs for the list)")
    p_verify.set_defaults(func=cmd_verify)

    for name, func in (("estimate", cmd_estimate), ("witness", cmd_witness),
                       ("scan", cmd_scan)):
        p = sub.add_parser(name, parents=[shared],
                           help=f"run the {name} command from a config file")
        p.add_argument("--config", default=None, help="path to a config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (EstimatorOverflowError, LatticeSizeError, DealiasingError,
            SumBudgetError) as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
