"""Command-line driver: ``catbell {eval,scan,verify,optimize}``.

Exit codes
----------
0  success (``eval``: the CHSH value is classical)
1  bad arguments or configuration; the offending key is named on stderr
2  degenerate cat state, or a scan/optimization with no valid point
3  ``eval`` only: the CHSH value violates the classical bound
4  a verification or certification check failed

Results go to files (``--out``); summaries go to stdout and errors to
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from . import analytic as an
from .errors import (
    CatBellError,
    ConsistencyError,
    DegenerateRegion,
    DegenerateState,
    EmptyScan,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DEGENERATE = 2
EXIT_VIOLATING = 3
EXIT_CHECK_FAILED = 4

WORKERS_ENV = "CATBELL_WORKERS"
DEGENERACY_NOTE = (
    "note: with z = z' = w = w' the two A operators coincide and CHSH = 2 E(z, w), "
    "which can never exceed 2; see README.md, 'The stated setting is degenerate'"
)

COMMANDS = ("eval", "scan", "verify", "optimize")
SETTING_KEYS = ("z", "z_prime", "w", "w_prime")


class ConfigError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``"a+bi"`` (also ``"bi"``, ``"a"``, ``"-i"``, ``j`` for ``i``, inner spaces)."""
    s = "".join(str(text).split()).replace("i", "j")
    s = re.sub(r"(^|[+-])j", r"\g<1>1j", s)
    try:
        value = complex(s)
    except ValueError:
        raise ValueError(f"not a complex number: {text!r}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"not a finite complex number: {text!r}")
    return value


def _as_complex(key, value) -> list[float]:
    try:
        if isinstance(value, str):
            z = parse_complex(value)
        elif isinstance(value, (list, tuple)):
            z = an.amplitude(tuple(value))
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            z = an.amplitude(value)
        else:
            raise ValueError(f"unsupported value {value!r}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return [z.real, z.imag]


_PI_WORDS = {"pi": math.pi, "+pi": math.pi, "-pi": -math.pi}


def _as_float(key, value) -> float:
    try:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, str) and value.strip().lower() in _PI_WORDS:
            value = _PI_WORDS[value.strip().lower()]
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: not a real number: {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{key}: must be finite, got {value!r}")
    return out


def _as_int(key, value, minimum=None) -> int:
    try:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValueError
        out = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: not an integer: {value!r}") from None
    if minimum is not None and out < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {out}")
    return out


def _as_bool(key, value) -> bool:
    if isinstance(value, bool):
        return value
    raise ConfigError(f"{key}: expected true/false, got {value!r}")


def _as_range(key, value, with_steps: bool) -> list:
    if isinstance(value, str):
        parts = [p for p in value.replace(":", ",").split(",") if p.strip()]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ConfigError(f"{key}: expected 'min,max' or 'min,max,steps', got {value!r}")
    if len(parts) not in ((2, 3) if with_steps else (2,)):
        raise ConfigError(f"{key}: expected 'min,max{',steps' if with_steps else ''}', got {value!r}")
    lo, hi = _as_float(key, parts[0]), _as_float(key, parts[1])
    if lo > hi:
        raise ConfigError(f"{key}: min must not exceed max, got {value!r}")
    if not with_steps:
        return [lo, hi]
    # a dumped config writes an unset step count as null
    steps = _as_int(key, parts[2], minimum=2) if len(parts) == 3 and parts[2] is not None else None
    return [lo, hi, steps]


def _as_path(key, value):
    if value is None:
        return None
    if not isinstance(value, (str, os.PathLike)):
        raise ConfigError(f"{key}: expected a path, got {value!r}")
    return str(value)


def _as_choice(key, value, choices):
    if value not in choices:
        raise ConfigError(f"{key}: expected one of {', '.join(choices)}, got {value!r}")
    return value


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    return _as_int(WORKERS_ENV, raw, minimum=1)


# key -> (default, converter); defaults of None mean "not given"
def _schema(command: str) -> dict:
    def cplx(default):
        return (default, _as_complex)

    settings = {k: cplx([0.0, 0.0]) for k in SETTING_KEYS}
    if command == "eval":
        return {
            "sigma": cplx([0.0, 0.0]),
            "eta": cplx([0.0, 0.0]),
            "phi": (0.0, _as_float),
            **settings,
            "paper_setting": (False, _as_bool),
            "from_result": (None, _as_path),
            "out": (None, _as_path),
            "format": ("json", lambda k, v: _as_choice(k, v, ("json", "csv"))),
        }
    if command == "scan":
        return {
            "alpha_range": ([0.2, 2.0, 25], lambda k, v: _as_range(k, v, True)),
            "omega_range": ([0.2, 2.0, 25], lambda k, v: _as_range(k, v, True)),
            "steps": (None, lambda k, v: _as_int(k, v, minimum=2)),
            "phi": (math.pi, _as_float),
            **settings,
            "paper_setting": (False, _as_bool),
            "from_result": (None, _as_path),
            "out": ("scan.csv", _as_path),
            "format": ("csv", lambda k, v: _as_choice(k, v, ("csv", "json"))),
            "workers": (None, lambda k, v: _as_int(k, v, minimum=1)),
        }
    if command == "verify":
        return {
            "cutoff": (64, lambda k, v: _as_int(k, v, minimum=2)),
            "samples": (100, lambda k, v: _as_int(k, v, minimum=1)),
            "seed": (0, _as_int),
            "max_magnitude": (3.0, _as_float),
            "literal_bipartite": (False, _as_bool),
            "sigma": (None, _as_complex),
            "eta": (None, _as_complex),
            "phi": (None, _as_float),
            "z": (None, _as_complex),
            "w": (None, _as_complex),
            "out": (None, _as_path),
        }
    if command == "optimize":
        return {
            "sigma": (None, _as_complex),
            "eta": (None, _as_complex),
            "phi": (math.pi, _as_float),
            "alpha_range": ([0.3, 2.5], lambda k, v: _as_range(k, v, False)),
            "omega_range": ([0.3, 2.5], lambda k, v: _as_range(k, v, False)),
            "settings_bound": (3.0, _as_float),
            "seed": (0, _as_int),
            "budget": (128000, lambda k, v: _as_int(k, v, minimum=100)),
            "restarts": (64, lambda k, v: _as_int(k, v, minimum=1)),
            "cutoff": (None, lambda k, v: _as_int(k, v, minimum=2)),
            "out": ("optimize.json", _as_path),
            "workers": (None, lambda k, v: _as_int(k, v, minimum=1)),
        }
    raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got {command!r}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict

    @classmethod
    def build(cls, command: str, raw: dict) -> RunConfig:
        """Validate ``raw`` against the command's keys and fill in defaults."""
        schema = _schema(command)
        unknown = sorted(set(raw) - set(schema))
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown parameter for '{command}'")
        params = {}
        for key, (default, convert) in schema.items():
            value = raw.get(key)
            params[key] = default if value is None else convert(key, value)
        return cls(command, params)

    @classmethod
    def from_file(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from None
        if not isinstance(data, dict) or "command" not in data:
            raise ConfigError("command: missing from config file")
        params = data.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError("parameters: expected an object")
        return cls.build(data["command"], params)

    def to_json(self) -> str:
        return json.dumps(
            {"command": self.command, "parameters": self.parameters}, indent=2, sort_keys=True
        ) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file (as written by --dump-config)")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")


def _state_args(p):
    p.add_argument("--sigma", help="mode-a cat amplitude, e.g. '1.2' or '0.5-0.3i'")
    p.add_argument("--eta", help="mode-b cat amplitude")
    p.add_argument("--phi", help="relative phase of the two branches (radians)")


def _settings_args(p, keys=SETTING_KEYS):
    flags = {"z": "--z", "z_prime": "--zp", "w": "--w", "w_prime": "--wp"}
    for key in keys:
        p.add_argument(flags[key], dest=key, help=f"displacement {key.replace('_prime', chr(39))}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="catbell", description="Bell-CHSH tests with entangled cat states.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("eval", help="evaluate the CHSH value for one state and setting")
    _common(p)
    _state_args(p)
    _settings_args(p)
    p.add_argument("--paper-setting", action="store_true", default=None,
                   help="z = z' = w = w' = 1 and phi = pi")
    p.add_argument("--from-result", help="take state and settings from an optimize JSON file")
    p.add_argument("--out", help="also write the components to this file")
    p.add_argument("--format", choices=("json", "csv"))

    p = sub.add_parser("scan", help="CHSH surface over real (alpha, omega)")
    _common(p)
    p.add_argument("--alpha-range", help="min,max[,steps]")
    p.add_argument("--omega-range", help="min,max[,steps]")
    p.add_argument("--steps", help="grid steps on both axes")
    p.add_argument("--phi", help="relative phase of the two branches (radians)")
    _settings_args(p)
    p.add_argument("--paper-setting", action="store_true", default=None,
                   help="z = z' = w = w' = 1 and phi = pi")
    p.add_argument("--from-result", help="take the settings from an optimize JSON file")
    p.add_argument("--out", help="output file (default scan.csv)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", help=f"worker threads (default ${WORKERS_ENV} or 1)")

    p = sub.add_parser("verify", help="check the closed forms against the Fock oracle")
    _common(p)
    p.add_argument("--cutoff", help="Fock cutoff per mode (default 64)")
    p.add_argument("--samples", help="number of random tuples (default 100)")
    p.add_argument("--seed")
    p.add_argument("--max-magnitude", help="largest |amplitude| drawn (default 3)")
    p.add_argument("--literal-bipartite", action="store_true", default=None,
                   help="also report [A, B] under the two-mode vacuum reading")
    _state_args(p)
    _settings_args(p, ("z", "w"))
    p.add_argument("--out", help="write the JSON report here")

    p = sub.add_parser("optimize", help="search for the largest |CHSH|")
    _common(p)
    _state_args(p)
    p.add_argument("--alpha-range", help="min,max for real sigma when the state is free")
    p.add_argument("--omega-range", help="min,max for real eta when the state is free")
    p.add_argument("--settings-bound", help="each setting coordinate in [-b, b]")
    p.add_argument("--seed", help="seeds the start points (default 0)")
    p.add_argument("--budget", help="total objective evaluations (default 128000)")
    p.add_argument("--restarts", help="Nelder-Mead restarts sharing the budget (default 64)")
    p.add_argument("--cutoff", help="oracle cutoff for certification")
    p.add_argument("--out", help="output file (default optimize.json)")
    p.add_argument("--workers", help=f"worker threads (default ${WORKERS_ENV} or 1)")
    return parser


_NOT_PARAMS = {"command", "config", "dump_config", "verbose"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config:
        base = RunConfig.from_file(args.config)
        if base.command != args.command:
            raise ConfigError(f"command: config file is for '{base.command}', not '{args.command}'")
        raw.update(base.parameters)
    for key, value in vars(args).items():
        if key not in _NOT_PARAMS and value is not None:
            raw[key] = value
    return RunConfig.build(args.command, raw)


def _complex(pair) -> complex:
    return complex(pair[0], pair[1])


def _settings_from(params) -> an.MeasurementSettings:
    return an.MeasurementSettings(*(_complex(params[k]) for k in SETTING_KEYS))


def _load_result(path):
    from .optimize import load_result

    try:
        return load_result(Path(path).read_text())
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"from_result: cannot load {path}: {exc}") from None


def _write(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _workers(params) -> int:
    return params["workers"] if params.get("workers") is not None else _default_workers()


def cmd_eval(cfg: RunConfig) -> int:
    p = cfg.parameters
    if p["from_result"]:
        settings, state, _ = _load_result(p["from_result"])
    else:
        phi = math.pi if p["paper_setting"] else p["phi"]
        state = an.make_cat_state(_complex(p["sigma"]), _complex(p["eta"]), phi)
        settings = an.MeasurementSettings.uniform(1.0) if p["paper_setting"] else _settings_from(p)
    comps = an.chsh_components(settings, state)
    value = an.combine_chsh(*comps)
    labels = ("E(z,w)", "E(z',w)", "E(z,w')", "E(z',w')")
    for label, e in zip(labels, comps):
        print(f"{label:<9} = {e!r}")
    print(f"{'CHSH':<9} = {value.value!r}  {value.classification}")
    if p["paper_setting"]:
        print(DEGENERACY_NOTE)
    if p["out"]:
        if p["format"] == "json":
            doc = {
                "state": {"sigma": [state.sigma.real, state.sigma.imag],
                          "eta": [state.eta.real, state.eta.imag], "phi": state.phi},
                "settings": {k: [v.real, v.imag] for k, v in zip(SETTING_KEYS, settings.as_tuple())},
                "E_zw": comps[0], "E_zpw": comps[1], "E_zwp": comps[2], "E_zpwp": comps[3],
                "chsh": value.value,
                "classification": value.classification,
            }
            _write(p["out"], json.dumps(doc, indent=2) + "\n")
        else:
            header = "E_zw,E_zpw,E_zwp,E_zpwp,chsh,classification\n"
            row = ",".join(format(x, ".17g") for x in (*comps, value.value))
            _write(p["out"], header + row + f",{value.classification}\n")
    return EXIT_VIOLATING if value.violating else EXIT_OK


def cmd_scan(cfg: RunConfig) -> int:
    from .scan import ScanGrid, records_to_csv, records_to_json, run_scan, summarize

    p = cfg.parameters
    phi = p["phi"]
    if p["paper_setting"]:
        settings, phi = an.MeasurementSettings.uniform(1.0), math.pi
    elif p["from_result"]:
        settings = _load_result(p["from_result"])[0]
    else:
        settings = _settings_from(p)
    a_lo, a_hi, a_steps = p["alpha_range"]
    o_lo, o_hi, o_steps = p["omega_range"]
    if p["steps"] is not None:
        a_steps = o_steps = p["steps"]
    try:
        grid = ScanGrid((a_lo, a_hi, a_steps or 25), (o_lo, o_hi, o_steps or 25), settings, phi)
    except ValueError as exc:
        raise ConfigError(f"alpha_range/omega_range: {exc}") from None
    records = run_scan(grid, workers=_workers(p))
    total = len(grid.points())
    if not records:
        raise EmptyScan(f"all {total} grid points are degenerate")
    text = records_to_csv(records) if p["format"] == "csv" else records_to_json(records)
    _write(p["out"], text)
    s = summarize(records)
    print(
        f"{len(records)} points ({total - len(records)} degenerate skipped) -> {p['out']}; "
        f"max |CHSH| = {s.max_abs_chsh!r} at alpha={s.argmax[0]!r}, omega={s.argmax[1]!r}; "
        f"violating fraction = {s.violating_fraction!r}"
    )
    z, zp, w, wp = settings.as_tuple()
    if p["paper_setting"] or (z == zp and w == wp):
        print(DEGENERACY_NOTE)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verify import Sample, run_verification

    p = cfg.parameters
    extra = []
    if any(p[k] is not None for k in ("sigma", "eta", "z", "w")):
        state = an.make_cat_state(
            _complex(p["sigma"] or [0.0, 0.0]),
            _complex(p["eta"] or [0.0, 0.0]),
            p["phi"] if p["phi"] is not None else 0.0,
        )
        extra.append(Sample(state, _complex(p["z"] or [0.0, 0.0]), _complex(p["w"] or [0.0, 0.0])))
    report = run_verification(
        cutoff=p["cutoff"],
        samples=p["samples"],
        seed=p["seed"],
        max_magnitude=p["max_magnitude"],
        literal=p["literal_bipartite"],
        extra=extra,
    )
    for check in report.checks:
        print(check.line())
    if p["out"]:
        _write(p["out"], json.dumps(report.to_dict(), indent=2) + "\n")
    failed = report.first_failure
    if failed is not None:
        print(f"verification failed at check '{failed.name}': {failed.detail}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_optimize(cfg: RunConfig) -> int:
    from .optimize import certify, make_problem, maximize_violation, result_to_json

    p = cfg.parameters
    state = None
    if p["sigma"] is not None or p["eta"] is not None:
        state = an.make_cat_state(
            _complex(p["sigma"] or [0.0, 0.0]), _complex(p["eta"] or [0.0, 0.0]), p["phi"]
        )
    try:
        problem = make_problem(
            settings_bound=p["settings_bound"],
            state=state,
            sigma_re=tuple(p["alpha_range"]),
            eta_re=tuple(p["omega_range"]),
            phi=(p["phi"], p["phi"]),
            budget=p["budget"],
            restarts=p["restarts"],
            seed=p["seed"],
        )
    except ValueError as exc:
        raise ConfigError(f"optimize: {exc}") from None
    result = maximize_violation(problem, workers=_workers(p))
    cert = certify(result, p["cutoff"])
    _write(p["out"], result_to_json(result, cert))
    print(
        f"best |CHSH| = {result.best_value!r} ({an.classify(result.best_value)}) after "
        f"{result.evaluations_used} evaluations; oracle {cert.oracle!r} at cutoff {cert.cutoff} "
        f"-> {p['out']}"
    )
    return EXIT_OK


HANDLERS = {"eval": cmd_eval, "scan": cmd_scan, "verify": cmd_verify, "optimize": cmd_optimize}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        cfg = resolve_config(args)
        if args.dump_config:
            sys.stdout.write(cfg.to_json())
            return EXIT_OK
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"catbell: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateState as exc:
        print(
            f"catbell: degenerate cat state, its normalization diverges: {exc}", file=sys.stderr
        )
        return EXIT_DEGENERATE
    except (EmptyScan, DegenerateRegion) as exc:
        print(f"catbell: no valid point: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConsistencyError as exc:
        print(f"catbell: check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except CatBellError as exc:
        print(f"catbell: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
