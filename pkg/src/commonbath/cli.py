"""Command-line front end.

    commonbath run --experiment fig1 --gamma0 0.05 --out fig1.csv
    commonbath scan-nc --gamma0 0.05 --n-max 20
    commonbath validate --grid default

Exit codes: 0 success, 1 tolerance/certification failure, 2 configuration
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import re
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, resolve_config, run_experiment
from .model import ModelError, NumericalError

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

_LIST_KEYS = {"gamma0": float, "n_list": int, "theta_list": float}
_SCALAR_KEYS = {
    "omega0": float, "t_max": float, "n_samples": int, "n_max": int, "grid": str,
    "ode_dt": float, "quad_steps": int, "kin_steps": int, "bath_modes": int,
    "bath_half_width": float, "bath_t_max": float, "bath_dt": float, "output_path": str,
    "experiment": str,
}
_ALIASES = {"out": "output_path", "n": "n_list", "theta": "theta_list"}
_PI_FORM = re.compile(r"^(?P<num>[-+]?\d*\.?\d*(?:e[-+]?\d+)?)\*?pi(?:/(?P<den>\d*\.?\d+))?$")


def _parse_number(text: str, kind):
    text = text.strip()
    if kind is float and "pi" in text.lower():
        # angles may be written as pi, 2pi, 0.5*pi, pi/4, 3*pi/4
        m = _PI_FORM.match(text.lower().replace(" ", ""))
        if not m:
            raise ConfigError(f"cannot parse {text!r}")
        num = m.group("num")
        factor = float(num) if num not in ("", "+", "-") else (-1.0 if num == "-" else 1.0)
        return factor * math.pi / float(m.group("den") or 1)
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {kind.__name__}")


def _convert(key: str, raw: str):
    key = _ALIASES.get(key, key)
    if key in _LIST_KEYS:
        items = [s for s in raw.split(",") if s.strip()]
        return key, tuple(_parse_number(s, _LIST_KEYS[key]) for s in items)
    if key in _SCALAR_KEYS:
        kind = _SCALAR_KEYS[key]
        return key, raw.strip() if kind is str else _parse_number(raw, kind)
    raise ConfigError(f"unknown config key {key!r}")


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key, value = _convert(key.replace("-", "_"), raw)
        values[key] = value
    return values


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file; flags override its entries")
    p.add_argument("--gamma0", help="coupling ratio gamma0/lambda (comma list allowed)")
    p.add_argument("--omega0", help="qubit frequency in units of lambda")
    p.add_argument("--t-max", dest="t_max", help="time horizon in units of 1/lambda")
    p.add_argument("--n-samples", dest="n_samples", help="number of time samples")
    p.add_argument("--out", dest="output_path", help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="commonbath", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a figure sweep and write CSV")
    run.add_argument("--experiment", choices=[e for e in EXPERIMENTS if e not in ("nc-scan", "validate")])
    _add_common(run)
    run.add_argument("--n-list", dest="n_list", help="comma-separated qubit numbers N")
    run.add_argument("--theta-list", dest="theta_list", help="comma-separated initial angles (pi allowed)")
    run.add_argument("--quad-steps", dest="quad_steps", help="Simpson panels for the closed-form GP")
    run.add_argument("--kin-steps", dest="kin_steps", help="trajectory steps for the kinematic GP")

    scan = sub.add_parser("scan-nc", help="find the smallest N with QFI revivals")
    _add_common(scan)
    scan.add_argument("--n-max", dest="n_max", help="largest N to scan")

    val = sub.add_parser("validate", help="cross-check all numerical routes")
    _add_common(val)
    val.add_argument("--grid", choices=["default", "smoke"])
    val.add_argument("--n-list", dest="n_list")
    val.add_argument("--ode-dt", dest="ode_dt")
    val.add_argument("--bath-modes", dest="bath_modes")
    val.add_argument("--bath-half-width", dest="bath_half_width")
    val.add_argument("--bath-dt", dest="bath_dt", help="RK4 step of the discretized-bath oracle")
    val.add_argument("--bath-t-max", dest="bath_t_max", help="horizon of the discretized-bath comparison")
    return parser


def _resolve(args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for key, raw in vars(args).items():
        if key in ("command", "config") or raw is None:
            continue
        if key == "experiment":
            values["experiment"] = raw
            continue
        k, v = _convert(key, raw)
        values[k] = v
    experiment = {"scan-nc": "nc-scan", "validate": "validate"}.get(args.command) or values.pop("experiment", None)
    values.pop("experiment", None)
    if experiment is None:
        raise ConfigError("--experiment is required (or set experiment = ... in the config file)")
    return resolve_config(experiment, **values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{cfg.experiment}: {len(result.rows)} rows" + (f" -> {cfg.output_path}" if cfg.output_path else ""))
    for line in result.summary:
        print("  " + line)
    return EXIT_OK if result.passed else EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
