"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 integration failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import __version__
from .config import ConfigError, load_config
from .integrator import IntegrationError
from .output import emit_outputs, write_rows
from .scenarios import (
    scenario_fig2,
    scenario_fig3,
    scenario_mode_asymmetry,
    scenario_pump_interruption,
    scenario_stability_map,
    simulate,
    sweep,
    thermal_decay,
)

log = logging.getLogger("ramansr")

COMMANDS = ("simulate", "sweep", "stability", "thermal-decay", "modes", "interrupt")


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ramansr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="flat key = value configuration file")
        sp.add_argument("--out", help="output directory (overrides the 'out' key)")
        sp.add_argument("--model", choices=("eliminated", "full", "multimode", "kinetic"))
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key (repeatable)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = _parse_set(args.set)
        if args.model:
            overrides["model"] = args.model
        if args.out:
            overrides["out"] = args.out
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        extra = None
        if args.command == "simulate":
            summary, series = simulate(cfg)
        elif args.command == "sweep":
            scen = cfg["scenario"]
            if scen == "fig2":
                summary, series = scenario_fig2(cfg)
            elif scen == "fig3":
                summary, series = scenario_fig3(cfg)
            else:
                if not cfg["sweep_param"]:
                    print("config error: sweep needs sweep_param and sweep_values (or scenario = fig2 | fig3)", file=sys.stderr)
                    return 1
                summary, series = sweep(cfg)
        elif args.command == "stability":
            summary, series = scenario_stability_map(cfg), []
        elif args.command == "thermal-decay":
            summary, extra = thermal_decay(cfg)
            series = []
        elif args.command == "modes":
            summary, series = scenario_mode_asymmetry(cfg)
        else:
            summary, series = scenario_pump_interruption(cfg)
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    paths = emit_outputs(summary, series, cfg)
    if extra is not None:
        rows = [
            {"t": t, "re_env": e.real, "im_env": e.imag, "abs_env": abs(e), "re_analytic": a.real, "im_analytic": a.imag}
            for t, e, a in zip(extra["t"], extra["envelope"], extra["analytic"])
        ]
        paths.append(write_rows(rows, Path(cfg["out"]) / "envelope.csv"))
    for p in paths:
        log.info("wrote %s", p)
    for rec in summary.records:
        if "error" in rec:
            print(f"integration failure: {rec['error']}", file=sys.stderr)
    print(f"{args.command}: {len(summary.records)} record(s) -> {cfg['out']}")
    return 2 if summary.failed else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
