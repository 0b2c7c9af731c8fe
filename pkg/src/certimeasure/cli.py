"""Command line entry point: ``certimeasure run ...``.

Exit codes: 0 certified, 2 failed to certify, 1 usage or internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .pipeline import CERTIFIED, run

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2

# flag name -> config key (file keys use the same names with '-' or '_')
_KEYS = {
    "map": "map",
    "scheme": "scheme",
    "coarse_n": "coarse_n",
    "fine_n": "fine_n",
    "kmax": "kmax",
    "kbudget": "kbudget",
    "threads": "threads",
    "lyapunov": "lyapunov",
    "one_grid": "one_grid",
    "n": "n",
    "iterate": "iterate",
    "out": "out",
    "dump_matrix": "dump_matrix",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="certimeasure", description="Certified invariant-density enclosures for piecewise "
                                                  "expanding interval maps.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run a one-grid or two-grid certification")
    r.add_argument("--config", help="TOML file with the same keys as the flags")
    r.add_argument("--map", help="catalog map: doubling, linear<k>, lanford, nonlinear_nonmarkov, "
                                 "perturbed_4x, lorenz")
    r.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="map parameter, e.g. eps=1/100 (repeatable)")
    r.add_argument("--iterate", type=int, help="certify the k-th iterate of the map")
    r.add_argument("--scheme", choices=["ulam", "hat"])
    r.add_argument("--coarse-n", dest="coarse_n", type=int)
    r.add_argument("--fine-n", dest="fine_n", type=int)
    r.add_argument("--one-grid", dest="one_grid", action="store_true", default=None)
    r.add_argument("--n", type=int, help="grid size for --one-grid")
    r.add_argument("--kmax", type=int, help="initial number of powers")
    r.add_argument("--kbudget", type=int, help="largest k_max reached by doubling")
    r.add_argument("--threads", type=int)
    r.add_argument("--lyapunov", action="store_true", default=None)
    r.add_argument("--out", help="output directory")
    r.add_argument("--dump-matrix", dest="dump_matrix", action="store_true", default=None)
    return p


def _parse_param(text: str) -> tuple[str, str]:
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise UsageError(f"--param expects KEY=VALUE, got {text!r}")
    return key.strip(), val.strip()


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return {k.replace("-", "_"): v for k, v in raw.items()}


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge the config file (if any) with flags; flags win."""
    cfg = load_config(args.config) if args.config else {}
    params = dict(cfg.get("params") or {})
    for flag, key in _KEYS.items():
        val = getattr(args, flag)
        if val is not None:
            cfg[key] = val
    params.update(_parse_param(p) for p in args.param)
    cfg["params"] = params
    if "map" not in cfg:
        raise UsageError("a map is required (--map or 'map' in the config file)")
    if cfg.get("one_grid") and "n" not in cfg:
        raise UsageError("--one-grid needs --n")
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(args)
        report = run(cfg)
    except UsageError as exc:
        print(f"certimeasure: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (KeyError, ValueError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"certimeasure: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_ERROR
    if cfg.get("out"):
        report.write(cfg["out"], dump_matrix=bool(cfg.get("dump_matrix")))
    if report.status == CERTIFIED:
        print(f"certified: error bound {report.error.bound:.6g} (m = {report.error.m_used}, k_max = {report.k_max})")
        ly = report.lyapunov
        if ly is not None and hasattr(ly, "value"):
            print(f"lyapunov exponent in [{ly.value.lo:.10g}, {ly.value.hi:.10g}]")
        return EXIT_OK
    f = report.failure or {}
    print(f"failed at {f.get('stage')}: {f.get('reason')}")
    if f.get("recommendation"):
        print(f"recommendation: {f['recommendation']}")
    return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
