"""Command line entry point: ``elapsedtime run|preset|converge|steady``.

Exit codes: 0 success, 2 configuration error, 3 solver event (blow-up or a
failed step).
"""

import argparse
import json
import sys
from pathlib import Path

from .config import PRESETS, ConfigError, load_preset, parse_config
from .errors import ElapsedTimeError, SolverError
from .scenarios import (convergence_study, run_scenario, steady_roots, summary_line,
                        write_convergence_csv)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _load(path):
    p = Path(path)
    return parse_config(p.read_text(), name=p.stem)


def _parser():
    ap = argparse.ArgumentParser(prog="elapsedtime", description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default=".", help="directory for CSV output")
    ap.add_argument("--quiet", action="store_true", help="suppress the summary line")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("config")
    p = sub.add_parser("preset", help="run a built-in preset")
    p.add_argument("name", choices=sorted(PRESETS))
    p = sub.add_parser("converge", help="grid-refinement study")
    p.add_argument("config", help="scenario file or preset name")
    p.add_argument("--levels", type=int, default=3)
    p = sub.add_parser("steady", help="stationary flux roots")
    p.add_argument("config", help="scenario file or preset name")
    return ap


def _config_or_preset(ref):
    return load_preset(ref) if ref in PRESETS else _load(ref)


def main(argv=None):
    args = _parser().parse_args(argv)
    emit = (lambda s: None) if args.quiet else print
    try:
        if args.command in ("run", "preset"):
            cfg = _load(args.config) if args.command == "run" else load_preset(args.name)
            report = run_scenario(cfg, args.out_dir)
            emit(summary_line(report.summary))
            return report.exit_code
        cfg = _config_or_preset(args.config)
        if args.command == "steady":
            emit(json.dumps({"scenario": cfg.name, "roots": steady_roots(cfg)}))
            return EXIT_OK
        rows = convergence_study(cfg, args.levels)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{cfg.name}_convergence.csv"
        write_convergence_csv(path, rows, cfg)
        emit(json.dumps({"scenario": cfg.name, "file": str(path),
                         "rows": [list(r) for r in rows]}))
        return EXIT_OK
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ElapsedTimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
