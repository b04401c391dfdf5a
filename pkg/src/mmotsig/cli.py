"""Command line interface.

Subcommands:
  run      execute every configured section (analysis, solve, checks)
  analyze  metric signatures at the configured points only
  solve    the discrete coupling problem only
  check    monotonicity checks (solves first when a support is needed)
  presets  list bundled example configurations, or run one by name

Exit codes: 0 on success, 1 on configuration or runtime errors, 2 when
--assert is given and the report contains failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import presets as presets_mod
from . import report as report_mod
from .config import OutputSettings, parse_config
from .errors import ConfigError, InputError, NumericalError, SizeGuardExceeded

_SECTIONS = {
    "run": {"points", "solve", "checks"},
    "analyze": {"points"},
    "solve": {"solve"},
    "check": {"solve", "checks"},
}


def _add_common(p):
    p.add_argument("--out", help="report path (.json, or the points table for --format csv)")
    p.add_argument("--format", choices=("json", "csv"), help="report file format")
    p.add_argument("--figures", metavar="DIR", help="also render figures into DIR")
    p.add_argument("--zero-tol", type=float, help="override the eigenvalue zero threshold")
    p.add_argument("--seed", type=int, help="override the sampling seed")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit with status 2 if any reported check fails")
    p.add_argument("--quiet", action="store_true", help="suppress the report summary on stdout")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="mmotsig",
        description="Signature analysis and discrete solves for multi-marginal "
                    "transport costs.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "analyze", "solve", "check"):
        p = sub.add_parser(name, help=f"{name} the configured sections")
        p.add_argument("--config", required=True, help="path to a JSON configuration")
        _add_common(p)
    pp = sub.add_parser("presets", help="bundled example configurations")
    psub = pp.add_subparsers(dest="preset_command", required=True)
    pl = psub.add_parser("list", help="list preset names and descriptions")
    pl.add_argument("--json", action="store_true", help="emit the list as JSON")
    pr = psub.add_parser("run", help="run one preset end to end")
    pr.add_argument("name", help="preset name (see presets list)")
    _add_common(pr)
    return ap


def _merge_output(config, args):
    out = config.output
    path = args.out if args.out is not None else out.path
    fmt = args.format if args.format is not None else out.format
    figs = args.figures if args.figures is not None else out.figures
    return OutputSettings(path=path, format=fmt, figures=figs)


def _summary_lines(report):
    yield f"config {report['config_hash'][:12]}  cost {report['cost']}"
    for e in report["points"]:
        if "error" in e:
            yield f"point {e['index']}: error: {e['error']}"
            continue
        s = e["signature"]
        extras = []
        if "shortcut" in e and e["shortcut"].get("applicable"):
            extras.append("shortcut " + ("ok" if e["shortcut"]["agrees"] else "DISAGREES"))
        if "recursion" in e:
            extras.append("recursion " + ("ok" if e["recursion"].get("agrees") else "DISAGREES"))
        tail = (" [" + ", ".join(extras) + "]") if extras else ""
        yield (f"point {e['index']}: signature ({s['q_plus']}, {s['q_minus']}, "
               f"{s['q_zero']}), support dimension bound {e['dimension_bound']}{tail}")
    for k, e in enumerate(report["solves"]):
        opt = e["optimality"]
        yield (f"solve {k}: objective {e['objective']:.12g}, gap {e['gap']:.3g}, "
               f"{len(e['support'])} atoms, certificate "
               f"{'ok' if opt['passed'] else 'FAILED'}")
        non = e.get("nonuniqueness")
        if non:
            verdict = "non-unique" if non["nonunique"] else "no alternative found"
            yield f"solve {k}: optimizer {verdict} (tv {non['tv_distance']:.6g})"
    for chk in report["checks"]:
        if chk.get("passed") is None:
            yield f"check {chk['name']}: skipped ({chk.get('skipped', '')})"
        else:
            yield f"check {chk['name']}: {'pass' if chk['passed'] else 'FAIL'}"


def _execute(config, sections, args):
    output = _merge_output(config, args)
    report, artifacts = report_mod.run(config, sections=sections,
                                       zero_tol=args.zero_tol, seed=args.seed)
    written = report_mod.write_outputs(report, artifacts, output)
    if not args.quiet:
        for line in _summary_lines(report):
            print(line)
        for path in written:
            print(f"wrote {path}")
    if args.assert_:
        failures = report_mod.assert_failures(report)
        if failures:
            for f in failures:
                print(f"assert: {f}", file=sys.stderr)
            return 2
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.preset_command == "list":
                entries = [presets_mod.get(n) for n in presets_mod.names()]
                if args.json:
                    print(json.dumps([{"name": p.name, "description": p.description,
                                       "config": p.config} for p in entries],
                                     indent=2))
                else:
                    for p in entries:
                        print(f"{p.name}: {p.description}")
                return 0
            preset = presets_mod.get(args.name)
            config = parse_config(preset.config)
            return _execute(config, _SECTIONS["run"], args)
        with open(args.config) as fh:
            config = parse_config(fh.read())
        return _execute(config, _SECTIONS[args.command], args)
    except ConfigError as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1
    except (InputError, NumericalError, SizeGuardExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
