"""Run a validated configuration and serialize the results.

The report is a plain dict with keys version, config_hash, timestamp, cost,
points, solves and checks. Identical configurations produce byte-identical
reports apart from the timestamp. Files are written atomically: content goes
to a temporary file in the target directory first, then replaces the target.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import io
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import figures as figures_mod
from .errors import InputError, NumericalError, ShortcutNotApplicable, UnsupportedOperation
from .metric import (assemble_metric, diagonalizing_frame, dimension_bound,
                     enumerate_partitions, necessary_condition_check,
                     rank_bound_check, signature, signature_m3_shortcut,
                     signature_recursive)
from .monotonicity import (c_monotone_violations, compatibility_check,
                           projection_monotone_check, two_monotone_sign)
from .solver import (MASS_TOL, build_lp, export_certificate_csv, export_plan_csv,
                     extract_support, load_plan_entries, nonuniqueness_probe,
                     plan_from_entries, reflection_pair_plans, solve_lp,
                     support_diagnostics, verify_optimality)

REPORT_VERSION = 1
ALL_SECTIONS = frozenset({"points", "solve", "checks"})


def _signature_dict(sig):
    return {"q_plus": sig.q_plus, "q_minus": sig.q_minus, "q_zero": sig.q_zero,
            "zero_tol": sig.zero_tol, "method": sig.method}


def _analyze_point(config, index, coords, zero_tol):
    entry = {"index": index, "coordinates": [list(c) for c in coords]}
    try:
        metric = assemble_metric(config.cost, coords, config.weights)
        sig = signature(metric, zero_tol=zero_tol)
    except (UnsupportedOperation, NumericalError, InputError) as exc:
        entry["error"] = str(exc)
        return entry, None
    entry["signature"] = _signature_dict(sig)
    entry["eigenvalues"] = list(sig.eigenvalues)
    entry["dimension_bound"] = dimension_bound(sig)
    chk = config.checks
    if chk.rank_bounds:
        rb = rank_bound_check(metric, sig)
        entry["rank_bounds"] = {"max_rank": rb.max_rank, "q_plus": rb.q_plus,
                                "q_minus": rb.q_minus, "satisfied": rb.satisfied}
    if chk.necessary_condition:
        nc = necessary_condition_check(metric)
        entry["necessary_condition"] = {
            "holds": nc.holds, "all_applicable": nc.all_applicable,
            "triples_checked": len(nc.triples),
            "failing": [list(t.triple) for t in nc.triples if not t.negative_definite],
        }
    if chk.shortcut:
        try:
            alt = signature_m3_shortcut(metric, zero_tol=zero_tol)
            entry["shortcut"] = {"applicable": True,
                                 "signature": list(alt.counts()),
                                 "agrees": alt.counts() == sig.counts()}
        except ShortcutNotApplicable as exc:
            entry["shortcut"] = {"applicable": False, "reason": str(exc)}
    if chk.recursion:
        try:
            rec = signature_recursive(metric, zero_tol=zero_tol)
            entry["recursion"] = {"signature": list(rec.counts()),
                                  "method": rec.method,
                                  "agrees": rec.counts() == sig.counts(),
                                  "note": rec.note}
        except (NumericalError, InputError) as exc:
            entry["recursion"] = {"error": str(exc)}
    return entry, (metric, sig)


def _default_box(config):
    if config.checks.box is not None:
        return config.checks.box
    if config.solve is not None and all(g.dim == 1 for g in config.solve.grids):
        return tuple((float(g.points.min()), float(g.points.max()))
                     for g in config.solve.grids)
    return tuple((0.0, 1.0) for _ in range(config.cost.m))


def _run_solve(config, zero_tol):
    cost, sv = config.cost, config.solve
    lp = build_lp(cost, sv.grids)
    plan, cert = solve_lp(lp)
    opt = verify_optimality(lp, plan, cert)
    support = extract_support(lp, plan)
    keys = sorted(k for k, m in plan.entries.items() if m > MASS_TOL)
    entry = {
        "objective": plan.objective,
        "pivots": plan.pivots,
        "gap": opt.gap,
        "optimality": dataclasses.asdict(opt),
        "support": [{"key": list(k), "coordinates": [list(c) for c in support.points[a].coords],
                     "mass": support.masses[a]}
                    for a, k in enumerate(keys)],
        "n_variables": lp.n_variables,
        "n_independent_rows": lp.n_independent_rows,
    }
    metric = frame = None
    try:
        metric = assemble_metric(cost, support.points[0].coords, config.weights)
        frame = diagonalizing_frame(metric, zero_tol=zero_tol)
    except (UnsupportedOperation, NumericalError, InputError) as exc:
        entry["diagnostics"] = {"error": str(exc)}
    if metric is not None:
        diag = support_diagnostics(support, metric=metric, frame=frame, radius=sv.radius)
        entry["diagnostics"] = {
            "affine_dimension": diag.affine_dimension,
            "radius": sv.radius,
            "spacelike": dataclasses.asdict(diag.spacelike),
            "graph": dataclasses.asdict(diag.graph),
        }
    candidates = []
    if sv.probe_reflection_pair:
        candidates.extend(reflection_pair_plans(lp))
    for path in sv.plan_files:
        candidates.append(plan_from_entries(lp, load_plan_entries(path, cost.m)))
    if len(candidates) == 1:
        candidates.insert(0, plan)
    if candidates:
        probe = nonuniqueness_probe(lp, candidates)
        entry["nonuniqueness"] = dataclasses.asdict(probe)
    return entry, lp, plan, cert, support


def _run_checks(config, support, seed):
    cost, chk = config.cost, config.checks
    out = []
    if chk.c_monotonicity:
        if support is None:
            out.append({"name": "c_monotonicity", "passed": None,
                        "skipped": "needs a solved support"})
        else:
            rep = c_monotone_violations(cost, support, enumerate_partitions(cost.m))
            out.append({"name": "c_monotonicity", "passed": rep.passed,
                        "violations": len(rep.violations),
                        "pairs_checked": rep.pairs_checked,
                        "max_defect": rep.max_defect,
                        "tolerance": rep.tolerance})
    box = _default_box(config)
    if chk.two_monotone:
        try:
            signs = {}
            determinate = True
            for i in range(1, cost.m + 1):
                for j in range(i + 1, cost.m + 1):
                    rep = two_monotone_sign(cost, i, j, box, samples=chk.samples, seed=seed)
                    signs[f"{i},{j}"] = rep.sign
                    determinate = determinate and rep.sign in (-1, 1)
            out.append({"name": "two_monotone", "passed": determinate, "signs": signs})
        except (InputError, UnsupportedOperation) as exc:
            out.append({"name": "two_monotone", "passed": None, "skipped": str(exc)})
    if chk.compatibility:
        try:
            rep = compatibility_check(cost, box, samples=chk.samples, seed=seed)
            out.append({"name": "compatibility",
                        "passed": rep.verdict == "compatible",
                        "verdict": rep.verdict,
                        "pair_signs": {f"{i},{j}": s for (i, j), s in rep.pair_signs.items()},
                        "offending": [list(t) for t in rep.offending]})
        except (InputError, UnsupportedOperation) as exc:
            out.append({"name": "compatibility", "passed": None, "skipped": str(exc)})
    if chk.projection:
        if support is None:
            out.append({"name": "projection_monotone", "passed": None,
                        "skipped": "needs a solved support"})
        else:
            per = {}
            for j in range(2, cost.m + 1):
                rep = projection_monotone_check(support, j)
                per[str(j)] = rep.passed
            out.append({"name": "projection_monotone",
                        "passed": all(per.values()), "per_marginal": per})
    return out


def run(config, sections=ALL_SECTIONS, zero_tol=None, seed=None):
    """Execute the configured analysis and return (report, artifacts).

    artifacts carries the non-serializable pieces (grids, plan, certificate,
    support, per-point metric data) that output writers need.
    """
    sections = frozenset(sections)
    ztol = zero_tol if zero_tol is not None else config.zero_tol
    eff_seed = config.seed if seed is None else int(seed)
    report = {
        "version": REPORT_VERSION,
        "config_hash": config.config_hash,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "cost": config.cost.describe(),
        "points": [],
        "solves": [],
        "checks": [],
    }
    artifacts = {"plan": None, "certificate": None, "support": None,
                 "grids": None, "point_data": []}
    if "points" in sections and config.points:
        with ThreadPoolExecutor(max_workers=min(8, len(config.points))) as pool:
            results = list(pool.map(
                lambda pair: _analyze_point(config, pair[0], pair[1], ztol),
                enumerate(config.points)))
        for entry, data in results:
            report["points"].append(entry)
            artifacts["point_data"].append(data)
    support = None
    if "solve" in sections and config.solve is not None:
        entry, lp, plan, cert, support = _run_solve(config, ztol)
        report["solves"].append(entry)
        artifacts.update(plan=plan, certificate=cert, support=support,
                         grids=config.solve.grids)
    if "checks" in sections:
        report["checks"] = _run_checks(config, support, eff_seed)
    return report, artifacts


def assert_failures(report):
    """Collect the conditions an --assert run treats as failures."""
    bad = []
    for entry in report.get("points", ()):
        k = entry.get("index")
        if "error" in entry:
            bad.append(f"point {k}: {entry['error']}")
            continue
        sc = entry.get("shortcut")
        if sc and sc.get("applicable") and not sc.get("agrees"):
            bad.append(f"point {k}: three-marginal shortcut disagrees")
        rec = entry.get("recursion")
        if rec and not rec.get("agrees", True):
            bad.append(f"point {k}: recursive signature disagrees")
        rb = entry.get("rank_bounds")
        if rb and not rb.get("satisfied"):
            bad.append(f"point {k}: index exceeds cross-block rank bound")
    for s, entry in enumerate(report.get("solves", ())):
        if not entry.get("optimality", {}).get("passed"):
            bad.append(f"solve {s}: optimality certificate failed")
    for chk in report.get("checks", ()):
        if chk.get("passed") is False:
            bad.append(f"check {chk.get('name')}: failed")
    return bad


# -- writers -----------------------------------------------------------------


def _umask():
    cur = os.umask(0)
    os.umask(cur)
    return cur


def atomic_write_text(path, text):
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _points_rows(report):
    head = ["index", "q_plus", "q_minus", "q_zero", "zero_tol", "dimension_bound",
            "eigenvalues", "rank_bound_ok", "necessary_condition", "shortcut_agrees",
            "recursion_agrees", "error"]
    rows = [head]
    for e in report["points"]:
        if "error" in e:
            rows.append([e["index"], "", "", "", "", "", "", "", "", "", "", e["error"]])
            continue
        sig = e["signature"]
        rows.append([
            e["index"], sig["q_plus"], sig["q_minus"], sig["q_zero"],
            "%.17g" % sig["zero_tol"], e["dimension_bound"],
            ";".join("%.17g" % v for v in e["eigenvalues"]),
            e.get("rank_bounds", {}).get("satisfied", ""),
            e.get("necessary_condition", {}).get("holds", ""),
            e.get("shortcut", {}).get("agrees", ""),
            e.get("recursion", {}).get("agrees", ""),
            "",
        ])
    return rows


def _solves_rows(report):
    head = ["solve", "objective", "gap", "pivots", "support_size", "marginal_error",
            "min_slack", "affine_dimension", "spacelike_score", "graph_residual",
            "nonunique", "tv_distance"]
    rows = [head]
    for s, e in enumerate(report["solves"]):
        diag = e.get("diagnostics", {})
        spc = diag.get("spacelike") or {}
        gic = diag.get("graph") or {}
        non = e.get("nonuniqueness") or {}
        rows.append([
            s, "%.17g" % e["objective"], "%.17g" % e["gap"], e["pivots"],
            len(e["support"]), "%.17g" % e["optimality"]["marginal_error"],
            "%.17g" % e["optimality"]["min_slack"],
            diag.get("affine_dimension", ""),
            "" if spc.get("score") is None else "%.17g" % spc["score"],
            "" if gic.get("max_residual") is None else "%.17g" % gic["max_residual"],
            non.get("nonunique", ""),
            "" if non.get("tv_distance") is None else "%.17g" % non["tv_distance"],
        ])
    return rows


def _checks_rows(report):
    rows = [["name", "passed", "detail"]]
    for chk in report["checks"]:
        detail = {k: v for k, v in chk.items() if k not in ("name", "passed")}
        rows.append([chk["name"], chk["passed"],
                     json.dumps(detail, sort_keys=True)])
    return rows


def write_outputs(report, artifacts, output):
    """Write figures, plan/certificate exports, then the report itself.

    Returns the list of written paths. The report file comes last so that a
    report on disk always references files that already exist.
    """
    written = []
    if output.figures:
        os.makedirs(output.figures, exist_ok=True)
        for entry in report["points"]:
            if "error" in entry:
                continue
            path = os.path.join(output.figures,
                                "point_%03d_spectrum.png" % entry["index"])
            figures_mod.spectrum_figure(entry["eigenvalues"],
                                        entry["signature"]["zero_tol"],
                                        _sig_label(entry["signature"]), path)
            entry["figure"] = path
            written.append(path)
        for s, entry in enumerate(report["solves"]):
            path = os.path.join(output.figures, "solve_%d_support.png" % s)
            figures_mod.support_figure(artifacts["support"], artifacts["grids"],
                                       "objective %.6g" % entry["objective"], path)
            entry["figure"] = path
            written.append(path)
    if output.path:
        stem, ext = os.path.splitext(output.path)
        if artifacts["plan"] is not None:
            plan_path = stem + "_plan.csv"
            cert_path = stem + "_certificate.csv"
            export_plan_csv(artifacts["plan"], artifacts["grids"], plan_path)
            export_certificate_csv(artifacts["certificate"], artifacts["grids"], cert_path)
            report["solves"][0]["exports"] = {"plan": plan_path, "certificate": cert_path}
            written.extend([plan_path, cert_path])
        if output.format == "json":
            atomic_write_text(output.path, json.dumps(report, indent=2, sort_keys=True) + "\n")
            written.append(output.path)
        else:
            atomic_write_text(stem + "_solves.csv", _csv_text(_solves_rows(report)))
            atomic_write_text(stem + "_checks.csv", _csv_text(_checks_rows(report)))
            atomic_write_text(output.path, _csv_text(_points_rows(report)))
            written.extend([stem + "_solves.csv", stem + "_checks.csv", output.path])
    return written


def _sig_label(sig):
    return "signature (%d, %d, %d)" % (sig["q_plus"], sig["q_minus"], sig["q_zero"])
