"""Stage orchestration for the CLI: gap, map checks, solve, stability, oracle.

Each stage returns a JSON-able payload plus a list of named pass/fail checks;
``run`` chains all stages, writes the artifact files (CSV traces, state table,
figures, text report, JSON summary) into the output directory, and reports
success only when every enabled check passes.  Stage entry points reuse
earlier results found in the output directory and recompute anything missing.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .configfile import ProblemConfig
from .core import Orientation, ProductPoint, product_distance
from .geometry import ProximalPair, diameter_bound, gap
from .mappings import check_cyclic, check_nonexpansive, estimate_lambda
from .oracle import grid_search
from .report import (
    fmt,
    read_result_json,
    write_report_txt,
    write_result_json,
    write_stability_csv,
    write_trace_csv,
)
from .solver import (
    NonexpansiveReport,
    SolveReport,
    residuals,
    solve_contraction,
    solve_nonexpansive,
    verify_limit,
)
from .stability import make_bound, verify_stability

__all__ = ["Check", "StageResult", "run_stages", "STAGES"]

STAGES = ("gap", "solve", "stability", "oracle")
MAP_CHECK_SAMPLES = 2000


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class StageResult:
    payload: dict
    checks: list[Check]


def _gap_stage(cfg: ProblemConfig) -> tuple[ProximalPair, StageResult]:
    pair = gap(cfg.set_a, cfg.set_b, tol=cfg.gap_settings.tol,
               max_iter=cfg.gap_settings.max_iter)
    payload = {
        "dist": pair.dist,
        "a0": pair.a0,
        "b0": pair.b0,
        "iterations": pair.iterations,
        "converged": pair.converged,
    }
    checks = [Check("gap converged", pair.converged,
                    f"dist={fmt(pair.dist)} after {pair.iterations} sweeps")]
    return pair, StageResult(payload, checks)


def _map_stage(cfg: ProblemConfig, d: float) -> StageResult:
    t = cfg.cyclic_map
    seed = cfg.seed
    cyc = check_cyclic(t, cfg.set_a, cfg.set_b, MAP_CHECK_SAMPLES, seed=seed + 1)
    payload: dict = {
        "cyclic": {
            "checked_pairs": cyc.checked_pairs,
            "violations": cyc.violations,
            "worst_margin": cyc.worst_margin,
        }
    }
    checks = [Check("cyclic range condition", cyc.violations == 0,
                    f"{cyc.violations} of {cyc.checked_pairs} images left the "
                    f"target set (worst margin {cyc.worst_margin:.3e})")]

    if t.declared_class.kind == "contraction":
        lam = t.declared_class.lam
        est = estimate_lambda(t, cfg.set_a, cfg.set_b, d, 3 * MAP_CHECK_SAMPLES,
                              seed=seed + 2)
        payload["contraction"] = {
            "declared_lambda": lam,
            "inferred_lambda": est.inferred_lambda,
            "checked_pairs": est.checked_pairs,
            "violations": est.violations,
            "worst_margin": est.worst_margin,
        }
        ok = est.violations == 0 and (est.inferred_lambda is None
                                      or est.inferred_lambda <= lam + 1e-9)
        detail = (f"declared {lam:g}, inferred lower bound "
                  f"{est.inferred_lambda if est.inferred_lambda is not None else 'n/a'}")
        checks.append(Check("contraction constant consistent", ok, detail))
    else:
        ne = check_nonexpansive(t, cfg.set_a, cfg.set_b, MAP_CHECK_SAMPLES,
                                seed=seed + 2)
        payload["nonexpansive"] = {
            "same": {
                "checked_pairs": ne.same_orientation.checked_pairs,
                "violations": ne.same_orientation.violations,
                "worst_margin": ne.same_orientation.worst_margin,
            },
            "cross": {
                "checked_pairs": ne.cross_orientation.checked_pairs,
                "violations": ne.cross_orientation.violations,
                "worst_margin": ne.cross_orientation.worst_margin,
            },
        }
        checks.append(Check(
            "nonexpansive inequality (same orientation)",
            ne.same_orientation.violations == 0,
            f"{ne.same_orientation.violations} of "
            f"{ne.same_orientation.checked_pairs} pairs violated",
        ))
        checks.append(Check(
            "nonexpansive inequality (cross orientation)",
            ne.cross_orientation.violations == 0,
            f"{ne.cross_orientation.violations} of "
            f"{ne.cross_orientation.checked_pairs} pairs violated",
        ))
    return StageResult(payload, checks)


def _default_start(cfg: ProblemConfig) -> ProductPoint:
    lo_a, hi_a = cfg.set_a.bounding_box()
    lo_b, hi_b = cfg.set_b.bounding_box()
    return ProductPoint(
        cfg.set_a.project((lo_a + hi_a) / 2.0),
        cfg.set_b.project((lo_b + hi_b) / 2.0),
        Orientation.AB,
    )


def _solve_stage(cfg: ProblemConfig, pair: ProximalPair):
    t = cfg.cyclic_map
    d = pair.dist
    checks: list[Check] = []
    if t.declared_class.kind == "contraction":
        start = (ProductPoint(*cfg.solver.start, Orientation.AB)
                 if cfg.solver.start else _default_start(cfg))
        rpt = solve_contraction(t, cfg.set_a, cfg.set_b, start, d,
                                t.declared_class.lam, cfg.solver.tol,
                                max_iter=cfg.solver.max_iter)
        trace: SolveReport = rpt
        verified = verify_limit(t, rpt.solution, d, cfg.solver.tol)
        payload = {
            "kind": "contraction",
            "solution_a": rpt.solution.first,
            "solution_b": rpt.solution.second,
            "residual_x": rpt.residual_x,
            "residual_y": rpt.residual_y,
            "converged": rpt.converged,
            "iterations": rpt.iterations,
            "predicted_iterations": rpt.predicted_iterations,
            "within_predicted": rpt.within_predicted,
            "limit_dev_x": rpt.limit_dev_x,
            "limit_dev_y": rpt.limit_dev_y,
            "verified": verified,
            "inconsistency": rpt.inconsistency,
        }
        checks.append(Check("solve converged", rpt.converged,
                            rpt.inconsistency or
                            f"{rpt.iterations} iterations to tol {cfg.solver.tol:g}"))
        checks.append(Check("solution verified at gap distance", verified,
                            f"residuals ({fmt(rpt.residual_x)}, {fmt(rpt.residual_y)}) "
                            f"vs d={fmt(d)}"))
        checks.append(Check(
            "iterations within a-priori prediction",
            bool(rpt.within_predicted),
            f"{rpt.iterations} vs predicted {rpt.predicted_iterations} + 2",
        ))
        return rpt, trace, payload, checks

    anchor = (ProximalPair(cfg.solver.anchor[0], cfg.solver.anchor[1],
                           float(np.linalg.norm(cfg.solver.anchor[0]
                                                - cfg.solver.anchor[1])),
                           0, True)
              if cfg.solver.anchor else pair)
    anchor_ok = abs(anchor.dist - d) <= 1e-7
    checks.append(Check("anchor realizes the gap distance", anchor_ok,
                        f"anchor separation {fmt(anchor.dist)} vs d={fmt(d)}"))
    if not anchor_ok:
        payload = {"kind": "nonexpansive", "converged": False,
                   "error": "invalid anchor"}
        return None, None, payload, checks
    rpt = solve_nonexpansive(t, cfg.set_a, cfg.set_b, anchor,
                             cfg.solver.schedule, cfg.solver.inner_tol,
                             cfg.solver.outer_tol, max_inner=cfg.solver.max_inner)
    trace = rpt.subproblem_reports[-1]
    verified = verify_limit(t, rpt.solution, d,
                            max(cfg.solver.inner_tol * 10,
                                diameter_bound(cfg.set_a, cfg.set_b)
                                / rpt.schedule[-1] + cfg.solver.inner_tol))
    diam = diameter_bound(cfg.set_a, cfg.set_b)
    law_ok = (max(rpt.residual_x, rpt.residual_y) - d
              <= diam / rpt.schedule[-1] + cfg.solver.inner_tol + 1e-12)
    payload = {
        "kind": "nonexpansive",
        "solution_a": rpt.solution.first,
        "solution_b": rpt.solution.second,
        "residual_x": rpt.residual_x,
        "residual_y": rpt.residual_y,
        "converged": rpt.converged,
        "schedule": rpt.schedule,
        "subproblem_iterations": [r.iterations for r in rpt.subproblem_reports],
        "verified": verified,
        "inconsistency": rpt.inconsistency,
    }
    checks.append(Check("solve converged", rpt.converged,
                        rpt.inconsistency or
                        f"schedule {rpt.schedule} with outer tol {cfg.solver.outer_tol:g}"))
    checks.append(Check("solution verified at gap distance", verified,
                        f"residuals ({fmt(rpt.residual_x)}, {fmt(rpt.residual_y)}) "
                        f"vs d={fmt(d)}"))
    checks.append(Check("relaxation residual estimate", law_ok,
                        f"residual-d={max(rpt.residual_x, rpt.residual_y) - d:.3e} "
                        f"vs diam/n={diam / rpt.schedule[-1]:.3e}"))
    return rpt, trace, payload, checks


def _solution_from_payload(payload: dict) -> ProductPoint:
    return ProductPoint(np.array(payload["solution_a"]),
                        np.array(payload["solution_b"]), Orientation.AB)


def _stability_stage(cfg: ProblemConfig, d: float, solution: ProductPoint):
    t = cfg.cyclic_map
    settings = cfg.stability
    rows = []
    checks = []
    lam = t.declared_class.lam
    m_a = cfg.set_a.sup_norm_bound()
    m_b = cfg.set_b.sup_norm_bound()
    idx = 0
    for kind in settings.kinds:
        for eps in settings.epsilons:
            bound = make_bound(kind, eps, d, lam=lam, m_a=m_a, m_b=m_b)
            rep = verify_stability(t, cfg.set_a, cfg.set_b, solution, bound,
                                   settings.n_samples,
                                   seed=cfg.seed * 1000 + idx)
            rows.append({
                "kind": kind,
                "epsilon": eps,
                "bound": bound.bound,
                "n_samples": settings.n_samples,
                "kept": rep.n_samples,
                "violations": rep.violations,
                "max_ratio": rep.max_ratio,
                "hypothesis_checked": rep.hypothesis_checked,
            })
            checks.append(Check(
                f"stability {kind} eps={eps:g}",
                rep.violations == 0,
                f"{rep.violations} of {rep.n_samples} kept samples exceeded "
                f"the radius (max ratio {rep.max_ratio:.4f})",
            ))
            idx += 1
    return rows, checks


def _oracle_stage(cfg: ProblemConfig, d: float, solution: ProductPoint):
    t = cfg.cyclic_map
    settings = cfg.oracle
    result = grid_search(t, cfg.set_a, cfg.set_b, d, settings.resolution,
                         settings.threshold)
    tol = (cfg.solver.tol if t.declared_class.kind == "contraction"
           else cfg.solver.inner_tol)
    proximity = product_distance(solution, result.best)
    proximity_limit = settings.resolution * math.sqrt(cfg.dimension) + tol
    objective_limit = t.lipschitz_slack * settings.resolution
    payload = {
        "best_a": result.best.first,
        "best_b": result.best.second,
        "best_objective": result.best_objective,
        "resolution": settings.resolution,
        "n_pairs": result.n_pairs,
        "n_candidates_below_threshold": len(result.candidates_below_threshold),
        "solver_distance": proximity,
    }
    checks = [
        Check("oracle proximity to solver solution",
              proximity <= proximity_limit,
              f"distance {proximity:.4e} vs limit {proximity_limit:.4e}"),
        Check("oracle minimum objective",
              result.best_objective <= objective_limit,
              f"objective {result.best_objective:.4e} vs Lipschitz slack "
              f"{objective_limit:.4e}"),
    ]
    return result, payload, checks


def _pathway_lines(cfg: ProblemConfig, summary: dict) -> list[str]:
    """Per-pathway hypothesis/conclusion statements for the text report."""
    decl = cfg.cyclic_map.declared_class
    maps = summary.get("map_checks", {})
    solve = summary.get("solve", {})
    rows = summary.get("stability", [])
    lines = ["Pathway verdicts", "----------------"]

    def stability_ok(kind):
        sel = [r for r in rows if r["kind"] == kind]
        if not sel:
            return None
        return all(r["violations"] == 0 for r in sel)

    cyc_ok = maps.get("cyclic", {}).get("violations") == 0
    if decl.kind == "contraction":
        hyp = cyc_ok and maps.get("contraction", {}).get("violations") == 0
        concl = bool(solve.get("converged")) and bool(solve.get("verified"))
        st = stability_ok("contraction")
        lines.append(_verdict(
            "Unique solution via contraction iteration",
            hyp, "range + contraction inequality sampled clean" if hyp
            else "map condition violations observed",
            concl and (st is not False),
            f"converged={solve.get('converged')}, verified={solve.get('verified')}"
            + (f", stability violations absent={st}" if st is not None else ""),
        ))
        lines.append("Existence via nonexpansive relaxation: not applicable "
                     "(map declared a contraction).")
    else:
        same_ok = maps.get("nonexpansive", {}).get("same", {}).get("violations") == 0
        cross_ok = maps.get("nonexpansive", {}).get("cross", {}).get("violations") == 0
        hyp = cyc_ok and same_ok and cross_ok
        concl = bool(solve.get("converged")) and bool(solve.get("verified"))
        st = stability_ok("nonexpansive")
        lines.append(_verdict(
            "Existence via nonexpansive relaxation schedule "
            "(bounded sets, finite dimension: proximal sets compact)",
            hyp,
            f"range clean, inequality clean same/cross={same_ok}/{cross_ok}",
            concl and (st is not False),
            f"converged={solve.get('converged')}, verified={solve.get('verified')}"
            + (f", stability violations absent={st}" if st is not None else ""),
        ))
        lines.append("Unique solution via contraction iteration: not applicable "
                     "(map declared nonexpansive; solved through the schedule).")

    st4 = stability_ok("strict_convex")
    if st4 is None:
        lines.append("Conditional stability radius (per-sample domination "
                     "hypothesis): not evaluated (kind not configured).")
    else:
        kept = sum(r["kept"] for r in rows if r["kind"] == "strict_convex")
        lines.append(_verdict(
            "Conditional stability radius (per-sample domination hypothesis)",
            True, f"hypothesis filtered per sample ({kept} kept)",
            st4, "all kept samples within 2*eps + 2*d" if st4
            else "kept samples exceeded the radius",
        ))
    return lines


def _verdict(title: str, hyp: bool, hyp_detail: str, concl: bool,
             concl_detail: str) -> str:
    return (f"{title}:\n"
            f"    hypotheses verified: {'yes' if hyp else 'NO'} ({hyp_detail})\n"
            f"    conclusion held:     {'yes' if concl else 'NO'} ({concl_detail})")


def run_stages(cfg: ProblemConfig, stages: list[str], output_dir: str,
               quiet: bool = False, figures: bool = True) -> int:
    """Execute the requested stages (recomputing missing prerequisites),
    write artifacts, and return the exit code (0 pass / 1 any check failed)."""
    os.makedirs(output_dir, exist_ok=True)
    result_path = os.path.join(output_dir, "result.json")
    summary = read_result_json(result_path) or {}
    summary["config"] = os.path.basename(cfg.path)
    summary["seed"] = cfg.seed
    summary["dimension"] = cfg.dimension
    summary["map_family"] = cfg.map_family

    checks: list[Check] = []
    notes: list[str] = []

    def say(msg: str):
        if not quiet:
            print(msg)

    want = set(stages)
    full_run = want == set(STAGES)

    # ---- gap (needed by everything) ----
    pair = None
    if "gap" in want or summary.get("gap") is None:
        pair, res = _gap_stage(cfg)
        summary["gap"] = res.payload
        checks.extend(res.checks)
        say(f"gap: dist = {fmt(pair.dist)}  a0 = {_fmt_vec(pair.a0)}  "
            f"b0 = {_fmt_vec(pair.b0)}  ({pair.iterations} sweeps)")
    else:
        g = summary["gap"]
        pair = ProximalPair(np.array(g["a0"]), np.array(g["b0"]),
                            float(g["dist"]), int(g["iterations"]),
                            bool(g["converged"]))
    d = pair.dist

    # ---- map verification travels with solve ----
    solve_requested = bool(want & {"solve", "stability", "oracle"})
    solution = None
    if "solve" in want or (solve_requested and summary.get("solve") is None):
        map_res = _map_stage(cfg, d)
        summary["map_checks"] = map_res.payload
        checks.extend(map_res.checks)
        rpt, trace, payload, solve_checks = _solve_stage(cfg, pair)
        summary["solve"] = payload
        checks.extend(solve_checks)
        if trace is not None:
            write_trace_csv(os.path.join(output_dir, "trace.csv"),
                            cfg.cyclic_map, trace)
            if figures:
                from . import figures as figmod
                lam = (cfg.cyclic_map.declared_class.lam
                       if cfg.cyclic_map.declared_class.kind == "contraction"
                       else 1.0 - 1.0 / summary["solve"]["schedule"][-1])
                figmod.render_gap_decay(
                    os.path.join(output_dir, "fig_trace.png"), trace, lam)
                if isinstance(rpt, NonexpansiveReport):
                    res_minus_d = [max(*residuals(cfg.cyclic_map, r.solution)) - d
                                   for r in rpt.subproblem_reports]
                    figmod.render_schedule_residuals(
                        os.path.join(output_dir, "fig_schedule.png"), rpt,
                        res_minus_d, diameter_bound(cfg.set_a, cfg.set_b),
                        cfg.solver.inner_tol)
        if payload.get("solution_a") is not None:
            solution = _solution_from_payload(payload)
            say(f"solve: converged={payload['converged']}  solution a = "
                f"{_fmt_vec(solution.first)}  b = {_fmt_vec(solution.second)}")
    elif summary.get("solve") and summary["solve"].get("solution_a") is not None:
        solution = _solution_from_payload(summary["solve"])

    # ---- stability ----
    if "stability" in want and cfg.stability is not None:
        if solution is None:
            notes.append("stability: no solver solution available; run the solve "
                         "stage first (proxipair solve <config>)")
            checks.append(Check("stability prerequisites", False,
                                "missing solver solution"))
        else:
            rows, st_checks = _stability_stage(cfg, d, solution)
            summary["stability"] = rows
            checks.extend(st_checks)
            write_stability_csv(os.path.join(output_dir, "stability.csv"), rows)
            if figures:
                from . import figures as figmod
                figmod.render_stability(
                    os.path.join(output_dir, "fig_stability.png"), rows)
            say(f"stability: {len(rows)} bound rows, "
                f"{sum(r['violations'] for r in rows)} violations")
    elif "stability" in want:
        notes.append("stability: no [stability] section in the config; skipped")

    # ---- oracle ----
    if "oracle" in want and cfg.oracle is not None:
        if solution is None:
            checks.append(Check("oracle prerequisites", False,
                                "missing solver solution; run the solve stage "
                                "first (proxipair solve <config>)"))
        else:
            _, payload, oracle_checks = _oracle_stage(cfg, d, solution)
            summary["oracle"] = payload
            checks.extend(oracle_checks)
            say(f"oracle: best a = {_fmt_vec(np.array(payload['best_a']))}  "
                f"b = {_fmt_vec(np.array(payload['best_b']))}  objective = "
                f"{payload['best_objective']:.4e}")
    elif "oracle" in want:
        notes.append("oracle: no [oracle] section in the config; skipped")

    summary["checks"] = [
        {"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks
    ]
    passed = all(c.passed for c in checks)
    summary["passed"] = passed
    write_result_json(result_path, summary)

    if full_run:
        lines = _report_lines(cfg, summary, notes)
        write_report_txt(os.path.join(output_dir, "report.txt"), lines)
        if not quiet:
            print("\n".join(lines))
    else:
        for c in checks:
            say(f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
    for note in notes:
        say(note)
    return 0 if passed else 1


def _fmt_vec(v: np.ndarray) -> str:
    return "(" + ", ".join(f"{x:.10g}" for x in v) + ")"


def _report_lines(cfg: ProblemConfig, summary: dict, notes: list[str]) -> list[str]:
    lines = [
        "proxipair run report",
        "====================",
        f"config: {summary['config']}   seed: {cfg.seed}   dimension: {cfg.dimension}",
        f"map family: {cfg.map_family} ({cfg.cyclic_map.declared_class.kind}"
        + (f", lambda={cfg.cyclic_map.declared_class.lam:g}"
           if cfg.cyclic_map.declared_class.kind == "contraction" else "")
        + ")",
        "",
    ]
    g = summary.get("gap", {})
    if g:
        lines.append(f"gap: dist = {fmt(g['dist'])}  a0 = "
                     f"{_fmt_vec(np.array(g['a0']))}  b0 = {_fmt_vec(np.array(g['b0']))}")
    s = summary.get("solve", {})
    if s.get("solution_a") is not None:
        lines.append(f"solution: a = {_fmt_vec(np.array(s['solution_a']))}  "
                     f"b = {_fmt_vec(np.array(s['solution_b']))}")
        lines.append(f"residuals: ({fmt(s['residual_x'])}, {fmt(s['residual_y'])})")
    lines.append("")
    lines.extend(_pathway_lines(cfg, summary))
    lines.append("")
    lines.append("Checks")
    lines.append("------")
    for c in summary.get("checks", []):
        lines.append(f"[{'pass' if c['passed'] else 'FAIL'}] {c['name']}: {c['detail']}")
    for note in notes:
        lines.append(f"note: {note}")
    lines.append("")
    lines.append(f"overall: {'PASS' if summary.get('passed') else 'FAIL'}")
    return lines
