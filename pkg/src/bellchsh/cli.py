"""Command-line front end.

Exit codes: 0 analysis completed (whatever the verdicts), 1 input or
validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import behavior as bh
from . import kolmogorov as ko
from . import sampling
from . import scenario as sc
from .errors import BellError, NumericalError
from .models import PRESETS, get_preset
from .scenario_file import ParsedInput, format_scenario, load


class InputError(Exception):
    """Bad command-line input; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _g(x) -> str:
    """Six significant digits for human-readable output."""
    if x is None:
        return "n/a"
    if isinstance(x, Fraction):
        return str(x)
    return f"{float(x):.6g}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _emit_json(payload) -> None:
    print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))


def _tables_dict(tables) -> dict:
    out = {}
    for ctx in sc.CONTEXTS:
        x, y = bh._ctx_index(ctx)
        out[" ".join(ctx)] = {
            f"{a:+d},{b:+d}": tables[x, y, sc.outcome_index(a), sc.outcome_index(b)]
            for a, b in sc.OUTCOMES
        }
    return out


def _load_input(path: str) -> ParsedInput:
    try:
        return load(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _behavior_of(parsed: ParsedInput) -> bh.Behavior:
    if parsed.behavior is not None:
        return parsed.behavior
    return bh.behavior_from_scenario(parsed.scenario)


# report assembly ----------------------------------------------------------

def embed_summary(result: ko.EmbeddabilityResult) -> dict:
    out = {
        "verdict": result.verdict,
        "exact": result.exact,
        "witness_kind": result.witness_kind,
        "lp_residual": result.lp_residual,
        "certificate": None,
        "witness": None,
    }
    if result.feasible:
        out["certificate"] = [
            {"strategy": list(lam), "weight": w}
            for lam, w in zip(ko.STRATEGIES, result.model.weights)
        ]
    elif result.witness_kind == "marginal":
        out["witness"] = {"type": "marginal", **result.marginal_witness.to_dict()}
    elif result.witness_kind == "fine":
        fw = result.fine_witness
        out["witness"] = {"type": "fine", "index": fw.index, "label": fw.label, "value": fw.value}
    else:
        out["witness"] = {"type": "lp", "residual": result.lp_residual}
    # Always report the Fine violation too, even when signaling has priority.
    if result.fine_witness is not None:
        fw = result.fine_witness
        out["fine_violation"] = {"index": fw.index, "label": fw.label, "value": fw.value}
    else:
        out["fine_violation"] = None
    return out


def analysis_report(parsed: ParsedInput, tolerance: float) -> dict:
    s = parsed.scenario
    report = {
        "scenario": None,
        "square_identity_residual": None,
        "local_commutator_norms": None,
        "commutators": None,
        "chsh_expectation": None,
        "chsh_spectral_bound": None,
    }
    if s is not None:
        report["scenario"] = {
            "dim_alice": s.dim_alice,
            "dim_bob": s.dim_bob,
            "state": s.state.kind,
            "form": {" ".join(c): s.measurements[c].form for c in sc.CONTEXTS},
        }
        if s.is_product:
            report["square_identity_residual"] = sc.verify_square_identity(s)
            report["local_commutator_norms"] = sc.local_commutator_norms(s)
            report["commutators"] = {
                label: {"norm": rel.norm, "closed_form_residual": rel.residual}
                for label, rel in sc.commutator_table(s).items()
            }
            report["chsh_expectation"] = sc.chsh_expectation(s)
            report["chsh_spectral_bound"] = sc.chsh_spectral_bound(s)
    else:
        report["scenario"] = {"behavior_only": True}

    b = _behavior_of(parsed)
    e = bh.correlators(b)
    report["behavior"] = _tables_dict(b.tables)
    report["correlators"] = {" ".join(c): v for c, v in zip(sc.CONTEXTS, e)}
    report["chsh"] = bh.chsh_value(e)
    report["fine_values"] = ko.fine_inequalities(b)
    report["marginal_laws"] = bh.check_marginal_laws(b, tolerance).to_dict()
    report["embeddability"] = embed_summary(ko.embed(b, marginal_tolerance=tolerance))
    return report


def render_analysis(r: dict) -> str:
    out = []
    s = r["scenario"]
    if s.get("behavior_only"):
        out.append("input: behavior tables")
    else:
        forms = ", ".join(f"({k.replace(' ', ',')}) {v}" for k, v in s["form"].items())
        out.append(f"scenario: alice {s['dim_alice']}, bob {s['dim_bob']}, {s['state']} state")
        out.append(f"measurements: {forms}")
    if r["square_identity_residual"] is not None:
        out.append(f"square identity residual ||C^2 - 4I + [A,A'](x)[B,B']||_F: {_g(r['square_identity_residual'])}")
        for k, v in r["local_commutator_norms"].items():
            out.append(f"||{k}||_F: {_g(v)}")
        out.append("joint commutators (norm, closed-form residual):")
        for label, c in r["commutators"].items():
            out.append(f"  {label}: {_g(c['norm'])}  {_g(c['closed_form_residual'])}")
        out.append(f"CHSH expectation <C>: {_g(r['chsh_expectation'])}")
        out.append(f"CHSH spectral bound max|eig C|: {_g(r['chsh_spectral_bound'])}")
    else:
        out.append("operator identities: n/a (no product-form local observables)")
    out.append("behavior:")
    for ctx, tab in r["behavior"].items():
        cells = "  ".join(f"P({k})={_g(v)}" for k, v in tab.items())
        out.append(f"  ({ctx.replace(' ', ',')}) {cells}")
    out.append("correlators: " + ", ".join(f"E({k.replace(' ', ',')})={_g(v)}" for k, v in r["correlators"].items()))
    out.append(f"CHSH from behavior: {_g(r['chsh'])}")
    out.append(render_marginals(r["marginal_laws"]))
    out.append(render_embed(r["embeddability"]))
    return "\n".join(out)


def render_marginals(m: dict) -> str:
    if m["satisfied"] is None:
        status = "WITHHELD (insufficient statistics)"
    else:
        status = "SATISFIED" if m["satisfied"] else "VIOLATED"
    lines = [f"marginal laws: {status}, max discrepancy {_g(m['max_discrepancy'])}"]
    for party, key in (("Alice", "alice"), ("Bob", "bob")):
        for setting, v in m[key].items():
            extra = f" (threshold {_g(m['thresholds'][setting])})" if m["thresholds"] else ""
            lines.append(f"  {party} {setting}: {_g(v)}{extra}")
    if m["insufficient_statistics"]:
        lines.append(f"  insufficient statistics: fewer than {sampling.MIN_SHOTS} shots per context")
    return "\n".join(lines)


def render_embed(e: dict) -> str:
    mode = "exact" if e["exact"] else "float"
    if e["verdict"] == "feasible":
        lines = [f"Kolmogorov model: FEASIBLE ({mode})", "certificate (a a' b b' weight):"]
        for row in e["certificate"]:
            signs = " ".join(f"{v:+d}" for v in row["strategy"])
            lines.append(f"  {signs} {_g(row['weight'])}")
        return "\n".join(lines)
    lines = [f"Kolmogorov model: INFEASIBLE ({mode})"]
    w = e["witness"]
    if w["type"] == "marginal":
        worst = max(
            [("Alice", k, v) for k, v in w["alice"].items()] + [("Bob", k, v) for k, v in w["bob"].items()],
            key=lambda t: t[2],
        )
        lines.append(
            f"witness: marginal laws violated, max discrepancy {_g(w['max_discrepancy'])} ({worst[0]} {worst[1]})"
        )
    elif w["type"] == "fine":
        lines.append(f"witness: Fine inequality #{w['index']} = {_g(w['value'])} > 2   [{w['label']}]")
    else:
        lines.append(f"witness: LP phase-one residual {_g(w['residual'])}")
    fv = e.get("fine_violation")
    if w["type"] == "marginal" and fv is not None:
        lines.append(f"also: Fine inequality #{fv['index']} = {_g(fv['value'])} > 2   [{fv['label']}]")
    return "\n".join(lines)


# commands -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    report = analysis_report(_load_input(args.path), args.tolerance)
    if args.json:
        _emit_json(report)
    else:
        print(render_analysis(report))
    return 0


def cmd_marginals(args) -> int:
    b = _behavior_of(_load_input(args.path))
    m = bh.check_marginal_laws(b, args.tolerance).to_dict()
    if args.json:
        _emit_json(m)
    else:
        print(render_marginals(m))
    return 0


def cmd_embed(args) -> int:
    b = _behavior_of(_load_input(args.path))
    if args.exact:
        try:
            b = b.as_rational()
        except ValueError as exc:
            raise InputError(f"--exact needs rational probabilities: {exc}") from None
    result = ko.embed(b, exact=True if args.exact else None, marginal_tolerance=args.tolerance)
    summary = embed_summary(result)
    if args.json:
        _emit_json(summary)
    elif result.feasible:
        sys.stdout.write(result.model.certificate())
    else:
        print(render_embed(summary).split("\n", 1)[1])
    return 0


def sample_report(parsed: ParsedInput, shots: int, seed: int) -> tuple[dict, sampling.SampledBehavior]:
    b = _behavior_of(parsed)
    sb = sampling.sample(b, shots, seed)
    est = sampling.estimate_chsh(sb)
    exact = float(bh.chsh_from_behavior(b))
    return {
        "seed": sb.seed,
        "shots_per_context": shots,
        "counts": _tables_dict(sb.counts),
        "correlators": {
            " ".join(c): {"value": e.value, "standard_error": e.standard_error}
            for c, e in zip(sc.CONTEXTS, sampling.estimate_correlators(sb))
        },
        "chsh": {"value": est.value, "standard_error": est.standard_error},
        "exact_chsh": exact,
        "within_3_standard_errors": est.within(exact),
        "marginal_laws": sampling.statistical_marginal_check(sb).to_dict(),
        "insufficient_statistics": shots < sampling.MIN_SHOTS,
    }, sb


def cmd_sample(args) -> int:
    if args.shots < 1:
        raise InputError("--shots must be a positive integer")
    report, sb = sample_report(_load_input(args.path), args.shots, args.seed)
    if args.dump:
        try:
            Path(args.dump).write_text(sb.dump(), encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {args.dump}: {exc.strerror or exc}") from None
    if args.json:
        _emit_json(report)
        return 0
    c = report["chsh"]
    lines = [f"seed {report['seed']}, {report['shots_per_context']} shots per context"]
    if report["insufficient_statistics"]:
        lines.append(f"insufficient statistics: fewer than {sampling.MIN_SHOTS} shots per context")
    for k, e in report["correlators"].items():
        lines.append(f"  E({k.replace(' ', ',')}) = {_g(e['value'])} +/- {_g(e['standard_error'])}")
    lines.append(f"CHSH estimate: {_g(c['value'])} +/- {_g(c['standard_error'])} (exact {_g(report['exact_chsh'])})")
    lines.append(f"within 3 standard errors of exact: {'yes' if report['within_3_standard_errors'] else 'no'}")
    lines.append(render_marginals(report["marginal_laws"]))
    print("\n".join(lines))
    return 0


def cmd_presets(args) -> int:
    if args.action == "list":
        for name, make in PRESETS.items():
            p = make()
            print(f"{name:18s} CHSH {_g(p.expected_chsh):8s} marginal laws {p.expected_marginal_laws}")
        return 0
    if not args.name or not args.out:
        raise InputError("usage: presets emit <name> <path>")
    try:
        p = get_preset(args.name)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    title = f"preset {p.name}: expected CHSH {p.expected_chsh!r}, marginal laws {p.expected_marginal_laws}\n{p.description}"
    try:
        Path(args.out).write_text(format_scenario(p.scenario, title), encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bellchsh", description="Bell-CHSH scenario analysis")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, tolerance=True):
        p.add_argument("path", help="scenario or behavior file")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if tolerance:
            p.add_argument("--tolerance", type=float, default=bh.MARGINAL_TOL, help="marginal-law tolerance")

    p = sub.add_parser("analyze", help="full report: identities, CHSH, behavior, marginals, embeddability")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("marginals", help="check the marginal laws only")
    common(p)
    p.set_defaults(func=cmd_marginals)

    p = sub.add_parser("embed", help="Kolmogorov model certificate or infeasibility witness")
    common(p)
    p.add_argument("--exact", action="store_true", help="exact rational arithmetic (rational inputs only)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("sample", help="finite-statistics simulation")
    common(p, tolerance=False)
    p.add_argument("--shots", type=int, default=10_000, help="shots per context")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", help="write per-context counts to this file")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("presets", help="list presets or emit one as a scenario file")
    p.add_argument("action", choices=["list", "emit"])
    p.add_argument("name", nargs="?")
    p.add_argument("out", nargs="?")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"bellchsh: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (InputError, BellError, ValueError) as exc:
        print(f"bellchsh: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
