"""Command-line driver: experiment presets, replicas, and persistence.

Subcommands: simulate, counterexample, sublinear-superlinear,
conductance, losange-analytics, urn.  Every run is fully determined by
its printed config echo: rerunning with the same flags produces
byte-identical CSV and JSON artifacts.

Exit codes: 0 success, 2 configuration error, 3 all replicas failed,
4 check failure (with --check).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import graphs as G
from .conductance import laplacian_conductance, sp_conductance
from .counterexample import drift_table, simulate_left_fraction
from .losange import (LosangeWeights, inequality_suite, p_vector_exact,
                      drift_F)
from .urns import UrnSpec, run_urn, decay_exponent_fit
from .walks import (CapExceeded, ReinforcementRule, RunResult,
                    geometric_schedule, linear_schedule, run_process)

SCHEMA_VERSION = 1
CSV_MAGIC = "# antnet-csv v1"

RULES = {
    "loop-erased": "LoopErased",
    "uniform-geodesic": "UniformGeodesic",
    "full-trace": "FullTrace",
    "full-trace-multiplicity": "FullTraceMultiplicity",
    "earliest-geodesic": "EarliestGeodesic",
}

URN_KINDS = {
    "polya": UrnSpec.polya,
    "friedman": UrnSpec.friedman_like,
    "generalized": UrnSpec.generalized,
    "janson": UrnSpec.janson_fifth,
}


class ConfigError(Exception):
    """Bad configuration value; exits with code 2."""


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def load_config(path: str) -> Dict[str, Dict[str, str]]:
    """Flat sectioned key-value config: `[section]` headers, `key = value`
    lines, `#` comments.  Unknown keys are rejected by the subcommands.
    """
    sections: Dict[str, Dict[str, str]] = {}
    current: Optional[str] = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if line.startswith("[") and line.endswith("]"):
                    current = line[1:-1].strip()
                    sections.setdefault(current, {})
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                if current is None:
                    raise ConfigError(f"{path}:{lineno}: key outside a section")
                key, value = (part.strip() for part in line.split("=", 1))
                if key in sections[current]:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                sections[current][key] = value
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return sections


def apply_config(args: argparse.Namespace, section: str,
                 known: Dict[str, type]) -> None:
    """Overlay config-file values under explicit CLI flags.

    A value from the file is used only when the CLI flag kept its
    parser default; unknown keys fail loudly.
    """
    if not args.config:
        return
    sections = load_config(args.config)
    for key, raw in sections.get(section, {}).items():
        if key not in known:
            raise ConfigError(
                f"unknown key {key!r} in section [{section}] "
                f"(known: {', '.join(sorted(known))})")
        attr = key.replace("-", "_")
        if getattr(args, f"_cli_set_{attr}", False):
            continue
        caster = known[key]
        try:
            value = caster(raw) if caster is not bool else raw.lower() in (
                "1", "true", "yes")
        except ValueError:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
        setattr(args, attr, value)
    for name in sections:
        if name != section:
            raise ConfigError(f"unexpected section [{name}] for {section}")


def _mark_explicit(args: argparse.Namespace, argv: List[str],
                   parser: argparse.ArgumentParser) -> None:
    seen = set()
    for tok in argv:
        if tok.startswith("--"):
            seen.add(tok.split("=", 1)[0].lstrip("-").replace("-", "_"))
    for name in seen:
        setattr(args, f"_cli_set_{name}", True)


# ---------------------------------------------------------------------------
# graph selection and output helpers
# ---------------------------------------------------------------------------

def resolve_graph(spec: str) -> G.Graph:
    """Named graph, `sp:<expression>`, `counterexample:<L>`,
    `double-sierpinski:<depth>`, or `file:<path>`."""
    if spec == "losange":
        return G.losange()
    if spec == "sublinear-demo":
        return G.sublinear_demo()
    if spec.startswith("counterexample:"):
        return G.counterexample(int(spec.split(":", 1)[1]))
    if spec.startswith("double-sierpinski:"):
        return G.double_sierpinski(int(spec.split(":", 1)[1]))
    if spec.startswith("sp:"):
        return G.sp_to_graph(G.parse_sp(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        return G.read_graph(spec.split(":", 1)[1])
    raise ConfigError(f"unknown graph spec {spec!r}")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return np.format_float_positional(float(x), unique=True, trim="0")


def write_csv(path: str, header: List[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_MAGIC + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_summary(path: str, payload: dict) -> None:
    payload = dict(payload)
    payload["schema_version"] = SCHEMA_VERSION
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _quantiles(values) -> dict:
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        return {}
    qs = (0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0)
    return {f"q{int(q * 100):02d}": float(np.quantile(a, q)) for q in qs}


def _schedule(kind: str, n_steps: int, ratio: float) -> np.ndarray:
    if kind == "geometric":
        return geometric_schedule(n_steps, ratio)
    if kind == "linear":
        return linear_schedule(n_steps)
    raise ConfigError(f"unknown schedule {kind!r}")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SIM_KEYS = {"graph": str, "rule": str, "alpha": float, "steps": int,
            "replicas": int, "seed": int, "schedule": str, "ratio": float,
            "step-cap": int, "out-dir": str}


def cmd_simulate(args: argparse.Namespace) -> int:
    apply_config(args, "simulate", SIM_KEYS)
    graph = resolve_graph(args.graph)
    if args.rule not in RULES:
        raise ConfigError(f"unknown rule {args.rule!r}")
    rule = ReinforcementRule(RULES[args.rule], alpha=args.alpha)
    rec = _schedule(args.schedule, args.steps, args.ratio)
    os.makedirs(args.out_dir, exist_ok=True)

    results: Dict[int, RunResult] = {}
    failures: Dict[int, str] = {}
    for r in range(args.replicas):
        try:
            results[r] = run_process(graph, rule, args.steps, args.seed,
                                     replica=r, record_steps=rec,
                                     step_cap=args.step_cap)
        except CapExceeded as e:
            failures[r] = str(e)
    if not results:
        print("error: all replicas exceeded the step cap", file=sys.stderr)
        return 3

    header = (["replica", "n"] + [f"W{e}" for e in range(graph.n_edges)]
              + ["C", "geo"])
    rows = []
    terminal_c = {}
    geo_tail = {}
    for r in sorted(results):
        res = results[r]
        for k, n in enumerate(res.record_steps):
            w = res.recorded_weights[k]
            c = laplacian_conductance(graph, w.astype(np.float64)).value
            rows.append([r, int(n)] + [int(x) for x in w]
                        + [c, int(res.geodesic_flags[n - 1])])
        terminal_c[r] = laplacian_conductance(
            graph, res.final_weights.astype(np.float64)).value / args.steps
        tail = max(1, args.steps // 10)
        geo_tail[r] = float(np.mean(res.geodesic_flags[-tail:]))
    csv_path = os.path.join(args.out_dir, "simulate.csv")
    write_csv(csv_path, header, rows)

    config_echo = {"subcommand": "simulate", "graph": args.graph,
                   "rule": args.rule, "alpha": args.alpha,
                   "steps": args.steps, "replicas": args.replicas,
                   "seed": args.seed, "schedule": args.schedule,
                   "ratio": args.ratio, "step_cap": args.step_cap}
    summary = {
        "config": config_echo,
        "csv": os.path.basename(csv_path),
        "h_min": G.h_min(graph),
        "h_max": G.h_max(graph),
        "replicas_completed": len(results),
        "failures": {str(k): v for k, v in failures.items()},
        "censoring_note": ("aggregates exclude CapExceeded replicas; "
                           "with failures present, treat aggregates as "
                           "conditional on completion"),
        "terminal_conductance_over_n": {str(r): terminal_c[r]
                                        for r in sorted(terminal_c)},
        "conductance_over_n": _quantiles(list(terminal_c.values())),
        "geodesic_fraction_tail": {str(r): geo_tail[r]
                                   for r in sorted(geo_tail)},
    }
    # fitted decay exponent of the slowest edge, when enough points exist
    any_res = results[sorted(results)[0]]
    if any_res.record_steps.size >= 10:
        wmin = any_res.recorded_weights.min(axis=1).astype(np.float64)
        try:
            slope, err = decay_exponent_fit(any_res.record_steps, wmin)
            summary["min_edge_loglog_slope"] = {"slope": slope, "stderr": err}
        except ValueError:
            pass
    out = os.path.join(args.out_dir, "simulate_summary.json")
    write_summary(out, summary)
    print(f"wrote {csv_path} and {out} "
          f"({len(results)}/{args.replicas} replicas)")

    if args.check:
        failed = []
        if args.graph == "losange":
            for r, res in results.items():
                w = res.recorded_weights
                n = res.record_steps
                if not (np.all(w[:, 0] + w[:, 3] == n + 2)
                        and np.all(w[:, 1] + w[:, 4] == n + 2)):
                    failed.append(f"replica {r}: losange identity violated")
        if failures and not results:
            failed.append("all replicas failed")
        if failed:
            for msg in failed:
                print("check failed:", msg, file=sys.stderr)
            return 4
        print("checks passed")
    return 0


# ---------------------------------------------------------------------------
# counterexample
# ---------------------------------------------------------------------------

CEX_KEYS = {"L": int, "steps": int, "replicas": int, "seed": int,
            "out-dir": str}


def cmd_counterexample(args: argparse.Namespace) -> int:
    apply_config(args, "counterexample", CEX_KEYS)
    if args.L < 2:
        raise ConfigError("L must be >= 2")
    os.makedirs(args.out_dir, exist_ok=True)
    xs = [10.0 ** e for e in np.arange(-4.0, -1.99, 0.5)]
    table = drift_table(args.L, xs)

    rec = geometric_schedule(args.steps)
    rows = []
    terminal = []
    for r in range(args.replicas):
        run = simulate_left_fraction(args.L, args.steps, args.seed, r,
                                     record_steps=rec)
        for k, n in enumerate(run.record_steps):
            rows.append([r, int(n), int(run.recorded_n1[k])])
        terminal.append(run.final_n1 / args.steps)
    csv_path = os.path.join(args.out_dir, "counterexample.csv")
    write_csv(csv_path, ["replica", "n", "N1"], rows)

    summary = {
        "config": {"subcommand": "counterexample", "L": args.L,
                   "steps": args.steps, "replicas": args.replicas,
                   "seed": args.seed},
        "csv": os.path.basename(csv_path),
        "exact_drift_table": [
            {"x": float(x), "p": float(p), "F": float(f)}
            for x, p, f in table],
        "terminal_left_fraction": _quantiles(terminal),
        "replicas_below_0.05": int(np.sum(np.asarray(terminal) < 0.05)),
    }
    out = os.path.join(args.out_dir, "counterexample_summary.json")
    write_summary(out, summary)
    print(f"wrote {csv_path} and {out}")
    if args.check:
        if not all(f < 0 for _, _, f in table):
            print("check failed: exact drift not negative near 0",
                  file=sys.stderr)
            return 4
        print("checks passed")
    return 0


# ---------------------------------------------------------------------------
# sublinear-superlinear
# ---------------------------------------------------------------------------

SUB_KEYS = {"alpha": float, "steps": int, "replicas": int, "seed": int,
            "threshold": float, "out-dir": str}


def cmd_sublinear(args: argparse.Namespace) -> int:
    apply_config(args, "sublinear-superlinear", SUB_KEYS)
    graph = G.sublinear_demo()  # edge 0: direct N-F; edges 1,2: series pair
    rule = ReinforcementRule("LoopErased", alpha=args.alpha)
    os.makedirs(args.out_dir, exist_ok=True)
    classes = {"direct-dominates": 0, "path-dominates": 0, "all-survive": 0}
    rows = []
    for r in range(args.replicas):
        res = run_process(graph, rule, args.steps, args.seed, replica=r,
                          record_steps=[args.steps])
        w = res.final_weights / (args.steps + 1.0)
        direct, path = w[0], min(w[1], w[2])
        if direct >= args.threshold and path < args.threshold:
            label = "direct-dominates"
        elif path >= args.threshold and direct < args.threshold:
            label = "path-dominates"
        else:
            label = "all-survive"
        classes[label] += 1
        rows.append([r, _fmt(w[0]), _fmt(w[1]), _fmt(w[2]), label])
    csv_path = os.path.join(args.out_dir, "sublinear.csv")
    write_csv(csv_path, ["replica", "w_direct", "w_path1", "w_path2",
                         "class"], rows)
    summary = {
        "config": {"subcommand": "sublinear-superlinear",
                   "alpha": args.alpha, "steps": args.steps,
                   "replicas": args.replicas, "seed": args.seed,
                   "threshold": args.threshold},
        "csv": os.path.basename(csv_path),
        "class_counts": classes,
    }
    out = os.path.join(args.out_dir, "sublinear_summary.json")
    write_summary(out, summary)
    print(f"wrote {csv_path} and {out}: {classes}")
    return 0


# ---------------------------------------------------------------------------
# conductance / losange-analytics / urn
# ---------------------------------------------------------------------------

def cmd_conductance(args: argparse.Namespace) -> int:
    if args.sp:
        expr = G.parse_sp(args.sp)
        weights = [float(v) for v in args.weights.split(",")]
        value = sp_conductance(expr, weights)
        print(_fmt(value))
        return 0
    graph = resolve_graph(args.graph)
    weights = np.array([float(v) for v in args.weights.split(",")])
    report = laplacian_conductance(graph, weights)
    print(_fmt(report.value))
    return 0


def cmd_losange(args: argparse.Namespace) -> int:
    if args.sweep:
        return _losange_sweep(args)
    if not args.point:
        raise ConfigError("need --point or --sweep")
    coords = [float(v) for v in args.point.split(",")]
    if len(coords) != 5:
        raise ConfigError("--point needs five comma-separated weights")
    w = LosangeWeights.from_array(coords)
    probs = p_vector_exact(w)
    payload = {
        "point": coords,
        "in_set_E": w.in_set_E(),
        "p": probs.as_dict(),
        "drift": [float(v) for v in drift_F(w)],
    }
    if args.inequalities:
        payload["inequalities"] = {
            name: {"status": r.status, "slack": r.slack}
            for name, r in inequality_suite(w).items()}
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _losange_sweep(args: argparse.Namespace) -> int:
    from .losange import sample_set_E
    from .rng import PhiloxStream

    os.makedirs(args.out_dir, exist_ok=True)
    stream = PhiloxStream(args.seed, 0)
    rows = []
    worst = {}
    violations = 0
    for k in range(args.sweep):
        w = sample_set_E(stream)
        out = inequality_suite(w)
        row = [k] + [_fmt(v) for v in w.as_array()]
        for name in ("W3", "p135p234", "F2", "F4F5F3"):
            r = out[name]
            row.append(r.status)
            row.append("" if r.status == "skipped" else _fmt(r.slack))
            if r.status == "fail":
                violations += 1
            if r.status == "pass":
                cur = worst.get(name)
                if cur is None or r.slack < cur:
                    worst[name] = r.slack
        rows.append(row)
    header = ["index", "w1", "w2", "w3", "w4", "w5"]
    for name in ("W3", "p135p234", "F2", "F4F5F3"):
        header += [f"{name}_status", f"{name}_slack"]
    csv_path = os.path.join(args.out_dir, "losange_sweep.csv")
    write_csv(csv_path, header, rows)
    summary = {
        "config": {"subcommand": "losange-analytics", "sweep": args.sweep,
                   "seed": args.seed},
        "csv": os.path.basename(csv_path),
        "violations": violations,
        "worst_slack": {k: float(v) for k, v in sorted(worst.items())},
    }
    out_path = os.path.join(args.out_dir, "losange_sweep_summary.json")
    write_summary(out_path, summary)
    print(f"wrote {csv_path} and {out_path} ({violations} violations)")
    if args.check and violations:
        print("check failed: inequality violations found", file=sys.stderr)
        return 4
    if args.check:
        print("checks passed")
    return 0


URN_KEYS = {"kind": str, "n": int, "replicas": int, "seed": int,
            "out-dir": str}


def cmd_urn(args: argparse.Namespace) -> int:
    apply_config(args, "urn", URN_KEYS)
    if args.kind not in URN_KINDS:
        raise ConfigError(f"unknown urn kind {args.kind!r}")
    spec = URN_KINDS[args.kind]()
    os.makedirs(args.out_dir, exist_ok=True)
    rec = geometric_schedule(args.n)
    rows = []
    terminal = []
    for r in range(args.replicas):
        run = run_urn(spec, args.n, args.seed, r, record_steps=rec)
        for k, n in enumerate(run.record_steps):
            rows.append([r, int(n), int(run.recorded_states[k])])
        terminal.append(run.final_state / args.n)
    csv_path = os.path.join(args.out_dir, "urn.csv")
    write_csv(csv_path, ["replica", "n", "R"], rows)
    summary = {
        "config": {"subcommand": "urn", "kind": args.kind, "n": args.n,
                   "replicas": args.replicas, "seed": args.seed},
        "csv": os.path.basename(csv_path),
        "terminal_fraction": _quantiles(terminal),
    }
    out = os.path.join(args.out_dir, "urn_summary.json")
    write_summary(out, summary)
    print(f"wrote {csv_path} and {out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="antnet",
        description="Reinforced ant-walk experiments on weighted graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--replicas", type=int, default=1)
        p.add_argument("--out-dir", default="antnet-out")
        p.add_argument("--config", default=None,
                       help="sectioned key=value config file")
        p.add_argument("--check", action="store_true",
                       help="validate invariants; exit 4 on failure")

    p = sub.add_parser("simulate", help="run the ant process")
    p.add_argument("--graph", default="losange")
    p.add_argument("--rule", default="loop-erased", choices=sorted(RULES))
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--schedule", default="geometric",
                   choices=("geometric", "linear"))
    p.add_argument("--ratio", type=float, default=1.1)
    p.add_argument("--step-cap", type=int, default=10 ** 7)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("counterexample",
                       help="two-geodesic ladder: exact drift + simulation")
    p.add_argument("--L", type=int, default=100)
    p.add_argument("--steps", type=int, default=10 ** 5)
    common(p)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("sublinear-superlinear",
                       help="nonlinear-exponent edge-survival classification")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=10 ** 4)
    p.add_argument("--threshold", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_sublinear)

    p = sub.add_parser("conductance", help="effective conductance N->F")
    p.add_argument("--graph", default="losange")
    p.add_argument("--sp", default=None,
                   help="series-parallel expression instead of --graph")
    p.add_argument("--weights", required=True,
                   help="comma-separated edge weights")
    p.set_defaults(func=cmd_conductance)

    p = sub.add_parser("losange-analytics",
                       help="exact losange reinforcement probabilities")
    p.add_argument("--point", default=None,
                   help="w1,w2,w3,w4,w5 normalized weights")
    p.add_argument("--inequalities", action="store_true")
    p.add_argument("--sweep", type=int, default=0,
                   help="sample this many points of E and write slack CSV")
    common(p)
    p.set_defaults(func=cmd_losange)

    p = sub.add_parser("urn", help="urn process simulation")
    p.add_argument("--kind", default="polya", choices=sorted(URN_KINDS))
    p.add_argument("--n", type=int, default=10 ** 4)
    common(p)
    p.set_defaults(func=cmd_urn)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    _mark_explicit(args, argv, parser)
    try:
        return args.func(args)
    except (ConfigError, G.GraphError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
