"""Command line entry point: ``trca discover | detect | simulate | evaluate | sweep``.

Exit codes: 0 success, 2 configuration error, 3 data error (including a
remediated panel that breaks the fixer contract), 4 agent run that stopped
with anomalies left.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import graph as graphs
from .discovery import DiscoveryConfig, discover_window_graph
from .errors import ConfigError, ContractViolation, DataError, GenerationError, ParseError
from .evaluation import ExperimentConfig, emit_results, format_aggregates, run_experiment, threshold_sweep
from .graph import SummaryGraph, WindowGraph, collapse_to_summary
from .rca import analyze, trca_agent
from .simulator import (
    OFFLINE,
    ONLINE_OK,
    ONLINE_VIOLATED,
    GroundTruthTrace,
    LinearDscmParams,
    TdscmParams,
    generate_linear_dscm,
    generate_noise_shift_dscm,
    generate_tdscm,
    random_tscg,
    reference_fixer,
)
from .timeseries import (
    BinaryPanel,
    ThresholdSpec,
    binarize,
    load_panel,
    normalize,
    save_panel,
    select_thresholds,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("trca")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INCOMPLETE = 0, 2, 3, 4


# -- helpers -----------------------------------------------------------------

def _read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _load_thresholds(path) -> ThresholdSpec:
    doc = _read_toml(path)
    table = doc.get("thresholds", doc)
    return ThresholdSpec.from_mapping(table)


def _load_graph(path) -> SummaryGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    try:
        g = graphs.from_json(text) if str(path).endswith(".json") else graphs.from_edge_list(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return collapse_to_summary(g) if isinstance(g, WindowGraph) else g


def _load_panel(path):
    try:
        return load_panel(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _load_bits(path) -> BinaryPanel:
    panel = _load_panel(path)
    values = panel.values
    if not ((values == 0) | (values == 1)).all():
        raise ParseError(f"{path}: --bits expects a panel of 0/1 values")
    return BinaryPanel(panel.names, values.astype("uint8"))


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _discovery_from_args(args) -> DiscoveryConfig:
    return DiscoveryConfig(gamma_max=args.gamma_max, alpha=args.alpha,
                           max_condition_set_size=args.max_condition_set_size,
                           include_self_causes=not args.no_self_causes, history=args.history)


def _default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


# -- discover ----------------------------------------------------------------

def cmd_discover(args) -> int:
    cfg = _discovery_from_args(args)
    if (args.thresholds is None) == (args.proportion is None):
        raise ConfigError("give exactly one of --thresholds or --proportion")
    panel = _load_panel(args.offline)
    log.info("loaded %d series x %d steps from %s", panel.d, panel.T, args.offline)
    if args.normalize:
        panel = normalize(panel)
    if args.thresholds is not None:
        spec = _load_thresholds(args.thresholds)
    else:
        spec = select_thresholds(panel, args.proportion)
    bits = binarize(panel, spec)
    audit = [] if args.audit else None
    wg = discover_window_graph(bits, cfg, audit=audit, n_jobs=args.jobs or _default_jobs())
    summary = collapse_to_summary(wg)
    out = Path(args.out)
    _write(out / "graph.json", graphs.to_json(summary))
    _write(out / "window_graph.json", graphs.to_json(wg))
    _write(out / "graph.txt", graphs.to_edge_list(wg))
    _write(out / "thresholds.toml", spec.to_toml())
    if audit is not None:
        _write(out / "audit.jsonl",
               "".join(json.dumps(r.as_dict(), sort_keys=True) + "\n" for r in audit))
    print(f"discovered {len(wg.edges)} lagged edges, {len(summary.edges)} summary edges "
          f"over {len(summary.vertices)} series (T={bits.T})")
    for s, t in summary.sorted_edges():
        print(f"  {s} -> {t}")
    print(f"wrote {out}")
    return EXIT_OK


# -- detect ------------------------------------------------------------------

def _manual_fixer(thresholds, reference):
    def fix(current, roots):
        print("fix: " + ",".join(sorted(roots)), flush=True)
        line = sys.stdin.readline()
        if not line.strip():
            # no remediated panel: keep the window as it is, which ends the loop
            return current
        panel = _load_panel(line.strip())
        if panel.names != current.names:
            raise DataError("remediated panel has different series than the online panel")
        if thresholds is None:
            return _load_bits(line.strip())
        if reference is not None:
            panel = normalize(panel, reference=reference)
        return binarize(panel, thresholds)
    return fix


def cmd_detect(args) -> int:
    g = _load_graph(args.graph)
    if args.bits == (args.thresholds is not None):
        raise ConfigError("give exactly one of --thresholds or --bits")
    if args.fixer and not args.agent:
        raise ConfigError("--fixer needs --agent")
    if args.agent and args.fixer == "trace" and not args.trace:
        raise ConfigError("--fixer trace needs --trace")
    reference = None
    thresholds = None
    if args.bits:
        online = _load_bits(args.online)
    else:
        thresholds = _load_thresholds(args.thresholds)
        panel = _load_panel(args.online)
        if args.reference:
            reference = _load_panel(args.reference)
            panel = normalize(panel, reference=reference)
        online = binarize(panel, thresholds)
    if args.agent:
        if args.fixer == "trace":
            try:
                trace = GroundTruthTrace.from_json(Path(args.trace).read_text(encoding="utf-8"))
            except OSError as exc:
                raise DataError(f"cannot read {args.trace}: {exc.strerror}") from None
            except (KeyError, ValueError) as exc:
                raise ParseError(f"{args.trace}: malformed trace ({exc})") from None

            def fixer(current, roots):
                return reference_fixer(current, roots, trace)
        else:
            fixer = _manual_fixer(thresholds, reference)
        limit = args.max_iterations or len(g.vertices)
        report = trca_agent(g, online, fixer, limit, tie_break=args.tie_break, seed=args.seed)
    else:
        report = analyze(g, online, tie_break=args.tie_break, seed=args.seed)
    out = Path(args.out)
    _write(out / "report.json", report.to_json())
    print(f"online window: {report.window_length} steps, analysed as one incident")
    print(f"anomalous series: {', '.join(sorted(report.anomalies)) or '(none)'}")
    print(f"root causes: {', '.join(sorted(report.root_causes)) or '(none)'}")
    if report.unresolved_components:
        comps = "; ".join("{" + ", ".join(c) + "}" for c in report.unresolved_components)
        print(f"unresolved components (anomalous parent outside): {comps}")
    if args.agent:
        print(f"agent rounds: {len(report.iterations)}"
              + ("" if report.complete else " (stopped with anomalies left)"))
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK if report.complete else EXIT_INCOMPLETE


# -- simulate ----------------------------------------------------------------

def _save_trial_dir(path: Path, panel, bits, trace_doc: str, graph_doc: str):
    path.mkdir(parents=True, exist_ok=True)
    save_panel(panel, path / "panel.csv")
    if bits is not None:
        save_panel(bits, path / "bits.csv")
    _write(path / "trace.json", trace_doc)
    _write(path / "graph.json", graph_doc)


def _linear_trace(sample, params) -> str:
    doc = {
        "generator": "linear",
        "scenario": sample.scenario,
        "seed": sample.seed,
        "T": sample.panel.T,
        "root_causes": sorted(sample.root_causes),
        "anomalies": sorted(sample.anomalies),
        "noise_scale": params.noise_scale,
        "coefficients": [[s, lag, t, c] for (s, lag, t), c in sorted(sample.coefficients.items())],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_simulate(args) -> int:
    g = random_tscg(args.n_vertices, args.degree_min, args.degree_max, seed=args.seed)
    graph_doc = graphs.to_json(g)
    out = Path(args.out)
    online_seed = args.seed + 1
    if args.generator == "tdscm":
        params = TdscmParams.random(g, args.seed)
        off_panel, off_bits, off_trace = generate_tdscm(params, args.offline_length, OFFLINE,
                                                        seed=args.seed)
        on_panel, on_bits, on_trace = generate_tdscm(params, args.online_length, args.scenario,
                                                     seed=online_seed)
        _save_trial_dir(out / "offline", off_panel, off_bits, off_trace.to_json(), graph_doc)
        _save_trial_dir(out / "online", on_panel, on_bits, on_trace.to_json(), graph_doc)
        _write(out / "thresholds.toml", params.thresholds.to_toml())
        roots, anomalies = on_trace.root_vertices, on_bits.bits.any(axis=1).sum()
    else:
        params = LinearDscmParams.random(g, args.seed)
        if args.generator == "linear":
            off = generate_linear_dscm(params, args.offline_length, OFFLINE, seed=args.seed)
            on = generate_linear_dscm(params, args.online_length, args.scenario, seed=online_seed)
        else:
            off = generate_noise_shift_dscm(params, args.offline_length, OFFLINE,
                                            shift=args.shift, seed=args.seed)
            on = generate_noise_shift_dscm(params, args.online_length, args.scenario,
                                           shift=args.shift, seed=online_seed)
        _save_trial_dir(out / "offline", off.panel, None, _linear_trace(off, params), graph_doc)
        _save_trial_dir(out / "online", on.panel, None, _linear_trace(on, params), graph_doc)
        roots, anomalies = on.root_causes, len(on.anomalies)
    print(f"{args.generator} trial, scenario {args.scenario}, seed {args.seed}: "
          f"{len(g.vertices)} vertices, {len(g.edges)} lagged edges")
    print(f"online root causes: {', '.join(sorted(roots))}; anomalous series: {anomalies}")
    print(f"wrote {out}")
    return EXIT_OK


# -- evaluate / sweep --------------------------------------------------------

def bundled_configs() -> list[str]:
    return sorted(p.name for p in resources.files("trca.configs").iterdir()
                  if p.name.endswith(".toml"))


def _resolve_config(name) -> dict:
    path = Path(name)
    if path.is_file():
        return _read_toml(path)
    stem = name if name.endswith(".toml") else name + ".toml"
    if stem in bundled_configs():
        return tomllib.loads(resources.files("trca.configs").joinpath(stem).read_text("utf-8"))
    raise ConfigError(f"no config file {name!r}; bundled configs: {', '.join(bundled_configs())}")


def _experiment_from_args(args) -> ExperimentConfig:
    doc = _resolve_config(args.config)
    overrides = {
        "n_trials": args.trials,
        "seed": args.seed,
        "generator": args.generator,
        "scenario": args.scenario,
        "method": args.method,
        "graph": args.graph_source,
        "offline_length": args.offline_length,
        "online_lengths": tuple(args.online_lengths) if args.online_lengths else None,
        "jobs": args.jobs or _default_jobs(),
    }
    return ExperimentConfig.from_mapping(doc, **overrides)


def _print_plan(cfg: ExperimentConfig, sweep: bool):
    points = [p[0] for p in cfg.points()]
    if sweep and cfg.generator == "tdscm":
        points.append("true (reference)")
    print(f"generator {cfg.generator}, scenario {cfg.scenario}, method {cfg.method}, "
          f"{cfg.graph} graph, seed {cfg.seed}")
    print(f"trials: {cfg.n_trials}; offline length: {cfg.offline_length}; "
          f"online lengths: {', '.join(map(str, cfg.online_lengths))}")
    print(f"threshold points ({len(points)}): {', '.join(points)}")
    print(f"discovery: {cfg.discovery_config}")
    total = len(points) * len(cfg.online_lengths) * cfg.n_trials
    print(f"planned runs: {total}")


def _run_grid(args, sweep: bool) -> int:
    cfg = _experiment_from_args(args)
    if sweep and cfg.thresholds not in ("sweep", "offset"):
        raise ConfigError("sweep needs experiment.thresholds = 'sweep' or 'offset'")
    if args.dry_run:
        _print_plan(cfg, sweep)
        return EXIT_OK
    log.info("running %d trials with %d jobs", cfg.n_trials, cfg.jobs)
    table = threshold_sweep(cfg) if sweep else run_experiment(cfg)
    written = emit_results(table, args.out, timings=args.timings)
    sys.stdout.write(format_aggregates(table))
    print("wrote " + ", ".join(str(p) for p in written))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    return _run_grid(args, sweep=False)


def cmd_sweep(args) -> int:
    return _run_grid(args, sweep=True)


# -- parser ------------------------------------------------------------------

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be ≥ 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trca", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="learn the summary graph from an offline CSV")
    p.add_argument("offline", help="wide CSV of offline values")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--thresholds", help="TOML file mapping series names to thresholds")
    p.add_argument("--proportion", type=float, help="pick thresholds as this offline quantile")
    p.add_argument("--normalize", action="store_true", help="min-max scale series first")
    p.add_argument("--gamma-max", type=_positive_int, default=1)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--max-condition-set-size", type=int, default=3)
    p.add_argument("--history", type=int, default=0,
                   help="own past values added to every cross-series test")
    p.add_argument("--no-self-causes", action="store_true")
    p.add_argument("--audit", action="store_true", help="write every CI test to audit.jsonl")
    p.add_argument("--jobs", type=_positive_int, help="worker threads (default: all CPUs)")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("detect", help="find root causes in an online window")
    p.add_argument("graph", help="graph.json or edge-list file")
    p.add_argument("online", help="wide CSV of online values (or bits with --bits)")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--thresholds", help="TOML thresholds (as written by discover)")
    p.add_argument("--bits", action="store_true", help="online CSV already holds 0/1 values")
    p.add_argument("--reference", help="offline CSV whose scaling normalizes the online panel")
    p.add_argument("--agent", action="store_true", help="alternate detection and remediation")
    p.add_argument("--fixer", choices=("manual", "trace"), default=None)
    p.add_argument("--trace", help="trace.json for --fixer trace")
    p.add_argument("--max-iterations", type=_positive_int)
    p.add_argument("--tie-break", choices=("lexicographic", "random"), default="lexicographic")
    p.add_argument("--seed", type=int, default=None, help="seed for --tie-break random")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="write a synthetic offline/online trial directory")
    p.add_argument("--generator", choices=("tdscm", "linear", "noise_shift"), default="tdscm")
    p.add_argument("--scenario", choices=(ONLINE_OK, ONLINE_VIOLATED), default=ONLINE_OK)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offline-length", type=_positive_int, default=20_000)
    p.add_argument("--online-length", type=_positive_int, default=200)
    p.add_argument("--n-vertices", type=_positive_int, default=6)
    p.add_argument("--degree-min", type=_positive_int, default=4)
    p.add_argument("--degree-max", type=_positive_int, default=5)
    p.add_argument("--shift", type=float, default=1.0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_simulate)

    for name, func, text in (("evaluate", cmd_evaluate, "run an experiment grid"),
                             ("sweep", cmd_sweep, "run a threshold sweep")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="TOML config path or bundled config name")
        p.add_argument("-o", "--out", default="results")
        p.add_argument("--trials", type=_positive_int)
        p.add_argument("--seed", type=int)
        p.add_argument("--generator")
        p.add_argument("--scenario")
        p.add_argument("--method")
        p.add_argument("--graph-source", choices=("learned", "oracle"))
        p.add_argument("--offline-length", type=_positive_int)
        p.add_argument("--online-lengths", type=_positive_int, nargs="+")
        p.add_argument("--jobs", type=_positive_int, help="worker processes (default: all CPUs)")
        p.add_argument("--dry-run", action="store_true", help="print the planned grid and stop")
        p.add_argument("--timings", action="store_true", help="also write timings.csv")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ContractViolation) as exc:
        # a manual fixer's remediated panel counts as input data
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
