"""Simulation experiments: scoring, orchestration over trials, result files.

A trial draws one random system, one offline sample and one online sample at
the longest requested online length. Shorter online windows are prefixes of
that sample (the simulators lay their draws out time-major), so every online
length of a trial sees the same interventions and results pair up across
lengths.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .discovery import DiscoveryConfig, discover_summary
from .errors import ConfigError, GenerationError
from .graph import collapse_to_summary, max_roots_on_path
from .rca import detect_anomalies, trca, trca_agent
from .simulator import (
    ONLINE_EXPLICIT,
    ONLINE_OK,
    ONLINE_VIOLATED,
    LinearDscmParams,
    TdscmParams,
    generate_linear_dscm,
    generate_noise_shift_dscm,
    generate_tdscm,
    random_tscg,
    reference_fixer,
    summary_without_self_loops,
)
from .timeseries import TimeSeriesPanel, binarize, normalize, select_thresholds, shift_thresholds

GENERATORS = ("tdscm", "linear", "noise_shift")
THRESHOLD_POLICIES = ("true", "quantile", "sweep", "offset")
METHODS = ("trca", "agent")
GRAPH_SOURCES = ("learned", "oracle")
QUANTILE_GRID = tuple(round(0.8 + 0.02 * k, 2) for k in range(10))
#: fresh systems tried per trial before the trial is recorded as an error
MAX_TRIAL_RETRIES = 20

ROW_FIELDS = ("point", "online_length", "trial", "seed", "status", "f1",
              "true_roots", "found_roots", "anomalies", "clamped", "iterations")
AGGREGATE_FIELDS = ("point", "online_length", "n_ok", "n_errors", "mean_f1", "var_f1")


def f1_score(true_roots, found_roots) -> float:
    """``2TP / (2TP + FP + FN)``; two empty sets score 1."""
    c, c_hat = set(true_roots), set(found_roots)
    tp = len(c & c_hat)
    denom = 2 * tp + len(c_hat - c) + len(c - c_hat)
    if denom == 0:
        return 1.0
    return 2 * tp / denom


@dataclass(frozen=True)
class ExperimentConfig:
    generator: str = "tdscm"
    n_trials: int = 50
    online_lengths: tuple = (10, 50, 200)
    offline_length: int = 20_000
    scenario: str = ONLINE_OK
    thresholds: str = "true"
    proportion: float = 0.9
    proportions: tuple = QUANTILE_GRID
    offsets: tuple = (-0.05, 0.05)
    # None picks a default that suits the generator, see ``discovery_config``
    discovery: DiscoveryConfig | None = None
    method: str = "trca"
    graph: str = "learned"
    seed: int = 0
    n_vertices: int = 6
    degree_min: int = 4
    degree_max: int = 5
    shift: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "online_lengths", tuple(int(n) for n in self.online_lengths))
        object.__setattr__(self, "proportions", tuple(float(p) for p in self.proportions))
        object.__setattr__(self, "offsets", tuple(float(o) for o in self.offsets))
        problems = self.problems()
        if problems:
            raise ConfigError("invalid experiment config:\n  " + "\n  ".join(problems))

    def problems(self) -> list[str]:
        out = []

        def choice(name, allowed):
            if getattr(self, name) not in allowed:
                out.append(f"{name}: {getattr(self, name)!r} not one of {', '.join(allowed)}")

        choice("generator", GENERATORS)
        choice("thresholds", THRESHOLD_POLICIES)
        choice("method", METHODS)
        choice("graph", GRAPH_SOURCES)
        choice("scenario", (ONLINE_OK, ONLINE_VIOLATED))
        if self.n_trials < 1:
            out.append("n_trials: must be ≥ 1")
        if not self.online_lengths or min(self.online_lengths) < 1:
            out.append("online_lengths: need at least one length, all ≥ 1")
        if self.offline_length < 1:
            out.append("offline_length: must be ≥ 1")
        if not 0.0 < self.proportion < 1.0:
            out.append("proportion: must be in (0, 1)")
        if not self.proportions or not all(0.0 < p < 1.0 for p in self.proportions):
            out.append("proportions: need at least one value, all in (0, 1)")
        if self.thresholds == "offset" and not self.offsets:
            out.append("offsets: need at least one value for the offset policy")
        if self.jobs < 1:
            out.append("jobs: must be ≥ 1")
        if self.n_vertices < 2 or not 1 <= self.degree_min <= self.degree_max:
            out.append("graph size: need n_vertices ≥ 2 and 1 ≤ degree_min ≤ degree_max")
        if self.generator != "tdscm":
            if self.thresholds in ("true", "offset"):
                out.append(f"thresholds: {self.thresholds!r} needs the tdscm generator, "
                           "continuous generators have no true thresholds")
            if self.method == "agent":
                out.append("method: the agent loop needs the tdscm generator's trace fixer")
        return out

    @property
    def discovery_config(self) -> DiscoveryConfig:
        if self.discovery is not None:
            return self.discovery
        if self.generator == "tdscm":
            # capped anomaly runs make each series depend on its last 5 values
            return DiscoveryConfig(history=5)
        return DiscoveryConfig()

    def points(self) -> list[tuple[str, str, float | None]]:
        """Threshold settings as ``(label, kind, value)``."""
        if self.thresholds == "true":
            return [("true", "true", None)]
        if self.thresholds == "quantile":
            return [(f"q={self.proportion:.2f}", "quantile", self.proportion)]
        if self.thresholds == "sweep":
            return [(f"q={p:.2f}", "quantile", p) for p in self.proportions]
        return [(f"offset={o:+.2f}", "offset", o) for o in self.offsets]

    @classmethod
    def from_mapping(cls, doc: Mapping, **overrides) -> "ExperimentConfig":
        """Build from a parsed config file (``[experiment]`` and ``[discovery]`` tables).

        Every schema problem is collected and reported in one error.
        """
        problems = []
        exp = dict(doc.get("experiment", {}))
        disc = doc.get("discovery")
        for key in sorted(set(doc) - {"experiment", "discovery"}):
            problems.append(f"unknown table [{key}]")
        known = {f.name for f in fields(cls)} - {"discovery"}
        for key in sorted(set(exp) - known):
            problems.append(f"experiment.{key}: unknown key")
            exp.pop(key)
        exp.update({k: v for k, v in overrides.items() if v is not None})
        disc_cfg = None
        if disc is not None:
            dknown = {f.name for f in fields(DiscoveryConfig)}
            for key in sorted(set(disc) - dknown):
                problems.append(f"discovery.{key}: unknown key")
            try:
                disc_cfg = DiscoveryConfig(**{k: v for k, v in disc.items() if k in dknown})
            except (ConfigError, TypeError) as exc:
                problems.append(f"discovery: {exc}")
        types = {"n_trials": int, "offline_length": int, "seed": int, "n_vertices": int,
                 "degree_min": int, "degree_max": int, "jobs": int,
                 "proportion": float, "shift": float}
        for key, kind in types.items():
            if key in exp and not _is_number(exp[key], kind):
                problems.append(f"experiment.{key}: expected {kind.__name__}, got {exp[key]!r}")
                exp.pop(key)
        for key in ("online_lengths", "proportions", "offsets"):
            if key in exp and not (isinstance(exp[key], (list, tuple))
                                   and all(_is_number(v, float) for v in exp[key])):
                problems.append(f"experiment.{key}: expected a list of numbers")
                exp.pop(key)
        base = None
        try:
            base = cls(**exp)
        except ConfigError as exc:
            problems.extend(line.strip() for line in str(exc).splitlines()[1:])
        except TypeError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("invalid experiment config:\n  " + "\n  ".join(problems))
        return replace(base, discovery=disc_cfg)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["discovery"] = asdict(self.discovery_config)
        return doc


def _is_number(value, kind):
    if isinstance(value, bool):
        return False
    if kind is int:
        return isinstance(value, int)
    return isinstance(value, (int, float))


@dataclass(frozen=True)
class Row:
    point: str
    online_length: int
    trial: int
    seed: int
    status: str
    f1: float | None
    true_roots: tuple = ()
    found_roots: tuple = ()
    anomalies: tuple = ()
    clamped: int = 0
    iterations: int = 0
    offline_seconds: float = 0.0
    online_seconds: float = 0.0


@dataclass(frozen=True)
class Aggregate:
    point: str
    online_length: int
    n_ok: int
    n_errors: int
    mean_f1: float
    var_f1: float


@dataclass(frozen=True)
class ResultTable:
    rows: tuple = ()
    reference: Mapping[int, float] = field(default_factory=dict)

    def aggregates(self) -> list[Aggregate]:
        groups: dict = {}
        for row in self.rows:
            groups.setdefault((row.point, row.online_length), []).append(row)
        out = []
        for (point, length), rows in groups.items():
            scores = [r.f1 for r in rows if r.status == "ok"]
            mean, var = _mean_var(scores)
            out.append(Aggregate(point, length, len(scores), len(rows) - len(scores), mean, var))
        return out

    def f1(self, point: str, online_length: int) -> list[float]:
        return [r.f1 for r in self.rows
                if r.point == point and r.online_length == online_length and r.status == "ok"]


def _mean_var(scores):
    """Mean and population variance; nan for no scores."""
    if not scores:
        return math.nan, math.nan
    mean = math.fsum(scores) / len(scores)
    return mean, math.fsum((s - mean) ** 2 for s in scores) / len(scores)


def derived_seed(master: int, *path: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, path)]).generate_state(1)[0])


@dataclass
class _Trial:
    seed: int
    summary: object
    offline: TimeSeriesPanel
    true_thresholds: object
    online: list  # per online length: (panel, true roots, anomalies or None, trace or None)


def _draw_trial(cfg: ExperimentConfig, seed: int) -> _Trial:
    graph = random_tscg(cfg.n_vertices, cfg.degree_min, cfg.degree_max, seed=seed)
    longest = max(cfg.online_lengths)
    online_seed = derived_seed(seed, 1)
    if cfg.generator == "tdscm":
        params = TdscmParams.random(graph, seed)
        offline, _, _ = generate_tdscm(params, cfg.offline_length, seed=seed)
        _, _, full = generate_tdscm(params, longest, cfg.scenario, seed=online_seed)
        online = []
        for n in cfg.online_lengths:
            # same attempt and interventions, so this is a prefix of the full window
            panel, _, trace = generate_tdscm(params, n, ONLINE_EXPLICIT, online_seed,
                                             interventions=full.interventions,
                                             attempt=full.attempt)
            online.append((panel, trace.root_vertices, None, trace))
        return _Trial(seed, collapse_to_summary(graph), offline, params.thresholds, online)
    params = LinearDscmParams.random(graph, seed)
    if cfg.generator == "linear":
        offline = generate_linear_dscm(params, cfg.offline_length, seed=seed).panel
        sample = generate_linear_dscm(params, longest, cfg.scenario, seed=online_seed)
    else:
        offline = generate_noise_shift_dscm(params, cfg.offline_length, shift=cfg.shift,
                                            seed=seed).panel
        sample = generate_noise_shift_dscm(params, longest, cfg.scenario, shift=cfg.shift,
                                           seed=online_seed)
    online = []
    for n in cfg.online_lengths:
        panel = TimeSeriesPanel(sample.panel.names, sample.panel.values[:, :n])
        online.append((normalize(panel, reference=offline), sample.root_causes,
                       sample.anomalies, None))
    return _Trial(seed, collapse_to_summary(graph), normalize(offline), None, online)


def _thresholds_for(trial: _Trial, kind, value):
    if kind == "true":
        return trial.true_thresholds, 0
    if kind == "offset":
        spec, clamped = shift_thresholds(trial.true_thresholds, value)
        return spec, len(clamped)
    return select_thresholds(trial.offline, value), 0


def _score_point(cfg, trial, trial_id, label, kind, value):
    spec, clamped = _thresholds_for(trial, kind, value)
    start = time.perf_counter()
    if cfg.graph == "learned":
        graph = discover_summary(binarize(trial.offline, spec), cfg.discovery_config)
    else:
        graph = trial.summary
    offline_seconds = time.perf_counter() - start
    oracle = summary_without_self_loops(trial.summary)
    rows = []
    for n, (panel, roots, given, trace) in zip(cfg.online_lengths, trial.online):
        start = time.perf_counter()
        online = binarize(panel, spec)
        anomalies, tau = detect_anomalies(online)
        iterations = 0
        if given is not None:
            # continuous generators report the anomalous set; tau comes from the window
            anomalies = given
            tau = {v: tau.get(v, n) for v in given}
        if cfg.method == "agent":
            m = max_roots_on_path(oracle, roots & anomalies, anomalies)
            report = trca_agent(graph, online,
                                lambda cur, fixed, tr=trace: reference_fixer(cur, fixed, tr),
                                max_iterations=max(m, 1))
            found = report.root_causes
            iterations = len(report.iterations)
        else:
            found = trca(graph, anomalies, tau)
        online_seconds = time.perf_counter() - start
        rows.append(Row(label, n, trial_id, trial.seed, "ok", f1_score(roots, found),
                        tuple(sorted(roots)), tuple(sorted(found)), tuple(sorted(anomalies)),
                        clamped, iterations, offline_seconds, online_seconds))
    return rows


def _run_trial(cfg: ExperimentConfig, trial_id: int, points) -> list[Row]:
    trial = None
    for retry in range(MAX_TRIAL_RETRIES):
        seed = derived_seed(cfg.seed, trial_id, retry)
        try:
            trial = _draw_trial(cfg, seed)
            break
        except GenerationError:
            continue
    if trial is None:
        return [Row(label, n, trial_id, seed, "error", None)
                for label, _, _ in points for n in cfg.online_lengths]
    rows = []
    for label, kind, value in points:
        rows.extend(_score_point(cfg, trial, trial_id, label, kind, value))
    return rows


def _execute(cfg: ExperimentConfig, points) -> tuple:
    trials = range(cfg.n_trials)
    if cfg.jobs > 1 and cfg.n_trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_run_trial, [cfg] * cfg.n_trials, trials,
                                   [points] * cfg.n_trials))
    else:
        chunks = [_run_trial(cfg, t, points) for t in trials]
    order = {label: k for k, (label, _, _) in enumerate(points)}
    lengths = {n: k for k, n in enumerate(cfg.online_lengths)}
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (order[r.point], lengths[r.online_length], r.trial))
    return tuple(rows)


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    """Run every trial at every threshold point and online length.

    Deterministic given ``cfg.seed``; the number of jobs does not change the
    table apart from the wall-time columns.
    """
    return ResultTable(_execute(cfg, cfg.points()))


def threshold_sweep(cfg: ExperimentConfig) -> ResultTable:
    """Run a quantile grid or an offset grid.

    For the tdscm generator the table also carries the mean F1 obtained with
    the true thresholds, per online length, as ``reference``.
    """
    if cfg.thresholds not in ("sweep", "offset"):
        raise ConfigError("threshold_sweep needs thresholds = 'sweep' or 'offset'")
    points = cfg.points()
    reference = {}
    if cfg.generator == "tdscm":
        points = points + [("true", "true", None)]
    rows = _execute(cfg, points)
    if cfg.generator == "tdscm":
        ref_rows = [r for r in rows if r.point == "true"]
        rows = tuple(r for r in rows if r.point != "true")
        ref = ResultTable(tuple(ref_rows))
        reference = {a.online_length: a.mean_f1 for a in ref.aggregates()}
    return ResultTable(rows, reference)


# -- output --------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ";".join(value)
    return str(value)


def emit_results(table: ResultTable, out_dir, timings: bool = False) -> list[Path]:
    """Write rows.csv, aggregates.csv and f1.svg (and timings.csv on request).

    Wall times vary run to run, so they stay out of the default files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "rows.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in table.rows:
            w.writerow([_fmt(getattr(r, k)) for k in ROW_FIELDS])
    written.append(path)
    aggregates = table.aggregates()
    path = out / "aggregates.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_FIELDS)
        for a in aggregates:
            w.writerow([_fmt(getattr(a, k)) for k in AGGREGATE_FIELDS])
        for n, value in sorted(table.reference.items()):
            w.writerow(["reference:true", n, "", "", _fmt(value), ""])
    written.append(path)
    if timings:
        path = out / "timings.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("point", "online_length", "trial", "offline_seconds", "online_seconds"))
            for r in table.rows:
                w.writerow([r.point, r.online_length, r.trial,
                            _fmt(r.offline_seconds), _fmt(r.online_seconds)])
        written.append(path)
    if aggregates:
        path = out / "f1.svg"
        path.write_text(render_svg(aggregates), encoding="utf-8")
        written.append(path)
    return written


def format_aggregates(table: ResultTable) -> str:
    lines = [f"{'point':<16}{'T_on':>6}{'ok':>5}{'err':>5}{'mean F1':>10}{'var F1':>10}"]
    for a in table.aggregates():
        lines.append(f"{a.point:<16}{a.online_length:>6}{a.n_ok:>5}{a.n_errors:>5}"
                     f"{a.mean_f1:>10.4f}{a.var_f1:>10.4f}")
    for n, value in sorted(table.reference.items()):
        lines.append(f"{'reference:true':<16}{n:>6}{'':>5}{'':>5}{value:>10.4f}")
    return "\n".join(lines) + "\n"


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def render_svg(aggregates: Sequence[Aggregate], width: int = 480, height: int = 320) -> str:
    """Mean F1 with a mean ± variance band.

    With several online lengths the x axis is the online length and there is
    one line per threshold point; with a single length (a sweep) the x axis is
    the sweep point instead.
    """
    lengths = sorted({a.online_length for a in aggregates})
    points = list(dict.fromkeys(a.point for a in aggregates))
    if len(lengths) > 1 or len(points) == 1:
        xs = lengths
        series = {p: [(a.online_length, a) for a in aggregates if a.point == p] for p in points}
        xlabels = [str(n) for n in xs]
        xpos = {n: k for k, n in enumerate(xs)}
        axis = "online length"
    else:
        xs = points
        series = {f"T_on={lengths[0]}": [(a.point, a) for a in aggregates]}
        xlabels = points
        xpos = {p: k for k, p in enumerate(points)}
        axis = "threshold point"
    left, right, top, bottom = 50, 20, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (pw * xpos[x] / (len(xs) - 1) if len(xs) > 1 else pw / 2)

    def py(y):
        return top + ph * (1.0 - min(max(y, 0.0), 1.0))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
             f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>']
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{left - 6}" y="{py(tick) + 4:.1f}" font-size="10" '
                     f'text-anchor="end">{tick:.2f}</text>')
    for x, label in zip(xs, xlabels):
        parts.append(f'<text x="{px(x):.1f}" y="{top + ph + 14}" font-size="10" '
                     f'text-anchor="middle">{label}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" font-size="11" '
                 f'text-anchor="middle">{axis}</text>')
    for k, (name, pts) in enumerate(series.items()):
        color = _PALETTE[k % len(_PALETTE)]
        pts = [(x, a) for x, a in pts if not math.isnan(a.mean_f1)]
        if not pts:
            continue
        upper = [f"{px(x):.1f},{py(a.mean_f1 + a.var_f1):.1f}" for x, a in pts]
        lower = [f"{px(x):.1f},{py(a.mean_f1 - a.var_f1):.1f}" for x, a in reversed(pts)]
        parts.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                     f'fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{px(x):.1f},{py(a.mean_f1):.1f}" for x, a in pts)
        parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2">'
                     f'<title>{name}</title></polyline>')
        parts.append(f'<text x="{left + 8}" y="{top + 12 + 12 * k}" font-size="10" '
                     f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
