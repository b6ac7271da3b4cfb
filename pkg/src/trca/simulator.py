"""Synthetic systems with known root causes.

Three generators are provided:

* ``generate_tdscm``: binary anomaly propagation. A vertex is anomalous when an
  anomalous lagged parent gets through its non-immunity gate ``u``, or when it
  is hit by an intervention ``i``.
* ``generate_linear_dscm``: lag-1 linear autoregression where the online
  window resamples the incoming coefficients of two vertices.
* ``generate_noise_shift_dscm``: the same linear system where the online window
  adds a constant to the noise of two vertices.

All randomness for one call is seeded from ``(seed, attempt)`` and exogenous
draws are laid out time-major, so a shorter online window is a prefix of a
longer one generated with the same seed.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, GenerationError, InputError
from .graph import (
    SummaryGraph,
    WindowGraph,
    ancestors,
    check_assumption5,
    collapse_to_summary,
    descendants,
)
from .timeseries import BinaryPanel, ThresholdSpec, TimeSeriesPanel

OFFLINE = "offline"
ONLINE_OK = "online_assumption5_ok"
ONLINE_VIOLATED = "online_assumption5_violated"
ONLINE_EXPLICIT = "online"
SCENARIOS = (OFFLINE, ONLINE_OK, ONLINE_VIOLATED)

MAX_ATTEMPTS = 200
#: online interventions are placed in the first few steps so every window length sees them
PLACEMENT_WINDOW = 5


def _rng(seed, attempt=0, stream=0):
    return np.random.default_rng([int(seed), int(attempt), int(stream)])


# -- graphs ------------------------------------------------------------------

def random_tscg(n: int, degree_min: int, degree_max: int, n_root_vertices: int = 1,
                seed: int = 0, self_loops: bool = True, names: Sequence[str] | None = None,
                max_tries: int = 10_000) -> WindowGraph:
    """Random lag-1 DAG (plus self-loops) with a fixed number of parentless vertices
    and a maximum total degree inside ``[degree_min, degree_max]``."""
    if n < 2:
        raise ConfigError("need at least 2 vertices")
    if not 1 <= n_root_vertices <= n or degree_min > degree_max or degree_max > 2 * (n - 1):
        raise ConfigError("infeasible degree / root-count combination")
    names = list(names) if names is not None else [f"X{i}" for i in range(n)]
    if len(names) != n:
        raise ConfigError("names must have length n")
    rng = _rng(seed)
    for _ in range(max_tries):
        order = rng.permutation(n)
        p = rng.uniform(0.2, 0.9)
        adj = np.triu(rng.random((n, n)) < p, k=1)
        if _tscg_ok(adj, degree_min, degree_max, n_root_vertices):
            edges = {(names[order[a]], 1, names[order[b]]) for a, b in zip(*np.nonzero(adj))}
            if self_loops:
                edges |= {(v, 1, v) for v in names}
            return WindowGraph(tuple(names), frozenset(edges), 1)
    raise GenerationError(f"no graph satisfied the constraints after {max_tries} tries; "
                          "try another seed or relax the degree bounds")


def _tscg_ok(adj, degree_min, degree_max, n_roots):
    indeg = adj.sum(axis=0)
    degree = indeg + adj.sum(axis=1)
    return int((indeg == 0).sum()) == n_roots and degree_min <= degree.max() <= degree_max


def summary_without_self_loops(g: SummaryGraph) -> SummaryGraph:
    return SummaryGraph(g.vertices, frozenset((s, t) for s, t in g.edges if s != t))


# -- T-DSCM ------------------------------------------------------------------

@dataclass(frozen=True)
class TdscmParams:
    """Parameters of a binary propagation system.

    ``epsilon[v]`` is the chance that one anomalous lagged parent passes its
    anomaly to ``v``; with ``k`` anomalous parents the gate opens with
    probability ``1 - (1 - epsilon[v]) ** k``. ``epsilon = 1`` is deterministic
    propagation.
    """

    graph: WindowGraph
    epsilon: Mapping[str, float]
    beta: float
    thresholds: ThresholdSpec
    max_consecutive_anomaly: int | None = 5

    def __post_init__(self):
        eps = {v: float(self.epsilon.get(v, 1.0)) for v in self.graph.vertices}
        for v, e in eps.items():
            if not 0.0 < e <= 1.0:
                raise ConfigError(f"epsilon for {v!r} must be in (0, 1], got {e}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must be in (0, 1), got {self.beta}")
        self.thresholds.vector(self.graph.vertices)
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def random(cls, graph: WindowGraph, seed: int, p_uncertain: float = 0.3,
               uncertain_epsilon: float = 0.7, beta: float = 0.1,
               threshold_range=(0.7, 0.9), max_consecutive_anomaly: int | None = 5) -> "TdscmParams":
        rng = _rng(seed, 1_000_003)
        names = graph.vertices
        eps = {v: (uncertain_epsilon if rng.random() < p_uncertain else 1.0) for v in names}
        thr = {v: float(rng.uniform(*threshold_range)) for v in names}
        return cls(graph, eps, beta, ThresholdSpec.fixed(thr), max_consecutive_anomaly)

    def to_dict(self):
        return {
            "graph": {"vertices": list(self.graph.vertices), "gamma_max": self.graph.gamma_max,
                      "edges": [[s, lag, t] for s, lag, t in self.graph.sorted_edges()]},
            "epsilon": dict(sorted(self.epsilon.items())),
            "beta": self.beta,
            "thresholds": dict(sorted(self.thresholds.values.items())),
            "max_consecutive_anomaly": self.max_consecutive_anomaly,
        }

    @classmethod
    def from_dict(cls, doc) -> "TdscmParams":
        g = doc["graph"]
        graph = WindowGraph(tuple(g["vertices"]), frozenset(tuple(e) for e in g["edges"]),
                            g["gamma_max"])
        return cls(graph, doc["epsilon"], doc["beta"], ThresholdSpec.fixed(doc["thresholds"]),
                   doc["max_consecutive_anomaly"])


def lag_adjacency(graph: WindowGraph, names: Sequence[str]) -> np.ndarray:
    """``A[lag - 1, source, target] = 1`` for every lagged edge."""
    pos = {v: i for i, v in enumerate(names)}
    adj = np.zeros((graph.gamma_max, len(names), len(names)), dtype=np.int64)
    for s, lag, t in graph.edges:
        adj[lag - 1, pos[s], pos[t]] = 1
    return adj


def anomalous_parent_counts(bits: np.ndarray, t: int, adj: np.ndarray) -> np.ndarray:
    """Number of lagged parents of each vertex that are anomalous for time ``t``."""
    counts = np.zeros(bits.shape[0], dtype=np.int64)
    for lag in range(1, adj.shape[0] + 1):
        if t - lag >= 0:
            counts += bits[:, t - lag].astype(np.int64) @ adj[lag - 1]
    return counts


def tdscm_step(bits: np.ndarray, t: int, adj: np.ndarray, u: np.ndarray, i: np.ndarray) -> np.ndarray:
    """Structural update for column ``t``: ``(OR of lagged parents AND u) OR i``."""
    any_parent = anomalous_parent_counts(bits, t, adj) > 0
    return ((any_parent & (u > 0)) | (i > 0)).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class GroundTruthTrace:
    """Exogenous draws and the true root causes of one generated sample.

    ``u_draws``/``i_draws`` are the realized binary gates, shape ``(d, T)``.
    ``root_causes`` holds ``(vertex, t)`` for every realized intervention.
    """

    params: TdscmParams
    scenario: str
    seed: int
    attempt: int
    names: tuple
    u_draws: np.ndarray
    i_draws: np.ndarray
    root_causes: frozenset
    capped: tuple = ()
    interventions: tuple = ()
    # uniforms behind the draws, kept so a remediated sample can be re-simulated
    u_uniform: np.ndarray = field(default=None, repr=False)
    value_uniform: np.ndarray = field(default=None, repr=False)

    @property
    def T(self) -> int:
        return self.u_draws.shape[1]

    @property
    def root_vertices(self) -> frozenset:
        return frozenset(v for v, _ in self.root_causes)

    def to_json(self) -> str:
        doc = {
            "generator": "tdscm",
            "scenario": self.scenario,
            "seed": self.seed,
            "attempt": self.attempt,
            "T": self.T,
            "params": self.params.to_dict(),
            "names": list(self.names),
            "interventions": [list(p) for p in self.interventions],
            "root_causes": sorted([v, t] for v, t in self.root_causes),
            "capped": [list(c) for c in self.capped],
            "u_draws": self.u_draws.tolist(),
            "i_draws": self.i_draws.tolist(),
        }
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruthTrace":
        """Rebuild a trace, re-deriving the uniforms by re-running the generator."""
        doc = json.loads(text)
        params = TdscmParams.from_dict(doc["params"])
        interventions = [tuple(p) for p in doc["interventions"]]
        scenario = doc["scenario"]
        if scenario == OFFLINE:
            _, _, trace = generate_tdscm(params, doc["T"], OFFLINE, doc["seed"])
        else:
            _, _, trace = generate_tdscm(params, doc["T"], ONLINE_EXPLICIT, doc["seed"],
                                         interventions=interventions, attempt=doc["attempt"])
            trace = _replace_scenario(trace, scenario)
        if trace.u_draws.tolist() != doc["u_draws"] or trace.i_draws.tolist() != doc["i_draws"]:
            raise InputError("trace draws do not match a re-simulation of its parameters")
        return trace


def _replace_scenario(trace, scenario):
    return dataclasses.replace(trace, scenario=scenario)


def _simulate_tdscm(params, names, u_unif, i_draws, cap):
    """Run the structural equations forward. Returns (bits, u_draws, i_draws, capped)."""
    T, d = u_unif.shape
    adj = lag_adjacency(params.graph, names)
    miss = 1.0 - np.array([params.epsilon[v] for v in names])
    bits = np.zeros((d, T), dtype=np.uint8)
    u_draws = np.zeros((d, T), dtype=np.uint8)
    i_draws = np.array(i_draws, dtype=np.uint8)
    run = np.zeros(d, dtype=np.int64)
    capped = []
    for t in range(T):
        k = np.maximum(anomalous_parent_counts(bits, t, adj), 1)
        u = (u_unif[t] < 1.0 - miss**k).astype(np.uint8)
        if cap is not None:
            hit = np.nonzero(run >= cap)[0]
            for j in hit:
                u[j] = 0
                i_draws[j, t] = 0
                capped.append((names[j], t))
        u_draws[:, t] = u
        bits[:, t] = tdscm_step(bits, t, adj, u, i_draws[:, t])
        run = np.where(bits[:, t] > 0, run + 1, 0)
    return bits, u_draws, i_draws, tuple(capped)


def _real_values(bits, thresholds, value_unif):
    r = thresholds[:, None]
    w = value_unif.T
    low = np.minimum(w * r, np.nextafter(r, 0.0))
    high = np.minimum(r + w * (1.0 - r), np.nextafter(1.0, 0.0))
    return np.where(bits > 0, high, low)


def _pick_pair(rng, g: SummaryGraph, scenario):
    names = list(g.vertices)
    if scenario == ONLINE_VIOLATED:
        pairs = [(z, x) for z in names for x in sorted(descendants(g, z)) if x != z]
        if not pairs:
            raise GenerationError("graph has no directed path for a violated scenario; "
                                  "retry with another seed")
    else:
        pairs = [(a, b) for a in names for b in names
                 if a < b and b not in descendants(g, a) and a not in descendants(g, b)]
        if not pairs:
            pairs = [(a, b) for a in names for b in names if a < b]
    return pairs[rng.integers(len(pairs))]


def generate_tdscm(params: TdscmParams, T: int, scenario: str = OFFLINE, seed: int = 0,
                   interventions: Sequence[tuple[str, int]] | None = None,
                   attempt: int | None = None):
    """Sample ``T`` steps of the binary propagation system.

    ``offline`` draws interventions with probability ``beta`` per vertex and step
    and caps anomalous runs at ``max_consecutive_anomaly`` by closing both gates
    on the following step. The two online scenarios place exactly two
    interventions in the first ``PLACEMENT_WINDOW`` steps and retry until the
    requested scenario actually holds on the realized anomalies:
    ``online_assumption5_violated`` puts both on one directed path, so the later
    one inherits anomalous parents; ``online_assumption5_ok`` keeps them apart.
    ``online`` uses the given ``interventions`` as-is.

    Returns ``(panel, bits, trace)``.
    """
    names = params.graph.vertices
    d = len(names)
    if T < params.graph.gamma_max + 1:
        raise ConfigError(f"T must be at least gamma_max + 1 = {params.graph.gamma_max + 1}")
    thr = params.thresholds.vector(names)
    pos = {v: j for j, v in enumerate(names)}
    summary = summary_without_self_loops(collapse_to_summary(params.graph))

    if scenario == OFFLINE:
        rng = _rng(seed)
        draws = rng.random((T, 3 * d))
        u_unif, value_unif = draws[:, :d], draws[:, 2 * d:]
        i_draws = (draws[:, d:2 * d] < params.beta).T.astype(np.uint8)
        bits, u_draws, i_draws, capped = _simulate_tdscm(
            params, names, u_unif, i_draws, params.max_consecutive_anomaly)
        roots = frozenset((names[j], int(t)) for j, t in zip(*np.nonzero(i_draws)))
        trace = GroundTruthTrace(params, scenario, int(seed), 0, names, u_draws, i_draws, roots,
                                 capped, (), u_unif, value_unif)
        return _emit(names, bits, thr, params, value_unif, trace)

    if scenario not in (ONLINE_OK, ONLINE_VIOLATED, ONLINE_EXPLICIT):
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if scenario == ONLINE_EXPLICIT and interventions is None:
        raise ConfigError("scenario 'online' needs explicit interventions")

    attempts = [attempt] if attempt is not None else range(MAX_ATTEMPTS)
    for att in attempts:
        if interventions is not None:
            placed = [(str(v), int(t)) for v, t in interventions]
        else:
            pick = _rng(seed, att, 1)
            z, x = _pick_pair(pick, summary, scenario)
            window = min(T, PLACEMENT_WINDOW)
            placed = [(z, int(pick.integers(window))), (x, int(pick.integers(window)))]
        draws = _rng(seed, att).random((T, 2 * d))
        u_unif, value_unif = draws[:, :d], draws[:, d:]
        i_draws = np.zeros((d, T), dtype=np.uint8)
        for v, t in placed:
            if v not in pos or not 0 <= t < T:
                raise InputError(f"intervention ({v}, {t}) is outside the panel")
            i_draws[pos[v], t] = 1
        bits, u_draws, i_draws, _ = _simulate_tdscm(params, names, u_unif, i_draws, None)
        roots = frozenset((names[j], int(t)) for j, t in zip(*np.nonzero(i_draws)))
        trace = GroundTruthTrace(params, scenario, int(seed), int(att), names, u_draws, i_draws,
                                 roots, (), tuple(placed), u_unif, value_unif)
        if scenario == ONLINE_EXPLICIT:
            return _emit(names, bits, thr, params, value_unif, trace)
        anomalies = {names[j] for j in np.nonzero(bits.any(axis=1))[0]}
        ok, _ = check_assumption5(summary, trace.root_vertices, anomalies)
        if ok == (scenario == ONLINE_OK):
            return _emit(names, bits, thr, params, value_unif, trace)
    raise GenerationError(f"could not realize scenario {scenario!r} in {MAX_ATTEMPTS} attempts "
                          f"(seed {seed}); retry with another seed")


def _emit(names, bits, thr, params, value_unif, trace):
    values = _real_values(bits, thr, value_unif)
    panel = TimeSeriesPanel(names, values)
    return panel, BinaryPanel(names, bits, params.thresholds), trace


def reference_fixer(online: BinaryPanel, roots, trace: GroundTruthTrace) -> BinaryPanel:
    """Re-simulate the trace with every intervention on ``roots`` removed.

    The result is binarized at ``online.thresholds`` (the true thresholds when
    absent) so it lines up with the panel the caller is analysing.
    """
    roots = frozenset(roots)
    unknown = roots.difference(trace.names)
    if unknown:
        raise InputError(f"roots not in trace: {', '.join(sorted(unknown))}")
    if online.names != trace.names or online.T != trace.T:
        raise InputError("online panel does not match the trace")
    pos = {v: j for j, v in enumerate(trace.names)}
    i_draws = trace.i_draws.copy()
    for v in roots:
        i_draws[pos[v]] = 0
    cap = trace.params.max_consecutive_anomaly if trace.scenario == OFFLINE else None
    bits, _, _, _ = _simulate_tdscm(trace.params, trace.names, trace.u_uniform, i_draws, cap)
    true_thr = trace.params.thresholds
    spec = online.thresholds or true_thr
    if spec.vector(trace.names).tolist() == true_thr.vector(trace.names).tolist():
        return online.replace_bits(bits)
    values = _real_values(bits, true_thr.vector(trace.names), trace.value_uniform)
    return online.replace_bits(values >= spec.vector(trace.names)[:, None])


# -- linear systems ----------------------------------------------------------

@dataclass(frozen=True)
class LinearDscmParams:
    """Lag-1 linear system ``y[t] = sum(a * parent[t-1]) + noise_scale * N(0, 1)``."""

    graph: WindowGraph
    coefficients: Mapping[tuple, float]
    noise_scale: float = 0.1

    @classmethod
    def random(cls, graph: WindowGraph, seed: int, low: float = 0.1, high: float = 1.0,
               noise_scale: float = 0.1) -> "LinearDscmParams":
        rng = _rng(seed, 2_000_003)
        coefs = {e: float(rng.uniform(low, high)) for e in graph.sorted_edges()}
        return cls(graph, coefs, noise_scale)

    def matrix(self, coefficients=None) -> np.ndarray:
        names = self.graph.vertices
        pos = {v: j for j, v in enumerate(names)}
        a = np.zeros((len(names), len(names)))
        for (s, _, t), c in (coefficients or self.coefficients).items():
            a[pos[s], pos[t]] = c
        return a


@dataclass(frozen=True, eq=False)
class ContinuousSample:
    """Output of a linear generator; ``anomalies`` are the roots plus their descendants."""

    panel: TimeSeriesPanel
    root_causes: frozenset
    anomalies: frozenset
    scenario: str
    seed: int
    coefficients: Mapping[tuple, float] = field(default_factory=dict)


def _pick_linear_pair(rng, summary, scenario):
    names = list(summary.vertices)
    if scenario == ONLINE_VIOLATED:
        pairs = [(z, x) for z in names for x in sorted(descendants(summary, z)) if x != z]
    else:
        pairs = [(a, b) for a in names for b in names
                 if a < b and b not in descendants(summary, a) and a not in descendants(summary, b)]
    if not pairs:
        raise GenerationError(f"graph admits no vertex pair for scenario {scenario!r}; "
                              "retry with another seed")
    return pairs[rng.integers(len(pairs))]


def _run_linear(a0, a1, noise, shift, burn_in):
    d = a0.shape[0]
    steps = noise.shape[0]
    x = np.zeros(d)
    out = np.empty((steps, d))
    for t in range(steps):
        a = a0 if t < burn_in else a1
        s = 0.0 if t < burn_in else shift
        x = x @ a + noise[t] + s
        out[t] = x
    return out[burn_in:].T


def _generate_linear(params, T, scenario, seed, shift_size, burn_in):
    if T < 2:
        raise ConfigError("T must be ≥ 2")
    names = params.graph.vertices
    d = len(names)
    summary = summary_without_self_loops(collapse_to_summary(params.graph))
    if any(ancestors(summary, v) & {v} for v in names):
        raise ConfigError("linear generators need a graph that is acyclic apart from self-loops")
    rng = _rng(seed)
    a0 = params.matrix()
    a1 = a0
    shift = np.zeros(d)
    roots = frozenset()
    coefs = dict(params.coefficients)
    if scenario != OFFLINE:
        if scenario not in (ONLINE_OK, ONLINE_VIOLATED):
            raise ConfigError(f"unknown scenario {scenario!r}")
        roots = frozenset(_pick_linear_pair(rng, summary, scenario))
        if shift_size is None:
            for e in params.graph.sorted_edges():
                if e[2] in roots:
                    coefs[e] = float(rng.uniform(0.1, 1.0))
            a1 = params.matrix(coefs)
        else:
            for v in roots:
                shift[names.index(v)] = shift_size
    noise = params.noise_scale * rng.standard_normal((burn_in + T, d))
    values = _run_linear(a0, a1, noise, shift, burn_in)
    anomalies = set(roots)
    for v in roots:
        anomalies |= descendants(summary, v)
    return ContinuousSample(TimeSeriesPanel(names, values), roots, frozenset(anomalies),
                            scenario, int(seed), coefs)


def generate_linear_dscm(params: LinearDscmParams, T: int, scenario: str = OFFLINE,
                         seed: int = 0, burn_in: int = 500) -> ContinuousSample:
    """Online scenarios resample every incoming coefficient (self-loop included) of two vertices."""
    return _generate_linear(params, T, scenario, seed, None, burn_in)


def generate_noise_shift_dscm(params: LinearDscmParams, T: int, scenario: str = OFFLINE,
                              shift: float = 1.0, seed: int = 0,
                              burn_in: int = 500) -> ContinuousSample:
    """Online scenarios add ``shift`` to the noise of two vertices for the whole window."""
    return _generate_linear(params, T, scenario, seed, float(shift), burn_in)


# -- fixtures ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    graph: WindowGraph
    online: BinaryPanel
    root_causes: frozenset
    trace: GroundTruthTrace | None = None


def _fixture_sample(graph, epsilon, interventions, T, want_all):
    params = TdscmParams(graph, epsilon, 0.1, ThresholdSpec.fixed({v: 0.8 for v in graph.vertices}), None)
    for seed in range(1000):
        _, bits, trace = generate_tdscm(params, T, ONLINE_EXPLICIT, seed, interventions=interventions)
        if want_all(bits.bits):
            return bits, trace
    raise GenerationError("fixture search exhausted")  # pragma: no cover


def counterexample_fixtures() -> list[Fixture]:
    """The two systems where timing and (conditional) dependence alone mislead.

    ``lagged_fork``: X -> Y at lag 1 and X -> Z at lag 2, X hit repeatedly.
    ``shared_children``: W, Z -> X at lag 1 and W, Z -> Y at lag 2, W and Z hit at different times.
    Propagation is uncertain (epsilon 0.7) and there are no self-causes.
    """
    g_a = WindowGraph(("X", "Y", "Z"), frozenset({("X", 1, "Y"), ("X", 2, "Z")}), 2)
    bits_a, trace_a = _fixture_sample(
        g_a, {"X": 1.0, "Y": 0.7, "Z": 0.7}, [("X", 0), ("X", 3), ("X", 6)], 12,
        lambda b: bool(b.any(axis=1).all()))

    g_b = WindowGraph(("W", "X", "Y", "Z"),
                      frozenset({("W", 1, "X"), ("Z", 1, "X"), ("W", 2, "Y"), ("Z", 2, "Y")}), 2)
    bits_b, trace_b = _fixture_sample(
        g_b, {"W": 1.0, "X": 0.7, "Y": 0.7, "Z": 1.0}, [("W", 0), ("Z", 3), ("W", 6)], 12,
        lambda b: bool(b.any(axis=1).all()))
    return [
        Fixture("lagged_fork", g_a, bits_a, frozenset({"X"}), trace_a),
        Fixture("shared_children", g_b, bits_b, frozenset({"W", "Z"}), trace_b),
    ]


def cycle_fixture() -> Fixture:
    """Four-vertex example: Z -> Y -> X, X <-> W, every vertex self-caused.

    Z and X are hit; Y's gate stays closed so Y never turns anomalous, which
    leaves {X, W} as a component with no anomalous parent outside it.
    """
    names = ("W", "X", "Y", "Z")
    edges = {("Z", 1, "Y"), ("Y", 1, "X"), ("X", 1, "W"), ("W", 1, "X")}
    edges |= {(v, 1, v) for v in names}
    graph = WindowGraph(names, frozenset(edges), 1)
    bits = np.array([
        [0, 0, 1, 1, 1],  # W, from X
        [0, 1, 1, 1, 1],  # X, hit at t=1
        [0, 0, 0, 0, 0],  # Y
        [1, 1, 1, 1, 1],  # Z, hit at t=0
    ])
    thr = ThresholdSpec.fixed({v: 0.8 for v in names})
    return Fixture("cycle", graph, BinaryPanel(names, bits, thr), frozenset({"Z", "X"}))
