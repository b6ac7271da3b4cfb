"""Root cause detection on an online window, given a learned summary graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ContractViolation, InputError
from .graph import SummaryGraph, anomalous_subgraph, scc_decompose
from .timeseries import BinaryPanel

#: ``fixer(online, confirmed_roots) -> remediated online panel``
Fixer = Callable[[BinaryPanel, frozenset], BinaryPanel]


def detect_anomalies(online: BinaryPanel) -> tuple[frozenset, dict]:
    """Anomalous series and the first step each one is anomalous."""
    hit = online.bits.any(axis=1)
    first = online.bits.argmax(axis=1)
    tau = {name: int(first[j]) for j, name in enumerate(online.names) if hit[j]}
    return frozenset(tau), tau


@dataclass(frozen=True)
class TraversalResult:
    root_causes: frozenset
    unresolved: tuple  # components with an anomalous parent outside them


def _traverse(g, anomalies, tau, tie_break, rng):
    anomalies = frozenset(anomalies)
    missing = sorted(a for a in anomalies if a not in tau)
    if missing:
        raise InputError(f"no appearance time for anomalous vertices: {', '.join(missing)}")
    ga = anomalous_subgraph(g, anomalies)
    found, unresolved = set(), []
    for scc in scc_decompose(ga):
        outside = {p for v in scc.members for p in ga.parents(v)} - scc.members
        if outside:
            unresolved.append(tuple(sorted(scc.members)))
            continue
        if len(scc) == 1:
            found |= scc.members
            continue
        earliest = min(tau[v] for v in scc.members)
        tied = sorted(v for v in scc.members if tau[v] == earliest)
        if tie_break == "random" and len(tied) > 1:
            found.add(tied[int(rng.integers(len(tied)))])
        else:
            found.add(tied[0])
    return TraversalResult(frozenset(found), tuple(unresolved))


def trca(g: SummaryGraph, anomalies, tau: Mapping[str, int],
         tie_break: str = "lexicographic", seed: int | None = None) -> frozenset:
    """Root causes by subgraph traversal.

    In the anomalous subgraph, every strongly connected component without an
    anomalous parent outside itself yields one root cause: its only vertex, or
    the member that turned anomalous first. Ties on that first time go to the
    smallest name, or to a seeded random member with ``tie_break="random"``.
    """
    if tie_break not in ("lexicographic", "random"):
        raise ValueError("tie_break must be 'lexicographic' or 'random'")
    rng = np.random.default_rng(seed)
    return _traverse(g, anomalies, tau, tie_break, rng).root_causes


@dataclass(frozen=True)
class AgentIteration:
    detected: frozenset
    fixed: frozenset


@dataclass(frozen=True)
class AnomalyReport:
    """Outcome of one analysis.

    The whole online window is read as a single incident, even when its
    anomalies form temporally separate bursts; ``window_length`` records the
    span that was analysed.
    """

    anomalies: frozenset
    tau: Mapping[str, int]
    root_causes: frozenset
    iterations: tuple = ()
    unresolved_components: tuple = ()
    complete: bool = True
    window_length: int = 0

    def to_dict(self):
        return {
            "anomalies": sorted(self.anomalies),
            "tau": {k: self.tau[k] for k in sorted(self.tau)},
            "root_causes": sorted(self.root_causes),
            "iterations": [{"detected": sorted(it.detected), "fixed": sorted(it.fixed)}
                           for it in self.iterations],
            "unresolved_components": [list(c) for c in self.unresolved_components],
            "complete": self.complete,
            "window_length": self.window_length,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def analyze(g: SummaryGraph, online: BinaryPanel, tie_break: str = "lexicographic",
            seed: int | None = None) -> AnomalyReport:
    """Single-pass report: anomalies, appearance times, root causes, unresolved components."""
    _check_vertices(g, online)
    anomalies, tau = detect_anomalies(online)
    res = _traverse(g, anomalies, tau, tie_break, np.random.default_rng(seed))
    return AnomalyReport(anomalies, tau, res.root_causes, (), res.unresolved, True, online.T)


def _check_vertices(g, online):
    missing = sorted(set(online.names) - set(g.vertices))
    extra = sorted(set(g.vertices) - set(online.names))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"in data but not in graph: {', '.join(missing)}")
        if extra:
            parts.append(f"in graph but not in data: {', '.join(extra)}")
        raise InputError("graph/panel vertex mismatch; " + "; ".join(parts))


def trca_agent(g: SummaryGraph, online: BinaryPanel, fixer: Fixer, max_iterations: int,
               tie_break: str = "lexicographic", seed: int | None = None) -> AnomalyReport:
    """Alternate detection and remediation until the window is clean.

    Each round runs T-RCA on what is still anomalous, then hands every root cause
    confirmed so far to ``fixer``. Rounds depend on the previous fixer output, so
    the loop is sequential. Stopping at ``max_iterations`` with anomalies left
    marks the report incomplete rather than raising.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be ≥ 1")
    _check_vertices(g, online)
    rng = np.random.default_rng(seed)
    anomalies0, tau0 = detect_anomalies(online)
    confirmed: set = set()
    rounds = []
    unresolved = ()
    current = online
    anomalies, tau = anomalies0, tau0
    while anomalies and len(rounds) < max_iterations:
        res = _traverse(g, anomalies, tau, tie_break, rng)
        if not rounds:
            unresolved = res.unresolved
        confirmed |= res.root_causes
        fixed = frozenset(confirmed)
        updated = fixer(current, fixed)
        _check_fixer(current, updated)
        rounds.append(AgentIteration(res.root_causes, fixed))
        current = updated
        anomalies, tau = detect_anomalies(current)
    return AnomalyReport(anomalies0, tau0, frozenset(confirmed), tuple(rounds), unresolved,
                         complete=not anomalies, window_length=online.T)


def _check_fixer(before: BinaryPanel, after: BinaryPanel):
    if after.names != before.names or after.bits.shape != before.bits.shape:
        raise ContractViolation("fixer changed the panel shape")
    if np.any(after.bits > before.bits):
        raise ContractViolation("fixer introduced new anomalies")
