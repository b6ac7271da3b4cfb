"""Constraint-based discovery of the lagged graph from offline binary data.

For each target series the search starts from every lagged candidate parent
and prunes candidates that test independent of the target given subsets of the
other retained candidates (PC-stable: deletions at one conditioning size are
applied together). Edges are oriented by time, so only the skeleton is learned.

``history`` adds the target's own values at lags ``1..history`` to every test
of a candidate from another series. Processes whose state depends on a longer
stretch of their own past than ``gamma_max`` (the capped anomaly runs of the
binary simulator are one) otherwise leak that memory through lagged copies in
other series and produce spurious cross edges.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .citest import gsquare, tabulate
from .errors import ConfigError, InsufficientDataError
from .graph import SummaryGraph, WindowGraph, collapse_to_summary
from .timeseries import BinaryPanel


@dataclass(frozen=True)
class DiscoveryConfig:
    gamma_max: int = 1
    alpha: float = 0.01
    max_condition_set_size: int | None = 3
    include_self_causes: bool = True
    history: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0,1)")
        if int(self.gamma_max) != self.gamma_max or self.gamma_max < 1:
            raise ConfigError("gamma_max must be an integer ≥ 1")
        if self.max_condition_set_size is not None and self.max_condition_set_size < 0:
            raise ConfigError("max_condition_set_size must be ≥ 0 or None")
        if int(self.history) != self.history or self.history < 0:
            raise ConfigError("history must be an integer ≥ 0")

    @property
    def horizon(self) -> int:
        """Largest lag any test looks at."""
        return max(self.gamma_max, self.history)


@dataclass(frozen=True)
class CiRecord:
    """One audited test: is ``source[t-lag]`` independent of ``target[t]`` given ``condition``?"""

    target: str
    source: str
    lag: int
    condition: tuple
    statistic: float
    dof: int
    p_value: float
    independent: bool

    def as_dict(self):
        return {
            "target": self.target,
            "source": self.source,
            "lag": self.lag,
            "condition": [list(c) for c in self.condition],
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "independent": self.independent,
        }


def _search_target(target, columns, now, candidates, cfg):
    own = [(target, lag) for lag in range(1, cfg.history + 1)]
    retained = list(candidates)
    records = []
    limit = cfg.max_condition_set_size
    size = 0
    while limit is None or size <= limit:
        if len(retained) - 1 < size:
            break
        snapshot = list(retained)
        removed = set()
        for cand in snapshot:
            others = [c for c in snapshot if c != cand]
            if len(others) < size:
                continue
            base = own if cand[0] != target else []
            for cond in itertools.combinations(others, size):
                full = base + [c for c in cond if c not in base]
                table = tabulate(columns[cand], now, [columns[c] for c in full])
                res = gsquare(table, cfg.alpha)
                records.append(CiRecord(target, cand[0], cand[1], tuple(full),
                                        res.statistic, res.dof, res.p_value, res.independent))
                if res.independent:
                    removed.add(cand)
                    break
        retained = [c for c in retained if c not in removed]
        size += 1
    return retained, records


def discover_window_graph(panel: BinaryPanel, cfg: DiscoveryConfig | None = None,
                          audit: list | None = None, n_jobs: int = 1) -> WindowGraph:
    """Learn lagged parents for every series.

    Targets are independent, so ``n_jobs > 1`` runs them on a thread pool; the
    merged result does not depend on the number of workers. Every CI test is
    appended to ``audit`` when a list is given.
    """
    cfg = cfg or DiscoveryConfig()
    gmax = cfg.gamma_max
    top = cfg.horizon
    depth = cfg.max_condition_set_size or 0
    if panel.T <= top + depth + 1:
        raise InsufficientDataError(
            f"need more than {top + depth + 1} samples for gamma_max={gmax}"
            f" and history={cfg.history}, got T={panel.T}"
        )
    names = panel.names
    bits = panel.bits.astype(np.int64)
    # all tests share the window t = top .. T-1
    columns = {(x, lag): bits[i, top - lag: panel.T - lag]
               for i, x in enumerate(names) for lag in range(1, top + 1)}

    def run(j):
        y = names[j]
        now = bits[j, top:]
        cands = [(x, lag) for x in names for lag in range(1, gmax + 1)
                 if x != y or cfg.include_self_causes]
        return _search_target(y, columns, now, cands, cfg)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(len(names))))
    else:
        results = [run(j) for j in range(len(names))]

    edges = set()
    for y, (retained, records) in zip(names, results):
        edges.update((x, lag, y) for x, lag in retained)
        if audit is not None:
            audit.extend(records)
    return WindowGraph(names, frozenset(edges), gmax)


def discover_summary(panel: BinaryPanel, cfg: DiscoveryConfig | None = None,
                     audit: list | None = None, n_jobs: int = 1) -> SummaryGraph:
    return collapse_to_summary(discover_window_graph(panel, cfg, audit, n_jobs))
