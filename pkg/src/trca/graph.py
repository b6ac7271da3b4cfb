"""Lagged window graphs, summary graphs and the traversals T-RCA needs.

Vertices are iterated in sorted order everywhere so every result is
reproducible run to run.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigError, InputError, ParseError


def _sorted_vertices(vertices) -> tuple:
    vertices = [str(v) for v in vertices]
    vs = tuple(sorted(set(vertices)))
    if len(vs) != len(vertices):
        raise ConfigError("duplicate vertex names")
    return vs


@dataclass(frozen=True)
class WindowGraph:
    """Finite time graph: edge ``(source, lag, target)`` means source[t-lag] -> target[t]."""

    vertices: tuple
    edges: frozenset
    gamma_max: int = 1

    def __post_init__(self):
        vertices = _sorted_vertices(self.vertices)
        if self.gamma_max < 1:
            raise ConfigError("gamma_max must be ≥ 1")
        known = set(vertices)
        edges = set()
        for src, lag, tgt in self.edges:
            lag = int(lag)
            if src not in known or tgt not in known:
                raise InputError(f"edge ({src}, {lag}, {tgt}) uses an undeclared vertex")
            if not 1 <= lag <= self.gamma_max:
                raise ConfigError(f"lag {lag} outside [1, {self.gamma_max}]")
            edges.add((src, lag, tgt))
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", frozenset(edges))

    def sorted_edges(self):
        return sorted(self.edges, key=lambda e: (e[0], e[2], e[1]))

    def lagged_parents(self, v) -> list[tuple[str, int]]:
        return sorted((s, lag) for s, lag, t in self.edges if t == v)

    @classmethod
    def from_summary(cls, g: "SummaryGraph", lag: int = 1) -> "WindowGraph":
        return cls(g.vertices, frozenset((s, lag, t) for s, t in g.edges), gamma_max=lag)


@dataclass(frozen=True)
class SummaryGraph:
    vertices: tuple
    edges: frozenset

    def __post_init__(self):
        vertices = _sorted_vertices(self.vertices)
        known = set(vertices)
        edges = frozenset((str(s), str(t)) for s, t in self.edges)
        for s, t in edges:
            if s not in known or t not in known:
                raise InputError(f"edge {s} -> {t} uses an undeclared vertex")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)
        parents = {v: set() for v in vertices}
        children = {v: set() for v in vertices}
        for s, t in edges:
            parents[t].add(s)
            children[s].add(t)
        object.__setattr__(self, "_parents", {v: tuple(sorted(p)) for v, p in parents.items()})
        object.__setattr__(self, "_children", {v: tuple(sorted(c)) for v, c in children.items()})

    def _check(self, v):
        if v not in self._parents:
            raise InputError(f"unknown vertex {v!r}")

    def parents(self, v) -> tuple:
        self._check(v)
        return self._parents[v]

    def children(self, v) -> tuple:
        self._check(v)
        return self._children[v]

    def sorted_edges(self):
        return sorted(self.edges)


@dataclass(frozen=True)
class Scc:
    members: frozenset
    index: int

    def __len__(self):
        return len(self.members)


def collapse_to_summary(wg: WindowGraph) -> SummaryGraph:
    return SummaryGraph(wg.vertices, frozenset((s, t) for s, _, t in wg.edges))


def scc_decompose(g: SummaryGraph) -> list[Scc]:
    """Tarjan's algorithm, iterative. Components come out in topological order.

    Tarjan's emission order is reverse topological. Rather than just reversing
    it, the condensation is re-sorted so that components with no path between
    them are ordered by their smallest member name.
    """
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    found: list = []
    counter = 0
    for root in g.vertices:
        if root in index:
            continue
        work = [(root, iter(g.children(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(g.children(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                members = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    members.add(w)
                    if w == v:
                        break
                found.append(frozenset(members))
    return [Scc(m, i) for i, m in enumerate(_topological(g, found))]


def _topological(g, components):
    where = {v: k for k, comp in enumerate(components) for v in comp}
    succ = [set() for _ in components]
    indegree = [0] * len(components)
    for s, t in g.edges:
        a, b = where[s], where[t]
        if a != b and b not in succ[a]:
            succ[a].add(b)
            indegree[b] += 1
    heap = [(min(comp), k) for k, comp in enumerate(components) if indegree[k] == 0]
    heapq.heapify(heap)
    ordered = []
    while heap:
        _, k = heapq.heappop(heap)
        ordered.append(components[k])
        for b in succ[k]:
            indegree[b] -= 1
            if indegree[b] == 0:
                heapq.heappush(heap, (min(components[b]), b))
    return ordered


def anomalous_subgraph(g: SummaryGraph, anomalies: Iterable[str]) -> SummaryGraph:
    a = set(anomalies)
    unknown = a.difference(g.vertices)
    if unknown:
        raise InputError(f"anomalies not in graph: {', '.join(sorted(unknown))}")
    return SummaryGraph(tuple(v for v in g.vertices if v in a),
                        frozenset((s, t) for s, t in g.edges if s in a and t in a))


def _reach(start, step):
    seen = set()
    queue = deque(step(start))
    while queue:
        v = queue.popleft()
        if v in seen:
            continue
        seen.add(v)
        queue.extend(step(v))
    return seen


def descendants(g: SummaryGraph, v: str) -> set:
    """Vertices reachable from ``v`` by a nonempty path; ``v`` itself only if on a cycle."""
    g._check(v)
    return _reach(v, g.children)


def ancestors(g: SummaryGraph, v: str) -> set:
    g._check(v)
    return _reach(v, g.parents)


def assumption5_violations(g: SummaryGraph, roots: Iterable[str], anomalies: Iterable[str]) -> list:
    """Pairs ``(Z, X)`` of distinct root causes where Z reaches X through anomalous vertices only.

    That is exactly the case where X inherits an anomalous parent from Z and the
    one-root-per-active-path assumption fails.
    """
    roots, anomalies = set(roots), set(anomalies)
    unknown = anomalies.difference(g.vertices)
    if unknown:
        raise InputError(f"anomalies not in graph: {', '.join(sorted(unknown))}")
    if not roots <= anomalies:
        raise InputError("every root cause must be anomalous: "
                         + ", ".join(sorted(roots - anomalies)))
    ga = anomalous_subgraph(g, anomalies)
    pairs = []
    for z in sorted(roots):
        reach = descendants(ga, z)
        for x in sorted(roots):
            if x != z and x in reach:
                pairs.append((z, x))
    return pairs


def check_assumption5(g: SummaryGraph, roots: Iterable[str], anomalies: Iterable[str]) -> tuple[bool, list]:
    pairs = assumption5_violations(g, roots, anomalies)
    return not pairs, pairs


def max_roots_on_path(g: SummaryGraph, roots: Iterable[str], anomalies: Iterable[str]) -> int:
    """Longest chain of root causes each reaching the next through anomalous vertices.

    This is the number of agent rounds needed to clear every root cause.
    """
    roots = sorted(set(roots))
    if not roots:
        return 0
    succ = {r: [] for r in roots}
    for z, x in assumption5_violations(g, roots, anomalies):
        succ[z].append(x)

    def longest(r, path):
        # simple paths only; root sets are small
        return 1 + max((longest(x, path | {x}) for x in succ[r] if x not in path), default=0)

    return max(longest(r, frozenset([r])) for r in roots)


# -- serialization -----------------------------------------------------------

def to_json(g: SummaryGraph | WindowGraph) -> str:
    if isinstance(g, WindowGraph):
        doc = {
            "vertices": list(g.vertices),
            "gamma_max": g.gamma_max,
            "edges": [{"source": s, "lag": lag, "target": t} for s, lag, t in g.sorted_edges()],
        }
    else:
        doc = {"vertices": list(g.vertices),
               "edges": [{"source": s, "target": t} for s, t in g.sorted_edges()]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> SummaryGraph | WindowGraph:
    try:
        doc = json.loads(text)
        vertices = doc["vertices"]
        edges = doc["edges"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed graph JSON: {exc}") from None
    if any("lag" in e for e in edges) or "gamma_max" in doc:
        gmax = doc.get("gamma_max") or max((e["lag"] for e in edges), default=1)
        return WindowGraph(tuple(vertices),
                           frozenset((e["source"], e["lag"], e["target"]) for e in edges), gmax)
    return SummaryGraph(tuple(vertices), frozenset((e["source"], e["target"]) for e in edges))


def to_edge_list(g: SummaryGraph | WindowGraph) -> str:
    """One bare line per vertex, then ``source -> target`` lines (``[lag=k]`` for window graphs)."""
    for v in g.vertices:
        if "->" in v or "[" in v or v != v.strip() or not v:
            raise ConfigError(f"vertex name {v!r} cannot be written as an edge list")
    lines = list(g.vertices)
    if isinstance(g, WindowGraph):
        lines.append(f"# gamma_max={g.gamma_max}")
        lines += [f"{s} -> {t} [lag={lag}]" for s, lag, t in g.sorted_edges()]
    else:
        lines += [f"{s} -> {t}" for s, t in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def from_edge_list(text: str) -> SummaryGraph | WindowGraph:
    vertices, plain, lagged = [], [], []
    gamma_max = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# gamma_max="):
                gamma_max = int(line.split("=", 1)[1])
            continue
        if "->" not in line:
            vertices.append(line)
            continue
        src, rest = (part.strip() for part in line.split("->", 1))
        if rest.endswith("]") and "[lag=" in rest:
            tgt, lag = rest[:-1].split("[lag=")
            try:
                lagged.append((src, int(lag), tgt.strip()))
            except ValueError:
                raise ParseError(f"bad lag {lag!r}", row=lineno) from None
        else:
            plain.append((src, rest))
    if lagged and plain:
        raise ParseError("edge list mixes lagged and unlagged edges")
    if lagged or gamma_max is not None:
        gmax = gamma_max or max(lag for _, lag, _ in lagged)
        return WindowGraph(tuple(vertices), frozenset(lagged), gmax)
    return SummaryGraph(tuple(vertices), frozenset(plain))
