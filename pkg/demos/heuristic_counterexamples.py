"""
Two incidents where simple heuristics go wrong
==============================================

"Blame the first series that broke" and "blame the series the others depend
on most" are tempting shortcuts.  The two bundled fixtures below are small
systems where the graph traversal is right and the shortcuts are not.
"""

import numpy as np

from trca.graph import collapse_to_summary, to_edge_list
from trca.rca import analyze, detect_anomalies
from trca.simulator import counterexample_fixtures


def earliest(anomalies, tau):
    first = min(tau[v] for v in anomalies)
    return {v for v in anomalies if tau[v] == first}


def most_influential(bits, names, anomalies):
    # count how often each anomalous series is on one step before another one turns on
    score = {}
    for s in anomalies:
        row = bits[names.index(s)]
        score[s] = sum(int(np.sum(row[:-1] & bits[names.index(t)][1:])) for t in anomalies if t != s)
    best = max(score.values())
    return {v for v, c in score.items() if c == best}


for fx in counterexample_fixtures():
    g = collapse_to_summary(fx.graph)
    report = analyze(g, fx.online)
    a, tau = detect_anomalies(fx.online)
    print(f"fixture {fx.name}")
    print(to_edge_list(g))
    print("  bits:")
    for name, row in zip(fx.online.names, fx.online.bits):
        print(f"    {name}: {''.join(map(str, row))}")
    print("  true roots:       ", sorted(fx.root_causes))
    print("  graph traversal:  ", sorted(report.root_causes))
    print("  earliest anomaly: ", sorted(earliest(a, tau)))
    print("  most influential: ", sorted(most_influential(fx.online.bits, list(fx.online.names), a)))
    print()
