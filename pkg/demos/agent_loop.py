"""
Fix, look again, repeat
=======================

When two root causes sit on the same causal path, the downstream one is hidden
behind the upstream one: one pass of the traversal reports only the upstream
root.  The agent loop fixes what it found, re-reads the window and continues.
Here the "operator" is the simulator's reference fixer, which removes
everything a fixed root caused using the logged draws.
"""

from trca.graph import collapse_to_summary, max_roots_on_path
from trca.rca import analyze, detect_anomalies, trca_agent
from trca.simulator import (
    ONLINE_VIOLATED,
    TdscmParams,
    generate_tdscm,
    random_tscg,
    reference_fixer,
    summary_without_self_loops,
)

seed = 3
graph = random_tscg(6, 4, 5, seed=seed)
params = TdscmParams.random(graph, seed)
_, bits, trace = generate_tdscm(params, 30, ONLINE_VIOLATED, seed=seed)
g = collapse_to_summary(graph)

print("true root causes:", sorted(trace.root_vertices))
print("one pass finds:  ", sorted(analyze(g, bits).root_causes))

# m is the largest number of roots stacked on one path through the anomalies;
# the loop needs at most that many rounds.
anomalies, _ = detect_anomalies(bits)
m = max_roots_on_path(summary_without_self_loops(g), trace.root_vertices, anomalies)
report = trca_agent(g, bits, lambda panel, roots: reference_fixer(panel, roots, trace), max(m, 1))
for k, it in enumerate(report.iterations, 1):
    print(f"round {k}: detected {sorted(it.detected)}")
print(f"after {len(report.iterations)} rounds (bound {m}): {sorted(report.root_causes)}, "
      f"complete={report.complete}")
