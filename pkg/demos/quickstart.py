"""
From monitoring data to root causes
===================================

Simulate a small binary propagation system, learn its summary graph from an
offline window and locate the root causes of an incident in a short online
window.
"""

from trca.discovery import DiscoveryConfig, discover_summary
from trca.graph import collapse_to_summary, to_edge_list
from trca.rca import analyze
from trca.simulator import ONLINE_OK, TdscmParams, generate_tdscm, random_tscg
from trca.timeseries import binarize

# A random six-vertex system: every vertex has 4 or 5 lagged parents, self
# loops included.  TdscmParams.random draws the propagation probabilities and
# the per-series thresholds.
seed = 2
graph = random_tscg(6, 4, 5, seed=seed)
params = TdscmParams.random(graph, seed)

# The offline window is a long stretch of normal operation with occasional
# spontaneous anomalies.  generate_tdscm returns the real-valued panel, its
# thresholded bits and the draws that produced them.
offline, _, _ = generate_tdscm(params, 20_000, seed=seed)
learned = discover_summary(binarize(offline, params.thresholds), DiscoveryConfig(history=5))
truth = collapse_to_summary(graph)
print("true edges found:", len(learned.edges & truth.edges), "of", len(truth.edges))
print("extra edges:", sorted(learned.edges - truth.edges))

# The online window holds an incident: a few interventions that propagate.
online, bits, trace = generate_tdscm(params, 50, ONLINE_OK, seed=seed)
report = analyze(learned, binarize(online, params.thresholds))
print("anomalous series:", sorted(report.anomalies))
print("appearance times:", dict(sorted(report.tau.items())))
print("root causes found:", sorted(report.root_causes))
print("true root causes: ", sorted(trace.root_vertices))

# The learned graph as a plain edge list, the format `trca detect` accepts.
print(to_edge_list(learned))
