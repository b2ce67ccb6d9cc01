"""
Watching the repair loop close the last few percent
===================================================

Plain causality enforcement already encodes the hierarchy for the vast
majority of tokens; the stragglers sit inside the causal structure but
are not joined to their parent by the minimal proper-time geodesic.
This script embeds a 5,000-token random tree, reports the fraction of
exact chains before any repair, then lets the verify-and-repair loop run
and prints one line per round.
"""

import time

from causalembed import (
    EmbeddingConfig,
    embed,
    evaluate,
    generate_hierarchy,
    perfect_embed,
    transitive_closure,
    verify_all,
)

N = 5_000
graph = generate_hierarchy(N, max_depth=14, branching=5, seed=1)
pairs = transitive_closure(graph)
config = EmbeddingConfig(seed=1)

t0 = time.perf_counter()
first = embed(pairs, graph.tokens, config)
print(f"enforcement converged over {len(pairs)} pairs "
      f"in {time.perf_counter() - t0:.2f}s ({first.sweeps_run} sweeps)")

report = verify_all(first, graph)
print(f"before repair: {report.perfect}/{report.total} exact chains "
      f"({report.perfect_fraction:.1%})")
print("a typical mismatch:", report.mismatches[0].token,
      "retrieved", report.mismatches[0].retrieved[0][:4], "...",
      "expected", report.mismatches[0].expected[0][:4], "...")


def show(round_no, rep):
    print(f"  round {round_no}: {rep.perfect}/{rep.total} exact "
          f"({rep.total - rep.perfect} left)")


t0 = time.perf_counter()
emb, final = perfect_embed(graph, config, embedding=first, on_round=show)
print(f"repair loop finished in {time.perf_counter() - t0:.1f}s, "
      f"perfect={final.is_perfect}")

result = evaluate(emb, graph)
print(f"mean rank = {result.mean_rank}, MAP = {result.map}")
