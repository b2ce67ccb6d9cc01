"""
Quickstart: a five-token taxonomy embedded in flat spacetime
============================================================

Every token becomes an event (t, x, y). Spatial positions are random and
frozen; the enforcement sweep lifts each descendant's time until every
"is-a" pair is causally related. Chains are then read back purely from
the geometry: walk to the nearest event in your past light cone, repeat.
"""

from causalembed import (
    EmbeddingConfig,
    interval,
    load_edge_list,
    perfect_embed,
    retrieve_chain,
    transitive_closure,
)

EDGES = b"""\
beagle\tdog
dog\tmammal
cat\tmammal
mammal\tanimal
"""

graph = load_edge_list(EDGES)
print(f"{len(graph)} tokens, {len(graph.edges)} edges, root = "
      f"{graph.tokens[graph.roots[0]].label!r}")

# The training pairs are the transitive closure: beagle is-a dog, is-a
# mammal, is-a animal, and so on.
pairs = transitive_closure(graph)
print(f"closure has {len(pairs)} pairs:",
      [(graph.labels[c], graph.labels[p]) for c, p in pairs])

emb, report = perfect_embed(graph, EmbeddingConfig(seed=7))
print(f"\nconverged={emb.converged} after {emb.sweeps_run} sweeps, "
      f"retrieval perfect={report.is_perfect}")

print("\ncoordinates (time and two frozen spatial axes):")
for i, label in enumerate(emb.labels):
    print(f"  {label:>7}: t={emb.t[i]:+.6f}  x=({emb.x[i, 0]:+.3f}, {emb.x[i, 1]:+.3f})")

# Chains come from geometry alone; no graph lookups involved.
print("\nretrieved chains:")
for label in ("beagle", "cat", "animal"):
    chain = retrieve_chain(emb, emb.index_of(label)).chain
    print(f"  {label:>7}: " + " -> ".join(emb.labels[i] for i in chain))

# The geodesic between a child and its parent is almost null: the squared
# interval sits just below zero, pinned by the enforcement margin.
beagle, dog = emb.index_of("beagle"), emb.index_of("dog")
print(f"\ninterval(beagle, dog) = {interval(emb.event(beagle), emb.event(dog)):.3e}"
      "  (timelike, nearly null)")
