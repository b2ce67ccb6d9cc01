import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalembed import (
    ParseError,
    StructureError,
    ambiguity_profile,
    generate_hierarchy,
    ground_truth_chains,
    load_edge_list,
    transitive_closure,
    write_edge_list,
)
from reference import brute_closure, enumerate_root_paths


def chain_graph(k):
    text = "".join(f"n{i}\tn{i + 1}\n" for i in range(k))
    return load_edge_list(text.encode("utf-8"))


class TestLoadEdgeList:
    def test_basic_parse(self):
        g = load_edge_list(b"dog\tmammal\nmammal\tanimal\n")
        assert len(g) == 3
        assert len(g.edges) == 2
        assert g.roots == [g.id_of("animal")]
        assert g.labels == ["dog", "mammal", "animal"]  # first-appearance order

    def test_comments_and_blank_lines_ignored(self):
        g = load_edge_list(b"# a comment\n\ndog\tmammal\n\nmammal\tanimal\n")
        assert len(g) == 3

    def test_accepts_stream_and_path(self, tmp_path):
        g1 = load_edge_list(io.BytesIO(b"a\tb\n"))
        p = tmp_path / "edges.tsv"
        p.write_text("a\tb\n")
        g2 = load_edge_list(p)
        assert g1.labels == g2.labels

    def test_two_cycle_rejected(self):
        with pytest.raises(StructureError, match="cycle"):
            load_edge_list(b"a\tb\nb\ta\n")

    def test_cycle_error_names_a_member(self):
        with pytest.raises(StructureError, match="'a'|'b'|'c'"):
            load_edge_list(b"a\tb\nb\tc\nc\ta\n")

    def test_malformed_line_number(self):
        with pytest.raises(ParseError) as err:
            load_edge_list(b"a\tb\nbad line no tab\n")
        assert err.value.line_number == 2

    def test_too_many_tabs(self):
        with pytest.raises(ParseError) as err:
            load_edge_list(b"a\tb\tc\n")
        assert err.value.line_number == 1

    def test_duplicate_edge_rejected(self):
        with pytest.raises(StructureError, match="duplicate"):
            load_edge_list(b"a\tb\na\tb\n")

    def test_self_loop_rejected(self):
        with pytest.raises(StructureError, match="self-loop"):
            load_edge_list(b"a\ta\n")

    def test_multiple_roots_rejected_by_default(self):
        with pytest.raises(StructureError, match="root"):
            load_edge_list(b"a\tb\nc\td\n")

    def test_multiple_roots_allowed_behind_flag(self):
        g = load_edge_list(b"a\tb\nc\td\n", allow_multiple_roots=True)
        assert len(g.roots) == 2

    def test_tree_mode_rejects_second_parent(self):
        with pytest.raises(StructureError, match="parents"):
            load_edge_list(b"a\tb\na\tc\nb\td\nc\td\n", tree=True)

    def test_summary_json(self):
        g = load_edge_list(b"dog\tmammal\nmammal\tanimal\n")
        summary = json.loads(g.summary_json())
        assert summary["tokens"] == 3
        assert summary["edges"] == 2
        assert summary["depth_histogram"] == {"0": 1, "1": 1, "2": 1}


class TestClosure:
    def test_three_chain(self):
        g = chain_graph(2)  # n0 -> n1 -> n2
        assert transitive_closure(g).pairs == [(0, 1), (0, 2), (1, 2)]

    def test_single_edge(self):
        g = load_edge_list(b"a\tb\n")
        assert transitive_closure(g).pairs == [(0, 1)]

    def test_idempotent(self):
        g = generate_hierarchy(60, 6, 3, seed=1, two_parent_count=3)
        closed = set(transitive_closure(g).pairs)
        reclosed = set(brute_closure(sorted(closed), len(g)))
        assert reclosed == closed

    def test_matches_brute_force(self):
        g = generate_hierarchy(40, 5, 3, seed=2, two_parent_count=2)
        assert transitive_closure(g).pairs == brute_closure(g.edges, len(g))

    def test_tree_size_is_sum_of_depths(self):
        g = generate_hierarchy(120, 9, 3, seed=7)
        assert len(transitive_closure(g)) == sum(g.depths())

    def test_at_least_edges(self):
        g = generate_hierarchy(50, 6, 4, seed=3, two_parent_count=2)
        assert len(transitive_closure(g)) >= len(g.edges)


class TestChains:
    def test_plain_chain(self):
        g = chain_graph(2)
        chains = ground_truth_chains(g)
        assert chains[0] == ((0, 1, 2),)

    def test_diamond(self):
        g = load_edge_list(b"a\tb\na\tc\nb\td\nc\td\n")
        chains = ground_truth_chains(g)
        a, b, c, d = (g.id_of(s) for s in "abcd")
        assert set(chains[a]) == {(a, b, d), (a, c, d)}
        assert chains[b] == ((b, d),)

    def test_matches_recursive_oracle(self):
        for seed in range(4):
            g = generate_hierarchy(80, 7, 3, seed=seed, two_parent_count=5)
            chains = ground_truth_chains(g)
            for node in range(len(g)):
                assert list(chains[node]) == enumerate_root_paths(g.parents, node)


class TestAmbiguityProfile:
    def test_pure_tree(self):
        g = generate_hierarchy(50, 6, 3, seed=4)
        prof = ambiguity_profile(g)
        assert prof.histogram == {1: 50}
        assert prof.multi_parent_tokens == []

    def test_diamond_multiplicity(self):
        g = load_edge_list(b"a\tb\na\tc\nb\td\nc\td\n")
        prof = ambiguity_profile(g)
        assert prof.histogram == {1: 3, 2: 1}
        assert prof.multi_parent_tokens == [g.id_of("a")]

    def test_ten_two_path_nodes(self):
        n = 400
        g = generate_hierarchy(n, 8, 4, seed=5, two_parent_count=10)
        prof = ambiguity_profile(g)
        assert prof.histogram == {1: n - 10, 2: 10}
        assert len(prof.multi_parent_tokens) == 10
        assert sum(prof.histogram.values()) == n

    def test_histogram_counts_paths_not_parents(self):
        # The child below a diamond has one parent but two root-paths.
        g = load_edge_list(b"x\ta\na\tb\na\tc\nb\td\nc\td\n")
        prof = ambiguity_profile(g)
        assert prof.histogram[2] == 2  # both x and a have two chains


class TestGenerator:
    def test_single_token(self):
        g = generate_hierarchy(1, 5, 3, seed=0)
        assert len(g) == 1
        assert g.edges == []
        assert g.roots == [0]

    def test_deterministic(self):
        a = generate_hierarchy(300, 9, 4, seed=11, two_parent_count=6)
        b = generate_hierarchy(300, 9, 4, seed=11, two_parent_count=6)
        assert a.edges == b.edges
        assert a.labels == b.labels

    def test_seed_changes_output(self):
        a = generate_hierarchy(300, 9, 4, seed=11)
        b = generate_hierarchy(300, 9, 4, seed=12)
        assert a.edges != b.edges

    def test_respects_depth_and_branching(self):
        g = generate_hierarchy(200, 6, 3, seed=8)
        assert max(g.depths()) <= 6
        assert max(len(c) for c in g.children) <= 3

    def test_infeasible_parameters(self):
        with pytest.raises(ValueError, match="cannot fit"):
            generate_hierarchy(100, 3, 1, seed=0)

    def test_mammal_scale_counts(self):
        g = generate_hierarchy(1182, 10, 4, seed=0, two_parent_count=10)
        prof = ambiguity_profile(g)
        assert len(g) == 1182
        assert prof.total_chains == 1192
        assert prof.histogram == {1: 1172, 2: 10}
        assert max(g.depths()) <= 10

    def test_second_parents_are_incomparable_leaves(self):
        g = generate_hierarchy(500, 9, 4, seed=9, two_parent_count=12)
        closure = set(transitive_closure(g).pairs)
        for node in ambiguity_profile(g).multi_parent_tokens:
            assert not g.children[node]  # still a leaf
            p1, p2 = g.parents[node]
            assert (p1, p2) not in closure and (p2, p1) not in closure

    @given(
        n=st.integers(2, 60),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=40, deadline=None)
    def test_zero_fraction_always_tree(self, n, seed):
        g = generate_hierarchy(n, 12, 3, 0.0, seed)
        assert all(len(p) == 1 for i, p in enumerate(g.parents) if i != g.roots[0])
        assert len(g.roots) == 1

    def test_roundtrip_through_tsv(self):
        g = generate_hierarchy(150, 8, 4, seed=13, two_parent_count=4)
        text = write_edge_list(g)
        g2 = load_edge_list(text.encode("utf-8"), allow_multiple_roots=True)
        remap = {g2.id_of(tok.label): tok.id for tok in g.tokens}
        edges2 = {(remap[c], remap[p]) for c, p in g2.edges}
        assert edges2 == set(g.edges)
