from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from digof.data_io import (
    DataError,
    analyze_network,
    export_edge_list,
    parse_edge_list,
    preprocess,
    preprocess_with_stats,
)
from digof.model import planted_spec, sample_adjacency


def write(tmp_path, text, name="edges.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


def largest_weak_component(edges):
    """BFS over the undirected skeleton; returns the node set of the largest component."""
    adj = {}
    for s, t in edges:
        if s == t:
            continue
        adj.setdefault(s, set()).add(t)
        adj.setdefault(t, set()).add(s)
    seen, best = set(), set()
    for start in adj:
        if start in seen:
            continue
        comp, queue = {start}, deque([start])
        while queue:
            for nb in adj[queue.popleft()]:
                if nb not in comp:
                    comp.add(nb)
                    queue.append(nb)
        seen |= comp
        if len(comp) > len(best):
            best = comp
    return best


class TestParse:
    def test_tsv(self, tmp_path):
        el = parse_edge_list(write(tmp_path, "1\t2\n2\t3\n"))
        assert list(el.edges) == [(1, 2), (2, 3)]

    def test_konect(self, tmp_path):
        el = parse_edge_list(write(tmp_path, "% header\n% 2 3\n1 2 1 1234\n\n"), "konect")
        assert list(el.edges) == [(1, 2)]

    def test_string_ids_interned(self, tmp_path):
        el = parse_edge_list(write(tmp_path, "a\tb\nb\tc\n"))
        assert el.node_ids == ("a", "b", "c")
        assert el.sources.tolist() == [0, 1] and el.targets.tolist() == [1, 2]

    def test_duplicates_kept(self, tmp_path):
        assert len(parse_edge_list(write(tmp_path, "1 2\n1 2\n"))) == 2

    def test_malformed_line_number(self, tmp_path):
        with pytest.raises(DataError, match=":2:"):
            parse_edge_list(write(tmp_path, "1 2\n3\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(DataError):
            parse_edge_list(write(tmp_path, "# nothing\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            parse_edge_list(tmp_path / "absent.tsv")


class TestPreprocess:
    def test_self_loop_dropped(self, tmp_path):
        a = preprocess(parse_edge_list(write(tmp_path, "1 1\n1 2\n")))
        assert a.tolist() == [[0, 1], [0, 0]]

    def test_larger_cycle_kept(self, tmp_path):
        text = "1 2\n2 3\n3 1\n10 11\n11 12\n12 13\n13 10\n"
        a, ids, stats = preprocess_with_stats(parse_edge_list(write(tmp_path, text)))
        assert ids == (10, 11, 12, 13) and stats.n == 4 and stats.components == 2
        assert a.sum() == 4 and np.all(a.sum(axis=0) == 1) and np.all(a.sum(axis=1) == 1)

    def test_duplicates_collapse(self, tmp_path):
        a, _, stats = preprocess_with_stats(parse_edge_list(write(tmp_path, "1 2\n1 2\n2 1\n")))
        assert stats.raw_edges == 3 and stats.unique_edges == 2 and a.sum() == 2

    def test_only_loops(self, tmp_path):
        with pytest.raises(DataError):
            preprocess(parse_edge_list(write(tmp_path, "1 1\n2 2\n")))

    def test_stable_assignment(self, tmp_path):
        path = write(tmp_path, "b a\nc b\nd c\n")
        first = preprocess_with_stats(parse_edge_list(path))
        second = preprocess_with_stats(parse_edge_list(path))
        assert first[1] == second[1] == ("b", "a", "c", "d")
        assert np.array_equal(first[0], second[0])

    def test_idempotent_on_sampled_network(self, tmp_path):
        a = sample_adjacency(planted_spec(120, 2, 2, 0.3, seed=1), 2)
        a0, _, _ = preprocess_with_stats(_edges_from(a, tmp_path, "in.tsv"))
        out = tmp_path / "out.tsv"
        export_edge_list(a0, out)
        assert np.array_equal(preprocess(parse_edge_list(out)), a0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 15), st.integers(1, 15)), min_size=1, max_size=40))
    def test_matches_bfs_oracle(self, edges):
        import tempfile
        from pathlib import Path

        if all(s == t for s, t in edges):
            return
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "e.tsv"
            path.write_text("".join(f"{s}\t{t}\n" for s, t in edges))
            a, ids, _ = preprocess_with_stats(parse_edge_list(path))
            comp = largest_weak_component(edges)
            assert len(ids) == len(comp)
            if len(set(map(len, _all_components(edges)))) == len(_all_components(edges)):
                assert set(ids) == comp
            kept = {(s, t) for s, t in edges if s != t and s in set(ids) and t in set(ids)}
            assert int(a.sum()) == len(kept)
            out = Path(d) / "out.tsv"
            export_edge_list(a, out)
            assert np.array_equal(preprocess(parse_edge_list(out)), a)


def _all_components(edges):
    remaining = list(edges)
    comps = []
    while True:
        comp = largest_weak_component(remaining)
        if not comp:
            return comps
        comps.append(comp)
        remaining = [(s, t) for s, t in remaining if s not in comp]


def _edges_from(a, tmp_path, name):
    path = tmp_path / name
    export_edge_list(a, path)
    return parse_edge_list(path)


def test_export_format(tmp_path):
    a = np.array([[0, 0, 1], [1, 0, 0], [1, 1, 0]], dtype=np.uint8)
    export_edge_list(a, tmp_path / "x.tsv")
    assert (tmp_path / "x.tsv").read_text() == "1\t3\n2\t1\n3\t1\n3\t2\n"


def test_analyze_network_defaults():
    a = sample_adjacency(planted_spec(300, 2, 2, 0.5, seed=3), 4)
    trace, pair = analyze_network(a, kmax=3)
    assert pair == (2, 2) and trace.params["kmax"] == 3 and len(trace.visited) == 9
    small = sample_adjacency(planted_spec(6, 1, 1, 0.9, seed=0), 1)
    trace, _ = analyze_network(small)
    assert trace.params["kmax"] == 6
