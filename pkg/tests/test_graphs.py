import io
import math

import networkx as nx
import numpy as np
import pytest

from walkdet import (
    Graph,
    NotAperiodic,
    SizeTooSmall,
    entropy_rate,
    gen_cycle,
    gen_grid,
    gen_rgg,
    gen_watts_strogatz,
    uniform_walk_chain,
)
from walkdet.graphs import is_bipartite_periodic, read_edge_list, write_edge_list


def degrees(g: Graph) -> np.ndarray:
    return g.out_degrees()


class TestCycle:
    def test_triangle_records(self):
        g = gen_cycle(3)
        assert g.m == 3
        assert len(g.edges) == 6
        assert set(map(tuple, g.edges)) == {(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)}

    def test_degree_two(self):
        assert np.all(degrees(gen_cycle(101)) == 2)
        assert len(gen_cycle(101).edges) == 202

    def test_too_small(self):
        with pytest.raises(SizeTooSmall):
            gen_cycle(2)

    def test_even_cycle_generates_but_is_periodic(self):
        g = gen_cycle(4)
        assert g.m == 4
        with pytest.raises(NotAperiodic):
            uniform_walk_chain(g)
        assert is_bipartite_periodic(g)
        assert not is_bipartite_periodic(gen_cycle(5))

    def test_odd_cycle_entropy(self):
        assert entropy_rate(uniform_walk_chain(gen_cycle(101))) == pytest.approx(math.log(2), abs=1e-12)


class TestGrid:
    def test_two_by_two(self):
        g = gen_grid(2, 2)
        assert g.m == 4
        assert np.all(degrees(g) == 2)

    def test_three_by_three_degrees(self):
        d = degrees(gen_grid(3, 3)).reshape(3, 3)
        assert d[0, 0] == d[0, 2] == d[2, 0] == d[2, 2] == 2
        assert d[0, 1] == d[1, 0] == d[1, 2] == d[2, 1] == 3
        assert d[1, 1] == 4

    def test_node_count(self):
        assert gen_grid(32, 32).m == 1024
        assert gen_grid(5, 3).m == 15

    def test_matches_networkx(self):
        g = gen_grid(4, 3)
        ref = nx.convert_node_labels_to_integers(nx.grid_2d_graph(3, 4), ordering="sorted")
        assert set(map(tuple, g.edges)) == {(u, v) for u, v in ref.to_directed().edges}

    def test_too_small(self):
        with pytest.raises(SizeTooSmall):
            gen_grid(1, 5)

    def test_bipartite_grid_periodic(self):
        with pytest.raises(NotAperiodic):
            uniform_walk_chain(gen_grid(4, 4))

    def test_laziness_restores_aperiodicity(self):
        c = uniform_walk_chain(gen_grid(4, 4), laziness=1e-6)
        assert c.p[0, 0] == pytest.approx(1e-6)
        np.testing.assert_allclose(c.p.sum(axis=1), 1.0, atol=1e-15)

    def test_self_loop_variant(self):
        c = uniform_walk_chain(gen_grid(3, 3, self_loops=True))
        assert c.p[4, 4] == pytest.approx(0.2)
        assert c.p[0, 0] == pytest.approx(1 / 3)


class TestRgg:
    def test_deterministic(self):
        assert gen_rgg(200, 0.15, seed=3) == gen_rgg(200, 0.15, seed=3)

    def test_seed_matters(self):
        assert gen_rgg(200, 0.15, seed=3) != gen_rgg(200, 0.15, seed=4)

    def test_two_nodes_large_radius(self):
        g = gen_rgg(2, 1.5, seed=0)
        assert len(g.edges) == 2

    def test_connected(self):
        g = gen_rgg(300, 0.12, seed=1)
        assert g.is_strongly_connected()
        assert not np.any(g.edges[:, 0] == g.edges[:, 1])

    def test_radius_rule(self):
        # regenerate the accepted point set and check every pair
        from walkdet.rng import GRAPH, make_rng

        g = gen_rgg(60, 0.3, seed=9)
        for attempt in range(100):
            pts = make_rng(9, GRAPH + attempt).random((60, 2))
            d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
            adj = (d <= 0.3) & ~np.eye(60, dtype=bool)
            if nx.is_connected(nx.from_numpy_array(adj.astype(int))):
                break
        want = {(int(i), int(j)) for i, j in zip(*np.nonzero(adj))}
        assert set(map(tuple, g.edges.tolist())) == want

    def test_disconnected_budget(self):
        from walkdet import Disconnected

        with pytest.raises(Disconnected):
            gen_rgg(50, 0.001, seed=0)

    def test_too_small(self):
        with pytest.raises(SizeTooSmall):
            gen_rgg(1, 0.5)


class TestWattsStrogatz:
    def test_ring_lattice(self):
        g = gen_watts_strogatz(20, 4, 0.0, seed=0)
        assert np.all(degrees(g) == 4)
        assert {(0, 1), (0, 2), (0, 18), (0, 19)} <= set(map(tuple, g.edges.tolist()))

    def test_deterministic(self):
        assert gen_watts_strogatz(100, 6, 0.3, seed=2) == gen_watts_strogatz(100, 6, 0.3, seed=2)

    def test_edge_count_preserved(self):
        g = gen_watts_strogatz(100, 6, 0.5, seed=2)
        assert len(g.edges) == 2 * 100 * 3
        assert not np.any(g.edges[:, 0] == g.edges[:, 1])

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            gen_watts_strogatz(10, 3, 0.1)
        with pytest.raises(SizeTooSmall):
            gen_watts_strogatz(6, 6, 0.1)
        with pytest.raises(ValueError):
            gen_watts_strogatz(10, 2, 1.5)


class TestUniformWalk:
    def test_triangle(self):
        c = uniform_walk_chain(gen_cycle(3))
        np.testing.assert_allclose(c.p, (np.ones((3, 3)) - np.eye(3)) / 2)

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_regular_entries_and_entropy(self, k):
        g = gen_watts_strogatz(31, k, 0.0, seed=0) if k > 2 else gen_cycle(31)
        c = uniform_walk_chain(g)
        assert np.all(c.p[c.support] == 1.0 / k)
        assert entropy_rate(c) == pytest.approx(math.log(k), abs=1e-12)

    def test_irregular_rows(self):
        c = uniform_walk_chain(gen_rgg(100, 0.2, seed=5))
        deg = c.support.sum(axis=1)
        np.testing.assert_allclose(c.p.max(axis=1), 1.0 / deg)

    def test_bad_laziness(self):
        with pytest.raises(ValueError):
            uniform_walk_chain(gen_cycle(5), laziness=1.0)


class TestEdgeList:
    def test_round_trip(self, tmp_path):
        g = gen_watts_strogatz(50, 4, 0.2, seed=1)
        f = tmp_path / "g.txt"
        write_edge_list(f, g)
        assert read_edge_list(f) == g

    def test_format(self):
        buf = io.StringIO()
        write_edge_list(buf, gen_cycle(3))
        assert buf.getvalue() == "M 3 undirected\n1 2\n1 3\n2 3\n"

    def test_directed_round_trip(self, tmp_path):
        f = tmp_path / "d.txt"
        f.write_text("M 3 directed\n1 2\n2 3\n3 1\n3 3\n")
        g = read_edge_list(f)
        assert g.directed
        assert set(map(tuple, g.edges.tolist())) == {(0, 1), (1, 2), (2, 0), (2, 2)}
        write_edge_list(tmp_path / "e.txt", g)
        assert read_edge_list(tmp_path / "e.txt") == g

    def test_out_of_range(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("M 3 undirected\n1 4\n")
        with pytest.raises(ValueError):
            read_edge_list(f)

    def test_bad_header(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("3 undirected\n1 2\n")
        with pytest.raises(ValueError):
            read_edge_list(f)
