"""Benchmark graph generators and uniform random walks on them.

Node indices are 0-based in Python and 1-based in edge-list files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import Disconnected, NotAperiodic, NotIrreducible, SizeTooSmall
from .rng import GRAPH, make_rng
from .spectral import MarkovChain, validate_chain

RGG_RADIUS = 0.055
WS_K = 30
WS_P = 0.1
MAX_ATTEMPTS = 100


@dataclass(frozen=True, eq=False)
class Graph:
    """Edge set on ``m`` nodes.

    ``edges`` is an ``(E, 2)`` integer array of ordered pairs, sorted
    lexicographically and free of duplicates.  Undirected graphs store
    both orientations.
    """

    m: int
    edges: np.ndarray
    directed: bool = False

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.m == other.m
            and self.directed == other.directed
            and np.array_equal(self.edges, other.edges)
        )

    __hash__ = None

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.m)

    def adjacency(self) -> sp.csr_matrix:
        e = self.edges
        data = np.ones(len(e), dtype=np.int8)
        return sp.csr_matrix((data, (e[:, 0], e[:, 1])), shape=(self.m, self.m))

    def is_strongly_connected(self) -> bool:
        ncomp, _ = connected_components(self.adjacency(), directed=True, connection="strong")
        return ncomp == 1


def _make_graph(m: int, pairs, directed: bool = False, self_loops: bool = False) -> Graph:
    e = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if not directed:
        e = np.concatenate([e, e[:, ::-1]])
    if self_loops:
        loops = np.repeat(np.arange(m, dtype=np.int64), 2).reshape(-1, 2)
        e = np.concatenate([e, loops])
    e = np.unique(e, axis=0)
    e.setflags(write=False)
    return Graph(m=m, edges=e, directed=directed)


def gen_cycle(n: int, self_loops: bool = False) -> Graph:
    """Undirected cycle on ``n >= 3`` nodes."""
    if n < 3:
        raise SizeTooSmall(f"cycle needs n >= 3, got {n}")
    i = np.arange(n)
    return _make_graph(n, np.column_stack([i, (i + 1) % n]), self_loops=self_loops)


def gen_grid(w: int, h: int, self_loops: bool = False) -> Graph:
    """``w`` by ``h`` 4-neighbour lattice, node ``r*w + c``.

    With ``self_loops=True`` every node also links to itself, so the
    uniform walk stays put with probability ``1/(deg+1)``.  That variant
    is aperiodic and has entropy rate 1.587 nats at 32x32.
    """
    if w < 2 or h < 2:
        raise SizeTooSmall(f"grid needs w, h >= 2, got {w}x{h}")
    idx = np.arange(w * h).reshape(h, w)
    right = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    down = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    return _make_graph(w * h, np.concatenate([right, down]), self_loops=self_loops)


def gen_rgg(n: int, radius: float = RGG_RADIUS, seed: int = 0) -> Graph:
    """Random geometric graph in the unit square.

    Points are drawn uniformly; nodes closer than ``radius`` are joined.
    Disconnected draws are discarded and redrawn from a fresh stream, at
    most ``MAX_ATTEMPTS`` times.
    """
    if n < 2:
        raise SizeTooSmall(f"random geometric graph needs n >= 2, got {n}")
    if not radius > 0:
        raise ValueError("radius must be positive")
    radius = min(float(radius), 1.0)
    for attempt in range(MAX_ATTEMPTS):
        rng = make_rng(seed, GRAPH + attempt)
        pts = rng.random((n, 2))
        pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
        g = _make_graph(n, pairs)
        if g.is_strongly_connected():
            return g
    raise Disconnected(f"no connected RGG(n={n}, r={radius}) in {MAX_ATTEMPTS} attempts")


def gen_watts_strogatz(n: int, k: int = WS_K, p_rewire: float = WS_P, seed: int = 0) -> Graph:
    """Watts-Strogatz small world graph.

    Start from a ring where each node links to its ``k/2`` nearest
    neighbours on each side, then visit the edges ``(u, u+j)`` for
    ``j = 1..k/2`` and ``u = 0..n-1`` and with probability ``p_rewire``
    move the far end to a uniformly chosen node that is neither ``u`` nor
    already adjacent to it.
    """
    if k < 2 or k % 2:
        raise ValueError(f"k must be a positive even integer, got {k}")
    if k >= n:
        raise SizeTooSmall(f"need k < n, got k={k}, n={n}")
    if not 0.0 <= p_rewire <= 1.0:
        raise ValueError("p_rewire must lie in [0, 1]")
    for attempt in range(MAX_ATTEMPTS):
        rng = make_rng(seed, GRAPH + attempt)
        adj = [set() for _ in range(n)]
        for u in range(n):
            for j in range(1, k // 2 + 1):
                v = (u + j) % n
                adj[u].add(v)
                adj[v].add(u)
        for j in range(1, k // 2 + 1):
            coins = rng.random(n)
            for u in range(n):
                v = (u + j) % n
                if coins[u] >= p_rewire or v not in adj[u]:
                    continue
                if len(adj[u]) >= n - 1:
                    continue
                while True:
                    w = int(rng.integers(n))
                    if w != u and w not in adj[u]:
                        break
                adj[u].discard(v)
                adj[v].discard(u)
                adj[u].add(w)
                adj[w].add(u)
        pairs = [(u, v) for u in range(n) for v in adj[u] if u < v]
        g = _make_graph(n, pairs)
        if g.is_strongly_connected():
            return g
    raise Disconnected(f"no connected Watts-Strogatz graph in {MAX_ATTEMPTS} attempts")


def uniform_walk_chain(g: Graph, laziness: float = 0.0) -> MarkovChain:
    """Uniform random walk over out-neighbours.

    ``laziness`` adds a self-loop of that probability at every node and
    scales the neighbour moves by ``1 - laziness``.

    Raises
    ------
    NotIrreducible, NotAperiodic
        Propagated from :func:`validate_chain`.
    """
    if not 0.0 <= laziness < 1.0:
        raise ValueError("laziness must lie in [0, 1)")
    deg = g.out_degrees()
    if np.any(deg == 0):
        raise NotIrreducible("graph has a node without out-edges")
    p = np.zeros((g.m, g.m))
    src, dst = g.edges[:, 0], g.edges[:, 1]
    p[src, dst] = 1.0 / deg[src]
    if laziness > 0:
        p *= 1.0 - laziness
        p[np.diag_indices(g.m)] += laziness
    return validate_chain(p)


def is_bipartite_periodic(g: Graph) -> bool:
    """True when the uniform walk on ``g`` is irreducible but periodic."""
    try:
        uniform_walk_chain(g)
    except NotAperiodic:
        return True
    return False


# ----------------------------------------------------------------------
# edge-list files


def write_edge_list(path_or_file, g: Graph) -> None:
    """Header ``M <m> <directed|undirected>`` then 1-indexed ``i j`` lines.

    Undirected edges are written once, with ``i <= j``.
    """
    e = g.edges if g.directed else g.edges[g.edges[:, 0] <= g.edges[:, 1]]
    kind = "directed" if g.directed else "undirected"
    text = "".join([f"M {g.m} {kind}\n"] + [f"{i + 1} {j + 1}\n" for i, j in e])
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
        return
    with open(path_or_file, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def read_edge_list(path) -> Graph:
    with open(path, encoding="ascii") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or len(lines[0]) != 3 or lines[0][0] != "M":
        raise ValueError(f"{path}: expected header 'M <m> <directed|undirected>'")
    m = int(lines[0][1])
    kind = lines[0][2]
    if kind not in ("directed", "undirected"):
        raise ValueError(f"{path}: unknown graph kind {kind!r}")
    pairs = []
    for lineno, parts in enumerate(lines[1:], start=2):
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'i j'")
        i, j = int(parts[0]), int(parts[1])
        if not (1 <= i <= m and 1 <= j <= m):
            raise ValueError(f"{path}:{lineno}: node index out of range 1..{m}")
        pairs.append((i - 1, j - 1))
    directed = kind == "directed"
    e = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    loops = e[:, 0] == e[:, 1]
    g = _make_graph(m, e[~loops], directed=directed)
    if loops.any():
        all_e = np.unique(np.concatenate([g.edges, e[loops]]), axis=0)
        all_e.setflags(write=False)
        g = Graph(m=m, edges=all_e, directed=directed)
    return g
