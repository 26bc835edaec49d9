"""Phase 1: k edge-disjoint perfect matchings, then cycle covers.

A digraph on [n] maps to a bipartite graph on A ∪ B (two copies of
[n]) with an edge {a_u, b_v} per digraph edge (u, v); perfect
matchings correspond to cycle covers.  For each i the working graph
G_i is built from Ê_{1,i} plus the unused E_SMALL edges, a maximum
matching is found, and any deficiency is repaired by streaming booster
edges from Ê_{2,i} one at a time, each followed by a single
augmenting-path search.  A global used-edge bitset keeps the k
matchings edge-disjoint and stops E_SMALL edges from being spent
twice.

The B side is relabeled by a uniform random permutation before
matching and unrelabeled after, so the algorithmic tie-breaking cannot
bias the cycle statistics of the resulting cover away from those of a
uniform permutation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import PhaseFailure
from .model import SimpleDigraph
from .partition import EdgePartition

__all__ = [
    "BipartiteGraph", "Matching", "PerfectMatching", "BoosterReport",
    "digraph_to_bipartite", "maximum_matching", "booster_augment",
    "build_k_matchings", "matching_to_cycle_cover",
]

try:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching as _scipy_mbm
except ImportError:  # pragma: no cover
    _scipy_mbm = None


class BipartiteGraph:
    """Side A and side B are both [n); adjacency from A; every edge
    remembers the host edge id it came from."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self._eid: dict[int, int] = {}

    def add_edge(self, a: int, b: int, eid: int) -> None:
        self.adj[a].append(b)
        self._eid[a * self.n + b] = eid

    def has_edge(self, a: int, b: int) -> bool:
        return a * self.n + b in self._eid

    def edge_id(self, a: int, b: int) -> int:
        return self._eid[a * self.n + b]

    @property
    def num_edges(self) -> int:
        return len(self._eid)


def digraph_to_bipartite(edge_ids, sd: SimpleDigraph,
                         relabel: np.ndarray | None = None) -> BipartiteGraph:
    """Translate host edges into the bipartite view.

    relabel, when given, is a permutation applied to the B side: host
    edge (u, v) becomes {a_u, b_relabel[v]}.
    """
    g = BipartiteGraph(sd.n)
    for e in np.asarray(edge_ids, dtype=np.int64):
        u, v = sd.edges[e]
        b = int(relabel[v]) if relabel is not None else int(v)
        g.add_edge(int(u), b, int(e))
    return g


@dataclass
class Matching:
    """Partial injective pairing between the two sides; -1 = exposed."""

    pair_a: np.ndarray
    pair_b: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "Matching":
        return cls(np.full(n, -1, dtype=np.int64),
                   np.full(n, -1, dtype=np.int64))

    @property
    def size(self) -> int:
        return int((self.pair_a >= 0).sum())

    def is_perfect(self) -> bool:
        return bool((self.pair_a >= 0).all())

    def check_consistent(self, g: BipartiteGraph) -> bool:
        for a, b in enumerate(self.pair_a):
            if b >= 0 and (self.pair_b[b] != a or not g.has_edge(a, int(b))):
                return False
        return True


def _hopcroft_karp(g: BipartiteGraph) -> Matching:
    # textbook Hopcroft-Karp: BFS layering, then layered DFS sweeps
    n = g.n
    adj = g.adj
    INF = n + 1
    pair_a = [-1] * n
    pair_b = [-1] * n
    dist = [INF] * n

    def bfs() -> bool:
        q = deque()
        for a in range(n):
            if pair_a[a] < 0:
                dist[a] = 0
                q.append(a)
            else:
                dist[a] = INF
        found = False
        while q:
            a = q.popleft()
            for b in adj[a]:
                a2 = pair_b[b]
                if a2 < 0:
                    found = True
                elif dist[a2] == INF:
                    dist[a2] = dist[a] + 1
                    q.append(a2)
        return found

    def dfs(a: int) -> bool:
        for b in adj[a]:
            a2 = pair_b[b]
            if a2 < 0 or (dist[a2] == dist[a] + 1 and dfs(a2)):
                pair_a[a] = b
                pair_b[b] = a
                return True
        dist[a] = INF
        return False

    while bfs():
        for a in range(n):
            if pair_a[a] < 0:
                dfs(a)
    return Matching(np.asarray(pair_a, dtype=np.int64),
                    np.asarray(pair_b, dtype=np.int64))


def _scipy_matching(g: BipartiteGraph) -> Matching:
    rows, cols = [], []
    for a, nbrs in enumerate(g.adj):
        rows.extend([a] * len(nbrs))
        cols.extend(nbrs)
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                     shape=(g.n, g.n))
    pair_a = _scipy_mbm(mat, perm_type="column").astype(np.int64)
    pair_b = np.full(g.n, -1, dtype=np.int64)
    hit = np.nonzero(pair_a >= 0)[0]
    pair_b[pair_a[hit]] = hit
    return Matching(pair_a, pair_b)


def maximum_matching(g: BipartiteGraph, engine: str = "auto") -> Matching:
    """Maximum-cardinality matching.

    engine="native" runs the augmenting-phase implementation here;
    "auto" prefers the scipy C routine (same algorithm family, an
    order of magnitude faster) and falls back to native.  Both are
    deterministic for a fixed adjacency.
    """
    if engine == "auto" and _scipy_mbm is not None:
        return _scipy_matching(g)
    return _hopcroft_karp(g)


class _AlternatingForest:
    """Reachability from exposed A-vertices along alternating paths.

    Grown incrementally as booster edges arrive: reach_a holds A
    vertices reachable by even alternating paths, reach_b the B
    vertices reachable by odd ones, parent_b the discovering A vertex.
    An exposed vertex entering reach_b completes an augmenting path.
    """

    def __init__(self, g: BipartiteGraph, mt: Matching):
        self.g = g
        self.mt = mt

    def rebuild(self):
        n = self.g.n
        self.reach_a = bytearray(n)
        self.reach_b = bytearray(n)
        self.parent_b = [-1] * n
        self.queue = deque()
        for a in range(n):
            if self.mt.pair_a[a] < 0:
                self.reach_a[a] = 1
                self.queue.append(a)
        return self._drain()

    def _visit(self, a: int, b: int):
        """Mark b discovered from a; returns b if b is exposed."""
        self.reach_b[b] = 1
        self.parent_b[b] = a
        a2 = int(self.mt.pair_b[b])
        if a2 < 0:
            return b
        self.reach_a[a2] = 1
        self.queue.append(a2)
        return None

    def _drain(self):
        while self.queue:
            a = self.queue.popleft()
            for b in self.g.adj[a]:
                if not self.reach_b[b]:
                    hit = self._visit(a, b)
                    if hit is not None:
                        return hit
        return None

    def offer(self, a: int, b: int):
        """Feed one new edge; returns an exposed B endpoint if this
        completes an augmenting path, else None."""
        if not self.reach_a[a] or self.reach_b[b]:
            return None
        hit = self._visit(a, b)
        if hit is not None:
            return hit
        return self._drain()

    def augment(self, b_end: int):
        """Flip the alternating path ending at the exposed b_end."""
        b = b_end
        while b >= 0:
            a = self.parent_b[b]
            prev_b = int(self.mt.pair_a[a])
            self.mt.pair_a[a] = b
            self.mt.pair_b[b] = a
            b = prev_b

    def witness(self) -> tuple[np.ndarray, np.ndarray]:
        """Hall violator: S = reachable A side, N(S) = reachable B side
        with |N(S)| = |S| - (number of exposed roots) < |S|."""
        s = np.nonzero(np.frombuffer(bytes(self.reach_a), dtype=np.uint8))[0]
        ns = np.nonzero(np.frombuffer(bytes(self.reach_b), dtype=np.uint8))[0]
        return s.astype(np.int64), ns.astype(np.int64)


@dataclass
class BoosterReport:
    matching: Matching
    consumed: int
    witness: tuple[np.ndarray, np.ndarray] | None

    def is_perfect(self) -> bool:
        return self.witness is None


def booster_augment(g: BipartiteGraph, mt: Matching, stream,
                    rng: np.random.Generator | None = None) -> BoosterReport:
    """Repair a non-perfect maximum matching with streamed boosters.

    stream yields (a, b, host_edge_id) triples; each edge joins g and
    triggers at most one augmenting-path extension.  Scanning stops as
    soon as the matching is perfect.  On exhaustion the report carries
    the Hall violator certifying that no perfect matching exists in
    the graph examined so far.
    """
    forest = _AlternatingForest(g, mt)
    hit = forest.rebuild()
    while hit is not None:  # mt was not maximum: finish the job first
        forest.augment(hit)
        hit = forest.rebuild()
    consumed = 0
    for a, b, eid in stream:
        if mt.is_perfect():
            break
        a, b = int(a), int(b)
        if g.has_edge(a, b):
            continue
        g.add_edge(a, b, int(eid))
        consumed += 1
        hit = forest.offer(a, b)
        while hit is not None:
            forest.augment(hit)
            hit = forest.rebuild()
    if mt.is_perfect():
        return BoosterReport(matching=mt, consumed=consumed, witness=None)
    return BoosterReport(matching=mt, consumed=consumed,
                         witness=forest.witness())


@dataclass
class PerfectMatching:
    """A perfect matching translated back to digraph terms: vertex v is
    matched to succ[v] through host edge edge_ids[v]."""

    succ: np.ndarray
    edge_ids: np.ndarray


def _finalize(g: BipartiteGraph, mt: Matching,
              unlabel: np.ndarray) -> PerfectMatching:
    n = g.n
    succ = np.empty(n, dtype=np.int64)
    eids = np.empty(n, dtype=np.int64)
    for a in range(n):
        b = int(mt.pair_a[a])
        succ[a] = unlabel[b]
        eids[a] = g.edge_id(a, b)
    return PerfectMatching(succ=succ, edge_ids=eids)


def build_k_matchings(sd: SimpleDigraph, part: EdgePartition,
                      rng: np.random.Generator, used: np.ndarray | None = None,
                      engine: str = "auto",
                      relabel: bool = True) -> list[PerfectMatching]:
    """k pairwise edge-disjoint perfect matchings, one per pool index.

    G_i = (Ê_{1,i} ∪ E_SMALL) minus every edge spent by earlier
    matchings; boosters stream from the unspent part of Ê_{2,i} in
    uniform random order.  used, when passed in, is the trial-global
    bitset and is updated in place.
    """
    if part.e_small is None:
        raise ValueError("compute_small has not run")
    n, k = sd.n, part.k
    if used is None:
        used = np.zeros(sd.m, dtype=bool)
    small_ids = np.nonzero(part.e_small)[0]
    out = []
    for i in range(k):
        if relabel:
            label = rng.permutation(n).astype(np.int64)
        else:
            label = np.arange(n, dtype=np.int64)
        unlabel = np.empty(n, dtype=np.int64)
        unlabel[label] = np.arange(n)
        base = np.union1d(part.pool_edges(1, i), small_ids)
        base = base[~used[base]]
        g = digraph_to_bipartite(base, sd, relabel=label)
        mt = maximum_matching(g, engine=engine)
        if not mt.is_perfect():
            pool2 = part.pool_edges(2, i)
            pool2 = pool2[~used[pool2] & ~part.e_small[pool2]]
            pool2 = pool2[rng.permutation(len(pool2))]
            uu = sd.edges[pool2, 0]
            vv = label[sd.edges[pool2, 1]]
            report = booster_augment(g, mt, zip(uu, vv, pool2), rng)
            if not report.is_perfect():
                s, ns = report.witness
                raise PhaseFailure(
                    "phase1", f"deficiency witness |S|={len(s)} > "
                    f"|N(S)|={len(ns)} after {report.consumed} boosters",
                    index=i, witness=report.witness)
            mt = report.matching
        pm = _finalize(g, mt, unlabel)
        if used[pm.edge_ids].any():
            raise PhaseFailure("phase1", "matched an already-used edge",
                               index=i)
        used[pm.edge_ids] = True
        out.append(pm)
    return out


def matching_to_cycle_cover(pm: PerfectMatching):
    """Read the perfect matching as a permutation digraph: the B
    partner of a_v becomes the successor of v."""
    from .cover import PermutationDigraph
    return PermutationDigraph(pm.succ, pm.edge_ids)
