"""Edge-pool partition and the SMALL vertex set.

The m host edges are split into 3k+1 pools: for pool j = 1..3k (taken
in order Ê_{1,1}..Ê_{1,k}, Ê_{2,1}..Ê_{2,k}, Ê_{3,1}..Ê_{3,k}) every
still-unassigned edge joins independently with probability
p_j = 1/(4k-j+1); what remains is E_4, shuffled and dealt round-robin
into k parts of near-equal size.  The telescoping product makes every
pool's expected size exactly m/4k.

A vertex is SMALL when its in- or out-degree is at most c/8k either in
the host or inside any single pool Ê_{t,i} with t <= 3.  E_SMALL is
every host edge touching SMALL; later phases work on
E_{t,i} = Ê_{t,i} ∪ E_SMALL so that low-degree vertices always have
their full edge supply available.

Pool membership is stored as two label arrays over the canonical edge
ids, never as copied edge lists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import SimpleDigraph

__all__ = ["EdgePartition", "split_edges", "compute_small"]


@dataclass
class EdgePartition:
    """Pool labels over edge ids plus the SMALL marks.

    pool_t[e] in {1,2,3,4} and pool_i[e] in [0,k) name the pool of edge
    e.  small/e_small are boolean marks over vertices/edges; both stay
    None until compute_small fills them.
    """

    n: int
    m: int
    k: int
    pool_t: np.ndarray
    pool_i: np.ndarray
    small: np.ndarray | None = None
    e_small: np.ndarray | None = None

    def pool_edges(self, t: int, i: int) -> np.ndarray:
        """Edge ids of Ê_{t,i} (t <= 3) or E_{4,i} (t = 4), ascending."""
        return np.nonzero((self.pool_t == t) & (self.pool_i == i))[0]

    def working_edges(self, t: int, i: int) -> np.ndarray:
        """E_{t,i} = Ê_{t,i} ∪ E_SMALL for t <= 3."""
        if self.e_small is None:
            raise ValueError("compute_small has not run")
        if t not in (1, 2, 3):
            raise ValueError("working sets exist only for t in {1,2,3}")
        mask = (self.pool_t == t) & (self.pool_i == i)
        return np.nonzero(mask | self.e_small)[0]

    def check_cover(self) -> bool:
        """Pools are disjoint and cover all m edges (label arrays make
        disjointness structural; this checks the label ranges)."""
        return (len(self.pool_t) == self.m
                and bool(np.all((self.pool_t >= 1) & (self.pool_t <= 4)))
                and bool(np.all((self.pool_i >= 0) & (self.pool_i < self.k))))

    def to_json(self) -> str:
        obj = {}
        for t in (1, 2, 3, 4):
            for i in range(self.k):
                name = f"E{t}_{i + 1}" if t == 4 else f"Ehat{t}_{i + 1}"
                obj[name] = [int(e) for e in self.pool_edges(t, i)]
        if self.small is not None:
            obj["SMALL"] = [int(v) for v in np.nonzero(self.small)[0]]
            obj["E_SMALL"] = [int(e) for e in np.nonzero(self.e_small)[0]]
        return json.dumps(obj, sort_keys=True)


def split_edges(sd: SimpleDigraph, k: int, rng: np.random.Generator) -> EdgePartition:
    """Assign every edge to one of the 3k+1 pools.

    Sequential independent thinning with p_j = 1/(4k-j+1); leftovers
    become E_4 and are dealt round-robin after a uniform shuffle, so
    the k parts differ in size by at most one.
    """
    m = sd.m
    pool_t = np.zeros(m, dtype=np.int8)
    pool_i = np.full(m, -1, dtype=np.int16)
    unassigned = np.arange(m)
    for j in range(3 * k):
        p = 1.0 / (4 * k - j)
        hit = rng.random(len(unassigned)) < p
        chosen = unassigned[hit]
        pool_t[chosen] = j // k + 1
        pool_i[chosen] = j % k
        unassigned = unassigned[~hit]
    rest = unassigned.copy()
    rng.shuffle(rest)
    for i in range(k):
        part = rest[i::k]
        pool_t[part] = 4
        pool_i[part] = i
    return EdgePartition(n=sd.n, m=m, k=k, pool_t=pool_t, pool_i=pool_i)


def compute_small(sd: SimpleDigraph, part: EdgePartition,
                  c: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Mark SMALL vertices and their incident edges.

    The threshold is the real value c/8k compared with <=; on integer
    degrees this equals floor(c/8k).  Pools with t = 4 do not count:
    they are reserve edges, not working graphs.
    """
    thr = c / (8.0 * k)
    tails = sd.edges[:, 0]
    heads = sd.edges[:, 1]
    small = (sd.out_deg <= thr) | (sd.in_deg <= thr)
    for t in (1, 2, 3):
        for i in range(k):
            mask = (part.pool_t == t) & (part.pool_i == i)
            pool_out = np.bincount(tails[mask], minlength=sd.n)
            pool_in = np.bincount(heads[mask], minlength=sd.n)
            small |= (pool_out <= thr) | (pool_in <= thr)
    e_small = small[tails] | small[heads]
    part.small = small
    part.e_small = e_small
    return small, e_small
