"""Cycle-cover repair: rotation trees and the small-cycle sweep."""

import itertools
import math

import numpy as np
import pytest

from hampack import cover as cv
from hampack.cover import (
    PermutationDigraph,
    PhaseTwoBudget,
    cycles_of,
    eliminate_small_cycles,
)
from hampack.errors import PhaseFailure
from hampack.matching import build_k_matchings, matching_to_cycle_cover
from hampack.model import SimpleDigraph
from hampack.partition import compute_small, split_edges
from hampack.rng import rng_stream


def perm_digraph(*cycles, n=None, with_ids=False):
    """Build a PermutationDigraph from explicit vertex cycles."""
    if n is None:
        n = max(v for cyc in cycles for v in cyc) + 1
    succ = np.full(n, -1, dtype=np.int64)
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            succ[a] = b
    assert (succ >= 0).all(), "cycles must cover all vertices"
    ids = np.arange(n, dtype=np.int64) if with_ids else None
    return PermutationDigraph(succ, ids)


def host_with_cover(*cycles, extra=()):
    """SimpleDigraph whose first edges realise the given cover.

    Returns (sd, pd, pool_ids) where pool_ids are the ids of the
    extra (reserve) edges.
    """
    n = max(v for cyc in cycles for v in cyc) + 1
    cover_edges = []
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            cover_edges.append((a, b))
    edges = np.array(cover_edges + list(extra), dtype=np.int64)
    sd = SimpleDigraph(n, edges, k=1)
    succ = np.full(n, -1, dtype=np.int64)
    eids = np.full(n, -1, dtype=np.int64)
    for i, (a, b) in enumerate(cover_edges):
        succ[a] = b
        eids[a] = i
    pd = PermutationDigraph(succ, eids)
    pool_ids = np.arange(len(cover_edges), len(edges), dtype=np.int64)
    return sd, pd, pool_ids


def tiny_budget(n0, **kw):
    base = dict(n0=n0, alpha=4, leaf_target=4, leaf_cap=16, w_cap=10 ** 9)
    base.update(kw)
    return PhaseTwoBudget(**base)


class TestPermutationDigraph:
    def test_cycle_extraction(self):
        pd = perm_digraph([0, 3, 1], [2, 4], [5])
        assert pd.num_cycles == 3
        assert sorted(pd.cycle_lens.tolist()) == [1, 2, 3]
        for v in (0, 3, 1):
            assert pd.cycle_id[v] == pd.cycle_id[0]
        assert pd.cycle_len_of(4) == 2
        # pos is the offset from the cycle's canonical start
        walk = pd.cycles[pd.cycle_id[0]]
        for off, v in enumerate(walk):
            assert pd.pos[v] == off
            assert pd.succ[walk[off]] == walk[(off + 1) % len(walk)]

    def test_pred_inverts_succ(self):
        pd = perm_digraph([0, 1, 2, 3, 4])
        assert (pd.pred[pd.succ] == np.arange(5)).all()

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            PermutationDigraph(np.array([0, 0, 2]))
        with pytest.raises(ValueError):
            PermutationDigraph(np.array([], dtype=np.int64))

    def test_arc_edges(self):
        pd = perm_digraph([0, 1, 2, 3, 4, 5])
        assert pd.arc_edges(1, 4) == 3
        assert pd.arc_edges(4, 1) == 3  # wraps around
        assert pd.arc_edges(2, 2) == 0
        pd2 = perm_digraph([0, 1], [2, 3])
        with pytest.raises(ValueError):
            pd2.arc_edges(0, 2)


class TestCyclesOf:
    def test_threshold_at_ten_thousand(self):
        # n/ln n = 1085.73...: 1085 is small, 1086 is not
        n = 10_000
        lens = [1085, 1086, n - 1085 - 1086]
        succ = np.empty(n, dtype=np.int64)
        start = 0
        for ln in lens:
            block = np.arange(start, start + ln)
            succ[block] = np.roll(block, -1)
            start += ln
        pd = PermutationDigraph(succ)
        small, large = cycles_of(pd, n / math.log(n))
        small_lens = sorted(int(pd.cycle_lens[c]) for c in small)
        large_lens = sorted(int(pd.cycle_lens[c]) for c in large)
        assert small_lens == [1085]
        assert large_lens == [1086, n - 2171]

    def test_all_large_single_cycle(self):
        pd = perm_digraph(list(range(40)))
        small, large = cycles_of(pd, 40 / math.log(40))
        assert small == [] and large == [0]


class TestUniformCycleLaw:
    def test_expected_vertices_on_short_cycles_exact(self):
        # over all permutations of [6], E[#vertices on cycles of
        # length <= s] = s for every s
        n = 6
        totals = {s: 0 for s in (1, 2, 3)}
        count = 0
        for p in itertools.permutations(range(n)):
            pd = PermutationDigraph(np.array(p, dtype=np.int64))
            count += 1
            for s in totals:
                totals[s] += int(
                    sum(ln for ln in pd.cycle_lens.tolist() if ln <= s))
        assert count == math.factorial(n)
        for s, tot in totals.items():
            assert tot == s * count

    def test_expected_cycle_count_is_harmonic(self):
        n = 6
        tot = sum(
            PermutationDigraph(np.array(p, dtype=np.int64)).num_cycles
            for p in itertools.permutations(range(n)))
        harmonic = sum(1.0 / j for j in range(1, n + 1))
        assert tot / math.factorial(n) == pytest.approx(harmonic)


class TestPathSegments:
    def make(self):
        # one 8-cycle broken at (7 -> 0): path 0 1 2 3 4 5 6 7
        pd = perm_digraph([0, 1, 2, 3, 4, 5, 6, 7], [8, 9, 10])
        root = cv._root_node(pd, 0, 7, int(pd.cycle_id[0]))
        return pd, root

    def test_root_segment(self):
        pd, root = self.make()
        assert root.segs == ((0, 7),)
        assert root.path_v == 8
        assert root.end == 7

    def test_locate_on_single_arc(self):
        pd, root = self.make()
        for v in range(8):
            assert cv._locate(pd, root.segs, v) == (0, v)
        assert cv._locate(pd, root.segs, 9) is None

    def test_locate_respects_arc_bounds(self):
        pd = perm_digraph([0, 1, 2, 3, 4, 5, 6, 7])
        segs = ((2, 5),)  # sub-arc 2 3 4 5 only
        assert cv._locate(pd, segs, 3) == (0, 1)
        assert cv._locate(pd, segs, 5) == (0, 3)
        assert cv._locate(pd, segs, 7) is None
        assert cv._locate(pd, segs, 0) is None

    def test_locate_across_segments(self):
        pd = perm_digraph([0, 1, 2, 3], [4, 5, 6, 7])
        segs = ((0, 2), (5, 7))  # path 0 1 2 | 5 6 7
        assert cv._locate(pd, segs, 1) == (0, 1)
        assert cv._locate(pd, segs, 5) == (1, 3)
        assert cv._locate(pd, segs, 7) == (1, 5)
        assert cv._locate(pd, segs, 4) is None

    def test_absorb_appends_full_cycle(self):
        pd, root = self.make()
        segs, touched, pv, x = cv._apply_absorb(
            pd, root.segs, root.touched, root.path_v, 9)
        assert segs == ((0, 7), (9, 8))  # enters at 9, runs to pred 8
        assert pv == 8 + 3
        assert x == 8
        assert touched == root.touched | {int(pd.cycle_id[9])}

    def test_split_tail_keeps_prefix(self):
        pd, root = self.make()
        segs, x = cv._split_tail(pd, root.segs, 0, 5)
        assert segs == ((0, 4),)
        assert x == 4

    def test_split_head_keeps_suffix(self):
        pd, root = self.make()
        segs, x = cv._split_head(pd, root.segs, 0, 2)
        assert segs == ((3, 7),)
        assert x == 3


class TestReplay:
    def make(self):
        pd = perm_digraph(list(range(12)), [12, 13, 14, 15])
        root = cv._root_node(pd, 0, 11, int(pd.cycle_id[0]))
        return pd, root

    def test_empty_chain_needs_long_path(self):
        pd, root = self.make()
        ok, pv, segs = cv._replay(pd, root, [], n0=4)
        assert ok and pv == 12 and segs == root.segs
        ok, _, _ = cv._replay(pd, root, [], n0=13)
        assert not ok

    def test_split_boundaries(self):
        pd, root = self.make()
        # front = before + 1 vertices close into a cycle, rest stays
        ok, pv, _ = cv._replay(pd, root, [(3, 0)], n0=4)
        assert ok and pv == 8
        ok, _, _ = cv._replay(pd, root, [(2, 0)], n0=4)
        assert not ok  # front would be 3 < 4
        ok, _, _ = cv._replay(pd, root, [(8, 0)], n0=4)
        assert not ok  # rest would be 3 < 4

    def test_absorb_then_split(self):
        pd, root = self.make()
        ok, pv, segs = cv._replay(pd, root, [(13, 0), (5, 1)], n0=4)
        # absorb the 4-cycle at 13 (path grows to 16, prepended), then
        # split: front 14 15 12 13 0..5 closes off, rest is 6..11
        assert ok and pv == 6
        assert segs == ((6, 11),)

    def test_touched_cycle_is_opaque(self):
        pd, root = self.make()
        leaf = cv._Node(parent=root, added=(11, 13, 0), removed=(12, 13),
                        segs=root.segs + ((13, 12),),
                        touched=root.touched | {int(pd.cycle_id[13])},
                        path_v=16, end=12)
        # 14 sits on the already-touched 4-cycle: refuse, even though
        # it is not on the path segments
        segs = (leaf.segs[0],)
        probe = cv._Node(parent=None, added=None, removed=None,
                         segs=segs, touched=leaf.touched, path_v=12, end=11)
        ok, _, _ = cv._replay(pd, probe, [(14, 0)], n0=4)
        assert not ok


class TestOutPhase:
    def test_early_closure_single_pass(self):
        # 2-cycle {0,1} plus a 6-cycle; reserve edges let the path
        # absorb the 6-cycle and close straight back to u0
        sd, pd, pool = host_with_cover(
            [0, 1], [2, 3, 4, 5, 6, 7],
            extra=[(1, 2), (7, 0)])
        ctx = cv._Ctx(sd, pool)
        ctx.refresh(pd)
        w_set = bytearray(sd.n)
        budget = tiny_budget(n0=3)
        res = cv.out_phase(pd, int(pd.cycle_id[0]), ctx, w_set, budget,
                           rng_stream(1), u0=0)
        assert res[0] == "closed"
        closed = res[1]
        assert closed.num_cycles == 1
        assert closed.cycle_lens[0] == 8
        # the closure reused only host edges
        tails = np.arange(8)
        assert all(
            sd.edge_lookup(int(t), int(closed.succ[t])) == closed.edge_ids[t]
            for t in tails)

    def test_stalls_without_reserve_edges(self):
        sd, pd, pool = host_with_cover([0, 1], [2, 3, 4, 5, 6, 7])
        ctx = cv._Ctx(sd, pool)
        ctx.refresh(pd)
        res = cv.out_phase(pd, int(pd.cycle_id[0]), ctx, bytearray(sd.n),
                           tiny_budget(n0=3), rng_stream(1), u0=0)
        assert res[0] == "fail"

    def test_burns_break_edge_endpoints(self):
        sd, pd, pool = host_with_cover([0, 1], [2, 3, 4, 5, 6, 7],
                                       extra=[(1, 2), (7, 0)])
        ctx = cv._Ctx(sd, pool)
        ctx.refresh(pd)
        w_set = bytearray(sd.n)
        cv.out_phase(pd, int(pd.cycle_id[0]), ctx, w_set,
                     tiny_budget(n0=3), rng_stream(1), u0=0)
        assert w_set[0] == 1 and w_set[1] == 1


class TestEliminate:
    def test_clean_cover_untouched(self):
        sd, pd, pool = host_with_cover(list(range(30)))
        budget = tiny_budget(n0=5)
        out, stats = eliminate_small_cycles(pd, sd, pool,
                                            rng_stream(7), budget)
        assert (out.succ == pd.succ).all()
        assert stats.iterations == 0
        assert stats.eliminated == []

    def test_two_cycle_absorbed(self):
        # reserve edges support a closure whichever break edge of the
        # 2-cycle the sweep happens to pick
        sd, pd, pool = host_with_cover(
            [0, 1], [2, 3, 4, 5, 6, 7],
            extra=[(1, 2), (7, 0), (0, 3), (2, 1)])
        budget = tiny_budget(n0=3)
        out, stats = eliminate_small_cycles(pd, sd, pool,
                                            rng_stream(7), budget)
        assert out.num_cycles == 1
        assert stats.eliminated == [2]
        assert stats.early_closures + stats.in_phase_closures == 1

    def test_requires_edge_provenance(self):
        pd = perm_digraph([0, 1], [2, 3, 4, 5])
        sd, _, pool = host_with_cover([0, 1], [2, 3, 4, 5])
        with pytest.raises(ValueError):
            eliminate_small_cycles(pd, sd, pool, rng_stream(7),
                                   tiny_budget(n0=3))

    def test_unremovable_cycle_raises(self):
        sd, pd, pool = host_with_cover([0, 1], [2, 3, 4, 5, 6, 7])
        with pytest.raises(PhaseFailure, match="phase2"):
            eliminate_small_cycles(pd, sd, pool, rng_stream(7),
                                   tiny_budget(n0=3))

    def test_attempt_budget_by_cycle_length(self, monkeypatch):
        # a >= 4 cycle gets two shots with vertex-disjoint break
        # edges, a shorter one only one
        calls = []

        def failing_out_phase(pd, cid, ctx, w_set, budget, rng, u0=None):
            calls.append((u0, int(pd.pred[u0])))
            return ("fail", "forced")

        monkeypatch.setattr(cv, "out_phase", failing_out_phase)
        sd, pd, pool = host_with_cover([0, 1, 2, 3, 4],
                                       [5, 6, 7, 8, 9, 10, 11])
        with pytest.raises(PhaseFailure):
            eliminate_small_cycles(pd, sd, pool, rng_stream(7),
                                   tiny_budget(n0=6))
        assert len(calls) == 2
        (a1, b1), (a2, b2) = calls
        assert {a1, b1}.isdisjoint({a2, b2})

        calls.clear()
        sd, pd, pool = host_with_cover([0, 1, 2], [3, 4, 5, 6, 7, 8])
        with pytest.raises(PhaseFailure):
            eliminate_small_cycles(pd, sd, pool, rng_stream(7),
                                   tiny_budget(n0=4))
        assert len(calls) == 1

    def test_largest_small_cycle_first(self, monkeypatch):
        seen = []

        def failing_out_phase(pd, cid, ctx, w_set, budget, rng, u0=None):
            seen.append(int(pd.cycle_lens[cid]))
            return ("fail", "forced")

        monkeypatch.setattr(cv, "out_phase", failing_out_phase)
        sd, pd, pool = host_with_cover([0, 1], [2, 3, 4], [5, 6, 7, 8],
                                       [9, 10, 11, 12, 13, 14, 15, 16, 17])
        with pytest.raises(PhaseFailure):
            eliminate_small_cycles(pd, sd, pool, rng_stream(7),
                                   tiny_budget(n0=5))
        assert seen and seen[0] == 4


class TestAssertProgress:
    def test_count_must_drop(self):
        old = perm_digraph([0, 1], [2, 3], [4, 5, 6, 7, 8, 9])
        with pytest.raises(PhaseFailure):
            cv._assert_progress(old, old, n0=3)

    def test_no_new_small_cycles(self):
        old = perm_digraph([0, 1], [2, 3], [4, 5, 6, 7, 8, 9])
        # drops to one small cycle, but it is a brand new one
        new = perm_digraph([0, 2], [1, 3, 4, 5, 6, 7, 8, 9])
        with pytest.raises(PhaseFailure):
            cv._assert_progress(old, new, n0=3)

    def test_surviving_old_cycle_is_fine(self):
        old = perm_digraph([0, 1], [2, 3], [4, 5, 6, 7, 8, 9])
        new = perm_digraph([0, 1], [2, 3, 4, 5, 6, 7, 8, 9])
        cv._assert_progress(old, new, n0=3)


class TestBudget:
    def test_for_model_arithmetic(self):
        b = PhaseTwoBudget.for_model(5000, 50.0, 1)
        assert b.alpha == math.ceil(50 / 8)
        assert b.n0 == pytest.approx(5000 / math.log(5000))
        assert b.w_cap == max(math.ceil(5000 ** 0.75), math.ceil(0.85 * 5000))
        assert b.in_branch == 3 * b.alpha
        assert b.leaf_cap == 3 * b.leaf_target

    def test_asymptotic_keeps_literal_caps(self):
        b = PhaseTwoBudget.asymptotic(5000, 50.0, 1)
        assert b.leaf_target == math.ceil(math.sqrt(5000) * math.log(5000))
        assert b.w_cap == math.ceil(5000 ** 0.75)
        assert b.in_branch == b.alpha

    def test_in_branch_default_falls_back(self):
        b = tiny_budget(n0=3)
        assert b.in_branch == 0
        assert (b.in_branch or b.alpha) == b.alpha


class TestPipelineIntegration:
    @pytest.fixture(scope="class")
    @staticmethod
    def repaired(host_k2):
        params, sd = host_k2
        rng = rng_stream(55, 2)
        part = split_edges(sd, params.k, rng)
        compute_small(sd, part, params.c, params.k)
        used = np.zeros(sd.m, dtype=bool)
        pms = build_k_matchings(sd, part, rng, used=used)
        budget = PhaseTwoBudget.for_model(params.n, params.c, params.k)
        covers = []
        for i in range(params.k):
            pd = matching_to_cycle_cover(pms[i])
            pool = part.working_edges(3, i)
            pool = pool[~used[pool]]
            out, stats = eliminate_small_cycles(pd, sd, pool, rng, budget)
            used[out.edge_ids] = True
            covers.append((out, stats))
        return params, sd, budget, covers

    def test_min_cycle_length_postcondition(self, repaired):
        params, _, budget, covers = repaired
        for out, _ in covers:
            assert out.cycle_lens.min() >= budget.n0

    def test_covers_use_disjoint_host_edges(self, repaired):
        params, sd, _, covers = repaired
        all_ids = np.concatenate([out.edge_ids for out, _ in covers])
        assert len(np.unique(all_ids)) == len(all_ids)
        for out, _ in covers:
            rows = sd.edges[out.edge_ids]
            assert (rows[:, 0] == np.arange(params.n)).all()
            assert (rows[:, 1] == out.succ).all()

    def test_deterministic_given_seed(self, host_k2):
        params, sd = host_k2

        def run():
            rng = rng_stream(56, 2)
            part = split_edges(sd, params.k, rng)
            compute_small(sd, part, params.c, params.k)
            used = np.zeros(sd.m, dtype=bool)
            pms = build_k_matchings(sd, part, rng, used=used)
            budget = PhaseTwoBudget.for_model(params.n, params.c, params.k)
            outs = []
            for i in range(params.k):
                pd = matching_to_cycle_cover(pms[i])
                pool = part.working_edges(3, i)
                pool = pool[~used[pool]]
                out, _ = eliminate_small_cycles(pd, sd, pool, rng, budget)
                used[out.edge_ids] = True
                outs.append(out)
            return outs

        a = run()
        b = run()
        for x, y in zip(a, b):
            assert (x.succ == y.succ).all()
            assert (x.edge_ids == y.edge_ids).all()
