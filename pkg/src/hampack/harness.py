"""Trial orchestration, parameter sweeps, statistics, and the CLI.

A trial runs the full pipeline: sample a host, split the edges into
pools, build k matchings, repair each induced cover (small-cycle
sweep, then cycle merging), and verify the resulting packing.  Trials
are attributed: any phase that gives up turns into an outcome tag, not
a crash.

Determinism contract: every emitted number is a pure function of
(command, params, seed).  Sweep trials get their seeds from a
counter-based derivation of (seed base, cell index, trial index), so
summaries do not depend on worker count or scheduling.  Wall-clock
times are collected but kept out of canonical serializations; they go
to the log instead.
"""

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cover import PhaseTwoBudget, eliminate_small_cycles
from .errors import (EdgeListFormatError, HampackError, OracleSizeError,
                     PhaseFailure)
from .matching import build_k_matchings, matching_to_cycle_cover
from .model import (
    ModelParams,
    TruncatedPoisson,
    pair_configuration,
    read_edge_list,
    sample_degree_sequence,
    sample_erased_digraph,
    sample_simple_digraph,
    simplicity_exponents,
    write_edge_list,
)
from .partition import compute_small, split_edges
from .patch import count_r_phi, merge_patch, oneshot_patch
from .rng import derive_seed, rng_stream
from .verify import (
    brute_force_packing,
    certificate_from_covers,
    degree_census,
    expansion_check,
    verify_packing,
)

log = logging.getLogger("hampack")

SCHEMA = 1

_TAU_MODES = {"merge": "merge", "any": "any", "rphi": "restrict-rphi"}


# ---------------------------------------------------------------- pipeline


def run_pipeline(params: ModelParams, rng: np.random.Generator,
                 tau_mode: str = "merge", sd=None, budget=None,
                 host: str = "erased"):
    """sample -> partition -> matchings -> per-i repair -> verify.

    Returns (sd, certificate, info).  info carries the sampler attempt
    count, per-i phase stats, and per-phase wall times.  Raises
    PhaseFailure (or a sampler error) when a phase gives up.
    """
    info = {"attempts": 0, "phase2": [], "phase3": [], "timings": {}}
    clock = time.perf_counter

    t = clock()
    if sd is None:
        sampler = (sample_erased_digraph if host == "erased"
                   else sample_simple_digraph)
        sd, attempts = sampler(params, rng)
        info["attempts"] = attempts
    info["timings"]["sample"] = clock() - t

    t = clock()
    part = split_edges(sd, params.k, rng)
    compute_small(sd, part, params.c, params.k)
    info["timings"]["partition"] = clock() - t

    t = clock()
    used = np.zeros(sd.m, dtype=bool)
    pms = build_k_matchings(sd, part, rng, used=used)
    info["timings"]["phase1"] = clock() - t

    if budget is None:
        budget = PhaseTwoBudget.for_model(params.n, params.c, params.k)
    mode = _TAU_MODES.get(tau_mode, tau_mode)
    covers = []
    t2 = t3 = 0.0
    for i in range(params.k):
        t = clock()
        pd = matching_to_cycle_cover(pms[i])
        # release this matching's reservation: its own edges are fair
        # game for rotations, only other covers' edges stay off-limits
        used[pms[i].edge_ids] = False
        pool3 = part.working_edges(3, i)
        pool3 = pool3[~used[pool3]]
        w_set = bytearray(sd.n)
        try:
            pd2, p2 = eliminate_small_cycles(pd, sd, pool3, rng, budget,
                                             w_set=w_set)
        except PhaseFailure as exc:
            exc.index = i
            raise
        info["phase2"].append(p2)
        t2 += clock() - t

        t = clock()
        blocked = (np.frombuffer(bytes(w_set), dtype=np.uint8).astype(bool)
                   | part.small)
        pool4 = part.pool_edges(4, i)
        pool4 = pool4[~used[pool4]]
        try:
            if mode == "merge":
                ham, p3 = merge_patch(pd2, sd, pool4, blocked, rng)
            else:
                ham, p3 = oneshot_patch(pd2, sd, pool4, blocked, budget.n0,
                                        rng, mode=mode)
        except PhaseFailure as exc:
            exc.index = i
            raise
        info["phase3"].append(p3)
        used[ham.edge_ids] = True
        covers.append(ham)
        t3 += clock() - t
        log.debug("cover %d repaired: |W|=%d kappa=%d", i, p2.w_size,
                  p3.kappa)
    info["timings"]["phase2"] = t2
    info["timings"]["phase3"] = t3

    t = clock()
    cert = certificate_from_covers(sd, covers)
    chk = verify_packing(sd, cert)
    info["timings"]["verify"] = clock() - t
    if not chk:
        raise PhaseFailure("verify", chk.reason)
    return sd, cert, info


# ------------------------------------------------------------------ trials


@dataclass
class TrialRecord:
    """One pipeline run.  Canonical serialization omits timings and the
    certificate body (the digest pins it down)."""

    seed: int
    n: int
    m: int
    k: int
    c: float
    z: float | None
    outcome: str
    attempts: int = 0
    phase2_retries: list = field(default_factory=list)
    kappa: list = field(default_factory=list)
    search_nodes: list = field(default_factory=list)
    cert_digest: str | None = None
    detail: str = ""
    timings: dict = field(default_factory=dict)
    certificate: object = None
    schema: int = SCHEMA

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    def canonical(self) -> dict:
        return {
            "schema": self.schema,
            "seed": self.seed,
            "n": self.n, "m": self.m, "k": self.k, "c": self.c,
            "z": self.z,
            "outcome": self.outcome,
            "attempts": self.attempts,
            "phase2_retries": self.phase2_retries,
            "kappa": self.kappa,
            "search_nodes": self.search_nodes,
            "cert_digest": self.cert_digest,
            "detail": self.detail,
        }

    def to_json(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True)


def _cert_digest(cert) -> str:
    blob = json.dumps(cert.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def run_trial(params: ModelParams, seed: int,
              tau_mode: str = "merge") -> TrialRecord:
    """Deterministic single trial; failures become outcome tags."""
    rec = TrialRecord(seed=seed, n=params.n, m=params.m, k=params.k,
                      c=params.c, z=params.z, outcome="")
    rng = rng_stream(seed)
    try:
        sd, cert, info = run_pipeline(params, rng, tau_mode=tau_mode)
    except PhaseFailure as exc:
        rec.outcome = f"failure:{exc.phase}"
        rec.detail = exc.detail
        log.info("trial seed=%d failed: %s", seed, exc)
        return rec
    except HampackError as exc:
        rec.outcome = "failure:sample"
        rec.detail = str(exc)
        log.info("trial seed=%d failed while sampling: %s", seed, exc)
        return rec
    rec.outcome = "success"
    rec.attempts = info["attempts"]
    rec.phase2_retries = [p.second_attempts for p in info["phase2"]]
    # merge mode runs kappa=2 exchanges; count them in the same unit
    rec.kappa = [p.kappa if p.kappa else 2 * p.merges
                 for p in info["phase3"]]
    rec.search_nodes = [p.search_nodes for p in info["phase3"]]
    rec.cert_digest = _cert_digest(cert)
    rec.timings = info["timings"]
    rec.certificate = cert
    return rec


# ------------------------------------------------------------------ sweeps


@dataclass(frozen=True)
class SweepRow:
    n: int
    c: float
    k: int
    m: int
    trials: int
    successes: int
    failures: str  # "tag=count;..." sorted by tag
    attempts_mean: float
    kappa_mean: float
    nodes_mean: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


CSV_COLUMNS = ["schema", "n", "c", "k", "m", "trials", "successes",
               "rate", "failures", "attempts_mean", "kappa_mean",
               "nodes_mean"]


@dataclass
class SweepSummary:
    seed: int
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([SCHEMA, r.n, f"{r.c:g}", r.k, r.m, r.trials,
                        r.successes, f"{r.rate:.4f}", r.failures,
                        f"{r.attempts_mean:.3f}", f"{r.kappa_mean:.3f}",
                        f"{r.nodes_mean:.3f}"])
        return buf.getvalue()


def _sweep_one(spec):
    ci, n, c, k, seed, tau_mode = spec
    params = ModelParams.make(n, c, k)
    return ci, run_trial(params, seed, tau_mode)


def run_sweep(ns, cs, ks, trials: int, seed: int, workers: int = 1,
              tau_mode: str = "merge") -> SweepSummary:
    """Grid of cells x seeded trials; summary is worker-invariant."""
    cells = list(itertools.product(ns, cs, ks))
    specs = []
    for ci, (n, c, k) in enumerate(cells):
        for t in range(trials):
            specs.append((ci, int(n), float(c), int(k),
                          derive_seed(seed, ci, t), tau_mode))
    if workers <= 1:
        results = [_sweep_one(s) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, specs))
    by_cell = {}
    for ci, rec in results:
        by_cell.setdefault(ci, []).append(rec)
    rows = []
    for ci, (n, c, k) in enumerate(cells):
        recs = sorted(by_cell.get(ci, []), key=lambda r: r.seed)
        succ = [r for r in recs if r.success]
        tags = {}
        for r in recs:
            if not r.success:
                tag = r.outcome.split(":", 1)[1]
                tags[tag] = tags.get(tag, 0) + 1
        failures = ";".join(f"{t}={tags[t]}" for t in sorted(tags))

        def mean(vals):
            vals = list(vals)
            return sum(vals) / len(vals) if vals else 0.0

        rows.append(SweepRow(
            n=int(n), c=float(c), k=int(k), m=int(round(c * n)),
            trials=len(recs), successes=len(succ), failures=failures,
            attempts_mean=mean(r.attempts for r in succ),
            kappa_mean=mean(sum(r.kappa) for r in succ),
            nodes_mean=mean(sum(r.search_nodes) for r in succ)))
        times = [sum(r.timings.values()) for r in recs if r.timings]
        if times:
            qs = np.percentile(times, [50, 90])
            log.info("cell n=%s c=%s k=%s: t50=%.2fs t90=%.2fs",
                     n, c, k, qs[0], qs[1])
    return SweepSummary(seed=seed, rows=rows)


# -------------------------------------------------------------- statistics


def permutation_cycle_lengths(n: int, rng: np.random.Generator) -> list:
    """Cycle lengths of a uniform random permutation of [n].

    Generated directly: the cycle through a fixed element is uniform
    on {1..n} and the rest is again uniform, so lengths can be drawn
    sequentially without materializing the permutation.  Exact, and
    O(number of cycles) per sample.
    """
    out = []
    rem = n
    while rem:
        ell = int(rng.integers(1, rem + 1))
        out.append(ell)
        rem -= ell
    return out


def stats_perm_cycles(n: int, samples: int, seed: int,
                      short: int = 10) -> dict:
    """Short-cycle statistics of uniform random covers.

    Checks the three cover facts the repair phases lean on: vertices
    on cycles of length <= s average to s, the number of cycles of
    length <= 3 is asymptotically Poisson(11/6), and almost every
    cover has at most 2 log n cycles.
    """
    rng = rng_stream(seed, 60)
    on_short = np.empty(samples)
    tri_count = np.empty(samples)
    few = 0
    limit = 2.0 * math.log(n)
    for i in range(samples):
        lens = permutation_cycle_lengths(n, rng)
        on_short[i] = sum(l for l in lens if l <= short)
        tri_count[i] = sum(1 for l in lens if l <= 3)
        if len(lens) <= limit:
            few += 1
    return {
        "schema": SCHEMA, "n": n, "samples": samples, "short": short,
        "vertices_on_short_mean": float(on_short.mean()),
        "vertices_on_short_se": float(on_short.std(ddof=1)
                                      / math.sqrt(samples)),
        "short_expected": float(short),
        "tricycle_mean": float(tri_count.mean()),
        "tricycle_se": float(tri_count.std(ddof=1) / math.sqrt(samples)),
        "tricycle_expected": 11.0 / 6.0,
        "few_cycles_fraction": few / samples,
        "cycle_budget": limit,
    }


def stats_simplicity_rate(n: int, c: float, k: int, attempts: int,
                          seed: int, fresh_degrees: bool = False) -> dict:
    """Observed simple-pairing rate vs the two analytic exponents.

    By default one typical degree sequence backs all pairings: the
    loop/duplicate moments are functions of the sequence only through
    sums that concentrate, and the analysis itself conditions on the
    sequence.  fresh_degrees redraws it per attempt (the whole-sampler
    acceptance rate) at sqrt(n)-rejection cost per attempt.
    """
    params = ModelParams.make(n, c, k)
    rng = rng_stream(seed, 61)
    simple = 0
    ds = None
    for _ in range(attempts):
        if ds is None or fresh_degrees:
            ds = sample_degree_sequence(params, rng)
        cd = pair_configuration(ds, rng)
        simple += cd.is_simple()
    loop_exp, beta, beta2 = simplicity_exponents(params)
    return {
        "schema": SCHEMA, "n": n, "c": c, "k": k, "attempts": attempts,
        "observed_rate": simple / attempts,
        "predicted_rate": math.exp(-(loop_exp + beta)),
        "predicted_rate_second_order": math.exp(-(loop_exp + beta2)),
        "loop_exponent": loop_exp,
        "duplicate_exponent": beta,
        "duplicate_exponent_second_order": beta2,
    }


def _chi_square_p(observed: np.ndarray, expected: np.ndarray) -> float:
    stat = float(((observed - expected) ** 2 / expected).sum())
    dof = len(observed) - 1
    from scipy.stats import chi2
    return float(chi2.sf(stat, dof))


def stats_degree_gof(n: int, c: float, k: int, seed: int,
                     reseeds: int = 3) -> dict:
    """Chi-square fit of sampled out-degrees to the truncated law.

    Tail bins are merged until every expected count is >= 5.  Retries
    with derived seeds are budgeted: a uniform sampler still fails a
    fixed-level test at its stated rate.
    """
    params = ModelParams.make(n, c, k)
    tp = TruncatedPoisson(params.require_z(), k)
    p_values = []
    for attempt in range(1 + reseeds):
        rng = rng_stream(derive_seed(seed, attempt), 62)
        ds = sample_degree_sequence(params, rng)
        degs = ds.out_deg
        jmax = int(degs.max())
        obs = np.bincount(degs, minlength=jmax + 1)[k + 1:].astype(float)
        exp = np.array([n * tp.pmf(j) for j in range(k + 1, jmax + 1)])
        exp[-1] += max(0.0, n - exp.sum())  # fold the open tail in
        while len(exp) > 2 and exp[-1] < 5.0:
            exp[-2] += exp[-1]
            obs[-2] += obs[-1]
            exp = exp[:-1]
            obs = obs[:-1]
        p = _chi_square_p(obs, exp)
        p_values.append(p)
        if p > 0.01:
            break
    return {
        "schema": SCHEMA, "n": n, "c": c, "k": k, "seed": seed,
        "p_values": p_values,
        "passed": any(p > 0.01 for p in p_values),
        "bins": len(obs),
    }


def stats_partition_sizes(n: int, c: float, k: int, runs: int,
                          seed: int) -> dict:
    """Pool-size concentration and exactness of the edge split.

    One host, many splits: reports the worst |size - m/4k| in sigma
    units over all pools and runs, plus overlap/coverage violations
    (always zero by construction; counted anyway).
    """
    params = ModelParams.make(n, c, k)
    sd, _ = sample_erased_digraph(params, rng_stream(seed, 63))
    m = sd.m
    target = m / (4 * k)
    sigma = math.sqrt(m * (1 / (4 * k)) * (1 - 1 / (4 * k)))
    worst = 0.0
    violations = 0
    for r in range(runs):
        part = split_edges(sd, k, rng_stream(derive_seed(seed, r), 64))
        seen = np.zeros(m, dtype=np.int64)
        for t, i in itertools.product((1, 2, 3, 4), range(k)):
            ids = part.pool_edges(t, i)
            seen[ids] += 1
            worst = max(worst, abs(len(ids) - target) / sigma)
        if (seen != 1).any():
            violations += 1
    return {
        "schema": SCHEMA, "n": n, "c": c, "k": k, "runs": runs, "m": m,
        "target": target, "sigma": sigma,
        "worst_abs_deviation_sigmas": worst,
        "overlap_or_coverage_violations": violations,
    }


def stats_small_size(n: int, c: float, k: int, seed: int) -> dict:
    """Size of the low-degree exception set and its incident edges."""
    params = ModelParams.make(n, c, k)
    rng = rng_stream(seed, 65)
    sd, _ = sample_erased_digraph(params, rng)
    part = split_edges(sd, k, rng)
    small, e_small = compute_small(sd, part, c, k)
    return {
        "schema": SCHEMA, "n": n, "c": c, "k": k,
        "threshold": c / (8 * k),
        "small_vertices": int(small.sum()),
        "small_edges": int(e_small.sum()),
        "small_fraction": float(small.sum() / n),
    }


def _odd_partitions(total: int, largest: int | None = None):
    if largest is None:
        largest = total if total % 2 else total - 1
    if total == 0:
        yield ()
        return
    first = min(largest, total)
    if first % 2 == 0:
        first -= 1
    for part in range(first, 0, -2):
        for rest in _odd_partitions(total - part, part):
            yield (part,) + rest


def stats_rphi(kappa: int) -> dict:
    """|R_phi| per odd cycle type of a given kappa, with the factorial
    bracket (kappa-2)! <= |R_phi| <= (kappa-1)!."""
    lo = math.factorial(kappa - 2)
    hi = math.factorial(kappa - 1)
    rows = []
    for parts in _odd_partitions(kappa):
        phi = []
        base = 0
        for kj in parts:
            phi.extend(base + ((s - 1) % kj) for s in range(kj))
            base += kj
        size = count_r_phi(np.array(phi, dtype=np.int64))
        rows.append({"type": list(parts), "r_phi": size,
                     "lower": lo, "upper": hi,
                     "within": lo <= size <= hi})
    return {"schema": SCHEMA, "kappa": kappa, "rows": rows}


def stats_census(n: int, c: float, k: int, seed: int) -> str:
    params = ModelParams.make(n, c, k)
    sd, _ = sample_erased_digraph(params, rng_stream(seed, 66))
    return degree_census(sd, params).to_csv()


def stats_expansion(n: int, c: float, k: int, samples: int,
                    seed: int) -> dict:
    params = ModelParams.make(n, c, k)
    sd, _ = sample_erased_digraph(params, rng_stream(seed, 67))
    rep = expansion_check(sd, params, samples, rng_stream(seed, 68))
    return {
        "schema": SCHEMA, "n": n, "c": c, "k": k, "samples": rep.checked,
        "eta": rep.eta, "max_ratio": rep.max_ratio,
        "violations": [
            {"size": v.size, "side": v.side, "degree": v.degree,
             "bound": v.bound, "vertices": list(v.vertices)}
            for v in rep.violations],
    }


# --------------------------------------------------------------------- CLI


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 64, not 2
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def _parse_grid(spec: str):
    """'n=1000,2000;c=20,50;k=1' -> (ns, cs, ks)."""
    fields = {}
    for chunk in spec.split(";"):
        if "=" not in chunk:
            raise ValueError(f"bad grid chunk {chunk!r}")
        key, vals = chunk.split("=", 1)
        fields[key.strip()] = [v for v in vals.split(",") if v]
    missing = {"n", "c", "k"} - set(fields)
    if missing:
        raise ValueError(f"grid is missing {sorted(missing)}")
    return ([int(v) for v in fields["n"]],
            [float(v) for v in fields["c"]],
            [int(v) for v in fields["k"]])


def _add_model_args(p, seed_default=0):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=seed_default)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="hampack",
        description="Sample conditioned random digraphs and pack "
                    "edge-disjoint Hamilton cycles.",
        epilog="Sweep CSV columns: " + ",".join(CSV_COLUMNS)
               + ". Set HAMPACK_LOG=DEBUG (or INFO) for phase traces.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    ps = sub.add_parser("sample", help="sample a host digraph")
    _add_model_args(ps)
    ps.add_argument("--host", choices=["erased", "exact"], default="erased")
    ps.add_argument("--out", required=True)

    pp = sub.add_parser("pack", help="run the full pipeline once")
    pp.add_argument("--in", dest="infile")
    pp.add_argument("--n", type=int)
    pp.add_argument("--c", type=float)
    pp.add_argument("--k", type=int)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--tau-mode", choices=sorted(_TAU_MODES),
                    default="merge")
    pp.add_argument("--cert-out")

    pw = sub.add_parser("sweep", help="trial grid with per-cell summary")
    pw.add_argument("--grid", required=True,
                    help="e.g. 'n=1000,2000;c=20,50;k=1'")
    pw.add_argument("--trials", type=int, required=True)
    pw.add_argument("--seed", type=int, default=0)
    pw.add_argument("--workers", type=int, default=1)
    pw.add_argument("--tau-mode", choices=sorted(_TAU_MODES),
                    default="merge")
    pw.add_argument("--out", help="CSV path (default: stdout)")

    pt = sub.add_parser("stats", help="model and phase diagnostics")
    st = pt.add_subparsers(dest="subcmd", required=True,
                           parser_class=_Parser)

    s = st.add_parser("simplicity-rate")
    _add_model_args(s)
    s.add_argument("--attempts", type=int, default=500)
    s.add_argument("--fresh-degrees", action="store_true")

    s = st.add_parser("degree-gof")
    _add_model_args(s)
    s.add_argument("--reseeds", type=int, default=3)

    s = st.add_parser("partition-sizes")
    _add_model_args(s)
    s.add_argument("--runs", type=int, default=200)

    s = st.add_parser("small-size")
    _add_model_args(s)

    s = st.add_parser("perm-cycles")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--short", type=int, default=10)

    s = st.add_parser("rphi")
    s.add_argument("--kappa", type=int, required=True)

    s = st.add_parser("census")
    _add_model_args(s)

    s = st.add_parser("expansion")
    _add_model_args(s)
    s.add_argument("--samples", type=int, default=1000)

    po = sub.add_parser("oracle", help="exhaustive packing on tiny hosts")
    po.add_argument("--in", dest="infile", required=True)
    po.add_argument("--k", type=int, required=True)

    return p


def _cmd_sample(args) -> int:
    params = ModelParams.make(args.n, args.c, args.k)
    sampler = (sample_erased_digraph if args.host == "erased"
               else sample_simple_digraph)
    sd, attempts = sampler(params, rng_stream(args.seed))
    write_edge_list(sd, args.out)
    print(f"n={sd.n} m={sd.m} k={sd.k} attempts={attempts} -> {args.out}")
    return 0


def _read_host(path: str, cmd: str):
    """Read an edge-list host; bad files are usage errors, not crashes."""
    try:
        return read_edge_list(path)
    except (EdgeListFormatError, OSError) as exc:
        print(f"hampack {cmd}: {exc}", file=sys.stderr)
        return None


def _cmd_pack(args, parser) -> int:
    if args.infile:
        sd = _read_host(args.infile, "pack")
        if sd is None:
            return 64
        params = ModelParams.from_nmk(sd.n, sd.m, args.k or sd.k)
        rng = rng_stream(args.seed)
        try:
            sd, cert, info = run_pipeline(params, rng,
                                          tau_mode=args.tau_mode, sd=sd)
        except (PhaseFailure, HampackError) as exc:
            tag = exc.phase if isinstance(exc, PhaseFailure) else "sample"
            print(f"failure:{tag}: {exc}", file=sys.stderr)
            return 2
        rec = None
    else:
        if args.n is None or args.c is None or args.k is None:
            parser.error("pack needs --in or all of --n --c --k")
        params = ModelParams.make(args.n, args.c, args.k)
        rec = run_trial(params, args.seed, tau_mode=args.tau_mode)
        if not rec.success:
            print(f"{rec.outcome}: {rec.detail}", file=sys.stderr)
            return 2
        cert, info = rec.certificate, None
    for j, cyc in enumerate(cert.cycles):
        print(" ".join(str(int(v)) for v in cyc))
    meta = {
        "schema": SCHEMA,
        "mode": args.tau_mode,
        "k": cert.k,
        "seed": args.seed,
    }
    if rec is not None:
        meta.update({"kappa": rec.kappa, "search_nodes": rec.search_nodes,
                     "cert_digest": rec.cert_digest})
    else:
        meta.update({"kappa": [p.kappa if p.kappa else 2 * p.merges
                               for p in info["phase3"]],
                     "search_nodes": [p.search_nodes
                                      for p in info["phase3"]],
                     "cert_digest": _cert_digest(cert)})
    print(json.dumps(meta, sort_keys=True))
    if args.cert_out:
        with open(args.cert_out, "w", encoding="ascii") as fh:
            json.dump(cert.as_dict(), fh, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_sweep(args, parser) -> int:
    try:
        ns, cs, ks = _parse_grid(args.grid)
    except ValueError as exc:
        parser.error(str(exc))
    summary = run_sweep(ns, cs, ks, args.trials, args.seed,
                        workers=args.workers, tau_mode=args.tau_mode)
    text = summary.to_csv()
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_stats(args) -> int:
    if args.subcmd == "simplicity-rate":
        out = stats_simplicity_rate(args.n, args.c, args.k, args.attempts,
                                    args.seed,
                                    fresh_degrees=args.fresh_degrees)
    elif args.subcmd == "degree-gof":
        out = stats_degree_gof(args.n, args.c, args.k, args.seed,
                               reseeds=args.reseeds)
    elif args.subcmd == "partition-sizes":
        out = stats_partition_sizes(args.n, args.c, args.k, args.runs,
                                    args.seed)
    elif args.subcmd == "small-size":
        out = stats_small_size(args.n, args.c, args.k, args.seed)
    elif args.subcmd == "perm-cycles":
        out = stats_perm_cycles(args.n, args.samples, args.seed,
                                short=args.short)
    elif args.subcmd == "rphi":
        try:
            out = stats_rphi(args.kappa)
        except OracleSizeError as exc:
            print(f"hampack stats rphi: {exc}", file=sys.stderr)
            return 64
    elif args.subcmd == "census":
        sys.stdout.write(stats_census(args.n, args.c, args.k, args.seed))
        return 0
    elif args.subcmd == "expansion":
        out = stats_expansion(args.n, args.c, args.k, args.samples,
                              args.seed)
    else:  # pragma: no cover - argparse rejects earlier
        return 64
    print(json.dumps(out, sort_keys=True))
    return 0


def _cmd_oracle(args) -> int:
    sd = _read_host(args.infile, "oracle")
    if sd is None:
        return 64
    try:
        cert = brute_force_packing(sd, args.k)
    except OracleSizeError as exc:
        print(f"hampack oracle: {exc}", file=sys.stderr)
        return 64
    if cert is None:
        print(f"no packing of {args.k} edge-disjoint Hamilton cycles")
        return 2
    for cyc in cert.cycles:
        print(" ".join(str(int(v)) for v in cyc))
    return 0


def main(argv=None) -> int:
    level = os.environ.get("HAMPACK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd == "sample":
        return _cmd_sample(args)
    if args.cmd == "pack":
        return _cmd_pack(args, parser)
    if args.cmd == "sweep":
        return _cmd_sweep(args, parser)
    if args.cmd == "stats":
        return _cmd_stats(args)
    if args.cmd == "oracle":
        return _cmd_oracle(args)
    return 64  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
