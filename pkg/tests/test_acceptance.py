"""Acceptance gate: ten pinned behavioral criteria.

Each test prints one [PASS]/[FAIL] verdict line directly to the real
stdout (bypassing capture) so the gate's outcome is always visible in
the run log, then asserts.  Seeds and tolerances are fixed; the
benchmark-backed criteria share two full pipeline runs from a
module-scoped fixture.
"""

import sys
import time

import numpy as np
import pytest

import oracles
from prodrank import pipeline
from prodrank.autodiff import ComputeGraph, Tensor, finite_difference_check
from prodrank.catalog import generate_catalog
from prodrank.clicksim import (
    SearchRequest,
    SimulationParams,
    generate_clicklog,
    ground_truth_sigma,
)
from prodrank.config import RunConfig
from prodrank.embeddings import EmbeddingTable, unit_normalize
from prodrank.extraction import Session, extract_triples, read_triples
from prodrank.models import (
    SiameseScorer,
    default_kernel_bank,
    distributed_encode,
    kernel_features,
    make_scorer,
)


_CAPMAN = None


@pytest.fixture(autouse=True)
def _grab_capture_manager(request):
    # pytest's default fd-level capture swallows even sys.__stdout__, so
    # verdict lines go through the capture manager's disabled() window
    global _CAPMAN
    _CAPMAN = request.config.pluginmanager.getplugin("capturemanager")
    yield


def check(num, description, ok, detail=""):
    tail = f"  [{detail}]" if detail else ""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {description}{tail}"
    if _CAPMAN is not None:
        with _CAPMAN.global_and_fixture_disabled():
            print(line, file=sys.__stdout__, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def _random_table(n_tokens, dim, seed):
    rng = np.random.default_rng(seed)
    raw = EmbeddingTable([f"t{i}" for i in range(n_tokens)],
                         rng.standard_normal((n_tokens, dim)))
    return unit_normalize(raw)


# -- 1 ----------------------------------------------------------------------


def test_c01_gradients_match_finite_differences():
    t0 = time.monotonic()
    archs = ("kernel_pooling", "siamese", "dssm_like", "hybrid_local")
    worst = 0.0
    for ai, arch in enumerate(archs):
        for k in range(20):
            rng = np.random.default_rng(np.random.SeedSequence((101, ai, k)))
            table = _random_table(10, 8, rng.integers(1 << 31))
            kwargs = {"n_q": 4} if arch in ("kernel_pooling", "hybrid_local") else {}
            scorer = make_scorer(arch, table=table, n_d=8, seed=k, **kwargs)
            for p in scorer.trainable_parameters():
                p.data = rng.normal(0.0, 0.3, size=p.data.shape)
            q = [f"t{i}" for i in rng.integers(0, 10, size=rng.integers(1, 5))]
            d = [f"t{i}" for i in rng.integers(0, 10, size=rng.integers(1, 9))]
            graph = ComputeGraph(lambda: scorer.score_graph(q, d),
                                 scorer.trainable_parameters())
            worst = max(worst, finite_difference_check(graph))
    dt = time.monotonic() - t0
    check(1, "finite-difference gradients, 4 architectures x 20 instances",
          worst <= 1e-4 and dt < 60.0, f"max rel err {worst:.2e}, {dt:.1f}s")


# -- 2 ----------------------------------------------------------------------


def test_c02_kernel_features_match_double_loop():
    t0 = time.monotonic()
    bank = default_kernel_bank()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        rows = int(rng.integers(1, 7))
        cols = int(rng.integers(1, 11))
        values = rng.uniform(-1.0, 1.0, size=(rows, cols))
        n_real = int(rng.integers(1, rows + 1))

        class M:
            pass

        m = M()
        m.values = Tensor(values)
        m.n_q_real = n_real
        m.n_d_real = cols
        fast = kernel_features(m, bank).data.reshape(-1)
        slow = oracles.kernel_features_loop(values, n_real, bank.means, bank.widths)
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    dt = time.monotonic() - t0
    check(2, "kernel features equal the double-loop oracle on 100 matrices",
          worst <= 1e-12 and dt < 5.0, f"max abs diff {worst:.2e}, {dt:.2f}s")


# -- 3 ----------------------------------------------------------------------


def test_c03_extraction_equals_literal_brute_force():
    t0 = time.monotonic()
    n = mismatches = 0
    for dicts in oracles.enumerate_micro_sessions(max_queries=3, max_impressions=4):
        reqs = [
            SearchRequest(
                timestamp=d["timestamp"], user="u", query=d["query"],
                impressions=[(sku, r + 1) for r, sku in enumerate(d["ranked"])],
                clicks=[r + 1 for r, sku in enumerate(d["ranked"]) if sku in d["clicked"]],
            )
            for d in dicts
        ]
        session = Session(user="u", session_id="u:0", intent="", requests=reqs)
        got = {(t.query, t.rel_sku, t.irrel_sku, t.timestamp)
               for t in extract_triples(session, rho=3)}
        if got != oracles.extract_triples_literal(dicts, rho=3):
            mismatches += 1
        n += 1
    dt = time.monotonic() - t0
    check(3, "triple extraction set-equals the literal oracle on micro-sessions",
          n >= 5000 and mismatches == 0 and dt < 60.0,
          f"{n} sessions, {mismatches} mismatches, {dt:.1f}s")


# -- 4 ----------------------------------------------------------------------


def test_c04_extracted_triples_respect_ground_truth():
    t0 = time.monotonic()
    catalog = generate_catalog(2000, seed=0)
    sessions = generate_clicklog(catalog, 1000, SimulationParams(), seed=0)
    titles = {s.sku_id: s.title_tokens() for s in catalog}
    good = total = 0
    for sess in sessions:
        intent = sess.intent.split()
        for t in extract_triples(sess, rho=3):
            total += 1
            good += (ground_truth_sigma(intent, titles[t.rel_sku])
                     > ground_truth_sigma(intent, titles[t.irrel_sku]))
    frac = good / total if total else 0.0
    dt = time.monotonic() - t0
    check(4, "simulated triples prefer the truly relevant item (>= 90%)",
          total > 0 and frac >= 0.90 and dt < 120.0,
          f"{good}/{total} = {frac:.4f}, {dt:.1f}s")


# -- 5, 6, 9, 10 share two full benchmark runs ------------------------------


@pytest.fixture(scope="module")
def benchmark_runs(tmp_path_factory):
    runs = []
    for name in ("bench_a", "bench_b"):
        out = tmp_path_factory.mktemp(name)
        cfg = RunConfig.load(None, overrides=("max_epochs=8",))
        t0 = time.monotonic()
        result = pipeline.run_benchmark(cfg, out)
        runs.append({"result": result, "dir": out, "seconds": time.monotonic() - t0})
    return runs


def _variant(result, frozen):
    matches = [v for v in result.variants if v.frozen is frozen and v.n_d == 64]
    assert len(matches) == 1
    return matches[0]


def test_c05_kernel_pooling_beats_lexical_baseline(benchmark_runs):
    run = benchmark_runs[0]
    res = run["result"]
    v = _variant(res, frozen=False)
    scale_ok = 20000 <= res.triples <= 45000
    check(5, "trained ranker's held-out error <= 80% of tf-idf's",
          v.test_rel <= 80.0 and scale_ok and run["seconds"] < 600.0,
          f"rel {v.test_rel:.2f}%, {res.triples} triples, {run['seconds']:.0f}s")


def test_c06_frozen_variant_near_trainable(benchmark_runs):
    res = benchmark_runs[0]["result"]
    trained = _variant(res, frozen=False)
    frozen = _variant(res, frozen=True)
    lo, hi = trained.test_rel - 1e-9, trained.test_rel + 10.0
    check(6, "frozen-embedding variant within [best, best + 10 points]",
          lo <= frozen.test_rel <= hi,
          f"frozen {frozen.test_rel:.2f}% vs trained {trained.test_rel:.2f}%")


# -- 7 ----------------------------------------------------------------------


def test_c07_cached_and_direct_top1_agree():
    catalog = generate_catalog(100, seed=5)
    docs = [s.doc_tokens() for s in catalog]
    tokens = sorted({t for d in docs for t in d})
    rng = np.random.default_rng(707)
    raw = EmbeddingTable(tokens, rng.standard_normal((len(tokens), 16)))
    scorer = SiameseScorer(unit_normalize(raw), n_d=12, out_dim=8, channels=6, seed=3)
    cached = [distributed_encode(d, scorer) for d in docs]
    agree = 0
    for _ in range(50):
        q = list(rng.choice(tokens, size=2))
        qv = distributed_encode(q, scorer)
        direct = int(np.argmax([scorer.score(q, d) for d in docs]))
        fast = int(np.argmax([scorer.score_cached(qv, dv) for dv in cached]))
        agree += direct == fast
    check(7, "cached-vector top-1 equals direct-scoring top-1 (100 SKUs, 50 queries)",
          agree == 50, f"{agree}/50 queries agree")


# -- 8 ----------------------------------------------------------------------


def test_c08_click_statistics_match_the_model():
    catalog = generate_catalog(2000, seed=0)
    params = SimulationParams()
    sessions = generate_clicklog(catalog, 4200, params, seed=11)
    gamma = params.gamma
    n_ranks = 5
    obs = np.zeros(n_ranks)
    exp = np.zeros(n_ranks)
    var = np.zeros(n_ranks)
    # independence of the examination and attraction draws, tested through
    # the standardized covariance: raw corr of the binary outcomes would be
    # confounded by per-item attractiveness co-varying with rank exposure
    ind_num = ind_den = 0.0
    eh_ok = ch_ok = True
    n_impr = 0
    for sess in sessions:
        for req, trace in zip(sess.requests, sess.traces):
            clicked = set(req.clicks)
            order = sorted(req.impressions, key=lambda p: p[1])
            for j, (sku, rank) in enumerate(order):
                n_impr += 1
                u = gamma[rank - 1]
                v = params.attraction_of(sess.intent, sku)
                s = params.satisfaction[(sess.intent, sku)]
                p = params.alpha1 * u * v * s
                hit = rank in clicked
                obs[rank - 1] += hit
                exp[rank - 1] += p
                var[rank - 1] += p * (1.0 - p)
                ind_num += (float(trace.examined[j]) - u) * (float(trace.attracted[j]) - v)
                ind_den += u * (1.0 - u) * v * (1.0 - v)
                if hit and not (trace.m and trace.examined[j] and trace.attracted[j]):
                    eh_ok = False
                if hit and not trace.satisfied[j]:
                    ch_ok = False
    z = np.abs(obs - exp) / np.sqrt(var)
    z_ind = ind_num / np.sqrt(ind_den)
    ctr_ok = bool(np.all(z <= 3.0))
    check(8, "per-rank CTR within 3 SE; click/examination invariants on every sample",
          n_impr >= 100000 and ctr_ok and eh_ok and ch_ok and abs(z_ind) <= 3.0,
          f"{n_impr} impressions, max CTR z {z.max():.2f}, draw-independence z {z_ind:+.2f}")


# -- 9 ----------------------------------------------------------------------


def test_c09_temporal_split_has_no_query_leakage(benchmark_runs):
    run = benchmark_runs[0]
    parts = {
        name: {t.query for t in read_triples(run["dir"] / f"triples_{name}.tsv")}
        for name in ("train", "val", "test")
    }
    test_clean = not (parts["test"] & (parts["train"] | parts["val"]))
    val_clean = not (parts["val"] & parts["train"])
    ratio_emitted = "split sizes:" in run["result"].report and "ratio (" in run["result"].report
    check(9, "zero query overlap across the temporal split; ratio line emitted",
          test_clean and val_clean and ratio_emitted,
          f"train/val/test queries {len(parts['train'])}/{len(parts['val'])}/{len(parts['test'])}")


# -- 10 ---------------------------------------------------------------------


def test_c10_benchmark_is_deterministic(benchmark_runs):
    a, b = benchmark_runs
    same_obj = a["result"].report == b["result"].report
    same_file = (a["dir"] / "report.txt").read_bytes() == (b["dir"] / "report.txt").read_bytes()
    check(10, "full benchmark run twice with one seed yields identical reports",
          same_obj and same_file, f"report {len(a['result'].report)} chars")
