"""Sessionization, refinement detection, triple mining conditions,
temporal splitting, and the triple file format."""

import pytest

from prodrank.clicksim import SearchRequest, Session
from prodrank.extraction import (
    SplitSpec,
    TrainingTriple,
    dataset_stats,
    extract_all,
    extract_triples,
    is_refinement,
    read_triples,
    sessionize,
    split_ratio_report,
    temporal_split,
    write_triples,
)

from oracles import extract_triples_literal


def req(ts, user, query, ranked, clicked_skus=()):
    """Build a SearchRequest from sku lists rather than rank indices."""
    impressions = [(sku, r + 1) for r, sku in enumerate(ranked)]
    clicks = sorted(ranked.index(s) + 1 for s in clicked_skus)
    return SearchRequest(ts, user, query, impressions, clicks)


def sess(requests):
    s = Session(user="u", session_id="u:0", intent="")
    s.requests = list(requests)
    return s


# ---------------------------------------------------------------------------
# sessionize
# ---------------------------------------------------------------------------


def test_sessionize_within_timeout():
    log = [req(0, "a", "q1", ["s1"]), req(300, "a", "q2", ["s1"])]
    out = sessionize(log, inactivity_timeout=1800)
    assert len(out) == 1
    assert [r.query for r in out[0].requests] == ["q1", "q2"]


def test_sessionize_gap_splits():
    log = [req(0, "a", "q1", ["s1"]), req(31 * 60, "a", "q2", ["s1"])]
    out = sessionize(log, inactivity_timeout=1800)
    assert len(out) == 2
    assert out[0].session_id == "a:0" and out[1].session_id == "a:1"


def test_sessionize_interleaved_users():
    log = [
        req(0, "a", "q1", ["s1"]),
        req(60, "b", "x", ["s2"]),
        req(120, "a", "q2", ["s1"]),
    ]
    out = sessionize(log, inactivity_timeout=1800)
    by_user = {s.user: [r.query for r in s.requests] for s in out}
    assert by_user == {"a": ["q1", "q2"], "b": ["x"]}


def test_sessionize_accepts_unsorted_input():
    log = [req(120, "a", "late", ["s1"]), req(0, "a", "early", ["s1"])]
    out = sessionize(log)
    assert [r.query for r in out[0].requests] == ["early", "late"]


# ---------------------------------------------------------------------------
# is_refinement
# ---------------------------------------------------------------------------


def test_refinement_token_extension():
    assert is_refinement("bookshelf", "bookshelf with doors")


def test_refinement_requires_containment():
    assert not is_refinement("wooden bookshelf", "bookshelf with doors")


def test_refinement_excludes_equality():
    assert not is_refinement("red chair", "red chair")
    assert not is_refinement("red chair", "chair red")  # reorder, same multiset


def test_refinement_respects_multiplicity():
    assert is_refinement("red", "red red chair")
    assert not is_refinement("red red", "red chair")


def test_refinement_normalizes_first():
    assert is_refinement("Bookshelf", "bookshelf, with doors!")


# ---------------------------------------------------------------------------
# extract_triples
# ---------------------------------------------------------------------------


def test_two_triples_from_textbook_pair():
    s = sess([
        req(100, "u", "bookshelf", ["s1", "s2", "s3"]),
        req(200, "u", "bookshelf with doors", ["s9", "s2"], clicked_skus=["s9"]),
    ])
    got = extract_triples(s, rho=2)
    assert {(t.query, t.rel_sku, t.irrel_sku, t.timestamp) for t in got} == {
        ("bookshelf with doors", "s9", "s1", 200),
        ("bookshelf with doors", "s9", "s2", 200),
    }
    assert all(t.session_id == "u:0" for t in got)


def test_earlier_click_disqualifies():
    s = sess([
        req(100, "u", "bookshelf", ["s1", "s2"], clicked_skus=["s1"]),
        req(200, "u", "bookshelf with doors", ["s9"], clicked_skus=["s9"]),
    ])
    assert extract_triples(s, rho=3) == []


def test_clickless_later_request_disqualifies():
    s = sess([
        req(100, "u", "bookshelf", ["s1", "s2"]),
        req(200, "u", "bookshelf with doors", ["s9"]),
    ])
    assert extract_triples(s, rho=3) == []


def test_clicked_sku_on_earlier_page_disqualifies_that_click():
    s = sess([
        req(100, "u", "bookshelf", ["s1", "s2", "s9"]),
        req(200, "u", "bookshelf with doors", ["s9", "s7"], clicked_skus=["s9", "s7"]),
    ])
    got = extract_triples(s, rho=1)
    # s9 appeared at rank 3 earlier -> only the s7 click survives
    assert {(t.rel_sku, t.irrel_sku) for t in got} == {("s7", "s1")}


def test_rho_truncates_to_page_length():
    s = sess([
        req(100, "u", "bookshelf", ["s1", "s2"]),
        req(200, "u", "bookshelf with doors", ["s9"], clicked_skus=["s9"]),
    ])
    assert len(extract_triples(s, rho=10)) == 2  # page only has 2 results


def test_non_adjacent_pairs_qualify():
    s = sess([
        req(100, "u", "bookshelf", ["s1"]),
        req(200, "u", "lamp", ["s5"], clicked_skus=["s5"]),
        req(300, "u", "bookshelf with doors", ["s9"], clicked_skus=["s9"]),
    ])
    got = extract_triples(s, rho=3)
    assert {(t.query, t.rel_sku, t.irrel_sku) for t in got} == {
        ("bookshelf with doors", "s9", "s1")
    }


def test_rho_must_be_positive():
    with pytest.raises(ValueError, match="rho"):
        extract_triples(sess([]), rho=0)


def test_triple_ranks_recorded():
    s = sess([
        req(100, "u", "a", ["s1", "s2", "s3"]),
        req(200, "u", "a b", ["s9", "s8"], clicked_skus=["s8"]),
    ])
    got = extract_triples(s, rho=2)
    assert {(t.rel_rank, t.irrel_rank) for t in got} == {(2, 1), (2, 2)}


def test_extract_matches_literal_oracle_on_random_sessions(rng):
    queries = ["red", "red chair", "red chair oak", "blue"]
    skus = ["s1", "s2", "s3", "s4", "s5"]
    for _ in range(300):
        n_req = int(rng.integers(1, 5))
        plain, wrapped = [], []
        for i in range(n_req):
            page = [skus[j] for j in rng.permutation(5)[: rng.integers(1, 5)]]
            clicked = [s for s in page if rng.random() < 0.3]
            q = queries[rng.integers(len(queries))]
            ts = 100 + i * 10
            plain.append({"timestamp": ts, "query": q, "ranked": page, "clicked": clicked})
            wrapped.append(req(ts, "u", q, page, clicked_skus=clicked))
        rho = int(rng.integers(1, 4))
        got = {
            (t.query, t.rel_sku, t.irrel_sku, t.timestamp)
            for t in extract_triples(sess(wrapped), rho)
        }
        assert got == extract_triples_literal(plain, rho)


def test_extract_all_concatenates():
    s1 = sess([
        req(100, "u", "a", ["s1"]),
        req(200, "u", "a b", ["s9"], clicked_skus=["s9"]),
    ])
    s2 = sess([
        req(100, "v", "c", ["s2"]),
        req(200, "v", "c d", ["s8"], clicked_skus=["s8"]),
    ])
    assert len(extract_all([s1, s2], rho=1)) == 2


# ---------------------------------------------------------------------------
# temporal split
# ---------------------------------------------------------------------------


def tr(query, ts):
    return TrainingTriple(query, "r", "i", ts)


def test_split_boundaries_validated():
    with pytest.raises(ValueError, match="strictly increasing"):
        SplitSpec(train_end=100, val_end=100)


def test_split_pure_time_partition_when_disjoint():
    triples = [tr("a", 10), tr("b", 110), tr("c", 210)]
    split = temporal_split(triples, SplitSpec(100, 200))
    assert [t.query for t in split["train"]] == ["a"]
    assert [t.query for t in split["validation"]] == ["b"]
    assert [t.query for t in split["test"]] == ["c"]


def test_split_drops_val_queries_seen_in_train_window():
    triples = [tr("a", 10), tr("a", 110), tr("b", 120)]
    split = temporal_split(triples, SplitSpec(100, 200))
    assert [t.query for t in split["validation"]] == ["b"]


def test_split_drops_test_queries_seen_earlier():
    triples = [tr("a", 10), tr("b", 110), tr("a", 210), tr("b", 220), tr("c", 230)]
    split = temporal_split(triples, SplitSpec(100, 200))
    assert [t.query for t in split["test"]] == ["c"]


def test_split_window_membership_defines_seen():
    # "b" occurs in the val window only via a triple that itself gets
    # dropped; test examples of "b" must still be excluded
    triples = [tr("b", 10), tr("b", 110), tr("b", 210), tr("c", 220)]
    split = temporal_split(triples, SplitSpec(100, 200))
    assert [t.query for t in split["validation"]] == []
    assert [t.query for t in split["test"]] == ["c"]


def test_split_no_query_in_two_splits(rng):
    queries = [f"q{i}" for i in range(30)]
    triples = [
        tr(queries[rng.integers(30)], int(rng.integers(0, 300))) for _ in range(400)
    ]
    split = temporal_split(triples, SplitSpec(100, 200))
    q_train = {t.query for t in split["train"]}
    q_val = {t.query for t in split["validation"]}
    q_test = {t.query for t in split["test"]}
    assert not (q_train & q_val)
    assert not (q_train & q_test)
    assert not (q_val & q_test)


def test_split_matches_two_pass_filter(rng):
    queries = [f"q{i}" for i in range(12)]
    triples = [
        tr(queries[rng.integers(12)], int(rng.integers(0, 300))) for _ in range(200)
    ]
    spec = SplitSpec(100, 200)
    split = temporal_split(triples, spec)
    # brute force: window partition, then filter by window query sets
    train = [t for t in triples if t.timestamp < 100]
    val_w = [t for t in triples if 100 <= t.timestamp < 200]
    test_w = [t for t in triples if t.timestamp >= 200]
    seen_train = {t.query for t in train}
    seen_val = {t.query for t in val_w}
    assert split["train"] == train
    assert split["validation"] == [t for t in val_w if t.query not in seen_train]
    assert split["test"] == [
        t for t in test_w if t.query not in seen_train and t.query not in seen_val
    ]


def test_ratio_report_format():
    split = {
        "train": [tr("a", 0)] * 75,
        "validation": [tr("b", 0)] * 5,
        "test": [tr("c", 0)] * 2,
    }
    line = split_ratio_report(split)
    assert "train 75" in line and "validation 5" in line and "test 2" in line
    assert "(37.5:2.5:1)" in line


def test_ratio_report_empty_test():
    assert "(test empty)" in split_ratio_report({"train": [], "validation": [], "test": []})


# ---------------------------------------------------------------------------
# stats and files
# ---------------------------------------------------------------------------


def test_stats_empty():
    s = dataset_stats([])
    assert (s.n_examples, s.n_unique_queries, s.n_unique_rel, s.n_unique_irrel, s.n_both_sides) == (0, 0, 0, 0, 0)


def test_stats_shared_query():
    triples = [
        TrainingTriple("q", "r1", "i1", 0),
        TrainingTriple("q", "r2", "i2", 0),
        TrainingTriple("q", "r1", "i3", 0),
    ]
    s = dataset_stats(triples)
    assert s.n_unique_queries == 1
    assert s.n_unique_rel == 2 and s.n_unique_irrel == 3
    assert s.n_both_sides == 0


def test_stats_both_sides_counted():
    triples = [
        TrainingTriple("q1", "s1", "s2", 0),
        TrainingTriple("q2", "s2", "s3", 0),
    ]
    assert dataset_stats(triples).n_both_sides == 1
    assert "SKUs on both sides 1" in str(dataset_stats(triples))


def test_stats_recount_oracle(rng):
    triples = [
        TrainingTriple(f"q{rng.integers(9)}", f"r{rng.integers(15)}", f"i{rng.integers(15)}", 0)
        for _ in range(250)
    ]
    s = dataset_stats(triples)
    assert s.n_examples == len(triples)
    assert s.n_unique_queries == len({t.query for t in triples})
    assert s.n_unique_rel == len({t.rel_sku for t in triples})
    assert s.n_unique_irrel == len({t.irrel_sku for t in triples})
    assert s.n_both_sides == len(
        {t.rel_sku for t in triples} & {t.irrel_sku for t in triples}
    )


def test_triples_file_round_trip(tmp_path):
    triples = [
        TrainingTriple("red chair", "s1", "s2", 12345),
        TrainingTriple("blue sofa", "s3", "s4", 67890),
    ]
    p = tmp_path / "triples.tsv"
    write_triples(triples, p)
    assert p.read_text() == "red chair\ts1\ts2\t12345\nblue sofa\ts3\ts4\t67890\n"
    back = read_triples(p)
    assert [(t.query, t.rel_sku, t.irrel_sku, t.timestamp) for t in back] == [
        ("red chair", "s1", "s2", 12345),
        ("blue sofa", "s3", "s4", 67890),
    ]


def test_triples_file_field_count_error(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("only\tthree\tfields\n")
    with pytest.raises(ValueError, match="bad.tsv:1"):
        read_triples(p)


def test_triples_file_bad_timestamp(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("q\tr\ti\tnot-a-number\n")
    with pytest.raises(ValueError, match="bad timestamp"):
        read_triples(p)
