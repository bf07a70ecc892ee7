"""Mining pairwise training data from raw search sessions.

The signal: a user sees a results page, clicks nothing, types a longer
version of the same query, and clicks something new.  The clicked item
beats the top items of the abandoned page.  The demo walks one
hand-built session through the mining rules, then splits a simulated
log by time with query-disjointness enforced.
"""

from prodrank.catalog import generate_catalog
from prodrank.clicksim import SearchRequest, SimulationParams, generate_clicklog
from prodrank.extraction import (
    Session,
    SplitSpec,
    dataset_stats,
    extract_all,
    extract_triples,
    split_ratio_report,
    temporal_split,
)

session = Session(user="u1", session_id="u1:0", intent="", requests=[
    SearchRequest(100, "u1", "bookshelf",
                  impressions=[("alpha", 1), ("beta", 2), ("gamma", 3)], clicks=[]),
    SearchRequest(160, "u1", "white bookshelf",
                  impressions=[("delta", 1), ("epsilon", 2)], clicks=[1]),
])
print("== one refinement, one click ==")
for t in extract_triples(session, rho=2):
    print(f"  query {t.query!r}: {t.rel_sku} beats {t.irrel_sku} "
          f"(negative came from rank {t.irrel_rank})")

# No triple without a proper refinement: swapped word order or an
# unrelated follow-up query mines nothing.
session.requests[1].query = "bookshelf white oak desk"  # superset: still mines
print(f"  superset query mines {len(extract_triples(session, rho=2))} triples")
session.requests[1].query = "oak desk"  # not a refinement
print(f"  unrelated query mines {len(extract_triples(session, rho=2))} triples")

# Scale up: mine a simulated log and split it by calendar time.
catalog = generate_catalog(500, seed=4)
sessions = generate_clicklog(catalog, 600, SimulationParams(), seed=4)
triples = extract_all(sessions, rho=3)
print(f"\n== simulated log ==\n  {dataset_stats(triples)}")

span = max(t.timestamp for t in triples)
split = temporal_split(triples, SplitSpec(int(span * 0.75), int(span * 0.875)))
print(f"  {split_ratio_report(split)}")
train_q = {t.query for t in split["train"]}
val_q = {t.query for t in split["validation"]}
test_q = {t.query for t in split["test"]}
print(f"  query overlap train/val: {len(train_q & val_q)}, "
      f"train+val/test: {len((train_q | val_q) & test_q)}  (both must be 0)")
