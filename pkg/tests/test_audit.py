import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from policylens.audit import audit, merge_summaries, reduction_rate, serialize_summary, table_csv
from synthetic import conflict, corpus_reports, report


def hand_fixture():
    a = [
        report("siteA", "P1", [conflict("siteA", "P1", 1, "a0"),
                               conflict("siteA", "P1", 2, "a1", 0),
                               conflict("siteA", "P1", 2, "a1", 0, purpose="dpv:Marketing")], 10, 4),
        report("siteA", "P2", [conflict("siteA", "P2", 2, "a1", 0)], 10, 4),
    ]
    b = [
        report("siteB", "P1", [conflict("siteB", "P1", 0, "b0"),
                               conflict("siteB", "P1", 0, "b0", purpose="dpv:Marketing")], 5, 3),
        report("siteB", "P2", [], 5, 3),
    ]
    c = [
        report("siteC", "P1", [], 4, 2),
        report("siteC", "P2", [conflict("siteC", "P2", 3, "c0", 1)], 4, 2),
    ]
    return a + b + c


def test_reduction_rate_reference_counts():
    assert reduction_rate(13205, 636) == pytest.approx(1 - 636 / 13205)
    assert abs(reduction_rate(13205, 636) * 100 - 95.2) <= 0.05


def test_reduction_rate_no_segments():
    assert reduction_rate(0, 0) == 1.0


def test_synthetic_corpus_totals():
    s = audit(corpus_reports())
    t = s.totals
    assert (t.segments_total, t.segments_with_practices, t.segments_conflicting, t.conflicts_total) == \
        (13205, 3421, 636, 4083)
    assert abs(s.reduction_rate * 100 - 95.2) <= 0.05


def test_zero_conflict_website():
    s = audit([report("quiet", "P1", [], 12, 3), report("quiet", "P2", [], 12, 3)])
    (g,) = s.groups
    assert g.vg == 0 and g.r_cs is None and g.r_pp == 0.0 and g.r_pp_normalized is None


def test_hand_computed_golden(golden_dir):
    expected = json.loads((golden_dir / "audit_hand.json").read_text())
    doc = serialize_summary(audit(hand_fixture()))
    assert doc["totals"] == expected["totals"]
    assert doc["reduction_rate"] == pytest.approx(expected["reduction_rate"], abs=1e-12)
    assert len(doc["groups"]) == len(expected["groups"])
    for got, want in zip(doc["groups"], expected["groups"]):
        assert got["vg"] == want["vg"] and got["websites"] == want["websites"]
        for key in ("r_pp", "r_cs", "r_pp_normalized"):
            assert got[key] == pytest.approx(want[key], abs=1e-12)
    sites = {w["app_id"]: w for w in doc["websites"]}
    for app, want in expected["websites"].items():
        for key, value in want.items():
            assert sites[app][key] == pytest.approx(value) if isinstance(value, float) else sites[app][key] == value


def test_profile_stats():
    stats = audit(hand_fixture()).profile_stats()
    assert stats["P1"]["websites_conflicting"] == 2
    assert stats["P1"]["mean_conflicting_segments"] == pytest.approx(1.5)
    assert stats["P2"]["conflicts"] == 2


def test_duplicate_pair_rejected():
    r = report("s", "P1", [], 3, 1)
    with pytest.raises(ValueError, match="duplicate"):
        audit([r, r])


def test_inconsistent_segment_counts_rejected():
    with pytest.raises(ValueError, match="inconsistent"):
        audit([report("s", "P1", [], 3, 1), report("s", "P2", [], 4, 1)])


def test_csv_layout():
    lines = table_csv(audit(hand_fixture())).splitlines()
    assert lines[0] == "app_id,n_pp,n_cs,n_con,vg,practices_per_conflict,practices_per_violated_profile,n_pr:P1,n_pr:P2"
    assert lines[1] == "siteA,10,2,4,2,0.75,1.5,2,1"
    assert len(lines) == 4


@given(st.randoms(), st.integers(0, 9))
@settings(max_examples=100, deadline=None)
def test_additive_under_split(rnd, cut):
    reports = hand_fixture() + corpus_reports(websites=5, segments=50, with_practices=20, conflicting=9,
                                              conflicts=17)
    rnd.shuffle(reports)
    cut = cut % (len(reports) + 1)
    merged = merge_summaries(audit(reports[:cut]), audit(reports[cut:]))
    assert serialize_summary(merged) == serialize_summary(audit(reports))


def test_order_independent():
    reports = hand_fixture()
    shuffled = list(reports)
    random.Random(3).shuffle(shuffled)
    assert json.dumps(serialize_summary(audit(shuffled))) == json.dumps(serialize_summary(audit(reports)))
