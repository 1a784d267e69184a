import json

import pytest
from hypothesis import given, settings, strategies as st

from policylens.model import (
    ANY,
    AppPolicy,
    Choice,
    ConsumerScope,
    DataPolicy,
    Downstream,
    Effect,
    InputSpec,
    PartyRef,
    PolicyError,
    Rule,
    Scope,
    SegmentRef,
    Stance,
    UserProfile,
    dumps,
    parse_app_policy,
    parse_profile,
    serialize_app_policy,
    serialize_profile,
    validate,
)
from policylens.vocab import MatchMode, load_default_vocabulary

SEG = {"doc_id": "doc1", "segment_index": 4, "text": "We use your location to analyze traffic patterns."}


def spec_doc(port, data=("dpv:Location",), purposes=("dpv:Analytics",), downstreams=()):
    return {"port": port, "data": list(data), "purposes": list(purposes),
            "downstreams": list(downstreams), "provenance": SEG}


def app_doc(*specs, app_id="doc1"):
    return {"schema_version": 1, "app_id": app_id, "input_specs": list(specs)}


# ------------------------------------------------------------------ app policies

def test_parse_single_spec(vocab):
    p = parse_app_policy(app_doc(spec_doc("doc1#s4#0")), vocab)
    assert len(p.input_specs) == 1
    spec = p.input_specs[0]
    assert spec.data == ("dpv:Location",) and spec.purposes == ("dpv:Analytics",)
    assert spec.provenance == SegmentRef("doc1", 4, SEG["text"])


def test_duplicate_port_names_the_port():
    with pytest.raises(PolicyError) as err:
        parse_app_policy(app_doc(spec_doc("p"), spec_doc("p")))
    assert "'p'" in str(err.value)
    assert err.value.diagnostics[0].code == "duplicate-port"


def test_serialize_empty_policy():
    assert serialize_app_policy(AppPolicy("app")) == {"schema_version": 1, "app_id": "app", "input_specs": []}


def test_serialize_sorts_ports():
    doc = app_doc(spec_doc("b"), spec_doc("a"))
    ports = [s["port"] for s in serialize_app_policy(parse_app_policy(doc))["input_specs"]]
    assert ports == ["a", "b"]


def test_unknown_field_rejected():
    doc = app_doc(spec_doc("a"))
    doc["extra"] = 1
    with pytest.raises(PolicyError, match="extra"):
        parse_app_policy(doc)


def test_schema_version_required():
    doc = app_doc(spec_doc("a"))
    doc["schema_version"] = 2
    with pytest.raises(PolicyError):
        parse_app_policy(doc)


def test_error_carries_json_path():
    doc = app_doc(spec_doc("a"))
    doc["input_specs"][0]["data"] = []
    with pytest.raises(PolicyError) as err:
        parse_app_policy(doc)
    assert "input_specs" in err.value.diagnostics[0].location


def test_first_party_downstream_rejected():
    d = {"recipient": {"kind": "FirstParty", "name": None}, "purposes": [], "choice": "Unconditional", "provenance": SEG}
    with pytest.raises(PolicyError, match="third party"):
        parse_app_policy(app_doc(spec_doc("a", downstreams=[d])))


def test_validate_valid_policy_is_clean(vocab):
    assert validate(parse_app_policy(app_doc(spec_doc("a"))), vocab) == []


def test_validate_unknown_concept(vocab):
    p = parse_app_policy(app_doc(spec_doc("a", data=("dpv:Telepathy",))))
    diags = validate(p, vocab)
    assert [d.code for d in diags] == ["unknown-concept"]
    assert diags[0].location == "$.input_specs[0].data[0]"


def test_validate_unspecified_exempt(vocab):
    p = parse_app_policy(app_doc(spec_doc("a", data=("unspecified",), purposes=("unspecified",))))
    assert validate(p, vocab) == []


def test_parse_with_hierarchy_rejects_unknown(vocab):
    with pytest.raises(PolicyError, match="Telepathy"):
        parse_app_policy(app_doc(spec_doc("a", purposes=("dpv:Telepathy",))), vocab)


def test_validate_is_pure(vocab):
    p = parse_app_policy(app_doc(spec_doc("b"), spec_doc("a")))
    before = repr(p)
    validate(p, vocab)
    assert repr(p) == before


# ------------------------------------------------------------------ profiles

DATA_AD_3RD_NO = {
    "schema_version": 1,
    "profile_id": "data-ad-3rd-no",
    "policies": [{
        "policy_id": "data-ad-3rd-no/data",
        "data_scope": {"concept": "dpv:Data-general", "mode": "Subtree"},
        "default_stance": "PermitByDefault",
        "rules": [{"effect": "Prohibit", "purpose_scope": {"concept": "dpv:Advertisement", "mode": "Subtree"},
                   "consumer_scope": "ThirdPartyOnly"}],
    }],
}

LOCATION_3RD_NO = {
    "schema_version": 1,
    "profile_id": "location-3rd-no",
    "policies": [{
        "policy_id": "location-3rd-no/location",
        "data_scope": {"concept": "dpv:Location", "mode": "Subtree"},
        "default_stance": "PermitByDefault",
        "rules": [{"effect": "Prohibit", "purpose_scope": "Any", "consumer_scope": "ThirdPartyOnly"}],
    }],
}


def test_parse_data_ad_3rd_no(vocab):
    prof = parse_profile(DATA_AD_3RD_NO, vocab)
    (dp,) = prof.policies
    assert dp.data_scope == Scope("dpv:Data-general", MatchMode.SUBTREE)
    assert dp.default_stance is Stance.PERMIT_BY_DEFAULT
    assert dp.rules == (Rule(Effect.PROHIBIT, Scope("dpv:Advertisement", MatchMode.SUBTREE),
                             ConsumerScope.THIRD_PARTY_ONLY),)


def test_parse_location_3rd_no(vocab):
    (dp,) = parse_profile(LOCATION_3RD_NO, vocab).policies
    assert dp.data_scope.concept == "dpv:Location"
    assert dp.rules[0].purpose_scope == ANY


def test_pattern_with_first_party_only_rejected():
    doc = json.loads(json.dumps(LOCATION_3RD_NO))
    doc["policies"][0]["rules"][0].update(consumer_scope="FirstPartyOnly", recipient_name_pattern="ads")
    with pytest.raises(PolicyError) as err:
        parse_profile(doc)
    assert err.value.diagnostics[0].code == "pattern-without-third-party"


def test_unspecified_scope_rejected(vocab):
    doc = json.loads(json.dumps(LOCATION_3RD_NO))
    doc["policies"][0]["data_scope"]["concept"] = "unspecified"
    with pytest.raises(PolicyError, match="scopes must name"):
        parse_profile(doc, vocab)


def test_duplicate_policy_id_rejected():
    doc = json.loads(json.dumps(LOCATION_3RD_NO))
    doc["policies"].append(doc["policies"][0])
    with pytest.raises(PolicyError, match="duplicate policy"):
        parse_profile(doc)


def test_profile_roundtrip():
    prof = parse_profile(DATA_AD_3RD_NO)
    assert serialize_profile(prof) == DATA_AD_3RD_NO
    assert parse_profile(serialize_profile(prof)) == prof


# ------------------------------------------------------------------ round trip on random documents

_H = load_default_vocabulary()
CONCEPTS = sorted(_H) + ["unspecified"]
concept_lists = st.lists(st.sampled_from(CONCEPTS), unique=True, max_size=4).map(tuple)
segments = st.builds(SegmentRef, st.sampled_from(["d1", "d2"]), st.integers(0, 50),
                     st.text(max_size=30))
downstreams = st.builds(
    Downstream,
    st.builds(PartyRef.third, st.one_of(st.none(), st.text(min_size=1, max_size=10))),
    concept_lists,
    segments,
    st.sampled_from(list(Choice)),
)


@st.composite
def app_policies(draw):
    ports = draw(st.lists(st.text("abc#s0123", min_size=1, max_size=8), unique=True, max_size=6))
    specs = tuple(
        InputSpec(port,
                  draw(st.lists(st.sampled_from(CONCEPTS), unique=True, min_size=1, max_size=4).map(tuple)),
                  draw(concept_lists), draw(segments),
                  tuple(draw(st.lists(downstreams, max_size=3))))
        for port in ports
    )
    return AppPolicy(draw(st.text(min_size=1, max_size=8)), specs,
                     draw(st.one_of(st.none(), st.integers(0, 100))))


@given(app_policies())
@settings(max_examples=100, deadline=None)
def test_app_policy_roundtrip(p):
    doc = serialize_app_policy(p)
    back = parse_app_policy(json.loads(dumps(doc)), _H)
    assert back == p.canonical()
    assert dumps(serialize_app_policy(back)) == dumps(doc)


@given(app_policies(), st.randoms())
@settings(max_examples=50, deadline=None)
def test_serialization_independent_of_order(p, rnd):
    specs = list(p.input_specs)
    rnd.shuffle(specs)
    shuffled = AppPolicy(p.app_id, tuple(
        InputSpec(s.port, tuple(reversed(s.data)), tuple(reversed(s.purposes)), s.provenance,
                  tuple(reversed(s.downstreams)))
        for s in specs), p.segment_count)
    assert dumps(serialize_app_policy(shuffled)) == dumps(serialize_app_policy(p))


rules = st.builds(
    Rule,
    st.sampled_from(list(Effect)),
    st.one_of(st.just(ANY), st.builds(Scope, st.sampled_from(sorted(_H)), st.sampled_from(list(MatchMode)))),
    st.sampled_from([ConsumerScope.THIRD_PARTY_ONLY, ConsumerScope.ANY_PARTY]),
    st.one_of(st.none(), st.text(min_size=1, max_size=5)),
)


@st.composite
def profiles(draw):
    ids = draw(st.lists(st.text("xyz/", min_size=1, max_size=5), unique=True, max_size=3))
    policies = tuple(
        DataPolicy(i, Scope(draw(st.sampled_from(sorted(_H))), draw(st.sampled_from(list(MatchMode)))),
                   draw(st.sampled_from(list(Stance))), tuple(draw(st.lists(rules, max_size=4))))
        for i in ids
    )
    return UserProfile(draw(st.text("ab.-_0", min_size=1, max_size=8)), policies, draw(st.text(max_size=10)))


@given(profiles())
@settings(max_examples=100, deadline=None)
def test_profile_roundtrip_random(prof):
    assert parse_profile(json.loads(dumps(serialize_profile(prof))), _H) == prof
