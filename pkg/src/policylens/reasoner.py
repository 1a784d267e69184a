"""Compliance checking of app policies against user profiles."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .model import (
    ANY,
    SCHEMA_VERSION,
    AppPolicy,
    Choice,
    ConsumerScope,
    DataPolicy,
    Effect,
    PartyKind,
    PartyRef,
    Rule,
    SegmentRef,
    Stance,
    UserProfile,
    _party_doc,
    _segment_doc,
    check_schema,
)
from .vocab import UNSPECIFIED, ConceptHierarchy, MatchMode


@dataclass(frozen=True)
class Usage:
    data: str
    purpose: str
    consumer: PartyRef
    spec_port: str
    provenance: SegmentRef
    downstream_index: int | None = None
    choice: Choice = Choice.UNCONDITIONAL


class VerdictKind(str, enum.Enum):
    PERMITTED = "Permitted"
    PROHIBITED = "Prohibited"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    #: Index of the deciding Prohibit rule; ``None`` when the default stance decided.
    rule_index: int | None = None

    @property
    def prohibited(self) -> bool:
        return self.kind is VerdictKind.PROHIBITED


PERMITTED = Verdict(VerdictKind.PERMITTED)
NOT_APPLICABLE = Verdict(VerdictKind.NOT_APPLICABLE)


class Reason(str, enum.Enum):
    PROHIBITED_PURPOSE = "ProhibitedPurpose"
    THIRD_PARTY_DISALLOWED = "ThirdPartyDisallowed"
    NOT_IN_PERMITTED_SET = "NotInPermittedSet"


@dataclass(frozen=True)
class Conflict:
    profile_id: str
    policy_id: str
    rule_index: int | None
    app_id: str
    usage: Usage
    reason: Reason

    @property
    def original_text(self) -> str:
        return self.usage.provenance.text

    def sort_key(self):
        u = self.usage
        return (
            u.provenance.segment_index,
            u.spec_port,
            self.policy_id,
            -1 if self.rule_index is None else self.rule_index,
            -1 if u.downstream_index is None else u.downstream_index,
            u.data,
            u.purpose,
        )


@dataclass(frozen=True)
class ReportCounts:
    segments_total: int = 0
    segments_with_practices: int = 0
    segments_conflicting: int = 0
    conflicts_total: int = 0


@dataclass(frozen=True)
class ConflictReport:
    app_id: str
    profile_id: str
    conflicts: tuple[Conflict, ...] = ()
    counts: ReportCounts = field(default_factory=ReportCounts)


def expand_usages(p: AppPolicy) -> list[Usage]:
    """Flatten an app policy into one usage per (spec, data, purpose, consumer).

    Empty purpose lists expand to ``unspecified``.
    """
    out = []
    first = PartyRef.first()
    for spec in p.input_specs:
        purposes = spec.purposes or (UNSPECIFIED,)
        for data in spec.data:
            for purpose in purposes:
                out.append(Usage(data, purpose, first, spec.port, spec.provenance))
            for k, d in enumerate(spec.downstreams):
                for purpose in d.purposes or (UNSPECIFIED,):
                    out.append(
                        Usage(data, purpose, d.recipient, spec.port, d.provenance, k, d.choice)
                    )
    return out


def data_in_scope(dp: DataPolicy, data: str, h: ConceptHierarchy) -> bool:
    scope = dp.data_scope
    if data == UNSPECIFIED:
        # ungrounded data only falls under a whole-vocabulary scope
        return scope.mode is MatchMode.SUBTREE and scope.concept in h.roots
    return h.match(data, scope.concept, scope.mode)


def rule_applies(rule: Rule, u: Usage, h: ConceptHierarchy) -> bool:
    if rule.purpose_scope != ANY:
        if u.purpose == UNSPECIFIED:
            return False
        if not h.match(u.purpose, rule.purpose_scope.concept, rule.purpose_scope.mode):
            return False
    third = u.consumer.kind is PartyKind.THIRD
    if rule.consumer_scope is ConsumerScope.FIRST_PARTY_ONLY and third:
        return False
    if rule.consumer_scope is ConsumerScope.THIRD_PARTY_ONLY and not third:
        return False
    if rule.recipient_name_pattern is not None:
        name = u.consumer.name if third else None
        if not name or rule.recipient_name_pattern.casefold() not in name.casefold():
            return False
    return True


def evaluate_policy(dp: DataPolicy, u: Usage, h: ConceptHierarchy) -> Verdict:
    """Prohibit overrides Permit; the default stance decides when no rule applies."""
    if not data_in_scope(dp, u.data, h):
        return NOT_APPLICABLE
    permitted = False
    for i, rule in enumerate(dp.rules):
        if not rule_applies(rule, u, h):
            continue
        if rule.effect is Effect.PROHIBIT:
            return Verdict(VerdictKind.PROHIBITED, i)
        permitted = True
    if permitted or dp.default_stance is Stance.PERMIT_BY_DEFAULT:
        return PERMITTED
    return Verdict(VerdictKind.PROHIBITED, None)


def _reason(dp: DataPolicy, verdict: Verdict) -> Reason:
    if verdict.rule_index is None:
        return Reason.NOT_IN_PERMITTED_SET
    if dp.rules[verdict.rule_index].consumer_scope is ConsumerScope.THIRD_PARTY_ONLY:
        return Reason.THIRD_PARTY_DISALLOWED
    return Reason.PROHIBITED_PURPOSE


def check_compliance(p: AppPolicy, prof: UserProfile, h: ConceptHierarchy) -> ConflictReport:
    usages = expand_usages(p)
    conflicts = []
    for u in usages:
        for dp in prof.policies:
            verdict = evaluate_policy(dp, u, h)
            if verdict.prohibited:
                conflicts.append(
                    Conflict(prof.profile_id, dp.policy_id, verdict.rule_index, p.app_id, u, _reason(dp, verdict))
                )
    conflicts.sort(key=Conflict.sort_key)
    return ConflictReport(p.app_id, prof.profile_id, tuple(conflicts), _counts(p, conflicts))


def _counts(p: AppPolicy, conflicts: Iterable[Conflict]) -> ReportCounts:
    conflicts = list(conflicts)
    with_practices = set()
    for spec in p.input_specs:
        with_practices.add((spec.provenance.doc_id, spec.provenance.segment_index))
        for d in spec.downstreams:
            with_practices.add((d.provenance.doc_id, d.provenance.segment_index))
    conflicting = {(c.usage.provenance.doc_id, c.usage.provenance.segment_index) for c in conflicts}
    total = p.segment_count if p.segment_count is not None else len(with_practices)
    return ReportCounts(
        segments_total=max(total, len(with_practices)),
        segments_with_practices=len(with_practices),
        segments_conflicting=len(conflicting),
        conflicts_total=len(conflicts),
    )


# --------------------------------------------------------------------------
# report documents

def _usage_doc(u: Usage) -> dict:
    return {
        "data": u.data,
        "purpose": u.purpose,
        "consumer": _party_doc(u.consumer),
        "spec_port": u.spec_port,
        "downstream_index": u.downstream_index,
        "choice": u.choice.value,
        "provenance": _segment_doc(u.provenance),
    }


def serialize_report(r: ConflictReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "app_id": r.app_id,
        "profile_id": r.profile_id,
        "counts": {
            "segments_total": r.counts.segments_total,
            "segments_with_practices": r.counts.segments_with_practices,
            "segments_conflicting": r.counts.segments_conflicting,
            "conflicts_total": r.counts.conflicts_total,
        },
        "conflicts": [
            {
                "profile_id": c.profile_id,
                "policy_id": c.policy_id,
                "rule_index": c.rule_index,
                "app_id": c.app_id,
                "reason": c.reason.value,
                "original_text": c.original_text,
                "usage": _usage_doc(c.usage),
            }
            for c in r.conflicts
        ],
    }


def parse_report(doc) -> ConflictReport:
    check_schema(doc, "report")
    conflicts = []
    for c in doc["conflicts"]:
        u = c["usage"]
        usage = Usage(
            u["data"],
            u["purpose"],
            PartyRef(PartyKind(u["consumer"]["kind"]), u["consumer"]["name"]),
            u["spec_port"],
            SegmentRef(**u["provenance"]),
            u["downstream_index"],
            Choice(u["choice"]),
        )
        if c["original_text"] != usage.provenance.text:
            raise ValueError(f"conflict text does not match its provenance in {doc['app_id']}")
        conflicts.append(
            Conflict(c["profile_id"], c["policy_id"], c["rule_index"], c["app_id"], usage, Reason(c["reason"]))
        )
    return ConflictReport(doc["app_id"], doc["profile_id"], tuple(conflicts), ReportCounts(**doc["counts"]))
