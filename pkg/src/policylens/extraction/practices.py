"""Segments, entity spans and extracted practices, plus the practice dump format."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Iterable

from ..model import (
    SCHEMA_VERSION,
    Choice,
    PartyKind,
    PartyRef,
    SegmentRef,
    _party,
    _party_doc,
    _segment,
    _segment_doc,
    check_schema,
)
from ..vocab import UNSPECIFIED


class EntityKind(str, enum.Enum):
    DATA = "Data"
    PURPOSE = "Purpose"
    ACTION = "Action"
    PARTY = "Party"


class PracticeKind(str, enum.Enum):
    COLLECTION_USE = "CollectionUse"
    THIRD_PARTY_SHARING = "ThirdPartySharingDisclosure"


class Role(str, enum.Enum):
    ACTOR = "Actor"
    DATA_OBJECT = "DataObject"
    PURPOSE = "Purpose"
    RECIPIENT = "Recipient"


@dataclass(frozen=True)
class Segment:
    doc_id: str
    index: int
    text: str

    @property
    def ref(self) -> SegmentRef:
        return SegmentRef(self.doc_id, self.index, self.text)


@dataclass(frozen=True)
class EntitySpan:
    id: str
    kind: EntityKind
    surface: str
    concept: str | None = None


@dataclass(frozen=True)
class RelationLink:
    practice_id: str
    entity_id: str
    role: Role


@dataclass(frozen=True)
class ExtractedPractice:
    id: str
    kind: PracticeKind
    segment: SegmentRef
    ordinal: int
    action_surface: str
    party: PartyRef
    data: tuple[EntitySpan, ...] = ()
    purposes: tuple[EntitySpan, ...] = ()
    recipients: tuple[PartyRef, ...] = ()
    choice: Choice = Choice.UNCONDITIONAL

    @property
    def data_concepts(self) -> list[str]:
        return _concepts(self.data)

    @property
    def purpose_concepts(self) -> list[str]:
        return _concepts(self.purposes)


def _concepts(spans: Iterable[EntitySpan]) -> list[str]:
    out: list[str] = []
    for s in spans:
        c = s.concept or UNSPECIFIED
        if c not in out:
            out.append(c)
    return out


def segment_document(doc_id: str, text: str) -> list[Segment]:
    """One segment per non-blank line, indexed over the surviving lines."""
    lines = [line for line in text.splitlines() if line.strip()]
    return [Segment(doc_id, i, line) for i, line in enumerate(lines)]


def _entity_doc(e: EntitySpan) -> dict:
    return {"id": e.id, "surface": e.surface, "concept": e.concept or UNSPECIFIED}


def practice_to_doc(p: ExtractedPractice) -> dict:
    return {
        "id": p.id,
        "kind": p.kind.value,
        "segment": _segment_doc(p.segment),
        "ordinal": p.ordinal,
        "action": p.action_surface,
        "party": _party_doc(p.party),
        "data": [_entity_doc(e) for e in p.data],
        "purposes": [_entity_doc(e) for e in p.purposes],
        "recipients": [_party_doc(r) for r in p.recipients],
        "choice": p.choice.value,
    }


def practice_from_doc(d: dict) -> ExtractedPractice:
    return ExtractedPractice(
        id=d["id"],
        kind=PracticeKind(d["kind"]),
        segment=_segment(d["segment"]),
        ordinal=d["ordinal"],
        action_surface=d["action"],
        party=_party(d["party"]),
        data=tuple(EntitySpan(e["id"], EntityKind.DATA, e["surface"], e["concept"]) for e in d["data"]),
        purposes=tuple(
            EntitySpan(e["id"], EntityKind.PURPOSE, e["surface"], e["concept"]) for e in d["purposes"]
        ),
        recipients=tuple(_party(r) for r in d["recipients"]),
        choice=Choice(d["choice"]),
    )


@dataclass(frozen=True)
class PracticeDump:
    doc_id: str
    segment_count: int
    practices: tuple[ExtractedPractice, ...] = ()


def serialize_dump(dump: PracticeDump) -> dict:
    practices = sorted(dump.practices, key=lambda p: (p.segment.segment_index, p.ordinal))
    return {
        "schema_version": SCHEMA_VERSION,
        "doc_id": dump.doc_id,
        "segment_count": dump.segment_count,
        "practices": [practice_to_doc(p) for p in practices],
    }


def parse_dump(doc: Any) -> PracticeDump:
    check_schema(doc, "practiceDump")
    practices = tuple(practice_from_doc(p) for p in doc["practices"])
    for p in practices:
        if p.segment.doc_id != doc["doc_id"]:
            raise ValueError(f"practice {p.id!r} belongs to document {p.segment.doc_id!r}")
        if p.party.kind is PartyKind.FIRST and p.party.name is not None:
            raise ValueError(f"practice {p.id!r}: first party must not carry a name")
    return PracticeDump(doc["doc_id"], doc["segment_count"], practices)
