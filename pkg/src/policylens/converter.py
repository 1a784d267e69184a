"""Map extracted practices onto an app policy.

Collection-use practices become input specs. Each third-party sharing
practice becomes a downstream on every collection spec whose data overlaps the
shared data (subtree match in either direction); when nothing overlaps, a
spec is synthesised to carry it.
"""

from __future__ import annotations

from typing import Callable, Iterable

from .extraction.practices import ExtractedPractice, PracticeKind
from .model import AppPolicy, Diagnostic, Downstream, InputSpec
from .vocab import UNSPECIFIED, ConceptHierarchy

PortNamer = Callable[[str, int, int], str]


def default_port(doc_id: str, segment_index: int, ordinal: int) -> str:
    return f"{doc_id}#s{segment_index}#{ordinal}"


def _overlaps(h: ConceptHierarchy, a: str, b: str) -> bool:
    # ungrounded data never counts as "the same data"
    if a == UNSPECIFIED or b == UNSPECIFIED:
        return False
    return a == b or h.is_subconcept(a, b) or h.is_subconcept(b, a)


def convert(
    practices: Iterable[ExtractedPractice],
    app_id: str,
    h: ConceptHierarchy,
    *,
    segment_count: int | None = None,
    port_namer: PortNamer = default_port,
    diagnostics: list[Diagnostic] | None = None,
) -> AppPolicy:
    practices = sorted(practices, key=lambda p: (p.segment.segment_index, p.ordinal))
    diags = diagnostics if diagnostics is not None else []
    doc_ids = {p.segment.doc_id for p in practices}
    if len(doc_ids) > 1:
        raise ValueError(f"practices span several documents: {sorted(doc_ids)}")

    def data_of(p: ExtractedPractice) -> tuple[str, ...]:
        data = tuple(p.data_concepts)
        if not data:
            diags.append(Diagnostic("warning", "no-data", p.id, "practice names no data; using unspecified"))
            return (UNSPECIFIED,)
        return data

    collection: list[dict] = []
    for p in practices:
        if p.kind is PracticeKind.COLLECTION_USE:
            purposes = tuple(p.purpose_concepts)
            if UNSPECIFIED in purposes:
                diags.append(
                    Diagnostic("warning", "ungrounded-purpose", p.id,
                               "unrecognised purpose recorded as unspecified")
                )
            collection.append(
                {
                    "port": port_namer(p.segment.doc_id, p.segment.segment_index, p.ordinal),
                    "data": data_of(p),
                    "purposes": purposes,
                    "provenance": p.segment,
                    "downstreams": [],
                }
            )

    synthesised: list[dict] = []
    for p in practices:
        if p.kind is not PracticeKind.THIRD_PARTY_SHARING:
            continue
        shared = data_of(p)
        purposes = tuple(p.purpose_concepts) or (UNSPECIFIED,)
        downstreams = [Downstream(r, purposes, p.segment, p.choice) for r in p.recipients]
        targets = [
            spec for spec in collection
            if any(_overlaps(h, a, b) for a in spec["data"] for b in shared)
        ]
        if not targets:
            synthesised.append(
                {
                    "port": port_namer(p.segment.doc_id, p.segment.segment_index, p.ordinal),
                    "data": shared,
                    "purposes": (),
                    "provenance": p.segment,
                    "downstreams": downstreams,
                }
            )
        for spec in targets:
            spec["downstreams"].extend(downstreams)
        if targets:
            carried = {c for spec in targets for c in spec["data"]}
            for c in shared:
                if c not in carried:
                    diags.append(
                        Diagnostic("warning", "shared-data-merged", p.id,
                                   f"shared {c!r} recorded under overlapping specs' data")
                    )

    specs = tuple(
        InputSpec(s["port"], tuple(s["data"]), tuple(s["purposes"]), s["provenance"], tuple(s["downstreams"]))
        for s in collection + synthesised
    )
    return AppPolicy(app_id, specs, segment_count).canonical()
