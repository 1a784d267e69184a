"""Per-segment extraction: seven model tasks, output repair, practice assembly."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from ..model import Choice, Diagnostic, PartyKind, PartyRef
from ..vocab import UNSPECIFIED, ConceptHierarchy
from .backends import DECODING, TASKS, BackendError, AuthError, ModelBackend, call_with_retry
from .practices import (
    EntityKind,
    EntitySpan,
    ExtractedPractice,
    PracticeKind,
    RelationLink,
    Role,
    Segment,
    segment_document,
)
from .repair import repair_output

logger = logging.getLogger(__name__)

_KIND_ALIASES = {
    "collection-use": PracticeKind.COLLECTION_USE,
    "collectionuse": PracticeKind.COLLECTION_USE,
    "third-party-sharing-disclosure": PracticeKind.THIRD_PARTY_SHARING,
    "thirdpartysharingdisclosure": PracticeKind.THIRD_PARTY_SHARING,
}
_CHOICE_ALIASES = {
    "opt-in": Choice.OPT_IN,
    "optin": Choice.OPT_IN,
    "opt-out": Choice.OPT_OUT,
    "optout": Choice.OPT_OUT,
    "unconditional": Choice.UNCONDITIONAL,
    "": Choice.UNCONDITIONAL,
}
_PARTY_ALIASES = {
    "first-party": PartyKind.FIRST,
    "firstparty": PartyKind.FIRST,
    "third-party": PartyKind.THIRD,
    "thirdparty": PartyKind.THIRD,
}
_ROLE_KIND = {
    Role.DATA_OBJECT: EntityKind.DATA,
    Role.PURPOSE: EntityKind.PURPOSE,
    Role.ACTOR: EntityKind.PARTY,
    Role.RECIPIENT: EntityKind.PARTY,
}


class OutputShapeError(ValueError):
    pass


def load_templates(directory: str | Path | None = None) -> dict[str, str]:
    """Prompt templates keyed by task name (``<task>.txt`` files)."""
    if directory is None:
        base = resources.files("policylens").joinpath("data/prompts")
        return {t: base.joinpath(f"{t}.txt").read_text("utf-8") for t in TASKS}
    directory = Path(directory)
    return {t: (directory / f"{t}.txt").read_text(encoding="utf-8") for t in TASKS}


def render(template: str, segment: str, entities: str = "") -> str:
    return template.replace("{{segment}}", segment).replace("{{entities}}", entities)


def _canonical(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


@dataclass
class TaskRunner:
    """Sends one task for one segment and normalises the repaired reply."""

    backend: ModelBackend
    templates: Mapping[str, str] = field(default_factory=load_templates)
    attempts: int = 3
    backoff: float = 1.0
    sleep: Any = None

    def __call__(self, task: str, segment: Segment, context: Any = None) -> Any:
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        if task in ("DR", "PR", "Action", "Party"):
            input_text = segment.text
            entities = ""
        else:
            input_text = _canonical({"segment": segment.text, **context})
            entities = _canonical(context)
        instruction = render(self.templates[task], segment.text, entities)
        kwargs = {"attempts": self.attempts, "backoff": self.backoff}
        if self.sleep is not None:
            kwargs["sleep"] = self.sleep
        raw = call_with_retry(
            lambda: self.backend.complete(task, instruction, input_text, dict(DECODING)), **kwargs
        )
        parsed = repair_output(raw)
        if parsed is None:
            raise OutputShapeError(f"unrepairable {task} output: {raw[:80]!r}")
        return _NORMALISERS[task](parsed)


def run_task(
    backend: ModelBackend,
    task: str,
    segment: Segment,
    context: Any = None,
    *,
    templates: Mapping[str, str] | None = None,
    diagnostics: list[Diagnostic] | None = None,
    attempts: int = 3,
    backoff: float = 1.0,
    sleep=None,
) -> Any:
    """Run one task; on failure log a warning and return the task's empty result."""
    runner = TaskRunner(backend, templates or load_templates(), attempts, backoff, sleep)
    try:
        return runner(task, segment, context)
    except AuthError:
        raise
    except (BackendError, OutputShapeError) as exc:
        logger.warning("segment %s#%d task %s failed: %s", segment.doc_id, segment.index, task, exc)
        if diagnostics is not None:
            diagnostics.append(
                Diagnostic("error", "task-failed", f"{segment.doc_id}#s{segment.index}/{task}", str(exc))
            )
        return _EMPTY[task]()


# --------------------------------------------------------------------------
# output normalisation

def _items(parsed: Any, key: str) -> list:
    if isinstance(parsed, dict):
        parsed = parsed.get(key, [])
    if not isinstance(parsed, list):
        raise OutputShapeError(f"expected a list under {key!r}")
    return parsed


def _spans(parsed: Any) -> list[str]:
    out: list[str] = []
    for item in _items(parsed, "spans"):
        if isinstance(item, dict):
            item = item.get("span")
        if isinstance(item, str) and item.strip() and item not in out:
            out.append(item)
    return out


def _labels(parsed: Any) -> dict[str, str]:
    if isinstance(parsed, dict) and isinstance(parsed.get("labels"), dict):
        pairs = parsed["labels"].items()
    else:
        pairs = []
        for item in _items(parsed, "labels"):
            if isinstance(item, dict):
                pairs.append((item.get("span"), item.get("concept")))
    return {s: c for s, c in pairs if isinstance(s, str) and isinstance(c, str)}


def _practices(parsed: Any) -> list[dict]:
    out = []
    for item in _items(parsed, "practices"):
        if not isinstance(item, dict) or not isinstance(item.get("action"), str):
            continue
        kind = _KIND_ALIASES.get(str(item.get("kind", "")).strip().lower().replace("_", "-"))
        if kind is None:
            continue
        choice = _CHOICE_ALIASES.get(str(item.get("choice") or "").strip().lower(), Choice.UNCONDITIONAL)
        out.append({"action": item["action"], "kind": kind, "choice": choice})
    return out


def _parties(parsed: Any) -> list[tuple[str, PartyKind]]:
    out = []
    for item in _items(parsed, "parties"):
        if not isinstance(item, dict) or not isinstance(item.get("span"), str):
            continue
        kind = _PARTY_ALIASES.get(str(item.get("kind", "")).strip().lower().replace("_", "-"))
        if kind is not None and (item["span"], kind) not in out:
            out.append((item["span"], kind))
    return out


def _links(parsed: Any) -> list[tuple[str, str, str]]:
    out = []
    for item in _items(parsed, "links"):
        if isinstance(item, dict):
            triple = (item.get("practice"), item.get("entity"), item.get("role"))
            if all(isinstance(x, str) for x in triple) and triple not in out:
                out.append(triple)
    return out


_NORMALISERS = {
    "DR": _spans,
    "PR": _spans,
    "DC": _labels,
    "PC": _labels,
    "Action": _practices,
    "Party": _parties,
    "Relation": _links,
}
_EMPTY = {"DR": list, "PR": list, "DC": dict, "PC": dict, "Action": list, "Party": list, "Relation": list}


# --------------------------------------------------------------------------
# assembly

@dataclass
class SegmentResult:
    segment: Segment
    practices: list[ExtractedPractice]
    entities: list[EntitySpan]
    links: list[RelationLink]
    diagnostics: list[Diagnostic]

    @property
    def failed(self) -> bool:
        return any(d.code == "task-failed" for d in self.diagnostics)


@dataclass
class ExtractionResult:
    doc_id: str
    segment_count: int
    practices: list[ExtractedPractice]
    diagnostics: list[Diagnostic]
    failed_segments: list[int]
    segments: list[SegmentResult] = field(default_factory=list, repr=False)


def _ground(label: str | None, h: ConceptHierarchy) -> str:
    return label if label is not None and label in h else UNSPECIFIED


def extract_segment(runner: TaskRunner, h: ConceptHierarchy, segment: Segment) -> SegmentResult:
    diags: list[Diagnostic] = []
    loc = f"{segment.doc_id}#s{segment.index}"

    def run(task, context=None):
        try:
            return runner(task, segment, context)
        except AuthError:
            raise
        except (BackendError, OutputShapeError) as exc:
            logger.warning("%s task %s failed: %s", loc, task, exc)
            diags.append(Diagnostic("error", "task-failed", f"{loc}/{task}", str(exc)))
            return _EMPTY[task]()

    def verbatim(surfaces, task):
        kept = []
        for s in surfaces:
            if s in segment.text:
                kept.append(s)
            else:
                diags.append(
                    Diagnostic("warning", "span-not-in-segment", f"{loc}/{task}", f"dropped span {s!r}")
                )
        return kept

    def classify(surfaces, task, prefix, kind):
        labels = run(task, {"spans": surfaces}) if surfaces else {}
        spans = []
        for i, s in enumerate(surfaces):
            label = labels.get(s)
            concept = _ground(label, h)
            if label is not None and concept == UNSPECIFIED and label != UNSPECIFIED:
                diags.append(
                    Diagnostic("warning", "ungrounded-label", f"{loc}/{task}",
                               f"{label!r} for {s!r} is not in the vocabulary")
                )
            spans.append(EntitySpan(f"{prefix}{i}", kind, s, concept))
        return spans

    data = classify(verbatim(run("DR"), "DR"), "DC", "D", EntityKind.DATA)
    purposes = classify(verbatim(run("PR"), "PR"), "PC", "P", EntityKind.PURPOSE)
    actions = run("Action")
    actions = [a for a in actions if _keep_action(a, segment, diags, loc)]
    party_pairs = run("Party")
    kept_surfaces = set(verbatim([s for s, _ in party_pairs], "Party"))
    parties = [(s, k) for s, k in party_pairs if s in kept_surfaces]
    party_spans = [EntitySpan(f"T{i}", EntityKind.PARTY, s) for i, (s, _) in enumerate(parties)]
    party_kind = {f"T{i}": k for i, (_, k) in enumerate(parties)}
    practice_ids = [f"X{i}" for i in range(len(actions))]

    entities = data + purposes + party_spans
    links: list[RelationLink] = []
    if actions:
        context = {
            "entities": [{"id": e.id, "kind": e.kind.value, "surface": e.surface} for e in entities],
            "practices": [
                {"id": pid, "action": a["action"], "kind": a["kind"].value}
                for pid, a in zip(practice_ids, actions)
            ],
        }
        by_id = {e.id: e for e in entities}
        for pid, eid, role in run("Relation", context):
            try:
                role_enum = Role(role)
            except ValueError:
                role_enum = None
            entity = by_id.get(eid)
            if pid not in practice_ids or entity is None or role_enum is None or _ROLE_KIND[role_enum] != entity.kind:
                diags.append(
                    Diagnostic("warning", "bad-link", f"{loc}/Relation", f"dropped link {pid}-{eid}-{role}")
                )
                continue
            links.append(RelationLink(pid, eid, role_enum))

    practices = []
    by_id = {e.id: e for e in entities}
    for ordinal, (pid, action) in enumerate(zip(practice_ids, actions)):
        mine = [lk for lk in links if lk.practice_id == pid]
        linked = lambda role: [by_id[lk.entity_id] for lk in mine if lk.role is role]  # noqa: E731
        actor = PartyRef.first()
        for e in linked(Role.ACTOR):
            actor = _party_ref(e, party_kind)
            break
        recipients = []
        for e in linked(Role.RECIPIENT):
            ref = _party_ref(e, party_kind)
            if ref.kind is PartyKind.FIRST:
                diags.append(Diagnostic("warning", "first-party-recipient", f"{loc}/{pid}",
                                        f"ignored first-party recipient {e.surface!r}"))
            elif ref not in recipients:
                recipients.append(ref)
        kind = action["kind"]
        if kind is PracticeKind.COLLECTION_USE and recipients:
            diags.append(Diagnostic("warning", "recipient-on-collection", f"{loc}/{pid}",
                                    "collection-use practice cannot have recipients; dropped"))
            recipients = []
        if kind is PracticeKind.THIRD_PARTY_SHARING and not recipients:
            recipients = [PartyRef.third()]
        practices.append(
            ExtractedPractice(
                id=f"{segment.doc_id}#s{segment.index}#{ordinal}",
                kind=kind,
                segment=segment.ref,
                ordinal=ordinal,
                action_surface=action["action"],
                party=actor,
                data=tuple(linked(Role.DATA_OBJECT)),
                purposes=tuple(linked(Role.PURPOSE)),
                recipients=tuple(recipients),
                choice=action["choice"],
            )
        )
    return SegmentResult(segment, practices, entities, links, diags)


def _keep_action(action: dict, segment: Segment, diags: list, loc: str) -> bool:
    if action["action"] in segment.text:
        return True
    diags.append(Diagnostic("warning", "span-not-in-segment", f"{loc}/Action",
                            f"dropped action {action['action']!r}"))
    return False


def _party_ref(e: EntitySpan, kinds: Mapping[str, PartyKind]) -> PartyRef:
    if kinds[e.id] is PartyKind.FIRST:
        return PartyRef.first()
    return PartyRef.third(e.surface)


def extract_document(
    backend: ModelBackend,
    h: ConceptHierarchy,
    doc_id: str,
    text: str,
    *,
    workers: int = 1,
    templates: Mapping[str, str] | None = None,
    attempts: int = 3,
    backoff: float = 1.0,
    sleep=None,
) -> ExtractionResult:
    """Segment ``text`` and extract practices from every segment.

    Segments may run concurrently (``workers``); results are always ordered by
    segment index, then practice ordinal.
    """
    segments = segment_document(doc_id, text)
    runner = TaskRunner(backend, templates or load_templates(), attempts, backoff, sleep)
    if workers > 1 and len(segments) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: extract_segment(runner, h, s), segments))
    else:
        results = [extract_segment(runner, h, s) for s in segments]
    practices = [p for r in results for p in r.practices]
    diagnostics = [d for r in results for d in r.diagnostics]
    failed = [r.segment.index for r in results if r.failed]
    return ExtractionResult(doc_id, len(segments), practices, diagnostics, failed, results)
