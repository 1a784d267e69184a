"""Extraction scoring: relaxed longest-common-substring matching and F1 variants."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, NamedTuple

from ._kernels import encode, lcs_length
from .extraction.practices import parse_dump
from .model import PartyKind

RELAXED_THRESHOLD = 0.9

SPAN_TASKS = ("DR", "PR", "Action", "Party")
EXACT_TASKS = ("DC", "PC", "Relation")


def lcs_ratio(a: str, b: str) -> float:
    """Longest common substring length over the longer string's length.

    Two empty strings are identical, so their ratio is 1.0.
    """
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return lcs_length(encode(a), encode(b)) / longest


class F1(NamedTuple):
    precision: float
    recall: float
    f1: float
    tp: float
    fp: float
    fn: float


def _f1_from_counts(tp: float, n_gold: int, n_pred: int) -> F1:
    if n_gold == 0 and n_pred == 0:
        return F1(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return F1(precision, recall, f1, tp, n_pred - tp, n_gold - tp)


def relaxed_matches(gold: Iterable[str], pred: Iterable[str], threshold: float = RELAXED_THRESHOLD):
    """Greedy one-to-one pairing by descending ratio; yields ``(gold, pred, ratio)``.

    Ties are broken by the strings themselves so the result is independent of
    input order.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    gold, pred = sorted(set(gold)), sorted(set(pred))
    pairs = []
    for g in gold:
        for p in pred:
            r = 1.0 if g == p else lcs_ratio(g, p)
            if r >= threshold:
                pairs.append((-r, g, p))
    pairs.sort()
    used_g, used_p = set(), set()
    for neg_r, g, p in pairs:
        if g in used_g or p in used_p:
            continue
        used_g.add(g)
        used_p.add(p)
        yield g, p, -neg_r


def relaxed_f1(gold: Iterable[str], pred: Iterable[str], threshold: float = RELAXED_THRESHOLD) -> F1:
    """F1 where a matched pair earns its lcs ratio as fractional true-positive credit."""
    gold, pred = set(gold), set(pred)
    tp = sum(r for _, _, r in relaxed_matches(gold, pred, threshold))
    return _f1_from_counts(tp, len(gold), len(pred))


def exact_f1(gold: Iterable[Hashable], pred: Iterable[Hashable]) -> F1:
    gold, pred = set(gold), set(pred)
    return _f1_from_counts(float(len(gold & pred)), len(gold), len(pred))


def binary_f1(tp: int, fp: int, fn: int) -> float:
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


@dataclass(frozen=True)
class TaskScore:
    task: str
    f1_nonempty: float
    f1_empty: float
    f1_macro: float
    tp: float
    fp: float
    fn: float


def score_task(
    gold_segments: Mapping[str, Iterable],
    pred_segments: Mapping[str, Iterable],
    task: str,
    threshold: float = RELAXED_THRESHOLD,
) -> TaskScore:
    """Score one task over a segment-keyed gold/prediction pair.

    ``f1_nonempty`` micro-averages matching credit over segments whose gold
    is non-empty; ``f1_empty`` treats "segment has no targets" as the positive
    class over all segments; ``f1_macro`` is their mean.
    """
    if set(gold_segments) != set(pred_segments):
        missing = sorted(set(gold_segments) ^ set(pred_segments))
        raise ValueError(f"gold and prediction segment ids differ: {missing[:5]}")
    if task not in SPAN_TASKS + EXACT_TASKS:
        raise ValueError(f"unknown task {task!r}")
    tp = 0.0
    n_gold = n_pred = 0
    e_tp = e_fp = e_fn = 0
    for seg in sorted(gold_segments):
        gold = set(gold_segments[seg])
        pred = set(pred_segments[seg])
        gold_empty, pred_empty = not gold, not pred
        if gold_empty and pred_empty:
            e_tp += 1
        elif pred_empty:
            e_fp += 1
        elif gold_empty:
            e_fn += 1
        if gold_empty:
            continue
        if task in SPAN_TASKS:
            r = relaxed_f1(gold, pred, threshold)
        else:
            r = exact_f1(gold, pred)
        tp += r.tp
        n_gold += len(gold)
        n_pred += len(pred)
    nonempty = _f1_from_counts(tp, n_gold, n_pred)
    f1_empty = binary_f1(e_tp, e_fp, e_fn)
    return TaskScore(
        task=task,
        f1_nonempty=nonempty.f1,
        f1_empty=f1_empty,
        f1_macro=(nonempty.f1 + f1_empty) / 2,
        tp=nonempty.tp,
        fp=nonempty.fp,
        fn=nonempty.fn,
    )


def items_from_dump(dump) -> dict[str, dict[str, list]]:
    """Per-segment task items derived from a practice dump.

    Lets a gold annotation and a prediction, both in practice-dump form, be
    scored with :func:`score_task`. Segment keys are ``<doc_id>#<index>``.
    """
    out: dict[str, dict[str, list]] = {
        f"{dump.doc_id}#{i}": {t: [] for t in SPAN_TASKS + EXACT_TASKS} for i in range(dump.segment_count)
    }

    def add(items: list, value) -> None:
        if value not in items:
            items.append(value)

    for p in dump.practices:
        seg = out.setdefault(f"{dump.doc_id}#{p.segment.segment_index}", {t: [] for t in SPAN_TASKS + EXACT_TASKS})
        add(seg["Action"], p.action_surface)
        for e in p.data:
            add(seg["DR"], e.surface)
            add(seg["DC"], e.concept)
            add(seg["Relation"], (p.action_surface, e.surface, "DataObject"))
        for e in p.purposes:
            add(seg["PR"], e.surface)
            add(seg["PC"], e.concept)
            add(seg["Relation"], (p.action_surface, e.surface, "Purpose"))
        for party, role in [(p.party, "Actor")] + [(r, "Recipient") for r in p.recipients]:
            if party.kind is PartyKind.THIRD and party.name:
                add(seg["Party"], party.name)
                add(seg["Relation"], (p.action_surface, party.name, role))
    return out


def items_from_document(doc: dict) -> dict[str, dict[str, list]]:
    """Accept either a practice dump or ``{"segments": {id: {task: [...]}}}``."""
    if "practices" in doc:
        return items_from_dump(parse_dump(doc))
    segments = doc.get("segments")
    if not isinstance(segments, dict):
        raise ValueError("evaluation document needs a 'segments' mapping or a practice dump")
    out = {}
    for seg_id, tasks in segments.items():
        out[seg_id] = {
            t: [tuple(x) if isinstance(x, list) else x for x in tasks.get(t, [])]
            for t in SPAN_TASKS + EXACT_TASKS
        }
    return out


def score_documents(gold: dict, pred: dict, tasks=SPAN_TASKS + EXACT_TASKS,
                    threshold: float = RELAXED_THRESHOLD) -> list[TaskScore]:
    g, p = items_from_document(gold), items_from_document(pred)
    return [
        score_task({k: v[t] for k, v in g.items()}, {k: v[t] for k, v in p.items()}, t, threshold)
        for t in tasks
    ]
