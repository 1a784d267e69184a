"""Concept vocabulary: a subclass-of DAG with exact and subtree matching."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import _kernels

__all__ = [
    "UNSPECIFIED",
    "ConceptNode",
    "ConceptHierarchy",
    "MatchMode",
    "VocabularyError",
    "UnknownConceptError",
    "load_vocabulary",
    "load_default_vocabulary",
    "parse_vocabulary",
    "serialize_vocabulary",
    "check_concept_id",
    "is_subconcept",
    "match_concept",
    "extend",
]

#: Sentinel for data or purposes the pipeline could not ground. Lives outside
#: every hierarchy.
UNSPECIFIED = "unspecified"


class VocabularyError(ValueError):
    """Malformed vocabulary: duplicate id, dangling parent or cycle."""

    def __init__(self, message: str, ids: Iterable[str] = ()):
        super().__init__(message)
        self.ids = tuple(ids)


class UnknownConceptError(KeyError):
    def __init__(self, concept: str):
        super().__init__(concept)
        self.concept = concept

    def __str__(self) -> str:
        return f"unknown concept {self.concept!r}"


class MatchMode(str, enum.Enum):
    EXACT = "Exact"
    SUBTREE = "Subtree"


def check_concept_id(value: str) -> str:
    if not isinstance(value, str) or not value or any(c.isspace() for c in value):
        raise VocabularyError(f"invalid concept id {value!r}", [str(value)])
    return value


@dataclass(frozen=True)
class ConceptNode:
    id: str
    label: str = ""
    parents: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        check_concept_id(self.id)
        object.__setattr__(self, "parents", frozenset(self.parents))


class ConceptHierarchy:
    """Immutable concept DAG.

    Reachability is precomputed as a boolean closure matrix, so
    :meth:`is_subconcept` is a constant-time lookup.
    """

    def __init__(self, nodes: Iterable[ConceptNode] = ()):
        table: dict[str, ConceptNode] = {}
        for node in nodes:
            if node.id in table:
                raise VocabularyError(f"duplicate concept id {node.id!r}", [node.id])
            table[node.id] = node
        for node in table.values():
            missing = sorted(p for p in node.parents if p not in table)
            if missing:
                raise VocabularyError(
                    f"concept {node.id!r} has undeclared parent(s) {', '.join(missing)}",
                    [node.id, *missing],
                )
        cycle = _find_cycle(table)
        if cycle:
            raise VocabularyError(
                "subclass cycle detected: " + " -> ".join(cycle + [cycle[0]]), cycle
            )
        self._nodes: Mapping[str, ConceptNode] = dict(sorted(table.items()))
        self._index = {cid: i for i, cid in enumerate(self._nodes)}
        n = len(self._index)
        adj = np.zeros((n, n), dtype=np.bool_)
        for cid, node in self._nodes.items():
            for p in node.parents:
                adj[self._index[cid], self._index[p]] = True
        self._reach = _kernels.transitive_closure(adj) if n else adj
        self._reach.setflags(write=False)
        kids: dict[str, set[str]] = {cid: set() for cid in self._nodes}
        for cid, node in self._nodes.items():
            for p in node.parents:
                kids[p].add(cid)
        self._children = {k: frozenset(v) for k, v in kids.items()}

    # mapping-ish access
    def __contains__(self, concept: object) -> bool:
        return concept in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self):
        return iter(self._nodes)

    def __getitem__(self, concept: str) -> ConceptNode:
        try:
            return self._nodes[concept]
        except KeyError:
            raise UnknownConceptError(concept) from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConceptHierarchy):
            return NotImplemented
        return dict(self._nodes) == dict(other._nodes)

    def __repr__(self) -> str:
        return f"ConceptHierarchy({len(self)} concepts)"

    @property
    def nodes(self) -> Mapping[str, ConceptNode]:
        return dict(self._nodes)

    @property
    def roots(self) -> frozenset[str]:
        return frozenset(cid for cid, node in self._nodes.items() if not node.parents)

    def children(self, concept: str) -> frozenset[str]:
        self[concept]
        return self._children[concept]

    def is_leaf(self, concept: str) -> bool:
        return not self.children(concept)

    def ancestors(self, concept: str) -> frozenset[str]:
        """All concepts reachable from ``concept`` via parent edges, itself included."""
        i = self._idx(concept)
        ids = list(self._nodes)
        return frozenset(ids[j] for j in np.flatnonzero(self._reach[i]))

    def descendants(self, concept: str) -> frozenset[str]:
        """``concept`` and every transitive subconcept."""
        j = self._idx(concept)
        ids = list(self._nodes)
        return frozenset(ids[i] for i in np.flatnonzero(self._reach[:, j]))

    def _idx(self, concept: str) -> int:
        try:
            return self._index[concept]
        except KeyError:
            raise UnknownConceptError(concept) from None

    def is_subconcept(self, a: str, b: str) -> bool:
        """True iff ``a == b`` or ``b`` is reachable from ``a`` via parent edges."""
        return bool(self._reach[self._idx(a), self._idx(b)])

    def match(self, candidate: str, target: str, mode: MatchMode) -> bool:
        mode = MatchMode(mode)
        if mode is MatchMode.EXACT:
            self._idx(candidate)
            self._idx(target)
            return candidate == target
        return self.is_subconcept(candidate, target)

    def extend(
        self,
        additions: Iterable[tuple[str, str]] = (),
        new_nodes: Iterable[ConceptNode] = (),
    ) -> "ConceptHierarchy":
        """Return a new hierarchy with extra nodes and ``(child, parent)`` edges.

        The receiver is left untouched.
        """
        table = dict(self._nodes)
        for node in new_nodes:
            if node.id in table:
                raise VocabularyError(f"duplicate concept id {node.id!r}", [node.id])
            table[node.id] = node
        extra: dict[str, set[str]] = {}
        for child, parent in additions:
            if child not in table:
                raise VocabularyError(f"edge from undeclared concept {child!r}", [child])
            if parent not in table:
                raise VocabularyError(f"edge to undeclared parent {parent!r}", [child, parent])
            extra.setdefault(child, set()).add(parent)
        for child, parents in extra.items():
            node = table[child]
            table[child] = ConceptNode(node.id, node.label, node.parents | parents)
        return ConceptHierarchy(table.values())


def is_subconcept(h: ConceptHierarchy, a: str, b: str) -> bool:
    return h.is_subconcept(a, b)


def match_concept(h: ConceptHierarchy, candidate: str, target: str, mode: MatchMode) -> bool:
    return h.match(candidate, target, mode)


def extend(h: ConceptHierarchy, additions=(), new_nodes=()) -> ConceptHierarchy:
    return h.extend(additions, new_nodes)


def _find_cycle(table: Mapping[str, ConceptNode]) -> list[str]:
    # iterative DFS with colouring; returns the ids on the first cycle found
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(table, WHITE)
    for start in sorted(table):
        if colour[start] != WHITE:
            continue
        stack = [(start, iter(sorted(table[start].parents)))]
        path = [start]
        colour[start] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = BLACK
                stack.pop()
                path.pop()
            elif colour[nxt] == GREY:
                return path[path.index(nxt):]
            elif colour[nxt] == WHITE:
                colour[nxt] = GREY
                stack.append((nxt, iter(sorted(table[nxt].parents))))
                path.append(nxt)
    return []


def parse_vocabulary(text: str) -> ConceptHierarchy:
    """Parse the tab-separated vocabulary format.

    One record per line: ``id<TAB>label<TAB>parent1,parent2``. Blank lines and
    lines starting with ``#`` are skipped.
    """
    nodes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        cols = raw.split("\t")
        if len(cols) > 3:
            raise VocabularyError(f"line {lineno}: expected at most 3 tab-separated fields")
        cols += [""] * (3 - len(cols))
        cid, label, parents = (c.strip() for c in cols)
        parent_ids = [p.strip() for p in parents.split(",") if p.strip()]
        try:
            nodes.append(ConceptNode(cid, label, frozenset(parent_ids)))
        except VocabularyError as exc:
            raise VocabularyError(f"line {lineno}: {exc}", exc.ids) from None
    return ConceptHierarchy(nodes)


def serialize_vocabulary(h: ConceptHierarchy) -> str:
    lines = []
    for cid, node in h.nodes.items():
        lines.append(f"{cid}\t{node.label}\t{','.join(sorted(node.parents))}")
    return "".join(line + "\n" for line in lines)


def load_vocabulary(path: str | Path) -> ConceptHierarchy:
    return parse_vocabulary(Path(path).read_text(encoding="utf-8"))


def load_default_vocabulary() -> ConceptHierarchy:
    """The shipped DPV-style subset used by the bundled profile pack."""
    text = resources.files("policylens").joinpath("data/vocabulary.tsv").read_text("utf-8")
    return parse_vocabulary(text)
