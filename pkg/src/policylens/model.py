"""App policies, user profiles and their canonical JSON documents."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Union

from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .vocab import UNSPECIFIED, ConceptHierarchy, MatchMode

SCHEMA_VERSION = 1


class PartyKind(str, enum.Enum):
    FIRST = "FirstParty"
    THIRD = "ThirdParty"


class Choice(str, enum.Enum):
    OPT_IN = "OptIn"
    OPT_OUT = "OptOut"
    UNCONDITIONAL = "Unconditional"


class Effect(str, enum.Enum):
    PERMIT = "Permit"
    PROHIBIT = "Prohibit"


class ConsumerScope(str, enum.Enum):
    FIRST_PARTY_ONLY = "FirstPartyOnly"
    THIRD_PARTY_ONLY = "ThirdPartyOnly"
    ANY_PARTY = "AnyParty"


class Stance(str, enum.Enum):
    PERMIT_BY_DEFAULT = "PermitByDefault"
    PROHIBIT_BY_DEFAULT = "ProhibitByDefault"


#: Purpose scope that matches every purpose, ``unspecified`` included.
ANY = "Any"


@dataclass(frozen=True, order=True)
class SegmentRef:
    doc_id: str
    segment_index: int
    text: str


@dataclass(frozen=True)
class PartyRef:
    kind: PartyKind
    name: str | None = None

    @classmethod
    def first(cls) -> "PartyRef":
        return cls(PartyKind.FIRST)

    @classmethod
    def third(cls, name: str | None = None) -> "PartyRef":
        return cls(PartyKind.THIRD, name)

    def sort_key(self):
        return (self.kind.value, self.name or "")


@dataclass(frozen=True)
class Downstream:
    recipient: PartyRef
    purposes: tuple[str, ...]
    provenance: SegmentRef
    choice: Choice = Choice.UNCONDITIONAL

    def sort_key(self):
        return (
            self.provenance.segment_index,
            self.provenance.doc_id,
            self.recipient.sort_key(),
            self.purposes,
            self.choice.value,
            self.provenance.text,
        )


@dataclass(frozen=True)
class InputSpec:
    port: str
    data: tuple[str, ...]
    purposes: tuple[str, ...]
    provenance: SegmentRef
    downstreams: tuple[Downstream, ...] = ()


@dataclass(frozen=True)
class AppPolicy:
    app_id: str
    input_specs: tuple[InputSpec, ...] = ()
    #: Number of segments in the source document, when known.
    segment_count: int | None = None

    def canonical(self) -> "AppPolicy":
        specs = []
        for spec in sorted(self.input_specs, key=lambda s: s.port):
            downstreams = tuple(
                sorted(
                    (
                        Downstream(d.recipient, tuple(sorted(d.purposes)), d.provenance, d.choice)
                        for d in spec.downstreams
                    ),
                    key=Downstream.sort_key,
                )
            )
            specs.append(
                InputSpec(
                    spec.port,
                    tuple(sorted(spec.data)),
                    tuple(sorted(spec.purposes)),
                    spec.provenance,
                    downstreams,
                )
            )
        return AppPolicy(self.app_id, tuple(specs), self.segment_count)


@dataclass(frozen=True)
class Scope:
    concept: str
    mode: MatchMode = MatchMode.SUBTREE


@dataclass(frozen=True)
class Rule:
    effect: Effect
    purpose_scope: Union[Scope, str] = ANY
    consumer_scope: ConsumerScope = ConsumerScope.ANY_PARTY
    recipient_name_pattern: str | None = None


@dataclass(frozen=True)
class DataPolicy:
    policy_id: str
    data_scope: Scope
    default_stance: Stance = Stance.PERMIT_BY_DEFAULT
    rules: tuple[Rule, ...] = ()


@dataclass(frozen=True)
class UserProfile:
    profile_id: str
    policies: tuple[DataPolicy, ...] = ()
    description: str = ""


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    location: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {
            "severity": self.severity,
            "code": self.code,
            "location": self.location,
            "message": self.message,
        }


class PolicyError(ValueError):
    """A document failed schema or invariant validation."""

    def __init__(self, diagnostics: Iterable[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__(
            "; ".join(f"{d.location}: {d.message}" for d in self.diagnostics) or "invalid document"
        )


# --------------------------------------------------------------------------
# schema

@lru_cache(maxsize=1)
def schema() -> dict[str, Any]:
    """The versioned JSON schema shipped with the package."""
    text = resources.files("policylens").joinpath("data/schema.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(definition: str) -> Draft202012Validator:
    doc = dict(schema())
    doc["$ref"] = f"#/$defs/{definition}"
    return Draft202012Validator(doc)


def check_schema(doc: Any, definition: str) -> None:
    """Raise :class:`PolicyError` with a JSON-path location on the first violation."""
    error = best_match(_validator(definition).iter_errors(doc))
    if error is not None:
        raise PolicyError([Diagnostic("error", "schema", error.json_path, error.message)])


# --------------------------------------------------------------------------
# serialisation

def _segment_doc(ref: SegmentRef) -> dict:
    return {"doc_id": ref.doc_id, "segment_index": ref.segment_index, "text": ref.text}


def _party_doc(p: PartyRef) -> dict:
    return {"kind": p.kind.value, "name": p.name}


def _segment(d: dict) -> SegmentRef:
    return SegmentRef(d["doc_id"], d["segment_index"], d["text"])


def _party(d: dict) -> PartyRef:
    return PartyRef(PartyKind(d["kind"]), d.get("name"))


def serialize_app_policy(p: AppPolicy) -> dict:
    """Canonical document: specs sorted by port, concept lists sorted."""
    p = p.canonical()
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "app_id": p.app_id}
    if p.segment_count is not None:
        doc["segment_count"] = p.segment_count
    doc["input_specs"] = [
        {
            "port": s.port,
            "data": list(s.data),
            "purposes": list(s.purposes),
            "downstreams": [
                {
                    "recipient": _party_doc(d.recipient),
                    "purposes": list(d.purposes),
                    "choice": d.choice.value,
                    "provenance": _segment_doc(d.provenance),
                }
                for d in s.downstreams
            ],
            "provenance": _segment_doc(s.provenance),
        }
        for s in p.input_specs
    ]
    return doc


def parse_app_policy(doc: Any, hierarchy: ConceptHierarchy | None = None) -> AppPolicy:
    check_schema(doc, "appPolicy")
    specs = []
    for s in doc["input_specs"]:
        downstreams = tuple(
            Downstream(
                _party(d["recipient"]),
                tuple(d["purposes"]),
                _segment(d["provenance"]),
                Choice(d["choice"]),
            )
            for d in s["downstreams"]
        )
        specs.append(
            InputSpec(
                s["port"], tuple(s["data"]), tuple(s["purposes"]), _segment(s["provenance"]), downstreams
            )
        )
    policy = AppPolicy(doc["app_id"], tuple(specs), doc.get("segment_count"))
    _raise_errors(validate(policy, hierarchy))
    return policy


def _scope_doc(s: Scope) -> dict:
    return {"concept": s.concept, "mode": s.mode.value}


def _scope(d: dict) -> Scope:
    return Scope(d["concept"], MatchMode(d["mode"]))


def serialize_profile(prof: UserProfile) -> dict:
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "profile_id": prof.profile_id}
    if prof.description:
        doc["description"] = prof.description
    policies = []
    for dp in prof.policies:
        rules = []
        for r in dp.rules:
            rule: dict[str, Any] = {
                "effect": r.effect.value,
                "purpose_scope": ANY if r.purpose_scope == ANY else _scope_doc(r.purpose_scope),
                "consumer_scope": r.consumer_scope.value,
            }
            if r.recipient_name_pattern is not None:
                rule["recipient_name_pattern"] = r.recipient_name_pattern
            rules.append(rule)
        policies.append(
            {
                "policy_id": dp.policy_id,
                "data_scope": _scope_doc(dp.data_scope),
                "default_stance": dp.default_stance.value,
                "rules": rules,
            }
        )
    doc["policies"] = policies
    return doc


def parse_profile(doc: Any, hierarchy: ConceptHierarchy | None = None) -> UserProfile:
    check_schema(doc, "profile")
    policies = []
    for dp in doc["policies"]:
        rules = tuple(
            Rule(
                Effect(r["effect"]),
                ANY if r["purpose_scope"] == ANY else _scope(r["purpose_scope"]),
                ConsumerScope(r["consumer_scope"]),
                r.get("recipient_name_pattern"),
            )
            for r in dp["rules"]
        )
        policies.append(
            DataPolicy(dp["policy_id"], _scope(dp["data_scope"]), Stance(dp["default_stance"]), rules)
        )
    prof = UserProfile(doc["profile_id"], tuple(policies), doc.get("description", ""))
    _raise_errors(validate(prof, hierarchy))
    return prof


def _raise_errors(diags: list[Diagnostic]) -> None:
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise PolicyError(errors)


# --------------------------------------------------------------------------
# validation

def validate(p: AppPolicy | UserProfile, h: ConceptHierarchy | None = None) -> list[Diagnostic]:
    """Check invariants and (when ``h`` is given) concept resolution.

    Diagnostics are returned rather than raised; an empty list means valid.
    """
    if isinstance(p, AppPolicy):
        return _validate_app_policy(p, h)
    if isinstance(p, UserProfile):
        return _validate_profile(p, h)
    raise TypeError(f"cannot validate {type(p).__name__}")


def _unknown(h: ConceptHierarchy | None, concept: str, where: str) -> list[Diagnostic]:
    if h is None or concept == UNSPECIFIED or concept in h:
        return []
    return [Diagnostic("error", "unknown-concept", where, f"unknown concept {concept!r}")]


def _duplicates(values: Iterable[str]) -> list[str]:
    seen, dups = set(), []
    for v in values:
        if v in seen and v not in dups:
            dups.append(v)
        seen.add(v)
    return dups


def _validate_app_policy(p: AppPolicy, h: ConceptHierarchy | None) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for port in _duplicates(s.port for s in p.input_specs):
        out.append(Diagnostic("error", "duplicate-port", "$.input_specs", f"duplicate port {port!r}"))
    for i, spec in enumerate(p.input_specs):
        loc = f"$.input_specs[{i}]"
        if not spec.data:
            out.append(Diagnostic("error", "empty-data", f"{loc}.data", "data list is empty"))
        for field_name in ("data", "purposes"):
            values = getattr(spec, field_name)
            for c in _duplicates(values):
                out.append(
                    Diagnostic("error", "duplicate-concept", f"{loc}.{field_name}", f"{c!r} listed twice")
                )
            for j, c in enumerate(values):
                out += _unknown(h, c, f"{loc}.{field_name}[{j}]")
        for k, d in enumerate(spec.downstreams):
            dloc = f"{loc}.downstreams[{k}]"
            if d.recipient.kind is not PartyKind.THIRD:
                out.append(
                    Diagnostic("error", "first-party-downstream", f"{dloc}.recipient",
                               "downstream recipient must be a third party")
                )
            for c in _duplicates(d.purposes):
                out.append(Diagnostic("error", "duplicate-concept", f"{dloc}.purposes", f"{c!r} listed twice"))
            for j, c in enumerate(d.purposes):
                out += _unknown(h, c, f"{dloc}.purposes[{j}]")
    return out


def _validate_scope(h: ConceptHierarchy | None, scope: Scope, where: str) -> list[Diagnostic]:
    if scope.concept == UNSPECIFIED:
        return [Diagnostic("error", "unspecified-scope", where, "scopes must name a vocabulary concept")]
    return _unknown(h, scope.concept, where)


def _validate_profile(prof: UserProfile, h: ConceptHierarchy | None) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for pid in _duplicates(dp.policy_id for dp in prof.policies):
        out.append(Diagnostic("error", "duplicate-policy", "$.policies", f"duplicate policy id {pid!r}"))
    for i, dp in enumerate(prof.policies):
        loc = f"$.policies[{i}]"
        out += _validate_scope(h, dp.data_scope, f"{loc}.data_scope.concept")
        for j, rule in enumerate(dp.rules):
            rloc = f"{loc}.rules[{j}]"
            if rule.purpose_scope != ANY:
                out += _validate_scope(h, rule.purpose_scope, f"{rloc}.purpose_scope.concept")
            if (
                rule.recipient_name_pattern is not None
                and rule.consumer_scope is ConsumerScope.FIRST_PARTY_ONLY
            ):
                out.append(
                    Diagnostic("error", "pattern-without-third-party", f"{rloc}.recipient_name_pattern",
                               "recipient_name_pattern requires a scope that includes third parties")
                )
    return out


# --------------------------------------------------------------------------
# files

def dumps(doc: Any) -> str:
    """Deterministic JSON text used for every document the package writes."""
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def read_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_json(path: str | Path, doc: Any) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def load_app_policy(path: str | Path, hierarchy: ConceptHierarchy | None = None) -> AppPolicy:
    return parse_app_policy(read_json(path), hierarchy)


def load_profile(path: str | Path, hierarchy: ConceptHierarchy | None = None) -> UserProfile:
    return parse_profile(read_json(path), hierarchy)
