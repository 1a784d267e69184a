"""The bundled user-profile pack and helpers to load profile directories.

The pack crosses seven data types, six purposes and two consumer settings
(first party only, first and third party). ``data-ad-3rd-no`` and
``location-3rd-no`` have fixed, tested semantics; the others fill out the same
factor grid, with eight location profiles.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Iterable

from .model import (
    ANY,
    ConsumerScope,
    DataPolicy,
    Effect,
    PolicyError,
    Rule,
    Scope,
    Stance,
    UserProfile,
    load_profile,
    serialize_profile,
    write_json,
)
from .vocab import ConceptHierarchy, MatchMode

DATA_TYPES = {
    "data": "dpv:Data-general",
    "social": "dpv:SocialCommunication",
    "contact": "dpv:Contact",
    "health": "dpv:MedicalHealth",
    "identifying": "dpv:Identifying",
    "location": "dpv:Location",
    "picture": "dpv:Picture",
}
PURPOSES = {
    "internal": "dpv:Internal",
    "ad": "dpv:Advertisement",
    "analytics": "dpv:Analytics",
    "research": "dpv:Research",
    "sns": "dpv:SNS",
    "security": "dpv:ProtectionOfPublicSecurity",
}

_SUBTREE = MatchMode.SUBTREE
_THIRD = ConsumerScope.THIRD_PARTY_ONLY
_ANYONE = ConsumerScope.ANY_PARTY
_FIRST = ConsumerScope.FIRST_PARTY_ONLY


def _prohibit(purpose: str | None, consumers: ConsumerScope) -> Rule:
    scope = ANY if purpose is None else Scope(PURPOSES[purpose], _SUBTREE)
    return Rule(Effect.PROHIBIT, scope, consumers)


def _permit(purpose: str, consumers: ConsumerScope) -> Rule:
    return Rule(Effect.PERMIT, Scope(PURPOSES[purpose], _SUBTREE), consumers)


def _profile(profile_id: str, data: str, description: str, rules: Iterable[Rule],
             stance: Stance = Stance.PERMIT_BY_DEFAULT) -> UserProfile:
    policy = DataPolicy(f"{profile_id}/{data}", Scope(DATA_TYPES[data], _SUBTREE), stance, tuple(rules))
    return UserProfile(profile_id, (policy,), description)


def build_profile_pack() -> list[UserProfile]:
    """All 23 profiles, sorted by id."""
    allow_only = Stance.PROHIBIT_BY_DEFAULT
    pack = [
        # location: eight profiles
        _profile("location-3rd-no", "location",
                 "Location data must not reach third parties, whatever the purpose.",
                 [_prohibit(None, _THIRD)]),
        _profile("location-ad-no", "location",
                 "Location data must not be used for advertising by anyone.",
                 [_prohibit("ad", _ANYONE)]),
        _profile("location-ad-3rd-no", "location",
                 "Third parties must not use location data for advertising.",
                 [_prohibit("ad", _THIRD)]),
        _profile("location-analytics-3rd-no", "location",
                 "Third parties must not use location data for analytics.",
                 [_prohibit("analytics", _THIRD)]),
        _profile("location-research-3rd-no", "location",
                 "Third parties must not use location data for research.",
                 [_prohibit("research", _THIRD)]),
        _profile("location-sns-no", "location",
                 "Location data must not be used for social networking features.",
                 [_prohibit("sns", _ANYONE)]),
        _profile("location-internal-only", "location",
                 "Location data only for the platform's own internal operations.",
                 [_permit("internal", _FIRST)], allow_only),
        _profile("location-security-only", "location",
                 "Location data only for protecting public security, by anyone.",
                 [_permit("security", _ANYONE)], allow_only),
        # data in general
        _profile("data-ad-3rd-no", "data",
                 "No personal data may go to third parties for advertising.",
                 [_prohibit("ad", _THIRD)]),
        _profile("data-analytics-3rd-no", "data",
                 "No personal data may go to third parties for analytics.",
                 [_prohibit("analytics", _THIRD)]),
        _profile("data-research-3rd-no", "data",
                 "No personal data may go to third parties for research.",
                 [_prohibit("research", _THIRD)]),
        # contact
        _profile("contact-3rd-no", "contact",
                 "Contact data must not reach third parties.",
                 [_prohibit(None, _THIRD)]),
        _profile("contact-ad-no", "contact",
                 "Contact data must not be used for advertising.",
                 [_prohibit("ad", _ANYONE)]),
        _profile("contact-sns-3rd-no", "contact",
                 "Third parties must not use contact data for social networking.",
                 [_prohibit("sns", _THIRD)]),
        # health
        _profile("health-3rd-no", "health",
                 "Medical and health data must not reach third parties.",
                 [_prohibit(None, _THIRD)]),
        _profile("health-ad-no", "health",
                 "Medical and health data must not be used for advertising.",
                 [_prohibit("ad", _ANYONE)]),
        _profile("health-research-internal-only", "health",
                 "Health data only for internal operations or research.",
                 [_permit("internal", _FIRST), _permit("research", _ANYONE)], allow_only),
        # identifying
        _profile("identifying-3rd-no", "identifying",
                 "Identifying data must not reach third parties.",
                 [_prohibit(None, _THIRD)]),
        _profile("identifying-ad-no", "identifying",
                 "Identifying data must not be used for advertising.",
                 [_prohibit("ad", _ANYONE)]),
        # social / communication
        _profile("social-3rd-no", "social",
                 "Social and communication data must not reach third parties.",
                 [_prohibit(None, _THIRD)]),
        _profile("social-ad-no", "social",
                 "Social and communication data must not be used for advertising.",
                 [_prohibit("ad", _ANYONE)]),
        # pictures
        _profile("picture-3rd-no", "picture",
                 "Pictures must not reach third parties.",
                 [_prohibit(None, _THIRD)]),
        _profile("picture-sns-internal-only", "picture",
                 "Pictures only for social networking features and internal operations.",
                 [_permit("sns", _ANYONE), _permit("internal", _FIRST)], allow_only),
    ]
    return sorted(pack, key=lambda p: p.profile_id)


def default_pack_dir():
    return resources.files("policylens").joinpath("data/profiles")


def write_profile_pack(directory: str | Path, profiles: Iterable[UserProfile] | None = None) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for prof in profiles if profiles is not None else build_profile_pack():
        path = directory / f"{prof.profile_id}.json"
        write_json(path, serialize_profile(prof))
        paths.append(path)
    return paths


def load_profile_pack(directory=None, hierarchy: ConceptHierarchy | None = None) -> list[UserProfile]:
    """Every ``*.json`` profile in ``directory`` (default: bundled pack), sorted by id."""
    directory = default_pack_dir() if directory is None else Path(directory)
    profiles = []
    for entry in sorted(directory.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            try:
                profiles.append(load_profile(entry, hierarchy))
            except PolicyError as exc:
                raise PolicyError(
                    [type(d)(d.severity, d.code, f"{entry.name}:{d.location}", d.message) for d in exc.diagnostics]
                ) from None
    ids = [p.profile_id for p in profiles]
    dups = sorted({i for i in ids if ids.count(i) > 1})
    if dups:
        raise ValueError(f"duplicate profile id(s) in pack: {', '.join(dups)}")
    return sorted(profiles, key=lambda p: p.profile_id)
