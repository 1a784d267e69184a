"""Corpus-level statistics over conflict reports.

Symbols follow the usual audit vocabulary: for a website ``w``, ``n_pp`` is
its number of policy segments, ``n_cs`` the number of segments that trigger
at least one conflict (across all profiles), ``n_con`` the number of
conflicts, and ``n_pr[p]`` the number of conflicting practices for profile
``p``. Websites are grouped by how many profiles they violate.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Mapping

from .model import SCHEMA_VERSION
from .reasoner import ConflictReport


def reduction_rate(segments_total: int, segments_conflicting: int) -> float:
    """Share of segments a reader can skip by reading only conflicting ones."""
    if segments_total == 0:
        return 1.0
    return 1.0 - segments_conflicting / segments_total


@dataclass(frozen=True)
class ProfileCounts:
    conflicts: int
    practices: int
    segments: int


@dataclass(frozen=True)
class WebsiteStats:
    app_id: str
    n_pp: int
    n_with_practices: int
    conflicting_segments: frozenset
    profiles: Mapping[str, ProfileCounts]

    @property
    def n_cs(self) -> int:
        return len(self.conflicting_segments)

    @property
    def n_con(self) -> int:
        return sum(c.conflicts for c in self.profiles.values())

    @property
    def violated_profiles(self) -> frozenset[str]:
        return frozenset(p for p, c in self.profiles.items() if c.conflicts > 0)

    @property
    def violation_group(self) -> int:
        return len(self.violated_profiles)

    @property
    def practices_per_conflict(self) -> float | None:
        """Sum of per-profile conflicting practices divided by ``n_con``."""
        if self.n_con == 0:
            return None
        return sum(c.practices for c in self.profiles.values()) / self.n_con

    @property
    def practices_per_violated_profile(self) -> float | None:
        """Same numerator, divided by the number of violated profiles instead."""
        if self.violation_group == 0:
            return None
        return sum(c.practices for c in self.profiles.values()) / self.violation_group

    def merged(self, other: "WebsiteStats") -> "WebsiteStats":
        overlap = set(self.profiles) & set(other.profiles)
        if overlap:
            raise ValueError(f"duplicate report for ({self.app_id}, {sorted(overlap)[0]})")
        if self.n_pp != other.n_pp or self.n_with_practices != other.n_with_practices:
            raise ValueError(f"inconsistent segment counts across reports for {self.app_id}")
        return WebsiteStats(
            self.app_id,
            self.n_pp,
            self.n_with_practices,
            self.conflicting_segments | other.conflicting_segments,
            {**self.profiles, **other.profiles},
        )


@dataclass(frozen=True)
class GroupStats:
    vg: int
    websites: tuple[str, ...]
    r_pp: float | None
    r_cs: float | None
    r_pp_normalized: float | None


@dataclass(frozen=True)
class Totals:
    segments_total: int = 0
    segments_with_practices: int = 0
    segments_conflicting: int = 0
    conflicts_total: int = 0


@dataclass(frozen=True)
class AuditSummary:
    websites: Mapping[str, WebsiteStats] = field(default_factory=dict)

    @property
    def groups(self) -> list[GroupStats]:
        by_vg: dict[int, list[WebsiteStats]] = {}
        for w in self.websites.values():
            by_vg.setdefault(w.violation_group, []).append(w)
        out = []
        for vg in sorted(by_vg):
            members = sorted(by_vg[vg], key=lambda w: w.app_id)
            pp = [w.n_con / w.n_pp for w in members if w.n_pp > 0]
            cs = [w.n_con / w.n_cs for w in members if w.n_cs > 0]
            r_pp = fmean(pp) if pp else None
            out.append(
                GroupStats(
                    vg=vg,
                    websites=tuple(w.app_id for w in members),
                    r_pp=r_pp,
                    r_cs=fmean(cs) if cs else None,
                    r_pp_normalized=r_pp / vg if vg >= 1 and r_pp is not None else None,
                )
            )
        return out

    @property
    def totals(self) -> Totals:
        ws = self.websites.values()
        return Totals(
            segments_total=sum(w.n_pp for w in ws),
            segments_with_practices=sum(w.n_with_practices for w in ws),
            segments_conflicting=sum(w.n_cs for w in ws),
            conflicts_total=sum(w.n_con for w in ws),
        )

    @property
    def reduction_rate(self) -> float:
        t = self.totals
        return reduction_rate(t.segments_total, t.segments_conflicting)

    @property
    def profile_ids(self) -> list[str]:
        return sorted({p for w in self.websites.values() for p in w.profiles})

    def profile_stats(self) -> dict[str, dict]:
        """Per profile: websites in conflict and mean conflicting segments among them."""
        out = {}
        for pid in self.profile_ids:
            hit = [w.profiles[pid] for w in self.websites.values() if pid in w.profiles and w.profiles[pid].conflicts]
            out[pid] = {
                "websites_conflicting": len(hit),
                "conflicts": sum(c.conflicts for c in hit),
                "mean_conflicting_segments": fmean(c.segments for c in hit) if hit else 0.0,
                "mean_conflicting_practices": fmean(c.practices for c in hit) if hit else 0.0,
            }
        return out


def _website_from_report(r: ConflictReport) -> WebsiteStats:
    segments = {(c.usage.provenance.doc_id, c.usage.provenance.segment_index) for c in r.conflicts}
    practices = {(c.usage.spec_port, c.usage.downstream_index) for c in r.conflicts}
    counts = ProfileCounts(len(r.conflicts), len(practices), len(segments))
    if r.counts.conflicts_total != len(r.conflicts):
        raise ValueError(f"report {r.app_id}/{r.profile_id}: conflicts_total disagrees with conflict list")
    return WebsiteStats(
        r.app_id, r.counts.segments_total, r.counts.segments_with_practices, frozenset(segments), {r.profile_id: counts}
    )


def merge_summaries(a: AuditSummary, b: AuditSummary) -> AuditSummary:
    websites = dict(a.websites)
    for app_id, w in b.websites.items():
        websites[app_id] = websites[app_id].merged(w) if app_id in websites else w
    return AuditSummary(dict(sorted(websites.items())))


def audit(reports: Iterable[ConflictReport]) -> AuditSummary:
    """Aggregate reports; each (app, profile) pair must appear exactly once."""
    summary = AuditSummary({})
    for r in reports:
        summary = merge_summaries(summary, AuditSummary({r.app_id: _website_from_report(r)}))
    return summary


# --------------------------------------------------------------------------
# output

def serialize_summary(s: AuditSummary) -> dict:
    t = s.totals
    return {
        "schema_version": SCHEMA_VERSION,
        "totals": {
            "segments_total": t.segments_total,
            "segments_with_practices": t.segments_with_practices,
            "segments_conflicting": t.segments_conflicting,
            "conflicts_total": t.conflicts_total,
        },
        "reduction_rate": s.reduction_rate,
        "groups": [
            {
                "vg": g.vg,
                "websites": list(g.websites),
                "r_pp": g.r_pp,
                "r_cs": g.r_cs,
                "r_pp_normalized": g.r_pp_normalized,
            }
            for g in s.groups
        ],
        "websites": [
            {
                "app_id": w.app_id,
                "n_pp": w.n_pp,
                "n_with_practices": w.n_with_practices,
                "n_cs": w.n_cs,
                "n_con": w.n_con,
                "vg": w.violation_group,
                "violated_profiles": sorted(w.violated_profiles),
                "practices_per_conflict": w.practices_per_conflict,
                "practices_per_violated_profile": w.practices_per_violated_profile,
                "n_pr": {p: w.profiles[p].practices for p in sorted(w.profiles)},
            }
            for w in s.websites.values()
        ],
        "profiles": s.profile_stats(),
    }


def table_csv(s: AuditSummary) -> str:
    """One row per website, one ``n_pr:<profile>`` column per profile."""
    profiles = s.profile_ids
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["app_id", "n_pp", "n_cs", "n_con", "vg", "practices_per_conflict", "practices_per_violated_profile"]
        + [f"n_pr:{p}" for p in profiles]
    )
    for w in s.websites.values():
        writer.writerow(
            [w.app_id, w.n_pp, w.n_cs, w.n_con, w.violation_group,
             _fmt(w.practices_per_conflict), _fmt(w.practices_per_violated_profile)]
            + [w.profiles[p].practices if p in w.profiles else "" for p in profiles]
        )
    return buf.getvalue()


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(round(x, 12))
