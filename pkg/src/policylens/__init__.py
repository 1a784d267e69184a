"""Privacy-policy compliance analysis.

Policy text is turned into formal app policies through a pluggable model
backend, then checked against user profiles by a deterministic,
hierarchy-aware reasoner.
"""

from .audit import AuditSummary, reduction_rate
from .converter import convert
from .metrics import lcs_ratio, relaxed_f1, score_task
from .model import (
    AppPolicy,
    DataPolicy,
    Diagnostic,
    Downstream,
    InputSpec,
    PartyRef,
    PolicyError,
    Rule,
    Scope,
    SegmentRef,
    UserProfile,
    parse_app_policy,
    parse_profile,
    serialize_app_policy,
    serialize_profile,
    validate,
)
from .reasoner import ConflictReport, check_compliance, evaluate_policy, expand_usages
from .vocab import UNSPECIFIED, ConceptHierarchy, ConceptNode, MatchMode, load_default_vocabulary, load_vocabulary

__version__ = "0.1.0"
