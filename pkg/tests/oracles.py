"""Independent reference implementations used as test oracles.

Nothing here imports the code under test beyond plain data classes; each
oracle is the slow, obvious version of what it checks.
"""

from __future__ import annotations

import random
from itertools import product

UNSPECIFIED = "unspecified"


# ---------------------------------------------------------------- strings

def lcs_dp(a: str, b: str) -> int:
    """Quadratic dynamic programme for the longest common substring."""
    best = 0
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
                best = max(best, table[i][j])
    return best


def lcs_bruteforce(a: str, b: str) -> int:
    """Enumerate every substring of ``a`` and test membership in ``b``."""
    best = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a) + 1):
            if j - i > best and a[i:j] in b:
                best = j - i
    return best


def lcs_ratio_oracle(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    return lcs_dp(a, b) / max(len(a), len(b))


def exact_f1_oracle(gold: set, pred: set) -> float:
    if not gold and not pred:
        return 1.0
    tp = len(gold & pred)
    if tp == 0:
        return 0.0
    p, r = tp / len(pred), tp / len(gold)
    return 2 * p * r / (p + r)


# ---------------------------------------------------------------- graphs

def random_dag(rng: random.Random, n: int, edge_p: float = 0.25) -> dict[str, set[str]]:
    """``{node: parents}`` where parents always come earlier in a shuffled order."""
    names = [f"c{i}" for i in range(n)]
    rng.shuffle(names)
    dag = {}
    for i, name in enumerate(names):
        dag[name] = {names[j] for j in range(i) if rng.random() < edge_p}
    return dag


def reachable(dag: dict[str, set[str]], a: str, b: str) -> bool:
    """Depth-first search along parent edges; reflexive."""
    stack, seen = [a], set()
    while stack:
        x = stack.pop()
        if x == b:
            return True
        if x in seen:
            continue
        seen.add(x)
        stack.extend(dag[x])
    return False


def closure_floyd_warshall(dag: dict[str, set[str]]) -> dict[tuple[str, str], bool]:
    nodes = sorted(dag)
    reach = {(i, j): i == j or j in dag[i] for i in nodes for j in nodes}
    for k in nodes:
        for i in nodes:
            for j in nodes:
                if reach[(i, k)] and reach[(k, j)]:
                    reach[(i, j)] = True
    return reach


def path_exists(dag: dict[str, set[str]], start: str, goal: str) -> bool:
    return reachable(dag, start, goal)


def has_cycle_dfs(dag: dict[str, set[str]]) -> bool:
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(dag, WHITE)

    def visit(x):
        colour[x] = GREY
        for p in dag[x]:
            if colour[p] == GREY or (colour[p] == WHITE and visit(p)):
                return True
        colour[x] = BLACK
        return False

    return any(colour[x] == WHITE and visit(x) for x in dag)


# ---------------------------------------------------------------- reasoner

def naive_conflicts(dag, roots, app_doc, profile_doc):
    """Brute-force conflict enumeration over plain documents.

    ``app_doc``/``profile_doc`` are the JSON-shaped dicts, so this shares no
    code with the reasoner. Returns a set of
    ``(policy_id, rule_index, port, downstream_index, data, purpose, consumer_name)``.
    """

    def concept_match(x, target, mode):
        if mode == "Exact":
            return x == target
        return reachable(dag, x, target)

    usages = []
    for spec in app_doc["input_specs"]:
        for data in spec["data"]:
            for purpose in spec["purposes"] or [UNSPECIFIED]:
                usages.append((spec["port"], None, data, purpose, "FirstParty", None))
            for k, d in enumerate(spec["downstreams"]):
                for purpose in d["purposes"] or [UNSPECIFIED]:
                    usages.append((spec["port"], k, data, purpose, "ThirdParty", d["recipient"]["name"]))

    out = set()
    for (port, k, data, purpose, kind, name), dp in product(usages, profile_doc["policies"]):
        scope = dp["data_scope"]
        if data == UNSPECIFIED:
            in_scope = scope["mode"] == "Subtree" and scope["concept"] in roots
        else:
            in_scope = concept_match(data, scope["concept"], scope["mode"])
        if not in_scope:
            continue
        applicable = []
        for i, rule in enumerate(dp["rules"]):
            ps = rule["purpose_scope"]
            if ps != "Any":
                if purpose == UNSPECIFIED or not concept_match(purpose, ps["concept"], ps["mode"]):
                    continue
            cs = rule["consumer_scope"]
            if cs == "FirstPartyOnly" and kind != "FirstParty":
                continue
            if cs == "ThirdPartyOnly" and kind != "ThirdParty":
                continue
            pat = rule.get("recipient_name_pattern")
            if pat is not None:
                if kind != "ThirdParty" or not name or pat.lower() not in name.lower():
                    continue
            applicable.append((i, rule["effect"]))
        prohibits = [i for i, e in applicable if e == "Prohibit"]
        if prohibits:
            out.add((dp["policy_id"], min(prohibits), port, k, data, purpose, name))
        elif not applicable and dp["default_stance"] == "ProhibitByDefault":
            out.add((dp["policy_id"], None, port, k, data, purpose, name))
    return out


def random_instance(rng: random.Random, max_concepts=20, max_specs=10, max_downstreams=3, max_rules=5):
    n = rng.randint(1, max_concepts)
    dag = random_dag(rng, n, rng.choice([0.1, 0.25, 0.4]))
    concepts = sorted(dag)
    pool = concepts + [UNSPECIFIED]

    def pick(k, allow_unspecified=True):
        src = pool if allow_unspecified else concepts
        return sorted(set(rng.choice(src) for _ in range(k)))

    names = [None, "ad partners", "Analytics Co", "partners"]
    seg = {"doc_id": "d", "segment_index": 0, "text": "t"}
    specs = []
    for i in range(rng.randint(0, max_specs)):
        downstreams = []
        for _ in range(rng.randint(0, max_downstreams)):
            downstreams.append({
                "recipient": {"kind": "ThirdParty", "name": rng.choice(names)},
                "purposes": pick(rng.randint(0, 3)),
                "choice": rng.choice(["OptIn", "OptOut", "Unconditional"]),
                "provenance": dict(seg, segment_index=rng.randint(0, 30)),
            })
        specs.append({
            "port": f"p{i}",
            "data": pick(rng.randint(1, 3)),
            "purposes": pick(rng.randint(0, 3)),
            "downstreams": downstreams,
            "provenance": dict(seg, segment_index=rng.randint(0, 30)),
        })
    app = {"schema_version": 1, "app_id": "app", "input_specs": specs}

    policies = []
    for j in range(rng.randint(1, 3)):
        rules = []
        for _ in range(rng.randint(0, max_rules)):
            consumer = rng.choice(["FirstPartyOnly", "ThirdPartyOnly", "AnyParty"])
            rule = {
                "effect": rng.choice(["Permit", "Prohibit"]),
                "purpose_scope": "Any" if rng.random() < 0.3 else
                {"concept": rng.choice(concepts), "mode": rng.choice(["Exact", "Subtree"])},
                "consumer_scope": consumer,
            }
            if consumer != "FirstPartyOnly" and rng.random() < 0.2:
                rule["recipient_name_pattern"] = rng.choice(["partner", "co", "ad"])
            rules.append(rule)
        policies.append({
            "policy_id": f"dp{j}",
            "data_scope": {"concept": rng.choice(concepts), "mode": rng.choice(["Exact", "Subtree"])},
            "default_stance": rng.choice(["PermitByDefault", "ProhibitByDefault"]),
            "rules": rules,
        })
    profile = {"schema_version": 1, "profile_id": "prof", "policies": policies}
    return dag, app, profile
