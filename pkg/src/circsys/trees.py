"""Finite tree prefixes and the reduction to construction sequences.

Trees are downward-closed sets of finite integer sequences.  The canonical
enumeration orders sequences by weight (length plus entry sum) with lexic-
ographic tie-break, which guarantees every prefix appears before any of
its extensions.  The reduction builds a word family whose group scaffold
is read off the tree members in enumeration order, then lifts it to the
circular side; the set of enumeration indices it consults provides an
explicit continuity bound.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache

from .coefficients import plan_to_obj
from .specbuild import (BuiltSequence, ToleranceProfile,
                        build_words, groups_from_tree, lift_build)


class TreeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# canonical enumeration

@lru_cache(maxsize=None)
def _weight_class(w: int) -> tuple:
    """All sequences with len + sum == w, lexicographically sorted."""
    if w == 0:
        return ((),)
    out = []

    def extend(prefix, budget):
        # budget = remaining weight; appending value v costs v + 1
        for v in range(budget):
            node = prefix + (v,)
            rest = budget - v - 1
            if rest == 0:
                out.append(node)
            else:
                extend(node, rest)
    extend((), w)
    return tuple(sorted(out))


def sigma_enumeration(n: int) -> tuple:
    if n < 0:
        raise TreeError("enumeration index must be non-negative")
    w = 0
    while True:
        cls = _weight_class(w)
        if n < len(cls):
            return cls[n]
        n -= len(cls)
        w += 1


def sigma_index(sigma) -> int:
    sigma = tuple(sigma)
    w = len(sigma) + sum(sigma)
    base = sum(len(_weight_class(v)) for v in range(w))
    return base + _weight_class(w).index(sigma)


# ---------------------------------------------------------------------------
# tree prefixes

@dataclass(frozen=True)
class TreePrefix:
    """A finite, downward-closed set of nodes together with the stretch of
    the enumeration it describes (membership of sigma_n is known for all
    n < horizon)."""

    nodes: frozenset
    horizon: int = 0

    def __post_init__(self):
        nodes = frozenset(tuple(x) for x in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        h = self.horizon
        if nodes:
            h = max(h, max(sigma_index(x) for x in nodes) + 1)
        object.__setattr__(self, "horizon", max(h, 1))

    def __contains__(self, node) -> bool:
        return tuple(node) in self.nodes

    def indices(self) -> tuple:
        return tuple(n for n in range(self.horizon)
                     if sigma_enumeration(n) in self.nodes)

    def members_in_order(self) -> tuple:
        return tuple(sigma_enumeration(n) for n in self.indices())


def validate_tree(tp) -> tuple:
    """(valid, witness): witness is a missing initial segment, or None."""
    nodes = tp.nodes if isinstance(tp, TreePrefix) else \
        frozenset(tuple(x) for x in tp)
    for x in sorted(nodes, key=len):
        for cut in range(len(x)):
            if x[:cut] not in nodes:
                return False, x[:cut]
    return True, None


def tree_to_json(tp: TreePrefix) -> str:
    return json.dumps({"nodes": sorted(map(list, tp.nodes)),
                       "horizon": tp.horizon})


def tree_from_json(text: str) -> TreePrefix:
    doc = json.loads(text)
    tp = TreePrefix(frozenset(map(tuple, doc["nodes"])),
                    int(doc.get("horizon", 0)))
    ok, witness = validate_tree(tp)
    if not ok:
        raise TreeError(f"not a tree: missing initial segment {witness}")
    return tp


# ---------------------------------------------------------------------------
# reduction

@dataclass(frozen=True)
class ReductionResult:
    built: BuiltSequence          # circular, lifted
    odometer: BuiltSequence
    consumed: tuple               # enumeration indices consulted
    output_hash: str
    plan_hash: str
    seed: int
    depth: int
    exhausted: bool = False       # fewer members than stages requested


def _hash_obj(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _output_obj(built: BuiltSequence) -> dict:
    seq = built.seq
    return {
        "flavor": seq.flavor,
        "compositions": [list(map(list, st.compositions))
                         for st in seq.stages],
        "classes": [None if st.classes is None else list(st.classes)
                    for st in seq.stages],
        "actions": [None if a is None else
                    [sorted([list(k), list(v)] for k, v in g.items())
                     for g in a.generators]
                    for a in built.actions],
    }


def reduce(tp: TreePrefix, n0: int, plan, seed: int,
           tolerances: ToleranceProfile | None = None) -> ReductionResult:
    """Build the first n0 stages of the construction sequence attached to
    a tree prefix and lift them circularly.

    The group scaffold is read off the first n0 + 1 tree members in
    enumeration order; the consumed indices are exactly the enumeration
    positions whose membership was consulted to find them."""
    ok, witness = validate_tree(tp)
    if not ok:
        raise TreeError(f"not a tree: missing initial segment {witness}")
    if n0 < 1:
        raise TreeError("need at least one stage")
    if n0 > plan.depth - 1:
        raise TreeError(f"depth {n0} exceeds the plan's {plan.depth - 1} "
                        f"word stages")
    members, consumed = [], []
    for n in range(tp.horizon):
        consumed.append(n)
        if sigma_enumeration(n) in tp.nodes:
            members.append(sigma_enumeration(n))
            if len(members) == n0 + 1:
                break
    exhausted = len(members) < n0 + 1
    scaffold = groups_from_tree(members)
    tol = tolerances or ToleranceProfile(j_family=1)
    odo = build_words(scaffold, plan, seed=seed, level=n0, tolerances=tol)
    circ = lift_build(odo)
    pobj = plan_to_obj(plan)
    return ReductionResult(
        built=circ, odometer=odo, consumed=tuple(consumed),
        output_hash=_hash_obj(_output_obj(circ)),
        plan_hash=_hash_obj(pobj), seed=seed, depth=n0,
        exhausted=exhausted)


def continuity_bound(tp: TreePrefix, n0: int, plan=None, seed: int = 0,
                     result: ReductionResult | None = None) -> int:
    """Largest enumeration index whose membership the reduction reads."""
    if result is None:
        if plan is None:
            raise TreeError("need a plan or a previous reduction result")
        result = reduce(tp, n0, plan, seed)
    return max(result.consumed)


def mutate_tree(tp: TreePrefix, index: int) -> TreePrefix:
    """Toggle membership of sigma_index; raises if the toggle would break
    downward closure within the prefix."""
    node = sigma_enumeration(index)
    nodes = set(tp.nodes)
    if node in nodes:
        if any(x[:len(node)] == node for x in nodes if len(x) > len(node)):
            raise TreeError(f"removing {node} would orphan a descendant")
        nodes.discard(node)
    else:
        if node and node[:-1] not in nodes:
            raise TreeError(f"adding {node} requires its parent")
        nodes.add(node)
    return TreePrefix(frozenset(nodes), max(tp.horizon, index + 1))


def addable_index_above(tp: TreePrefix, bound: int,
                        search_cap: int = 10000) -> int:
    """Smallest enumeration index > bound whose node can be added while
    keeping the prefix a tree."""
    for n in range(bound + 1, bound + 1 + search_cap):
        node = sigma_enumeration(n)
        if node not in tp.nodes and (not node or node[:-1] in tp.nodes):
            return n
    raise TreeError(f"no addable node within {search_cap} indices above "
                    f"{bound}")


@dataclass(frozen=True)
class ContinuityCertificate:
    bound: int
    base_hash: str
    above_index: int
    above_hash: str
    unaffected: bool              # mutation above the bound: same output
    consumed_index: int | None
    consumed_hash: str | None
    affected: bool | None         # mutation at a consumed index: differs


def certify_continuity(tp: TreePrefix, n0: int, plan,
                       seed: int = 0) -> ContinuityCertificate:
    """Re-run the reduction against mutated trees: toggling membership
    strictly above the bound must not change the output hash; toggling a
    genuinely consumed index must."""
    base = reduce(tp, n0, plan, seed)
    if base.exhausted:
        raise TreeError("prefix too thin to certify: the member hunt "
                        "reached the horizon, so no finite bound exists")
    M = max(base.consumed)
    above = addable_index_above(tp, M)
    mutated_up = mutate_tree(tp, above)
    up = reduce(mutated_up, n0, plan, seed)
    cert_consumed = None
    cert_hash = None
    affected = None
    for idx in reversed(base.consumed):
        try:
            mutated_in = mutate_tree(tp, idx)
        except TreeError:
            continue
        inside = reduce(mutated_in, n0, plan, seed)
        if cert_consumed is None or inside.output_hash != base.output_hash:
            cert_consumed, cert_hash = idx, inside.output_hash
            affected = inside.output_hash != base.output_hash
        if affected:
            break
    return ContinuityCertificate(
        bound=M, base_hash=base.output_hash, above_index=above,
        above_hash=up.output_hash,
        unaffected=up.output_hash == base.output_hash,
        consumed_index=cert_consumed, consumed_hash=cert_hash,
        affected=affected)


# ---------------------------------------------------------------------------
# chains

CHAIN_DISCLAIMER = ("infinite-branch existence is not decidable from a "
                    "finite prefix; this report is diagnostic only")


@dataclass(frozen=True)
class ChainReport:
    longest: int
    chains: tuple                 # maximal-length chains, as node tuples
    branch_candidates: tuple      # deepest leaves
    note: str = CHAIN_DISCLAIMER


def chain_report(tp: TreePrefix) -> ChainReport:
    ok, witness = validate_tree(tp)
    if not ok:
        raise TreeError(f"not a tree: missing initial segment {witness}")
    if not tp.nodes:
        return ChainReport(0, (), ())
    deepest = max(len(x) for x in tp.nodes)
    leaves = sorted(x for x in tp.nodes if len(x) == deepest)
    chains = tuple(tuple(x[:cut] for cut in range(len(x) + 1))
                   for x in leaves)
    return ChainReport(deepest + 1, chains, tuple(leaves))


# ---------------------------------------------------------------------------
# realization boundary

def realization_handoff(result: ReductionResult) -> dict:
    """Record the inputs a smooth realization would take over; the
    realization itself is out of scope."""
    seq = result.built.seq
    return {
        "status": "not-constructed: smooth realization out of scope",
        "plan_hash": result.plan_hash,
        "output_hash": result.output_hash,
        "stages": [{
            "n": n,
            "q": seq.word_length(n),
            "prewords": [list(t) for t in seq.stage(n).compositions],
        } for n in range(1, seq.depth + 1)],
    }
