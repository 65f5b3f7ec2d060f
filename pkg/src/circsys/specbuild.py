"""Word specifications and the verification-gated builder.

The checker families:
  E1-E3    structural word conditions (lengths, multiplicities, readability)
  Q4-Q6    equivalence-class geometry (prefix agreement, product structure,
           refinement counts)
  A7-A9    group actions (freeness, parity swap, skew-diagonal extension)
  J10-J11.1 pseudo-randomness of aligned occurrence counts
  T1-T7    timing conditions on the lifted circular families

The builder samples words satisfying the structural constraints by
construction and gates its output on the J-family checks, retrying with
fresh entropy until the declared tolerances hold.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import ceil

import numpy as np

from .systems import (ConstructionSequence, StageFamily, GroupActionTable,
                      odometer_sequence, functor_F, propagate_equivalence,
                      skew_diagonal_extend,
                      FWD, REV, ODOMETER, CIRCULAR, SequenceError)


class BuildError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# group scaffold from tree data

@dataclass(frozen=True)
class GroupScaffold:
    """Nodes of a tree prefix in discovery order; everything else is
    derived counting."""

    nodes: tuple          # tuples of ints, discovery order

    def X(self, n: int, s: int) -> tuple:
        return tuple(x for x in self.nodes[:n + 1] if len(x) == s)

    def generator_count(self, n: int, s: int) -> int:
        return len(self.X(n, s))

    def G_size(self, n: int, s: int) -> int:
        return 2 ** self.generator_count(n, s)

    def M(self, s: int):
        """Least discovery index carrying a length-s node."""
        for i, x in enumerate(self.nodes):
            if len(x) == s:
                return i
        return None

    def s_of(self, n: int) -> int:
        return max((len(x) for x in self.nodes[:n + 1]), default=0)

    def rho(self, node: tuple) -> tuple:
        """Image of a level-(s+1) generator at level s: drop the last
        entry."""
        if not node:
            raise ValueError("the root has no parent generator")
        return node[:-1]


def groups_from_tree(nodes) -> GroupScaffold:
    nodes = tuple(tuple(x) for x in nodes)
    seen = set()
    for x in nodes:
        if x and x[:-1] not in seen:
            raise ValueError(f"node {x} discovered before its parent")
        seen.add(x)
    return GroupScaffold(nodes)


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class SpecEntry:
    spec_id: str
    status: str                 # pass | fail | not-checked
    worst_deviation: Fraction | None = None
    tolerance: Fraction | None = None
    witness: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SpecReport:
    entries: tuple

    def entry(self, spec_id: str) -> SpecEntry:
        for e in self.entries:
            if e.spec_id == spec_id:
                return e
        raise KeyError(spec_id)

    def ok(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def failures(self):
        return [e for e in self.entries if e.status == "fail"]

    def to_json(self) -> str:
        def frac(x):
            return None if x is None else f"{x.numerator}/{x.denominator}"
        return json.dumps([{
            "spec": e.spec_id, "status": e.status,
            "worst_deviation": frac(e.worst_deviation),
            "tolerance": frac(e.tolerance),
            "witness": {k: repr(v) for k, v in e.witness.items()},
        } for e in self.entries], indent=2)


@dataclass(frozen=True)
class ToleranceProfile:
    """Per-family tolerances; the J functions take the stage index."""

    j_family: object = None     # callable n -> Fraction
    mu: object = None           # callable n -> Fraction

    def j(self, n: int) -> Fraction:
        if self.j_family is None:
            return Fraction(1, 2)
        return Fraction(self.j_family(n)) if callable(self.j_family) \
            else Fraction(self.j_family)

    def mu_at(self, n: int) -> Fraction:
        if self.mu is None:
            return Fraction(1, 4)
        return Fraction(self.mu(n)) if callable(self.mu) \
            else Fraction(self.mu)


def desk_tolerances() -> ToleranceProfile:
    return ToleranceProfile()


# ---------------------------------------------------------------------------
# built sequences

@dataclass(frozen=True)
class BuiltSequence:
    """A construction sequence plus its class actions and provenance."""

    seq: ConstructionSequence
    actions: tuple               # per stage: GroupActionTable | None
    scaffold: GroupScaffold
    report: SpecReport | None = None

    def stage(self, n: int) -> StageFamily:
        return self.seq.stage(n)

    @property
    def depth(self) -> int:
        return self.seq.depth


def _signed_slots(fam: StageFamily, index: int, reversed_: bool, s_prev: int):
    """Slot ids of word `index` over the signed previous-stage alphabet;
    id = word index, +s_prev when the slot holds a reversed word."""
    tup = fam.compositions[index]
    if not reversed_:
        return list(tup)
    return [i + s_prev for i in reversed(tup)]


def _signed_class(classes, s_classes: int, signed_id: int, s_prev: int):
    """(class id, side) of a signed stage-n word id."""
    if signed_id < s_prev:
        return classes[signed_id], FWD
    return classes[signed_id - s_prev], REV


# ---------------------------------------------------------------------------
# E / Q / A checks

def _check_E1(seq, n):
    lens = {len(t) for t in seq.stage(n + 1).compositions}
    if len(lens) == 1:
        return SpecEntry("E1", "pass")
    return SpecEntry("E1", "fail", witness={"lengths": sorted(lens)})


def _check_E2(seq, n):
    prev = seq.stage(n).size
    counts = []
    for tup in seq.stage(n + 1).compositions:
        row = [0] * prev
        for i in tup:
            row[i] += 1
        counts.append(tuple(row))
    for w in range(prev):
        vals = {row[w] for row in counts}
        if len(vals) > 1:
            return SpecEntry("E2", "fail", witness={
                "stage": n + 1, "word": w, "multiplicities": sorted(vals)})
    return SpecEntry("E2", "pass",
                     witness={"multiplicity": counts[0][0] if counts else 0})


def _check_E3(seq, n):
    """Unique readability: no properly-offset full parse, and no word's
    second half equal to another's first half."""
    fam = seq.stage(n + 1)
    prev = {w.materialize() for w in seq.stage(n).words}
    Kn = seq.word_length(n)
    k = len(fam.compositions[0])
    for wi, w in enumerate(fam.words):
        text = w.materialize()
        for off in range(1, Kn):
            windows = range(off, len(text) - Kn + 1, Kn)
            if windows and all(text[a:a + Kn] in prev for a in windows):
                return SpecEntry("E3", "fail", witness={
                    "stage": n + 1, "word": wi, "offset": off,
                    "kind": "offset parse"})
    half = k // 2 + 1
    texts = [w.materialize() for w in fam.words]
    for i, wt in enumerate(texts):
        second = wt[(k - half) * Kn:]
        for j, vt in enumerate(texts):
            if i == j and half >= k:
                continue
            if vt.startswith(second):
                return SpecEntry("E3", "fail", witness={
                    "stage": n + 1, "words": (i, j), "kind": "half overlap"})
    return SpecEntry("E3", "pass")


def _check_Q4(seq, n, scaffold, eps):
    """At the class-founding stage: classwise agreement on an initial
    proportion of at least 1 - eps."""
    fam = seq.stage(n)
    if fam.classes is None or n != scaffold.M(1):
        return SpecEntry("Q4", "not-checked")
    texts = [w.materialize() for w in fam.words]
    groups = {}
    for i, c in enumerate(fam.classes):
        groups.setdefault(c, []).append(i)
    L = len(texts[0])
    worst = Fraction(1)
    witness = {}
    for c, members in groups.items():
        ref = texts[members[0]]
        agreed = L
        for i in members[1:]:
            d = next((d for d in range(L) if texts[i][d] != ref[d]), L)
            agreed = min(agreed, d)
        prop = Fraction(agreed, L)
        if prop < worst:
            worst, witness = prop, {"class": c, "agreed": agreed, "length": L}
    if worst >= 1 - Fraction(eps):
        return SpecEntry("Q4", "pass", worst_deviation=1 - worst,
                         tolerance=Fraction(eps))
    return SpecEntry("Q4", "fail", worst_deviation=1 - worst,
                     tolerance=Fraction(eps), witness=witness)


def _check_Q5(seq, n):
    """Above M(s) the relation must be the propagation of the previous
    stage's relation."""
    cur, prev = seq.stage(n + 1), seq.stage(n)
    if cur.classes is None or prev.classes is None:
        return SpecEntry("Q5", "not-checked")
    want = propagate_equivalence(prev.classes, cur.compositions)
    # compare as partitions (ids may be permuted)
    seen = {}
    for a, b in zip(want, cur.classes):
        if seen.setdefault(a, b) != b:
            return SpecEntry("Q5", "fail", witness={"stage": n + 1})
    if len(set(want)) != len(set(cur.classes)):
        return SpecEntry("Q5", "fail", witness={"stage": n + 1,
                                                "kind": "class count"})
    return SpecEntry("Q5", "pass")


def _check_Q6(seq, n, e_n):
    """The level-1 relation refines the trivial one in 2^e(n) classes."""
    fam = seq.stage(n)
    if fam.classes is None:
        return SpecEntry("Q6", "not-checked")
    got = len(set(fam.classes))
    if got == 2 ** e_n:
        return SpecEntry("Q6", "pass", witness={"classes": got})
    return SpecEntry("Q6", "fail", witness={"classes": got,
                                            "expected": 2 ** e_n})


def _check_A7(action):
    if action is None:
        return SpecEntry("A7", "not-checked")
    if action.is_free():
        return SpecEntry("A7", "pass")
    return SpecEntry("A7", "fail", witness={"kind": "not free"})


def _check_A8(action):
    if action is None:
        return SpecEntry("A8", "not-checked")
    for g in action.generators:
        for (c, side), (_, nside) in g.items():
            if side == nside:
                return SpecEntry("A8", "fail", witness={"class": c})
    return SpecEntry("A8", "pass")


def _check_A9(seq, n, actions):
    """The stage-(n+1) action restricted to the old generators must be
    the skew-diagonal extension of the stage-n action."""
    prev_act, cur_act = actions[n], actions[n + 1]
    if prev_act is None or cur_act is None:
        return SpecEntry("A9", "not-checked")
    prev = seq.stage(n)
    if prev.classes is None:
        return SpecEntry("A9", "not-checked")
    try:
        want = skew_diagonal_extend(prev_act, seq.stage(n + 1).compositions,
                                    prev.classes)
    except SequenceError as err:
        return SpecEntry("A9", "fail", witness={"error": str(err)})
    old = len(prev_act.generators)
    if want.num_classes != cur_act.num_classes:
        return SpecEntry("A9", "fail", witness={"kind": "class count"})
    for gi in range(old):
        if want.generators[gi] != cur_act.generators[gi]:
            return SpecEntry("A9", "fail", witness={"generator": gi})
    return SpecEntry("A9", "pass")


# ---------------------------------------------------------------------------
# J-family checks

def _slot_matrix(seq, n):
    """Signed slot arrays for every signed stage-(n+1) word; row w is the
    word, row w + s is its reverse."""
    fam = seq.stage(n + 1)
    s_prev = seq.stage(n).size
    s = fam.size
    rows = []
    for i in range(s):
        rows.append(_signed_slots(fam, i, False, s_prev))
    for i in range(s):
        rows.append(_signed_slots(fam, i, True, s_prev))
    return np.array(rows, dtype=np.int64), s, s_prev


def _parity_pairs(s_prev, u_rev, v_rev):
    """Pair ids (u' * 2*s_prev + v') with the parities demanded by the
    signed words u, v."""
    urange = range(s_prev, 2 * s_prev) if u_rev else range(s_prev)
    vrange = range(s_prev, 2 * s_prev) if v_rev else range(s_prev)
    return [a * 2 * s_prev + b for a in urange for b in vrange]


def _check_J10(seq, n, eps, tol):
    slots, s, s_prev = _slot_matrix(seq, n)
    k = slots.shape[1]
    target = Fraction(1, s_prev * s_prev)
    worst, witness = Fraction(0), {}
    t_max = ceil((1 - Fraction(eps)) * k) - 1
    for ui in range(2 * s):
        for vi in range(2 * s):
            for t in range(1, t_max + 1):
                pair = slots[ui, t:] * (2 * s_prev) + slots[vi, :k - t]
                counts = np.bincount(pair, minlength=4 * s_prev * s_prev)
                for pid in _parity_pairs(s_prev, ui >= s, vi >= s):
                    dev = abs(Fraction(int(counts[pid]), k - t) - target)
                    if dev > worst:
                        worst = dev
                        witness = {"u": ui, "v": vi, "t": t,
                                   "pair": (pid // (2 * s_prev),
                                            pid % (2 * s_prev)),
                                   "count": int(counts[pid]), "overlap": k - t}
    status = "pass" if worst < tol else "fail"
    return SpecEntry("J10", status, worst, tol, witness)


def _check_J10_1(seq, n, eps, tol):
    slots, s, s_prev = _slot_matrix(seq, n)
    k = slots.shape[1]
    target = Fraction(1, s_prev * s_prev)
    eps = Fraction(eps)
    worst, witness = Fraction(0), {}
    j_lo = max(1, ceil(eps * k))
    t_max = ceil((1 - eps) * k) - 1
    npair = 4 * s_prev * s_prev
    tf = float(target)
    for ui in range(2 * s):
        for vi in range(2 * s):
            pids = np.array(_parity_pairs(s_prev, ui >= s, vi >= s))
            for t in range(1, t_max + 1):
                if k - t < j_lo:
                    continue
                pair = slots[ui, t:] * (2 * s_prev) + slots[vi, :k - t]
                onehot = np.zeros((npair, k - t), dtype=np.int64)
                onehot[pair, np.arange(k - t)] = 1
                cums = np.cumsum(onehot[pids], axis=1)[:, j_lo - 1:]
                j0s = np.arange(j_lo, k - t + 1)
                devs = np.abs(cums / j0s - tf)
                r, c = np.unravel_index(np.argmax(devs), devs.shape)
                dev = abs(Fraction(int(cums[r, c]), int(j0s[c])) - target)
                if dev > worst:
                    pid = int(pids[r])
                    worst = dev
                    witness = {"u": ui, "v": vi, "t": t, "j0": int(j0s[c]),
                               "pair": (pid // (2 * s_prev),
                                        pid % (2 * s_prev))}
    status = "pass" if worst < tol else "fail"
    return SpecEntry("J10.1", status, worst, tol, witness)


def _orbit_element(action, cu, cv):
    """The unique group element taking signed class cu to cv, or None."""
    for el in action.elements():
        if el[cu] == cv:
            return el
    return None


def _check_J11(seq, n, actions, tol):
    slots, s, s_prev = _slot_matrix(seq, n)
    k = slots.shape[1]
    prev = seq.stage(n)
    action = actions[n] if actions else None
    classes = prev.classes
    worst, witness = Fraction(0), {}
    for ui in range(s):                      # u even by hypothesis
        for vi in range(2 * s):
            # maximal level with an orbit relation; level 0 relates
            # everything through the identity
            g = None
            if action is not None and classes is not None and \
                    seq.stage(n + 1).classes is not None:
                cu = (seq.stage(n + 1).classes[ui], FWD)
                cls_v = seq.stage(n + 1).classes[vi % s]
                cv = (cls_v, REV if vi >= s else FWD)
                g = _orbit_element(actions[n + 1], cu, cv) \
                    if actions[n + 1] is not None else None
            if g is not None:
                Q = len(set(classes))
                C = s_prev // Q
                target = Fraction(1, Q * C * C)

                def related(a, b, g=g):
                    ca = _signed_class(classes, Q, a, s_prev)
                    cb = _signed_class(classes, Q, b, s_prev)
                    return g[ca] == cb
                level = 1
            else:
                target = Fraction(1, s_prev * s_prev)

                def related(a, b):
                    return (a < s_prev) == (ui < s) and \
                           (b < s_prev) == (vi < s)
                level = 0
            pair = slots[ui, :] * (2 * s_prev) + slots[vi, :]
            counts = np.bincount(pair, minlength=4 * s_prev * s_prev)
            for a in range(2 * s_prev):
                for b in range(2 * s_prev):
                    if a < s_prev and related(a, b):
                        dev = abs(Fraction(int(counts[a * 2 * s_prev + b]), k)
                                  - target)
                        if dev > worst:
                            worst = dev
                            witness = {"u": ui, "v": vi, "pair": (a, b),
                                       "level": level}
    status = "pass" if worst < tol else "fail"
    return SpecEntry("J11", status, worst, tol, witness)


def _check_J11_1(seq, n, actions, eps, tol):
    slots, s, s_prev = _slot_matrix(seq, n)
    k = slots.shape[1]
    target = Fraction(1, s_prev * s_prev)
    eps = Fraction(eps)
    cur = seq.stage(n + 1)
    worst, witness = Fraction(0), {}
    j_lo = max(1, ceil(eps * k))
    for ui in range(s):
        for vi in range(2 * s):
            if cur.classes is not None and actions and \
                    actions[n + 1] is not None:
                cu = (cur.classes[ui], FWD)
                cv = (cur.classes[vi % s], REV if vi >= s else FWD)
                if _orbit_element(actions[n + 1], cu, cv) is not None:
                    continue                  # hypothesis: not in the orbit
            pids = np.array(_parity_pairs(s_prev, False, vi >= s))
            pair = slots[ui, :] * (2 * s_prev) + slots[vi, :]
            npair = 4 * s_prev * s_prev
            onehot = np.zeros((npair, k), dtype=np.int64)
            onehot[pair, np.arange(k)] = 1
            pre = np.cumsum(onehot[pids], axis=1)
            suf = np.cumsum(onehot[pids][:, ::-1], axis=1)
            j0s = np.arange(j_lo, k + 1)
            tf = float(target)
            for segment, cums in (("initial", pre), ("tail", suf)):
                win = cums[:, j_lo - 1:]
                devs = np.abs(win / j0s - tf)
                r, c = np.unravel_index(np.argmax(devs), devs.shape)
                dev = abs(Fraction(int(win[r, c]), int(j0s[c])) - target)
                if dev > worst:
                    pid = int(pids[r])
                    worst = dev
                    witness = {"u": ui, "v": vi, "j0": int(j0s[c]),
                               "segment": segment,
                               "pair": (pid // (2 * s_prev),
                                        pid % (2 * s_prev))}
    status = "pass" if worst < tol else "fail"
    return SpecEntry("J11.1", status, worst, tol, witness)


# ---------------------------------------------------------------------------
# the public checker

def check_specs(built: BuiltSequence, tolerances: ToleranceProfile | None
                = None, levels=None) -> SpecReport:
    tol = tolerances or desk_tolerances()
    seq = built.seq
    if seq.flavor != ODOMETER:
        raise SequenceError("check_specs runs on odometer sequences")
    if seq.depth < 1:
        raise SequenceError("need at least two stages")
    entries = []
    levels = range(seq.depth) if levels is None else levels
    for n in levels:
        st = seq.plan.stage(n)
        eps = st.eps_lunate
        eps_var = st.eps_classic
        jt = tol.j(n)
        M1 = built.scaffold.M(1)
        founded = M1 is not None and n + 1 >= M1
        checks = [
            _check_E1(seq, n), _check_E2(seq, n), _check_E3(seq, n),
            _check_Q4(seq, n + 1, built.scaffold, eps),
            _check_Q5(seq, n) if founded and n + 1 > M1
            else SpecEntry("Q5", "not-checked"),
            _check_Q6(seq, n + 1, seq.plan.stage(min(n + 1,
                      seq.plan.depth - 1)).e)
            if founded else SpecEntry("Q6", "not-checked"),
            _check_A7(built.actions[n + 1] if built.actions else None),
            _check_A8(built.actions[n + 1] if built.actions else None),
            _check_A9(seq, n, built.actions),
            _check_J10(seq, n, eps, jt),
            _check_J10_1(seq, n, eps_var, jt),
            _check_J11(seq, n, built.actions, jt),
            _check_J11_1(seq, n, built.actions, eps, jt),
        ]
        for e in checks:
            entries.append(replace(e, spec_id=f"{e.spec_id}@{n}"))
    return SpecReport(tuple(entries))


# ---------------------------------------------------------------------------
# gamma cascade

@dataclass(frozen=True)
class GammaCascade:
    values: tuple              # gamma_1 .. gamma_N as exact rationals

    def gamma(self, n: int) -> Fraction:
        return self.values[n - 1]

    @property
    def positive(self) -> bool:
        return all(v > 0 for v in self.values)


def gamma_cascade(plan, N: int | None = None, Q1=None) -> GammaCascade:
    N = plan.depth - 1 if N is None else N
    st0 = plan.stage(0)
    e0 = Fraction(st0.eps_lunate)
    g = (1 - Fraction(1, 4) - e0) * (1 - Fraction(1, e0 * st0.k)) \
        * (1 - Fraction(1, st0.l))
    vals = [g]
    for m in range(1, N):
        st = plan.stage(m)
        em = Fraction(st.eps_lunate)
        prev_eps = Fraction(plan.stage(m - 1).eps_lunate)
        q1 = Q1[m] if Q1 is not None else st.Q1
        dec = 1 - 10 * (Fraction(1, st.k) / em + Fraction(1, st.l)
                        + Fraction(1, q1) + prev_eps)
        g = g * dec
        vals.append(g)
    return GammaCascade(tuple(vals))


# ---------------------------------------------------------------------------
# timing checks on lifted circular sequences

def lift_build(built: BuiltSequence) -> BuiltSequence:
    """Rebuild circularly; the class-level action tables carry over
    unchanged (the skew-diagonal rule acts on class tuples either way)."""
    return BuiltSequence(functor_F(built.seq), built.actions,
                         built.scaffold, built.report)


def _sym_array(w) -> np.ndarray:
    return np.frombuffer(w.materialize().encode("latin1"), dtype=np.uint8)


def _mismatch_all_shifts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """M[l] = mismatches between a[:l] and b[len(b)-l:] for every l, via
    FFT cross-correlation per symbol; exact after rounding."""
    n = len(a)
    size = 1
    while size < 2 * n:
        size *= 2
    match = np.zeros(2 * n - 1)
    for sym in np.unique(np.concatenate([a, b])):
        fa = np.fft.rfft((a == sym).astype(float), size)
        fb = np.fft.rfft((b == sym)[::-1].astype(float), size)
        match += np.fft.irfft(fa * fb, size)[:2 * n - 1]
    match = np.rint(match).astype(np.int64)
    # lag l-1 sums matches of a[i] against b[(n-l)+i] for i < l
    out = np.zeros(n + 1, dtype=np.int64)
    ls = np.arange(1, n + 1)
    out[1:] = ls - match[ls - 1]
    return out


def check_T4(built: BuiltSequence, n: int, gamma: Fraction,
             eps=None) -> SpecEntry:
    """Inequivalent stage-n circular words must stay gamma-separated in
    normalized Hamming distance on every initial, tail and cross segment
    longer than eps * q_n."""
    seq = built.seq
    if seq.flavor != CIRCULAR:
        raise SequenceError("check_T4 runs on circular sequences")
    fam = seq.stage(n)
    if fam.classes is None:
        return SpecEntry("T4", "not-checked")
    if gamma <= 0:
        return SpecEntry("T4", "pass", witness={
            "vacuous": True, "gamma": gamma})
    q = seq.plan.q(n)
    eps = Fraction(seq.plan.stage(n - 1).eps_lunate) if eps is None else \
        Fraction(eps)
    l_min = int(eps * q) + 1
    arrays = {}
    for i, w in enumerate(fam.words):
        arrays[(i, FWD)] = _sym_array(w)
        arrays[(i, REV)] = arrays[(i, FWD)][::-1]
    worst, witness = Fraction(1), {}
    items = list(arrays.items())
    for (i, si), a in items:
        for (j, sj), b in items:
            if (i, si) == (j, sj):
                continue
            if fam.classes[i] == fam.classes[j] and si == sj:
                continue
            pre = np.cumsum(a != b)
            suf = np.cumsum(a[::-1] != b[::-1])
            cross = _mismatch_all_shifts(a, b)
            for name, counts in (("initial", pre), ("tail", suf)):
                ls = np.arange(l_min, q + 1)
                dv = counts[ls - 1] / ls
                bad = int(np.argmin(dv))
                d = Fraction(int(counts[ls[bad] - 1]), int(ls[bad]))
                if d < worst:
                    worst = d
                    witness = {"pair": ((i, si), (j, sj)), "segment": name,
                               "length": int(ls[bad])}
            ls = np.arange(l_min, q + 1)
            dv = cross[ls] / ls
            bad = int(np.argmin(dv))
            d = Fraction(int(cross[ls[bad]]), int(ls[bad]))
            if d < worst:
                worst = d
                witness = {"pair": ((i, si), (j, sj)), "segment": "cross",
                           "length": int(ls[bad])}
    status = "pass" if worst >= gamma else "fail"
    return SpecEntry("T4", status, worst_deviation=worst,
                     tolerance=gamma, witness=witness)


def _class_rows(built, n):
    """Per signed stage-n word: its (class, side); plus slot matrices of
    stage n+1."""
    seq = built.seq
    slots, s, s_prev = _slot_matrix(seq, n)
    classes = built.stage(n).classes
    Q = len(set(classes))
    table = [(classes[i], FWD) for i in range(s_prev)] + \
            [(classes[i], REV) for i in range(s_prev)]
    return slots, s, s_prev, table, Q


def check_T5(built: BuiltSequence, n: int, mu: Fraction) -> SpecEntry:
    seq = built.seq
    slots, s, s_prev, table, Q = _class_rows(built, n)
    k = slots.shape[1]
    eps = Fraction(seq.plan.stage(n).eps_classic)
    target = Fraction(1, Q)
    worst, witness = Fraction(0), {}
    t_max = int((1 - eps) * k)
    classes_sides = sorted(set(table))
    cid = np.array([classes_sides.index(table[x])
                    for x in range(2 * s_prev)])
    nc = len(classes_sides)
    for w0 in range(s):                       # prewords, even
        v_slots = slots[w0]
        for w1 in range(2 * s):               # w1 or its reverse
            u_cids = cid[slots[w1]]
            want_side = REV if w1 >= s else FWD
            for t in range(1, t_max + 1):
                for v in range(s_prev):       # v ranges over even n-words
                    for name, J, U in (
                            ("T5a", np.flatnonzero(v_slots[:k - t] == v),
                             u_cids[t:]),
                            ("T5b", np.flatnonzero(v_slots[t:] == v),
                             u_cids[:k - t])):
                        if len(J) == 0:
                            continue
                        counts = np.bincount(U[J], minlength=nc)
                        for ci, (C, side) in enumerate(classes_sides):
                            if side != want_side:
                                continue
                            dev = abs(Fraction(int(counts[ci]), len(J))
                                      - target)
                            if dev > worst:
                                worst = dev
                                witness = {"axiom": name, "w0": w0,
                                           "w1": w1, "t": t, "v": v,
                                           "class": C}
    status = "pass" if worst < mu else "fail"
    return SpecEntry("T5", status, worst, mu, witness)


def check_T6(built: BuiltSequence, n: int, mu: Fraction) -> SpecEntry:
    seq = built.seq
    slots, s, s_prev, table, Q = _class_rows(built, n)
    action = built.actions[n] if built.actions else None
    if action is None:
        return SpecEntry("T6", "not-checked")
    k = slots.shape[1]
    eps = Fraction(seq.plan.stage(n).eps_classic)
    G = len(action.elements())
    target = min(Fraction(1), Fraction(G, Q))
    orbit_pairs = {(cu, el[cu]) for el in action.elements() for cu in el}
    rel_table = np.zeros((2 * s_prev, 2 * s_prev), dtype=bool)
    for a in range(2 * s_prev):
        for b in range(2 * s_prev):
            rel_table[a, b] = (table[a], table[b]) in orbit_pairs
    worst, witness = Fraction(0), {}
    t_max = int((1 - eps) * k)
    j_lo = max(1, ceil(eps * k))
    tf = float(target)
    for w0 in range(s):
        for w1 in range(s):
            for t in range(1, t_max + 1):
                if k - t < j_lo:
                    continue
                cum = np.cumsum(rel_table[slots[w0, :k - t],
                                          slots[w1, t:]])[j_lo - 1:]
                j0s = np.arange(j_lo, k - t + 1)
                devs = np.abs(cum / j0s - tf)
                c = int(np.argmax(devs))
                dev = abs(Fraction(int(cum[c]), int(j0s[c])) - target)
                if dev > worst:
                    worst = dev
                    witness = {"w0": w0, "w1": w1, "t": t,
                               "j0": int(j0s[c])}
    status = "pass" if worst < mu else "fail"
    return SpecEntry("T6", status, worst, mu, witness)


def check_T7(built: BuiltSequence, n: int, mu: Fraction) -> SpecEntry:
    slots, s, s_prev, table, Q = _class_rows(built, n)
    action = built.actions[n + 1] if built.actions else None
    cur = built.stage(n + 1)
    k = slots.shape[1]
    target = Fraction(1, Q)
    worst, witness = Fraction(0), {}
    classes_sides = sorted(set(table))
    for w0 in range(s):
        for w1 in range(2 * s):
            if cur.classes is not None and action is not None:
                cu = (cur.classes[w0], FWD)
                cv = (cur.classes[w1 % s], REV if w1 >= s else FWD)
                if _orbit_element(action, cv, cu) is not None:
                    continue                  # hypothesis: outside the orbit
            want_side = REV if w1 >= s else FWD
            for v in range(s_prev):
                J = np.flatnonzero(slots[w0] == v)
                if len(J) == 0:
                    continue
                for C, side in classes_sides:
                    if side != want_side:
                        continue
                    hits = sum(1 for x in slots[w1][J]
                               if table[x] == (C, side))
                    dev = abs(Fraction(int(hits), len(J)) - target)
                    if dev > worst:
                        worst = dev
                        witness = {"w0": w0, "w1": w1, "v": v, "class": C}
    status = "pass" if worst < mu else "fail"
    return SpecEntry("T7", status, worst, mu, witness)


def check_timing(built: BuiltSequence, level: int,
                 tolerances: ToleranceProfile | None = None,
                 gamma: GammaCascade | None = None) -> SpecReport:
    """T1-T3 structurally, T4 via exact segment distances, T5-T7 as exact
    frequency counts, on a circular built sequence."""
    tol = tolerances or desk_tolerances()
    circ = built if built.seq.flavor == CIRCULAR else lift_build(built)
    seq = circ.seq
    gamma = gamma or gamma_cascade(seq.plan, max(2, level + 1))
    entries = []
    M1 = circ.scaffold.M(1)
    for n in range(min(level, seq.depth - 1)):
        # T1: propagation; the class-founding stage is exempt
        e = _check_Q5(seq, n) if M1 is not None and n + 1 > M1 \
            else SpecEntry("T1", "not-checked")
        entries.append(replace(e, spec_id=f"T1@{n}"))
        # T2/T3: freeness and parity of the stage action
        act = circ.actions[n + 1] if circ.actions else None
        entries.append(replace(_check_A7(act), spec_id=f"T2@{n}"))
        entries.append(replace(_check_A8(act), spec_id=f"T3@{n}"))
        entries.append(replace(check_T4(circ, n + 1, gamma.gamma(n + 1)),
                               spec_id=f"T4@{n + 1}"))
        mu = tol.mu_at(n)
        entries.append(replace(check_T5(circ, n, mu), spec_id=f"T5@{n}"))
        entries.append(replace(check_T6(circ, n, mu), spec_id=f"T6@{n}"))
        entries.append(replace(check_T7(circ, n, mu), spec_id=f"T7@{n}"))
    return SpecReport(tuple(entries))


# ---------------------------------------------------------------------------
# the builder

def _search_separated_pair(rng, plan, scaffold, gamma, k, steps=2500,
                           restarts=8):
    """Hill-climb a pair of balanced digit words whose circular lifts stay
    gamma-separated on every long initial/tail/cross segment, including
    against their own reversals."""
    from .systems import circular_sequence

    def t4_margin(d0, d1):
        seq = circular_sequence(plan, "01", [[tuple(d0), tuple(d1)]])
        seq = replace(seq, stages=(seq.stages[0],
                                   replace(seq.stages[1], classes=(0, 1))))
        e = check_T4(BuiltSequence(seq, (None, None), scaffold), 1, gamma)
        return e.worst_deviation

    for _ in range(restarts):
        d0 = [0] * (k // 2) + [1] * (k // 2)
        d1 = list(d0)
        rng.shuffle(d0)
        rng.shuffle(d1)
        m = t4_margin(d0, d1)
        for _ in range(steps):
            if m >= gamma:
                return tuple(d0), tuple(d1)
            w = rng.choice((d0, d1))
            i = rng.choice([x for x in range(k) if w[x] == 0])
            j = rng.choice([x for x in range(k) if w[x] == 1])
            w[i], w[j] = 1, 0
            m2 = t4_margin(d0, d1)
            if m2 >= m:
                m = m2
            else:
                w[i], w[j] = 0, 1
        if m >= gamma:
            return tuple(d0), tuple(d1)
    raise BuildError(f"no gamma-separated digit pair found (best margin "
                     f"{float(m):.4f} < {float(gamma):.4f})")


def _sample_stage(rng, plan, n, prev_size, prev_classes, s_next, Q_next,
                  prefix_lock: bool, style: str):
    """Compositions and classes for stage n+1.

    Each class fixes a slot pattern over previous-stage classes; members
    fill the slots with class members so that every previous word appears
    exactly k/prev_size times.  With prefix_lock, members of a class agree
    on the leading slots (the class-founding stage)."""
    k = plan.stage(n).k
    if k % prev_size:
        raise BuildError(f"k_{n} = {k} not divisible by |W_{n}| = "
                         f"{prev_size}")
    Q_prev = len(set(prev_classes))
    if k % Q_prev:
        raise BuildError(f"k_{n} not divisible by the {Q_prev} classes")
    C_next, rem = divmod(s_next, Q_next)
    if rem:
        raise BuildError("class count must divide the family size")
    members = {}
    for i, c in enumerate(prev_classes):
        members.setdefault(c, []).append(i)
    per_word = k // prev_size

    def fill(pattern):
        # arrange members under the class pattern with exact multiplicity
        slots = [None] * k
        for c, mem in members.items():
            pos = [i for i, pc in enumerate(pattern) if pc == c]
            pool = [w for w in mem for _ in range(per_word)]
            rng.shuffle(pool)
            if len(pool) != len(pos):
                raise BuildError("pattern does not balance multiplicities")
            for p, w in zip(pos, pool):
                slots[p] = w
        return tuple(slots)

    eps = Fraction(plan.stage(n).eps_lunate)
    lock = ceil((1 - eps) * k) if prefix_lock else 0
    for _ in range(256):
        comps, classes = [], []
        base = [c for c in sorted(members) for _ in range(k // Q_prev)]
        rng.shuffle(base)
        for ci in range(Q_next):
            # class patterns form one orbit under class shifts, so the
            # canonical generators keep the family's class keys closed
            pattern = [(c + ci) % Q_prev for c in base]
            first = fill(pattern)
            for mi in range(C_next):
                if mi == 0:
                    slots = first
                else:
                    # keep the locked head; shuffle tail words within the
                    # slots of each class so pattern and multiplicity hold
                    tail = list(first[lock:])
                    for c in set(pattern[lock:]):
                        pos = [i for i in range(len(tail))
                               if pattern[lock + i] == c]
                        vals = [tail[i] for i in pos]
                        rng.shuffle(vals)
                        for p, w in zip(pos, vals):
                            tail[p] = w
                    slots = first[:lock] + tuple(tail)
                comps.append(slots)
                classes.append(ci)
        if len(set(comps)) == len(comps):
            return tuple(comps), tuple(classes)
    raise BuildError(f"could not sample {s_next} distinct stage-{n + 1} "
                     f"words")


def build_words(tp, plan, seed: int, level: int,
                tolerances: ToleranceProfile | None = None,
                retry_budget: int = 32, style: str = "random",
                gate=True) -> BuiltSequence:
    """Seeded, verification-gated construction of an odometer sequence
    with class and action data derived from the tree prefix."""
    scaffold = tp if isinstance(tp, GroupScaffold) else groups_from_tree(tp)
    tol = tolerances or desk_tolerances()
    best = None
    for attempt in range(retry_budget):
        # the scaffold is part of the consumed input, so it salts the
        # entropy stream: builds differ whenever the tree data differs
        rng = random.Random(repr((seed, attempt, scaffold.nodes)))
        built = _build_once(rng, scaffold, plan, level, style)
        report = check_specs(built, tol)
        built = replace(built, report=report)
        if report.ok() or not gate:
            return built
        if best is None or \
                len(report.failures()) < len(best.report.failures()):
            best = built
    raise BuildError(f"retry budget {retry_budget} exhausted", best.report)


def _build_once(rng, scaffold, plan, level, style):
    M1 = scaffold.M(1)
    comps_by_stage = []
    classes_by_stage = [(0, 0)]       # stage 0: one class over {1, 0}
    prev_size = 2
    prev_classes = (0, 0)
    for n in range(level):
        s_next = plan.s(n + 1)
        Q_next = 2 ** plan.stage(min(n + 1, plan.depth - 1)).e \
            if (M1 is not None and n + 1 >= M1) else 1
        Q_next = min(Q_next, s_next)
        if style == "separated" and n == 0:
            gamma = gamma_cascade(plan, max(1, level)).gamma(1)
            comps = _search_separated_pair(rng, plan, scaffold, gamma,
                                           plan.stage(0).k)
            classes = (0, 1)
        else:
            comps, classes = _sample_stage(
                rng, plan, n, prev_size, prev_classes, s_next, Q_next,
                prefix_lock=(M1 is not None and n + 1 == M1), style=style)
        comps_by_stage.append(comps)
        classes_by_stage.append(classes)
        prev_size, prev_classes = len(comps), classes
    seq = odometer_sequence(plan, "01", comps_by_stage)
    seq = replace(seq, stages=tuple(
        replace(st, classes=tuple(cl))
        for st, cl in zip(seq.stages, classes_by_stage)))
    actions = _derive_actions(scaffold, seq, level)
    return BuiltSequence(seq, actions, scaffold)


def _shift_swap_generator(nclasses: int, j: int) -> dict:
    """Involutive side-swapping generator shifting class ids by j."""
    g = {}
    for c in range(nclasses):
        g[(c, FWD)] = ((c + j) % nclasses, REV)
        g[(c, REV)] = ((c - j) % nclasses, FWD)
    return g


def _derive_actions(scaffold, seq, level):
    """Level-1 group actions per stage: canonical side-swapping
    generators, one per discovered length-1 node, with later stages given
    by the skew-diagonal extension.  Generator count past the class count
    duplicates patterns (the desk surrogate for a larger free product)."""
    M1 = scaffold.M(1)
    actions = [None]
    act = None
    for n in range(1, level + 1):
        fam = seq.stage(n)
        nclasses = fam.num_classes()
        count = scaffold.generator_count(n, 1)
        if M1 is None or n < M1 or count == 0:
            actions.append(None)
            continue
        if n == M1 or act is None:
            act = None
            gens = ()
        else:
            act = skew_diagonal_extend(act, fam.compositions,
                                       seq.stage(n - 1).classes)
            gens = act.generators
        while len(gens) < count:
            gens = gens + (_shift_swap_generator(
                nclasses, len(gens) % nclasses),)
        act = GroupActionTable(nclasses, gens)
        actions.append(act)
    return tuple(actions)
