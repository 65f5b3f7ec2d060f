"""The circular interleaving operator, its mirror, and the parser.

apply_C produces the stage word b^(q-j_i) w_j^(l-1) e^(j_i) taken over
i < q, j < k; apply_Cr is the mirrored product with j_{i+1} runs and
reversed argument order.  parse_circular inverts apply_C and exposes the
subscale anatomy (2-subsections, 1-subsections, 0-subsections, boundary).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .coefficients import dynamical_index
from .words import (Literal, Power, Word, CircularNode, ReversedNode,
                    SYMBOL_B, SYMBOL_E)


class CircularParseError(ValueError):
    def __init__(self, position, expected, found, message=""):
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(
            message or f"not a circular word: at position {position} "
                       f"expected {expected!r}, found {found!r}")


def stage_tuple(stage):
    k, l, p, q = stage
    if k < 1 or l < 2 or q < 1:
        raise ValueError(f"bad stage {stage}")
    return k, l, p, q


def apply_C(preword, stage) -> CircularNode:
    """Interleave a k-tuple of length-q words at stage (k, l, p, q)."""
    k, l, p, q = stage_tuple(stage)
    children = tuple(w if isinstance(w, Word) else Literal(w) for w in preword)
    if len(children) != k:
        raise ValueError(f"preword arity {len(children)} != k = {k}")
    return CircularNode(children, k=k, l=l, p=p, q=q)


@dataclass(frozen=True, eq=False)
class CircularRNode(Word):
    """Image of the mirrored operator: product over i < q, j < k of
    e^(q-j_{i+1}) w_{k-j-1}^(l-1) b^(j_{i+1}), with j_q taken as 0."""

    children: tuple
    k: int
    l: int
    p: int
    q: int

    def __post_init__(self):
        if len(self.children) != self.k:
            raise ValueError(f"need {self.k} children")
        for ch in self.children:
            if ch.length != self.q:
                raise ValueError("child length != q")

    @property
    def length(self) -> int:
        return self.k * self.l * self.q * self.q

    def _erun(self, i: int) -> int:
        # row i carries e^(q-j_{i+1}) ... b^(j_{i+1}); at the last row the
        # exponent q-j_q is read as j_{q-1-i} = 0 when q > 1, which is what
        # makes this the exact mirror of the forward operator.  At q = 1 the
        # substitution degenerates and j_q = 0 is applied literally.
        if self.q == 1:
            return 1
        return dynamical_index(self.p, self.q, self.q - 1 - i)

    def _extract(self, a, b):
        if a == b:
            return ""
        sec_len = self.l * self.q
        parts = []
        for t in range(a // sec_len, (b - 1) // sec_len + 1):
            base = t * sec_len
            lo, hi = max(a - base, 0), min(b - base, sec_len)
            i, j = divmod(t, self.k)
            erun = self._erun(i)
            child = self.children[self.k - j - 1]
            if lo < erun:
                parts.append(SYMBOL_E * (min(hi, erun) - lo))
            plo, phi = max(lo - erun, 0), min(hi - erun, (self.l - 1) * self.q)
            if phi > plo:
                parts.append(Power(child, self.l - 1)._extract(plo, phi))
            blo = max(lo - erun - (self.l - 1) * self.q, 0)
            bhi = hi - erun - (self.l - 1) * self.q
            if bhi > blo:
                parts.append(SYMBOL_B * (bhi - blo))
        return "".join(parts)


def apply_Cr(preword, stage) -> CircularRNode:
    k, l, p, q = stage_tuple(stage)
    children = tuple(w if isinstance(w, Word) else Literal(w) for w in preword)
    if len(children) != k:
        raise ValueError(f"preword arity {len(children)} != k = {k}")
    return CircularRNode(children, k=k, l=l, p=p, q=q)


def reversal_identity_applies(stage) -> bool:
    """rev(C(w)) = Cr(rev w_0, ..., rev w_{k-1}) is derived via
    q - j_i = j_{q-i}, which degenerates at q = 1."""
    return stage_tuple(stage)[3] > 1


# ---------------------------------------------------------------------------
# anatomy

@dataclass(frozen=True)
class SubscaleDecomposition:
    k: int
    l: int
    p: int
    q: int
    preword: tuple          # k recovered words of length q
    j: tuple                # j_i for i in [0, q)

    @property
    def length(self) -> int:
        return self.k * self.l * self.q * self.q

    @property
    def section_length(self) -> int:
        return self.l * self.q

    @property
    def boundary_count(self) -> int:
        # each of the k*q 1-subsections carries exactly q spacer symbols
        return self.k * self.q * self.q

    @property
    def boundary_fraction(self) -> Fraction:
        return Fraction(1, self.l)

    def section_of(self, x: int):
        """(i, j, part, local) for position x; part in {'b','w','e'},
        local = offset within the run or within the 0-subsection power."""
        t, off = divmod(x, self.section_length)
        i, j = divmod(t, self.k)
        ji = self.j[i]
        brun = self.q - ji
        if off < brun:
            return i, j, "b", off
        off -= brun
        if off < (self.l - 1) * self.q:
            return i, j, "w", off
        return i, j, "e", off - (self.l - 1) * self.q

    def is_boundary(self, x: int) -> bool:
        return self.section_of(x)[2] in ("b", "e")

    def subword_starts(self):
        """Start positions of the (l-1) aligned n-subword copies in each
        1-subsection, in order."""
        sec = self.section_length
        for t in range(self.k * self.q):
            i = t // self.k
            base = t * sec + (self.q - self.j[i])
            for m in range(self.l - 1):
                yield base + m * self.q

    def near_boundary_count(self, radius: int | None = None) -> int:
        """Exact count of positions within ``radius`` (default q) of a
        boundary position, boundary included."""
        radius = self.q if radius is None else radius
        total = 0
        runs = []  # spacer runs as (start, end)
        sec = self.section_length
        for t in range(self.k * self.q):
            i = t // self.k
            ji = self.j[i]
            base = t * sec
            if self.q - ji:
                runs.append((base, base + self.q - ji))
            if ji:
                runs.append((base + sec - ji, base + sec))
        merged = []
        for a, b in runs:
            a, b = max(0, a - radius), min(self.length, b + radius)
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        for a, b in merged:
            total += b - a
        return total


def parse_circular(w, stage) -> SubscaleDecomposition:
    """Invert apply_C, recovering the preword, or diagnose the first
    divergent position.  Structural inputs are taken apart by node
    shape; literals are scanned."""
    k, l, p, q = stage_tuple(stage)
    js = tuple(dynamical_index(p, q, i) for i in range(q))
    if isinstance(w, CircularNode) and (w.k, w.l, w.p, w.q) == (k, l, p, q):
        return SubscaleDecomposition(k, l, p, q, w.children, js)
    text = w.materialize() if isinstance(w, Word) else w
    if text is None:
        raise ValueError("word too large to scan; pass the structural node")
    if len(text) != k * l * q * q:
        raise CircularParseError(len(text), k * l * q * q, None,
                                 f"length {len(text)} != k*l*q^2")
    children: list[str | None] = [None] * k
    pos = 0
    for i in range(q):
        ji = js[i]
        for j in range(k):
            for _ in range(q - ji):
                if text[pos] != SYMBOL_B:
                    raise CircularParseError(pos, SYMBOL_B, text[pos])
                pos += 1
            for copy in range(l - 1):
                piece = text[pos:pos + q]
                if children[j] is None:
                    children[j] = piece
                elif piece != children[j]:
                    for d in range(q):
                        if piece[d] != children[j][d]:
                            raise CircularParseError(pos + d, children[j][d],
                                                     piece[d])
                pos += q
            for _ in range(ji):
                if text[pos] != SYMBOL_E:
                    raise CircularParseError(pos, SYMBOL_E, text[pos])
                pos += 1
    return SubscaleDecomposition(k, l, p, q,
                                 tuple(Literal(c) for c in children), js)


# ---------------------------------------------------------------------------
# cross alignment

@dataclass(frozen=True)
class AlignmentPiece:
    key: int          # 2-subsection index offset i_v - i_u
    shift_mod_q: int  # offset of aligned copies within v's subword grid
    count: int
    first_u_start: int
    last_u_start: int


@dataclass(frozen=True)
class AlignmentReport:
    shift: int
    pieces: tuple
    even_shift: int | None    # shift on the lower 2-subsection key
    odd_shift: int | None     # shift on the upper key
    relation_holds: bool | None   # even = odd - j_1 (mod q)
    trivial_left: bool
    trivial_right: bool
    boundary_hits: int
    checked: bool             # False when v is reversed (relation n/a)


def cross_alignment(u, v, shift: int) -> AlignmentReport:
    """Classify how u's aligned n-subword copies land inside v when v is
    displaced by ``shift`` (u[x] against v[x - shift])."""
    du = parse_circular(u, (u.k, u.l, u.p, u.q)) if isinstance(u, CircularNode) \
        else u if isinstance(u, SubscaleDecomposition) else None
    if du is None:
        raise ValueError("u must be a circular node or decomposition")
    reversed_v = isinstance(v, ReversedNode)
    core = v.child if reversed_v else v
    dv = parse_circular(core, (core.k, core.l, core.p, core.q)) \
        if isinstance(core, CircularNode) else core
    if not isinstance(dv, SubscaleDecomposition):
        raise ValueError("v must be a circular node or decomposition")
    if (du.k, du.l, du.q) != (dv.k, dv.l, dv.q):
        raise ValueError("u and v must share a stage")
    q, k, l = du.q, du.k, du.l
    L = du.length
    if abs(shift) >= L:
        raise ValueError("|shift| must be below the word length")
    j1 = du.j[1] if q > 1 else 0
    groups: dict[tuple, list] = {}
    boundary_hits = 0
    for a in du.subword_starts():
        y = a - shift
        if y < 0 or y + q > L:
            continue
        yy = (L - q - y) if reversed_v else y
        t_v, off = divmod(yy, dv.section_length)
        i_v, _ = divmod(t_v, k)
        brun = q - dv.j[i_v]
        if not (brun <= off and off + q <= brun + (l - 1) * q):
            boundary_hits += 1
            continue
        d = (off - brun) % q
        if reversed_v:
            d = (q - d) % q
        i_u = (a // du.section_length) // k
        key = i_v - i_u
        groups.setdefault((key, d), []).append(a)
    pieces = tuple(
        AlignmentPiece(key=key, shift_mod_q=d, count=len(starts),
                       first_u_start=min(starts), last_u_start=max(starts))
        for (key, d), starts in sorted(groups.items()))
    keys = sorted({p.key for p in pieces})
    even = odd = None
    relation = None
    if keys:
        lo = keys[0]
        evens = {p.shift_mod_q for p in pieces if p.key == lo}
        odds = {p.shift_mod_q for p in pieces if p.key == lo + 1}
        even = min(evens) if evens else None
        odd = min(odds) if odds else None
        if not reversed_v:
            ok = len(keys) <= 2 and (len(keys) < 2 or keys[1] == lo + 1)
            ok = ok and len(evens) <= 1 and len(odds) <= 1
            if ok and even is not None and odd is not None:
                ok = (even - (odd - j1)) % q == 0
            relation = ok
    return AlignmentReport(
        shift=shift, pieces=pieces, even_shift=even, odd_shift=odd,
        relation_holds=relation,
        trivial_left=bool(keys) and len(keys) == 1,
        trivial_right=not keys,
        boundary_hits=boundary_hits,
        checked=not reversed_v)
