"""Persistent homology: standard reduction oracle and the matching-driven
incremental pipeline.

The incremental path grows a gradient field alongside the filtration.  A
new cell's flow boundary is computed against the current field; a zero
column (mod 2) makes the cell positive and critical, otherwise the cell is
negative and dies with the youngest critical cell in its reduced column.
When that partner is joined by a single gradient path and neither endpoint
appears in a stored column, the pair is cancelled outright by reversing
the path; otherwise the reduced column is stored and consulted by later
arrivals.  Both branches record the same pairing; cancellation only keeps
the critical set small.  At a configurable cadence a maintenance sweep
retries deferred cancellations that have become safe.
"""

from __future__ import annotations

from typing import Optional

from dataclasses import dataclass

from .complexes import ComplexError, SimplicialComplex
from .morse import flow_cycle_witness


class FiltrationError(ValueError):
    pass


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth_index: int
    death_index: Optional[int]
    birth_value: float
    death_value: Optional[float]
    birth_vertices: tuple[int, ...]
    death_vertices: Optional[tuple[int, ...]]

    def key(self) -> tuple:
        return (self.dim, self.birth_index,
                -1 if self.death_index is None else self.death_index)


@dataclass
class Filtration:
    complex: SimplicialComplex
    order: list[int]            # cell ids in arrival order
    values: list[float]         # filtration value per arrival slot

    def __post_init__(self):
        pos = {c: i for i, c in enumerate(self.order)}
        if len(pos) != len(self.complex):
            raise FiltrationError("order must cover every cell exactly once")
        for i, cid in enumerate(self.order):
            for fid in self.complex.facets_of[cid]:
                if pos[fid] > i:
                    raise FiltrationError(f"face {fid} arrives after coface {cid}")
                if self.values[pos[fid]] > self.values[i]:
                    raise FiltrationError(
                        f"value decreases from face {fid} to coface {cid}")

    def __len__(self) -> int:
        return len(self.order)

    @classmethod
    def from_value_map(cls, K: SimplicialComplex,
                       value_of: dict[int, float]) -> "Filtration":
        order = sorted(K.simplices,
                       key=lambda c: (value_of[c], K.simplices[c].dim,
                                      K.simplices[c].vertices))
        return cls(K, order, [value_of[c] for c in order])


def parse_filtration(text: str) -> Filtration:
    """Lines of ``value v0 v1 ...``; ties break by dimension then vertices."""
    entries: list[tuple[float, tuple[int, ...]]] = []
    seen: dict[tuple[int, ...], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            value = float(toks[0])
            verts = tuple(sorted(int(t) for t in toks[1:]))
        except (ValueError, IndexError) as exc:
            raise FiltrationError(f"line {lineno}: {exc}")
        if not verts:
            raise FiltrationError(f"line {lineno}: no vertices")
        if verts in seen:
            raise FiltrationError(
                f"line {lineno}: duplicate simplex {verts} "
                f"(first at line {seen[verts]})")
        seen[verts] = lineno
        entries.append((value, verts))
    if not entries:
        raise FiltrationError("empty filtration")
    try:
        K = SimplicialComplex([v for _, v in entries])
    except ComplexError as exc:
        raise FiltrationError(str(exc))
    if len(K) != len(entries):
        raise FiltrationError(
            f"{len(K) - len(entries)} faces are missing from the listing")
    value_of = {K.id_of(v): val for val, v in entries}
    return Filtration.from_value_map(K, value_of)


# -- standard reduction oracle ---------------------------------------------

def persist_naive(F: Filtration) -> list[PersistencePair]:
    """Column reduction over Z2 of the full simplicial filtration."""
    K = F.complex
    pos = {c: i for i, c in enumerate(F.order)}
    low_of: dict[int, int] = {}       # low row -> column slot
    columns: dict[int, set[int]] = {}
    deaths: dict[int, int] = {}       # birth slot -> death slot
    for j, cid in enumerate(F.order):
        col = {pos[f] for f in K.facets_of[cid]}
        while col:
            low = max(col)
            if low not in low_of:
                break
            col ^= columns[low_of[low]]
        if col:
            low = max(col)
            low_of[low] = j
            columns[j] = col
            deaths[low] = j
    return _pairs_from_deaths(F, deaths)


def _pairs_from_deaths(F: Filtration, deaths: dict[int, int],
                       ) -> list[PersistencePair]:
    K = F.complex
    dead_deaths = set(deaths.values())
    pairs = []
    for i, cid in enumerate(F.order):
        if i in dead_deaths:
            continue
        s = K.simplices[cid]
        if i in deaths:
            j = deaths[i]
            d_cid = F.order[j]
            pairs.append(PersistencePair(
                dim=s.dim, birth_index=i, death_index=j,
                birth_value=F.values[i], death_value=F.values[j],
                birth_vertices=s.vertices,
                death_vertices=K.simplices[d_cid].vertices))
        else:
            pairs.append(PersistencePair(
                dim=s.dim, birth_index=i, death_index=None,
                birth_value=F.values[i], death_value=None,
                birth_vertices=s.vertices, death_vertices=None))
    pairs.sort(key=lambda p: p.key())
    return pairs


# -- incremental matching-driven pipeline -----------------------------------

class _IncrementalState:
    """Field plus reduction bookkeeping shared by the arrival loop."""

    def __init__(self, K: SimplicialComplex, order: list[int]):
        self.K = K
        self.order = order
        self.pair_up: dict[int, int] = {}
        self.present: set[int] = set()
        self.arrival: dict[int, int] = {}
        self.critical: set[int] = set()          # critical cells of the field
        self.stored: dict[int, set[int]] = {}    # low slot -> reduced column
        self.deferred: list[tuple[int, int]] = []  # (partner cell, dying cell)
        self.deaths: dict[int, int] = {}

    def flow_mod2(self, cid: int, memo: dict[int, frozenset[int]]) -> frozenset[int]:
        """Flow chain of one cell over critical arrival slots, mod 2."""
        if cid in memo:
            return memo[cid]
        beta = self.pair_up.get(cid)
        if beta is not None:
            sign_source = self.flow_mod2(beta, memo)
            memo[cid] = sign_source
            return sign_source
        acc: set[int] = set()
        for tau in self.K.facets_of[cid]:
            if tau not in self.present:
                continue
            if tau in self.critical:
                acc ^= {self.arrival[tau]}
            elif tau in self.pair_up and self.pair_up[tau] != cid:
                acc ^= self.flow_mod2(tau, memo)
        out = frozenset(acc)
        memo[cid] = out
        return out

    def slot_in_stored(self, slot: int) -> bool:
        return any(slot in col for col in self.stored.values())

    def try_cancel(self, tau: int, sigma: int) -> bool:
        """Reverse the unique present gradient path from sigma's boundary to tau."""
        paths = self._present_paths(sigma, tau)
        if len(paths) != 1:
            return False
        path = paths[0]
        pair_up = dict(self.pair_up)
        faces = path[0::2]
        cofaces = path[1::2]
        for a in faces[:-1]:
            del pair_up[a]
        pair_up[faces[0]] = sigma
        for i, b in enumerate(cofaces):
            pair_up[faces[i + 1]] = b
        if flow_cycle_witness(self.K, pair_up, self.present) is not None:
            return False
        self.pair_up = pair_up
        self.critical.discard(tau)
        self.critical.discard(sigma)
        return True

    def _present_paths(self, sigma: int, target: int) -> list[list[int]]:
        out: list[list[int]] = []

        def walk(cell: int, trail: list[int]):
            if len(out) > 1:
                return
            if cell == target:
                out.append(trail + [cell])
                return
            beta = self.pair_up.get(cell)
            if beta is None or beta == sigma:
                return
            for nxt in self.K.facets_of[beta]:
                if nxt != cell and nxt in self.present:
                    walk(nxt, trail + [cell, beta])

        for a0 in self.K.facets_of[sigma]:
            if a0 in self.present:
                walk(a0, [])
        return out


def persist_incremental(F: Filtration, reopt_every: int = 16,
                        ) -> list[PersistencePair]:
    K = F.complex
    st = _IncrementalState(K, list(F.order))
    negatives_seen = 0

    for slot, cid in enumerate(F.order):
        st.present.add(cid)
        st.arrival[cid] = slot
        memo: dict[int, frozenset[int]] = {}
        raw = set(st.flow_mod2(cid, memo))

        col = set(raw)
        while col:
            low = max(col)
            if low not in st.stored:
                break
            col ^= st.stored[low]

        if not col:
            st.critical.add(cid)
            continue

        low = max(col)
        partner_cell = F.order[low]
        st.deaths[low] = slot
        negatives_seen += 1

        cancelled = False
        if low in raw and not st.slot_in_stored(low):
            cancelled = st.try_cancel(partner_cell, cid)
        if not cancelled:
            st.stored[low] = set(col)
            st.critical.add(cid)
            st.deferred.append((partner_cell, cid))

        if reopt_every and negatives_seen % reopt_every == 0:
            _maintenance_sweep(st)

    return _pairs_from_deaths(F, st.deaths)


def _maintenance_sweep(st: _IncrementalState):
    """Retry deferred cancellations whose endpoints no stored column touches.

    Popping the pair's own stored column is safe: its key leaves the basis
    with the cancellation, so no later column can need it.
    """
    remaining = []
    for tau, sigma in st.deferred:
        low = st.arrival[tau]
        slot_sigma = st.arrival[sigma]
        touched = any(
            (low in col or slot_sigma in col)
            for key, col in st.stored.items() if key != low)
        own = st.stored.get(low)
        own_touches_self = own is not None and slot_sigma in own
        if touched or own_touches_self:
            remaining.append((tau, sigma))
            continue
        if st.try_cancel(tau, sigma):
            st.stored.pop(low, None)
        else:
            remaining.append((tau, sigma))
    st.deferred = remaining


# -- diagram output ----------------------------------------------------------

def emit_diagram(pairs: list[PersistencePair], fmt: str = "text",
                 size: int = 360) -> str:
    if fmt == "text":
        lines = [
            f"{p.dim} {p.birth_value:g} "
            f"{'inf' if p.death_value is None else format(p.death_value, 'g')}"
            for p in sorted(pairs, key=lambda p: p.key())
        ]
        return "\n".join(lines) + ("\n" if lines else "")
    if fmt != "svg":
        raise ValueError(f"unknown diagram format {fmt!r}")

    finite = [p for p in pairs if p.death_value is not None]
    values = [p.birth_value for p in pairs] + [p.death_value for p in finite]
    lo = min(values, default=0.0)
    hi = max(values, default=1.0)
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.08 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sx(v: float) -> float:
        return (v - lo) / (hi - lo) * size

    def sy(v: float) -> float:
        return size - sx(v)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    bits = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{size}" x2="{size}" y2="0" stroke="#999" '
        'stroke-dasharray="4 3"/>',
    ]
    for p in sorted(pairs, key=lambda p: p.key()):
        color = colors[p.dim % len(colors)]
        x = sx(p.birth_value)
        if p.death_value is None:
            bits.append(f'<circle cx="{x:.2f}" cy="6" r="4" fill="none" '
                        f'stroke="{color}"/>')
        else:
            bits.append(f'<circle cx="{x:.2f}" cy="{sy(p.death_value):.2f}" '
                        f'r="3.5" fill="{color}"/>')
    bits.append("</svg>")
    return "\n".join(bits) + "\n"
