"""Gradient vector fields, the induced boundary operator, cancellations.

The boundary operator is computed by one ascending dynamic-programming
pass: cells are processed in an order that puts every matched coface
before its face and every face before its unmatched cofaces, so each
cell's outgoing flow is a signed combination of already-known flows.
Each up-then-down hop through a matched pair contributes the factor
-<bd(beta), entry> * <bd(beta), exit>, which is what makes the square of
the operator vanish over the integers.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .complexes import SimplicialComplex


class MorseError(ValueError):
    pass


class CancelError(MorseError):
    """Cancellation preconditions not met; message names the failing clause."""


@dataclass
class DGVF:
    """Acyclic matching: pair maps face -> coface and back, plus criticals."""

    complex: SimplicialComplex
    pair_up: dict[int, int] = field(default_factory=dict)    # face -> coface
    pair_down: dict[int, int] = field(default_factory=dict)  # coface -> face

    def __post_init__(self):
        self.pair_down = {b: a for a, b in self.pair_up.items()}

    @property
    def pairs(self) -> set[tuple[int, int]]:
        return set(self.pair_up.items())

    def is_matched(self, cid: int) -> bool:
        return cid in self.pair_up or cid in self.pair_down

    def critical_cells(self) -> list[int]:
        return [cid for cid in self.complex.simplices if not self.is_matched(cid)]

    def critical_by_dim(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for cid in self.critical_cells():
            out.setdefault(self.complex.simplices[cid].dim, []).append(cid)
        return out

    def morse_numbers(self) -> list[int]:
        counts = [0] * (self.complex.max_dim + 1)
        for cid in self.critical_cells():
            counts[self.complex.simplices[cid].dim] += 1
        return counts

    def copy(self) -> "DGVF":
        return DGVF(self.complex, dict(self.pair_up))

    def serialize(self) -> str:
        lines = [f"{a} {b}" for a, b in sorted(self.pair_up.items())]
        return "\n".join(lines) + ("\n" if lines else "")


def flow_cycle_witness(K: SimplicialComplex, pair_up: dict[int, int],
                       present: Optional[set[int]] = None) -> Optional[list[int]]:
    """Directed cycle of the matching-reoriented incidence digraph, if any."""
    cells = present if present is not None else set(K.simplices)
    adj: dict[int, list[int]] = {c: [] for c in cells}
    for cid in cells:
        for fid in K.facets_of[cid]:
            if fid not in cells:
                continue
            if pair_up.get(fid) == cid:
                adj[fid].append(cid)   # matched: points up
            else:
                adj[cid].append(fid)   # default: points down
    color: dict[int, int] = {}
    trail: list[int] = []

    def visit(u: int) -> Optional[list[int]]:
        color[u] = 1
        trail.append(u)
        for w in adj[u]:
            if color.get(w) == 1:
                return trail[trail.index(w):] + [w]
            if color.get(w) is None:
                got = visit(w)
                if got:
                    return got
        color[u] = 2
        trail.pop()
        return None

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10000 + len(cells)))
    try:
        for u in sorted(cells):
            if color.get(u) is None:
                got = visit(u)
                if got:
                    return got
    finally:
        sys.setrecursionlimit(old)
    return None


def extract_dgvf(K: SimplicialComplex,
                 matching: Iterable[tuple[int, int]]) -> DGVF:
    """Validate a matching (given as (face, coface) cell-id pairs)."""
    pair_up: dict[int, int] = {}
    used: set[int] = set()
    for a, b in matching:
        if b not in K.cofaces_of.get(a, ()):
            raise MorseError(f"({a}, {b}) is not a face incidence")
        if a in used or b in used:
            raise MorseError(f"cell reused by pair ({a}, {b})")
        used.update((a, b))
        pair_up[a] = b
    witness = flow_cycle_witness(K, pair_up)
    if witness is not None:
        raise MorseError(f"matching induces a closed flow path: {witness}")
    return DGVF(K, pair_up)


def topo_sort_dmf(K: SimplicialComplex, dgvf: DGVF) -> list[int]:
    """Total order realizing the field: index in the list is the value.

    Matched cofaces come before their faces (the pair is the one descent),
    all other incidences ascend.  Smallest-id-first tie-break.
    """
    adj: dict[int, list[int]] = {c: [] for c in K.simplices}
    indeg = {c: 0 for c in K.simplices}
    for cid in K.simplices:
        for fid in K.facets_of[cid]:
            if dgvf.pair_up.get(fid) == cid:
                adj[cid].append(fid)   # coface first
                indeg[fid] += 1
            else:
                adj[fid].append(cid)   # face first
                indeg[cid] += 1
    heap = [c for c, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for w in adj[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    if len(order) != len(K.simplices):
        raise MorseError("field is cyclic; no compatible total order")
    return order


def dmf_exception_counts(K: SimplicialComplex, order: list[int]) -> dict[int, tuple[int, int]]:
    """Per cell: (lower-or-equal cofaces, higher-or-equal faces) counts."""
    pos = {c: i for i, c in enumerate(order)}
    out = {}
    for cid in K.simplices:
        n1 = sum(1 for cf in K.cofaces_of[cid] if pos[cf] <= pos[cid])
        n2 = sum(1 for f in K.facets_of[cid] if pos[f] >= pos[cid])
        out[cid] = (n1, n2)
    return out


@dataclass
class MorseBoundary:
    """Signed path-count boundary on critical cells, plus the flow cache."""

    complex: SimplicialComplex
    critical: list[int]
    columns: dict[int, dict[int, int]]       # critical cell -> {critical face: coeff}
    flow: dict[int, dict[int, int]]          # every cell -> its flow chain

    def matrix(self, q: int) -> list[list[int]]:
        rows = [c for c in self.critical if self.complex.simplices[c].dim == q - 1]
        cols = [c for c in self.critical if self.complex.simplices[c].dim == q]
        ri = {c: i for i, c in enumerate(rows)}
        M = [[0] * len(cols) for _ in rows]
        for j, c in enumerate(cols):
            for f, coeff in self.columns[c].items():
                M[ri[f]][j] = coeff
        return M

    def compose_is_zero(self) -> bool:
        for c in self.critical:
            acc: dict[int, int] = {}
            for f, coeff in self.columns[c].items():
                for g, coeff2 in self.columns.get(f, {}).items():
                    acc[g] = acc.get(g, 0) + coeff * coeff2
            if any(v != 0 for v in acc.values()):
                return False
        return True


def compute_morse_boundary(K: SimplicialComplex, dgvf: DGVF,
                           order: Optional[list[int]] = None) -> MorseBoundary:
    if order is None:
        order = topo_sort_dmf(K, dgvf)
    flow: dict[int, dict[int, int]] = {}
    critical_set = {c for c in K.simplices if not dgvf.is_matched(c)}
    for sigma in order:
        beta = dgvf.pair_up.get(sigma)
        if beta is not None:
            sign = K.face_sign(beta, sigma)
            flow[sigma] = {g: -sign * v for g, v in flow[beta].items()}
            continue
        acc: dict[int, int] = {}
        for i, tau in enumerate(K.facets_of[sigma]):
            s = -1 if i % 2 else 1
            if tau in critical_set:
                acc[tau] = acc.get(tau, 0) + s
            elif tau in dgvf.pair_up and dgvf.pair_up[tau] != sigma:
                for g, v in flow[tau].items():
                    acc[g] = acc.get(g, 0) + s * v
            # faces matched downward carry no flow at this level
        flow[sigma] = {g: v for g, v in acc.items() if v != 0}
    critical = sorted(critical_set)
    columns = {c: dict(flow[c]) for c in critical}
    return MorseBoundary(complex=K, critical=critical, columns=columns, flow=flow)


# -- gradient path enumeration -------------------------------------------

def gradient_paths(K: SimplicialComplex, dgvf: DGVF, sigma: int,
                   target: int, limit: int = 100000,
                   skip_direct: bool = False) -> list[list[int]]:
    """All gradient paths from the boundary of ``sigma`` down to ``target``.

    A path is returned as the cell sequence [a0, b0, a1, b1, ..., target]
    starting at a face a0 of sigma.  ``target`` has the dimension of the
    faces of sigma and is reached as an endpoint.  ``skip_direct`` drops
    the trivial path that starts at ``target`` itself, which is what cycle
    arguments care about when ``target`` is already a face of ``sigma``.
    """
    out: list[list[int]] = []

    def walk(cell: int, trail: list[int]):
        if len(out) >= limit:
            raise CancelError("too many gradient paths to enumerate")
        if cell == target:
            out.append(trail + [cell])
            return
        beta = dgvf.pair_up.get(cell)
        if beta is None or beta == sigma:
            return
        for nxt in K.facets_of[beta]:
            if nxt != cell:
                walk(nxt, trail + [cell, beta])

    for a0 in K.facets_of[sigma]:
        if skip_direct and a0 == target:
            continue
        walk(a0, [])
    return out


def cancel_pair(K: SimplicialComplex, dgvf: DGVF, tau: int, sigma: int) -> DGVF:
    """Reverse the unique gradient path joining two critical cells.

    ``sigma`` has dimension one above ``tau``.  Refused when the path is
    absent or not unique (opposite-sign path pairs also disqualify).
    """
    if dgvf.is_matched(tau):
        raise CancelError(f"cell {tau} is not critical")
    if dgvf.is_matched(sigma):
        raise CancelError(f"cell {sigma} is not critical")
    if K.simplices[sigma].dim != K.simplices[tau].dim + 1:
        raise CancelError("dimension gap is not one")
    paths = gradient_paths(K, dgvf, sigma, tau, limit=4096)
    if len(paths) != 1:
        raise CancelError(
            f"gradient path from boundary of {sigma} to {tau} not unique "
            f"({len(paths)} found)")
    return _reverse_path(K, dgvf, sigma, paths[0])


def _reverse_path(K: SimplicialComplex, dgvf: DGVF, sigma: int,
                  path: list[int]) -> DGVF:
    """Re-pair cells along [a0, b0, a1, b1, ..., a_k] so sigma swallows a0."""
    pair_up = dict(dgvf.pair_up)
    cells = list(path)
    faces = cells[0::2]
    cofaces = cells[1::2]
    for a in faces[:-1]:
        del pair_up[a]
    pair_up[faces[0]] = sigma
    for i, b in enumerate(cofaces):
        pair_up[faces[i + 1]] = b
    new = DGVF(K, pair_up)
    witness = flow_cycle_witness(K, pair_up)
    if witness is not None:
        raise CancelError(f"reversal created a closed flow path: {witness}")
    return new


def is_ridge_critical(K: SimplicialComplex, dgvf: DGVF, sigma: int,
                      tau: int) -> bool:
    """Ridge predicate: tau below sigma carries a pair into its own face."""
    if tau not in K.facets_of[sigma]:
        return False
    gamma = dgvf.pair_down.get(tau)
    return gamma is not None and gamma in K.facets_of[tau]


def cancel_nonsmooth(K: SimplicialComplex, dgvf: DGVF, sigma: int, tau: int,
                     gamma: int, alpha: int) -> DGVF:
    """Ridge cancellation removing the pair of criticals sigma and alpha.

    Deletes the pair (gamma, tau), adds (tau, sigma), and reverses the
    unique gradient path from the boundary of alpha to gamma.
    """
    if dgvf.is_matched(sigma):
        raise CancelError(f"sigma {sigma} is not critical")
    if dgvf.is_matched(alpha):
        raise CancelError(f"alpha {alpha} is not critical")
    if dgvf.pair_up.get(gamma) != tau:
        raise CancelError(f"({gamma}, {tau}) is not a gradient pair")
    if not is_ridge_critical(K, dgvf, sigma, tau):
        raise CancelError(f"sigma {sigma} has no ridge at {tau}")
    if gradient_paths(K, dgvf, sigma, tau, skip_direct=True):
        raise CancelError(f"gradient path from boundary of {sigma} to {tau} exists")
    paths = gradient_paths(K, dgvf, alpha, gamma)
    if len(paths) != 1:
        raise CancelError(
            f"gradient path from boundary of {alpha} to {gamma} not unique "
            f"({len(paths)} found)")

    pair_up = dict(dgvf.pair_up)
    del pair_up[gamma]
    pair_up[tau] = sigma
    trimmed = DGVF(K, pair_up)
    witness = flow_cycle_witness(K, pair_up)
    if witness is not None:
        raise CancelError(f"adding ({tau}, {sigma}) closed a flow path: {witness}")
    return _reverse_path(K, trimmed, alpha, paths[0])


def morse_summary(K: SimplicialComplex, dgvf: DGVF,
                  betti: Optional[list[int]] = None) -> dict:
    """Euler identity and weak inequalities; violations are hard failures."""
    from .complexes import euler_characteristic
    counts = dgvf.morse_numbers()
    chi = euler_characteristic(K)
    alt = sum((-1) ** q * c for q, c in enumerate(counts))
    if alt != chi:
        raise AssertionError(
            f"alternating Morse sum {alt} != Euler characteristic {chi}")
    report = {
        "morse_numbers": counts,
        "euler_characteristic": chi,
        "aggregate_morse": sum(counts[1:]),
    }
    if betti is not None:
        padded = betti + [0] * (len(counts) - len(betti))
        for q, c in enumerate(counts):
            if c < padded[q]:
                raise AssertionError(
                    f"Morse number {c} below Betti number {padded[q]} in dim {q}")
        report["betti"] = betti
        report["aggregate_betti"] = sum(padded[1:])
        import math
        n = max(2, len(K.simplices))
        report["wmoc_ratio"] = report["aggregate_morse"] / (math.log2(n) ** 2)
    return report
