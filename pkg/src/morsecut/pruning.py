"""Boundary pruning: collapse (free face, sole coface) pairs to the core.

Collapses run from the top dimension down; each removed pair is recorded
in order and doubles as a gradient-pair seed for downstream matching.
Within one dimension a FIFO queue propagates newly freed cofaces, and the
first boundary face in canonical id order is always the one collapsed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque

from .complexes import SimplicialComplex


@dataclass
class PruneTrace:
    pairs: list[tuple[int, int, int]] = field(default_factory=list)  # (dim, face, coface)

    def counts_by_dim(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for d, _, _ in self.pairs:
            out[d] = out.get(d, 0) + 1
        return out

    def dump(self) -> str:
        return "".join(f"{d} {rho} {eta}\n" for d, rho, eta in self.pairs)


def find_boundary(K: SimplicialComplex, d: int,
                  present: set[int] | None = None) -> list[int]:
    """d-simplices owning at least one face whose sole coface they are."""
    cells = present if present is not None else set(K.simplices)
    out = []
    for cid in sorted(cells):
        if K.simplices[cid].dim != d:
            continue
        for fid in K.facets_of[cid]:
            if fid not in cells:
                continue
            cofs = [c for c in K.cofaces_of[fid] if c in cells]
            if cofs == [cid]:
                out.append(cid)
                break
    return out


def prune_boundary(K: SimplicialComplex,
                   ) -> tuple[SimplicialComplex, PruneTrace, list[tuple[int, int]]]:
    """Collapse to the core; returns (core, trace, seed gradient pairs).

    Seed pairs are (face id, coface id) in the ORIGINAL complex ids; the
    core is returned as a fresh complex built from the surviving maximal
    cells (vertex labels are preserved).
    """
    present: set[int] = set(K.simplices)
    trace = PruneTrace()

    def live_cofaces(fid: int) -> list[int]:
        return [c for c in K.cofaces_of[fid] if c in present]

    def boundary_face_of(cid: int) -> int | None:
        for fid in K.facets_of[cid]:
            if fid in present and live_cofaces(fid) == [cid]:
                return fid
        return None

    for d in range(K.max_dim, 0, -1):
        queue = deque(find_boundary(K, d, present))
        queued = set(queue)
        while queue:
            eta = queue.popleft()
            queued.discard(eta)
            if eta not in present:
                continue
            rho = boundary_face_of(eta)
            if rho is None:
                continue
            present.discard(eta)
            present.discard(rho)
            trace.pairs.append((d, rho, eta))
            # faces of the removed coface may now have a sole coface left
            for fid in K.facets_of[eta]:
                if fid not in present:
                    continue
                cofs = live_cofaces(fid)
                if len(cofs) == 1 and cofs[0] not in queued:
                    queue.append(cofs[0])
                    queued.add(cofs[0])
            # and eta itself is gone, so re-examine cofaces of rho's siblings
            if eta in queued:
                queued.discard(eta)

    if not present:
        raise AssertionError("pruning emptied the complex")
    survivors = sorted(present)
    maximal = [K.simplices[c].vertices for c in survivors
               if not any(cf in present for cf in K.cofaces_of[c])]
    core = SimplicialComplex(maximal)
    if len(core) != len(survivors):
        raise AssertionError("core reconstruction does not match survivors")
    seed = [(rho, eta) for _, rho, eta in trace.pairs]
    return core, trace, seed


def check_core(K: SimplicialComplex) -> list[str]:
    """Report dominated vertex pairs (empty on a genuine core)."""
    maximal_of: dict[int, list[frozenset[int]]] = {}
    maximal = [frozenset(s.vertices) for s in K.simplices.values()
               if not K.cofaces_of[s.id]]
    vertices = [s.vertices[0] for s in K.simplices.values() if s.dim == 0]
    for v in vertices:
        maximal_of[v] = [m for m in maximal if v in m]
    problems = []
    for v2 in vertices:
        for v1 in vertices:
            if v1 == v2:
                continue
            if maximal_of[v2] and all(v1 in m for m in maximal_of[v2]):
                problems.append(f"vertex {v1} dominates vertex {v2}")
    return problems
