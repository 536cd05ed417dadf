"""Reduction of Morse-matching minimization to a partially-oriented problem.

The Hasse graph is rewritten into a gadget digraph: every Hasse edge becomes
an isolated two-node pair carrying one up-arc and one down-arc, and rigid
arcs encode the cycle constraints (top of an up-edge to the bottom of the
next up-edge along any up-down-up hop) and the matching constraints (either
pairwise top-to-bottom arcs, or the linear-size tree gadget that replaces
them with shared rigid paths).

Node numbering: pair k (in Hasse-edge index order) owns nodes 2k (bottom
clone, the face endpoint) and 2k+1 (top clone, the coface endpoint).  Tree
nodes come after all pair nodes, grouped by Hasse vertex in id order, then
from-levels before to-levels, level by level, index order within a level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .complexes import HasseGraph, SimplicialComplex, build_hasse

MATCHING_GADGET = "mr"
PSEUDO_FFT = "fft"


class GadgetError(ValueError):
    """Inconsistent prescriptions or malformed gadget input."""


class EdgeKind(Enum):
    UP_NORMAL = "up"
    DOWN_NORMAL = "down"
    RIGID = "rigid"
    FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class GadgetEdge:
    src: int
    dst: int
    kind: EdgeKind
    origin: Optional[int] = None  # Hasse edge id, for normal arcs


@dataclass
class PopInstance:
    n_nodes: int
    edges: list[GadgetEdge]
    hasse_edge_count: int
    degree: dict[int, int]            # Hasse node id -> total degree d(v)
    pair_bottom: list[int]            # pair k -> bottom node id
    pair_top: list[int]               # pair k -> top node id
    pair_hasse_edge: list[tuple[int, int]]  # pair k -> (face id, coface id)
    forced_matched: set[int] = field(default_factory=set)    # pair indices
    forced_unmatched: set[int] = field(default_factory=set)

    @property
    def n_pairs(self) -> int:
        return len(self.pair_bottom)

    def rigid_arcs(self) -> list[tuple[int, int]]:
        return [(e.src, e.dst) for e in self.edges if e.kind == EdgeKind.RIGID]

    def forbidden_arcs(self) -> list[tuple[int, int]]:
        return [(e.src, e.dst) for e in self.edges if e.kind == EdgeKind.FORBIDDEN]

    def dump(self) -> str:
        lines = []
        for e in self.edges:
            tail = f" {e.origin}" if e.origin is not None else ""
            lines.append(f"{e.kind.value} {e.src} {e.dst}{tail}")
        return "\n".join(lines) + "\n"


@dataclass
class PopSolution:
    matched_pairs: set[int]           # pair indices whose up-arc is kept
    removed: set[int]                 # pair indices whose up-arc is rejected
    order: list[int]                  # topological order of gadget nodes

    @property
    def objective(self) -> int:
        return len(self.removed)


# -- construction stages ------------------------------------------------

def duplicate_edges(H: HasseGraph) -> list[tuple[int, int]]:
    """Each undirected Hasse edge (face, coface) becomes two directed arcs."""
    arcs = []
    for lo, hi in H.edges:
        arcs.append((lo, hi))
        arcs.append((hi, lo))
    return arcs


def isolate_edge_pairs(H: HasseGraph) -> tuple[list[int], list[int]]:
    """Split every up/down arc pair into its own two-node component.

    Returns (pair_bottom, pair_top) node id lists; pair k corresponds to
    Hasse edge k and owns nodes 2k (bottom = face clone) and 2k+1 (top).
    """
    bottoms = [2 * k for k in range(H.n_edges)]
    tops = [2 * k + 1 for k in range(H.n_edges)]
    return bottoms, tops


def add_cycle_gadget(H: HasseGraph, pair_bottom: Sequence[int],
                     pair_top: Sequence[int]) -> list[tuple[int, int]]:
    """Rigid arcs linking adjacent up-edges along up-down-up hops.

    Up-edge E1 = (a < b) is adjacent to up-edge E2 = (c < d) when the Hasse
    edge (c < b) exists with c != a and d != b: a path climbs E1, descends
    b -> c, and climbs E2.  One rigid arc joins E1's top to E2's bottom.
    """
    up_into: dict[int, list[int]] = {}    # coface node -> pair indices ending there
    up_out_of: dict[int, list[int]] = {}  # face node -> pair indices starting there
    for k, (lo, hi) in enumerate(H.edges):
        up_into.setdefault(hi, []).append(k)
        up_out_of.setdefault(lo, []).append(k)

    arcs = []
    for mid, (c, b) in enumerate(H.edges):  # down-step b -> c via edge `mid`
        for k1 in up_into.get(b, ()):
            if H.edges[k1][0] == c:
                continue
            for k2 in up_out_of.get(c, ()):
                if H.edges[k2][1] == b:
                    continue
                arcs.append((pair_top[k1], pair_bottom[k2]))
    return arcs


def add_matching_gadget(H: HasseGraph, pair_bottom: Sequence[int],
                        pair_top: Sequence[int]) -> list[tuple[int, int]]:
    """Pairwise rigid arcs between up-edges sharing a Hasse vertex."""
    arcs = []
    for node in sorted(H.complex.simplices):
        pairs = H.edges_at(node)
        for i in range(len(pairs)):
            for j in range(i + 1, len(pairs)):
                ki, kj = pairs[i], pairs[j]
                arcs.append((pair_top[ki], pair_bottom[kj]))
                arcs.append((pair_top[kj], pair_bottom[ki]))
    return arcs


def build_pseudo_fft(tops: Sequence[int], bottoms: Sequence[int],
                     next_node: int) -> tuple[list[tuple[int, int]], int]:
    """Tree gadget giving every top a rigid path to every other bottom.

    ``tops[i]``/``bottoms[i]`` are the two nodes of pair i at one Hasse
    vertex.  New node ids are allocated from ``next_node``.  Returns the
    rigid arc list and the next free node id.

    Levels shrink by halving (ceil) until a level of size 2; odd tails
    inherit directly.  Merging pairs get same-level cross arcs to each
    other's to-node; the final level gets the two crossing arcs.
    """
    n = len(tops)
    if n != len(bottoms):
        raise GadgetError("tops and bottoms must pair up")
    if n < 2:
        return [], next_node

    sizes = [n]
    while sizes[-1] > 2:
        sizes.append((sizes[-1] + 1) // 2)

    from_levels: list[list[int]] = [list(tops)]
    to_levels: list[list[int]] = [list(bottoms)]
    for size in sizes[1:]:
        from_levels.append(list(range(next_node, next_node + size)))
        next_node += size
    for size in sizes[1:]:
        to_levels.append(list(range(next_node, next_node + size)))
        next_node += size

    arcs: list[tuple[int, int]] = []
    for lvl in range(len(sizes) - 1):
        cur_f, nxt_f = from_levels[lvl], from_levels[lvl + 1]
        cur_t, nxt_t = to_levels[lvl], to_levels[lvl + 1]
        m = len(cur_f)
        i, j = 0, 0
        while i < m:
            if i + 1 < m:
                # merge (i, i+1) upward, mirror cross arcs at this level
                arcs.append((cur_f[i], nxt_f[j]))
                arcs.append((cur_f[i + 1], nxt_f[j]))
                arcs.append((nxt_t[j], cur_t[i]))
                arcs.append((nxt_t[j], cur_t[i + 1]))
                arcs.append((cur_f[i], cur_t[i + 1]))
                arcs.append((cur_f[i + 1], cur_t[i]))
                i += 2
            else:
                # odd tail: direct inheritance, no complement at this level
                arcs.append((cur_f[i], nxt_f[j]))
                arcs.append((nxt_t[j], cur_t[i]))
                i += 1
            j += 1

    last_f, last_t = from_levels[-1], to_levels[-1]
    arcs.append((last_f[0], last_t[1]))
    arcs.append((last_f[1], last_t[0]))
    return arcs, next_node


# -- full reduction ------------------------------------------------------

def reduce_mmup_to_pop(K: SimplicialComplex, mode: str = PSEUDO_FFT,
                       extra_rigid_pairs: Iterable[tuple[int, int]] = (),
                       extra_forbidden_pairs: Iterable[tuple[int, int]] = (),
                       ) -> PopInstance:
    """Build the gadget instance whose optimum counts critical cells.

    ``extra_rigid_pairs`` / ``extra_forbidden_pairs`` are (face id,
    coface id) Hasse edges whose matched-up orientation is prescribed as
    mandatory / prohibited.  Prescriptions must be consistent and must not
    close a rigid cycle.
    """
    if mode not in (MATCHING_GADGET, PSEUDO_FFT):
        raise GadgetError(f"unknown gadget mode {mode!r}")
    H = build_hasse(K)
    pair_bottom, pair_top = isolate_edge_pairs(H)
    edge_index = {e: k for k, e in enumerate(H.edges)}
    next_node = 2 * H.n_edges

    rigid = add_cycle_gadget(H, pair_bottom, pair_top)
    if mode == MATCHING_GADGET:
        rigid += add_matching_gadget(H, pair_bottom, pair_top)
    else:
        for node in sorted(K.simplices):
            pairs = H.edges_at(node)
            tree_arcs, next_node = build_pseudo_fft(
                [pair_top[k] for k in pairs],
                [pair_bottom[k] for k in pairs],
                next_node)
            rigid += tree_arcs

    forced_matched: set[int] = set()
    forced_unmatched: set[int] = set()
    for he in extra_rigid_pairs:
        if he not in edge_index:
            raise GadgetError(f"prescribed rigid pair {he} is not a Hasse edge")
        forced_matched.add(edge_index[he])
    for he in extra_forbidden_pairs:
        if he not in edge_index:
            raise GadgetError(f"prescribed forbidden pair {he} is not a Hasse edge")
        forced_unmatched.add(edge_index[he])
    if forced_matched & forced_unmatched:
        bad = sorted(forced_matched & forced_unmatched)
        raise GadgetError(f"pairs {bad} prescribed both rigid and forbidden")

    edges: list[GadgetEdge] = []
    for k in range(H.n_edges):
        b, t = pair_bottom[k], pair_top[k]
        if k in forced_matched:
            edges.append(GadgetEdge(b, t, EdgeKind.RIGID, origin=k))
            edges.append(GadgetEdge(t, b, EdgeKind.FORBIDDEN, origin=k))
        elif k in forced_unmatched:
            edges.append(GadgetEdge(b, t, EdgeKind.FORBIDDEN, origin=k))
            edges.append(GadgetEdge(t, b, EdgeKind.RIGID, origin=k))
        else:
            edges.append(GadgetEdge(b, t, EdgeKind.UP_NORMAL, origin=k))
            edges.append(GadgetEdge(t, b, EdgeKind.DOWN_NORMAL, origin=k))
    for src, dst in rigid:
        edges.append(GadgetEdge(src, dst, EdgeKind.RIGID))
        edges.append(GadgetEdge(dst, src, EdgeKind.FORBIDDEN))

    inst = PopInstance(
        n_nodes=next_node,
        edges=edges,
        hasse_edge_count=H.n_edges,
        degree={cid: len(H.edges_at(cid)) for cid in K.simplices},
        pair_bottom=pair_bottom,
        pair_top=pair_top,
        pair_hasse_edge=list(H.edges),
        forced_matched=forced_matched,
        forced_unmatched=forced_unmatched,
    )
    cyc = _rigid_cycle(inst)
    if cyc is not None:
        raise GadgetError(f"prescriptions close a rigid cycle: {cyc}")
    return inst


def _rigid_cycle(inst: PopInstance) -> Optional[list[int]]:
    """Return a node cycle in the rigid-only subgraph, or None.

    Iterative coloring DFS; gadget graphs reach tens of thousands of nodes
    and must not lean on the interpreter stack.
    """
    adj: dict[int, list[int]] = {}
    for src, dst in inst.rigid_arcs():
        adj.setdefault(src, []).append(dst)
    state: dict[int, int] = {}  # 1 = on stack, 2 = done
    for root in list(adj):
        if state.get(root) is not None:
            continue
        stack: list[tuple[int, int]] = [(root, 0)]
        trail = [root]
        state[root] = 1
        while stack:
            u, idx = stack[-1]
            succ = adj.get(u, ())
            if idx >= len(succ):
                stack.pop()
                trail.pop()
                state[u] = 2
                continue
            stack[-1] = (u, idx + 1)
            w = succ[idx]
            if state.get(w) == 1:
                return trail[trail.index(w):] + [w]
            if state.get(w) is None:
                state[w] = 1
                stack.append((w, 0))
                trail.append(w)
    return None


def recover_matching(inst: PopInstance, sol: PopSolution,
                     K: SimplicialComplex) -> tuple[set[tuple[int, int]], int]:
    """Translate a gadget solution back to a Hasse matching and count criticals.

    The count is the per-vertex surplus of kept down-arcs over d(v)-1,
    summed across Hasse nodes; it equals the number of unmatched cells.
    """
    violations = verify_solution(inst, sol)
    if violations:
        raise GadgetError(f"infeasible solution: {violations[0]}")
    matching = {inst.pair_hasse_edge[k] for k in sol.matched_pairs}
    critical_count = 0
    matched_at: dict[int, int] = {}
    for lo, hi in matching:
        matched_at[lo] = matched_at.get(lo, 0) + 1
        matched_at[hi] = matched_at.get(hi, 0) + 1
    for cid in K.simplices:
        d = inst.degree[cid]
        down_kept = d - matched_at.get(cid, 0)
        critical_count += down_kept - (d - 1)
    return matching, critical_count


def verify_solution(inst: PopInstance, sol: PopSolution) -> list[str]:
    """Check acyclicity, rigid inclusion and forbidden exclusion.

    Returns a list of human-readable violations (empty when feasible).
    """
    out = []
    if sol.matched_pairs & sol.removed:
        out.append(f"pairs both kept and removed: {sorted(sol.matched_pairs & sol.removed)}")
    if (sol.matched_pairs | sol.removed) != set(range(inst.n_pairs)):
        out.append("orientation does not cover every normal pair")
    bad_rigid = inst.forced_matched - sol.matched_pairs
    if bad_rigid:
        out.append(f"rigid up-arcs missing for pairs {sorted(bad_rigid)}")
    bad_forb = inst.forced_unmatched & sol.matched_pairs
    if bad_forb:
        out.append(f"forbidden up-arcs kept for pairs {sorted(bad_forb)}")

    kept: list[tuple[int, int]] = list(inst.rigid_arcs())
    for k in sol.matched_pairs:
        kept.append((inst.pair_bottom[k], inst.pair_top[k]))
    for k in sol.removed:
        kept.append((inst.pair_top[k], inst.pair_bottom[k]))
    cycle = _digraph_cycle(inst.n_nodes, kept)
    if cycle is not None:
        out.append(f"kept orientation has cycle {cycle}")
    return out


def _digraph_cycle(n_nodes: int, arcs: list[tuple[int, int]]) -> Optional[list[int]]:
    """Kahn peeling; returns a witness cycle if one exists."""
    adj: dict[int, list[int]] = {}
    indeg = [0] * n_nodes
    for src, dst in arcs:
        adj.setdefault(src, []).append(dst)
        indeg[dst] += 1
    queue = [u for u in range(n_nodes) if indeg[u] == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for w in adj.get(u, ()):
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if seen == n_nodes:
        return None
    residual = {u for u in range(n_nodes) if indeg[u] > 0}
    # strip nodes with no successor inside the residual set so the witness
    # walk cannot run into a downstream dead end
    changed = True
    while changed:
        changed = False
        for u in list(residual):
            if not any(w in residual for w in adj.get(u, ())):
                residual.discard(u)
                changed = True
    u = min(residual)
    trail, pos = [], {}
    while u not in pos:
        pos[u] = len(trail)
        trail.append(u)
        u = next(w for w in adj.get(u, ()) if w in residual)
    return trail[pos[u]:] + [u]


def topological_order(n_nodes: int, arcs: list[tuple[int, int]]) -> list[int]:
    """Deterministic topological order (smallest ready node first)."""
    import heapq
    adj: dict[int, list[int]] = {}
    indeg = [0] * n_nodes
    for src, dst in arcs:
        adj.setdefault(src, []).append(dst)
        indeg[dst] += 1
    heap = [u for u in range(n_nodes) if indeg[u] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for w in adj.get(u, ()):
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    if len(order) != n_nodes:
        raise GadgetError("arcs contain a cycle; no topological order")
    return order
