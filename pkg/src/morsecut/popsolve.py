"""Divide-and-conquer driver for the partially-oriented problem.

Each recursion level cuts the current node set with a balanced-cut solver
(exact enumeration, embedding rounding, or the matrix-weights loop); the
prefix side precedes the suffix side in the assembled order, pairs split
by the cut are thereby oriented, and the two sides recurse independently.
Small subproblems are finished exactly: a linear-order DP over node
subsets when few nodes remain, or a branch-and-bound over pair
orientations when all surviving pairs are intact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cuts import (CutError, CutInfeasibleError, CutInstance, DirectedCut,
                   build_sdp, exact_dbcre, rigid_prefix_cut, round_arv,
                   solve_embedding)
from .gadget import PopInstance, PopSolution, topological_order
from .mwum import MwumConfig, mwum_binary_search


@dataclass
class SolverConfig:
    balance_c: float = 1 / 3
    seed: int = 0
    max_exact_size: int = 14      # node-order DP bound
    max_exact_pairs: int = 28     # whole-subproblem pair search bound
    solver: str = "exact"         # exact | arv | mwum
    arv_max_n: int = 40           # embedding path size cap; prefix cut beyond
    arv_retries: int = 40
    mwum_max_n: int = 40
    mwum: MwumConfig = field(default_factory=MwumConfig)

    @classmethod
    def from_mapping(cls, data: dict) -> "SolverConfig":
        cfg = cls()
        for key in ("balance_c", "seed", "max_exact_size", "max_exact_pairs",
                    "solver", "arv_max_n", "arv_retries", "mwum_max_n"):
            if key in data:
                setattr(cfg, key, type(getattr(cfg, key))(data[key]))
        return cfg


@dataclass
class RecursionTrace:
    size: int
    n_pairs: int
    solver: str
    cut_cost: float = 0.0
    balance: float = 0.0
    objective: float = 0.0
    children: list["RecursionTrace"] = field(default_factory=list)

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def lines(self, indent: int = 0) -> list[str]:
        pad = "  " * indent
        out = [f"{pad}size={self.size} pairs={self.n_pairs} solver={self.solver} "
               f"cut_cost={self.cut_cost:g} balance={self.balance:.3f} "
               f"objective={self.objective:g}"]
        for ch in self.children:
            out.extend(ch.lines(indent + 1))
        return out


class PopSolveError(RuntimeError):
    pass


def solve_min_pop(inst: PopInstance, cfg: Optional[SolverConfig] = None,
                  ) -> tuple[PopSolution, RecursionTrace]:
    cfg = cfg or SolverConfig()
    rigid = inst.rigid_arcs()
    rigid_out: dict[int, list[int]] = {}
    rigid_in: dict[int, list[int]] = {}
    for x, y in rigid:
        rigid_out.setdefault(x, []).append(y)
        rigid_in.setdefault(y, []).append(x)

    pair_at_node: dict[int, int] = {}
    for k in range(inst.n_pairs):
        pair_at_node[inst.pair_bottom[k]] = k
        pair_at_node[inst.pair_top[k]] = k

    ctx = _Context(inst=inst, cfg=cfg, rigid_out=rigid_out, rigid_in=rigid_in,
                   pair_at_node=pair_at_node)
    matched, trace = _solve_rec(ctx, frozenset(range(inst.n_nodes)), path_id=0)

    removed = set(range(inst.n_pairs)) - matched
    kept = list(rigid)
    for k in matched:
        kept.append((inst.pair_bottom[k], inst.pair_top[k]))
    for k in removed:
        kept.append((inst.pair_top[k], inst.pair_bottom[k]))
    order = topological_order(inst.n_nodes, kept)
    sol = PopSolution(matched_pairs=matched, removed=removed, order=order)
    return sol, trace


@dataclass
class _Context:
    inst: PopInstance
    cfg: SolverConfig
    rigid_out: dict[int, list[int]]
    rigid_in: dict[int, list[int]]
    pair_at_node: dict[int, int]


def _pairs_inside(ctx: _Context, nodes: frozenset[int]) -> list[int]:
    inst = ctx.inst
    seen = set()
    for v in nodes:
        k = ctx.pair_at_node.get(v)
        if k is not None and k not in seen:
            if inst.pair_bottom[k] in nodes and inst.pair_top[k] in nodes:
                seen.add(k)
    return sorted(seen)


def _rigid_inside(ctx: _Context, nodes: frozenset[int]) -> list[tuple[int, int]]:
    out = []
    for x in nodes:
        for y in ctx.rigid_out.get(x, ()):
            if y in nodes:
                out.append((x, y))
    return sorted(out)


def _solve_rec(ctx: _Context, nodes: frozenset[int], path_id: int,
               ) -> tuple[set[int], RecursionTrace]:
    inst, cfg = ctx.inst, ctx.cfg
    pairs = _pairs_inside(ctx, nodes)
    free = [k for k in pairs
            if k not in inst.forced_matched and k not in inst.forced_unmatched]

    if not free:
        matched = set(pairs) & inst.forced_matched
        tr = RecursionTrace(size=len(nodes), n_pairs=len(pairs),
                            solver="rigid-only", objective=0.0)
        tr.objective = float(len(pairs) - len(matched))
        return matched, tr

    if len(nodes) <= cfg.max_exact_size:
        matched, cost = _order_dp(ctx, nodes, pairs)
        tr = RecursionTrace(size=len(nodes), n_pairs=len(pairs),
                            solver="order-dp", objective=cost)
        return matched, tr

    if len(pairs) <= cfg.max_exact_pairs:
        matched, cost = _pair_branch_bound(ctx, nodes, pairs)
        tr = RecursionTrace(size=len(nodes), n_pairs=len(pairs),
                            solver="pair-bnb", objective=cost)
        return matched, tr

    cut_inst, local_of, node_of = _as_cut_instance(ctx, nodes, pairs)
    cut, solver_name = _run_cut_solver(ctx, cut_inst, path_id, nodes)
    side_a = {node_of[i] for i in cut.side_a}
    side_b = {node_of[i] for i in cut.side_b}

    matched: set[int] = set()
    for k in pairs:
        b, t = inst.pair_bottom[k], inst.pair_top[k]
        if b in side_a and t in side_b:
            matched.add(k)  # up-arc crosses forward: matched

    m_a, tr_a = _solve_rec(ctx, frozenset(side_a), path_id * 2 + 1)
    m_b, tr_b = _solve_rec(ctx, frozenset(side_b), path_id * 2 + 2)
    matched |= m_a | m_b

    tr = RecursionTrace(size=len(nodes), n_pairs=len(pairs),
                        solver=solver_name, cut_cost=cut.cost,
                        balance=cut.balance,
                        objective=cut.cost + tr_a.objective + tr_b.objective,
                        children=[tr_a, tr_b])
    return matched, tr


def _as_cut_instance(ctx: _Context, nodes: frozenset[int], pairs: Sequence[int],
                     ) -> tuple[CutInstance, dict[int, int], list[int]]:
    inst, cfg = ctx.inst, ctx.cfg
    node_of = sorted(nodes)
    local_of = {v: i for i, v in enumerate(node_of)}
    arcs = []
    for k in pairs:
        t, b = inst.pair_top[k], inst.pair_bottom[k]
        arcs.append((local_of[t], local_of[b], 1.0))  # down-arc costs when forward
    forbidden = set()
    for x, y in _rigid_inside(ctx, nodes):
        forbidden.add((local_of[y], local_of[x]))
    return (CutInstance(n=len(node_of), arcs=arcs, forbidden=forbidden,
                        c=cfg.balance_c),
            local_of, node_of)


def _run_cut_solver(ctx: _Context, cut_inst: CutInstance, path_id: int,
                    nodes: frozenset[int]) -> tuple[DirectedCut, str]:
    cfg = ctx.cfg
    n = cut_inst.n
    min_side = max(1, int((cfg.balance_c / 2.0) * n))
    rigid_local = [(v, u) for (u, v) in cut_inst.forbidden]
    seed = _subproblem_seed(cfg.seed, nodes, path_id)

    if cfg.solver == "exact":
        if n <= 22:
            return exact_dbcre(cut_inst), "cut-exact"
        return rigid_prefix_cut(cut_inst, rigid_local, min_side), "cut-prefix"

    if cfg.solver == "arv":
        if n <= cfg.arv_max_n:
            try:
                sdp = build_sdp(cut_inst)
                emb = solve_embedding(sdp, seed=seed)
                rng = np.random.default_rng(seed)
                return round_arv(emb, cut_inst, rng,
                                 max_retries=cfg.arv_retries), "cut-arv"
            except CutError:
                pass
        return rigid_prefix_cut(cut_inst, rigid_local, min_side), "cut-prefix"

    if cfg.solver == "mwum":
        if n <= cfg.mwum_max_n:
            try:
                sdp = build_sdp(cut_inst)
                cut, _, _ = mwum_binary_search(sdp, delta=cfg.mwum.delta,
                                               cfg=cfg.mwum, seed=seed)
                return cut, "cut-mwum"
            except CutError:
                pass
        return rigid_prefix_cut(cut_inst, rigid_local, min_side), "cut-prefix"

    raise PopSolveError(f"unknown solver {cfg.solver!r}")


def _subproblem_seed(seed: int, nodes: frozenset[int], path_id: int) -> int:
    lo = min(nodes) if nodes else 0
    return (seed * 1_000_003 + path_id * 10_007 + lo * 101 + len(nodes)) % (2 ** 31)


# -- exact base cases -----------------------------------------------------

def _order_dp(ctx: _Context, nodes: frozenset[int], pairs: Sequence[int],
              ) -> tuple[set[int], float]:
    """Exact minimum-cost linear order of a small node set.

    Appending a node charges the down-arcs it sends to still-unplaced
    nodes; a node may be appended only once all rigid predecessors are
    placed.  Subset DP with parent pointers.
    """
    inst = ctx.inst
    node_of = sorted(nodes)
    local_of = {v: i for i, v in enumerate(node_of)}
    n = len(node_of)

    rigid_pred = [0] * n
    for x, y in _rigid_inside(ctx, nodes):
        rigid_pred[local_of[y]] |= 1 << local_of[x]
    cost_out = [[] for _ in range(n)]  # node -> list of (target bit, weight)
    for k in pairs:
        t, b = local_of[inst.pair_top[k]], local_of[inst.pair_bottom[k]]
        cost_out[t].append((1 << b, 1.0))

    full = (1 << n) - 1
    INF = float("inf")
    dp = [INF] * (1 << n)
    parent = [-1] * (1 << n)
    dp[0] = 0.0
    for mask in range(1 << n):
        base = dp[mask]
        if base == INF:
            continue
        rest = full ^ mask
        r = rest
        while r:
            bit = r & -r
            r ^= bit
            x = bit.bit_length() - 1
            if rigid_pred[x] & ~mask:
                continue
            add = sum(w for tb, w in cost_out[x] if rest & ~bit & tb)
            nxt = mask | bit
            cand = base + add
            if cand < dp[nxt] - 1e-12:
                dp[nxt] = cand
                parent[nxt] = x
        # charging rule: down-arc (t -> b) costs when t is placed before b
    if dp[full] == INF:
        raise PopSolveError("rigid arcs inside subproblem are cyclic")

    order_local = []
    mask = full
    while mask:
        x = parent[mask]
        order_local.append(x)
        mask ^= 1 << x
    order_local.reverse()
    position = {x: i for i, x in enumerate(order_local)}
    matched = set()
    for k in pairs:
        b = position[local_of[inst.pair_bottom[k]]]
        t = position[local_of[inst.pair_top[k]]]
        if b < t:
            matched.add(k)
    return matched, dp[full]


def _pair_branch_bound(ctx: _Context, nodes: frozenset[int],
                       pairs: Sequence[int]) -> tuple[set[int], float]:
    """Exact orientation search over intact pairs.

    Keeps the digraph of rigid arcs plus chosen up-arcs acyclic while
    maximizing kept up-arcs.  Two pairs touching the same Hasse cell can
    never both be kept (their mutual rigid paths close a cycle), which
    prunes most branches before any reachability check.
    """
    inst = ctx.inst
    rigid = _rigid_inside(ctx, nodes)
    adj: dict[int, list[int]] = {}
    for x, y in rigid:
        adj.setdefault(x, []).append(y)

    free, forced_cost = [], 0.0
    matched0: set[int] = set()
    for k in pairs:
        if k in inst.forced_matched:
            matched0.add(k)
            adj.setdefault(inst.pair_bottom[k], []).append(inst.pair_top[k])
        elif k in inst.forced_unmatched:
            forced_cost += 1.0
        else:
            free.append(k)

    used_cells: set[int] = set()
    for k in matched0:
        used_cells.update(inst.pair_hasse_edge[k])

    def reachable(src: int, dst: int) -> bool:
        stack = [src]
        seen = {src}
        while stack:
            u = stack.pop()
            if u == dst:
                return True
            for w in adj.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    free.sort()
    best: list = [len(matched0), set(matched0)]

    def remaining_bound(idx: int) -> int:
        cells_left = {c for k in free[idx:] for c in inst.pair_hasse_edge[k]
                      if c not in used_cells}
        return min(len(free) - idx, len(cells_left) // 2)

    def dfs(idx: int, chosen: set[int]):
        if len(chosen) + remaining_bound(idx) <= best[0]:
            return
        if idx == len(free):
            if len(chosen) > best[0]:
                best[0] = len(chosen)
                best[1] = set(chosen)
            return
        k = free[idx]
        lo, hi = inst.pair_hasse_edge[k]
        b, t = inst.pair_bottom[k], inst.pair_top[k]
        if lo not in used_cells and hi not in used_cells and not reachable(t, b):
            adj.setdefault(b, []).append(t)
            used_cells.update((lo, hi))
            chosen.add(k)
            dfs(idx + 1, chosen)
            chosen.discard(k)
            used_cells.difference_update((lo, hi))
            adj[b].pop()
        dfs(idx + 1, chosen)

    dfs(0, set(matched0))
    matched = best[1]
    cost = float(len(pairs) - len(matched))
    return matched, cost


# -- diagnostics ----------------------------------------------------------

def check_trace(trace: RecursionTrace, balance_c: float) -> list[str]:
    """Structural checks: additive telescoping and child balance."""
    problems = []

    def walk(node: RecursionTrace):
        if node.children:
            kids = sum(c.objective for c in node.children)
            if abs(node.objective - (node.cut_cost + kids)) > 1e-9:
                problems.append(
                    f"objective {node.objective} != cut {node.cut_cost} "
                    f"+ children {kids}")
            if len(node.children) == 2:
                floor_side = math.floor((balance_c / 2.0) * node.size)
                for c in node.children:
                    if c.size < max(1, floor_side):
                        problems.append(
                            f"child size {c.size} below balance floor "
                            f"{floor_side} of parent {node.size}")
            for c in node.children:
                walk(c)

    walk(trace)
    return problems
