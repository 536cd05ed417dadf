"""Matrix multiplicative-weights solver for the balanced-cut SDP.

Binary search turns optimization into feasibility: for a guess alpha the
violation-checking oracle either certifies the current iterate (returning
the rounded cut) or emits a feedback matrix; the iterate is then refreshed
through an exact symmetric eigendecomposition of the accumulated feedback
exponential and renormalized to trace m.

Flow checks: a single max-flow between the projection-separated sides
either finds enough flow mass to witness an objective/path violation (the
feedback is a scaled identity minus the flow's semimetric aggregate) or
its min cut becomes the candidate cut; a second, lower-degree flow between
forbidden tails and heads certifies forbidden-sum violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cuts import (CutInstance, DirectedCut, SdpInstance, Embedding,
                   semimetric_matrix, rigid_prefix_cut, CutError,
                   CutInfeasibleError)
from .flow import FlowNetwork

PSD_TOL = 1e-9
TRACE_TOL = 1e-7


@dataclass
class MwumConfig:
    rho: float = 4.0                 # width bound; feedback is clipped to it
    delta: float = 0.1
    max_iters: int = 120
    flow_accept_mult: float = 1.0    # multiplier inside the flow threshold
    flow_degree_mult: float = 4.0    # source/sink capacity headroom
    spread_slack: float = 0.05       # epsilon slack on the spreading bound
    seed: int = 0


@dataclass
class MwumState:
    X: np.ndarray
    feedback_sum: np.ndarray
    eps: float
    iteration: int = 0
    log: list[str] = field(default_factory=list)

    def record(self, objective: float, residual: float, fnorm: float):
        self.log.append(
            f"iter={self.iteration} objective={objective:.6f} "
            f"max_residual={residual:.6f} feedback_norm={fnorm:.6f}")


@dataclass
class MwumResult:
    status: str                      # "primal" or "dual"
    X: np.ndarray
    cut: Optional[DirectedCut]
    dual_value: float
    dual_certified: bool
    iterations: int
    log: list[str]


def _normalize_trace(X: np.ndarray, m: int, log: list[str]) -> np.ndarray:
    X = (X + X.T) / 2.0
    w, V = np.linalg.eigh(X)
    if w.min() < -PSD_TOL:
        log.append(f"psd-drift min_eig={w.min():.3e}; clipping")
        w = np.clip(w, 0.0, None)
        X = (V * w) @ V.T
    tr = float(np.trace(X))
    if tr <= 0:
        return np.eye(m)
    return X * (m / tr)


def _vectors_of(X: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((X + X.T) / 2.0)
    return V * np.sqrt(np.clip(w, 0.0, None))


def _flow_check(vectors: np.ndarray, sdp: SdpInstance, pairs_mode: str,
                degree: float, rng: np.random.Generator,
                sigma_prime: float) -> tuple[float, dict[tuple[int, int], float], set[int]]:
    """Max-flow between projection-separated sides along instance arcs.

    Returns (flow value, endpoint flow masses f_ij keyed by instance node
    pairs, source side of the min cut restricted to instance nodes).
    ``pairs_mode`` selects the terminals: "objective" uses the projection
    split L/R; "forbidden" uses forbidden tails/heads.
    """
    inst = sdp.inst
    n = inst.n
    if pairs_mode == "objective":
        for _ in range(8):
            u = rng.standard_normal(vectors.shape[1])
            u /= np.linalg.norm(u)
            proj = vectors[1:] @ u
            left = [i for i in range(n) if proj[i] < -sigma_prime]
            right = [i for i in range(n) if proj[i] > sigma_prime]
            if left and right:
                break
        else:
            # concentration failure at tiny n: fall back to a median split
            order = np.argsort(vectors[1:] @ u, kind="stable")
            left = [int(i) for i in order[: max(1, n // 2)]]
            right = [int(i) for i in order[max(1, n // 2):]]
        sources, sinks = left, right
    else:
        sources = sorted({u for u, _ in inst.forbidden})
        sinks = sorted({v for _, v in inst.forbidden})
        if not sources:
            return 0.0, {}, set()

    net = FlowNetwork(n + 2)
    s, t = n, n + 1
    arc_ids = []
    for u, v, w in inst.arcs:
        arc_ids.append(net.add_arc(u, v, w))
    for u in sources:
        net.add_arc(s, u, degree)
    for v in sinks:
        net.add_arc(v, t, degree)
    value = net.max_flow(s, t)

    # endpoint masses via greedy path stripping on the flow decomposition
    flows = {}
    residual_flow = {i: net.arc_flow(aid) for i, aid in enumerate(arc_ids)}
    out_by_node: dict[int, list[int]] = {}
    for i, (u, v, w) in enumerate(inst.arcs):
        out_by_node.setdefault(u, []).append(i)
    src_mass = {u: degree for u in sources}
    sink_set = set(sinks)
    for u0 in sources:
        guard = 0
        while src_mass[u0] > 1e-12 and guard < 4 * len(inst.arcs) + 8:
            guard += 1
            path = []
            node = u0
            amount = src_mass[u0]
            visited = {node}
            while node not in sink_set or not path:
                step = None
                for i in out_by_node.get(node, ()):
                    if residual_flow[i] > 1e-12 and inst.arcs[i][1] not in visited:
                        step = i
                        break
                if step is None:
                    break
                amount = min(amount, residual_flow[step])
                path.append(step)
                node = inst.arcs[step][1]
                visited.add(node)
                if node in sink_set:
                    break
            if not path or node not in sink_set:
                break
            for i in path:
                residual_flow[i] -= amount
            src_mass[u0] -= amount
            key = (u0, node)
            flows[key] = flows.get(key, 0.0) + amount

    cut_side = net.min_cut_source_side(s)
    return value, flows, {i for i in cut_side if i < n}


def violation_oracle(X: np.ndarray, sdp: SdpInstance, alpha: float,
                     sigma: float, rng: np.random.Generator,
                     cfg: MwumConfig) -> tuple[str, object]:
    """One oracle call: ("feedback", matrix) or ("cut", DirectedCut) or ("none", None).

    Step 1 checks the scalar constraints, step 2 runs the objective/path
    flow check, step 3 the forbidden-sum flow check; a surviving min cut is
    returned with band points reassigned subject to rigid arcs.
    """
    inst = sdp.inst
    n = inst.n
    m = sdp.m

    # step 1: unit diagonal and spreading.  Feedback always satisfies
    # F . X <= 0 at the current iterate; the update grows X along F.
    # Violated scalar constraints are averaged into one feedback matrix
    # (the oracle may return a convex combination of constraints).
    terms: list[np.ndarray] = []
    diag_dev = np.diag(X) - 1.0
    for i in np.nonzero(np.abs(diag_dev) > 1e-3)[0]:
        F = np.zeros((m, m))
        if diag_dev[i] < 0:
            F[i, i] = 1.0
            F -= np.eye(m) / m
        else:
            F[i, i] = -1.0
            F += np.eye(m) / m
        terms.append(F)
    d2 = np.add.outer(np.diag(X), np.diag(X)) - 2.0 * X
    spread = float(np.sum(np.triu(d2[1:, 1:], k=1)))
    if spread < sdp.spread_bound * (1.0 - cfg.spread_slack):
        A = np.full((m, m), -1.0)
        np.fill_diagonal(A, m - 2.0)
        A[0, :] = 0.0
        A[:, 0] = 0.0
        scale = max(1.0, float(np.linalg.norm(A, 2)))
        terms.append((A - (sdp.spread_bound / m) * np.eye(m)) / scale)
    if terms:
        return "feedback", sum(terms) / len(terms)

    vectors = _vectors_of(X)
    sigma_prime = 1.0 / (4.0 * math.log2(n + 2))
    log_n = max(1.0, math.log2(max(2, n)))

    # step 2: objective / path-inequality flow
    degree = max(cfg.flow_degree_mult * alpha * log_n / n, 1e-3)
    value, flows, cut_nodes = _flow_check(vectors, sdp, "objective", degree,
                                          rng, sigma_prime)
    threshold = cfg.flow_accept_mult * alpha * log_n
    emb = Embedding(gram=X / max(np.diag(X).max(), 1e-12))
    if value > threshold and flows:
        mass = sum(f * emb.semimetric(i + 1, j + 1) for (i, j), f in flows.items())
        if mass > alpha:
            Q = np.zeros((m, m))
            for (i, j), f in flows.items():
                Q += f * semimetric_matrix(m, i + 1, j + 1)
            F = (alpha / m) * np.eye(m) - Q
            return "feedback", F

    # step 3: forbidden-sum flow with lower degree
    if inst.forbidden:
        degree2 = max(sigma / n, 1e-4)
        _, flows2, _ = _flow_check(vectors, sdp, "forbidden", degree2, rng,
                                   sigma_prime)
        mass2 = sum(f * emb.semimetric(i + 1, j + 1) for (i, j), f in flows2.items())
        direct = sum(emb.semimetric(u + 1, v + 1) for u, v in inst.forbidden)
        if mass2 > sigma:
            Q2 = laplacian_of_flow(m, flows2)
            F = (sigma / m) * np.eye(m) - 2.0 * Q2
            return "feedback", F
        if direct > sigma:
            Q2 = np.zeros((m, m))
            for u, v in inst.forbidden:
                Q2 += semimetric_matrix(m, u + 1, v + 1)
            F = (sigma / m) * np.eye(m) - Q2
            return "feedback", F

    # accept: best of the flow min-cut and the reference-ball quantile cuts,
    # each repaired to respect forbidden arcs and the balance floor
    candidates: list[set[int]] = []
    if cut_nodes and len(cut_nodes) < n:
        candidates.append(set(cut_nodes))
    d0 = np.array([emb.dist2(0, i + 1) for i in range(n)])
    order = np.argsort(d0, kind="stable")
    min_side = max(1, int((inst.c / 2.0) * n))
    for k in range(min_side, n - min_side + 1):
        candidates.append({int(i) for i in order[:k]})
    best_side: Optional[set[int]] = None
    for cand in candidates:
        side = _repair_cut(inst, set(cand))
        if side is None:
            continue
        if best_side is None or inst.cut_cost(side) < inst.cut_cost(best_side):
            best_side = side
    if best_side is None:
        return "none", None
    return "cut", DirectedCut.from_sides(inst, best_side)


def laplacian_of_flow(m: int, flows: dict[tuple[int, int], float]) -> np.ndarray:
    """Graph Laplacian of the undirected flow-mass graph (instance index + 1)."""
    L = np.zeros((m, m))
    for (i, j), f in flows.items():
        a, b = i + 1, j + 1
        L[a, a] += f
        L[b, b] += f
        L[a, b] -= f
        L[b, a] -= f
    return L


def _repair_cut(inst: CutInstance, side: set[int]) -> Optional[set[int]]:
    """Reassign nodes so no forbidden arc crosses and balance holds."""
    n = inst.n
    min_side = max(1, int((inst.c / 2.0) * n))
    if 2 * min_side > n:
        return None
    guard = 0
    while guard < 4 * n + 8:
        guard += 1
        crossing = inst.forbidden_crossings(side)
        if not crossing:
            break
        u, v = crossing[0]
        if len(side) < n - min_side:
            side.add(v)
        else:
            side.discard(u)
    if inst.forbidden_crossings(side):
        return None
    if not (min_side <= len(side) <= n - min_side):
        # move cheapest-impact nodes across until balanced
        all_nodes = set(range(n))
        while len(side) < min_side:
            candidates = sorted(all_nodes - side)
            added = False
            for v in candidates:
                trial = side | {v}
                if not inst.forbidden_crossings(trial):
                    side = trial
                    added = True
                    break
            if not added:
                return None
        while len(side) > n - min_side:
            candidates = sorted(side)
            removed = False
            for v in candidates:
                trial = side - {v}
                if not inst.forbidden_crossings(trial):
                    side = trial
                    removed = True
                    break
            if not removed:
                return None
    return side


def mwum_solve(sdp: SdpInstance, alpha: float, delta: float,
               cfg: Optional[MwumConfig] = None,
               rng: Optional[np.random.Generator] = None) -> MwumResult:
    """Feasibility run for one objective guess alpha."""
    cfg = cfg or MwumConfig(delta=delta)
    rng = rng or np.random.default_rng(cfg.seed)
    inst = sdp.inst
    m = sdp.m
    n = inst.n
    sigma = 1.0 / (4.0 * math.log2(max(4, n)))

    eps_mult = delta * alpha / (2.0 * cfg.rho * m)
    eps = math.log1p(min(0.5, max(1e-4, eps_mult)))

    state = MwumState(X=np.eye(m), feedback_sum=np.zeros((m, m)), eps=eps)
    best_cut: Optional[DirectedCut] = None
    feedbacks: list[np.ndarray] = []

    for it in range(cfg.max_iters):
        state.iteration = it
        check_iterate(state.X, m)
        kind, payload = violation_oracle(state.X, sdp, alpha, sigma, rng, cfg)
        obj = float(np.sum(sdp.C * state.X))
        if kind in ("none", "cut"):
            cut = payload if kind == "cut" else None
            if cut is not None and (best_cut is None or cut.cost < best_cut.cost):
                best_cut = cut
            state.record(obj, 0.0, 0.0)
            return MwumResult(status="primal", X=state.X, cut=best_cut,
                              dual_value=obj, dual_certified=False,
                              iterations=it + 1, log=state.log)
        F = payload
        fnorm = float(np.linalg.norm(F, 2))
        if fnorm > cfg.rho:
            state.log.append(f"width-clip norm={fnorm:.3f} > rho={cfg.rho}")
            F = F * (cfg.rho / fnorm)
        feedbacks.append(F)
        state.record(obj, float(np.max(np.abs(F))), fnorm)
        # growing X along the accumulated feedback raises F . X toward
        # feasibility; the rho-scaled exponent realizes the (1+eps)^M rule
        state.feedback_sum += F / max(1e-12, cfg.rho)
        W = _matrix_exp_sym(state.eps * state.feedback_sum)
        state.X = _normalize_trace(W, m, state.log)

    avg = sum(feedbacks) / len(feedbacks) if feedbacks else np.zeros((m, m))
    shifted = avg + (delta * alpha / m) * np.eye(m)
    eigs = np.linalg.eigvalsh((shifted + shifted.T) / 2.0)
    certified = bool(eigs.min() >= -1e-8)
    return MwumResult(status="dual", X=state.X, cut=best_cut,
                      dual_value=(1.0 + delta) * alpha, dual_certified=certified,
                      iterations=cfg.max_iters, log=state.log)


def check_iterate(X: np.ndarray, m: int):
    """Primal iterate invariants: PSD within tolerance and trace m."""
    tr = float(np.trace(X))
    if abs(tr - m) > TRACE_TOL * m:
        raise AssertionError(f"trace drifted: {tr} != {m}")
    eigs = np.linalg.eigvalsh((X + X.T) / 2.0)
    if eigs.min() < -1e-7:
        raise AssertionError(f"iterate lost PSD: min eig {eigs.min():.3e}")


def _matrix_exp_sym(A: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((A + A.T) / 2.0)
    w = w - w.max()  # overflow guard; normalization cancels the shift
    return (V * np.exp(w)) @ V.T


def mwum_binary_search(sdp: SdpInstance, delta: float = 0.1,
                       cfg: Optional[MwumConfig] = None,
                       seed: int = 0) -> tuple[DirectedCut, float, list[str]]:
    """Multiplicative grid search on alpha; returns the best cut found.

    A final single-move local search polishes the cut without breaking
    balance or forbidden constraints.
    """
    cfg = cfg or MwumConfig(delta=delta, seed=seed)
    inst = sdp.inst
    total = sum(w for _, _, w in inst.arcs)
    alpha = 1.0
    best: Optional[DirectedCut] = None
    alpha_star = max(1.0, total)
    log: list[str] = []
    while alpha <= max(1.0, total) * (1.0 + delta):
        rng = np.random.default_rng((seed, int(alpha * 1000)))
        res = mwum_solve(sdp, alpha, delta, cfg=cfg, rng=rng)
        log.extend(res.log)
        log.append(f"alpha={alpha:.4f} status={res.status}")
        if res.status == "primal":
            alpha_star = alpha
            if res.cut is not None:
                if best is None or res.cut.cost < best.cost:
                    best = res.cut
            break
        alpha *= (1.0 + delta)

    if best is None:
        rigid_like = [(v, u) for (u, v) in inst.forbidden]
        try:
            best = rigid_prefix_cut(inst, rigid_like,
                                    max(1, int((inst.c / 2.0) * inst.n)))
        except CutInfeasibleError:
            raise CutError("mwum found no feasible cut")
    best = _local_search(inst, best, seed=seed)
    return best, alpha_star, log


def _local_search(inst: CutInstance, cut: DirectedCut,
                  seed: int = 0, restarts: int = 16) -> DirectedCut:
    """Single-move descent from the given cut plus seeded random restarts."""
    n = inst.n
    min_side = max(1, int((inst.c / 2.0) * n))
    rng = np.random.default_rng((seed, 0xC07))

    def descend(side: set[int]) -> Optional[set[int]]:
        side = _repair_cut(inst, set(side))
        if side is None:
            return None
        improved = True
        while improved:
            improved = False
            cost_now = inst.cut_cost(side)
            for v in range(n):
                trial = set(side)
                if v in trial:
                    if len(trial) - 1 < min_side:
                        continue
                    trial.discard(v)
                else:
                    if len(trial) + 1 > n - min_side:
                        continue
                    trial.add(v)
                if inst.forbidden_crossings(trial):
                    continue
                if inst.cut_cost(trial) < cost_now - 1e-12:
                    side = trial
                    cost_now = inst.cut_cost(side)
                    improved = True
        return side

    starts: list[set[int]] = [set(cut.side_a)]
    for k in range(min_side, n - min_side + 1):
        starts.append(set(range(k)))
    for _ in range(restarts):
        size = int(rng.integers(min_side, n - min_side + 1))
        starts.append(set(int(x) for x in rng.choice(n, size, replace=False)))
    best_side: Optional[set[int]] = None
    for s in starts:
        got = descend(s)
        if got is None:
            continue
        if best_side is None or inst.cut_cost(got) < inst.cut_cost(best_side):
            best_side = got
    if best_side is None:
        return cut
    return DirectedCut.from_sides(inst, best_side)
