"""Directed balanced cuts that must not cross forbidden arcs.

Three solver paths share the CutInstance model: an exact Gray-code
enumerator (the oracle), an SDP-embedding plus ball rounding in the style
of hyperplane-separated sets with a reference vector, and (in mwum.py) a
primal-dual matrix-weights loop.

Cut semantics: a cut (A, B) places A first in the assembled linear order;
its cost is the weight of instance arcs crossing from A to B, and no
forbidden arc may cross from A to B.  Forbidden arcs are reverses of rigid
arcs, so any prefix of a topological order of the rigid arcs is feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

UNIT_TOL = 1e-6
TRIANGLE_TOL = 1e-6
SPREAD_TOL = 1e-6
FORBIDDEN_TOL = 1e-6


class CutError(RuntimeError):
    pass


class CutInfeasibleError(CutError):
    """No balanced cut avoids the forbidden arcs."""


class EmbeddingError(CutError):
    """Reference solver hit its iteration limit before feasibility."""

    def __init__(self, msg: str, residuals: dict[str, float]):
        super().__init__(f"{msg}: residuals {residuals}")
        self.residuals = residuals


@dataclass
class CutInstance:
    n: int
    arcs: list[tuple[int, int, float]]          # (src, dst, weight) cost arcs
    forbidden: set[tuple[int, int]]             # arcs that must not cross A->B
    c: float = 1 / 3

    def cut_cost(self, side_a: set[int]) -> float:
        return sum(w for u, v, w in self.arcs if u in side_a and v not in side_a)

    def forbidden_crossings(self, side_a: set[int]) -> list[tuple[int, int]]:
        return [(u, v) for (u, v) in self.forbidden if u in side_a and v not in side_a]


@dataclass
class DirectedCut:
    side_a: tuple[int, ...]
    side_b: tuple[int, ...]
    cost: float
    balance: float

    @classmethod
    def from_sides(cls, inst: CutInstance, side_a: set[int]) -> "DirectedCut":
        side_b = set(range(inst.n)) - side_a
        return cls(tuple(sorted(side_a)), tuple(sorted(side_b)),
                   inst.cut_cost(side_a),
                   min(len(side_a), len(side_b)) / inst.n if inst.n else 0.0)


# -- exact enumeration ----------------------------------------------------

def exact_dbcre(inst: CutInstance) -> DirectedCut:
    """Minimum-cost c-balanced directed cut by Gray-code enumeration.

    Both sides must have at least ceil(c*n) vertices and no forbidden arc
    may cross A->B.  Ties break toward the lexicographically smallest
    A-side.  Bounded to n <= 22.
    """
    n = inst.n
    if n > 22:
        raise CutError(f"exact enumeration bounded to 22 nodes, got {n}")
    need = max(1, math.ceil(inst.c * n))
    if 2 * need > n:
        raise CutInfeasibleError(f"no partition has both sides >= {need} of {n}")

    out_arcs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    in_arcs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for u, v, w in inst.arcs:
        out_arcs[u].append((v, w))
        in_arcs[v].append((u, w))
    forb_out: list[list[int]] = [[] for _ in range(n)]
    forb_in: list[list[int]] = [[] for _ in range(n)]
    for u, v in inst.forbidden:
        forb_out[u].append(v)
        forb_in[v].append(u)

    in_a = [False] * n
    cost = 0.0
    bad = 0  # forbidden arcs currently crossing
    size = 0
    best: Optional[tuple[float, tuple[int, ...]]] = None

    def flip(x: int):
        nonlocal cost, bad, size
        if in_a[x]:
            in_a[x] = False
            size -= 1
            cost -= sum(w for v, w in out_arcs[x] if not in_a[v])
            cost += sum(w for u, w in in_arcs[x] if in_a[u])
            bad -= sum(1 for v in forb_out[x] if not in_a[v])
            bad += sum(1 for u in forb_in[x] if in_a[u])
        else:
            in_a[x] = True
            size += 1
            cost += sum(w for v, w in out_arcs[x] if not in_a[v])
            cost -= sum(w for u, w in in_arcs[x] if in_a[u])
            bad += sum(1 for v in forb_out[x] if not in_a[v])
            bad -= sum(1 for u in forb_in[x] if in_a[u])

    for g in range(1, 1 << n):
        flip((g & -g).bit_length() - 1)
        if bad or not (need <= size <= n - need):
            continue
        key = (round(cost, 12), tuple(i for i in range(n) if in_a[i]))
        if best is None or key < best:
            best = key
    if best is None:
        raise CutInfeasibleError("every balanced partition crosses a forbidden arc")
    return DirectedCut.from_sides(inst, set(best[1]))


def rigid_prefix_cut(inst: CutInstance, rigid_arcs: Sequence[tuple[int, int]],
                     min_side: int) -> DirectedCut:
    """Cheapest prefix cut of a topological order of the rigid arcs.

    Always feasible: a prefix never puts the head of a rigid arc before its
    tail, so no forbidden (reversed-rigid) arc crosses forward.  Among
    equal-cost prefixes the most balanced one wins, keeping the recursion
    depth logarithmic.
    """
    from .gadget import topological_order
    order = topological_order(inst.n, list(rigid_arcs))
    best_side: Optional[set[int]] = None
    best_key: Optional[tuple[float, int, int]] = None
    prefix: set[int] = set()
    cost = 0.0
    out_arcs: dict[int, list[tuple[int, float]]] = {}
    in_arcs: dict[int, list[tuple[int, float]]] = {}
    for u, v, w in inst.arcs:
        out_arcs.setdefault(u, []).append((v, w))
        in_arcs.setdefault(v, []).append((u, w))
    for k, x in enumerate(order[:-1], start=1):
        prefix.add(x)
        cost += sum(w for v, w in out_arcs.get(x, ()) if v not in prefix)
        cost -= sum(w for u, w in in_arcs.get(x, ()) if u in prefix)
        if min_side <= k <= inst.n - min_side:
            key = (round(cost, 12), abs(2 * k - inst.n), k)
            if best_key is None or key < best_key:
                best_key = key
                best_side = set(prefix)
    if best_side is None:
        raise CutInfeasibleError(
            f"no feasible prefix cut with both sides >= {min_side}")
    cut = DirectedCut.from_sides(inst, best_side)
    assert not inst.forbidden_crossings(best_side)
    return cut


# -- SDP relaxation -------------------------------------------------------

def semimetric_matrix(m: int, u: int, v: int) -> np.ndarray:
    """Matrix M with M . X = D(u, v) on the Gram matrix X (index 0 = v0)."""
    M = np.zeros((m, m))
    M[v, v] += 2.0
    M[0, v] -= 1.0
    M[v, 0] -= 1.0
    M[0, u] += 1.0
    M[u, 0] += 1.0
    M[u, v] -= 1.0
    M[v, u] -= 1.0
    return M


@dataclass
class SdpInstance:
    inst: CutInstance
    m: int                        # Gram dimension: vertices + reference
    C: np.ndarray                 # objective matrix, (1/8) sum of arc semimetrics
    spread_bound: float           # 4c(1-c)n^2

    @classmethod
    def build(cls, inst: CutInstance) -> "SdpInstance":
        m = inst.n + 1
        C = np.zeros((m, m))
        for u, v, w in inst.arcs:
            C += (w / 8.0) * semimetric_matrix(m, u + 1, v + 1)
        bound = 4.0 * inst.c * (1.0 - inst.c) * inst.n ** 2
        return cls(inst=inst, m=m, C=C, spread_bound=bound)


def build_sdp(inst: CutInstance) -> SdpInstance:
    return SdpInstance.build(inst)


@dataclass
class Embedding:
    gram: np.ndarray              # (n+1) x (n+1), row/col 0 = reference v0
    vectors: np.ndarray = field(init=False)  # unit rows, factor of gram

    def __post_init__(self):
        w, V = np.linalg.eigh((self.gram + self.gram.T) / 2.0)
        w = np.clip(w, 0.0, None)
        self.vectors = V * np.sqrt(w)

    @property
    def n(self) -> int:
        return self.gram.shape[0] - 1

    def dist2(self, i: int, j: int) -> float:
        g = self.gram
        return float(g[i, i] + g[j, j] - 2.0 * g[i, j])

    def semimetric(self, u: int, v: int) -> float:
        """D(u, v) over embedding rows (0 is the reference)."""
        return self.dist2(0, v) - self.dist2(0, u) + self.dist2(u, v)

    def residuals(self, sdp: SdpInstance) -> dict[str, float]:
        g = self.gram
        m = sdp.m
        unit = float(np.max(np.abs(np.diag(g) - 1.0)))
        tri = 0.0
        d2 = np.add.outer(np.diag(g), np.diag(g)) - 2.0 * g
        for j in range(m):
            viol = d2[:, None, j] + d2[j, None, :].reshape(1, m) - d2
            # viol[i,k] = d2[i,j] + d2[j,k] - d2[i,k]; negative = violated
            tri = max(tri, float(-viol.min()))
        spread = float(sdp.spread_bound - np.sum(np.triu(d2[1:, 1:], k=1)))
        forb = sum(max(0.0, self.semimetric(u + 1, v + 1))
                   for u, v in sdp.inst.forbidden)
        return {
            "unit": unit,
            "triangle": max(0.0, tri),
            "spreading": max(0.0, spread),
            "forbidden_sum": forb,
        }

    def is_feasible(self, sdp: SdpInstance) -> bool:
        r = self.residuals(sdp)
        return (r["unit"] <= UNIT_TOL and r["triangle"] <= TRIANGLE_TOL
                and r["spreading"] <= SPREAD_TOL
                and r["forbidden_sum"] <= FORBIDDEN_TOL)

    def objective(self, sdp: SdpInstance) -> float:
        return float(np.sum(sdp.C * self.gram))


def _project_psd_unit_diag(X: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((X + X.T) / 2.0)
    w = np.clip(w, 0.0, None)
    X = (V * w) @ V.T
    d = np.sqrt(np.clip(np.diag(X), 1e-12, None))
    return X / np.outer(d, d)


def _d2_of(X: np.ndarray) -> np.ndarray:
    return np.add.outer(np.diag(X), np.diag(X)) - 2.0 * X


def _sweep_linear_constraints(X: np.ndarray, sdp: SdpInstance,
                              damping: float = 0.6) -> tuple[np.ndarray, float]:
    """One damped simultaneous-projection pass; returns worst violation.

    All violated triangle triples are projected at once against the stale
    distance tensor (damping keeps overlapping corrections stable), then
    the forbidden and spreading hyperplanes get their exact projections.
    """
    m = sdp.m
    worst = 0.0

    d2 = _d2_of(X)
    # lhs[i,j,k] = d2[i,j] + d2[j,k] - d2[i,k]; negative entries violate
    lhs = d2[:, :, None] + d2[None, :, :] - d2[:, None, :]
    viol = np.minimum(lhs, 0.0)
    worst_tri = float(-viol.min()) if viol.size else 0.0
    worst = max(worst, worst_tri)
    if worst_tri > 0.0:
        corr = (-viol) * (damping / 10.0)
        upd = np.zeros_like(X)
        jj = corr.sum(axis=(0, 2))   # weight on entry (j, j)
        ij = corr.sum(axis=2)        # weight on entries (i, j), (j, i)
        jk = corr.sum(axis=0)        # weight on entries (j, k), (k, j)
        ik = corr.sum(axis=1)        # weight on entries (i, k), (k, i)
        upd[np.arange(m), np.arange(m)] += 2.0 * jj
        upd -= ij
        upd -= ij.T
        upd -= jk
        upd -= jk.T
        upd += ik
        upd += ik.T
        X = X + upd

    for u, v in sdp.inst.forbidden:
        a, b = u + 1, v + 1
        val = (2.0 * X[b, b] - 2.0 * X[0, b] + 2.0 * X[0, a] - 2.0 * X[a, b])
        if val > 0.0:
            worst = max(worst, val)
            corr = val / 12.0
            X[b, b] -= 2.0 * corr
            X[0, b] += corr
            X[b, 0] += corr
            X[0, a] -= corr
            X[a, 0] -= corr
            X[a, b] += corr
            X[b, a] += corr

    d2 = _d2_of(X)
    total = float(np.sum(np.triu(d2[1:, 1:], k=1)))
    gap = sdp.spread_bound - total
    if gap > 0.0:
        worst = max(worst, gap)
        nsub = m - 1
        A = np.full((m, m), -1.0)
        np.fill_diagonal(A, nsub - 1.0)
        A[0, :] = 0.0
        A[:, 0] = 0.0
        norm2 = float(np.sum(A * A))
        X = X + A * (gap / norm2)
    return X, worst


def _integral_fallback(inst: CutInstance) -> Optional["Embedding"]:
    """Boolean embedding of the best enumerable (else prefix) feasible cut."""
    try:
        if inst.n <= 22:
            cut = exact_dbcre(inst)
        else:
            rigid_like = [(v, u) for (u, v) in inst.forbidden]
            cut = rigid_prefix_cut(inst, rigid_like,
                                   max(1, math.ceil(inst.c * inst.n)))
    except CutError:
        return None
    return boolean_embedding(inst, set(cut.side_a))


def solve_embedding(sdp: SdpInstance, seed: int = 0, max_iters: int = 150,
                    feasibility_iters: int = 3000,
                    log: Optional[list[str]] = None) -> Embedding:
    """Reference embedding solver: subgradient descent plus projections.

    Gradient steps on the linear objective alternate with simultaneous
    hyperplane projections for the forbidden / spreading / triangle
    constraints and a PSD-and-unit-diagonal projection, then a
    feasibility-only phase drives residuals under the published
    tolerances.  When the polish stalls (the spreading constraint is tight
    at tiny sizes), the boolean embedding of the best integral cut serves
    as the feasible answer: a relaxation may always return an integral
    point.
    """
    rng = np.random.default_rng(seed)
    m = sdp.m
    X = np.eye(m)
    X += 1e-3 * _symmetrize(rng.standard_normal((m, m)))
    X = _project_psd_unit_diag(X)

    cn = float(np.linalg.norm(sdp.C)) or 1.0
    best: Optional[tuple[float, np.ndarray]] = None
    for t in range(max_iters):
        step = 0.4 / (cn * math.sqrt(t + 1.0))
        X = X - step * sdp.C
        for _ in range(3):
            X, _ = _sweep_linear_constraints(X, sdp)
        X = _project_psd_unit_diag(X)
        emb = Embedding(gram=X.copy())
        r = emb.residuals(sdp)
        score = emb.objective(sdp) + 10.0 * cn * sum(r.values())
        if log is not None:
            log.append(f"iter={t} objective={emb.objective(sdp):.6f} "
                       f"max_residual={max(r.values()):.6f} feedback_norm=0")
        if best is None or score < best[0]:
            best = (score, X.copy())

    X = best[1]
    tol = min(TRIANGLE_TOL, SPREAD_TOL, FORBIDDEN_TOL) / 4.0
    for t in range(feasibility_iters):
        X, worst = _sweep_linear_constraints(X, sdp, damping=0.9)
        X = _project_psd_unit_diag(X)
        if worst <= tol:
            break
    emb = Embedding(gram=X)
    if emb.is_feasible(sdp):
        fallback = _integral_fallback(sdp.inst)
        if fallback is not None and fallback.is_feasible(sdp) \
                and fallback.objective(sdp) < emb.objective(sdp):
            return fallback
        return emb
    fallback = _integral_fallback(sdp.inst)
    if fallback is not None and fallback.is_feasible(sdp):
        return fallback
    raise EmbeddingError("embedding solver hit iteration limit",
                         emb.residuals(sdp))


def _symmetrize(A: np.ndarray) -> np.ndarray:
    return (A + A.T) / 2.0


# -- rounding -------------------------------------------------------------

def boolean_embedding(inst: CutInstance, side_a: set[int]) -> Embedding:
    """The integral embedding of a partition: A at v0, the rest antipodal."""
    m = inst.n + 1
    X = np.empty((m, m))
    signs = np.array([1.0] + [1.0 if i in side_a else -1.0 for i in range(inst.n)])
    X = np.outer(signs, signs)
    return Embedding(gram=X)


def round_arv(emb: Embedding, inst: CutInstance, rng: np.random.Generator,
              max_retries: int = 40) -> DirectedCut:
    """Ball rounding with hyperplane-separated anchor sets and a fat band.

    A random direction separates well-spread sets U and V; a ball around
    the reference vector, with its radius picked near the U-median but
    clamped to the balance window, becomes the A side.  Band points within
    a random squared distance of A join it unless a rigid arc from outside
    targets them.  Forbidden arcs never cross A->B: the forbidden condition
    makes each arc head at least as close to the reference as its tail.
    """
    n = inst.n
    if n < 2:
        raise CutError("nothing to cut")
    min_side = max(1, int((inst.c / 2.0) * n))
    if 2 * min_side > n:
        raise CutInfeasibleError("balance target impossible at this size")
    d0 = np.array([emb.dist2(0, i + 1) for i in range(n)])
    delta = 1.0 / (20.0 * math.sqrt(max(2.0, math.log(max(n, 2)))))

    for _ in range(max_retries):
        r = rng.standard_normal(emb.vectors.shape[1])
        r /= np.linalg.norm(r)
        proj = emb.vectors[1:] @ r
        third = max(1, n // 3)
        by_proj = np.argsort(proj, kind="stable")
        set_v = list(by_proj[:third])
        set_u = list(by_proj[-third:])
        # enforce separation: drop close cross pairs
        changed = True
        while changed:
            changed = False
            for i in list(set_u):
                for j in list(set_v):
                    if i in set_u and j in set_v and emb.dist2(i + 1, j + 1) <= delta:
                        set_u.remove(i)
                        set_v.remove(j)
                        changed = True
        if not set_u or not set_v:
            continue

        # the separated set whose majority falls inside the U-median ball
        # anchors the radius; both arms stay ball cuts around the reference
        phi_u = float(np.median(d0[set_u]))
        v_plus = sum(1 for j in set_v if d0[j] <= phi_u)
        v_minus = len(set_v) - v_plus
        phi2 = float(np.median(d0[set_v])) if v_plus >= v_minus else phi_u
        side_a = _ball_side(inst, d0, phi2, min_side)
        if side_a is None:
            continue

        sigma = rng.uniform(0.0, delta)
        side_a = _absorb_band(inst, emb, side_a, sigma, n - min_side)
        crossings = inst.forbidden_crossings(side_a)
        if crossings:
            continue
        if not (min_side <= len(side_a) <= n - min_side):
            continue
        return DirectedCut.from_sides(inst, side_a)
    raise CutError(f"rounding failed after {max_retries} retries")


def _ball_side(inst: CutInstance, d0: np.ndarray, phi2: float,
               min_side: int) -> Optional[set[int]]:
    """Ball membership with the radius clamped into the balance window.

    The threshold is snapped to a midpoint between consecutive distinct
    distances so that no forbidden arc straddles it within tolerance.
    """
    n = inst.n
    order = np.argsort(d0, kind="stable")
    ds = d0[order]
    # candidate thresholds after k nearest points, k in [min_side, n-min_side]
    candidates = []
    for k in range(min_side, n - min_side + 1):
        lo = ds[k - 1]
        hi = ds[k] if k < n else lo + 1.0
        if hi - lo < 4.0 * FORBIDDEN_TOL and k < n:
            continue
        candidates.append(((lo + hi) / 2.0, k))
    for thr, _ in sorted(candidates, key=lambda t: abs(t[0] - phi2)):
        side = {int(i) for i in range(n) if d0[i] <= thr}
        if inst.forbidden_crossings(side):
            continue
        return side
    return None


def _absorb_band(inst: CutInstance, emb: Embedding, side_a: set[int],
                 sigma: float, max_size: int) -> set[int]:
    """Grow A with nearby points whose rigid in-arcs all start inside A."""
    rigid_into: dict[int, list[int]] = {}
    for u, v in inst.forbidden:  # forbidden (u, v) <=> rigid (v, u)
        rigid_into.setdefault(u, []).append(v)
    changed = True
    while changed and len(side_a) < max_size:
        changed = False
        outside = [i for i in range(inst.n) if i not in side_a]
        for i in outside:
            if len(side_a) >= max_size:
                break
            near = any(emb.dist2(i + 1, a + 1) <= sigma for a in side_a)
            if not near:
                continue
            if any(w not in side_a for w in rigid_into.get(i, ())):
                continue
            side_a.add(i)
            changed = True
    return side_a
