"""Integer Smith normal form and homology over Z and Z_p.

SNF works on plain Python integers (no overflow) with smallest-magnitude
pivoting; the pipeline entry point runs the full matching machinery and
must agree with the simplicial chain computation for any solver or seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .complexes import SimplicialComplex, boundary_matrix

Matrix = Union[Sequence[Sequence[int]], np.ndarray, sp.spmatrix]


class HomologyError(ValueError):
    pass


def _to_int_rows(M: Matrix) -> list[list[int]]:
    if sp.issparse(M):
        M = M.toarray()
    if isinstance(M, np.ndarray):
        return [[int(x) for x in row] for row in M.tolist()]
    return [[int(x) for x in row] for row in M]


def smith_normal_form(M: Matrix) -> tuple[list[int], int]:
    """Invariant factors (each dividing the next) and the rank."""
    A = _to_int_rows(M)
    rows = len(A)
    cols = len(A[0]) if rows else 0
    factors: list[int] = []
    s = 0
    while s < min(rows, cols):
        pivot = None
        best = None
        for i in range(s, rows):
            for j in range(s, cols):
                v = A[i][j]
                if v != 0 and (best is None or abs(v) < best):
                    best = abs(v)
                    pivot = (i, j)
        if pivot is None:
            break
        pi, pj = pivot
        A[s], A[pi] = A[pi], A[s]
        for row in A:
            row[s], row[pj] = row[pj], row[s]

        dirty = True
        while dirty:
            dirty = False
            for i in range(s + 1, rows):
                if A[i][s]:
                    q = A[i][s] // A[s][s]
                    if q:
                        for j in range(s, cols):
                            A[i][j] -= q * A[s][j]
                    if A[i][s]:
                        A[s], A[i] = A[i], A[s]
                        dirty = True
            for j in range(s + 1, cols):
                if A[s][j]:
                    q = A[s][j] // A[s][s]
                    if q:
                        for i in range(s, rows):
                            A[i][j] -= q * A[i][s]
                    if A[s][j]:
                        for i in range(rows):
                            A[i][s], A[i][j] = A[i][j], A[i][s]
                        dirty = True
        # divisibility: fold any non-multiple row in and redo the pivot
        fix = None
        for i in range(s + 1, rows):
            if any(A[i][j] % A[s][s] for j in range(s + 1, cols)):
                fix = i
                break
        if fix is not None:
            for j in range(s, cols):
                A[s][j] += A[fix][j]
            continue
        factors.append(abs(A[s][s]))
        s += 1
    return factors, len(factors)


def rank_mod_p(M: Matrix, p: int) -> int:
    rows_list = _to_int_rows(M)
    if not rows_list or not rows_list[0]:
        return 0
    A = np.array(rows_list, dtype=np.int64) % p
    rows, cols = A.shape
    rank = 0
    for j in range(cols):
        piv = None
        for i in range(rank, rows):
            if A[i, j] % p:
                piv = i
                break
        if piv is None:
            continue
        A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, j]), -1, p)
        A[rank] = (A[rank] * inv) % p
        for i in range(rows):
            if i != rank and A[i, j]:
                A[i] = (A[i] - A[i, j] * A[rank]) % p
        rank += 1
        if rank == rows:
            break
    return rank


@dataclass
class HomologyGroups:
    betti: list[int]
    torsion: dict[int, list[int]]      # dim -> invariant factors > 1 (Z only)
    coefficients: str                  # "Z" or "Z<p>"

    def report(self) -> str:
        lines = []
        for q, b in enumerate(self.betti):
            parts = []
            if b:
                parts.append(f"Z^{b}" if b > 1 else "Z")
            for d in self.torsion.get(q, []):
                parts.append(f"Z/{d}")
            if self.coefficients != "Z" and parts:
                parts = [p.replace("Z", self.coefficients, 1) for p in parts]
            lines.append(f"H_{q} = " + (" (+) ".join(parts) if parts else "0"))
        return "\n".join(lines) + "\n"

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomologyGroups):
            return NotImplemented

        def trim(xs: list[int]) -> list[int]:
            out = list(xs)
            while out and out[-1] == 0:
                out.pop()
            return out

        return (trim(self.betti) == trim(other.betti)
                and {q: t for q, t in self.torsion.items() if t}
                == {q: t for q, t in other.torsion.items() if t}
                and self.coefficients == other.coefficients)


def homology_from_chain(cell_counts: Sequence[int], boundaries: Sequence[Matrix],
                        coeff: str = "Z") -> HomologyGroups:
    """Homology of a chain complex given d_1 .. d_top.

    ``boundaries[q-1]`` holds the matrix of d_q; the chain identity
    d_q . d_{q+1} = 0 is verified up front over the integers.
    """
    top = len(cell_counts) - 1
    mats = [_to_int_rows(b) for b in boundaries]
    for q in range(len(mats) - 1):
        A, B = mats[q], mats[q + 1]
        if not A or not B or not A[0]:
            continue
        if len(A[0]) != len(B):
            raise HomologyError(f"shape mismatch between d_{q + 1} and d_{q + 2}")
        for i in range(len(A)):
            for j in range(len(B[0]) if B else 0):
                if sum(A[i][k] * B[k][j] for k in range(len(B))) != 0:
                    raise HomologyError(
                        f"chain condition fails at d_{q + 1} d_{q + 2}")

    def rank_of(q: int) -> int:
        if q < 1 or q > len(mats):
            return 0
        M = mats[q - 1]
        if not M or not M[0]:
            return 0
        if coeff == "Z":
            return smith_normal_form(M)[1]
        return rank_mod_p(M, int(coeff[1:]))

    betti = []
    torsion: dict[int, list[int]] = {}
    for q in range(top + 1):
        b = cell_counts[q] - rank_of(q) - rank_of(q + 1)
        betti.append(int(b))
        if coeff == "Z" and q < len(mats) and mats[q] and mats[q][0]:
            factors, _ = smith_normal_form(mats[q])
            tor = [f for f in factors if f > 1]
            if tor:
                torsion[q] = tor
    return HomologyGroups(betti=betti, torsion=torsion, coefficients=coeff)


def simplicial_homology(K: SimplicialComplex, coeff: str = "Z") -> HomologyGroups:
    counts = K.counts()
    boundaries = [boundary_matrix(K, q) for q in range(1, K.max_dim + 1)]
    return homology_from_chain(counts, boundaries, coeff=coeff)


def homology_via_mmup(K: SimplicialComplex, cfg=None, gadget_mode: str = "fft",
                      coeff: str = "Z", prune: bool = False,
                      cancel: bool = True) -> HomologyGroups:
    """Matching pipeline: gadget, cut recursion, flow boundary, normal form."""
    from . import pruning as pruning_mod
    from .gadget import recover_matching, reduce_mmup_to_pop
    from .morse import compute_morse_boundary, extract_dgvf
    from .popsolve import SolverConfig, solve_min_pop

    cfg = cfg or SolverConfig()
    work = K
    if prune:
        work, _, _ = pruning_mod.prune_boundary(K)

    if len(work) == 0:
        raise HomologyError("empty complex")
    if work.max_dim == 0 or len(work) == 1:
        dgvf = extract_dgvf(work, [])
    else:
        inst = reduce_mmup_to_pop(work, mode=gadget_mode)
        sol, _ = solve_min_pop(inst, cfg)
        matching, _ = recover_matching(inst, sol, work)
        hasse_pairs = sorted(matching)
        dgvf = extract_dgvf(work, hasse_pairs)

    if cancel:
        dgvf = greedy_cancel(work, dgvf)

    boundary = compute_morse_boundary(work, dgvf)
    counts = [0] * (work.max_dim + 1)
    for c in boundary.critical:
        counts[work.simplices[c].dim] += 1
    matrices = [boundary.matrix(q) for q in range(1, work.max_dim + 1)]
    groups = homology_from_chain(counts, matrices, coeff=coeff)
    while len(groups.betti) < K.max_dim + 1:
        groups.betti.append(0)  # pruning may drop the top dimension entirely
    return groups


def greedy_cancel(K: SimplicialComplex, dgvf):
    """Repeatedly cancel critical pairs joined by a unique gradient path.

    Candidates come from unit coefficients of the boundary computed once
    per sweep; the cancellation itself revalidates path uniqueness against
    the live field, so a stale column can only cause a refusal.
    """
    from .morse import CancelError, cancel_pair, compute_morse_boundary

    changed = True
    while changed:
        changed = False
        boundary = compute_morse_boundary(K, dgvf)
        by_dim: dict[int, list[int]] = {}
        for c in boundary.critical:
            by_dim.setdefault(K.simplices[c].dim, []).append(c)
        for q in sorted(by_dim, reverse=True):
            if q == 0:
                continue
            for sigma in by_dim[q]:
                if dgvf.is_matched(sigma):
                    continue
                for tau, coeff_val in sorted(boundary.columns[sigma].items()):
                    if abs(coeff_val) != 1 or dgvf.is_matched(tau):
                        continue
                    try:
                        dgvf = cancel_pair(K, dgvf, tau, sigma)
                        changed = True
                        break
                    except CancelError:
                        continue
    return dgvf
