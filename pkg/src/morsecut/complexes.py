"""Simplicial complex data model, Hasse graph, boundary matrices.

Cells are identified by dense integer ids assigned in (dimension,
lexicographic-vertex) order, so matrix row/column indices are reproducible
across runs.  Orientation is the canonical one induced by sorted vertex
lists: the face omitting the i-th vertex carries sign (-1)**i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_DIM = 8


class ComplexError(ValueError):
    """Invalid complex input (parse failure, closure violation, bad query)."""


@dataclass(frozen=True)
class Simplex:
    id: int
    dim: int
    vertices: tuple[int, ...]

    def __post_init__(self):
        if self.dim != len(self.vertices) - 1:
            raise ComplexError(f"dim {self.dim} != |vertices|-1 for {self.vertices}")
        if any(a >= b for a, b in zip(self.vertices, self.vertices[1:])):
            raise ComplexError(f"vertices not strictly increasing: {self.vertices}")

    def faces(self) -> list[tuple[int, ...]]:
        """Codimension-1 faces in omission order (omit i-th vertex)."""
        v = self.vertices
        return [v[:i] + v[i + 1:] for i in range(len(v))]


class SimplicialComplex:
    """Face-closed complex with codimension-1 incidence maps."""

    def __init__(self, simplices_by_vertices: Iterable[Sequence[int]],
                 max_dim: int = DEFAULT_MAX_DIM):
        cells: set[tuple[int, ...]] = set()
        for verts in simplices_by_vertices:
            vt = tuple(sorted(set(verts)))
            if len(vt) != len(verts):
                raise ComplexError(f"repeated vertex in simplex {tuple(verts)}")
            if len(vt) - 1 > max_dim:
                raise ComplexError(f"simplex {vt} exceeds max dimension {max_dim}")
            for k in range(1, len(vt) + 1):
                cells.update(combinations(vt, k))

        ordered = sorted(cells, key=lambda v: (len(v), v))
        self.max_dim = max((len(v) - 1 for v in ordered), default=-1)
        self.simplices: dict[int, Simplex] = {}
        self._id_of: dict[tuple[int, ...], int] = {}
        for cid, verts in enumerate(ordered):
            self.simplices[cid] = Simplex(cid, len(verts) - 1, verts)
            self._id_of[verts] = cid

        # incidence: cell id -> (face ids in omission order, coface ids sorted)
        self.facets_of: dict[int, tuple[int, ...]] = {}
        cofaces: dict[int, list[int]] = {cid: [] for cid in self.simplices}
        for cid, s in self.simplices.items():
            if s.dim == 0:
                self.facets_of[cid] = ()
                continue
            fids = tuple(self._id_of[f] for f in s.faces())
            self.facets_of[cid] = fids
            for fid in fids:
                cofaces[fid].append(cid)
        self.cofaces_of: dict[int, tuple[int, ...]] = {
            cid: tuple(sorted(cs)) for cid, cs in cofaces.items()
        }

    # -- basic queries -------------------------------------------------

    def __len__(self) -> int:
        return len(self.simplices)

    def id_of(self, vertices: Sequence[int]) -> int:
        vt = tuple(sorted(vertices))
        if vt not in self._id_of:
            raise ComplexError(f"simplex {vt} not in complex")
        return self._id_of[vt]

    def has(self, vertices: Sequence[int]) -> bool:
        return tuple(sorted(vertices)) in self._id_of

    def cells_of_dim(self, q: int) -> list[int]:
        return [cid for cid, s in self.simplices.items() if s.dim == q]

    def counts(self) -> list[int]:
        out = [0] * (self.max_dim + 1)
        for s in self.simplices.values():
            out[s.dim] += 1
        return out

    def face_sign(self, cid: int, fid: int) -> int:
        """Incidence coefficient <boundary(cid), fid> in {-1, 0, +1}."""
        fids = self.facets_of[cid]
        try:
            i = fids.index(fid)
        except ValueError:
            return 0
        return -1 if i % 2 else 1

    # -- serialization -------------------------------------------------

    def serialize(self) -> str:
        lines = ["# dim counts: " + " ".join(str(c) for c in self.counts())]
        maximal = [s for s in self.simplices.values() if not self.cofaces_of[s.id]]
        for s in sorted(maximal, key=lambda s: (s.dim, s.vertices)):
            lines.append(" ".join(str(v) for v in s.vertices))
        return "\n".join(lines) + "\n"


def parse_complex(text: str, max_dim: int = DEFAULT_MAX_DIM) -> SimplicialComplex:
    """Parse a line-oriented vertex listing (one simplex per line, # comments)."""
    listed: list[Sequence[int]] = []
    seen: dict[tuple[int, ...], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            verts = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise ComplexError(f"line {lineno}: non-integer vertex token ({exc})")
        key = tuple(sorted(verts))
        if len(set(verts)) != len(verts):
            raise ComplexError(f"line {lineno}: repeated vertex in {verts}")
        if key in seen:
            raise ComplexError(
                f"line {lineno}: duplicate simplex {key} (first at line {seen[key]})")
        seen[key] = lineno
        listed.append(verts)
    if not listed:
        raise ComplexError("empty complex listing")
    return SimplicialComplex(listed, max_dim=max_dim)


@dataclass
class HasseGraph:
    """One node per cell, one undirected edge per codim-1 incidence.

    Edge i is the pair (face_id, coface_id); edges are sorted by
    (coface id, face id) so edge indices are reproducible.
    """

    complex: SimplicialComplex
    edges: list[tuple[int, int]] = field(default_factory=list)
    level: dict[int, int] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.complex)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edges_at(self, node: int) -> list[int]:
        return self._incident[node]

    def __post_init__(self):
        self._incident: dict[int, list[int]] = {cid: [] for cid in self.complex.simplices}
        for eid, (lo, hi) in enumerate(self.edges):
            self._incident[lo].append(eid)
            self._incident[hi].append(eid)


def build_hasse(K: SimplicialComplex) -> HasseGraph:
    edges = []
    for cid in sorted(K.simplices):
        for fid in K.facets_of[cid]:
            edges.append((fid, cid))
    edges.sort(key=lambda e: (e[1], e[0]))
    level = {cid: s.dim for cid, s in K.simplices.items()}
    return HasseGraph(complex=K, edges=edges, level=level)


def boundary_matrix(K: SimplicialComplex, q: int) -> sp.csc_matrix:
    """Sparse integer matrix of the q-th boundary map.

    Rows are (q-1)-cells, columns q-cells, both in id order within their
    dimension; entries follow the alternating-sign omission convention.
    """
    if q < 1 or q > K.max_dim:
        raise ComplexError(f"boundary dimension {q} out of range [1, {K.max_dim}]")
    rows = K.cells_of_dim(q - 1)
    cols = K.cells_of_dim(q)
    row_index = {cid: i for i, cid in enumerate(rows)}
    data, ri, ci = [], [], []
    for j, cid in enumerate(cols):
        for i, fid in enumerate(K.facets_of[cid]):
            data.append(-1 if i % 2 else 1)
            ri.append(row_index[fid])
            ci.append(j)
    return sp.csc_matrix((data, (ri, ci)), shape=(len(rows), len(cols)), dtype=np.int64)


def euler_characteristic(K: SimplicialComplex) -> int:
    return sum((-1) ** q * c for q, c in enumerate(K.counts()))
