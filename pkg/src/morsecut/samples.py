"""Reference complexes and random generators used by tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .complexes import SimplicialComplex


def solid_triangle() -> SimplicialComplex:
    return SimplicialComplex([(0, 1, 2)])


def triangle_boundary() -> SimplicialComplex:
    return SimplicialComplex([(0, 1), (1, 2), (0, 2)])


def path_complex(n_edges: int) -> SimplicialComplex:
    return SimplicialComplex([(i, i + 1) for i in range(n_edges)])


def two_triangle_strip() -> SimplicialComplex:
    return SimplicialComplex([(0, 1, 2), (1, 2, 3)])


def tetra_boundary() -> SimplicialComplex:
    return SimplicialComplex([(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])


def solid_tetra() -> SimplicialComplex:
    return SimplicialComplex([(0, 1, 2, 3)])


def figure_four_vertices() -> SimplicialComplex:
    """Four vertices, five edges, one triangle; ten cells in all."""
    return SimplicialComplex([(0, 1, 2), (1, 3), (2, 3)])


def cone_over_square() -> SimplicialComplex:
    """Cone with apex 4 over the 4-cycle 0-1-2-3; contractible."""
    return SimplicialComplex([(0, 1, 4), (1, 2, 4), (2, 3, 4), (0, 3, 4)])


def projective_plane() -> SimplicialComplex:
    """Minimal six-vertex triangulation of the real projective plane."""
    faces = [(1, 2, 4), (1, 2, 6), (1, 3, 4), (1, 3, 5), (1, 5, 6),
             (2, 3, 5), (2, 3, 6), (2, 4, 5), (3, 4, 6), (4, 5, 6)]
    return SimplicialComplex(faces)


def grid_complex(rows: int, cols: int) -> SimplicialComplex:
    """Triangulated grid patch; vertex degrees stay bounded."""
    tris = []
    for r in range(rows):
        for c in range(cols):
            a = r * (cols + 1) + c
            b = a + 1
            d = a + cols + 1
            e = d + 1
            tris.append((a, b, d))
            tris.append((b, d, e))
    return SimplicialComplex(tris)


def random_two_complex(rows: int, cols: int, drop: float,
                       seed: int) -> SimplicialComplex:
    """Grid patch with a random fraction of triangles removed."""
    rng = np.random.default_rng(seed)
    tris = []
    for r in range(rows):
        for c in range(cols):
            a = r * (cols + 1) + c
            b = a + 1
            d = a + cols + 1
            e = d + 1
            for tri in ((a, b, d), (b, d, e)):
                if rng.random() >= drop:
                    tris.append(tri)
    if not tris:
        tris = [(0, 1, cols + 1)]
    return SimplicialComplex(tris)


def random_flag_complex(n_vertices: int, p: float, seed: int,
                        max_dim: int = 2) -> SimplicialComplex:
    """Flag complex of a random graph, truncated at ``max_dim``."""
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n_vertices) for j in range(i + 1, n_vertices)
             if rng.random() < p]
    adjacency = {i: set() for i in range(n_vertices)}
    for i, j in edges:
        adjacency[i].add(j)
        adjacency[j].add(i)
    cells: list[tuple[int, ...]] = [(i,) for i in range(n_vertices)]
    cells.extend(edges)
    if max_dim >= 2:
        for i, j in edges:
            for k in sorted(adjacency[i] & adjacency[j]):
                if k > j:
                    cells.append((i, j, k))
    return SimplicialComplex(cells)


def lower_star_filtration(K: SimplicialComplex, seed: int):
    """Random vertex heights, each cell at the max over its vertices."""
    from .persistence import Filtration

    rng = np.random.default_rng(seed)
    vertices = sorted(s.vertices[0] for s in K.simplices.values() if s.dim == 0)
    height = {v: float(rng.integers(0, 64)) + i * 1e-4
              for i, v in enumerate(vertices)}
    value_of = {cid: max(height[v] for v in s.vertices)
                for cid, s in K.simplices.items()}
    return Filtration.from_value_map(K, value_of)
