import numpy as np
import pytest

from morsecut import samples
from morsecut.complexes import (ComplexError, SimplicialComplex,
                                boundary_matrix, build_hasse,
                                euler_characteristic, parse_complex)


def test_parse_single_triangle_closure():
    K = parse_complex("0 1 2\n")
    assert K.counts() == [3, 3, 1]
    assert len(K) == 7


def test_parse_explicit_circle():
    K = parse_complex("0 1\n1 2\n0 2\n")
    assert K.counts() == [3, 3]
    assert not K.has((0, 1, 2))


def test_parse_four_vertex_figure():
    # edges 01, 02, 12, 13, 23 plus the triangle 012
    K = parse_complex("0 1 2\n1 3\n2 3\n")
    assert len(K) == 10
    assert K.counts() == [4, 5, 1]


def test_parse_rejects_duplicates_with_line_number():
    with pytest.raises(ComplexError, match="line 3"):
        parse_complex("0 1\n1 2\n0 1\n")


def test_parse_rejects_bad_token():
    with pytest.raises(ComplexError, match="non-integer"):
        parse_complex("0 x\n")


def test_parse_idempotent_on_serialization():
    K = parse_complex("0 1 2\n1 3\n2 3\n# comment\n")
    again = parse_complex(K.serialize())
    assert again.counts() == K.counts()
    assert set(s.vertices for s in again.simplices.values()) == \
        set(s.vertices for s in K.simplices.values())


def test_ids_are_dense_in_dim_lex_order():
    K = parse_complex("0 1 2\n")
    verts = [K.simplices[i].vertices for i in range(len(K))]
    assert verts == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]


def test_hasse_single_vertex():
    K = parse_complex("5\n")
    H = build_hasse(K)
    assert H.n_nodes == 1 and H.n_edges == 0


def test_hasse_solid_triangle():
    H = build_hasse(samples.solid_triangle())
    assert H.n_nodes == 7 and H.n_edges == 9


def test_hasse_tetra_boundary():
    H = build_hasse(samples.tetra_boundary())
    assert H.n_nodes == 14 and H.n_edges == 24


def test_hasse_edges_span_adjacent_levels_and_roundtrip():
    for K in (samples.two_triangle_strip(), samples.projective_plane()):
        H = build_hasse(K)
        incidences = set()
        for lo, hi in H.edges:
            assert H.level[hi] == H.level[lo] + 1
            incidences.add((lo, hi))
        expected = {(fid, cid) for cid in K.simplices
                    for fid in K.facets_of[cid]}
        assert incidences == expected


def test_boundary_matrix_matches_printed_d1():
    K = samples.figure_four_vertices()
    d1 = boundary_matrix(K, 1).toarray()
    expected = np.array([
        [-1, -1, 0, 0, 0],
        [1, 0, -1, -1, 0],
        [0, 1, 1, 0, -1],
        [0, 0, 0, 1, 1],
    ])
    assert np.array_equal(d1, expected)


def test_boundary_matrix_matches_printed_d2():
    K = samples.figure_four_vertices()
    d2 = boundary_matrix(K, 2).toarray()
    assert np.array_equal(d2.ravel(), np.array([1, -1, 1, 0, 0]))


def test_boundary_composition_vanishes():
    for K in (samples.figure_four_vertices(), samples.tetra_boundary(),
              samples.projective_plane(), samples.solid_tetra()):
        for q in range(2, K.max_dim + 1):
            prod = boundary_matrix(K, q - 1) @ boundary_matrix(K, q)
            assert prod.nnz == 0 or not prod.toarray().any()


def test_boundary_matrix_rejects_bad_dimension():
    K = samples.solid_triangle()
    with pytest.raises(ComplexError):
        boundary_matrix(K, 0)
    with pytest.raises(ComplexError):
        boundary_matrix(K, 3)


def test_euler_characteristic():
    assert euler_characteristic(samples.solid_triangle()) == 1
    assert euler_characteristic(samples.triangle_boundary()) == 0
    assert euler_characteristic(samples.tetra_boundary()) == 2


def test_face_closure_always_holds():
    rng = np.random.default_rng(3)
    for seed in range(5):
        K = samples.random_flag_complex(7, 0.5, seed)
        for s in K.simplices.values():
            for k in range(1, s.dim + 1):
                from itertools import combinations
                for sub in combinations(s.vertices, k):
                    assert K.has(sub)


def test_max_dim_guard():
    with pytest.raises(ComplexError):
        SimplicialComplex([tuple(range(12))], max_dim=8)
