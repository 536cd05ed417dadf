from morsecut import samples
from morsecut.complexes import parse_complex
from morsecut.gadget import recover_matching, reduce_mmup_to_pop
from morsecut.homology import simplicial_homology
from morsecut.morse import extract_dgvf
from morsecut.popsolve import SolverConfig, solve_min_pop
from morsecut.pruning import check_core, find_boundary, prune_boundary

from oracles import min_critical_brute


def test_find_boundary_solid_triangle():
    K = samples.solid_triangle()
    found = find_boundary(K, 2)
    assert found == [K.id_of((0, 1, 2))]


def test_find_boundary_circle_empty():
    assert find_boundary(samples.triangle_boundary(), 1) == []


def test_find_boundary_two_triangles():
    K = samples.two_triangle_strip()
    found = find_boundary(K, 2)
    assert set(found) == {K.id_of((0, 1, 2)), K.id_of((1, 2, 3))}


def test_prune_solid_triangle_to_vertex():
    K = samples.solid_triangle()
    core, trace, seed = prune_boundary(K)
    assert core.counts() == [1]
    assert len(trace.pairs) == 3
    assert len(seed) == 3
    # dimensions never increase along the trace
    dims = [d for d, _, _ in trace.pairs]
    assert dims == sorted(dims, reverse=True)


def test_prune_circle_is_fixed_point():
    K = samples.triangle_boundary()
    core, trace, _ = prune_boundary(K)
    assert core.counts() == K.counts()
    assert trace.pairs == []


def test_prune_cone_to_vertex():
    core, _, _ = prune_boundary(samples.cone_over_square())
    assert core.counts() == [1]


def test_prune_preserves_homology_on_corpus():
    corpus = [samples.solid_triangle(), samples.two_triangle_strip(),
              samples.cone_over_square(), samples.tetra_boundary(),
              samples.projective_plane(), samples.figure_four_vertices()]
    corpus += [samples.random_flag_complex(7, 0.5, s) for s in range(5)]
    for K in corpus:
        core, _, _ = prune_boundary(K)
        a, b = simplicial_homology(K), simplicial_homology(core)
        trim = lambda xs: [x for i, x in enumerate(xs)
                           if any(y != 0 for y in xs[i:])]
        assert trim(a.betti) == trim(b.betti)
        assert a.torsion == b.torsion


def test_core_has_no_boundary_faces_in_any_dimension():
    for seed in range(5):
        K = samples.random_flag_complex(7, 0.5, seed)
        core, _, _ = prune_boundary(K)
        for d in range(1, core.max_dim + 1):
            assert find_boundary(core, d) == []


def test_check_core_single_edge_fails():
    K = parse_complex("0 1\n")
    problems = check_core(K)
    assert len(problems) == 2  # each endpoint dominates the other


def test_check_core_circle_passes():
    assert check_core(samples.triangle_boundary()) == []


def test_check_core_passes_on_all_pruned_outputs():
    corpus = [samples.solid_triangle(), samples.cone_over_square(),
              samples.two_triangle_strip()]
    corpus += [samples.random_flag_complex(7, 0.5, s) for s in range(5)]
    for K in corpus:
        core, _, _ = prune_boundary(K)
        assert check_core(core) == []


def test_seed_pairs_are_a_valid_partial_field():
    K = samples.cone_over_square()
    core, _, seed = prune_boundary(K)
    dgvf = extract_dgvf(K, seed)  # acyclicity and disjointness must hold
    assert len(dgvf.pair_up) == len(seed)


def test_prune_then_solve_matches_direct_optimum():
    corpus = [samples.solid_triangle(), samples.two_triangle_strip(),
              samples.cone_over_square(), samples.figure_four_vertices()]
    for K in corpus:
        core, _, seed = prune_boundary(K)
        if len(core) == 1:
            core_crit = 1
        else:
            inst = reduce_mmup_to_pop(core, mode="fft")
            sol, _ = solve_min_pop(inst, SolverConfig())
            _, core_crit = recover_matching(inst, sol, core)
        assert core_crit == min_critical_brute(K)
