import pytest

from morsecut import samples
from morsecut.complexes import parse_complex
from morsecut.gadget import reduce_mmup_to_pop, recover_matching
from morsecut.morse import extract_dgvf
from morsecut.popsolve import SolverConfig, solve_min_pop
from morsecut.scalar import (ScalarField, ScalarFieldError, build_constraints,
                             compatibility_prescriptions, solve_compatible,
                             validate_compatibility)

from oracles import min_critical_brute

FIELD_FIG = ScalarField({0: 5.0, 1: 8.0, 2: 12.0, 3: 3.0})


def test_inherited_values_match_worked_example():
    K = samples.solid_tetra()
    cons = build_constraints(K, FIELD_FIG)

    def val(verts):
        return cons.inherited_value[K.id_of(verts)]

    assert val((0, 1)) == 8 and val((0, 2)) == 12 and val((0, 3)) == 5
    assert val((1, 2)) == 12 and val((1, 3)) == 8 and val((2, 3)) == 12
    assert val((0, 1, 2)) == 12 and val((0, 1, 3)) == 8
    assert val((1, 2, 3)) == 12 and val((0, 2, 3)) == 12
    assert val((0, 1, 2, 3)) == 12


def test_exceptional_faces_match_worked_example():
    K = samples.solid_tetra()
    cons = build_constraints(K, FIELD_FIG)
    tid = K.id_of((1, 2, 3))
    assert K.simplices[cons.prohibited_face[tid]].vertices == (1, 3)
    tid = K.id_of((0, 1, 3))
    assert K.simplices[cons.prohibited_face[tid]].vertices == (0, 3)


def test_edge_inherits_from_larger_endpoint():
    K = samples.solid_tetra()
    cons = build_constraints(K, FIELD_FIG)
    eid = K.id_of((0, 3))
    assert cons.inherited_vertex[eid] == 0  # 5 > 3
    assert K.simplices[cons.prohibited_face[eid]].vertices == (3,)


def test_rejects_noninjective_field_unless_perturbed():
    K = parse_complex("0 1\n")
    F = ScalarField({0: 1.0, 1: 1.0})
    with pytest.raises(ScalarFieldError, match="distinct"):
        build_constraints(K, F)
    cons = build_constraints(K, F, perturb_ties=True)
    assert cons.inherited_vertex[K.id_of((0, 1))] == 1  # ties break by label


def test_monotone_path_single_minimum():
    K = samples.path_complex(4)
    F = ScalarField({i: float(i) for i in range(5)})
    dgvf, info = solve_compatible(K, F)
    assert info["critical_count"] == 1
    assert validate_compatibility(K, F, dgvf) == []
    cons = build_constraints(K, F)
    allowed = [(fid, cid) for cid in K.simplices
               for fid in K.facets_of[cid]
               if cons.prohibited_face.get(cid) != fid]
    assert min_critical_brute(K, sorted(allowed)) == 1


def test_two_minima_path_needs_two_criticals():
    # heights dip at both ends of a 5-vertex path
    K = samples.path_complex(4)
    F = ScalarField({0: 0.0, 1: 5.0, 2: 9.0, 3: 4.0, 4: 1.0})
    cons = build_constraints(K, F)
    allowed = [(fid, cid) for cid in K.simplices
               for fid in K.facets_of[cid]
               if cons.prohibited_face.get(cid) != fid]
    best = min_critical_brute(K, sorted(allowed))
    assert best >= 2  # two local minima keep at least two vertices critical
    dgvf, info = solve_compatible(K, F)
    assert info["critical_count"] == best
    assert validate_compatibility(K, F, dgvf) == []


def test_fifteen_cell_example_matches_compatible_brute_force():
    K = samples.solid_tetra()
    assert len(K) == 15
    cons = build_constraints(K, FIELD_FIG)
    allowed = [(fid, cid) for cid in K.simplices
               for fid in K.facets_of[cid]
               if cons.prohibited_face.get(cid) != fid]
    best = min_critical_brute(K, sorted(allowed))
    dgvf, info = solve_compatible(K, FIELD_FIG)
    assert info["critical_count"] == best == 1
    assert validate_compatibility(K, FIELD_FIG, dgvf) == []


def test_injected_violation_is_reported():
    K = samples.solid_tetra()
    cons = build_constraints(K, FIELD_FIG)
    eid = K.id_of((0, 3))
    bad_pair = (cons.prohibited_face[eid], eid)  # match across the exception
    dgvf = extract_dgvf(K, [bad_pair])
    problems = validate_compatibility(K, FIELD_FIG, dgvf)
    assert len(problems) == 1


def test_unconstrained_solver_generally_violates():
    K = samples.solid_tetra()
    inst = reduce_mmup_to_pop(K, mode="fft")
    sol, _ = solve_min_pop(inst, SolverConfig())
    matching, _ = recover_matching(inst, sol, K)
    dgvf = extract_dgvf(K, sorted(matching))
    assert len(validate_compatibility(K, FIELD_FIG, dgvf)) > 0


def test_vpaths_descend_inherited_values():
    K = samples.solid_tetra()
    dgvf, _ = solve_compatible(K, FIELD_FIG)
    cons = build_constraints(K, FIELD_FIG)

    # walk every flow arc: matched ascents keep the inherited value, the
    # descents never increase it
    for face, coface in dgvf.pair_up.items():
        assert cons.inherited_value[face] == cons.inherited_value[coface]
        for other in K.facets_of[coface]:
            if other != face:
                assert cons.inherited_value[other] <= \
                    cons.inherited_value[coface]


def test_constrained_optimum_at_least_unconstrained():
    for K, F in ((samples.solid_tetra(), FIELD_FIG),
                 (samples.path_complex(4),
                  ScalarField({0: 3.0, 1: 9.0, 2: 1.0, 3: 7.0, 4: 2.0}))):
        cons = build_constraints(K, F)
        allowed = [(fid, cid) for cid in K.simplices
                   for fid in K.facets_of[cid]
                   if cons.prohibited_face.get(cid) != fid]
        constrained = min_critical_brute(K, sorted(allowed))
        unconstrained = min_critical_brute(K)
        assert constrained >= unconstrained


def test_prescriptions_count_one_per_positive_dim_cell():
    K = samples.solid_tetra()
    cons = build_constraints(K, FIELD_FIG)
    forb = compatibility_prescriptions(K, cons)
    positive = sum(1 for s in K.simplices.values() if s.dim >= 1)
    assert len(forb) == positive


def test_scalar_field_parse():
    F = ScalarField.parse("0 1.5\n1 2.5\n# note\n")
    assert F.values == {0: 1.5, 1: 2.5}
    with pytest.raises(ScalarFieldError):
        ScalarField.parse("0\n")
