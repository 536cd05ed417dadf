"""Scalar-field-compatible gradient fields.

Every simplex inherits the maximum field value over its vertices; the one
codimension-1 face not containing the inheriting vertex is the face whose
own inherited value differs, so matching across it is prohibited.  The
prohibitions become forbidden prescriptions for the gadget pipeline, and
the perturbation freedom of a compatible function is exactly the matching
freedom that remains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .complexes import SimplicialComplex
from .morse import DGVF


class ScalarFieldError(ValueError):
    pass


@dataclass
class ScalarField:
    values: dict[int, float]          # vertex label -> value

    def __post_init__(self):
        if len(set(self.values.values())) != len(self.values):
            self.injective = False
        else:
            self.injective = True

    @classmethod
    def parse(cls, text: str) -> "ScalarField":
        values: dict[int, float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if len(toks) != 2:
                raise ScalarFieldError(f"line {lineno}: expected 'vertex value'")
            try:
                values[int(toks[0])] = float(toks[1])
            except ValueError as exc:
                raise ScalarFieldError(f"line {lineno}: {exc}")
        if not values:
            raise ScalarFieldError("empty scalar field")
        return cls(values)


@dataclass
class CompatibilityConstraints:
    inherited_vertex: dict[int, int]   # cell id -> vertex label with max value
    inherited_value: dict[int, float]  # cell id -> that value
    prohibited_face: dict[int, int]    # cell id (dim >= 1) -> face cell id


def _rank_key(F: ScalarField, tie_break: bool):
    if tie_break:
        return lambda v: (F.values[v], v)
    return lambda v: F.values[v]


def build_constraints(K: SimplicialComplex, F: ScalarField,
                      perturb_ties: bool = False) -> CompatibilityConstraints:
    """Inherited vertices and the one prohibited face per simplex.

    Non-injective fields are rejected unless ``perturb_ties`` orders equal
    values by vertex label (simulation of simplicity).
    """
    vertices = {s.vertices[0] for s in K.simplices.values() if s.dim == 0}
    missing = vertices - set(F.values)
    if missing:
        raise ScalarFieldError(f"field is missing vertices {sorted(missing)}")
    if not F.injective and not perturb_ties:
        raise ScalarFieldError("field values must be pairwise distinct")
    key = _rank_key(F, perturb_ties)

    inherited_vertex: dict[int, int] = {}
    inherited_value: dict[int, float] = {}
    prohibited: dict[int, int] = {}
    for cid, s in K.simplices.items():
        top = max(s.vertices, key=key)
        inherited_vertex[cid] = top
        inherited_value[cid] = F.values[top]
        if s.dim >= 1:
            others = tuple(v for v in s.vertices if v != top)
            prohibited[cid] = K.id_of(others)
    return CompatibilityConstraints(inherited_vertex, inherited_value, prohibited)


def compatibility_prescriptions(K: SimplicialComplex,
                                cons: CompatibilityConstraints,
                                ) -> list[tuple[int, int]]:
    """Forbidden (face, coface) Hasse edges: one per positive-dim simplex."""
    return sorted((cons.prohibited_face[cid], cid)
                  for cid in cons.prohibited_face)


def solve_compatible(K: SimplicialComplex, F: ScalarField, cfg=None,
                     gadget_mode: str = "fft",
                     perturb_ties: bool = False) -> tuple[DGVF, dict]:
    """Near-minimal critical count among field-compatible matchings."""
    from .gadget import recover_matching, reduce_mmup_to_pop
    from .morse import extract_dgvf
    from .popsolve import SolverConfig, solve_min_pop

    cfg = cfg or SolverConfig()
    cons = build_constraints(K, F, perturb_ties=perturb_ties)
    forbidden = compatibility_prescriptions(K, cons)
    if len(K) == 1:
        dgvf = extract_dgvf(K, [])
        return dgvf, {"critical_count": 1, "constraints": cons}
    inst = reduce_mmup_to_pop(K, mode=gadget_mode,
                              extra_forbidden_pairs=forbidden)
    sol, trace = solve_min_pop(inst, cfg)
    matching, critical_count = recover_matching(inst, sol, K)
    dgvf = extract_dgvf(K, sorted(matching))
    return dgvf, {"critical_count": critical_count, "constraints": cons,
                  "trace": trace}


def validate_compatibility(K: SimplicialComplex, F: ScalarField, dgvf: DGVF,
                           perturb_ties: bool = False) -> list[str]:
    """Pairs whose two cells inherit from different vertices are violations."""
    cons = build_constraints(K, F, perturb_ties=perturb_ties)
    problems = []
    for face, coface in sorted(dgvf.pair_up.items()):
        if cons.inherited_vertex[face] != cons.inherited_vertex[coface]:
            problems.append(
                f"pair ({face}, {coface}) crosses the exceptional face: "
                f"{cons.inherited_vertex[face]} vs {cons.inherited_vertex[coface]}")
    return problems
