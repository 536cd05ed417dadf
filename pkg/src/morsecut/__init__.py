"""Near-optimal discrete Morse matchings via rigid-edge reductions and
balanced-cut solvers, with homology, persistence, scalar-field and pruning
pipelines built on top."""

from .complexes import (HasseGraph, SimplicialComplex, boundary_matrix,
                        build_hasse, euler_characteristic, parse_complex)
from .gadget import (PopInstance, PopSolution, recover_matching,
                     reduce_mmup_to_pop, verify_solution)
from .homology import (HomologyGroups, homology_from_chain, homology_via_mmup,
                       simplicial_homology, smith_normal_form)
from .morse import (DGVF, MorseBoundary, cancel_nonsmooth, cancel_pair,
                    compute_morse_boundary, extract_dgvf, morse_summary,
                    topo_sort_dmf)
from .persistence import (Filtration, PersistencePair, emit_diagram,
                          parse_filtration, persist_incremental, persist_naive)
from .popsolve import RecursionTrace, SolverConfig, solve_min_pop
from .pruning import check_core, find_boundary, prune_boundary
from .scalar import (ScalarField, build_constraints, solve_compatible,
                     validate_compatibility)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
