"""Tree-indexed perturbation series for quasi-degenerate systems.

The package maps every term of the Rayleigh-Schrodinger expansion of a
quasi-degenerate effective Hamiltonian onto a planar binary tree, evaluates
the terms two independent ways, resums the series along several tree
decompositions, realizes the classical Catalan-family encodings of the terms
(Bloch sequences, Dyck paths, non-crossing partitions, bracketings), and
validates everything against dense exact diagonalization.
"""

from .bijections import (
    Bracketing,
    bloch_to_dyck,
    bloch_to_operator_word,
    bloch_to_tree,
    dyck_to_bloch,
    evaluate_operator_word,
    left_line_partition,
    partition_string,
    tree_to_bloch,
    tree_to_bracketing,
    tree_to_partition,
)
from .operators import (
    ModelEigensystem,
    OperatorBlock,
    ProblemInstance,
    instance_from_json,
    instance_to_json,
    load_instance,
    model_eigensystem,
    projectors,
    qhq_php_gap,
    reference_instance,
    resolvent,
    sylvester_solve,
)
from .oracle import (
    ConvergenceReport,
    convergence_scan,
    exact_chi,
    exact_wave_operator,
    fit_loglog_slope,
    series_coefficient,
)
from .resummations import (
    IterativeSolution,
    ResummedTerm,
    ShiftedExpansion,
    accelerated_term,
    accelerated_wave_operator,
    alternative_term,
    alternative_wave_operator,
    comb_fixed_point,
    comb_rhs,
    generalized_cf,
    left_comb_sum,
    left_comb_wave_operator,
    shifted_expansion,
    shifted_instance,
    suzuki_lee_cf,
)
from .series import (
    SeriesTerm,
    WaveOperatorTruncation,
    effective_hamiltonian,
    heff_eigenvalues,
    lindgren_residual,
    per_order_lindgren_residuals,
    tree_term,
    tree_term_direct,
    wave_operator,
)
from .trees import (
    LEAF,
    Tree,
    comb_factorize,
    decompose,
    encode,
    enumerate_trees,
    graft,
    is_right_normalized,
    leaf_orientations,
    left_comb_graft,
    left_spine_decompose,
    number_vertices,
    orientation_sign,
    parse,
    subtree_spans,
)

__version__ = "0.1.0"
