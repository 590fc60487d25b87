"""Resummations of the tree series and iterative solvers for chi.

Grouping the trees by structure turns the plain series into faster schemes:

* **left combs** (:func:`left_comb_sum`): summing a tree together with all
  its repeated right-graftings of the bare root replaces the bare model
  energies by the eigenvalues of P H P in the final denominator;
* **accelerated** (:func:`accelerated_wave_operator`): only right-normalized
  trees remain (Motzkin-many per order), with denominators built from the
  eigenpairs of P H P, so every power of P V P is already resummed;
* **alternative** (:func:`alternative_wave_operator`): if Q H Q can be
  inverted too, every term uses S(z) = (z Q - Q H Q)^(-1) and the model
  eigenprojectors; the sum runs over all trees with the bare root itself
  carrying a first-order base term;
* **left-spine fixed point** (:func:`comb_fixed_point`): decomposing every
  tree along its left spine turns the series into a non-perturbative
  fixed-point equation for chi with a k-fold nested sum, truncated at a
  configurable depth, in a "barred" form (S, model eigenpairs) and a "bare"
  form (S0, bare model projectors);
* **continued fractions**: the Suzuki-Lee iteration for degenerate model
  spaces (:func:`suzuki_lee_cf`, inverse taken in the complement) and a
  quasi-degenerate variant whose inverse lives in the model space
  (:func:`generalized_cf`);
* **diagonal shift** (:func:`shifted_expansion`): for a degenerate model
  space, rotating to the basis that diagonalizes P V P and absorbing the
  diagonal of V into H0 yields a well-defined single-parent expansion even
  though the naive single-state model space would have zero gap.

All iterative schemes start from chi = 0 and declare convergence only when
both the iterate difference and the Lindgren residual drop below the
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearSingularError, ShiftDegenerateError
from .operators import (
    NEAR_SINGULAR_RTOL,
    ModelEigensystem,
    OperatorBlock,
    ProblemInstance,
    chi_divide,
    degenerate_model_energy,
    model_eigensystem,
    p_matrix,
    qhq_php_gap,
    resolvent,
)
from .series import (
    WaveOperatorTruncation,
    effective_hamiltonian,
    lindgren_residual,
    tree_term,
    wave_operator,
)
from .trees import Tree, enumerate_trees, is_right_normalized


@dataclass(frozen=True)
class ResummedTerm:
    """A resummed contribution: scheme label, indexing tree, chi-shaped block."""

    scheme: str
    tree: Tree
    block: OperatorBlock

    @property
    def matrix(self) -> np.ndarray:
        return self.block.matrix


@dataclass(frozen=True)
class IterativeSolution:
    """Iterates of a fixed-point scheme with their Lindgren residuals."""

    scheme: str
    iterates: tuple[np.ndarray, ...]
    residuals: tuple[float, ...]
    converged: bool

    @property
    def chi(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def steps(self) -> int:
        return len(self.iterates)


# ---------------------------------------------------------------------------
# Left combs


def _model_resolvent_rows(inst: ProblemInstance, num: np.ndarray) -> np.ndarray:
    """Row i of the result is num[i, M] (P H P - e_i)^(-1), i outside M."""
    m = inst.model_indices
    hn = inst.h[np.ix_(m, m)]
    eye = np.eye(len(m))
    out = np.zeros((inst.dim, inst.dim), dtype=complex)
    for i in inst.rest_indices:
        a = hn - inst.h0[i] * eye
        svals = np.linalg.svd(a, compute_uv=False)
        if svals[-1] < NEAR_SINGULAR_RTOL * max(svals[0], 1.0):
            raise NearSingularError("gp", inst.h0[i], float(svals[-1]))
        out[i, m] = np.linalg.solve(a.T, num[i, m])
    return out


def left_comb_sum(t: Tree, inst: ProblemInstance) -> ResummedTerm:
    """Closed form of the term plus all its left-comb graftings.

    Valid for comb bases: the bare graft, | v v, or u v v with both parts
    nontrivial.  Summing the geometric comb tail replaces the final bare
    denominator by (P H P - e_i)^(-1), so the result equals
    sum_{n>=0} of the comb-grafted terms whenever that series converges.
    """
    if t.is_leaf:
        raise ValueError("the bare root is not a comb base")
    if t.right.is_leaf and not t.left.is_leaf:
        raise ValueError("t = u v | is itself a comb grafting, not a base")
    w = inst.w
    if t.left.is_leaf and t.right.is_leaf:
        num = w
    elif t.left.is_leaf:
        num = w @ tree_term(t.right, inst).matrix
    else:
        num = -(tree_term(t.left, inst).matrix @ w @ tree_term(t.right, inst).matrix)
    mat = _model_resolvent_rows(inst, num)
    return ResummedTerm("leftcomb", t, OperatorBlock(mat, "P", "Q"))


def left_comb_wave_operator(
    inst: ProblemInstance, order: int, max_order: int | None = None
) -> WaveOperatorTruncation:
    """P plus the comb-resummed terms of all bases up to the given order."""
    dim = inst.dim
    per_order = [np.zeros((dim, dim), dtype=complex)]
    if order >= 1:
        y = enumerate_trees(1)[0]
        per_order.append(left_comb_sum(y, inst).matrix)
    for n in range(2, order + 1):
        total = np.zeros((dim, dim), dtype=complex)
        for t in enumerate_trees(n, max_order=max_order):
            if not t.right.is_leaf:
                total = total + left_comb_sum(t, inst).matrix
        per_order.append(total)
    chi = np.zeros((dim, dim), dtype=complex)
    for block in per_order:
        chi = chi + block
    return WaveOperatorTruncation(
        order=order, per_order=tuple(per_order), chi=chi, omega=p_matrix(inst) + chi
    )


# ---------------------------------------------------------------------------
# Accelerated summation (right-normalized trees)


def _php_denominators(inst: ProblemInstance, php: ModelEigensystem) -> np.ndarray:
    eq = inst.h0[inst.rest_indices]
    dens = php.energies[None, :] - eq[:, None]
    margin = float(np.abs(dens).min())
    scale = max(float(np.abs(dens).max()), 1.0)
    if margin < NEAR_SINGULAR_RTOL * scale:
        raise NearSingularError("accelerated", None, margin)
    return dens


def _hat_divide(
    inst: ProblemInstance, php: ModelEigensystem, dens: np.ndarray, x: np.ndarray
) -> np.ndarray:
    q = inst.rest_indices
    y = x @ php.states
    z = np.zeros((inst.dim, php.size), dtype=complex)
    z[q, :] = y[q, :] / dens
    return z @ php.states.conj().T


def _accelerated_matrix(t: Tree, inst, php, dens, memo) -> np.ndarray:
    got = memo.get(t)
    if got is not None:
        return got
    w = inst.w
    t1, t2 = t.left, t.right
    if t1.is_leaf and t2.is_leaf:
        num = w
    elif t1.is_leaf:
        num = w @ _accelerated_matrix(t2, inst, php, dens, memo)
    else:
        num = -(
            _accelerated_matrix(t1, inst, php, dens, memo)
            @ w
            @ _accelerated_matrix(t2, inst, php, dens, memo)
        )
    mat = _hat_divide(inst, php, dens, num)
    memo[t] = mat
    return mat


def accelerated_term(t: Tree, inst: ProblemInstance) -> ResummedTerm:
    """Contribution of one right-normalized tree with P H P denominators.

    Three cases only: the bare graft, | v t2, and t1 v t2 with both parts
    nontrivial; t1 v | cannot occur in a right-normalized tree.
    """
    if t.is_leaf:
        raise ValueError("the bare root carries no accelerated term")
    if not is_right_normalized(t):
        raise ValueError("accelerated terms are indexed by right-normalized trees")
    php = model_eigensystem(inst)
    dens = _php_denominators(inst, php)
    mat = _accelerated_matrix(t, inst, php, dens, {})
    return ResummedTerm("accelerated", t, OperatorBlock(mat, "P", "Q"))


def accelerated_wave_operator(
    inst: ProblemInstance, order: int, max_order: int | None = None
) -> WaveOperatorTruncation:
    """P plus the accelerated terms of right-normalized trees up to order."""
    php = model_eigensystem(inst)
    dens = _php_denominators(inst, php)
    dim = inst.dim
    memo: dict = {}
    per_order = [np.zeros((dim, dim), dtype=complex)]
    for n in range(1, order + 1):
        total = np.zeros((dim, dim), dtype=complex)
        for t in enumerate_trees(n, right_normalized=True, max_order=max_order):
            total = total + _accelerated_matrix(t, inst, php, dens, memo)
        per_order.append(total)
    chi = np.zeros((dim, dim), dtype=complex)
    for block in per_order:
        chi = chi + block
    return WaveOperatorTruncation(
        order=order, per_order=tuple(per_order), chi=chi, omega=p_matrix(inst) + chi
    )


# ---------------------------------------------------------------------------
# Alternative expansion with S(z) = (zQ - QHQ)^(-1)


def _alternative_context(inst: ProblemInstance):
    margin = qhq_php_gap(inst)
    scale = max(float(np.abs(inst.h0).max()), 1.0)
    if margin < NEAR_SINGULAR_RTOL * scale:
        raise NearSingularError("s", None, margin)
    php = model_eigensystem(inst)
    svals = [resolvent(inst, "s", float(e)).matrix for e in php.energies]
    projs = [php.projector(j) for j in range(php.size)]
    w = inst.w
    base = np.zeros((inst.dim, inst.dim), dtype=complex)
    for s, pj in zip(svals, projs):
        base = base + s @ w @ pj
    return php, svals, projs, base


def _alternative_matrix(t: Tree, inst, svals, projs, base, memo) -> np.ndarray:
    if t.is_leaf:
        return base
    got = memo.get(t)
    if got is not None:
        return got
    w = inst.w
    left = _alternative_matrix(t.left, inst, svals, projs, base, memo)
    right = _alternative_matrix(t.right, inst, svals, projs, base, memo)
    inner = left @ w @ right
    mat = np.zeros_like(base)
    for s, pj in zip(svals, projs):
        mat = mat - s @ inner @ pj
    memo[t] = mat
    return mat


def alternative_term(t: Tree, inst: ProblemInstance) -> ResummedTerm:
    """Contribution of one tree in the both-blocks-resolved expansion.

    Every tree contributes, and the bare root itself carries the first-order
    base term sum_j S(e_j) Q W proj_j; a tree of order n therefore starts at
    power 2n + 1 of the coupling.
    """
    _, svals, projs, base = _alternative_context(inst)
    mat = _alternative_matrix(t, inst, svals, projs, base, {})
    return ResummedTerm("alternative", t, OperatorBlock(mat, "P", "Q"))


def alternative_wave_operator(
    inst: ProblemInstance, order: int, max_order: int | None = None
) -> WaveOperatorTruncation:
    """P plus the alternative terms of all trees up to the given order.

    ``per_order[0]`` holds the bare-root base term, unlike the plain series
    where index 0 is empty.
    """
    _, svals, projs, base = _alternative_context(inst)
    dim = inst.dim
    memo: dict = {}
    per_order = [base]
    for n in range(1, order + 1):
        total = np.zeros((dim, dim), dtype=complex)
        for t in enumerate_trees(n, max_order=max_order):
            total = total + _alternative_matrix(t, inst, svals, projs, base, memo)
        per_order.append(total)
    chi = np.zeros((dim, dim), dtype=complex)
    for block in per_order:
        chi = chi + block
    return WaveOperatorTruncation(
        order=order, per_order=tuple(per_order), chi=chi, omega=p_matrix(inst) + chi
    )


# ---------------------------------------------------------------------------
# Left-spine fixed point


def comb_rhs(
    inst: ProblemInstance, chi: np.ndarray, cutoff: int, variant: str = "barred"
) -> np.ndarray:
    """Right-hand side of the left-spine fixed-point equation at the given chi.

    Barred variant: chi = sum_j S(e_j) Q W proj_j
    + sum_{k=1..cutoff} (-1)^k [nested S / W chi / proj factors]; the k-th
    term is built from the (k-1)-th by one more S(e_j) .. W chi proj_j layer.
    Bare variant: chi = sum_{k=1..cutoff} (-1)^(k-1) sum_i Q_i
    (W Omega G0P(e_i))^k with Omega = P + chi, evaluated through the
    entrywise model/complement denominator map.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    variant = variant.lower()
    w = inst.w
    if variant == "barred":
        _, svals, projs, base = _alternative_context(inst)
        wchi = w @ chi
        term = base
        total = base.copy()
        for _ in range(cutoff):
            nxt = np.zeros_like(term)
            for s, pj in zip(svals, projs):
                nxt = nxt - s @ term @ wchi @ pj
            term = nxt
            total = total + term
        return total
    if variant == "bare":
        womega = w @ (p_matrix(inst) + chi)
        term = chi_divide(inst, womega)
        total = term.copy()
        for _ in range(cutoff - 1):
            term = -chi_divide(inst, term @ womega)
            total = total + term
        return total
    raise ValueError(f"unknown variant {variant!r}")


def _iterate(scheme, inst, step, max_iter, tol) -> IterativeSolution:
    chi = np.zeros((inst.dim, inst.dim), dtype=complex)
    iterates: list[np.ndarray] = []
    residuals: list[float] = []
    converged = False
    for _ in range(max_iter):
        new = step(chi)
        diff = float(np.linalg.norm(new - chi))
        res = lindgren_residual(new, inst)
        iterates.append(new)
        residuals.append(res)
        chi = new
        if diff <= tol and res <= tol:
            converged = True
            break
    return IterativeSolution(scheme, tuple(iterates), tuple(residuals), converged)


def comb_fixed_point(
    inst: ProblemInstance,
    cutoff: int | None = None,
    variant: str = "barred",
    max_iter: int = 100,
    tol: float = 1e-10,
) -> IterativeSolution:
    """Iterate the left-spine fixed-point equation from chi = 0.

    ``cutoff`` truncates the nested k-sum (default: the model dimension);
    the truncated equation's fixed point differs from the exact chi by the
    dropped tail, so the reachable residual floor shrinks with the cutoff.
    """
    k = cutoff if cutoff is not None else len(inst.model)
    return _iterate(
        f"lk-{variant.lower()}",
        inst,
        lambda chi: comb_rhs(inst, chi, k, variant),
        max_iter,
        tol,
    )


# ---------------------------------------------------------------------------
# Continued fractions


def suzuki_lee_cf(
    inst: ProblemInstance, max_iter: int = 50, tol: float = 1e-10
) -> IterativeSolution:
    """Suzuki-Lee continued fraction for a degenerate model space.

    Iterates (e0 - Q H Q + chi_{n-1} W Q) chi_n = Q W P - chi_{n-1} W P from
    chi_0 = 0, the inverse taken in the complement subspace.
    """
    e0 = degenerate_model_energy(inst)
    m = inst.model_indices
    q = inst.rest_indices
    w = inst.w
    hqq = inst.h[np.ix_(q, q)]
    eye = np.eye(len(q))

    def step(chi: np.ndarray) -> np.ndarray:
        chiw = chi @ w
        bracket = e0 * eye - hqq + chiw[np.ix_(q, q)]
        svals = np.linalg.svd(bracket, compute_uv=False)
        if svals[-1] < NEAR_SINGULAR_RTOL * max(svals[0], 1.0):
            raise NearSingularError("suzuki-lee", e0, float(svals[-1]))
        rhs = w[np.ix_(q, m)] - chiw[np.ix_(q, m)]
        new = np.zeros((inst.dim, inst.dim), dtype=complex)
        new[np.ix_(q, m)] = np.linalg.solve(bracket, rhs)
        return new

    return _iterate("slcf", inst, step, max_iter, tol)


def generalized_cf(
    inst: ProblemInstance, max_iter: int = 50, tol: float = 1e-10
) -> IterativeSolution:
    """Quasi-degenerate continued fraction with inverses in the model space.

    Row by row over the complement indices i:
    chi_n[i, :] = (W P + W chi_{n-1})[i, M] (P H P - e_i + P W chi_{n-1})^(-1),
    from chi_0 = 0.  The first iterate reproduces the accelerated base term.
    """
    m = inst.model_indices
    w = inst.w
    hn = inst.h[np.ix_(m, m)]
    eye = np.eye(len(m))

    def step(chi: np.ndarray) -> np.ndarray:
        wchi = w @ chi
        lhs = w[:, m] + wchi[:, m]
        wchi_mm = wchi[np.ix_(m, m)]
        new = np.zeros((inst.dim, inst.dim), dtype=complex)
        for i in inst.rest_indices:
            bracket = hn - inst.h0[i] * eye + wchi_mm
            svals = np.linalg.svd(bracket, compute_uv=False)
            if svals[-1] < NEAR_SINGULAR_RTOL * max(svals[0], 1.0):
                raise NearSingularError("gcf", inst.h0[i], float(svals[-1]))
            new[i, m] = np.linalg.solve(bracket.T, lhs[i])
        return new

    return _iterate("gcf", inst, step, max_iter, tol)


# ---------------------------------------------------------------------------
# Diagonal shift for degenerate model spaces


@dataclass(frozen=True)
class ShiftedExpansion:
    """Result of the single-parent shifted expansion."""

    shifted: ProblemInstance
    truncation: WaveOperatorTruncation
    heff: complex

    @property
    def parent_energy(self) -> float:
        return float(self.shifted.h0[self.shifted.model[0]])


def shifted_instance(inst: ProblemInstance, parent_index: int) -> ProblemInstance:
    """Rotate to the basis diagonalizing P V P and absorb its diagonal into H0.

    Requires a degenerate model space.  ``parent_index`` selects a parent
    state in ascending order of the P V P eigenvalues.  The returned
    instance has a one-dimensional model space spanned by that state,
    energies e'_i = e_i + lam <i|V|i> inside the old model space, and a
    perturbation whose old-model block vanishes identically, so every term
    with a t1 v | subtree is exactly zero.  Raises ShiftDegenerateError when
    the shifted energies collide (within 1e-10 of each other or of the
    complement energies).
    """
    degenerate_model_energy(inst)
    m = inst.model_indices
    n = len(m)
    if not 0 <= parent_index < n:
        raise ValueError(f"parent_index {parent_index} out of range 0..{n - 1}")
    shifts, basis = np.linalg.eigh(inst.v[np.ix_(m, m)])
    rot = np.eye(inst.dim, dtype=complex)
    rot[np.ix_(m, m)] = basis
    v_new = rot.conj().T @ inst.v @ rot
    v_new[np.ix_(m, m)] = 0.0
    h0_new = inst.h0.copy()
    h0_new[m] += inst.lam * shifts
    scale = max(1.0, float(np.abs(h0_new).max()))
    shifted_model = h0_new[m]
    for a in range(n):
        for b in range(a + 1, n):
            if abs(shifted_model[a] - shifted_model[b]) < 1e-10 * scale:
                raise ShiftDegenerateError(
                    "shifted model energies collide: "
                    f"{shifted_model[a]} vs {shifted_model[b]}"
                )
    parent_global = int(m[parent_index])
    rest = inst.rest_indices
    if np.abs(h0_new[parent_global] - inst.h0[rest]).min() < 1e-10 * scale:
        raise ShiftDegenerateError(
            "shifted parent energy collides with a complement energy"
        )
    return ProblemInstance(h0=h0_new, v=v_new, model=(parent_global,), lam=inst.lam)


def shifted_expansion(
    inst: ProblemInstance, parent_index: int, order: int
) -> ShiftedExpansion:
    """Run the plain series on the shifted instance and report the scalar
    effective Hamiltonian of the parent state."""
    sh = shifted_instance(inst, parent_index)
    trunc = wave_operator(sh, order)
    heff = complex(effective_hamiltonian(trunc, sh)[0, 0])
    return ShiftedExpansion(shifted=sh, truncation=trunc, heff=heff)
