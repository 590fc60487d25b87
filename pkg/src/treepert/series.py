"""Tree-indexed terms of the perturbation series and their truncations.

The correlation part chi = Omega - P of the wave operator solves the
Kvasnicka-Lindgren (generalized Bloch) equation

    [chi, H0] = Q W P + Q W chi - chi W P - chi W chi,      W = lam*V,

and expands as a sum of one contribution per planar binary tree.  Two
independent evaluators are provided:

* :func:`tree_term` follows the recursion over t = t1 v t2, dividing the
  appropriate product of subterm matrices by the energy denominators
  e_j - e_i (j in the model space, i outside);
* :func:`tree_term_direct` builds the term from the tree's geometry alone:
  leaf orientations fix which states occupy each numerator slot, subtree
  spans fix the denominator factors, and the overall sign is
  (-1)**(d-1) with d the number of right-oriented leaves.

Both produce chi-shaped blocks, never hit a vanishing denominator (every
denominator is a model/complement energy difference, bounded by the gap),
and scale as lam**order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OrderCapError
from .operators import (
    OperatorBlock,
    ProblemInstance,
    as_matrix,
    chi_divide,
    p_matrix,
    q_matrix,
)
from .trees import Tree, enumerate_trees, leaf_orientations, orientation_sign, subtree_spans

DIRECT_MAX_ORDER = 6


@dataclass(frozen=True)
class SeriesTerm:
    """One tree's contribution: the tree, its chi-shaped block, its sign."""

    tree: Tree
    block: OperatorBlock
    sign: int

    @property
    def matrix(self) -> np.ndarray:
        return self.block.matrix


@dataclass(frozen=True)
class WaveOperatorTruncation:
    """A truncated wave operator and its per-order pieces.

    ``per_order[n]`` is the sum of all order-n contributions (index 0 is the
    zero matrix for the plain series); ``chi`` their total and
    ``omega = P + chi``, so P omega = P and omega P = omega hold by
    construction.
    """

    order: int
    per_order: tuple[np.ndarray, ...]
    chi: np.ndarray
    omega: np.ndarray


def _recursive_matrix(t: Tree, inst: ProblemInstance, memo: dict) -> np.ndarray:
    got = memo.get(t)
    if got is not None:
        return got
    w = memo["__w__"]
    t1, t2 = t.left, t.right
    if t1.is_leaf and t2.is_leaf:
        num = w
    elif t1.is_leaf:
        num = w @ _recursive_matrix(t2, inst, memo)
    elif t2.is_leaf:
        num = -(_recursive_matrix(t1, inst, memo) @ w)
    else:
        num = -(
            _recursive_matrix(t1, inst, memo)
            @ w
            @ _recursive_matrix(t2, inst, memo)
        )
    mat = chi_divide(inst, num)
    memo[t] = mat
    return mat


def tree_term(t: Tree, inst: ProblemInstance) -> SeriesTerm:
    """Evaluate one tree's series term by the recursive rule.

    For t = t1 v t2 the scalar coefficients satisfy

        w_t[i, j] = - sum_{k,l} w_t1[i, k] W[k, l] w_t2[l, j] / (e_j - e_i)

    with the boundary conventions -delta for a bare left slot and +delta for
    a bare right slot, which collapse to the four explicit cases coded in
    :func:`_recursive_matrix`.
    """
    if t.order == 0:
        raise ValueError("the bare root carries no series term")
    memo: dict = {"__w__": inst.w}
    mat = _recursive_matrix(t, inst, memo)
    return SeriesTerm(t, OperatorBlock(mat, "P", "Q"), orientation_sign(t))


def _spread(values: np.ndarray, ax_a: int, ax_b: int, ndim: int) -> np.ndarray:
    # embed a 2-d factor along axes ax_a < ax_b of an ndim-dimensional grid
    shape = [1] * ndim
    shape[ax_a] = values.shape[0]
    shape[ax_b] = values.shape[1]
    return values.reshape(shape)


def tree_term_direct(
    t: Tree, inst: ProblemInstance, max_order: int = DIRECT_MAX_ORDER
) -> SeriesTerm:
    """Evaluate one tree's series term from its geometry, without recursion.

    Sums over all index tuples (i_1 .. i_{n+1}) compatible with the leaf
    orientations (right-oriented leaves range over the model space, left
    ones over the complement).  The numerator is the chain of W matrix
    elements, the denominator the product of e[i_r(v)] - e[i_l(v)] over the
    subtree spans, and the sign (-1)**(d-1).  Cost grows as dim**(n+1), so
    orders beyond ``max_order`` are refused; this evaluator exists to
    cross-check :func:`tree_term`, not for production use.
    """
    n = t.order
    if n == 0:
        raise ValueError("the bare root carries no series term")
    if n > max_order:
        raise OrderCapError(
            f"direct evaluation capped at order {max_order}, got {n}"
        )
    orient = leaf_orientations(t)
    spans = subtree_spans(t)
    e = inst.h0
    w = inst.w
    m_idx = inst.model_indices
    q_idx = inst.rest_indices
    idx = [m_idx if o == "R" else q_idx for o in orient]
    sizes = [len(ix) for ix in idx]
    ndim = n + 1

    num = np.ones(sizes, dtype=complex)
    for k in range(n):
        num = num * _spread(w[np.ix_(idx[k], idx[k + 1])], k, k + 1, ndim)

    gap = inst.gap
    den = np.ones(sizes, dtype=float)
    for l, r in spans:
        if orient[l - 1] != "L" or orient[r - 1] != "R":
            raise RuntimeError("span endpoints must pair a left and a right leaf")
        d = e[idx[r - 1]][None, :] - e[idx[l - 1]][:, None]
        if np.abs(d).min() < gap * (1.0 - 1e-9):
            raise RuntimeError("denominator fell below the spectral gap")
        den = den * _spread(d, l - 1, r - 1, ndim)

    tensor = num / den
    if n > 1:
        summed = tensor.sum(axis=tuple(range(1, n)))
    else:
        summed = tensor
    sign = orientation_sign(t)
    mat = np.zeros((inst.dim, inst.dim), dtype=complex)
    mat[np.ix_(idx[0], idx[-1])] = sign * summed
    return SeriesTerm(t, OperatorBlock(mat, "P", "Q"), sign)


def wave_operator(
    inst: ProblemInstance, order: int, max_order: int | None = None
) -> WaveOperatorTruncation:
    """Sum the series over all trees up to the given order.

    Terms are evaluated once through a shared memo and added in enumeration
    order, so sequential runs are bitwise reproducible.
    """
    dim = inst.dim
    memo: dict = {"__w__": inst.w}
    per_order = [np.zeros((dim, dim), dtype=complex)]
    for n in range(1, order + 1):
        total = np.zeros((dim, dim), dtype=complex)
        for t in enumerate_trees(n, max_order=max_order):
            total = total + _recursive_matrix(t, inst, memo)
        per_order.append(total)
    chi = np.zeros((dim, dim), dtype=complex)
    for block in per_order:
        chi = chi + block
    omega = p_matrix(inst) + chi
    return WaveOperatorTruncation(
        order=order, per_order=tuple(per_order), chi=chi, omega=omega
    )


def effective_hamiltonian(omega, inst: ProblemInstance) -> np.ndarray:
    """P H Omega restricted to the model space (an N x N matrix).

    Accepts a truncation, an operator block or a bare matrix for omega.  Its
    eigenvalues approximate (for the exact omega: equal) eigenvalues of H.
    """
    om = omega.omega if isinstance(omega, WaveOperatorTruncation) else as_matrix(omega)
    m = inst.model_indices
    return (inst.h @ om)[np.ix_(m, m)]


def heff_eigenvalues(heff: np.ndarray) -> np.ndarray:
    """Eigenvalues sorted ascending by real part (imaginary part tie-break)."""
    vals = np.linalg.eigvals(heff)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def lindgren_residual(chi, inst: ProblemInstance) -> float:
    """Frobenius defect of chi in the Kvasnicka-Lindgren equation."""
    c = as_matrix(chi)
    e = inst.h0
    w = inst.w
    p = p_matrix(inst)
    q = q_matrix(inst)
    comm = c * e[None, :] - e[:, None] * c
    rhs = q @ w @ p + q @ w @ c - c @ w @ p - c @ w @ c
    return float(np.linalg.norm(comm - rhs))


def per_order_lindgren_residuals(inst: ProblemInstance, order: int) -> list[float]:
    """Defect of the order-by-order form of the Lindgren identity.

    With Omega_0 = P and Omega_n the order-n sum, each order must satisfy
    [Omega_n, H0] = W Omega_{n-1} - sum_{k=0}^{n-1} Omega_k W Omega_{n-1-k}.
    Returns the Frobenius defect for n = 1..order.
    """
    trunc = wave_operator(inst, order)
    e = inst.h0
    w = inst.w
    blocks = [p_matrix(inst)] + [trunc.per_order[n] for n in range(1, order + 1)]
    out = []
    for n in range(1, order + 1):
        lhs = blocks[n] * e[None, :] - e[:, None] * blocks[n]
        rhs = w @ blocks[n - 1]
        for k in range(n):
            rhs = rhs - blocks[k] @ w @ blocks[n - 1 - k]
        out.append(float(np.linalg.norm(lhs - rhs)))
    return out
