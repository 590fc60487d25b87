"""Bijections between trees and the classical Catalan families.

The series terms of degenerate problems have traditionally been indexed by
Bloch sequences, Dyck paths, non-crossing partitions or Brueckner/Tong
bracketings, all counted by the Catalan numbers.  This module realizes the
maps between planar binary trees and each of those encodings, plus the
rendering of a Bloch sequence as an operator word over {R, V, P} that can be
evaluated numerically on a degenerate instance.

Conventions:

* a Bloch sequence (k1..kn) has non-negative entries, partial sums
  k1+..+km >= m for m < n and total n;
* Dyck paths are "U"/"D" strings, k_i up-steps before the i-th down-step;
* partitions are tuples of sorted tuples covering {1..n}, blocks ordered by
  their minimum, printed in the compact bar notation "|13|2|";
* a bracketing is a sign plus a token string over the ASCII alphabet
  "*o<>" standing for the resolvent, the perturbation and the expectation
  value brackets.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .operators import (
    ProblemInstance,
    degenerate_model_energy,
    p_matrix,
    resolvent,
)
from .trees import LEAF, Tree, graft, number_vertices


# ---------------------------------------------------------------------------
# Bloch sequences


def is_valid_bloch(seq) -> bool:
    seq = tuple(seq)
    n = len(seq)
    if n == 0 or any((not isinstance(k, (int, np.integer))) or k < 0 for k in seq):
        return False
    partial = 0
    for m, k in enumerate(seq, start=1):
        partial += k
        if m < n and partial < m:
            return False
    return partial == n


def _require_bloch(seq) -> tuple[int, ...]:
    seq = tuple(int(k) for k in seq)
    if not is_valid_bloch(seq):
        raise ValueError(f"not a valid Bloch sequence: {seq}")
    return seq


def _shift_append(seq: tuple[int, ...]) -> tuple[int, ...]:
    # K(k1, k2, .., kn) = (k1 + 1, k2, .., kn, 0)
    return (seq[0] + 1,) + seq[1:] + (0,)


def tree_to_bloch(t: Tree) -> tuple[int, ...]:
    """The Bloch sequence of a tree.

    Recursion: Y -> (1); s v | -> K(phi(s)); | v s -> (1) . phi(s);
    s v t -> K(phi(s)) . phi(t), with K prepending 1 to the head and
    appending a trailing 0.
    """
    if t.is_leaf:
        raise ValueError("the bare root has no Bloch sequence")
    t1, t2 = t.left, t.right
    if t1.is_leaf and t2.is_leaf:
        return (1,)
    if t2.is_leaf:
        return _shift_append(tree_to_bloch(t1))
    if t1.is_leaf:
        return (1,) + tree_to_bloch(t2)
    return _shift_append(tree_to_bloch(t1)) + tree_to_bloch(t2)


def bloch_to_tree(seq) -> Tree:
    """Inverse of :func:`tree_to_bloch`."""
    seq = _require_bloch(seq)
    if seq == (1,):
        return graft(LEAF, LEAF)
    if seq[0] == 1:
        return graft(LEAF, bloch_to_tree(seq[1:]))
    # head = shortest prefix whose sum saturates its length; it is K of the
    # left subtree's sequence and necessarily ends in 0.
    partial = 0
    cut = len(seq)
    for m, k in enumerate(seq, start=1):
        partial += k
        if partial == m:
            cut = m
            break
    head, tail = seq[:cut], seq[cut:]
    left = bloch_to_tree((head[0] - 1,) + head[1:-1])
    if not tail:
        return graft(left, LEAF)
    return graft(left, bloch_to_tree(tail))


# ---------------------------------------------------------------------------
# Dyck paths


def is_valid_dyck(path: str) -> bool:
    if not path or len(path) % 2:
        return False
    height = 0
    for c in path:
        if c == "U":
            height += 1
        elif c == "D":
            height -= 1
        else:
            return False
        if height < 0:
            return False
    return height == 0


def bloch_to_dyck(seq) -> str:
    """k_i up-steps then one down-step, for each entry of the sequence."""
    seq = _require_bloch(seq)
    return "".join("U" * k + "D" for k in seq)


def dyck_to_bloch(path: str) -> tuple[int, ...]:
    """Inverse of :func:`bloch_to_dyck`."""
    if not is_valid_dyck(path):
        raise ValueError(f"not a valid Dyck path: {path!r}")
    out = []
    ups = 0
    for c in path:
        if c == "U":
            ups += 1
        else:
            out.append(ups)
            ups = 0
    return tuple(out)


# ---------------------------------------------------------------------------
# Non-crossing partitions

Partition = tuple[tuple[int, ...], ...]


def _canonical(blocks) -> Partition:
    return tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))


def _shift_blocks(p: Partition, k: int) -> list[tuple[int, ...]]:
    return [tuple(i + k for i in b) for b in p]


def tree_to_partition(t: Tree) -> Partition:
    """The non-crossing partition of {1..order} attached to a tree.

    Four cases for t = t1 v t2: the bare graft maps to |1|; grafting the
    bare root on the right adds index |t1|+1 to the block containing 1;
    grafting it on the left shifts everything by 1 and prepends the
    singleton {1}; the general case composes both.
    """
    if t.is_leaf:
        raise ValueError("the bare root has no partition")
    t1, t2 = t.left, t.right
    if t1.is_leaf and t2.is_leaf:
        return ((1,),)
    if t1.is_leaf:
        return _canonical([(1,)] + _shift_blocks(tree_to_partition(t2), 1))
    grown = [
        b + (t1.order + 1,) if 1 in b else b for b in tree_to_partition(t1)
    ]
    if t2.is_leaf:
        return _canonical(grown)
    return _canonical(grown + _shift_blocks(tree_to_partition(t2), t1.order + 1))


def is_non_crossing(p: Partition) -> bool:
    """Brute-force crossing check: no a < x < b < y across two blocks."""
    for blk_a, blk_b in combinations(p, 2):
        for a, b in combinations(sorted(blk_a), 2):
            for x, y in combinations(sorted(blk_b), 2):
                if a < x < b < y or x < a < y < b:
                    return False
    return True


def partition_string(p: Partition) -> str:
    """Compact bar notation, e.g. |13|2|; commas appear past single digits."""
    parts = []
    for b in p:
        if b and max(b) > 9:
            parts.append(",".join(str(i) for i in b))
        else:
            parts.append("".join(str(i) for i in b))
    return "|" + "|".join(parts) + "|"


def left_line_partition(t: Tree) -> Partition:
    """Group vertex numbers along maximal left-oriented lines.

    Uses :func:`treepert.trees.number_vertices`; vertices connected through
    left children share a block.  The result is again non-crossing.
    """
    numbers = number_vertices(t)
    blocks: list[tuple[int, ...]] = []

    def walk(node: Tree, path: tuple[str, ...], starts_line: bool) -> None:
        if starts_line:
            block = []
            cur, cur_path = node, path
            while True:
                block.append(numbers[cur_path])
                if cur.left.is_leaf:
                    break
                cur = cur.left
                cur_path = cur_path + ("L",)
            blocks.append(tuple(sorted(block)))
        if not node.left.is_leaf:
            walk(node.left, path + ("L",), False)
        if not node.right.is_leaf:
            walk(node.right, path + ("R",), True)

    walk(t, (), True)
    return _canonical(blocks)


# ---------------------------------------------------------------------------
# Bracketings


@dataclass(frozen=True)
class Bracketing:
    """Sign and token string of a Brueckner/Tong bracketing.

    Tokens: "*" resolvent, "o" perturbation, "<" and ">" the expectation
    value brackets.  The sign is kept separate from the token string so that
    algebra and syntax can be tested independently.
    """

    sign: int
    tokens: str

    def __str__(self):
        return ("+" if self.sign > 0 else "-") + self.tokens


def tree_to_bracketing(t: Tree) -> Bracketing:
    """Bracketing of a tree, for a one-dimensional (degenerate) model space.

    Recursion: Y -> +"*o>"; | v t2 -> "*o" b(t2); t1 v | -> -"*<o>" b(t1);
    t1 v t2 -> -"*<o" b(t2) b(t1), signs composing multiplicatively.  The
    overall sign always equals (-1)**(d-1) with d the number of
    right-oriented leaves.
    """
    if t.is_leaf:
        raise ValueError("the bare root has no bracketing")
    t1, t2 = t.left, t.right
    if t1.is_leaf and t2.is_leaf:
        return Bracketing(1, "*o>")
    if t1.is_leaf:
        inner = tree_to_bracketing(t2)
        return Bracketing(inner.sign, "*o" + inner.tokens)
    if t2.is_leaf:
        inner = tree_to_bracketing(t1)
        return Bracketing(-inner.sign, "*<o>" + inner.tokens)
    b1 = tree_to_bracketing(t1)
    b2 = tree_to_bracketing(t2)
    return Bracketing(-b1.sign * b2.sign, "*<o" + b2.tokens + b1.tokens)


# ---------------------------------------------------------------------------
# Operator words


def bloch_to_operator_word(seq) -> list[str]:
    """Token word S^(k1) V S^(k2) V .. S^(kn) V P with S^0 = -P, S^k = R^k.

    Tokens are the strings "V", "P", "-P", "R" and "R^k"; the word evaluates
    to the series term of the corresponding tree on a degenerate instance.
    """
    seq = _require_bloch(seq)
    word: list[str] = []
    for k in seq:
        if k == 0:
            word.append("-P")
        elif k == 1:
            word.append("R")
        else:
            word.append(f"R^{k}")
        word.append("V")
    word.append("P")
    return word


def operator_word_string(word) -> str:
    """Pretty form with the overall sign pulled to the front, e.g. -R^2VPVP."""
    sign = -1 if sum(1 for tok in word if tok == "-P") % 2 else 1
    body = "".join(tok.lstrip("-") for tok in word)
    return ("-" if sign < 0 else "") + body


def evaluate_operator_word(word, inst: ProblemInstance) -> np.ndarray:
    """Multiply out an operator word on a degenerate instance.

    V stands for the scaled perturbation lam*V and R for
    Q (e0 - H0)^(-1) Q at the common model energy e0; the model energies
    must agree to 1e-12.
    """
    e0 = degenerate_model_energy(inst)
    r = resolvent(inst, "r", e0).matrix
    p = p_matrix(inst)
    w = inst.w
    acc = np.eye(inst.dim, dtype=complex)
    for tok in word:
        if tok == "V":
            mat = w
        elif tok == "P":
            mat = p
        elif tok == "-P":
            mat = -p
        elif tok == "R":
            mat = r
        elif tok.startswith("R^"):
            mat = np.linalg.matrix_power(r, int(tok[2:]))
        else:
            raise ValueError(f"unknown operator token {tok!r}")
        acc = acc @ mat
    return acc
