"""Planar binary trees and their combinatorial anatomy.

A tree is either the bare root ``|`` or the graft ``t1 v t2`` of two smaller
trees; the trees with ``n`` inner vertices are counted by the Catalan numbers.
Every term of the quasi-degenerate perturbation series is indexed by one such
tree, and the geometric data extracted here (leaf orientations, subtree spans,
comb structure) is exactly what the series evaluators consume:

* leaf orientations decide which basis states (model space or complement)
  enter each slot of a term's numerator;
* subtree spans decide which energy differences make up its denominator;
* comb factorizations and left-spine decompositions drive the resummations.

All values are immutable and all functions are pure, so everything here is
safe to share between threads.
"""

from __future__ import annotations

import os
from functools import lru_cache

from .errors import OrderCapError

DEFAULT_MAX_ORDER = 12
MAX_ORDER_ENV = "RS_TREES_MAX_ORDER"


class Tree:
    """A planar binary tree: the bare root, or an ordered pair of subtrees.

    ``order`` counts inner vertices; a tree of order n has n + 1 leaves.
    Instances are immutable, hashable and compare structurally.
    """

    __slots__ = ("left", "right", "order", "_hash")

    def __init__(self, left: "Tree | None" = None, right: "Tree | None" = None):
        if (left is None) != (right is None):
            raise ValueError("a tree has either no children or exactly two")
        self.left = left
        self.right = right
        if left is None:
            self.order = 0
            self._hash = hash(("tree-leaf",))
        else:
            self.order = left.order + right.order + 1
            self._hash = hash((left._hash, right._hash, self.order))

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Tree):
            return NotImplemented
        if self._hash != other._hash or self.order != other.order:
            return False
        if self.is_leaf:
            return other.is_leaf
        return (
            not other.is_leaf
            and self.left == other.left
            and self.right == other.right
        )

    def __hash__(self):
        return self._hash

    def __str__(self):
        return encode(self) or "|"

    def __repr__(self):
        return f"Tree[{self}]"


LEAF = Tree()


def graft(t1: Tree, t2: Tree) -> Tree:
    """Join two trees under a new root; the result has order |t1| + |t2| + 1."""
    return Tree(t1, t2)


def decompose(t: Tree) -> tuple[Tree, Tree]:
    """Return the unique (left, right) pair with t = left v right."""
    if t.is_leaf:
        raise ValueError("the bare root does not decompose")
    return t.left, t.right


def _order_cap(max_order) -> int:
    if max_order is not None:
        return int(max_order)
    env = os.environ.get(MAX_ORDER_ENV)
    return int(env) if env else DEFAULT_MAX_ORDER


@lru_cache(maxsize=None)
def _all_trees(n: int) -> tuple[Tree, ...]:
    if n == 0:
        return (LEAF,)
    out = []
    for k in range(n):
        for a in _all_trees(k):
            for b in _all_trees(n - 1 - k):
                out.append(Tree(a, b))
    return tuple(out)


def enumerate_trees(
    order: int, right_normalized: bool = False, max_order: int | None = None
) -> list[Tree]:
    """All trees with the given number of inner vertices, in a fixed order.

    The order is canonical: ascending left-subtree order, then recursively,
    so test fixtures and CLI output are reproducible.  ``right_normalized``
    keeps only trees with no subtree of the form ``t1 v |`` with ``t1 != |``
    (these are counted by the Motzkin numbers).  The cap (default 12) guards
    against runaway memory; it can be overridden per call or globally through
    the ``RS_TREES_MAX_ORDER`` environment variable.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    cap = _order_cap(max_order)
    if order > cap:
        raise OrderCapError(f"order {order} exceeds the enumeration cap {cap}")
    trees = _all_trees(order)
    if right_normalized:
        return [t for t in trees if is_right_normalized(t)]
    return list(trees)


def is_right_normalized(t: Tree) -> bool:
    """True when no subtree has the shape ``t1 v |`` with nontrivial t1."""
    if t.is_leaf:
        return True
    if t.right.is_leaf and not t.left.is_leaf:
        return False
    return is_right_normalized(t.left) and is_right_normalized(t.right)


def leaf_orientations(t: Tree) -> tuple[str, ...]:
    """Orientation ("L" or "R") of each leaf, numbered left to right.

    A leaf is "L" when it hangs as a left child and "R" otherwise.  The first
    leaf is always "L" and the last always "R".  In a series term, "R" leaves
    carry model-space states and "L" leaves carry complement states.
    """
    if t.is_leaf:
        raise ValueError("the bare root has no oriented leaves")
    out: list[str] = []

    def walk(node: Tree) -> None:
        if node.left.is_leaf:
            out.append("L")
        else:
            walk(node.left)
        if node.right.is_leaf:
            out.append("R")
        else:
            walk(node.right)

    walk(t)
    return tuple(out)


def orientation_sign(t: Tree) -> int:
    """(-1)**(d-1) with d the number of right-oriented leaves."""
    d = leaf_orientations(t).count("R")
    return 1 if d % 2 == 1 else -1


def subtree_spans(t: Tree) -> list[tuple[int, int]]:
    """Per inner vertex, the leaf indices (l, r) spanned by its subtree.

    Listed in preorder (root first); the root span is (1, order + 1).  Each
    span contributes one energy-difference factor e[r] - e[l] to the
    denominator of the corresponding series term.
    """
    if t.is_leaf:
        raise ValueError("the bare root has no inner vertices")
    spans: list[tuple[int, int] | None] = []

    def walk(node: Tree, first: int) -> int:
        if node.is_leaf:
            return 1
        slot = len(spans)
        spans.append(None)
        n_left = walk(node.left, first)
        n_right = walk(node.right, first + n_left)
        spans[slot] = (first, first + n_left + n_right - 1)
        return n_left + n_right

    walk(t, 1)
    return spans  # type: ignore[return-value]


def left_comb_graft(t: Tree, n: int) -> Tree:
    """Graft the bare root onto t from the right, n times."""
    if n < 0:
        raise ValueError("n must be non-negative")
    for _ in range(n):
        t = Tree(t, LEAF)
    return t


def comb_factorize(t: Tree) -> tuple[Tree, int]:
    """Unique (base, n) with t = left_comb_graft(base, n).

    The base is the bare root or a tree that is not of the form ``v v |``.
    """
    n = 0
    while not t.is_leaf and t.right.is_leaf:
        t = t.left
        n += 1
    return t, n


def left_spine_decompose(t: Tree) -> list[Tree]:
    """Unique [v1, ..., vk] with t = ((..(| v v1) v ..) v v_{k-1}) v vk.

    Peels the left spine of the tree; the orders satisfy
    sum(|vi| + 1) = |t|.
    """
    if t.is_leaf:
        raise ValueError("the bare root does not decompose")
    vs = []
    while not t.is_leaf:
        vs.append(t.right)
        t = t.left
    vs.reverse()
    return vs


def encode(t: Tree) -> str:
    """Canonical balanced-parenthesis code: leaf -> "", a v b -> "(" a ")" b."""
    if t.is_leaf:
        return ""
    return "(" + encode(t.left) + ")" + encode(t.right)


def parse(code: str) -> Tree:
    """Inverse of :func:`encode`; raises ValueError on malformed input."""
    tree, pos = _parse(code, 0)
    if pos != len(code):
        raise ValueError(f"trailing characters in tree code at position {pos}: {code!r}")
    return tree


def _parse(code: str, pos: int) -> tuple[Tree, int]:
    if pos >= len(code) or code[pos] != "(":
        return LEAF, pos
    left, pos = _parse(code, pos + 1)
    if pos >= len(code) or code[pos] != ")":
        raise ValueError(f"unbalanced '(' in tree code: {code!r}")
    right, pos = _parse(code, pos + 1)
    return Tree(left, right), pos


def number_vertices(t: Tree) -> dict[tuple[str, ...], int]:
    """Number the inner vertices: root first, right subtree before left.

    Keys are root-to-vertex paths (tuples over {"L", "R"}), values the
    assigned numbers 1..order.  The recursion: the root gets 1, the right
    subtree is numbered next (shifted by 1), then the left subtree (shifted
    by |right| + 1).
    """
    if t.is_leaf:
        raise ValueError("the bare root has no inner vertices")
    numbers: dict[tuple[str, ...], int] = {}

    def assign(node: Tree, path: tuple[str, ...], base: int) -> None:
        numbers[path] = base + 1
        if not node.right.is_leaf:
            assign(node.right, path + ("R",), base + 1)
        if not node.left.is_leaf:
            assign(node.left, path + ("L",), base + 1 + node.right.order)

    assign(t, (), 0)
    return numbers
