"""Tour of the combinatorial layer: trees, codes, and the classical
encodings of series terms.

Every term of the perturbation series is indexed by a planar binary tree;
the trees of order n are counted by the Catalan numbers, and the terms have
historically been written as Bloch sequences, Dyck paths, non-crossing
partitions or bracketings.  This script enumerates small orders and prints
the full correspondence table.
"""

from treepert import (
    bloch_to_dyck,
    comb_factorize,
    encode,
    enumerate_trees,
    graft,
    leaf_orientations,
    left_spine_decompose,
    parse,
    partition_string,
    subtree_spans,
    tree_to_bloch,
    tree_to_bracketing,
    tree_to_partition,
)

print("Catalan counts per order:")
for n in range(9):
    all_n = enumerate_trees(n)
    rn = enumerate_trees(n, right_normalized=True) if n else all_n
    print(f"  order {n}: {len(all_n):5d} trees, {len(rn):4d} right-normalized")

print("\nAnatomy of the tree (()(()))() of order 4:")
t = parse("(()(()))()")
print(f"  code               {encode(t)}")
print(f"  leaf orientations  {''.join(leaf_orientations(t))}")
print(f"  subtree spans      {subtree_spans(t)}")
print(f"  comb factorization {comb_factorize(t)}")
print(f"  left spine parts   {[str(v) for v in left_spine_decompose(t)]}")

print("\nCorrespondence table for order 3:")
print(f"  {'tree':8s} {'bloch':8s} {'dyck':8s} {'bracketing':16s} partition")
for t in enumerate_trees(3):
    b = tree_to_bloch(t)
    print(
        f"  {encode(t):8s} {''.join(map(str, b)):8s} "
        f"{bloch_to_dyck(b):8s} {str(tree_to_bracketing(t)):16s} "
        f"{partition_string(tree_to_partition(t))}"
    )

print("\nGrafting is the only way trees grow:")
y = graft(parse(""), parse(""))
print(f"  | v | = {encode(y)},  (| v |) v | = {encode(graft(y, parse('')))}")
