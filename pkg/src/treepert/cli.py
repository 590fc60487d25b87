"""Command-line interface.

Subcommands: ``trees`` (enumeration), ``bijections`` (correspondence table),
``series`` (plain truncations), ``resum`` (resummations and iterative
schemes), ``compare`` (everything against the exact solution) and
``validate`` (instance sanity report).  Exit codes: 0 success, 1 validation
error, 2 numerical failure, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .bijections import (
    bloch_to_dyck,
    partition_string,
    tree_to_bloch,
    tree_to_bracketing,
    tree_to_partition,
)
from .operators import load_instance, p_matrix, qhq_php_gap
from .oracle import convergence_scan, exact_chi
from .resummations import (
    accelerated_wave_operator,
    alternative_wave_operator,
    comb_fixed_point,
    generalized_cf,
    left_comb_wave_operator,
    shifted_expansion,
    suzuki_lee_cf,
)
from .series import (
    effective_hamiltonian,
    heff_eigenvalues,
    lindgren_residual,
    wave_operator,
)
from .trees import encode, enumerate_trees

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _load(args):
    inst = load_instance(args.instance)
    if getattr(args, "lam", None) is not None:
        inst = inst.scaled(args.lam)
    return inst


def _fmt(x) -> str:
    return f"{x:.12e}"


def cmd_trees(args) -> int:
    trees = enumerate_trees(args.order, right_normalized=args.right_normalized)
    if args.count:
        print(len(trees))
    else:
        for t in trees:
            print(encode(t) or "|")
    return 0


def cmd_bijections(args) -> int:
    writer = csv.writer(sys.stdout)
    writer.writerow(["tree", "bloch", "dyck", "bracketing", "partition"])
    for t in enumerate_trees(args.order):
        bloch = tree_to_bloch(t)
        writer.writerow(
            [
                encode(t),
                ",".join(str(k) for k in bloch),
                bloch_to_dyck(bloch),
                str(tree_to_bracketing(t)),
                partition_string(tree_to_partition(t)),
            ]
        )
    return 0


def _truncation_rows(writer, inst, trunc, emit):
    n_model = len(inst.model)
    header = ["order"]
    if emit in ("all", "chi-norm"):
        header += ["chi_norm", "lindgren_residual"]
    if emit in ("all", "per-order"):
        header += ["per_order_norm"]
    if emit in ("all", "heff"):
        header += [f"heff_{k + 1}" for k in range(n_model)]
    writer.writerow(header)
    running = np.zeros_like(trunc.per_order[0])
    for n in range(trunc.order + 1):
        running = running + trunc.per_order[n]
        row = [n]
        if emit in ("all", "chi-norm"):
            row += [_fmt(np.linalg.norm(running)), _fmt(lindgren_residual(running, inst))]
        if emit in ("all", "per-order"):
            row += [_fmt(np.linalg.norm(trunc.per_order[n]))]
        if emit in ("all", "heff"):
            heff = effective_hamiltonian(p_matrix(inst) + running, inst)
            row += [f"{v.real:.12g}" for v in heff_eigenvalues(heff)]
        writer.writerow(row)


def cmd_series(args) -> int:
    inst = _load(args)
    trunc = wave_operator(inst, args.order)
    _truncation_rows(csv.writer(sys.stdout), inst, trunc, args.emit)
    return 0


_TRUNCATION_SCHEMES = {
    "leftcomb": left_comb_wave_operator,
    "accelerated": accelerated_wave_operator,
    "alternative": alternative_wave_operator,
}


def cmd_resum(args) -> int:
    inst = _load(args)
    writer = csv.writer(sys.stdout)
    if args.scheme in _TRUNCATION_SCHEMES:
        trunc = _TRUNCATION_SCHEMES[args.scheme](inst, args.order)
        _truncation_rows(writer, inst, trunc, "all")
        return 0
    if args.scheme == "shift":
        result = shifted_expansion(inst, args.parent, args.order)
        sh = result.shifted
        writer.writerow(["order", "chi_norm", "lindgren_residual", "heff"])
        running = np.zeros((sh.dim, sh.dim), dtype=complex)
        for n in range(args.order + 1):
            running = running + result.truncation.per_order[n]
            heff = effective_hamiltonian(p_matrix(sh) + running, sh)[0, 0]
            writer.writerow(
                [
                    n,
                    _fmt(np.linalg.norm(running)),
                    _fmt(lindgren_residual(running, sh)),
                    f"{heff.real:.12g}",
                ]
            )
        return 0
    if args.scheme == "lk":
        sol = comb_fixed_point(
            inst, cutoff=args.cutoff, variant=args.variant,
            max_iter=args.max_iter, tol=args.tol,
        )
    elif args.scheme == "slcf":
        sol = suzuki_lee_cf(inst, max_iter=args.max_iter, tol=args.tol)
    else:
        sol = generalized_cf(inst, max_iter=args.max_iter, tol=args.tol)
    writer.writerow(["step", "chi_norm", "lindgren_residual"] +
                    [f"heff_{k + 1}" for k in range(len(inst.model))])
    for step, (chi, res) in enumerate(zip(sol.iterates, sol.residuals), start=1):
        heff = effective_hamiltonian(p_matrix(inst) + chi, inst)
        writer.writerow(
            [step, _fmt(np.linalg.norm(chi)), _fmt(res)]
            + [f"{v.real:.12g}" for v in heff_eigenvalues(heff)]
        )
    if not sol.converged:
        print(f"warning: {args.scheme} did not converge to tol={args.tol:g} "
              f"within {args.max_iter} iterations", file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    inst = _load(args)
    writer = csv.writer(sys.stdout)
    writer.writerow(["method", "lambda", "order_or_iter", "err_vs_exact",
                     "lindgren_residual"])
    chi_ref = exact_chi(inst)
    for method in ("series", "leftcomb", "accelerated", "alternative"):
        try:
            report = convergence_scan(
                inst, method, orders=range(args.order + 1), lambdas=[inst.lam]
            )
        except (ArithmeticError, ValueError) as exc:
            print(f"note: skipping {method}: {exc}", file=sys.stderr)
            continue
        for lam, n, err, res in report.rows:
            writer.writerow([method, f"{lam:.12g}", n, _fmt(err), _fmt(res)])
    iteratives = [
        ("lk-barred", lambda: comb_fixed_point(inst, variant="barred",
                                               max_iter=args.max_iter, tol=args.tol)),
        ("lk-bare", lambda: comb_fixed_point(inst, variant="bare",
                                             max_iter=args.max_iter, tol=args.tol)),
        ("gcf", lambda: generalized_cf(inst, max_iter=args.max_iter, tol=args.tol)),
        ("slcf", lambda: suzuki_lee_cf(inst, max_iter=args.max_iter, tol=args.tol)),
    ]
    for name, run in iteratives:
        try:
            sol = run()
        except (ArithmeticError, ValueError) as exc:
            print(f"note: skipping {name}: {exc}", file=sys.stderr)
            continue
        for step, (chi, res) in enumerate(zip(sol.iterates, sol.residuals), start=1):
            err = float(np.linalg.norm(chi_ref - chi))
            writer.writerow([name, f"{inst.lam:.12g}", step, _fmt(err), _fmt(res)])
    return 0


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    dev = float(np.abs(inst.v - inst.v.conj().T).max())
    print(f"dim: {inst.dim}")
    print(f"model (1-based): {[i + 1 for i in inst.model]}")
    print(f"lambda: {inst.lam:g}")
    print(f"hermiticity deviation: {dev:.3e}")
    print(f"gap: {inst.gap:g}")
    print(f"qhq_php_gap: {qhq_php_gap(inst):g}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="treepert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trees", help="list tree codes at one order")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--right-normalized", action="store_true")
    p.add_argument("--count", action="store_true", help="print only the count")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("bijections", help="tree/Bloch/Dyck/bracketing/partition CSV")
    p.add_argument("--order", type=int, required=True)
    p.set_defaults(func=cmd_bijections)

    p = sub.add_parser("series", help="plain series truncation report")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--instance", required=True)
    p.add_argument("--emit", choices=["all", "heff", "chi-norm", "per-order"],
                   default="all")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("resum", help="resummed or iterative scheme report")
    p.add_argument("--scheme", required=True,
                   choices=["leftcomb", "accelerated", "alternative",
                            "lk", "slcf", "gcf", "shift"])
    p.add_argument("--order", type=int, default=6)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--cutoff", type=int, default=None, help="k-sum depth (lk)")
    p.add_argument("--variant", choices=["barred", "bare"], default="barred")
    p.add_argument("--parent", type=int, default=0,
                   help="0-based parent state index (shift)")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_resum)

    p = sub.add_parser("compare", help="run all schemes against the exact chi")
    p.add_argument("--instance", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="instance sanity report")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
