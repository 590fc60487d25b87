"""Exact non-perturbative reference and convergence diagnostics.

Everything perturbative in this package is validated against plain dense
diagonalization: :func:`exact_wave_operator` builds the exact wave operator
from the eigenvectors of H(lam) that carry the most model-space weight,
:func:`series_coefficient` extracts Taylor coefficients of the exact chi by
Richardson-extrapolated central differences, and :func:`convergence_scan`
measures how fast each truncation scheme approaches the exact solution as
the coupling shrinks.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ExtrapolationError, ModelSpaceDetachedError
from .operators import OperatorBlock, ProblemInstance
from .resummations import (
    accelerated_wave_operator,
    alternative_wave_operator,
    left_comb_wave_operator,
)
from .series import lindgren_residual, wave_operator

DETACHMENT_TOL = 1e-8
RICHARDSON_DEPTH = 4


def exact_eigensystem(inst: ProblemInstance) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of the full H, ascending."""
    return np.linalg.eigh(inst.h)


def _select_columns(inst: ProblemInstance, vecs: np.ndarray) -> np.ndarray:
    # one eigenvector per model basis state, chosen by the assignment that
    # maximizes the total model-space weight (robust under level crossings)
    m = inst.model_indices
    weight = np.abs(vecs[m, :]) ** 2
    rows, cols = linear_sum_assignment(weight, maximize=True)
    chosen = np.empty(len(m), dtype=int)
    chosen[rows] = cols
    return chosen


def exact_wave_operator(inst: ProblemInstance) -> OperatorBlock:
    """The exact wave operator Omega with P Omega = P and Omega P = Omega.

    Selects the model-space-dominated eigenvectors Phi, inverts their model
    block A (rejecting smallest singular values below 1e-8 as a detached
    model space) and returns Phi A^(-1) embedded in the full space, so the
    eigenvalues of P H Omega are exactly the selected eigenvalues of H.
    """
    vals, vecs = exact_eigensystem(inst)
    m = inst.model_indices
    cols = _select_columns(inst, vecs)
    phi = vecs[:, cols]
    a = phi[m, :]
    svals = np.linalg.svd(a, compute_uv=False)
    if svals[-1] <= DETACHMENT_TOL:
        raise ModelSpaceDetachedError(
            f"model block of the selected eigenvectors is near-singular "
            f"(smallest singular value {svals[-1]:.3e})"
        )
    omega_cols = phi @ np.linalg.inv(a)
    omega = np.zeros((inst.dim, inst.dim), dtype=complex)
    omega[:, m] = omega_cols
    heff = (inst.h @ omega)[np.ix_(m, m)]
    embed = np.zeros_like(omega)
    embed[np.ix_(m, m)] = heff
    defect = np.linalg.norm(inst.h @ omega - omega @ embed)
    if defect > 1e-8 * max(1.0, np.linalg.norm(inst.h)):
        raise ModelSpaceDetachedError(
            f"wave operator does not intertwine H and Heff (defect {defect:.3e})"
        )
    return OperatorBlock(omega, "P", "full")


def exact_chi(inst: ProblemInstance) -> np.ndarray:
    """Q Omega for the exact wave operator (model rows zeroed)."""
    chi = exact_wave_operator(inst).matrix.copy()
    chi[inst.model_indices, :] = 0.0
    return chi


def _difference_quotient(inst: ProblemInstance, n: int, h: float) -> np.ndarray:
    # n-th central difference of chi(lam) at lam = 0, symmetric stencil
    acc = np.zeros((inst.dim, inst.dim), dtype=complex)
    for j in range(n + 1):
        weight = (-1.0) ** j * math.comb(n, j)
        offset = (n / 2.0 - j) * h
        acc = acc + weight * exact_chi(inst.scaled(offset))
    return acc / (h**n * math.factorial(n))


def series_coefficient(
    inst: ProblemInstance, n: int, rel_tol: float = 1e-6
) -> np.ndarray:
    """Order-n content of the exact chi, matching the order-n tree sum.

    Computes the n-th Taylor coefficient of chi(lam) at lam = 0 by central
    differences on steps h, h/2, h/4, h/8 (h = 0.05 gap / ||V||) with
    Richardson extrapolation in h^2, then rescales by lam**n so the result
    compares directly with the per-order sums at the instance's coupling.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if n == 0:
        return np.zeros((inst.dim, inst.dim), dtype=complex)
    if n > 6:
        raise ValueError("coefficient extraction supported up to order 6")
    vnorm = float(np.linalg.norm(inst.v, 2))
    if vnorm == 0.0:
        return np.zeros((inst.dim, inst.dim), dtype=complex)
    h = 0.05 * inst.gap / vnorm
    table = [[_difference_quotient(inst, n, h / 2**k)] for k in range(RICHARDSON_DEPTH)]
    for k in range(1, RICHARDSON_DEPTH):
        for m in range(1, k + 1):
            factor = 4.0**m
            table[k].append(
                (factor * table[k][m - 1] - table[k - 1][m - 1]) / (factor - 1.0)
            )
    best = table[-1][-1]
    prev = table[-2][-1]
    err = float(np.linalg.norm(best - prev))
    scale = max(float(np.linalg.norm(best)), 1e-12)
    if err > rel_tol * scale:
        raise ExtrapolationError(
            f"Richardson extrapolation did not settle (order {n}, "
            f"relative change {err / scale:.3e})"
        )
    return best * inst.lam**n


_METHODS = {
    "series": wave_operator,
    "accelerated": accelerated_wave_operator,
    "alternative": alternative_wave_operator,
    "leftcomb": left_comb_wave_operator,
}


def fit_loglog_slope(xs, ys) -> tuple[float, float]:
    """Least-squares slope of log(y) vs log(x) and the fit's RMS residual."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    coeffs, residuals, *_ = np.polyfit(lx, ly, 1, full=True)
    rms = float(np.sqrt(residuals[0] / lx.size)) if residuals.size else 0.0
    return float(coeffs[0]), rms


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors against the exact chi over a coupling grid, plus fitted slopes.

    Rows are (lambda, order_or_iter, err_vs_exact, lindgren_residual);
    ``slopes`` maps each truncation order to (slope, fit_rms) of the
    log-error vs log-coupling fit.
    """

    method: str
    rows: tuple[tuple[float, int, float, float], ...]
    slopes: dict[int, tuple[float, float]]

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "order_or_iter", "err_vs_exact", "lindgren_residual"])
        for lam, order, err, res in self.rows:
            writer.writerow([f"{lam:.12g}", order, f"{err:.12e}", f"{res:.12e}"])

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "slopes": {
                    str(n): {"slope": s, "fit_rms": r}
                    for n, (s, r) in sorted(self.slopes.items())
                },
            },
            indent=2,
        )


def convergence_scan(
    inst: ProblemInstance, method: str, orders, lambdas
) -> ConvergenceReport:
    """Error against the exact chi per order and coupling, with slope fits.

    ``method`` is "series", "accelerated", "alternative", "leftcomb" or
    "exact" (self-comparison).  Truncations are evaluated once per coupling
    at the largest requested order; cumulative per-order sums give the rest.
    """
    orders = sorted(set(int(n) for n in orders))
    lambdas = [float(x) for x in lambdas]
    rows = []
    errs: dict[int, list[float]] = {n: [] for n in orders}
    for lam in lambdas:
        scaled = inst.scaled(lam)
        chi_ref = exact_chi(scaled)
        if method == "exact":
            partials = {n: chi_ref for n in orders}
        else:
            try:
                builder = _METHODS[method]
            except KeyError:
                raise ValueError(f"unknown method {method!r}") from None
            trunc = builder(scaled, max(orders))
            partials = {}
            running = np.zeros_like(chi_ref)
            for n in range(max(orders) + 1):
                running = running + trunc.per_order[n]
                if n in errs:
                    partials[n] = running.copy()
        for n in orders:
            err = float(np.linalg.norm(chi_ref - partials[n]))
            res = lindgren_residual(partials[n], scaled)
            rows.append((lam, n, err, res))
            errs[n].append(err)
    slopes = {}
    if len(lambdas) >= 2:
        for n in orders:
            vals = np.array(errs[n])
            if np.all(vals > 0):
                slopes[n] = fit_loglog_slope(lambdas, vals)
    return ConvergenceReport(method=method, rows=tuple(rows), slopes=slopes)
