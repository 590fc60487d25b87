import io

import numpy as np
import pytest

from treepert.operators import p_matrix
from treepert.oracle import (
    convergence_scan,
    exact_chi,
    exact_wave_operator,
    fit_loglog_slope,
    series_coefficient,
)
from treepert.series import effective_hamiltonian, tree_term, wave_operator
from treepert.trees import enumerate_trees
from util import random_instance


class TestExactWaveOperator:
    def test_unperturbed_is_projector(self, instance_a):
        om = exact_wave_operator(instance_a.scaled(0.0)).matrix
        assert np.allclose(om, p_matrix(instance_a))

    def test_normalization(self):
        for seed in range(5):
            inst = random_instance(seed, lam=0.6)
            om = exact_wave_operator(inst).matrix
            pm = p_matrix(inst)
            assert np.abs(pm @ om - pm).max() < 1e-12
            assert np.abs(om @ pm - om).max() < 1e-12

    def test_intertwining(self):
        for seed in range(5):
            inst = random_instance(seed, lam=0.6)
            om = exact_wave_operator(inst).matrix
            m = inst.model_indices
            heff = (inst.h @ om)[np.ix_(m, m)]
            embed = np.zeros_like(om)
            embed[np.ix_(m, m)] = heff
            assert np.linalg.norm(inst.h @ om - om @ embed) < 1e-10

    def test_heff_eigenvalues_are_exact(self, instance_a):
        om = exact_wave_operator(instance_a).matrix
        heff = effective_hamiltonian(om, instance_a)
        got = np.sort(np.linalg.eigvals(heff).real)
        exact = np.linalg.eigvalsh(instance_a.h)
        dists = [np.abs(exact - e).min() for e in got]
        assert max(dists) < 1e-10

    def test_chi_shape(self, instance_a):
        chi = exact_chi(instance_a)
        m = instance_a.model_indices
        assert np.abs(chi[m, :]).max() == 0.0
        assert np.abs(chi[:, 2]).max() == 0.0


class TestSeriesCoefficient:
    def test_order_zero_empty(self, instance_a):
        assert np.abs(series_coefficient(instance_a, 0)).max() == 0.0

    def test_first_order(self, instance_a):
        c = series_coefficient(instance_a, 1)
        ref = tree_term(enumerate_trees(1)[0], instance_a).matrix
        assert np.linalg.norm(c - ref) < 1e-8

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_per_order_sums(self, instance_a, n):
        trunc = wave_operator(instance_a, n)
        c = series_coefficient(instance_a, n)
        rel = np.linalg.norm(c - trunc.per_order[n]) / np.linalg.norm(
            trunc.per_order[n]
        )
        assert rel < 1e-6

    def test_scaling_in_v(self, instance_a):
        from treepert.operators import ProblemInstance

        scaled = ProblemInstance(
            h0=instance_a.h0, v=2.0 * instance_a.v, model=instance_a.model
        )
        for n in (1, 2):
            a = series_coefficient(scaled, n)
            b = series_coefficient(instance_a, n)
            rel = np.linalg.norm(a - 2.0**n * b) / np.linalg.norm(a)
            assert rel < 1e-6

    def test_order_cap(self, instance_a):
        with pytest.raises(ValueError):
            series_coefficient(instance_a, 7)

    def test_high_orders_hit_noise_floor(self, instance_a):
        # with the fixed step grid, double-precision cancellation limits
        # orders 5 and 6 to about 2e-6 / 1e-4 relative accuracy; the default
        # tolerance refuses them and a loosened one accepts the floor
        from treepert.errors import ExtrapolationError

        with pytest.raises(ExtrapolationError):
            series_coefficient(instance_a, 6)
        trunc = wave_operator(instance_a, 6)
        for n, tol, floor in ((5, 1e-4, 1e-5), (6, 1e-2, 5e-4)):
            c = series_coefficient(instance_a, n, rel_tol=tol)
            rel = np.linalg.norm(c - trunc.per_order[n]) / np.linalg.norm(
                trunc.per_order[n]
            )
            assert rel < floor


class TestConvergenceScan:
    LAMS = [0.1 * 2**-k for k in range(6)]

    def test_series_slopes(self, instance_a):
        report = convergence_scan(instance_a, "series", [1, 2, 3, 4], self.LAMS)
        for n in (1, 2, 3, 4):
            slope, _ = report.slopes[n]
            assert abs(slope - (n + 1)) <= 0.3

    def test_exact_method_self_comparison(self, instance_a):
        report = convergence_scan(instance_a, "exact", [0], self.LAMS[:2])
        assert all(row[2] < 1e-12 for row in report.rows)

    def test_order_zero_error_is_chi_norm(self, instance_a):
        lam = 0.1
        report = convergence_scan(instance_a, "series", [0], [lam])
        expected = np.linalg.norm(exact_chi(instance_a.scaled(lam)))
        assert report.rows[0][2] == pytest.approx(expected)

    def test_unknown_method(self, instance_a):
        with pytest.raises(ValueError):
            convergence_scan(instance_a, "nope", [1], [0.1])

    def test_csv_and_json(self, instance_a):
        report = convergence_scan(instance_a, "series", [1, 2], self.LAMS[:3])
        buf = io.StringIO()
        report.write_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "lambda,order_or_iter,err_vs_exact,lindgren_residual"
        assert len(lines) == 1 + 3 * 2
        assert '"1"' in report.to_json() or '"1":' in report.to_json()


def test_fit_loglog_slope_recovers_power_law():
    xs = [0.1, 0.05, 0.025]
    ys = [3.0 * x**2.5 for x in xs]
    slope, rms = fit_loglog_slope(xs, ys)
    assert slope == pytest.approx(2.5, abs=1e-9)
    assert rms < 1e-12
