import numpy as np
import pytest

from treepert.errors import NotDegenerateError, ShiftDegenerateError
from treepert.operators import (
    ProblemInstance,
    model_eigensystem,
    p_matrix,
    resolvent,
)
from treepert.oracle import exact_chi
from treepert.resummations import (
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
from treepert.series import lindgren_residual, tree_term, wave_operator
from treepert.trees import LEAF, enumerate_trees, graft, left_comb_graft
from util import degenerate_instance, random_hermitian

Y = graft(LEAF, LEAF)
DEUXUN = graft(Y, LEAF)
DEUXDEUX = graft(LEAF, Y)


@pytest.fixture
def small_coupling(instance_a):
    lam = 0.3 * instance_a.gap / np.linalg.norm(instance_a.v, 2)
    return instance_a.scaled(lam)


class TestLeftCombs:
    def test_matches_partial_sums(self, small_coupling):
        inst = small_coupling
        bases = [Y, graft(Y, Y), graft(LEAF, DEUXUN), graft(DEUXDEUX, Y)]
        for t in bases:
            resummed = left_comb_sum(t, inst).matrix
            partial = sum(
                tree_term(left_comb_graft(t, n), inst).matrix for n in range(21)
            )
            assert np.abs(resummed - partial).max() < 1e-8

    def test_tail_bound(self, small_coupling):
        inst = small_coupling
        m = inst.model_indices
        rho = max(
            np.linalg.norm(
                (inst.w @ resolvent(inst, "g0p", float(inst.h0[i])).matrix)[
                    np.ix_(m, m)
                ],
                2,
            )
            for i in inst.rest_indices
        )
        assert rho < 1.0
        t = graft(Y, Y)
        partial = sum(tree_term(left_comb_graft(t, n), inst).matrix for n in range(21))
        last = np.linalg.norm(tree_term(left_comb_graft(t, 20), inst).matrix)
        bound = last * rho / (1.0 - rho)
        diff = np.linalg.norm(left_comb_sum(t, inst).matrix - partial)
        assert diff <= bound + 1e-12

    def test_pvp_zero_collapses_to_plain_term(self):
        # when the model block of V vanishes, every comb grafting inserts a
        # zero factor and the comb sum reduces to the bare term
        rng = np.random.default_rng(8)
        v = random_hermitian(rng, 4, norm=0.5)
        v[np.ix_([0, 1], [0, 1])] = 0.0
        inst = ProblemInstance(h0=[0.0, 0.2, 1.0, 1.7], v=v, model=(0, 1), lam=1.0)
        for t in [Y, graft(Y, Y)]:
            assert (
                np.abs(left_comb_sum(t, inst).matrix - tree_term(t, inst).matrix).max()
                < 1e-13
            )

    def test_small_coupling_limit(self, instance_a):
        # the comb sum approaches the bare term one order faster than the term
        t = graft(Y, Y)
        errs = []
        lams = [0.1, 0.05]
        for lam in lams:
            inst = instance_a.scaled(lam)
            errs.append(
                np.linalg.norm(
                    left_comb_sum(t, inst).matrix - tree_term(t, inst).matrix
                )
            )
        ratio = errs[1] / errs[0]
        assert ratio == pytest.approx(0.5 ** (t.order + 1), rel=0.2)

    def test_invalid_bases_rejected(self, instance_a):
        with pytest.raises(ValueError):
            left_comb_sum(LEAF, instance_a)
        with pytest.raises(ValueError):
            left_comb_sum(DEUXUN, instance_a)

    def test_wave_operator_orders(self, small_coupling):
        trunc = left_comb_wave_operator(small_coupling, 3)
        assert np.allclose(
            trunc.per_order[1], left_comb_sum(Y, small_coupling).matrix
        )
        # order-2 bases: only | v Y
        assert np.allclose(
            trunc.per_order[2], left_comb_sum(DEUXDEUX, small_coupling).matrix
        )


class TestAccelerated:
    def test_base_term_two_forms(self, instance_a):
        inst = instance_a.scaled(0.5)
        hat_y = accelerated_term(Y, inst).matrix
        other = np.zeros((3, 3), dtype=complex)
        for i in inst.rest_indices:
            gp = resolvent(inst, "gp", float(inst.h0[i])).matrix
            other[i, :] = (inst.w @ gp)[i, :]
        assert np.abs(hat_y - other).max() < 1e-12

    def test_term_count_at_order_four(self, instance_a):
        assert len(enumerate_trees(4, right_normalized=True)) == 4
        trunc = accelerated_wave_operator(instance_a, 4)
        assert len(trunc.per_order) == 5

    def test_rejects_non_normalized_tree(self, instance_a):
        with pytest.raises(ValueError):
            accelerated_term(DEUXUN, instance_a)

    def test_residual_comparison_reported(self, instance_a, capsys):
        # the acceleration claim is reported, not asserted
        inst = instance_a.scaled(0.5)
        plain = wave_operator(inst, 8).chi
        accel = accelerated_wave_operator(inst, 8).chi
        rp = lindgren_residual(plain, inst)
        ra = lindgren_residual(accel, inst)
        print(f"order-8 residuals at lam=0.5: plain {rp:.3e}, accelerated {ra:.3e}")
        assert rp > 0 and ra > 0

    def test_converges_to_exact(self, instance_a):
        inst = instance_a.scaled(0.4)
        chi = accelerated_wave_operator(inst, 10).chi
        assert np.linalg.norm(chi - exact_chi(inst)) < 1e-7


class TestAlternative:
    def test_block_diagonal_v_gives_p(self):
        v = np.zeros((4, 4), dtype=complex)
        v[np.ix_([0, 1], [0, 1])] = [[0.0, 0.2], [0.2, 0.0]]
        v[np.ix_([2, 3], [2, 3])] = [[0.0, 0.1], [0.1, 0.0]]
        inst = ProblemInstance(h0=[0.0, 0.3, 1.2, 1.8], v=v, model=(0, 1), lam=1.0)
        assert np.abs(alternative_term(LEAF, inst).matrix).max() == 0.0
        trunc = alternative_wave_operator(inst, 3)
        assert np.abs(trunc.omega - p_matrix(inst)).max() == 0.0

    def test_base_defining_identity(self, instance_a):
        inst = instance_a.scaled(0.5)
        php = model_eigensystem(inst)
        base = alternative_term(LEAF, inst).matrix
        qm = np.eye(3) - p_matrix(inst)
        for j in range(php.size):
            pj = php.projector(j)
            lhs = qm @ (php.energies[j] * np.eye(3) - inst.h) @ base @ pj
            rhs = qm @ inst.w @ pj
            assert np.abs(lhs - rhs).max() < 1e-12

    def test_residual_decreases_below_1e8(self, instance_a):
        inst = instance_a.scaled(0.5)
        residuals = []
        trunc = alternative_wave_operator(inst, 10)
        running = np.zeros((3, 3), dtype=complex)
        for n in range(11):
            running = running + trunc.per_order[n]
            residuals.append(lindgren_residual(running, inst))
        assert residuals[-1] < 1e-8
        # essentially monotone decay (tiny float wiggle tolerated)
        for a, b in zip(residuals, residuals[1:]):
            assert b <= a * 1.05


class TestCombFixedPoint:
    def test_first_barred_iterate_is_base_term(self, instance_a):
        inst = instance_a.scaled(0.5)
        sol = comb_fixed_point(inst, cutoff=3, variant="barred", max_iter=1)
        base = alternative_term(LEAF, inst).matrix
        assert np.abs(sol.iterates[0] - base).max() < 1e-14

    def test_exact_chi_is_fixed_point(self, instance_a):
        inst = instance_a.scaled(0.5)
        chi = exact_chi(inst)
        for variant in ("barred", "bare"):
            rhs = comb_rhs(inst, chi, cutoff=14, variant=variant)
            assert np.abs(rhs - chi).max() < 1e-8

    def test_variants_agree(self, instance_a):
        inst = instance_a.scaled(0.5)
        a = comb_fixed_point(inst, cutoff=8, variant="barred").chi
        b = comb_fixed_point(inst, cutoff=8, variant="bare").chi
        assert np.linalg.norm(a - b) < 1e-8

    def test_residual_floor_shrinks_with_cutoff(self, instance_a):
        inst = instance_a.scaled(0.5)
        floors = [
            comb_fixed_point(inst, cutoff=k, max_iter=60).residuals[-1]
            for k in (2, 4, 8)
        ]
        assert floors[0] > floors[1] > floors[2]
        assert floors[2] < 1e-10

    def test_invalid_arguments(self, instance_a):
        with pytest.raises(ValueError):
            comb_fixed_point(instance_a, cutoff=0)
        with pytest.raises(ValueError):
            comb_fixed_point(instance_a, variant="sideways")


class TestSuzukiLee:
    def test_first_iterate_formula(self):
        inst = degenerate_instance(seed=4)
        sol = suzuki_lee_cf(inst, max_iter=1)
        m, q = inst.model_indices, inst.rest_indices
        bracket = -inst.h[np.ix_(q, q)]  # e0 = 0
        expected = np.zeros((inst.dim, inst.dim), dtype=complex)
        expected[np.ix_(q, m)] = np.linalg.solve(bracket, inst.w[np.ix_(q, m)])
        assert np.abs(sol.iterates[0] - expected).max() < 1e-14

    def test_zero_perturbation(self):
        inst = degenerate_instance(seed=4, vnorm=0.0)
        inst = ProblemInstance(
            h0=inst.h0, v=np.zeros((inst.dim, inst.dim)), model=inst.model
        )
        sol = suzuki_lee_cf(inst, max_iter=5)
        assert np.abs(sol.chi).max() == 0.0
        assert sol.converged

    def test_converges(self):
        inst = degenerate_instance(seed=7, vnorm=0.2)
        sol = suzuki_lee_cf(inst)
        assert sol.converged
        assert sol.residuals[-1] < 1e-10
        assert len(sol.iterates) == len(sol.residuals) <= 50

    def test_requires_degenerate(self, instance_a):
        with pytest.raises(NotDegenerateError):
            suzuki_lee_cf(instance_a)


class TestGeneralizedCf:
    def test_first_iterate_equals_accelerated_base(self, instance_a):
        sol = generalized_cf(instance_a, max_iter=1)
        base = accelerated_term(Y, instance_a).matrix
        assert np.abs(sol.iterates[0] - base).max() < 1e-12

    def test_converges_at_unit_coupling(self, instance_a):
        sol = generalized_cf(instance_a)
        assert sol.converged
        assert sol.residuals[-1] < 1e-10
        assert sol.steps <= 50

    def test_fixed_point_identity_per_row(self, instance_a):
        chi = generalized_cf(instance_a).chi
        m = instance_a.model_indices
        hn = instance_a.h[np.ix_(m, m)]
        wchi = instance_a.w @ chi
        for i in instance_a.rest_indices:
            bracket = hn - instance_a.h0[i] * np.eye(len(m)) + wchi[np.ix_(m, m)]
            lhs = chi[i, m] @ bracket
            rhs = instance_a.w[i, m] + wchi[i, m]
            assert np.abs(lhs - rhs).max() < 1e-10


class TestShiftedExpansion:
    def make_instance(self, seed=11):
        rng = np.random.default_rng(seed)
        v = random_hermitian(rng, 3, norm=1.0, complex_v=False)
        return ProblemInstance(h0=[0.0, 0.0, 1.0], v=v, model=(0, 1), lam=0.1)

    def test_naive_single_parent_model_is_ill_posed(self):
        inst = self.make_instance()
        with pytest.raises(ValueError, match="gap"):
            ProblemInstance(h0=inst.h0, v=inst.v, model=(0,), lam=inst.lam)

    def test_shifted_instance_structure(self):
        inst = self.make_instance()
        sh = shifted_instance(inst, 0)
        assert len(sh.model) == 1
        m = inst.model_indices
        # old-model block of the rotated perturbation vanishes identically
        assert np.abs(sh.v[np.ix_(m, m)]).max() == 0.0
        # shifted energies are the PVP eigenvalues scaled by the coupling
        shifts = np.linalg.eigvalsh(inst.v[np.ix_(m, m)])
        assert np.allclose(sh.h0[m], inst.h0[m] + inst.lam * shifts)
        assert sh.gap > 1e-10

    def test_right_graft_terms_vanish_exactly(self):
        inst = self.make_instance()
        sh = shifted_instance(inst, 0)
        for t in [DEUXUN, graft(DEUXDEUX, LEAF), graft(DEUXUN, LEAF)]:
            assert np.abs(tree_term(t, sh).matrix).max() == 0.0

    def test_order_two_term_is_finite(self):
        inst = self.make_instance()
        sh = shifted_instance(inst, 0)
        mat = tree_term(DEUXDEUX, sh).matrix
        assert np.isfinite(mat).all()
        assert np.abs(mat).max() > 0.0

    def test_energy_matches_exact_branch(self):
        inst = self.make_instance()
        result = shifted_expansion(inst, 0, 3)
        vals, vecs = np.linalg.eigh(inst.h)
        m = inst.model_indices
        _, basis = np.linalg.eigh(inst.v[np.ix_(m, m)])
        parent = np.zeros(3, dtype=complex)
        parent[m] = basis[:, 0]
        overlaps = np.abs(vecs.conj().T @ parent) ** 2
        e_exact = vals[np.argmax(overlaps)]
        assert abs(result.heff.real - e_exact) < 5e-5

    def test_parent_index_validated(self):
        inst = self.make_instance()
        with pytest.raises(ValueError):
            shifted_instance(inst, 5)

    def test_requires_degenerate(self, instance_a):
        with pytest.raises(NotDegenerateError):
            shifted_instance(instance_a, 0)

    def test_colliding_shifts_rejected(self):
        # zero model block of V shifts both parents identically
        v = np.zeros((3, 3), dtype=complex)
        v[0, 2] = v[2, 0] = 0.3
        v[1, 2] = v[2, 1] = 0.2
        inst = ProblemInstance(h0=[0.0, 0.0, 1.0], v=v, model=(0, 1), lam=0.1)
        with pytest.raises(ShiftDegenerateError):
            shifted_instance(inst, 0)


def test_schemes_cross_consistent():
    inst = degenerate_instance(seed=5, dim=4, n_model=2, vnorm=1.0, lam=0.1)
    chis = {
        "series": wave_operator(inst, 10).chi,
        "accelerated": accelerated_wave_operator(inst, 10).chi,
        "alternative": alternative_wave_operator(inst, 10).chi,
        "lk-barred": comb_fixed_point(inst, cutoff=8).chi,
        "lk-bare": comb_fixed_point(inst, cutoff=8, variant="bare").chi,
        "slcf": suzuki_lee_cf(inst).chi,
        "gcf": generalized_cf(inst).chi,
    }
    names = list(chis)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            assert np.linalg.norm(chis[a] - chis[b]) < 1e-7, (a, b)
    for name, chi in chis.items():
        assert lindgren_residual(chi, inst) < 1e-8, name
