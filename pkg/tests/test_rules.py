import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from least_error.exceptions import EmptySelection, MissingExactData
from least_error.l1solver import solve_least_error
from least_error.model import ProblemInstance
from least_error.problems import make_denoising, make_random_sparse, with_noise
from least_error.rules import (
    choose_n_apriori,
    gamma_hat,
    run_apriori,
    run_discrepancy,
    run_monotone_error,
)


class TestApriori:
    def test_example(self):
        assert choose_n_apriori([1, 2.2360680, 10], 0.1, 0.5).n_selected == 2

    def test_zero_delta(self):
        assert choose_n_apriori([1, 2, 3, 4], 0.0).n_selected == 4

    @pytest.mark.parametrize("delta", [0.9, 0.5, 0.3, 0.1, 1e-2, 1e-3, 1e-4, 1e-5])
    def test_powers_of_two(self, delta):
        kappas = [2.0 ** (n - 1) for n in range(1, 30)]
        out = choose_n_apriori(kappas, delta, 1.0)
        assert out.n_selected == int(np.floor(np.log2(1 / delta))) + 1
        assert delta * kappas[out.n_selected - 1] <= 1.0

    def test_empty(self):
        with pytest.raises(EmptySelection):
            choose_n_apriori([5.0, 6.0], 1.0, 1.0)

    def test_requires_monotone_kappas(self):
        with pytest.raises(ValueError):
            choose_n_apriori([2.0, 1.0], 0.1)

    def test_run_solves_selected_level(self, denoise4):
        inst, fam = denoise4
        out = run_apriori(inst, fam, [1, 2, 3, 4], delta=0.4, theta=1.0)
        assert out.n_selected == 2
        assert np.allclose(out.result.u, [3, -1, 0, 0])


class TestMonotoneError:
    def test_large_delta_stops_at_one(self, denoise4):
        inst, fam = denoise4
        assert run_monotone_error(inst, fam, delta=100.0).n_selected == 1

    def test_exact_data_never_triggers(self, rate_fixture):
        inst, fam = rate_fixture
        out = run_monotone_error(inst, fam, delta=0.0)
        assert not out.terminated and out.n_selected == fam.n_max

    def test_two_formulas_denoising(self, denoise4):
        inst, fam = denoise4
        out = run_monotone_error(inst, fam, delta=0.0, scan_all=True)
        for r in out.trace[:-1]:
            assert r.d_me == pytest.approx(r.d_me_identity, abs=1e-8)
        # for the embedding d_ME(n) = |f_{n+1}|
        assert [r.d_me for r in out.trace[:-1]] == pytest.approx([1.0, 0.5, 0.2])

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 200), st.sampled_from([1e-3, 1e-2, 1e-1]))
    def test_two_formulas_random(self, seed, delta):
        inst, fam = make_random_sparse(6, 12, 2, seed=seed)
        out = run_monotone_error(with_noise(inst, delta, seed), fam, scan_all=True)
        for r in out.trace:
            if r.d_me is not None:
                assert r.d_me == pytest.approx(r.d_me_identity, abs=1e-8)

    def test_trace_csv_header(self, denoise4):
        inst, fam = denoise4
        csv = run_monotone_error(inst, fam, delta=0.0).trace_csv()
        assert csv.splitlines()[0] == "n,l1_norm,residual,d_me,kappa"


class TestDiscrepancy:
    def test_denoising_example(self):
        inst, fam = make_denoising(4, [3, -1, 0.5, 0.2])
        out = run_discrepancy(inst, fam, delta=0.3, tau=2.0)
        # residuals are tail norms; sqrt(0.29) = 0.5385 already meets tau*delta = 0.6
        assert out.n_selected == 2 and out.terminated
        assert [r.residual for r in out.trace] == pytest.approx([np.sqrt(1.29), np.sqrt(0.29)])
        out = run_discrepancy(inst, fam, delta=0.25, tau=2.0)
        assert out.n_selected == 3
        assert [r.residual for r in out.trace] == pytest.approx([np.sqrt(1.29), np.sqrt(0.29), 0.2])

    def test_large_tau_delta(self, denoise4):
        inst, fam = denoise4
        assert run_discrepancy(inst, fam, delta=10.0, tau=2.0).n_selected == 1

    def test_not_above_exact_level(self, rate_fixture):
        inst, fam = rate_fixture
        # exact data are reproduced from level 6 on (see the rate-study fixture)
        for delta in (1e-1, 1e-3, 1e-6):
            assert run_discrepancy(inst, fam, delta=delta).n_selected <= 6

    def test_not_triggered(self):
        inst, fam = make_denoising(3, [1.0, 1.0, 1.0])
        out = run_discrepancy(inst, fam, delta=0.01, tau=2.0, n_max=2)
        assert not out.terminated and out.n_selected == 2

    def test_parameter_checks(self, denoise4):
        inst, fam = denoise4
        with pytest.raises(ValueError):
            run_discrepancy(inst, fam, delta=0.1, tau=1.0)
        with pytest.raises(ValueError):
            run_discrepancy(inst, fam, delta=0.0)


class TestGammaHat:
    def test_denoising_zero(self):
        inst, fam = make_denoising(5, [1.0, -2.0, 0, 0, 0])
        for n in (2, 3, 5):
            assert gamma_hat(inst, fam, n) == pytest.approx(0.0, abs=1e-14)

    def test_denoising_uncovered(self):
        inst, fam = make_denoising(3, [1.0, 0.0, 2.0])
        assert gamma_hat(inst, fam, 1) == pytest.approx(2.0)

    def test_full_level(self, rate_fixture):
        inst, fam = rate_fixture
        assert gamma_hat(inst, fam, fam.n_max) <= 1e-8

    def test_needs_exact_data(self):
        inst = ProblemInstance(astar=np.eye(2), f_delta=np.ones(2))
        from least_error.model import DiscretizationFamily
        with pytest.raises(MissingExactData):
            gamma_hat(inst, DiscretizationFamily.canonical(2), 1)
