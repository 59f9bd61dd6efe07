import math

import numpy as np
import pytest

from mgafem import (AdaptiveConfig, FeSolution, GalerkinSolver, History,
                    LevelRecord, ParameterError, build_space, energy_inner,
                    evaluate_functional, make_initial_mesh, prolongate,
                    rate_fit, run, tail_ratio, uniform_refine, validate_params)
from mgafem.driver import MODE_AFEM_ONLY, select_window

from conftest import square_config, square_problem


class TestValidateParams:
    def test_q_est_value(self):
        q_est, _ = validate_params(square_config(theta=0.5))
        assert q_est == pytest.approx(0.923880, abs=1e-6)

    def test_paper_style_parameters_warn_but_pass(self):
        q_est, warnings = validate_params(square_config(theta=0.5, n_goals=3,
                                                        rho_irr=0.25))
        threshold = (1.0 - q_est) / 2.0
        assert threshold == pytest.approx(0.038060, abs=1e-6)
        assert any("threshold" in w for w in warnings)

    def test_rho_out_of_range_rejected(self):
        with pytest.raises(ParameterError, match="rho_irr"):
            validate_params(square_config(n_goals=3, rho_irr=0.6))

    @pytest.mark.parametrize("theta", [0.0, -1.0, 1.01])
    def test_bad_theta_rejected(self, theta):
        with pytest.raises(ParameterError, match="theta"):
            validate_params(square_config(theta=theta))

    def test_bad_c_mark_rejected(self):
        with pytest.raises(ParameterError, match="c_mark"):
            validate_params(square_config(c_mark=0.9))

    def test_missing_stop_rejected(self):
        with pytest.raises(ParameterError, match="stopping"):
            validate_params(square_config(max_ndof=None))

    def test_single_goal_rho_unconstrained(self):
        q_est, _ = validate_params(square_config(n_goals=1, rho_irr=123.0))
        assert 0 < q_est < 1


class TestRunBasics:
    def test_max_levels_one(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=None, max_levels=1),
                   square_data, square_mesh0)
        assert len(hist.records) == 1
        assert hist.records[0].marking == "initial"

    def test_two_solve_budget(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=1200), square_data, square_mesh0)
        assert len(hist.records) > 5
        for r in hist.records[1:]:
            assert r.solves_primal == 1
            assert r.solves_dual == 1
        assert hist.monitor_solves == 0

    def test_goal_cycling(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=800), square_data, square_mesh0)
        for r in hist.records:
            assert r.active_goal == (r.level % 3) + 1

    def test_staircase_exact(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=1500), square_data, square_mesh0)
        for i in (1, 2, 3):
            last = None
            for r in hist.records:
                if r.active_goal == i:
                    last = r.zeta[i - 1]
                elif last is not None:
                    assert r.zeta[i - 1] == last

    def test_delta_product_identity(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=1000), square_data, square_mesh0)
        for r in hist.records:
            assert r.delta == pytest.approx(r.eta * sum(r.zeta), rel=1e-13)

    def test_single_goal_never_irregular(self, square_mesh0):
        data = square_problem()
        single = type(data)(diffusion=data.diffusion, load=data.load,
                            load_flux=data.load_flux, goals=data.goals[:1])
        hist = run(square_config(n_goals=1, max_ndof=1200), single, square_mesh0)
        assert all(r.marking in ("initial", "regular") for r in hist.records)

    def test_mesh_lineage_kept(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=600), square_data, square_mesh0,
                   keep_lineage=True)
        assert len(hist.meshes) == len(hist.records)
        assert len(hist.parent_maps) == len(hist.records) - 1
        assert hist.final_mesh is hist.meshes[-1]

    def test_unknown_mode_rejected(self, square_mesh0, square_data):
        with pytest.raises(ParameterError, match="mode"):
            run(square_config(), square_data, square_mesh0, mode="classic")

    def test_n_goals_mismatch_rejected(self, square_mesh0, square_data):
        with pytest.raises(ParameterError, match="n_goals"):
            run(square_config(n_goals=4), square_data, square_mesh0)


@pytest.fixture(scope="module")
def zshape_setup():
    from mgafem import Goal, ProblemData, Subdomain
    subs = [Subdomain(1, rect=(-0.75, 0.25, -0.25, 0.75)),
            Subdomain(2, rect=(0.25, 0.25, 0.75, 0.75)),
            Subdomain(3, rect=(0.25, -0.75, 0.75, -0.25)),
            Subdomain(4, rect=(-0.25, -1.0, 0.25, -0.75))]
    mesh = make_initial_mesh({"kind": "z_shape", "cells_per_unit": 4}, subs)
    gdirs = {1: (1.0, 0.0), 2: (0.0, 100.0), 3: (-10.0, 0.0), 4: (1.0, 0.0)}
    goals = tuple(Goal(flux={i: gdirs[i]}) for i in (1, 2, 3, 4))
    data = ProblemData(diffusion=1.0, load=0.0, load_flux={1: (-10.0, 0.0)},
                       goals=goals)
    return mesh, data


class TestIrregularMarking:

    def base_config(self, **overrides):
        base = dict(theta=0.3, c_mark=2.0, rho_irr=0.1, n_goals=4, degree=2,
                    max_ndof=2500)
        base.update(overrides)
        return AdaptiveConfig(**base)

    def test_irregular_cap_holds_exactly(self, zshape_setup):
        mesh, data = zshape_setup
        hist = run(self.base_config(), data, mesh)
        kinds = [r.marking for r in hist.records]
        assert "irregular" in kinds
        for prev, r in zip(hist.records, hist.records[1:]):
            if r.marking == "irregular":
                assert r.n_mark <= prev.n_mark

    def test_empty_variant_keeps_mesh(self, zshape_setup):
        mesh, data = zshape_setup
        hist = run(self.base_config(irregular_variant="empty", max_ndof=None,
                                    max_levels=40), data, mesh,
                   keep_lineage=True)
        empties = [r for r in hist.records if r.marking == "irregular"]
        assert empties and all(r.n_mark == 0 for r in empties)
        for i, r in enumerate(hist.records[:-1]):
            if r.n_mark == 0:
                assert hist.meshes[i + 1] is hist.meshes[i]
                assert hist.records[i + 1].ndof == r.ndof

    def test_initial_sort(self, zshape_setup):
        mesh, data = zshape_setup
        hist = run(self.base_config(initial_sort=True, max_ndof=1500), data, mesh)
        z0 = hist.records[0].zeta
        assert all(z0[i] >= z0[i + 1] for i in range(len(z0) - 1))
        assert hist.records[0].solves_dual == 4
        assert sorted(hist.goal_order) == [0, 1, 2, 3]
        for r in hist.records[1:]:
            assert r.solves_dual == 1
        # the first level is regular by construction after sorting
        assert hist.records[0].marking == "initial"


class TestAblations:
    def test_afem_only_marks_primal_set(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=1200, degree=1), square_data,
                   square_mesh0, mode=MODE_AFEM_ONLY)
        for r in hist.records:
            assert r.solves_dual == 0
            assert r.n_mark == r.n_mark_u
            assert r.n_mark_z == 0 and r.n_mark_uz == 0
            assert r.active_goal == 0
        # goal estimators are still monitored for reporting
        assert hist.monitor_solves == 3 * len(hist.records)
        assert all(z > 0 for z in hist.records[-1].zeta)

    def test_restricted_cycle_monitors_last_goal(self, square_mesh0, square_data):
        cfg = square_config(n_goals=2, max_ndof=1200)
        hist = run(cfg, square_data, square_mesh0)
        assert all(r.active_goal in (1, 2) for r in hist.records)
        assert hist.monitor_solves == len(hist.records)
        # the monitored estimator changes every level (no staircase)
        zeta3 = [r.zeta[2] for r in hist.records]
        assert len(set(zeta3)) > len(zeta3) // 2


class TestRateFit:
    def synthetic_history(self, values, ndofs=None):
        records = []
        cum = 0
        for i, y in enumerate(values):
            n = ndofs[i] if ndofs else 10 * 2 ** i
            cum += n
            records.append(LevelRecord(
                level=i, active_goal=(i % 2) + 1, n_elements=2 * n, ndof=n,
                cumndof=cum, eta=y, zeta=(y, y), delta=y * y, marking="regular",
                n_mark_u=1, n_mark_z=1, n_mark_uz=1, n_mark=1,
                solves_primal=1, solves_dual=1, goal_values=(1.0 + y, 2.0)))
        return History(config=AdaptiveConfig(max_levels=1), mode="ngo",
                       records=records)

    def test_exact_power_law(self):
        ndofs = [10 * 2 ** i for i in range(8)]
        hist = self.synthetic_history([7.0 / n for n in ndofs], ndofs)
        assert rate_fit(hist, "eta", "decade", "ndof") == pytest.approx(-1.0, abs=1e-12)
        assert rate_fit(hist, "eta", "last:5", "ndof") == pytest.approx(-1.0, abs=1e-12)

    def test_constant_quantity(self):
        hist = self.synthetic_history([3.0] * 8)
        assert rate_fit(hist, "eta", "decade", "ndof") == pytest.approx(0.0, abs=1e-12)

    def test_zeta_uses_active_levels_only(self):
        ndofs = [10 * 2 ** i for i in range(8)]
        hist = self.synthetic_history([7.0 / n for n in ndofs], ndofs)
        # goal 1 is active on even levels only; slope still -1
        assert rate_fit(hist, "zeta_1", "last:3", "ndof") == pytest.approx(-1.0, abs=1e-9)

    def test_goal_error_slope(self):
        # final level hits the reference value exactly, so the errors of the
        # earlier levels are exactly 1/ndof
        ndofs = [10 * 2 ** i for i in range(9)]
        values = [1.0 / n for n in ndofs[:-1]] + [0.0]
        hist = self.synthetic_history(values, ndofs)
        slope = rate_fit(hist, "goal_error_1", "last:5", "ndof")
        assert slope == pytest.approx(-1.0, abs=1e-9)

    def test_window_too_small(self):
        hist = self.synthetic_history([1.0, 0.5])
        with pytest.raises(ValueError, match="window too small"):
            rate_fit(hist, "eta", "decade", "ndof")

    def test_unknown_quantity(self):
        hist = self.synthetic_history([1.0] * 4)
        with pytest.raises(ValueError, match="quantity"):
            rate_fit(hist, "sigma", "decade", "ndof")

    def test_select_window_specs(self):
        x = np.array([1.0, 10.0, 20.0, 90.0, 100.0])
        assert select_window(x, "decade").tolist() == [False, True, True, True, True]
        assert select_window(x, "last:2").tolist() == [False, False, False, True, True]
        assert select_window(x, (1, 3)).tolist() == [False, True, True, False, False]
        with pytest.raises(ValueError, match="window"):
            select_window(x, "recent")


class TestConvergenceMonitors:
    def test_tail_ratio_bounded(self, square_mesh0, square_data):
        hist = run(square_config(max_ndof=3000), square_data, square_mesh0)
        assert len(hist.records) >= 15
        ratios = tail_ratio(hist)
        assert np.all(np.isfinite(ratios[:-1]))
        # the tail constant must not grow monotonically over the last levels
        tail = ratios[-11:-1]
        assert not np.all(np.diff(tail) > 0)

    def test_goal_error_sandwich(self, square_mesh0, square_data):
        cfg = square_config(max_ndof=None, max_levels=4)
        hist = run(cfg, square_data, square_mesh0, keep_lineage=True)
        spaces = [build_space(m, 1) for m in hist.meshes]
        ref_spaces, ref_parents = [], []
        mesh = hist.final_mesh
        for _ in range(2):
            mesh, parent = uniform_refine(mesh)
            ref_spaces.append(build_space(mesh, 1))
            ref_parents.append(parent)
        ref_space = ref_spaces[-1]
        ref_solver = GalerkinSolver(ref_space, square_data)
        u_ref = ref_solver.solve_primal()

        def lift(sol, lvl):
            w = sol
            for k in range(lvl, len(hist.parent_maps)):
                w = prolongate(w, spaces[k + 1], hist.parent_maps[k])
            for space_next, parent in zip(ref_spaces, ref_parents):
                w = prolongate(w, space_next, parent)
            return w

        for lvl in range(len(spaces)):
            solver = GalerkinSolver(spaces[lvl], square_data)
            u = lift(solver.solve_primal(), lvl)
            err_u = FeSolution(ref_space, u_ref.coeffs - u.coeffs)
            norm_u = math.sqrt(energy_inner(ref_space, square_data, err_u, err_u))
            for j in range(3):
                z_ref = ref_solver.solve_dual(j)
                z = lift(solver.solve_dual(j), lvl)
                err_z = FeSolution(ref_space, z_ref.coeffs - z.coeffs)
                norm_z = math.sqrt(energy_inner(ref_space, square_data, err_z, err_z))
                lhs = abs(evaluate_functional(ref_space, square_data, u_ref, goal=j)
                          - evaluate_functional(ref_space, square_data, u, goal=j))
                assert lhs <= norm_u * norm_z * (1.0 + 1e-9) + 1e-15
