import numpy as np
import pytest

from mgafem import (FeSolution, GalerkinSolver, Goal, ProblemData, Subdomain,
                    build_space, energy_inner, energy_norm, evaluate_functional,
                    make_initial_mesh, prolongate, prolongation_matrix,
                    refine_nvb, solve_galerkin, uniform_refine)
from mgafem.fem import (DataError, assemble_load, assemble_stiffness,
                        element_coefficients, write_solution, zero_solution)

from conftest import random_solution


def nested_problem():
    mesh = make_initial_mesh({"kind": "unit_square", "n0": 2},
                             [Subdomain(1, rect=(0.0, 0.0, 0.5, 0.5)),
                              Subdomain(2, rect=(0.5, 0.5, 1.0, 1.0))])
    data = ProblemData(diffusion=1.0, load=0.0, load_flux={1: (-1.0, 0.0)},
                       goals=(Goal(flux={2: (1.0, 0.0)}), Goal(weight={1: 1.0})))
    return mesh, data


class TestBuildSpace:
    def test_diag_square_p1_all_dirichlet(self):
        space = build_space(make_initial_mesh("unit_square_diagonal"), 1)
        assert space.n_free == 0

    def test_crisscross_p1_one_free_dof(self):
        space = build_space(make_initial_mesh({"kind": "unit_square", "n0": 1}), 1)
        assert space.n_free == 1

    def test_diag_square_p2_one_free_dof(self):
        space = build_space(make_initial_mesh("unit_square_diagonal"), 2)
        assert space.n_dofs == 9
        assert space.n_free == 1
        free_point = space.dof_points[space.free[0]]
        assert np.allclose(free_point, [0.5, 0.5])

    def test_unsupported_degree(self):
        mesh = make_initial_mesh("unit_square_diagonal")
        with pytest.raises(ValueError, match="degree"):
            build_space(mesh, 3)

    def test_mixed_bc_constraints(self):
        mesh = make_initial_mesh({"kind": "z_shape", "cells_per_unit": 2})
        space = build_space(mesh, 2)
        # constrained dofs are exactly those whose point lies on the two
        # Dirichlet segments
        pts = space.dof_points[space.dirichlet]
        on_flat = np.isclose(pts[:, 1], 0.0) & (pts[:, 0] <= 1e-12)
        on_diag = np.isclose(pts[:, 0], pts[:, 1]) & (pts[:, 0] <= 1e-12)
        assert np.all(on_flat | on_diag)
        assert 0 < space.n_free < space.n_dofs


class TestSolve:
    def test_zero_data_gives_zero(self):
        mesh = make_initial_mesh({"kind": "unit_square", "n0": 2})
        space = build_space(mesh, 1)
        u = solve_galerkin(space, ProblemData())
        assert np.all(u.coeffs == 0.0)

    def test_crisscross_center_value(self):
        space = build_space(make_initial_mesh({"kind": "unit_square", "n0": 1}), 1)
        u = solve_galerkin(space, ProblemData(diffusion=1.0, load=1.0))
        center = space.free[0]
        assert u.coeffs[center] == pytest.approx(1.0 / 12.0, abs=1e-12)

    def test_matrix_symmetric_positive_diagonal(self):
        mesh, data = nested_problem()
        solver = GalerkinSolver(build_space(mesh, 2), data)
        asym = abs(solver.matrix - solver.matrix.T)
        worst = asym.max() if asym.count_nonzero() else 0.0
        assert worst <= 1e-14
        assert np.all(solver.matrix.diagonal()[solver.space.free] > 0)

    def test_non_spd_data_rejected(self):
        with pytest.raises(DataError, match="positive definite"):
            element_coefficients(make_initial_mesh("unit_square_diagonal"),
                                 ProblemData(diffusion=-1.0))

    def test_asymmetric_diffusion_rejected(self):
        mesh = make_initial_mesh("unit_square_diagonal")
        with pytest.raises(DataError, match="symmetric"):
            element_coefficients(mesh, ProblemData(diffusion=[[1.0, 0.5], [0.0, 1.0]]))

    def test_solver_determinism_bitwise(self):
        mesh, data = nested_problem()
        space = build_space(mesh, 2)
        u1 = GalerkinSolver(space, data).solve_primal()
        u2 = GalerkinSolver(space, data).solve_primal()
        assert u1.coeffs.tobytes() == u2.coeffs.tobytes()

    def test_factorization_reused_for_duals(self):
        mesh, data = nested_problem()
        solver = GalerkinSolver(build_space(mesh, 1), data)
        lu_before = solver._lu
        solver.solve_primal()
        solver.solve_dual(0)
        solver.solve_dual(1)
        assert solver._lu is lu_before
        assert solver.n_solves == 3


class TestFunctionals:
    def test_zero_solution_gives_zero(self):
        mesh, data = nested_problem()
        space = build_space(mesh, 1)
        assert evaluate_functional(space, data, zero_solution(space), goal=0) == 0.0

    def test_linearity(self):
        mesh, data = nested_problem()
        space = build_space(mesh, 2)
        rng = np.random.default_rng(11)
        v = random_solution(space, rng)
        w = random_solution(space, rng)
        alpha, beta = 0.7, -2.3
        combo = FeSolution(space, alpha * v.coeffs + beta * w.coeffs)
        for goal in (None, 0, 1):
            lhs = evaluate_functional(space, data, combo, goal=goal)
            rhs = (alpha * evaluate_functional(space, data, v, goal=goal)
                   + beta * evaluate_functional(space, data, w, goal=goal))
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("degree", [1, 2])
    def test_duality_identity(self, degree):
        # G_j(u) and F(z_j) both equal a(u, z_j)
        mesh, data = nested_problem()
        mesh, _ = uniform_refine(mesh)
        space = build_space(mesh, degree)
        solver = GalerkinSolver(space, data)
        u = solver.solve_primal()
        for j in range(2):
            z = solver.solve_dual(j)
            gu = evaluate_functional(space, data, u, goal=j)
            fz = evaluate_functional(space, data, z)
            assert gu == pytest.approx(fz, rel=1e-9)
            assert gu == pytest.approx(energy_inner(space, data, u, z), rel=1e-9)


class TestEnergyInner:
    def test_symmetry_and_positivity(self):
        mesh, data = nested_problem()
        space = build_space(mesh, 2)
        rng = np.random.default_rng(5)
        v = random_solution(space, rng)
        w = random_solution(space, rng)
        avw = energy_inner(space, data, v, w)
        awv = energy_inner(space, data, w, v)
        assert avw == pytest.approx(awv, rel=1e-12)
        assert energy_inner(space, data, v, v) > 0.0
        assert energy_inner(space, data, zero_solution(space),
                            zero_solution(space)) == 0.0

    def test_center_hat_energy(self):
        space = build_space(make_initial_mesh({"kind": "unit_square", "n0": 1}), 1)
        coeffs = np.zeros(space.n_dofs)
        coeffs[space.free[0]] = 1.0
        phi = FeSolution(space, coeffs)
        data = ProblemData(diffusion=1.0)
        assert energy_inner(space, data, phi, phi) == pytest.approx(4.0, abs=1e-12)
        assert evaluate_functional(space, ProblemData(load=1.0), phi) == \
            pytest.approx(1.0 / 3.0, abs=1e-14)


class TestQuadratureExactness:
    @pytest.mark.parametrize("degree", [1, 2])
    def test_doubling_changes_nothing(self, degree):
        mesh, data = nested_problem()
        space = build_space(mesh, degree)
        coeffs = element_coefficients(mesh, data)
        k1 = assemble_stiffness(space, coeffs.diffusion, quad_degree=2 * degree)
        k2 = assemble_stiffness(space, coeffs.diffusion, quad_degree=4 * degree)
        scale = abs(k1).max()
        assert abs(k1 - k2).max() <= 1e-13 * scale
        b1 = assemble_load(space, coeffs.load, coeffs.load_flux, quad_degree=2 * degree)
        b2 = assemble_load(space, coeffs.load, coeffs.load_flux, quad_degree=4 * degree)
        bscale = max(np.abs(b1).max(), 1e-300)
        assert np.abs(b1 - b2).max() <= 1e-13 * bscale


class TestProlongation:
    def test_zero_to_zero(self):
        mesh, data = nested_problem()
        space = build_space(mesh, 1)
        fine_mesh, parent = uniform_refine(mesh)
        fine = build_space(fine_mesh, 1)
        pu = prolongate(zero_solution(space), fine, parent)
        assert np.all(pu.coeffs == 0.0)

    @pytest.mark.parametrize("degree", [1, 2])
    def test_energy_preserved(self, degree):
        mesh, data = nested_problem()
        space = build_space(mesh, degree)
        rng = np.random.default_rng(17)
        v = random_solution(space, rng)
        fine_mesh, parent = refine_nvb(mesh, np.arange(0, mesh.n_elements, 2))
        fine = build_space(fine_mesh, degree)
        pv = prolongate(v, fine, parent)
        ec = energy_inner(space, data, v, v)
        ef = energy_inner(fine, data, pv, pv)
        assert ef == pytest.approx(ec, rel=1e-12)

    def test_unrefined_coefficients_copied_bitwise(self):
        mesh, data = nested_problem()
        space = build_space(mesh, 2)
        rng = np.random.default_rng(23)
        v = random_solution(space, rng)
        fine_mesh, parent = refine_nvb(mesh, [0])
        fine = build_space(fine_mesh, 2)
        pv = prolongate(v, fine, parent)
        counts = np.bincount(parent, minlength=mesh.n_elements)
        for t in np.flatnonzero(counts[parent] == 1):
            src = space.element_dofs[parent[t]]
            dst = fine.element_dofs[t]
            assert np.array_equal(pv.coeffs[dst], v.coeffs[src])

    @pytest.mark.parametrize("degree", [1, 2])
    def test_galerkin_orthogonality(self, degree):
        mesh, data = nested_problem()
        space = build_space(mesh, degree)
        solver = GalerkinSolver(space, data)
        u_c = solver.solve_primal()
        fine_mesh, parent = refine_nvb(mesh, np.arange(0, mesh.n_elements, 3))
        fine = build_space(fine_mesh, degree)
        solver_f = GalerkinSolver(fine, data)
        u_f = solver_f.solve_primal()
        pu = prolongate(u_c, fine, parent)
        transfer = prolongation_matrix(space, fine, parent)
        residual = transfer.T @ (solver_f.matrix @ (u_f.coeffs - pu.coeffs))
        err = FeSolution(fine, u_f.coeffs - pu.coeffs)
        scale_err = energy_norm(fine, data, err)
        basis_norms = np.sqrt(np.maximum(
            np.asarray((transfer.multiply(solver_f.matrix @ transfer)).sum(axis=1)).ravel(),
            1e-300))
        rel = np.abs(residual[space.free]) / (scale_err * basis_norms[space.free])
        assert rel.max() <= 1e-9

    def test_pythagoras_identity(self):
        mesh, data = nested_problem()
        meshes = [mesh]
        parents = []
        rng = np.random.default_rng(31)
        for _ in range(2):
            marked = rng.choice(meshes[-1].n_elements,
                                size=meshes[-1].n_elements // 3, replace=False)
            m, p = refine_nvb(meshes[-1], marked)
            meshes.append(m)
            parents.append(p)
        ref_mesh, p_ref = uniform_refine(meshes[-1])
        meshes.append(ref_mesh)
        parents.append(p_ref)
        spaces = [build_space(m, 2) for m in meshes]
        solutions = [GalerkinSolver(s, data).solve_primal() for s in spaces]
        # prolong everything to the reference space
        lifted = []
        for i, u in enumerate(solutions):
            v = u
            for lvl in range(i, len(meshes) - 1):
                v = prolongate(v, spaces[lvl + 1], parents[lvl])
            lifted.append(v)
        ref = spaces[-1]

        def err2(a, b):
            d = FeSolution(ref, a.coeffs - b.coeffs)
            return energy_inner(ref, data, d, d)

        u_ref = lifted[-1]
        lhs = err2(u_ref, lifted[0]) - err2(u_ref, lifted[1])
        rhs = err2(lifted[1], lifted[0])
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_degree_mismatch_rejected(self):
        mesh, _ = nested_problem()
        fine_mesh, parent = uniform_refine(mesh)
        with pytest.raises(ValueError, match="degrees"):
            prolongation_matrix(build_space(mesh, 1), build_space(fine_mesh, 2), parent)

    def test_wrong_lineage_rejected(self):
        mesh, _ = nested_problem()
        fine_mesh, parent = uniform_refine(mesh)
        with pytest.raises(ValueError, match="parent map"):
            prolongation_matrix(build_space(mesh, 1), build_space(fine_mesh, 1),
                                parent[:-2])


def test_write_solution_dump(tmp_path):
    mesh, data = nested_problem()
    space = build_space(mesh, 1)
    u = solve_galerkin(space, data)
    out = tmp_path / "solution.txt"
    write_solution(u, out)
    lines = out.read_text().splitlines()
    i_values = lines.index("VALUES")
    assert lines[0] == "VERTICES"
    values = [float(x) for x in lines[i_values + 1:]]
    assert values == u.coeffs.tolist()
