"""Lagrange elements of degree 1 and 2: spaces, assembly, solves, transfer.

All problem data is constant per subdomain region, so every integrand is
elementwise polynomial and the default quadrature (exact for degree 2p) is
exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .mesh import DIRICHLET, Mesh
from .quadrature import triangle_rule

SOLVE_TOL = 1e-10

_REF_GRADS_P1 = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

# Constant reference Hessians of the quadratic basis (vertex 0..2, then the
# edge bubbles on (v0,v1), (v1,v2), (v2,v0)).
_REF_HESS_P2 = np.array([
    [[4.0, 4.0], [4.0, 4.0]],
    [[4.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 4.0]],
    [[-8.0, -4.0], [-4.0, 0.0]],
    [[0.0, 4.0], [4.0, 0.0]],
    [[0.0, -4.0], [-4.0, -8.0]],
])


class DataError(ValueError):
    """Problem data inconsistent with the mesh or not elliptic."""


@dataclass(frozen=True)
class Goal:
    """Linear functional v -> integral of (weight * v + flux . grad v)."""

    weight: float | Mapping[int, float] = 0.0
    flux: Sequence[float] | Mapping[int, Sequence[float]] = (0.0, 0.0)


@dataclass(frozen=True)
class ProblemData:
    """Per-region constant coefficients of the PDE and its goal functionals.

    Mappings are keyed by subdomain region id; regions not listed get zero
    loads. The diffusion matrix must be defined on every region.
    """

    diffusion: float | Sequence | Mapping[int, object] = 1.0
    load: float | Mapping[int, float] = 0.0
    load_flux: Sequence[float] | Mapping[int, Sequence[float]] = (0.0, 0.0)
    goals: tuple[Goal, ...] = ()

    @property
    def n_goals(self) -> int:
        return len(self.goals)


def _as_matrix(value) -> np.ndarray:
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        a = float(a) * np.eye(2)
    if a.shape != (2, 2):
        raise DataError(f"diffusion entries must be scalars or 2x2 matrices, got shape {a.shape}")
    if abs(a[0, 1] - a[1, 0]) > 1e-12 * max(1.0, np.abs(a).max()):
        raise DataError("diffusion matrix must be symmetric")
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if not (tr > 0.0 and det > 0.0):
        raise DataError("diffusion matrix must be positive definite")
    return a


def _matrix_by_element(spec, regions: np.ndarray) -> np.ndarray:
    present = np.unique(regions)
    if isinstance(spec, Mapping):
        missing = [int(r) for r in present if r not in spec]
        if missing:
            raise DataError(f"diffusion not defined on regions {missing}")
        table = np.zeros((int(present.max()) + 1, 2, 2))
        for r in present:
            table[r] = _as_matrix(spec[int(r)])
        return table[regions]
    return np.broadcast_to(_as_matrix(spec), (len(regions), 2, 2)).copy()


def _scalar_by_element(spec, regions: np.ndarray) -> np.ndarray:
    if isinstance(spec, Mapping):
        top = max(int(max(spec, default=0)), int(regions.max(initial=0)))
        table = np.zeros(top + 1)
        for r, v in spec.items():
            table[int(r)] = float(v)
        return table[regions]
    return np.full(len(regions), float(spec))


def _vector_by_element(spec, regions: np.ndarray) -> np.ndarray:
    if isinstance(spec, Mapping):
        top = max(int(max(spec, default=0)), int(regions.max(initial=0)))
        table = np.zeros((top + 1, 2))
        for r, v in spec.items():
            table[int(r)] = np.asarray(v, dtype=float).reshape(2)
        return table[regions]
    return np.broadcast_to(np.asarray(spec, dtype=float).reshape(2), (len(regions), 2)).copy()


@dataclass(eq=False)
class ElementCoefficients:
    diffusion: np.ndarray          # (nt, 2, 2)
    load: np.ndarray               # (nt,)
    load_flux: np.ndarray          # (nt, 2)
    goal_weights: list[np.ndarray]
    goal_fluxes: list[np.ndarray]

    def rhs_pair(self, goal: int | None):
        if goal is None:
            return self.load, self.load_flux
        return self.goal_weights[goal], self.goal_fluxes[goal]


def element_coefficients(mesh: Mesh, data: ProblemData) -> ElementCoefficients:
    regions = mesh.element_region
    specs = [data.load, data.load_flux, data.diffusion]
    for g in data.goals:
        specs += [g.weight, g.flux]
    for spec in specs:
        if isinstance(spec, Mapping):
            missing = [int(r) for r in spec if r not in regions]
            if missing:
                raise DataError(f"data references regions {missing} absent from the mesh")
    return ElementCoefficients(
        diffusion=_matrix_by_element(data.diffusion, regions),
        load=_scalar_by_element(data.load, regions),
        load_flux=_vector_by_element(data.load_flux, regions),
        goal_weights=[_scalar_by_element(g.weight, regions) for g in data.goals],
        goal_fluxes=[_vector_by_element(g.flux, regions) for g in data.goals],
    )


def shape_values(degree: int, bary: np.ndarray) -> np.ndarray:
    """Basis values at barycentric points, (nq, n_local)."""
    l0, l1, l2 = bary[:, 0], bary[:, 1], bary[:, 2]
    if degree == 1:
        return np.stack([l0, l1, l2], axis=1)
    return np.stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ], axis=1)


def shape_ref_grads(degree: int, bary: np.ndarray) -> np.ndarray:
    """Reference gradients at barycentric points, (nq, n_local, 2)."""
    nq = bary.shape[0]
    if degree == 1:
        return np.broadcast_to(_REF_GRADS_P1, (nq, 3, 2)).copy()
    d = _REF_GRADS_P1
    l = bary
    grads = np.empty((nq, 6, 2))
    for i in range(3):
        grads[:, i] = (4 * l[:, i, None] - 1) * d[i]
    for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
        grads[:, 3 + k] = 4 * (l[:, i, None] * d[j] + l[:, j, None] * d[i])
    return grads


def n_local_dofs(degree: int) -> int:
    return 3 if degree == 1 else 6


@dataclass(eq=False)
class FeSpace:
    mesh: Mesh
    degree: int
    element_dofs: np.ndarray  # (nt, n_local)
    n_dofs: int
    dirichlet: np.ndarray     # (n_dofs,) bool
    dof_points: np.ndarray    # (n_dofs, 2)

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet)

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(~self.dirichlet))


def build_space(mesh: Mesh, degree: int) -> FeSpace:
    """Lagrange space of degree 1 or 2 with Dirichlet constraints."""
    if degree not in (1, 2):
        raise ValueError(f"unsupported polynomial degree {degree}; use 1 or 2")
    nv = mesh.n_vertices
    dirichlet_edges = mesh.boundary_labels == DIRICHLET
    dirichlet_vertices = np.unique(mesh.boundary_edges[dirichlet_edges])
    if degree == 1:
        element_dofs = mesh.elements.copy()
        n_dofs = nv
        dirichlet = np.zeros(n_dofs, dtype=bool)
        dirichlet[dirichlet_vertices] = True
        dof_points = mesh.vertices.copy()
    else:
        element_dofs = np.hstack([mesh.elements, nv + mesh.element_edges])
        n_dofs = nv + mesh.edges.shape[0]
        dirichlet = np.zeros(n_dofs, dtype=bool)
        dirichlet[dirichlet_vertices] = True
        dirichlet[nv + np.flatnonzero(mesh.edge_labels == DIRICHLET)] = True
        midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
        dof_points = np.vstack([mesh.vertices, midpoints])
    return FeSpace(mesh, degree, element_dofs, n_dofs, dirichlet, dof_points)


@dataclass(eq=False)
class FeSolution:
    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_dofs,):
            raise ValueError(f"coefficient vector has shape {self.coeffs.shape}, "
                             f"expected ({self.space.n_dofs},)")
        if np.any(self.coeffs[self.space.dirichlet] != 0.0):
            raise ValueError("Dirichlet coefficients must be exactly zero")


def zero_solution(space: FeSpace) -> FeSolution:
    return FeSolution(space, np.zeros(space.n_dofs))


def assemble_stiffness(space: FeSpace, diffusion: np.ndarray,
                       quad_degree: int | None = None) -> sp.csr_matrix:
    """Sparse matrix of (v, w) -> integral (A grad v) . grad w."""
    degree = space.degree
    quad_degree = 2 * degree if quad_degree is None else quad_degree
    bary, weights = triangle_rule(quad_degree)
    det, inv_t = space.mesh.jacobians
    nl = n_local_dofs(degree)
    nt = space.mesh.n_elements
    local = np.zeros((nt, nl, nl))
    ref_grads = shape_ref_grads(degree, bary)
    for q, wq in enumerate(weights):
        grad = inv_t @ ref_grads[q].T          # (nt, 2, nl)
        flux = diffusion @ grad                # (nt, 2, nl)
        local += wq * (grad.transpose(0, 2, 1) @ flux)
    local *= (0.5 * det)[:, None, None]
    rows = np.repeat(space.element_dofs, nl, axis=1).ravel()
    cols = np.tile(space.element_dofs, (1, nl)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)),
                        shape=(space.n_dofs, space.n_dofs))
    return mat.tocsr()


def assemble_load(space: FeSpace, scalar: np.ndarray, flux: np.ndarray,
                  quad_degree: int | None = None) -> np.ndarray:
    """Load vector of v -> integral (scalar * v + flux . grad v)."""
    degree = space.degree
    quad_degree = 2 * degree if quad_degree is None else quad_degree
    bary, weights = triangle_rule(quad_degree)
    det, inv_t = space.mesh.jacobians
    nl = n_local_dofs(degree)
    nt = space.mesh.n_elements
    local = np.zeros((nt, nl))
    vals = shape_values(degree, bary)
    ref_grads = shape_ref_grads(degree, bary)
    for q, wq in enumerate(weights):
        grad = inv_t @ ref_grads[q].T                    # (nt, 2, nl)
        local += wq * (np.outer(scalar, vals[q]) + (flux[:, None, :] @ grad)[:, 0, :])
    local *= (0.5 * det)[:, None]
    return np.bincount(space.element_dofs.ravel(), weights=local.ravel(),
                       minlength=space.n_dofs)


class GalerkinSolver:
    """Assembles and factors the stiffness matrix once per space.

    The bilinear form is symmetric, so the same factorization serves the
    primal problem and every dual problem on the level.
    """

    def __init__(self, space: FeSpace, data: ProblemData,
                 quad_degree: int | None = None):
        self.space = space
        self.data = data
        self.coefficients = element_coefficients(space.mesh, data)
        self.quad_degree = 2 * space.degree if quad_degree is None else quad_degree
        self.matrix = assemble_stiffness(space, self.coefficients.diffusion, self.quad_degree)
        self._check_spd()
        free = space.free
        self._k_free = self.matrix[free][:, free].tocsc()
        self._lu = splu(self._k_free) if free.size else None
        self.n_solves = 0

    def _check_spd(self):
        asym = abs(self.matrix - self.matrix.T)
        scale = abs(self.matrix).max() or 1.0
        if asym.count_nonzero() and asym.max() > 1e-12 * scale:
            raise DataError("assembled matrix is not symmetric; check the diffusion data")
        diag = self.matrix.diagonal()[self.space.free]
        if np.any(diag <= 0.0):
            raise DataError("assembled matrix has non-positive diagonal; "
                            "the problem data is not elliptic on this mesh")

    def solve(self, rhs: np.ndarray) -> FeSolution:
        free = self.space.free
        x = np.zeros(self.space.n_dofs)
        if free.size:
            b = rhs[free]
            xf = self._lu.solve(b)
            residual = self._k_free @ xf - b
            scale = float(np.linalg.norm(b))
            if np.abs(residual).max(initial=0.0) > SOLVE_TOL * max(scale, 1e-300):
                raise ArithmeticError(
                    f"linear solve residual {np.abs(residual).max():.3e} exceeds "
                    f"{SOLVE_TOL:.1e} * |rhs|; matrix may be singular")
            x[free] = xf
        self.n_solves += 1
        return FeSolution(self.space, x)

    def solve_primal(self) -> FeSolution:
        scalar, flux = self.coefficients.rhs_pair(None)
        return self.solve(assemble_load(self.space, scalar, flux, self.quad_degree))

    def solve_dual(self, goal: int) -> FeSolution:
        scalar, flux = self.coefficients.rhs_pair(goal)
        return self.solve(assemble_load(self.space, scalar, flux, self.quad_degree))


def solve_galerkin(space: FeSpace, data: ProblemData, which="primal") -> FeSolution:
    """One-shot solve; which is "primal" or a goal index."""
    solver = GalerkinSolver(space, data)
    if which == "primal":
        return solver.solve_primal()
    return solver.solve_dual(int(which))


def evaluate_functionals(space: FeSpace, coefficients: ElementCoefficients,
                         v: FeSolution, goals: Sequence[int | None],
                         quad_degree: int | None = None) -> list[float]:
    """Evaluate several linear functionals of v in one sweep.

    Entries of goals are goal indices or None for the load functional.
    """
    if v.space is not space:
        raise ValueError("solution does not belong to the given space")
    degree = space.degree
    quad_degree = 2 * degree if quad_degree is None else quad_degree
    bary, weights = triangle_rule(quad_degree)
    det, inv_t = space.mesh.jacobians
    local = v.coeffs[space.element_dofs]
    vals = shape_values(degree, bary)
    ref_grads = shape_ref_grads(degree, bary)
    nt = space.mesh.n_elements
    acc_val = np.zeros(nt)
    acc_grad = np.zeros((nt, 2))
    for q, wq in enumerate(weights):
        acc_val += wq * (local @ vals[q])
        grad = inv_t @ ref_grads[q].T
        acc_grad += wq * (grad @ local[:, :, None])[:, :, 0]
    area = 0.5 * det
    out = []
    for g in goals:
        scalar, flux = coefficients.rhs_pair(g)
        out.append(float(np.sum(area * (scalar * acc_val + (flux * acc_grad).sum(axis=1)))))
    return out


def evaluate_functional(space: FeSpace, data: ProblemData, v: FeSolution,
                        goal: int | None = None,
                        quad_degree: int | None = None) -> float:
    """Evaluate F(v) (goal=None) or the goal functional G_goal(v) by quadrature."""
    coefficients = element_coefficients(space.mesh, data)
    return evaluate_functionals(space, coefficients, v, [goal], quad_degree)[0]


def energy_inner(space: FeSpace, data: ProblemData, v: FeSolution, w: FeSolution,
                 quad_degree: int | None = None) -> float:
    """a(v, w) = integral (A grad v) . grad w, by direct quadrature."""
    if v.space is not space or w.space is not space:
        raise ValueError("solutions do not belong to the given space")
    diffusion = _matrix_by_element(data.diffusion, space.mesh.element_region)
    degree = space.degree
    quad_degree = 2 * degree if quad_degree is None else quad_degree
    bary, weights = triangle_rule(quad_degree)
    det, inv_t = space.mesh.jacobians
    local_v = v.coeffs[space.element_dofs]
    local_w = w.coeffs[space.element_dofs]
    ref_grads = shape_ref_grads(degree, bary)
    acc = np.zeros(space.mesh.n_elements)
    for q, wq in enumerate(weights):
        grad = inv_t @ ref_grads[q].T
        gv = (grad @ local_v[:, :, None])[:, :, 0]
        gw = (grad @ local_w[:, :, None])[:, :, 0]
        agv = (diffusion @ gv[:, :, None])[:, :, 0]
        acc += wq * (agv * gw).sum(axis=1)
    return float(np.sum(acc * 0.5 * det))


def energy_norm(space: FeSpace, data: ProblemData, v: FeSolution) -> float:
    return float(np.sqrt(max(energy_inner(space, data, v, v), 0.0)))


def gradients_at(space: FeSpace, v: FeSolution, bary: np.ndarray) -> np.ndarray:
    """Gradients of v at the given barycentric points, (nq, nt, 2)."""
    _, inv_t = space.mesh.jacobians
    local = v.coeffs[space.element_dofs]
    ref_grads = shape_ref_grads(space.degree, bary)
    out = np.empty((bary.shape[0], space.mesh.n_elements, 2))
    for q in range(bary.shape[0]):
        grad = inv_t @ ref_grads[q].T
        out[q] = (grad @ local[:, :, None])[:, :, 0]
    return out


def prolongation_matrix(coarse: FeSpace, fine: FeSpace, parent: np.ndarray) -> sp.csr_matrix:
    """Sparse transfer of coefficients onto a refined mesh's space.

    Unrefined elements transfer by an exact identity block so that the
    coefficients there are bitwise copies of the coarse ones.
    """
    if coarse.degree != fine.degree:
        raise ValueError("spaces have different degrees and cannot be nested")
    parent = np.asarray(parent, dtype=np.int64)
    if parent.shape != (fine.mesh.n_elements,) or parent.min(initial=0) < 0 \
            or (parent.size and parent.max() >= coarse.mesh.n_elements):
        raise ValueError("parent map does not connect the fine mesh to the coarse mesh")
    nl = n_local_dofs(coarse.degree)
    child_count = np.bincount(parent, minlength=coarse.mesh.n_elements)
    kept = child_count[parent] == 1

    occ_rows = []
    occ_cols = []
    occ_vals = []
    kept_idx = np.flatnonzero(kept)
    if kept_idx.size:
        fr = fine.element_dofs[kept_idx]
        cr = coarse.element_dofs[parent[kept_idx]]
        eye = np.eye(nl)
        for i in range(nl):
            occ_rows.append(fr[:, i])
            occ_cols.append(cr)
            occ_vals.append(np.broadcast_to(eye[i], (kept_idx.size, nl)))
    refined_idx = np.flatnonzero(~kept)
    if refined_idx.size:
        pv = coarse.mesh.vertices[coarse.mesh.elements[parent[refined_idx]]]
        d1 = pv[:, 1] - pv[:, 0]
        d2 = pv[:, 2] - pv[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        nodes = fine.dof_points[fine.element_dofs[refined_idx]]  # (k, nl, 2)
        rel = nodes - pv[:, None, 0]
        lam1 = (rel[:, :, 0] * d2[:, None, 1] - rel[:, :, 1] * d2[:, None, 0]) / det[:, None]
        lam2 = (d1[:, None, 0] * rel[:, :, 1] - d1[:, None, 1] * rel[:, :, 0]) / det[:, None]
        bary = np.stack([1.0 - lam1 - lam2, lam1, lam2], axis=2)
        weights = shape_values(coarse.degree, bary.reshape(-1, 3)).reshape(
            refined_idx.size, nl, nl)
        cr = coarse.element_dofs[parent[refined_idx]]
        fr = fine.element_dofs[refined_idx]
        for i in range(nl):
            occ_rows.append(fr[:, i])
            occ_cols.append(cr)
            occ_vals.append(weights[:, i, :])

    rows = np.concatenate(occ_rows)
    cols = np.vstack(occ_cols)
    vals = np.vstack(occ_vals)
    _, first = np.unique(rows, return_index=True)
    rows = np.repeat(rows[first], nl)
    cols = cols[first].ravel()
    vals = vals[first].ravel()
    nonzero = vals != 0.0
    mat = sp.coo_matrix((vals[nonzero], (rows[nonzero], cols[nonzero])),
                        shape=(fine.n_dofs, coarse.n_dofs))
    return mat.tocsr()


def prolongate(v: FeSolution, fine_space: FeSpace, parent: np.ndarray) -> FeSolution:
    """Represent a coarse solution exactly in the refined space."""
    transfer = prolongation_matrix(v.space, fine_space, parent)
    coeffs = transfer @ v.coeffs
    coeffs[fine_space.dirichlet] = 0.0
    return FeSolution(fine_space, coeffs)


def write_solution(v: FeSolution, path) -> None:
    """Mesh dump plus a VALUES section with one coefficient per line."""
    from .mesh import write_mesh
    from pathlib import Path
    write_mesh(v.space.mesh, path)
    with Path(path).open("a", encoding="utf-8") as handle:
        handle.write("VALUES\n")
        handle.writelines(f"{repr(float(c))}\n" for c in v.coeffs)
