"""Residual error indicators for the primal and dual problems.

Per element T with local mesh size h_T = |T|^(1/2), the squared indicator is

    h_T^2 ||r + div(A grad v - q)||^2_{L2(T)}
    + h_T ||jump((A grad v - q) . n)||^2_{L2(boundary of T within the domain)}

with (r, q) the scalar/vector data of the primal problem or of one goal.
Each interior edge is integrated once; its squared jump is added to both
neighbours, weighted by each neighbour's own h_T. Edges on the Neumann
boundary contribute the full flux to their single neighbour (the Neumann
datum is zero); Dirichlet edges contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import NEUMANN
from .quadrature import edge_rule
from .fem import (ElementCoefficients, FeSolution, FeSpace, ProblemData,
                  _REF_HESS_P2, element_coefficients, shape_ref_grads)


@dataclass(eq=False)
class IndicatorField:
    """Squared per-element refinement indicators and their sum."""

    values: np.ndarray
    kind: str                # "primal" or "dual"
    goal: int | None = None
    level: int | None = None
    total: float = None  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if np.any(self.values < 0.0):
            raise ValueError("squared indicators must be nonnegative")
        self.total = float(np.sum(self.values))

    @property
    def estimator(self) -> float:
        """The estimator value, i.e. the square root of the squared total."""
        return float(np.sqrt(self.total))


def _divergence_of_flux(space: FeSpace, v: FeSolution, diffusion: np.ndarray) -> np.ndarray:
    """Elementwise-constant div(A grad v); zero for degree 1."""
    if space.degree == 1:
        return np.zeros(space.mesh.n_elements)
    _, inv_t = space.mesh.jacobians
    inv = inv_t.transpose(0, 2, 1)
    local = v.coeffs[space.element_dofs]
    # reference Hessian of v, then pushed forward: J^{-T} H_ref J^{-1}
    href = (local @ _REF_HESS_P2.reshape(6, 4)).reshape(-1, 2, 2)
    hess = inv_t @ href @ inv
    return (diffusion * hess).sum(axis=(1, 2))


def _edge_point_gradients(space: FeSpace, v: FeSolution, elems: np.ndarray,
                          va: np.ndarray, vb: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Gradients of v on the given elements at points (1-s) a + s b, (k, nq, 2)."""
    mesh = space.mesh
    tri = mesh.elements[elems]
    pos_a = (tri == va[:, None]).argmax(axis=1)
    pos_b = (tri == vb[:, None]).argmax(axis=1)
    k, nq = elems.size, s.size
    bary = np.zeros((k, nq, 3))
    rows = np.arange(k)
    for q in range(nq):
        bary[rows, q, pos_a] = 1.0 - s[q]
        bary[rows, q, pos_b] = s[q]
    nl = space.element_dofs.shape[1]
    ref = shape_ref_grads(space.degree, bary.reshape(-1, 3)).reshape(k, nq, nl, 2)
    local = v.coeffs[space.element_dofs[elems]]                     # (k, nl)
    gref = (local[:, None, None, :] @ ref)[:, :, 0, :]              # (k, nq, 2)
    _, inv_t = mesh.jacobians
    return (inv_t[elems] @ gref.transpose(0, 2, 1)).transpose(0, 2, 1)


def residual_indicators(space: FeSpace, v: FeSolution, data: ProblemData,
                        goal: int | None = None, include_neumann: bool = True,
                        level: int | None = None,
                        coefficients: ElementCoefficients | None = None) -> IndicatorField:
    """Squared residual indicators for the primal (goal=None) or a dual problem."""
    if v.space is not space:
        raise ValueError("solution does not belong to the given space")
    mesh = space.mesh
    coeffs = coefficients if coefficients is not None else element_coefficients(mesh, data)
    scalar, flux_data = coeffs.rhs_pair(goal)
    diffusion = coeffs.diffusion

    areas = mesh.element_areas
    h = np.sqrt(areas)

    # Volume residual: constant per element, so the L2 norm is exact.
    resid = scalar + _divergence_of_flux(space, v, diffusion)
    values = areas ** 2 * resid ** 2  # h^2 * |T| * resid^2 = |T|^2 resid^2

    edges = mesh.edges
    adj = mesh.edge_elements
    labels = mesh.edge_labels
    va, vb = edges[:, 0], edges[:, 1]
    tang = mesh.vertices[vb] - mesh.vertices[va]
    elen = np.linalg.norm(tang, axis=1)
    normal = np.column_stack([tang[:, 1], -tang[:, 0]]) / elen[:, None]

    s, w = edge_rule(2 * space.degree)

    def side_flux(edge_ids: np.ndarray, side: int) -> np.ndarray:
        elems = adj[edge_ids, side]
        grads = _edge_point_gradients(space, v, elems, va[edge_ids], vb[edge_ids], s)
        flux = (diffusion[elems] @ grads.transpose(0, 2, 1)).transpose(0, 2, 1)
        return flux - flux_data[elems][:, None, :]

    interior = np.flatnonzero(adj[:, 1] >= 0)
    if interior.size:
        jump = side_flux(interior, 0) - side_flux(interior, 1)
        jn = (jump * normal[interior][:, None, :]).sum(axis=2)
        edge_sq = elen[interior] * (jn ** 2 @ w)
        t0, t1 = adj[interior, 0], adj[interior, 1]
        values = values + np.bincount(t0, weights=h[t0] * edge_sq, minlength=mesh.n_elements)
        values = values + np.bincount(t1, weights=h[t1] * edge_sq, minlength=mesh.n_elements)

    if include_neumann:
        neumann = np.flatnonzero((adj[:, 1] < 0) & (labels == NEUMANN))
        if neumann.size:
            fn = (side_flux(neumann, 0) * normal[neumann][:, None, :]).sum(axis=2)
            edge_sq = elen[neumann] * (fn ** 2 @ w)
            t0 = adj[neumann, 0]
            values = values + np.bincount(t0, weights=h[t0] * edge_sq, minlength=mesh.n_elements)

    return IndicatorField(values, kind="primal" if goal is None else "dual",
                          goal=goal, level=level)
