"""Conforming triangle meshes with newest-vertex-bisection refinement.

Element convention: each element is an ordered vertex triple (v0, v1, v2)
with positive orientation; the refinement edge is (v0, v1) and v2 is the
newest vertex. Bisection inserts the midpoint of (v0, v1), which becomes
the newest vertex of both children.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

DIRICHLET = 0
NEUMANN = 1

LABEL_NAMES = {DIRICHLET: "dirichlet", NEUMANN: "neumann"}
LABEL_IDS = {name: label for label, name in LABEL_NAMES.items()}

_CONTAIN_TOL = 1e-12


class MeshError(ValueError):
    """Invalid mesh topology, geometry, or subdomain layout."""


@dataclass(eq=False)
class Mesh:
    """Immutable conforming triangulation. Do not mutate the arrays."""

    vertices: np.ndarray        # (nv, 2) float
    elements: np.ndarray        # (nt, 3) int, refinement edge = (v0, v1)
    boundary_edges: np.ndarray  # (nb, 2) int
    boundary_labels: np.ndarray  # (nb,) int, DIRICHLET or NEUMANN
    element_region: np.ndarray  # (nt,) int, subdomain id (0 = background)
    generation: np.ndarray      # (nt,) int, bisection depth

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_labels = np.ascontiguousarray(self.boundary_labels, dtype=np.int64)
        self.element_region = np.ascontiguousarray(self.element_region, dtype=np.int64)
        self.generation = np.ascontiguousarray(self.generation, dtype=np.int64)
        for arr in (self.vertices, self.elements, self.boundary_edges,
                    self.boundary_labels, self.element_region, self.generation):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def element_areas(self) -> np.ndarray:
        return 0.5 * self.jacobians[0]

    @cached_property
    def jacobians(self) -> tuple[np.ndarray, np.ndarray]:
        """(det, inv_transposed) of the affine maps from the reference element.

        The Jacobian columns are the edge vectors v1 - v0 and v2 - v0; its
        determinant is twice the element area.
        """
        p = self.vertices[self.elements]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv_t = np.empty_like(jac)
        inv_t[:, 0, 0] = jac[:, 1, 1]
        inv_t[:, 0, 1] = -jac[:, 1, 0]
        inv_t[:, 1, 0] = -jac[:, 0, 1]
        inv_t[:, 1, 1] = jac[:, 0, 0]
        inv_t = inv_t / det[:, None, None]
        return det, inv_t

    # Edge numbering: local edge 0 = (v0,v1), 1 = (v1,v2), 2 = (v2,v0).
    # Global edges are the unique sorted vertex pairs in key order.
    @cached_property
    def _edge_data(self):
        nv = self.n_vertices
        pairs = self.elements[:, [[0, 1], [1, 2], [2, 0]]]  # (nt, 3, 2)
        lo = pairs.min(axis=2)
        hi = pairs.max(axis=2)
        keys = lo.astype(np.int64) * nv + hi
        unique_keys, inverse = np.unique(keys.ravel(), return_inverse=True)
        edges = np.column_stack([unique_keys // nv, unique_keys % nv])
        element_edges = inverse.reshape(-1, 3)
        return edges, element_edges, unique_keys

    @property
    def edges(self) -> np.ndarray:
        """(ne, 2) sorted vertex pairs, lexicographic order."""
        return self._edge_data[0]

    @property
    def element_edges(self) -> np.ndarray:
        """(nt, 3) global edge index per local edge."""
        return self._edge_data[1]

    @cached_property
    def edge_elements(self) -> np.ndarray:
        """(ne, 2) adjacent elements per edge, -1 in the second slot on the boundary."""
        ne = self.edges.shape[0]
        flat = self.element_edges.ravel()
        owner = np.repeat(np.arange(self.n_elements), 3)
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=ne)
        if counts.max(initial=0) > 2:
            raise MeshError("edge shared by more than two elements")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        out = np.full((ne, 2), -1, dtype=np.int64)
        out[:, 0] = owner[order][starts]
        second = counts == 2
        out[second, 1] = owner[order][starts[second] + 1]
        return out

    @cached_property
    def edge_labels(self) -> np.ndarray:
        """(ne,) boundary label per edge, -1 for interior edges."""
        nv = self.n_vertices
        _, _, unique_keys = self._edge_data
        labels = np.full(self.edges.shape[0], -1, dtype=np.int64)
        bkeys = self.boundary_edges.min(axis=1) * nv + self.boundary_edges.max(axis=1)
        pos = np.searchsorted(unique_keys, bkeys)
        if np.any(pos >= unique_keys.size) or np.any(unique_keys[pos] != bkeys):
            raise MeshError("boundary edge not present in the element edges")
        labels[pos] = self.boundary_labels
        return labels


@dataclass(frozen=True)
class Subdomain:
    """Axis-aligned rectangle or simple polygon carrying a region id >= 1."""

    region: int
    rect: tuple[float, float, float, float] | None = None
    polygon: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.region < 1:
            raise MeshError(f"subdomain region id must be >= 1, got {self.region}")
        if (self.rect is None) == (self.polygon is None):
            raise MeshError("subdomain needs exactly one of rect or polygon")
        if self.rect is not None:
            x0, y0, x1, y1 = self.rect
            if not (x0 < x1 and y0 < y1):
                raise MeshError(f"degenerate rect {self.rect}")

    def contains(self, points: np.ndarray, tol: float = _CONTAIN_TOL) -> np.ndarray:
        pts = np.atleast_2d(points)
        if self.rect is not None:
            x0, y0, x1, y1 = self.rect
            return ((pts[:, 0] >= x0 - tol) & (pts[:, 0] <= x1 + tol)
                    & (pts[:, 1] >= y0 - tol) & (pts[:, 1] <= y1 + tol))
        return _polygon_contains(np.asarray(self.polygon, dtype=float), pts, tol)


def _polygon_contains(poly: np.ndarray, pts: np.ndarray, tol: float) -> np.ndarray:
    # Crossing-number test, with a distance check so points within tol of the
    # boundary count as inside.
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        crosses = ((y0 > y) != (y1 > y))
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < np.where(crosses, xi, 0.0))
    near = np.zeros(len(pts), dtype=bool)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        near |= np.linalg.norm(pts - proj, axis=1) <= tol
    return inside | near


def _orient_ccw(vertices: np.ndarray, elements: np.ndarray) -> np.ndarray:
    p = vertices[elements]
    area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    if np.any(area2 == 0.0):
        raise MeshError("degenerate element with zero area")
    out = elements.copy()
    flip = area2 < 0
    out[flip] = out[flip][:, [0, 2, 1]]
    return out


def _assign_refinement_edges(vertices: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Rotate each triple so the longest edge comes first.

    Ties are broken by the smallest global index of the opposite vertex.
    """
    p = vertices[elements]
    lens = np.stack([
        ((p[:, 1] - p[:, 0]) ** 2).sum(axis=1),
        ((p[:, 2] - p[:, 1]) ** 2).sum(axis=1),
        ((p[:, 0] - p[:, 2]) ** 2).sum(axis=1),
    ], axis=1)
    opposite = elements[:, [2, 0, 1]]
    longest = lens == lens.max(axis=1, keepdims=True)
    pick = np.where(longest, opposite, np.iinfo(np.int64).max).argmin(axis=1)
    out = elements.copy()
    out[pick == 1] = out[pick == 1][:, [1, 2, 0]]
    out[pick == 2] = out[pick == 2][:, [2, 0, 1]]
    return out


def _derive_boundary(vertices, elements, label_fn):
    """Boundary edges = element edges incident to exactly one element."""
    nv = len(vertices)
    pairs = elements[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    keys = pairs.min(axis=1).astype(np.int64) * nv + pairs.max(axis=1)
    unique_keys, counts = np.unique(keys, return_counts=True)
    bkeys = unique_keys[counts == 1]
    edges = np.column_stack([bkeys // nv, bkeys % nv])
    mids = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    labels = np.array([label_fn(m) for m in mids], dtype=np.int64)
    return edges, labels


def _assign_regions(vertices, elements, subdomains: Sequence[Subdomain]) -> np.ndarray:
    regions = np.zeros(len(elements), dtype=np.int64)
    if not subdomains:
        return regions
    ids = [s.region for s in subdomains]
    if len(set(ids)) != len(ids):
        raise MeshError(f"duplicate subdomain region ids: {sorted(ids)}")
    centroids = vertices[elements].mean(axis=1)
    for sub in subdomains:
        inside = sub.contains(centroids)
        for k in range(3):
            ok = sub.contains(vertices[elements[:, k]])
            bad = inside & ~ok
            if np.any(bad):
                t = int(np.flatnonzero(bad)[0])
                raise MeshError(
                    f"subdomain {sub.region} is not resolved by the mesh: "
                    f"element {t} straddles its boundary")
        clash = inside & (regions != 0)
        if np.any(clash):
            t = int(np.flatnonzero(clash)[0])
            raise MeshError(
                f"subdomains {int(regions[t])} and {sub.region} overlap on element {t}")
        regions[inside] = sub.region
    return regions


def _unit_square_grid(n0: int):
    """n0 x n0 grid of squares, each split into 4 triangles by its center."""
    if n0 < 1:
        raise MeshError(f"unit square grid needs n0 >= 1, got {n0}")
    h = 1.0 / n0
    xs = np.arange(n0 + 1) * h
    gx, gy = np.meshgrid(xs, xs, indexing="xy")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    cx = (np.arange(n0) + 0.5) * h
    mx, my = np.meshgrid(cx, cx, indexing="xy")
    centers = np.column_stack([mx.ravel(), my.ravel()])
    vertices = np.vstack([grid, centers])

    def gid(i, j):
        return j * (n0 + 1) + i

    n_grid = (n0 + 1) ** 2
    elements = []
    for j in range(n0):
        for i in range(n0):
            a = gid(i, j)
            b = gid(i + 1, j)
            c = gid(i + 1, j + 1)
            d = gid(i, j + 1)
            m = n_grid + j * n0 + i
            elements += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
    return vertices, np.array(elements, dtype=np.int64)


def _unit_square_diagonal():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    elements = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return vertices, elements


def _z_shape_grid(cells_per_unit: int):
    """(-1,1)^2 minus the triangle with corners (0,0), (-1,0), (-1,-1).

    Grid cells of size 1/m; cells cut by the diagonal y = x in the third
    quadrant contribute their kept half as a single triangle.
    """
    m = cells_per_unit
    if m < 1:
        raise MeshError(f"z-shape grid needs cells_per_unit >= 1, got {m}")
    h = 1.0 / m
    n = 2 * m
    xs = -1.0 + np.arange(n + 1) * h
    gx, gy = np.meshgrid(xs, xs, indexing="xy")
    grid = np.column_stack([gx.ravel(), gy.ravel()])

    def gid(i, j):
        return j * (n + 1) + i

    vertices = [grid]
    elements = []
    next_vertex = (n + 1) ** 2
    for j in range(n):
        for i in range(n):
            in_q3 = i < m and j < m
            if in_q3 and j >= i + 1:
                continue  # inside the removed corner triangle
            a = gid(i, j)
            b = gid(i + 1, j)
            c = gid(i + 1, j + 1)
            d = gid(i, j + 1)
            if in_q3 and i == j:
                elements.append((a, b, c))
                continue
            vertices.append(-1.0 + (np.array([[i, j]]) + 0.5) * h)
            mid = next_vertex
            next_vertex += 1
            elements += [(a, b, mid), (b, c, mid), (c, d, mid), (d, a, mid)]
    vertices = np.vstack(vertices)
    elements = np.array(elements, dtype=np.int64)
    used = np.unique(elements)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return vertices[used], remap[elements]


def _z_shape_label(mid: np.ndarray) -> int:
    x, y = mid
    tol = 1e-12
    on_flat = abs(y) <= tol and -1.0 - tol <= x <= tol
    on_diag = abs(y - x) <= tol and -1.0 - tol <= x <= tol
    return DIRICHLET if (on_flat or on_diag) else NEUMANN


def make_initial_mesh(domain, subdomains: Sequence[Subdomain] = ()) -> Mesh:
    """Build a conforming initial mesh for a named or explicit domain.

    domain is either a kind string ("unit_square", "unit_square_diagonal",
    "z_shape") or a mapping with a "kind" entry plus kind-specific
    parameters (unit_square: n0; z_shape: cells_per_unit; explicit:
    vertices, elements, boundary).
    """
    spec = {"kind": domain} if isinstance(domain, str) else dict(domain)
    try:
        kind = spec.pop("kind")
    except KeyError:
        raise MeshError("domain spec needs a 'kind' entry") from None

    boundary = None
    if kind == "unit_square":
        vertices, elements = _unit_square_grid(int(spec.pop("n0", 8)))
        label_fn = lambda mid: DIRICHLET  # noqa: E731
    elif kind == "unit_square_diagonal":
        vertices, elements = _unit_square_diagonal()
        label_fn = lambda mid: DIRICHLET  # noqa: E731
    elif kind == "z_shape":
        vertices, elements = _z_shape_grid(int(spec.pop("cells_per_unit", 4)))
        label_fn = _z_shape_label
    elif kind == "explicit":
        vertices = np.asarray(spec.pop("vertices"), dtype=float)
        elements = np.asarray(spec.pop("elements"), dtype=np.int64)
        boundary = spec.pop("boundary", None)
        label_fn = lambda mid: DIRICHLET  # noqa: E731
    else:
        raise MeshError(f"unknown domain kind {kind!r}")
    if spec:
        raise MeshError(f"unknown domain parameters {sorted(spec)}")

    elements = _orient_ccw(vertices, elements)
    elements = _assign_refinement_edges(vertices, elements)
    if boundary is None:
        bedges, blabels = _derive_boundary(vertices, elements, label_fn)
    else:
        bedges = np.array([[e[0], e[1]] for e in boundary], dtype=np.int64)
        blabels = np.array([e[2] if isinstance(e[2], int) else LABEL_IDS[e[2]]
                            for e in boundary], dtype=np.int64)
    regions = _assign_regions(vertices, elements, subdomains)
    mesh = Mesh(vertices, elements, bedges, blabels, regions,
                np.zeros(len(elements), dtype=np.int64))
    check_conforming(mesh)
    return mesh


# Child tables for the bisection patterns. Each row is a child as index
# triples into (v0, v1, v2, m0, m1, m2); the second column is the
# generation increment.
_CHILDREN = {
    1: ([(2, 0, 3), (1, 2, 3)], [1, 1]),                      # edge 0
    3: ([(2, 0, 3), (3, 1, 4), (2, 3, 4)], [1, 2, 2]),        # edges 0, 1
    5: ([(3, 2, 5), (0, 3, 5), (1, 2, 3)], [2, 2, 1]),        # edges 0, 2
    7: ([(3, 2, 5), (0, 3, 5), (3, 1, 4), (2, 3, 4)], [2, 2, 2, 2]),
}


def refine_nvb(mesh: Mesh, marked) -> tuple[Mesh, np.ndarray]:
    """Bisect all marked elements plus the closure needed for conformity.

    Returns the refined mesh and the parent map (new element -> old
    element; unrefined elements map to themselves). Marking nothing
    returns the input mesh unchanged.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked,
                                  dtype=np.int64))
    nt = mesh.n_elements
    if marked.size and (marked.min() < 0 or marked.max() >= nt):
        raise MeshError("marked element index out of range")
    if marked.size == 0:
        return mesh, np.arange(nt, dtype=np.int64)

    element_edges = mesh.element_edges
    ne = mesh.edges.shape[0]
    edge_marked = np.zeros(ne, dtype=bool)
    edge_marked[element_edges[marked, 0]] = True
    while True:
        em = edge_marked[element_edges]
        need = ~em[:, 0] & (em[:, 1] | em[:, 2])
        if not need.any():
            break
        edge_marked[element_edges[need, 0]] = True

    nv = mesh.n_vertices
    split_edges = np.flatnonzero(edge_marked)
    midpoint_of = np.full(ne, -1, dtype=np.int64)
    midpoint_of[split_edges] = nv + np.arange(split_edges.size)
    new_vertices = np.vstack([
        mesh.vertices,
        0.5 * (mesh.vertices[mesh.edges[split_edges, 0]]
               + mesh.vertices[mesh.edges[split_edges, 1]]),
    ])

    em = edge_marked[element_edges]
    pattern = em[:, 0] * 1 + em[:, 1] * 2 + em[:, 2] * 4
    counts = np.ones(nt, dtype=np.int64)
    for pat, (children, _) in _CHILDREN.items():
        counts[pattern == pat] = len(children)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    total = offsets[-1]

    new_elements = np.empty((total, 3), dtype=np.int64)
    new_generation = np.empty(total, dtype=np.int64)
    parent = np.empty(total, dtype=np.int64)

    keep = pattern == 0
    keep_rows = offsets[:-1][keep]
    new_elements[keep_rows] = mesh.elements[keep]
    new_generation[keep_rows] = mesh.generation[keep]
    parent[keep_rows] = np.flatnonzero(keep)

    for pat, (children, gen_inc) in _CHILDREN.items():
        sel = np.flatnonzero(pattern == pat)
        if sel.size == 0:
            continue
        nodes = np.column_stack([
            mesh.elements[sel],
            midpoint_of[element_edges[sel, 0]],
            midpoint_of[element_edges[sel, 1]],
            midpoint_of[element_edges[sel, 2]],
        ])
        for c, (triple, inc) in enumerate(zip(children, gen_inc)):
            rows = offsets[:-1][sel] + c
            new_elements[rows] = nodes[:, triple]
            new_generation[rows] = mesh.generation[sel] + inc
            parent[rows] = sel

    new_region = mesh.element_region[parent]

    # Split marked boundary edges in place, preserving list order.
    _, _, unique_keys = mesh._edge_data
    bkeys = (mesh.boundary_edges.min(axis=1) * nv + mesh.boundary_edges.max(axis=1))
    bedge_ids = np.searchsorted(unique_keys, bkeys)
    b_rows = []
    b_labels = []
    for (a, b), label, eid in zip(mesh.boundary_edges, mesh.boundary_labels, bedge_ids):
        mid = midpoint_of[eid]
        if mid < 0:
            b_rows.append((a, b))
            b_labels.append(label)
        else:
            b_rows += [(a, mid), (mid, b)]
            b_labels += [label, label]

    refined = Mesh(new_vertices, new_elements,
                   np.array(b_rows, dtype=np.int64),
                   np.array(b_labels, dtype=np.int64),
                   new_region, new_generation)
    return refined, parent


def uniform_refine(mesh: Mesh) -> tuple[Mesh, np.ndarray]:
    """Refine every element at least once."""
    return refine_nvb(mesh, np.arange(mesh.n_elements))


def shape_quality(mesh: Mesh) -> dict[str, float]:
    """Smallest interior angle and mesh-size extrema (h_T = |T|^(1/2))."""
    p = mesh.vertices[mesh.elements]
    angles = []
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cosang = (a * b).sum(axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
    h = np.sqrt(mesh.element_areas)
    return {
        "min_angle": float(np.min(angles)),
        "max_h": float(h.max()),
        "min_h": float(h.min()),
    }


def check_conforming(mesh: Mesh) -> None:
    """Raise MeshError unless the mesh is conforming with a consistent boundary."""
    if np.any(mesh.element_areas <= 0.0):
        t = int(np.flatnonzero(mesh.element_areas <= 0.0)[0])
        raise MeshError(f"element {t} has non-positive area")
    ne = mesh.edges.shape[0]
    counts = np.bincount(mesh.element_edges.ravel(), minlength=ne)
    if counts.max(initial=0) > 2:
        raise MeshError("non-conforming: edge shared by more than two elements")
    nv = mesh.n_vertices
    boundary_keys = np.sort(mesh.edges[counts == 1, 0] * nv + mesh.edges[counts == 1, 1])
    declared = np.sort(mesh.boundary_edges.min(axis=1) * nv + mesh.boundary_edges.max(axis=1))
    if boundary_keys.shape != declared.shape or np.any(boundary_keys != declared):
        raise MeshError("boundary edges do not match the topological boundary")
    if mesh.boundary_labels.size and not np.isin(mesh.boundary_labels, [DIRICHLET, NEUMANN]).all():
        raise MeshError("invalid boundary label")
    # A hanging node would show up as a vertex of some element lying in the
    # interior of another element's edge; with matching boundary edges and
    # edge counts <= 2 this cannot happen for meshes produced by bisection,
    # but explicit input may still contain T-junctions across resolution
    # jumps, which the boundary comparison above catches.


def assert_nested(coarse: Mesh, fine: Mesh, parent: np.ndarray, tol: float = 1e-12) -> None:
    """Check vertex-wise containment of each child in its parent element."""
    p = coarse.vertices[coarse.elements[parent]]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    for k in range(3):
        rel = fine.vertices[fine.elements[:, k]] - p[:, 0]
        lam1 = (rel[:, 0] * d2[:, 1] - rel[:, 1] * d2[:, 0]) / det
        lam2 = (d1[:, 0] * rel[:, 1] - d1[:, 1] * rel[:, 0]) / det
        ok = (lam1 >= -tol) & (lam2 >= -tol) & (lam1 + lam2 <= 1.0 + tol)
        if not ok.all():
            t = int(np.flatnonzero(~ok)[0])
            raise MeshError(f"child element {t} escapes its parent {int(parent[t])}")


def write_mesh(mesh: Mesh, path) -> None:
    """Plain-text dump: VERTICES, ELEMENTS (with region), BOUNDARY sections."""
    lines = ["VERTICES"]
    lines += [f"{repr(float(x))} {repr(float(y))}" for x, y in mesh.vertices]
    lines.append("ELEMENTS")
    lines += [f"{a} {b} {c} {r}" for (a, b, c), r in zip(mesh.elements, mesh.element_region)]
    lines.append("BOUNDARY")
    lines += [f"{a} {b} {LABEL_NAMES[int(l)]}"
              for (a, b), l in zip(mesh.boundary_edges, mesh.boundary_labels)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
