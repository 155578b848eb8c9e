"""Polygonal meshes of the unit square, the two grid families, and mesh text I/O.

Every cell is a convex polygon stored as a counter-clockwise loop of vertex
indices.  Each edge carries a single fixed unit normal ``n_e`` which points
from its lower-indexed adjacent cell towards the higher-indexed one (outward
on the boundary), so ``n_e`` coincides with the outward normal of the
lower-indexed cell.  Edges are oriented along the counter-clockwise
traversal of that same cell.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, MeshParseError, MeshValidationError

DEFAULT_ALPHA = 0.15


class FamilyKind(enum.Enum):
    TRIANGLE = "triangle"
    PENTAGON = "pentagon"


@dataclass(frozen=True)
class GridFamily:
    """A member of one of the two unit-square grid families.

    ``alpha`` is the pentagon offset: the fraction of the macro-square side by
    which the four inner vertices are pushed in from the side midpoints.
    """

    kind: FamilyKind
    level: int
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", FamilyKind(self.kind))
        if int(self.level) != self.level or self.level < 1:
            raise InvalidArgumentError(f"grid level must be a positive integer, got {self.level!r}")
        if not 0.0 < self.alpha < 0.5:
            raise InvalidArgumentError(f"pentagon offset must lie in (0, 1/2), got {self.alpha}")

    @property
    def expected_cells(self):
        per_macro = 2 if self.kind is FamilyKind.TRIANGLE else 5
        return per_macro * 4 ** (self.level - 1)

    def next(self):
        return GridFamily(self.kind, self.level + 1, self.alpha)


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class PolyMesh:
    """Immutable conforming polygonal mesh.

    Attributes
    ----------
    vertices : (nv, 2) float array
    cells : tuple of int arrays, counter-clockwise vertex loops
    edges : (ne, 2) int array, oriented along the lower cell's CCW traversal
    edge_cells : (ne, 2) int array, ``[lower, upper]``; ``upper == -1`` on the boundary
    edge_normals, edge_tangents : (ne, 2) unit vectors
    edge_lengths : (ne,)
    boundary : (ne,) bool
    cell_edges : tuple of int arrays; local edge ``i`` joins local vertices ``i`` and ``i+1``
    cell_edge_signs : tuple of arrays holding ``n_e . n_T`` (+1 or -1) per local edge
    areas, centroids, diameters : per-cell geometry
    """

    def __init__(self, vertices, cells, family=None):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshValidationError("vertices must be an (nv, 2) array")
        cells = [np.asarray(c, dtype=np.int64) for c in cells]
        if not cells:
            raise MeshValidationError("mesh has no cells")
        self.family = family
        self.vertices = _readonly(vertices)
        self.cells = tuple(_readonly(c) for c in cells)

        areas = np.empty(len(cells))
        centroids = np.empty((len(cells), 2))
        diameters = np.empty(len(cells))
        for ic, c in enumerate(cells):
            _check_cell(vertices, c, ic)
            areas[ic], centroids[ic] = polygon_area_centroid(vertices[c])
            p = vertices[c]
            diameters[ic] = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1).max())
        self.areas = _readonly(areas)
        self.centroids = _readonly(centroids)
        self.diameters = _readonly(diameters)
        self._build_edges()

    def _build_edges(self):
        lookup = {}
        edges, owners = [], []
        cell_edges, cell_signs = [], []
        for ic, c in enumerate(self.cells):
            ids = np.empty(len(c), dtype=np.int64)
            signs = np.empty(len(c))
            for i in range(len(c)):
                a, b = int(c[i]), int(c[(i + 1) % len(c)])
                key = (a, b) if a < b else (b, a)
                ie = lookup.get(key)
                if ie is None:
                    ie = lookup[key] = len(edges)
                    edges.append((a, b))
                    owners.append([ic, -1])
                    signs[i] = 1.0
                else:
                    if owners[ie][1] != -1:
                        raise MeshValidationError(f"edge {key} is shared by more than two cells")
                    if edges[ie] != (b, a):
                        raise MeshValidationError(
                            f"cells {owners[ie][0]} and {ic} traverse edge {key} in the same direction"
                        )
                    owners[ie][1] = ic
                    signs[i] = -1.0
                ids[i] = ie
            cell_edges.append(_readonly(ids))
            cell_signs.append(_readonly(signs))

        edges = np.array(edges, dtype=np.int64)
        vec = self.vertices[edges[:, 1]] - self.vertices[edges[:, 0]]
        lengths = np.hypot(vec[:, 0], vec[:, 1])
        tangents = vec / lengths[:, None]
        self.edges = _readonly(edges)
        self.edge_cells = _readonly(np.array(owners, dtype=np.int64))
        self.edge_lengths = _readonly(lengths)
        self.edge_tangents = _readonly(tangents)
        self.edge_normals = _readonly(np.column_stack([tangents[:, 1], -tangents[:, 0]]))
        self.edge_midpoints = _readonly(0.5 * (self.vertices[edges[:, 0]] + self.vertices[edges[:, 1]]))
        self.boundary = _readonly(self.edge_cells[:, 1] < 0)
        self.cell_edges = tuple(cell_edges)
        self.cell_edge_signs = tuple(cell_signs)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def h(self):
        return float(self.diameters.max())

    def cell_sizes(self):
        """Number of vertices of every cell."""
        return np.array([len(c) for c in self.cells])

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_cells

    def bounding_box(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def __repr__(self):
        fam = "" if self.family is None else f", family={self.family.kind.value}/{self.family.level}"
        return f"PolyMesh(nv={self.n_vertices}, nc={self.n_cells}, ne={self.n_edges}{fam})"


def polygon_area_centroid(p):
    """Signed area and centroid of a polygon by the shoelace formula."""
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        return 0.0, p.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return float(area), np.array([cx, cy])


def _check_cell(vertices, c, ic):
    if len(c) < 3:
        raise MeshValidationError(f"cell {ic} has fewer than 3 vertices")
    if len(set(c.tolist())) != len(c):
        raise MeshValidationError(f"cell {ic} repeats a vertex index")
    if c.min() < 0 or c.max() >= len(vertices):
        raise MeshValidationError(f"cell {ic} references a vertex out of range")
    p = vertices[c]
    d_in = p - np.roll(p, 1, axis=0)
    d_out = np.roll(p, -1, axis=0) - p
    turn = d_in[:, 0] * d_out[:, 1] - d_in[:, 1] * d_out[:, 0]
    scale = np.hypot(*d_in.T) * np.hypot(*d_out.T)
    if polygon_area_centroid(p)[0] <= 0.0:
        raise MeshValidationError(f"cell {ic} is not counter-clockwise (non-positive area)")
    if np.any(turn <= 1e-12 * scale):
        raise MeshValidationError(f"cell {ic} is not strictly convex")


# --------------------------------------------------------------------------
# grid families
# --------------------------------------------------------------------------

def _triangle_grid(level):
    n = 2 ** (level - 1)
    idx = np.arange(n + 1)
    gx, gy = np.meshgrid(idx, idx)
    vertices = np.column_stack([gx.ravel(), gy.ravel()]) / n

    def vid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            cells.append([vid(i, j), vid(i + 1, j), vid(i, j + 1)])
            cells.append([vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return vertices, cells


def _pentagon_grid(level, alpha):
    n = 2 ** (level - 1)
    coords, keys = [], {}

    def shared(p, q):
        # half-lattice vertex (p / 2n, q / 2n); shared between macro-squares
        key = (p, q)
        if key not in keys:
            keys[key] = len(coords)
            coords.append((p / (2 * n), q / (2 * n)))
        return keys[key]

    def inner(x, y):
        coords.append((x / n, y / n))
        return len(coords) - 1

    cells = []
    for J in range(n):
        for I in range(n):
            p, q = 2 * I, 2 * J
            c00, c10 = shared(p, q), shared(p + 2, q)
            c11, c01 = shared(p + 2, q + 2), shared(p, q + 2)
            mb, mr = shared(p + 1, q), shared(p + 2, q + 1)
            mt, ml = shared(p + 1, q + 2), shared(p, q + 1)
            ib = inner(I + 0.5, J + alpha)
            ir = inner(I + 1 - alpha, J + 0.5)
            it = inner(I + 0.5, J + 1 - alpha)
            il = inner(I + alpha, J + 0.5)
            cells.append([c00, mb, ib, il, ml])
            cells.append([mb, c10, mr, ir, ib])
            cells.append([mr, c11, mt, it, ir])
            cells.append([mt, c01, ml, il, it])
            cells.append([ib, ir, it, il])
    return np.array(coords), cells


def generate(family: GridFamily) -> PolyMesh:
    """Build the level-``family.level`` member of a grid family on the unit square.

    Triangles: level 1 is the unit square cut by the diagonal from (1, 0) to
    (0, 1); level ``L`` is the uniform ``2^(L-1)`` grid cut the same way.
    Pentagons: ``4^(L-1)`` macro-squares, each split into four corner
    pentagons around a central rotated quadrilateral.
    """
    if not isinstance(family, GridFamily):
        raise InvalidArgumentError("generate() expects a GridFamily")
    if family.kind is FamilyKind.TRIANGLE:
        vertices, cells = _triangle_grid(family.level)
    else:
        vertices, cells = _pentagon_grid(family.level, family.alpha)
    return PolyMesh(vertices, cells, family=family)


def refine(mesh: PolyMesh, family: GridFamily | None = None) -> PolyMesh:
    """Half-size refinement within the mesh's grid family.

    Triangles are split into four congruent children (children of cell ``c``
    are ``4c .. 4c+3``).  The pentagon family is not nested, so its next level
    is generated from scratch.
    """
    if mesh.family is None:
        raise InvalidArgumentError("mesh does not belong to a grid family")
    if family is not None:
        if isinstance(family, FamilyKind):
            kind, alpha = family, mesh.family.alpha
        else:
            kind, alpha = family.kind, family.alpha
        if kind is not mesh.family.kind or alpha != mesh.family.alpha:
            raise InvalidArgumentError(
                f"cannot refine a {mesh.family.kind.value} mesh as family {kind.value}"
            )
    fam = mesh.family.next()
    if fam.kind is FamilyKind.PENTAGON:
        return generate(fam)

    vertices = [tuple(v) for v in mesh.vertices]
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            # dyadic coordinates: the average is exact
            xa, ya = vertices[a]
            xb, yb = vertices[b]
            midpoint[key] = len(vertices)
            vertices.append(((xa + xb) / 2, (ya + yb) / 2))
        return midpoint[key]

    cells = []
    for a, b, c in (cell.tolist() for cell in mesh.cells):
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        cells += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    return PolyMesh(np.array(vertices), cells, family=fam)


def family_meshes(family: GridFamily, last_level: int):
    """Yield meshes of ``family`` from its level up to ``last_level`` inclusive."""
    mesh = generate(family)
    yield mesh
    for _ in range(family.level, last_level):
        mesh = refine(mesh)
        yield mesh


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------

def write_mesh(mesh: PolyMesh) -> str:
    lines = ["polymesh 1", f"{mesh.n_vertices} {mesh.n_cells}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [" ".join([str(len(c))] + [str(i) for i in c]) for c in mesh.cells]
    x0, y0, x1, y1 = mesh.bounding_box()
    box = (x1 - x0) * (y1 - y0)
    if abs(mesh.areas.sum() - box) <= 1e-12 * box:
        lines.append(f"domain {x0:.17g} {y0:.17g} {x1:.17g} {y1:.17g}")
    lines.append("boundary auto")
    return "\n".join(lines) + "\n"


def read_mesh(text: str) -> PolyMesh:
    """Parse the ``polymesh 1`` text format.

    Layout (``#`` starts a comment)::

        polymesh 1
        nv nc
        x y                      # nv lines
        m i1 ... im              # nc lines, CCW, 0-based
        domain x0 y0 x1 y1       # optional rectangle, checked against cell areas
        boundary auto
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            rows.append((lineno, body.split()))
    it = iter(rows)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise MeshParseError(f"unexpected end of input while reading {what}") from None

    lineno, tok = take("header")
    if tok != ["polymesh", "1"]:
        raise MeshParseError("expected header 'polymesh 1'", lineno)
    lineno, tok = take("counts")
    try:
        nv, nc = (int(t) for t in tok)
    except ValueError:
        raise MeshParseError("expected 'nv nc'", lineno) from None
    if nv < 3 or nc < 1:
        raise MeshParseError(f"malformed counts nv={nv} nc={nc}", lineno)

    vertices = np.empty((nv, 2))
    for i in range(nv):
        lineno, tok = take(f"vertex {i}")
        if len(tok) != 2:
            raise MeshParseError(f"vertex {i}: expected 2 coordinates", lineno)
        try:
            vertices[i] = [float(t) for t in tok]
        except ValueError:
            raise MeshParseError(f"vertex {i}: bad coordinate", lineno) from None

    cells = []
    for ic in range(nc):
        lineno, tok = take(f"cell {ic}")
        try:
            vals = [int(t) for t in tok]
        except ValueError:
            raise MeshParseError(f"cell {ic}: bad vertex index", lineno) from None
        m, idx = vals[0], vals[1:]
        if m < 3 or len(idx) != m:
            raise MeshParseError(f"cell {ic}: declared {m} vertices, found {len(idx)}", lineno)
        if min(idx) < 0 or max(idx) >= nv:
            raise MeshParseError(f"cell {ic}: vertex index out of range", lineno)
        if len(set(idx)) != m:
            raise MeshParseError(f"cell {ic}: repeated vertex index", lineno)
        if polygon_area_centroid(vertices[idx])[0] <= 0.0:
            raise MeshParseError(f"cell {ic} is not counter-clockwise", lineno)
        cells.append(idx)

    domain = None
    lineno, tok = take("boundary line")
    if tok[0] == "domain":
        if len(tok) != 5:
            raise MeshParseError("expected 'domain x0 y0 x1 y1'", lineno)
        try:
            domain = [float(t) for t in tok[1:]]
        except ValueError:
            raise MeshParseError("domain: bad coordinate", lineno) from None
        domain_line = lineno
        lineno, tok = take("boundary line")
    if tok != ["boundary", "auto"]:
        raise MeshParseError("expected 'boundary auto'", lineno)
    extra = next(it, None)
    if extra is not None:
        raise MeshParseError("trailing content after 'boundary auto'", extra[0])

    try:
        mesh = PolyMesh(vertices, cells)
    except MeshValidationError as exc:
        raise MeshParseError(str(exc)) from exc
    if domain is not None:
        box = (domain[2] - domain[0]) * (domain[3] - domain[1])
        total = mesh.areas.sum()
        if abs(total - box) > 1e-12 * abs(box):
            raise MeshValidationError(
                f"cell areas sum to {total:.15g} but the domain declared on line "
                f"{domain_line} has area {box:.15g}"
            )
    return mesh


def meshes_equal(a: PolyMesh, b: PolyMesh) -> bool:
    """Exact equality of vertices, cell loops and boundary flags."""
    return (
        np.array_equal(a.vertices, b.vertices)
        and len(a.cells) == len(b.cells)
        and all(np.array_equal(x, y) for x, y in zip(a.cells, b.cells))
        and np.array_equal(a.boundary, b.boundary)
    )

