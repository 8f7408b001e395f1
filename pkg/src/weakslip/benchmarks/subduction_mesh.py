"""Graded conforming meshes of a kinematic subduction-zone box.

The domain is the rectangle ``(0, Z + delta_x) x (-Z, 0)`` cut by two
internal lines: the slab interface ``y = d(x)`` (straight at dip angle
``alpha`` or the power-law curve ``-Z (x/Z)**n_slab``) and the base of the
overriding plate ``y = -Z_plate``.  Both lines are unions of cell edges of
the generated mesh, so boundary data on them lands on whole facets: the
part of the interface above the plate base carries strong velocity data,
the part below it is registered as marked interior facets with both
adjacent sides, ready for weak (Nitsche) conditions.

Construction sweeps vertical columns across the box.  Column positions
grade toward the wedge corner (the interface / plate-base intersection,
where all three regions meet and the temperature field is near singular),

    dx(x) = min(h_coarse, h_slab + grading * |x - x_corner|),

and within every column the nodes are drawn from one shared y-ladder
graded the same way toward the plate-base level.  The shared ladder keeps
nodes of neighbouring columns horizontally aligned, so the thin cells that
appear where dx and dy differ stay right-angled instead of degenerating
into obtuse slivers.  Each column stacks up to three bands (slab, wedge,
plate) whose breakpoints sit exactly on the internal lines; neighbouring
columns are zipped band by band, so bands of unequal node count meet in
fans, and empty bands collapse to a shared node.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError, InvalidArgumentError
from ..mesh import Mesh

REGION_SLAB = 1
REGION_WEDGE = 2
REGION_PLATE = 3

EXTERIOR_MARKERS = {"inlet": 1, "top": 2, "right_plate": 3,
                    "right_wedge": 4, "bottom_outflow": 5}
INTERFACE_MARKER = 6


@dataclass
class SubductionGeometry:
    """Slab depth ``Z`` and plate depth ``Z_plate`` in km, dip ``alpha`` in
    radians, right extension ``delta_x`` beyond the slab toe, and the shape
    of the interface (``straight`` uses ``alpha``, ``curved`` the exponent
    ``n_slab`` with the curve pinned to (0, 0) and (Z, -Z))."""

    Z: float = 600.0
    alpha: float = np.pi / 4.0
    delta_x: float = 60.0
    Z_plate: float = 50.0
    slab_shape: str = "straight"
    n_slab: float = 2.5

    def __post_init__(self):
        if not self.Z > 0.0:
            raise InvalidArgumentError("slab depth Z must be positive")
        if not 0.0 < self.alpha < 0.5 * np.pi:
            raise InvalidArgumentError("dip angle must lie in (0, pi/2)")
        if not 0.0 < self.Z_plate < self.Z:
            raise InvalidArgumentError("need 0 < Z_plate < Z")
        if self.slab_shape not in ("straight", "curved"):
            raise InvalidArgumentError(
                f"unknown slab shape {self.slab_shape!r}")
        if self.slab_shape == "curved" and not self.n_slab > 1.0:
            raise InvalidArgumentError("curved slab needs n_slab > 1")

    @property
    def width(self):
        return self.x_bottom + self.delta_x

    @property
    def x_bottom(self):
        """Where the interface reaches the bottom ``y = -Z``."""
        if self.slab_shape == "straight":
            return self.Z / np.tan(self.alpha)
        return self.Z

    @property
    def x_corner(self):
        """Where the interface crosses the plate base ``y = -Z_plate``."""
        if self.slab_shape == "straight":
            return self.Z_plate / np.tan(self.alpha)
        return self.Z * (self.Z_plate / self.Z) ** (1.0 / self.n_slab)

    def interface_depth(self, x):
        """``d(x)``, clipped to the box so columns past the toe see -Z."""
        x = np.asarray(x, dtype=float)
        if self.slab_shape == "straight":
            d = -np.tan(self.alpha) * x
        else:
            d = -self.Z * (np.abs(x) / self.Z) ** self.n_slab
        return np.clip(d, -self.Z, 0.0)

    def downdip_tangent(self, x):
        """Unit tangent of the interface with positive x-component."""
        x = np.asarray(x, dtype=float)
        if self.slab_shape == "straight":
            slope = np.full(x.shape, -np.tan(self.alpha))
        else:
            with np.errstate(divide="ignore"):
                slope = -self.n_slab * (np.abs(x) / self.Z) \
                    ** (self.n_slab - 1.0)
        norm = np.hypot(1.0, slope)
        return np.stack([1.0 / norm, slope / norm], axis=-1)


def _graded(lo, hi, size_of, sample_step):
    """Partition [lo, hi] with local spacing ~ ``size_of(y)``.

    Integrates the node density 1/size on a fine sample, rounds the total
    to a whole interval count and places nodes at equal density increments;
    both endpoints are hit exactly.  A degenerate span yields the single
    point ``lo``.
    """
    span = hi - lo
    if span <= 1e-12:
        return np.array([lo])
    ns = max(int(np.ceil(span / sample_step)), 1) + 1
    s = np.linspace(lo, hi, ns)
    w = 1.0 / size_of(s)
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(s))])
    n = max(int(round(cum[-1])), 1)
    pts = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, s)
    pts[0], pts[-1] = lo, hi
    return pts


def _band_nodes(lo, hi, ladder):
    """Nodes of one column band: exact endpoints plus interior ladder
    levels, dropping a level that would sit too close to an endpoint."""
    if hi - lo <= 1e-12:
        return np.array([lo])
    inner = ladder[(ladder > lo) & (ladder < hi)]
    while inner.size:
        gap = inner[1] - inner[0] if inner.size > 1 else hi - inner[0]
        if inner[0] - lo >= 0.35 * gap:
            break
        inner = inner[1:]
    while inner.size:
        gap = inner[-1] - inner[-2] if inner.size > 1 else inner[-1] - lo
        if hi - inner[-1] >= 0.35 * gap:
            break
        inner = inner[:-1]
    return np.concatenate([[lo], inner, [hi]])


def _zip_bands(left_ids, left_y, right_ids, right_y, cells):
    """Triangulate the strip between two column bands of a shared span.

    Advances whichever side's next node sits lower (by the fractional
    position within its own band), which degrades gracefully to a fan when
    one side is a single shared node.
    """

    def params(y):
        if len(y) == 1:
            return np.array([0.0])
        return (y - y[0]) / (y[-1] - y[0])

    ta, tb = params(left_y), params(right_y)
    na, nb = len(left_ids), len(right_ids)
    i = j = 0
    while i < na - 1 or j < nb - 1:
        take_left = i < na - 1 and (j == nb - 1 or ta[i + 1] <= tb[j + 1])
        if take_left:
            cells.append((left_ids[i], right_ids[j], left_ids[i + 1]))
            i += 1
        else:
            cells.append((left_ids[i], right_ids[j], right_ids[j + 1]))
            j += 1


def generate_subduction_mesh(geom, h_coarse=35.0, h_slab=0.23,
                             grading=0.105):
    """Mesh the subduction box, conforming to interface and plate base.

    Cells carry region markers (slab / wedge / plate), exterior facets the
    markers inlet, top, right_plate, right_wedge and bottom_outflow, and
    the interface below the plate base is registered as interior facets
    (both sides, each with its own outward normal).
    """
    if not 0.0 < h_slab <= h_coarse:
        raise InvalidArgumentError("need 0 < h_slab <= h_coarse")
    zb, zp, wd = geom.Z, geom.Z_plate, geom.width
    xc, xb = geom.x_corner, geom.x_bottom
    step = 0.5 * h_slab

    def size_y(y):
        return np.minimum(h_coarse, h_slab + grading * np.abs(y + zp))

    def size_x(x):
        dx = np.minimum(h_coarse, h_slab + grading * np.abs(x - xc))
        # Where the interface is steep, narrow the columns so it drops at
        # most about one ladder row per column (keeps the zip cells from
        # degenerating at the curved slab's toe).
        tau = geom.downdip_tangent(np.minimum(x, xb))
        steep = np.abs(tau[..., 1]) / tau[..., 0]
        cap = size_y(geom.interface_depth(x)) / np.maximum(steep, 1.0)
        return np.where(x < xb, np.minimum(dx, cap), dx)

    # Column abscissae, split at the corner and the slab toe so both are
    # hit exactly, and one y-ladder shared by all columns.
    xs = [_graded(0.0, xc, size_x, step)]
    xs.append(_graded(xc, xb, size_x, step)[1:])
    xs.append(_graded(xb, wd, size_x, step)[1:])
    xs = np.concatenate(xs)
    ladder = _graded(-zb, 0.0, size_y, step)[1:-1]

    verts = []
    columns = []    # per column: dict of band -> (ids, y-values)
    for x in xs:
        b1 = float(geom.interface_depth(x))
        b2 = max(b1, -zp)
        spans = {REGION_SLAB: (-zb, b1), REGION_WEDGE: (b1, b2),
                 REGION_PLATE: (b2, 0.0)}
        bands = {}
        base = len(verts)
        prev_top = None
        for region in (REGION_SLAB, REGION_WEDGE, REGION_PLATE):
            lo, hi = spans[region]
            ys = _band_nodes(lo, hi, ladder)
            if prev_top is None:
                ids = base + np.arange(len(ys))
                verts.extend((x, y) for y in ys)
            elif len(ys) == 1:
                ids = prev_top[-1:]
                ys = np.array([verts[ids[0]][1]])
            else:
                start = len(verts)
                ids = np.concatenate(
                    [prev_top[-1:], start + np.arange(len(ys) - 1)])
                verts.extend((x, y) for y in ys[1:])
            bands[region] = (ids, ys)
            prev_top = ids
        columns.append(bands)

    cells, regions = [], []
    for ca, cb in zip(columns[:-1], columns[1:]):
        for region in (REGION_SLAB, REGION_WEDGE, REGION_PLATE):
            before = len(cells)
            _zip_bands(*ca[region], *cb[region], cells)
            regions.extend([region] * (len(cells) - before))

    mesh = Mesh(np.asarray(verts), np.asarray(cells, dtype=np.int64),
                region_markers=np.asarray(regions, dtype=np.int64))
    mesh.marker_ids = dict(EXTERIOR_MARKERS)
    mesh.marker_ids["interface"] = INTERFACE_MARKER
    tol = 1e-9 * zb

    def classify(mid):
        ids = np.zeros(len(mid), dtype=np.int64)
        ids[np.abs(mid[:, 1] + zb) < tol] = EXTERIOR_MARKERS["bottom_outflow"]
        right = np.abs(mid[:, 0] - wd) < tol
        ids[right & (mid[:, 1] < -zp)] = EXTERIOR_MARKERS["right_wedge"]
        ids[right & (mid[:, 1] > -zp)] = EXTERIOR_MARKERS["right_plate"]
        ids[np.abs(mid[:, 1]) < tol] = EXTERIOR_MARKERS["top"]
        ids[np.abs(mid[:, 0]) < tol] = EXTERIOR_MARKERS["inlet"]
        return ids

    mesh.classify_boundary(classify)
    if np.any(mesh.facet_marker == 0):
        raise GeometryError("unclassified exterior facet on subduction box")

    cells_i, locs_i = interface_sides(mesh, geom, below_plate=True)
    mesh.set_interior_facets(cells_i, locs_i,
                             np.full(len(cells_i), INTERFACE_MARKER))
    return mesh


def on_interface(geom, points, tol=None):
    """Boolean mask of points lying on the slab interface."""
    points = np.asarray(points, dtype=float)
    if tol is None:
        tol = 1e-9 * geom.Z
    return np.abs(points[:, 1] - geom.interface_depth(points[:, 0])) < tol


def _interface_edges(mesh, geom, below_plate):
    flag = on_interface(geom, mesh.vertices)
    ev = mesh.edges
    sel = flag[ev[:, 0]] & flag[ev[:, 1]]
    ymid = 0.5 * (mesh.vertices[ev[:, 0], 1] + mesh.vertices[ev[:, 1], 1])
    # The clipped depth function marks every bottom node past the slab toe
    # as "on the interface"; keep the interface strictly above the bottom.
    sel &= ymid > -geom.Z + 1e-9 * geom.Z
    if below_plate:
        sel &= ymid < -geom.Z_plate
    else:
        sel &= ymid > -geom.Z_plate
    return np.flatnonzero(sel)

def interface_sides(mesh, geom, below_plate=True):
    """(cells, local edges) of interface facets, one entry per side."""
    eids = _interface_edges(mesh, geom, below_plate)
    cells, locs = np.nonzero(np.isin(mesh.cell_edges, eids))
    return cells.astype(np.int64), locs.astype(np.int64)
