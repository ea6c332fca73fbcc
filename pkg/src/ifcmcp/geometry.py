"""Parametric solid construction and geometric measurement.

All coordinates are metres. Polygons are normalized to counter-clockwise
order on construction; point equality uses a 1e-6 m tolerance throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

from .errors import (
    DegenerateFace,
    DegeneratePolygon,
    EmptyMesh,
    NonPositiveDepth,
    ZeroLengthAxis,
)
from .step import EntityRef, EnumToken

if TYPE_CHECKING:
    from .model import IfcModel

POINT_TOL = 1e-6
MIN_FACE_AREA = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


class Point3(NamedTuple):
    x: float
    y: float
    z: float


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def dist2(a: Point2, b: Point2) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def _cross(o: Point2, a: Point2, b: Point2) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def _segments_cross(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool:
    """Proper intersection test for non-adjacent polygon edges."""
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


class Polygon2:
    """Simple polygon, stored counter-clockwise.

    Consecutive vertices closer than 1e-6 m are merged; reversed input is
    accepted and flipped so that ``signed_area`` is always positive.
    """

    __slots__ = ("vertices",)

    def __init__(self, points):
        pts = [Point2(float(x), float(y)) for x, y in points]
        if any(not _finite(p.x, p.y) for p in pts):
            raise DegeneratePolygon("polygon has non-finite coordinates")
        cleaned: list[Point2] = []
        for p in pts:
            if not cleaned or dist2(cleaned[-1], p) >= POINT_TOL:
                cleaned.append(p)
        while len(cleaned) > 1 and dist2(cleaned[0], cleaned[-1]) < POINT_TOL:
            cleaned.pop()
        if len(cleaned) < 3:
            raise DegeneratePolygon("polygon needs at least 3 distinct vertices")
        area2 = sum(
            cleaned[i].x * cleaned[(i + 1) % len(cleaned)].y
            - cleaned[(i + 1) % len(cleaned)].x * cleaned[i].y
            for i in range(len(cleaned))
        )
        if abs(area2) < 2 * MIN_FACE_AREA:
            raise DegeneratePolygon("polygon has zero area")
        if area2 < 0:
            cleaned.reverse()
        n = len(cleaned)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_cross(cleaned[i], cleaned[(i + 1) % n],
                                   cleaned[j], cleaned[(j + 1) % n]):
                    raise DegeneratePolygon("polygon is self-intersecting")
        self.vertices = tuple(cleaned)

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polygon2) and other.vertices == self.vertices

    def __repr__(self) -> str:
        return f"Polygon2({list(self.vertices)!r})"

    def edges(self):
        verts = self.vertices
        for i, a in enumerate(verts):
            yield a, verts[(i + 1) % len(verts)]

    def perimeter(self) -> float:
        return sum(dist2(a, b) for a, b in self.edges())

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def is_axis_aligned_rect(self) -> bool:
        if len(self.vertices) != 4:
            return False
        return all(
            abs(a.x - b.x) < POINT_TOL or abs(a.y - b.y) < POINT_TOL
            for a, b in self.edges()
        )


def polygon_area(poly: Polygon2) -> float:
    """Shoelace area; positive because polygons are stored CCW."""
    verts = poly.vertices
    area2 = sum(
        verts[i].x * verts[(i + 1) % len(verts)].y
        - verts[(i + 1) % len(verts)].x * verts[i].y
        for i in range(len(verts))
    )
    return area2 / 2.0


@dataclass(frozen=True)
class Placement:
    """Right-handed local frame: y-axis is implied by z cross x."""

    origin: Point3 = Point3(0.0, 0.0, 0.0)
    z_axis: Point3 = Point3(0.0, 0.0, 1.0)
    x_axis: Point3 = Point3(1.0, 0.0, 0.0)

    def __post_init__(self):
        for axis in (self.z_axis, self.x_axis):
            norm = math.sqrt(axis.x ** 2 + axis.y ** 2 + axis.z ** 2)
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"axis {axis} is not unit length")
        dot = (self.z_axis.x * self.x_axis.x + self.z_axis.y * self.x_axis.y
               + self.z_axis.z * self.x_axis.z)
        if abs(dot) > 1e-9:
            raise ValueError("placement axes are not orthogonal")

    @property
    def y_axis(self) -> Point3:
        z, x = self.z_axis, self.x_axis
        return Point3(z.y * x.z - z.z * x.y, z.z * x.x - z.x * x.z,
                      z.x * x.y - z.y * x.x)

    def to_world(self, p: Point3) -> Point3:
        x, y, z = self.x_axis, self.y_axis, self.z_axis
        return Point3(
            self.origin.x + p.x * x.x + p.y * y.x + p.z * z.x,
            self.origin.y + p.x * x.y + p.y * y.y + p.z * z.y,
            self.origin.z + p.x * x.z + p.y * y.z + p.z * z.z,
        )

    def rotate(self, v: Point3) -> Point3:
        """Apply only the rotational part of the frame to a vector."""
        x, y, z = self.x_axis, self.y_axis, self.z_axis
        return Point3(
            v.x * x.x + v.y * y.x + v.z * z.x,
            v.x * x.y + v.y * y.y + v.z * z.y,
            v.x * x.z + v.y * y.z + v.z * z.z,
        )


def _tri_area3(a: Point3, b: Point3, c: Point3) -> float:
    ux, uy, uz = b.x - a.x, b.y - a.y, b.z - a.z
    vx, vy, vz = c.x - a.x, c.y - a.y, c.z - a.z
    cx, cy, cz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
    return 0.5 * math.sqrt(cx * cx + cy * cy + cz * cz)


class TriMesh:
    """Indexed triangle mesh; validates indices and face areas on build."""

    __slots__ = ("vertices", "faces")

    def __init__(self, vertices, faces):
        self.vertices = [Point3(float(x), float(y), float(z)) for x, y, z in vertices]
        self.faces: list[tuple[int, int, int]] = []
        if not self.vertices or not faces:
            raise EmptyMesh("mesh has no vertices or faces")
        for v in self.vertices:
            if not _finite(v.x, v.y, v.z):
                raise EmptyMesh("mesh has non-finite coordinates")
        n = len(self.vertices)
        for index, face in enumerate(faces):
            tri = tuple(int(i) for i in face)
            if len(tri) != 3:
                raise DegenerateFace(index, f"face {index} is not a triangle")
            if any(i < 0 or i >= n for i in tri):
                raise DegenerateFace(index, f"face {index} has out-of-range vertex index")
            a, b, c = (self.vertices[i] for i in tri)
            if _tri_area3(a, b, c) <= MIN_FACE_AREA:
                raise DegenerateFace(index, f"face {index} is degenerate")
            self.faces.append(tri)

    def is_watertight(self) -> bool:
        """Every undirected edge used exactly twice, once per direction."""
        directed: dict[tuple[int, int], int] = {}
        for a, b, c in self.faces:
            for u, v in ((a, b), (b, c), (c, a)):
                directed[(u, v)] = directed.get((u, v), 0) + 1
        for (u, v), count in directed.items():
            if count != 1 or directed.get((v, u), 0) != 1:
                return False
        return True

    def volume(self) -> float:
        """Signed volume via divergence theorem (positive when outward-wound)."""
        total = 0.0
        for a, b, c in self.faces:
            p, q, r = self.vertices[a], self.vertices[b], self.vertices[c]
            total += (p.x * (q.y * r.z - q.z * r.y)
                      - p.y * (q.x * r.z - q.z * r.x)
                      + p.z * (q.x * r.y - q.y * r.x))
        return total / 6.0

    def bounds(self) -> tuple[Point3, Point3]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        zs = [v.z for v in self.vertices]
        return Point3(min(xs), min(ys), min(zs)), Point3(max(xs), max(ys), max(zs))

    def translated(self, dx: float, dy: float, dz: float) -> "TriMesh":
        return TriMesh([(v.x + dx, v.y + dy, v.z + dz) for v in self.vertices],
                       list(self.faces))


def ear_clip(points: list[Point2]) -> list[tuple[int, int, int]]:
    """Triangulate a simple CCW polygon by ear clipping.

    Collinear vertices are tolerated: when no strictly convex ear exists
    the flattest corner is removed without emitting a triangle.
    """
    n = len(points)
    if n < 3:
        raise DegeneratePolygon("cannot triangulate fewer than 3 points")
    order = list(range(n))
    triangles: list[tuple[int, int, int]] = []
    guard = 0
    while len(order) > 3:
        guard += 1
        if guard > 4 * n * n:
            raise DegeneratePolygon("ear clipping failed to converge")
        clipped = False
        m = len(order)
        for k in range(m):
            i_prev, i_cur, i_next = order[k - 1], order[k], order[(k + 1) % m]
            a, b, c = points[i_prev], points[i_cur], points[i_next]
            cross = _cross(a, b, c)
            if cross <= 1e-12:
                continue
            if any(
                _point_in_tri(points[j], a, b, c)
                for j in order
                if j not in (i_prev, i_cur, i_next)
            ):
                continue
            triangles.append((i_prev, i_cur, i_next))
            order.pop(k)
            clipped = True
            break
        if not clipped:
            # only collinear/reflex corners left: drop the flattest corner
            flattest = min(
                range(len(order)),
                key=lambda k: abs(_cross(points[order[k - 1]], points[order[k]],
                                         points[order[(k + 1) % len(order)]])),
            )
            a, b, c = (points[order[flattest - 1]], points[order[flattest]],
                       points[order[(flattest + 1) % len(order)]])
            if abs(_cross(a, b, c)) > 1e-9:
                raise DegeneratePolygon("ear clipping stuck on a non-flat corner")
            order.pop(flattest)
    a, b, c = order
    if _cross(points[a], points[b], points[c]) > 1e-12:
        triangles.append((a, b, c))
    return triangles


def _point_in_tri(p: Point2, a: Point2, b: Point2, c: Point2) -> bool:
    # inclusive: a vertex on the ear boundary must block the ear too
    d1 = _cross(a, b, p)
    d2 = _cross(b, c, p)
    d3 = _cross(c, a, p)
    return d1 >= -1e-12 and d2 >= -1e-12 and d3 >= -1e-12


def box_mesh(sx: float, sy: float, sz: float,
             origin: Point3 = Point3(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box with outward-wound faces, corner at ``origin``."""
    ox, oy, oz = origin
    v = [
        (ox, oy, oz), (ox + sx, oy, oz), (ox + sx, oy + sy, oz), (ox, oy + sy, oz),
        (ox, oy, oz + sz), (ox + sx, oy, oz + sz),
        (ox + sx, oy + sy, oz + sz), (ox, oy + sy, oz + sz),
    ]
    f = [
        (0, 2, 1), (0, 3, 2),  # bottom
        (4, 5, 6), (4, 6, 7),  # top
        (0, 1, 5), (0, 5, 4),  # front
        (1, 2, 6), (1, 6, 5),  # right
        (2, 3, 7), (2, 7, 6),  # back
        (3, 0, 4), (3, 4, 7),  # left
    ]
    return TriMesh(v, f)


def prism_mesh(profile: Polygon2, depth: float, axis: str = "z") -> TriMesh:
    """Extrude a CCW profile into a closed mesh.

    ``axis='z'``: profile in XY, extruded +Z. ``axis='y'``: profile in XZ
    (x right, second coordinate up), extruded +Y — used for stair flights.
    """
    if depth <= 0:
        raise NonPositiveDepth(f"extrusion depth must be positive, got {depth}")
    pts = list(profile.vertices)
    n = len(pts)
    if axis == "z":
        bottom = [(p.x, p.y, 0.0) for p in pts]
        top = [(p.x, p.y, depth) for p in pts]
    elif axis == "y":
        bottom = [(p.x, 0.0, p.y) for p in pts]
        top = [(p.x, depth, p.y) for p in pts]
    else:
        raise ValueError(f"unsupported extrusion axis {axis!r}")
    verts = bottom + top
    tris = ear_clip(pts)
    faces: list[tuple[int, int, int]] = []
    if axis == "z":
        for a, b, c in tris:
            faces.append((a, c, b))            # bottom, wound downward
            faces.append((n + a, n + b, n + c))  # top, wound upward
        for i in range(n):
            j = (i + 1) % n
            faces.append((i, j, n + j))
            faces.append((i, n + j, n + i))
    else:
        # profile CCW in XZ seen from -Y; bottom (y=0) faces the viewer
        for a, b, c in tris:
            faces.append((a, b, c))
            faces.append((n + a, n + c, n + b))
        for i in range(n):
            j = (i + 1) % n
            faces.append((i, n + j, j))
            faces.append((i, n + i, n + j))
    return TriMesh(verts, faces)


def wall_axis_to_profile(start: Point2, end: Point2,
                         thickness: float) -> tuple[Polygon2, Placement]:
    """Rectangle profile centred on the wall axis plus its local frame."""
    start = Point2(*start)
    end = Point2(*end)
    length = dist2(start, end)
    if length < POINT_TOL:
        raise ZeroLengthAxis("wall start and end points coincide")
    if thickness <= 0:
        raise DegeneratePolygon(f"thickness must be positive, got {thickness}")
    half = thickness / 2.0
    profile = Polygon2([(0.0, -half), (length, -half), (length, half), (0.0, half)])
    dx, dy = (end.x - start.x) / length, (end.y - start.y) / length
    placement = Placement(
        origin=Point3(start.x, start.y, 0.0),
        z_axis=Point3(0.0, 0.0, 1.0),
        x_axis=Point3(dx, dy, 0.0),
    )
    return profile, placement


# --- entity emission (representation subgraphs) ---

def _xy(v: float) -> float:
    # collapse -0.0 so written coordinates are stable
    return v + 0.0 if v != 0 else 0.0


def emit_axis2placement3d(model: "IfcModel", origin: Point3,
                          z_axis: Point3 | None = None,
                          x_axis: Point3 | None = None) -> int:
    location = model.add("IFCCARTESIANPOINT",
                         [(_xy(origin.x), _xy(origin.y), _xy(origin.z))])
    axis = ref_dir = None
    if z_axis is not None and tuple(z_axis) != (0.0, 0.0, 1.0):
        axis = EntityRef(model.add("IFCDIRECTION", [(z_axis.x, z_axis.y, z_axis.z)]))
    if x_axis is not None and tuple(x_axis) != (1.0, 0.0, 0.0):
        ref_dir = EntityRef(model.add("IFCDIRECTION", [(x_axis.x, x_axis.y, x_axis.z)]))
    if axis is None and ref_dir is not None:
        axis = EntityRef(model.add("IFCDIRECTION", [(0.0, 0.0, 1.0)]))
    return model.add("IFCAXIS2PLACEMENT3D", [EntityRef(location), axis, ref_dir])


def emit_local_placement(model: "IfcModel", placement: Placement,
                         parent_id: int | None = None) -> int:
    a2p = emit_axis2placement3d(model, placement.origin, placement.z_axis,
                                placement.x_axis)
    parent = EntityRef(parent_id) if parent_id is not None else None
    return model.add("IFCLOCALPLACEMENT", [parent, EntityRef(a2p)])


def _emit_profile(model: "IfcModel", poly: Polygon2) -> int:
    if poly.is_axis_aligned_rect():
        x0, y0, x1, y1 = poly.bounds()
        centre = model.add("IFCCARTESIANPOINT",
                           [(_xy((x0 + x1) / 2.0), _xy((y0 + y1) / 2.0))])
        position = model.add("IFCAXIS2PLACEMENT2D", [EntityRef(centre), None])
        return model.add(
            "IFCRECTANGLEPROFILEDEF",
            [EnumToken("AREA"), None, EntityRef(position), x1 - x0, y1 - y0],
        )
    point_ids = [
        model.add("IFCCARTESIANPOINT", [(_xy(p.x), _xy(p.y))]) for p in poly.vertices
    ]
    point_ids.append(point_ids[0])  # closed curve repeats the first point
    polyline = model.add("IFCPOLYLINE", [tuple(EntityRef(i) for i in point_ids)])
    return model.add(
        "IFCARBITRARYCLOSEDPROFILEDEF",
        [EnumToken("AREA"), None, EntityRef(polyline)],
    )


def extrude_profile(model: "IfcModel", poly: Polygon2, depth: float,
                    direction: Point3 = Point3(0.0, 0.0, 1.0)) -> int:
    """Emit a swept-solid body representation; returns the product shape id."""
    if depth <= 0:
        raise NonPositiveDepth(f"extrusion depth must be positive, got {depth}")
    profile = _emit_profile(model, poly)
    position = emit_axis2placement3d(model, Point3(0.0, 0.0, 0.0))
    dir_id = model.add("IFCDIRECTION", [(direction.x, direction.y, direction.z)])
    solid = model.add(
        "IFCEXTRUDEDAREASOLID",
        [EntityRef(profile), EntityRef(position), EntityRef(dir_id), float(depth)],
    )
    rep = model.add(
        "IFCSHAPEREPRESENTATION",
        [EntityRef(model.context_id), "Body", "SweptSolid", (EntityRef(solid),)],
    )
    return model.add("IFCPRODUCTDEFINITIONSHAPE", [None, None, (EntityRef(rep),)])


def mesh_to_brep(model: "IfcModel", mesh: TriMesh) -> int:
    """Emit a faceted-brep body for a triangle mesh; vertices deduplicated."""
    key_to_id: dict[tuple[float, float, float], int] = {}
    ids: list[int] = []
    for v in mesh.vertices:
        key = (round(v.x, 9), round(v.y, 9), round(v.z, 9))
        point_id = key_to_id.get(key)
        if point_id is None:
            point_id = model.add("IFCCARTESIANPOINT", [(_xy(v.x), _xy(v.y), _xy(v.z))])
            key_to_id[key] = point_id
        ids.append(point_id)
    face_ids = []
    for index, (a, b, c) in enumerate(mesh.faces):
        if len({ids[a], ids[b], ids[c]}) < 3:
            raise DegenerateFace(index, f"face {index} collapses after vertex dedup")
        loop = model.add("IFCPOLYLOOP",
                         [(EntityRef(ids[a]), EntityRef(ids[b]), EntityRef(ids[c]))])
        bound = model.add("IFCFACEOUTERBOUND", [EntityRef(loop), True])
        face_ids.append(model.add("IFCFACE", [(EntityRef(bound),)]))
    shell = model.add("IFCCLOSEDSHELL", [tuple(EntityRef(i) for i in face_ids)])
    brep = model.add("IFCFACETEDBREP", [EntityRef(shell)])
    rep = model.add(
        "IFCSHAPEREPRESENTATION",
        [EntityRef(model.context_id), "Body", "Brep", (EntityRef(brep),)],
    )
    return model.add("IFCPRODUCTDEFINITIONSHAPE", [None, None, (EntityRef(rep),)])
