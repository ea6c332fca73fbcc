"""Headless 2D renderers: orthographic plan sections and elevations as SVG.

Deterministic by construction: elements are emitted in entity-id order,
coordinates formatted with fixed precision, 50 px per metre, y flipped.
Product GlobalIds are embedded as element ids so clients can hit-test.
"""

from __future__ import annotations

import math

from . import measure
from .errors import EmptyModel, UnknownGuid
from .geometry import Point2, Point3
from .model import IfcModel
from .scene import _name_of, products_in_order
from .step import EntityRef

SCALE = 50.0  # px per metre
MARGIN = 1.0  # metres of padding around the content extents

_WALL_FILL = "#4a4a4a"
_SLAB_STROKE = "#808080"
_GENERIC_FILL = "#c8c8c8"
_GLYPH_STROKE = "#1a1a1a"


def _fmt(value: float) -> str:
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


class _Canvas:
    def __init__(self, min_x: float, min_y: float, max_x: float, max_y: float):
        self.min_x = min_x - MARGIN
        self.max_y = max_y + MARGIN
        self.width = (max_x - min_x + 2 * MARGIN) * SCALE
        self.height = (max_y - min_y + 2 * MARGIN) * SCALE
        self.parts: list[str] = []

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.min_x) * SCALE, (self.max_y - y) * SCALE

    def path(self, points, fill: str = "none", stroke: str = "none",
             width: float = 1.0, element_id: str | None = None,
             close: bool = True, title: str | None = None):
        coords = [self.to_px(p[0], p[1]) for p in points]
        d = "M" + " L".join(f"{_fmt(x)},{_fmt(y)}" for x, y in coords)
        if close:
            d += " Z"
        attrs = f' id="{element_id}"' if element_id else ""
        body = f'<path{attrs} d="{d}" fill="{fill}" stroke="{stroke}" stroke-width="{_fmt(width)}"/>'
        if title:
            body = (f'<g>{body}<title>{title}</title></g>')
        self.parts.append(body)

    def line(self, a, b, stroke: str = _GLYPH_STROKE, width: float = 1.0):
        x1, y1 = self.to_px(a[0], a[1])
        x2, y2 = self.to_px(b[0], b[1])
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"/>'
        )

    def arc(self, centre, radius: float, start_deg: float, end_deg: float,
            stroke: str = _GLYPH_STROKE):
        a0 = math.radians(start_deg)
        a1 = math.radians(end_deg)
        sx, sy = self.to_px(centre[0] + radius * math.cos(a0),
                            centre[1] + radius * math.sin(a0))
        ex, ey = self.to_px(centre[0] + radius * math.cos(a1),
                            centre[1] + radius * math.sin(a1))
        r = radius * SCALE
        self.parts.append(
            f'<path d="M{_fmt(sx)},{_fmt(sy)} A{_fmt(r)},{_fmt(r)} 0 0 1 '
            f'{_fmt(ex)},{_fmt(ey)}" fill="none" stroke="{stroke}" stroke-width="1.00"/>'
        )

    def open_group(self, element_id: str, title: str):
        self.parts.append(f'<g id="{element_id}"><title>{title}</title>')

    def close_group(self):
        self.parts.append("</g>")

    def render(self) -> str:
        header = (
            '<svg xmlns="http://www.w3.org/2000/svg" '
            f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}" '
            f'width="{_fmt(self.width)}" height="{_fmt(self.height)}">'
        )
        return "\n".join([header] + self.parts + ["</svg>"])


def _wall_frame(axis) -> tuple[Point2, Point2, Point2]:
    """2D origin, unit axis direction and unit normal of a wall."""
    start = Point2(axis["start"].x, axis["start"].y)
    end = Point2(axis["end"].x, axis["end"].y)
    length = axis["length"]
    direction = Point2((end.x - start.x) / length, (end.y - start.y) / length)
    normal = Point2(-direction.y, direction.x)
    return start, direction, normal


def _axis_point(start: Point2, direction: Point2, normal: Point2,
                along: float, across: float) -> tuple[float, float]:
    return (start.x + direction.x * along + normal.x * across,
            start.y + direction.y * along + normal.y * across)


def _openings_of_wall(model: IfcModel, wall_id: int):
    """(opening_id, filler_id | None, filler_class | None) per voids rel."""
    found = []
    for rel_id in sorted(model.by_class.get("IFCRELVOIDSELEMENT", ())):
        rel = model.entities[rel_id]
        relating, related = rel.attributes[4], rel.attributes[5]
        if not isinstance(relating, EntityRef) or relating.id != wall_id:
            continue
        opening_id = related.id
        filler_id = filler_class = None
        for fill_id in sorted(model.by_class.get("IFCRELFILLSELEMENT", ())):
            fill = model.entities[fill_id]
            if isinstance(fill.attributes[4], EntityRef) \
                    and fill.attributes[4].id == opening_id:
                filler_id = fill.attributes[5].id
                filler_class = model.entities[filler_id].class_name
        found.append((opening_id, filler_id, filler_class))
    return found


def render_plan(model: IfcModel, storey_guid: str | None = None,
                cut_height: float = 1.2) -> str:
    """Top-down section at storey elevation + cut height."""
    products = products_in_order(model)
    if not products:
        raise EmptyModel("the model contains no products to render")
    if storey_guid is not None:
        storey = model.require_guid(storey_guid)
        if storey.class_name != "IFCBUILDINGSTOREY":
            raise UnknownGuid(storey_guid)
        storey_id = storey.id
    else:
        storey_id = model.default_storey()
    cut_z = model.storey_elevation(storey_id) + cut_height

    walls = []
    slabs = []
    generic = []
    for entity_id in products:
        inst = model.entities[entity_id]
        if inst.class_name in ("IFCWALL", "IFCWALLSTANDARDCASE"):
            axis = measure.wall_axis(model, entity_id)
            box = measure.world_bbox(model, entity_id)
            if axis is not None and box is not None \
                    and box[0].z - 1e-9 <= cut_z <= box[1].z + 1e-9:
                walls.append((entity_id, axis))
            continue
        if inst.class_name == "IFCSLAB":
            if model.storey_of(entity_id) == storey_id:
                slabs.append(entity_id)
            continue
        if inst.class_name in ("IFCDOOR", "IFCWINDOW"):
            continue  # rendered as part of their host wall
        box = measure.world_bbox(model, entity_id)
        if box is not None and box[0].z - 1e-9 <= cut_z <= box[1].z + 1e-9:
            generic.append((entity_id, box))

    # extents: wall axes + slab footprints + generic bboxes, 1 m margin
    xs: list[float] = []
    ys: list[float] = []
    for _entity_id, axis in walls:
        xs.extend((axis["start"].x, axis["end"].x))
        ys.extend((axis["start"].y, axis["end"].y))
    for entity_id in slabs:
        box = measure.world_bbox(model, entity_id)
        if box is not None:
            xs.extend((box[0].x, box[1].x))
            ys.extend((box[0].y, box[1].y))
    for _entity_id, box in generic:
        xs.extend((box[0].x, box[1].x))
        ys.extend((box[0].y, box[1].y))
    if not xs:
        raise EmptyModel("nothing intersects the requested plan cut")
    canvas = _Canvas(min(xs), min(ys), max(xs), max(ys))

    for entity_id in slabs:
        body = measure.body_of(model, entity_id)
        if body is None or body["kind"] != "extrusion":
            continue
        placement = model.placement_of(entity_id)
        profile = body["profile"]
        if profile["kind"] == "polygon":
            pts = [placement.to_world(Point3(p.x, p.y, 0.0))
                   for p in profile["polygon"].vertices]
        else:
            x0, y0, x1, y1 = profile["bbox"]
            pts = [placement.to_world(Point3(x, y, 0.0))
                   for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
        canvas.path([(p.x, p.y) for p in pts], fill="none", stroke=_SLAB_STROKE,
                    width=1.5, element_id=model.guid_of(entity_id),
                    title=_name_of(model, entity_id))

    for entity_id, axis in walls:
        start, direction, normal = _wall_frame(axis)
        half = axis["thickness"] / 2.0
        length = axis["length"]
        corners = [
            _axis_point(start, direction, normal, 0.0, -half),
            _axis_point(start, direction, normal, length, -half),
            _axis_point(start, direction, normal, length, half),
            _axis_point(start, direction, normal, 0.0, half),
        ]
        canvas.open_group(model.guid_of(entity_id), _name_of(model, entity_id))
        canvas.path(corners, fill=_WALL_FILL)
        canvas.close_group()

        for opening_id, filler_id, filler_class in _openings_of_wall(model, entity_id):
            box = measure.world_bbox(model, opening_id)
            if box is None or not (box[0].z - 1e-9 <= cut_z <= box[1].z + 1e-9):
                continue
            body = measure.body_of(model, opening_id)
            if body is None or body["kind"] != "extrusion":
                continue
            x0, _y0, x1, _y1 = body["profile"]["bbox"]
            local = model.placement_of(opening_id).origin
            wall_origin = axis["placement"].origin
            along0 = (local.x - wall_origin.x) * direction.x \
                + (local.y - wall_origin.y) * direction.y + x0
            along1 = along0 + (x1 - x0)
            gap = [
                _axis_point(start, direction, normal, along0, -half - 0.01),
                _axis_point(start, direction, normal, along1, -half - 0.01),
                _axis_point(start, direction, normal, along1, half + 0.01),
                _axis_point(start, direction, normal, along0, half + 0.01),
            ]
            canvas.path(gap, fill="#ffffff")
            width = along1 - along0
            if filler_class == "IFCDOOR":
                canvas.open_group(model.guid_of(filler_id),
                                  _name_of(model, filler_id))
                hinge = _axis_point(start, direction, normal, along0, 0.0)
                leaf_end = _axis_point(start, direction, normal, along0, width)
                canvas.line(hinge, leaf_end)
                base_angle = math.degrees(math.atan2(direction.y, direction.x))
                canvas.arc(hinge, width, base_angle, base_angle + 90.0)
                canvas.close_group()
            elif filler_class == "IFCWINDOW":
                canvas.open_group(model.guid_of(filler_id),
                                  _name_of(model, filler_id))
                for across in (-half, 0.0, half):
                    canvas.line(
                        _axis_point(start, direction, normal, along0, across),
                        _axis_point(start, direction, normal, along1, across),
                    )
                canvas.close_group()

    for entity_id, box in generic:
        lo, hi = box
        canvas.path(
            [(lo.x, lo.y), (hi.x, lo.y), (hi.x, hi.y), (lo.x, hi.y)],
            fill="none", stroke=_SLAB_STROKE, width=1.0,
            element_id=model.guid_of(entity_id),
            title=_name_of(model, entity_id),
        )

    return canvas.render()


_VIEWS = {
    # screen_x basis, depth basis (pointing away from the viewer)
    "south": (Point3(1.0, 0.0, 0.0), Point3(0.0, 1.0, 0.0)),
    "north": (Point3(-1.0, 0.0, 0.0), Point3(0.0, -1.0, 0.0)),
    "east": (Point3(0.0, 1.0, 0.0), Point3(-1.0, 0.0, 0.0)),
    "west": (Point3(0.0, -1.0, 0.0), Point3(1.0, 0.0, 0.0)),
}


def render_elevation(model: IfcModel, view: str = "south") -> str:
    """Orthographic elevation; products painted back-to-front."""
    if view not in _VIEWS:
        raise ValueError(f"view must be one of {sorted(_VIEWS)}, got {view!r}")
    right, depth_axis = _VIEWS[view]
    products = products_in_order(model)
    if not products:
        raise EmptyModel("the model contains no products to render")

    def project(p: Point3) -> tuple[float, float, float]:
        sx = p.x * right.x + p.y * right.y + p.z * right.z
        depth = p.x * depth_axis.x + p.y * depth_axis.y + p.z * depth_axis.z
        return sx, p.z, depth

    items = []
    for entity_id in products:
        mesh = measure.world_mesh(model, entity_id)
        if mesh is None:
            continue
        projected = [project(v) for v in mesh.vertices]
        mean_depth = sum(p[2] for p in projected) / len(projected)
        items.append((mean_depth, entity_id, mesh, projected))
    if not items:
        raise EmptyModel("no product has renderable geometry")

    xs = [p[0] for _d, _e, _m, proj in items for p in proj]
    zs = [p[1] for _d, _e, _m, proj in items for p in proj]
    canvas = _Canvas(min(xs), min(zs), max(xs), max(zs))

    # far products first; nearer ones paint over them
    items.sort(key=lambda item: (-item[0], item[1]))
    for _depth, entity_id, mesh, projected in items:
        faces = []
        for index, (a, b, c) in enumerate(mesh.faces):
            pa, pb, pc = mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]
            ux, uy, uz = pb.x - pa.x, pb.y - pa.y, pb.z - pa.z
            vx, vy, vz = pc.x - pa.x, pc.y - pa.y, pc.z - pa.z
            nx, ny, nz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
            facing = nx * depth_axis.x + ny * depth_axis.y + nz * depth_axis.z
            if facing >= -1e-9:
                continue  # back or edge-on face
            face_depth = (projected[a][2] + projected[b][2] + projected[c][2]) / 3.0
            faces.append((face_depth, index, (a, b, c)))
        if not faces:
            continue
        faces.sort(key=lambda f: (-f[0], f[1]))
        canvas.open_group(model.guid_of(entity_id), _name_of(model, entity_id))
        for _fd, _index, (a, b, c) in faces:
            canvas.path(
                [(projected[i][0], projected[i][1]) for i in (a, b, c)],
                fill=_GENERIC_FILL, stroke=_GLYPH_STROKE, width=0.5,
            )
        canvas.close_group()
    return canvas.render()
