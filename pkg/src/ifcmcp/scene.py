"""Read-only scene context: compact summaries an LLM client reasons over.

Output dicts are built in the exact key order the wire format requires;
the service layer serializes them without re-sorting.
"""

from __future__ import annotations

from . import measure, schema
from .errors import NotADoor
from .model import IfcModel, classifications_of, owner_of, psets_of
from .step import EntityRef

DEFAULT_PAGE_LIMIT = 200


def _round(value: float) -> float:
    result = round(float(value), 9)
    return 0.0 if result == 0 else result


def _coords(point) -> list[float]:
    return [_round(v) for v in point]


def _name_of(model: IfcModel, entity_id: int) -> str:
    inst = model.entities[entity_id]
    index = schema.attribute_index(inst.class_name, "Name")
    if index is not None and index < len(inst.attributes):
        name = inst.attributes[index]
        if isinstance(name, str) and name:
            return name
    return "Unnamed"


def spatial_in_order(model: IfcModel) -> list[int]:
    ordered: list[int] = []
    if model.project_id is not None:
        ordered.append(model.project_id)
    for class_name, handle in (("IFCSITE", model.site_id),
                               ("IFCBUILDING", model.building_id)):
        ids = sorted(model.by_class.get(class_name, ()))
        if handle is not None and handle in ids:
            ids.remove(handle)
            ids.insert(0, handle)
        ordered.extend(ids)
    ordered.extend(model.storeys())
    return ordered


def products_in_order(model: IfcModel) -> list[int]:
    return sorted(
        entity_id
        for class_name in model.by_class
        if class_name in schema.PRODUCT_CLASSES
        for entity_id in model.by_class[class_name]
    )


def type_objects_in_order(model: IfcModel) -> list[int]:
    return sorted(
        entity_id
        for class_name in model.by_class
        if schema.is_type_object(class_name)
        for entity_id in model.by_class[class_name]
    )


def _object_summary(model: IfcModel, entity_id: int) -> dict:
    inst = model.entities[entity_id]
    camel = schema.camel_case(inst.class_name)
    flags = model.session_flags.get(entity_id)
    rep_index = schema.attribute_index(inst.class_name, "Representation")
    has_body = (
        rep_index is not None
        and rep_index < len(inst.attributes)
        and isinstance(inst.attributes[rep_index], EntityRef)
    )
    origin = model.placement_of(entity_id).origin
    return {
        "name": f"{camel}/{_name_of(model, entity_id)}",
        "type": "MESH" if has_body else "EMPTY",
        "location": _coords(origin),
        "visible": flags.visible if flags else True,
        "selected": flags.selected if flags else False,
        "guid": model.guid_of(entity_id) or "",
        "ifc_class": camel,
    }


def get_scene_info(model: IfcModel, offset: int = 0,
                   limit: int = DEFAULT_PAGE_LIMIT) -> dict:
    """Paginated object roster: spatial chain, then products, then types."""
    if offset < 0:
        offset = 0
    if limit < 1:
        limit = 1
    ordered = spatial_in_order(model) + products_in_order(model) \
        + type_objects_in_order(model)
    total = len(ordered)
    page = ordered[offset:offset + limit]
    effective_limit = min(limit, total)
    return {
        "count": len(page),
        "total": total,
        "offset": offset,
        "limit": effective_limit,
        "objects": [_object_summary(model, entity_id) for entity_id in page],
    }


def _relationships(model: IfcModel, entity_id: int) -> dict:
    rels: dict[str, object] = {}
    storey_id = model.storey_of(entity_id)
    if storey_id is not None:
        rels["contained_in"] = {
            "guid": model.guid_of(storey_id),
            "name": _name_of(model, storey_id),
        }
    openings = []
    for rel_id in sorted(model.by_class.get("IFCRELVOIDSELEMENT", ())):
        rel = model.entities[rel_id]
        relating, related = rel.attributes[4], rel.attributes[5]
        if isinstance(relating, EntityRef) and relating.id == entity_id:
            openings.append(model.guid_of(related.id))
        elif isinstance(related, EntityRef) and related.id == entity_id:
            rels["voids_wall"] = model.guid_of(relating.id)
    if openings:
        rels["openings"] = openings
    for rel_id in sorted(model.by_class.get("IFCRELFILLSELEMENT", ())):
        rel = model.entities[rel_id]
        relating, related = rel.attributes[4], rel.attributes[5]
        if isinstance(related, EntityRef) and related.id == entity_id:
            opening = model.entities[relating.id]
            rels["fills_opening"] = model.guid_of(opening.id)
            for rel2_id in sorted(model.by_class.get("IFCRELVOIDSELEMENT", ())):
                rel2 = model.entities[rel2_id]
                if isinstance(rel2.attributes[5], EntityRef) \
                        and rel2.attributes[5].id == opening.id:
                    rels["host_wall"] = model.guid_of(rel2.attributes[4].id)
        elif isinstance(relating, EntityRef) and relating.id == entity_id:
            rels["filled_by"] = model.guid_of(related.id)
    for rel_id in sorted(model.by_class.get("IFCRELDEFINESBYTYPE", ())):
        rel = model.entities[rel_id]
        related = rel.attributes[4] or ()
        if any(isinstance(r, EntityRef) and r.id == entity_id for r in related):
            type_id = rel.attributes[5].id
            rels["type"] = {
                "guid": model.guid_of(type_id),
                "name": _name_of(model, type_id),
            }
    return rels


def get_object_info(model: IfcModel, guid: str) -> dict:
    inst = model.require_guid(guid)
    placement = model.placement_of(inst.id)
    info: dict[str, object] = {
        "guid": guid,
        "ifc_class": schema.camel_case(inst.class_name),
        "name": _name_of(model, inst.id),
        "description": None,
        "placement": {
            "origin": _coords(placement.origin),
            "z_axis": _coords(placement.z_axis),
            "x_axis": _coords(placement.x_axis),
        },
    }
    desc_index = schema.attribute_index(inst.class_name, "Description")
    if desc_index is not None and desc_index < len(inst.attributes):
        info["description"] = inst.attributes[desc_index]
    box = measure.world_bbox(model, inst.id)
    if box is not None:
        lo, hi = box
        info["bounding_box"] = {
            "min": _coords(lo),
            "max": _coords(hi),
            "size": _coords((hi.x - lo.x, hi.y - lo.y, hi.z - lo.z)),
        }
    else:
        info["bounding_box"] = None
    info["property_sets"] = psets_of(model, inst.id)
    info["classifications"] = classifications_of(model, inst.id)
    info["relationships"] = _relationships(model, inst.id)
    info["owner"] = owner_of(model, inst.id)
    if inst.class_name == "IFCBUILDINGSTOREY":
        info["elevation"] = _round(model.storey_elevation(inst.id))
    return info


def get_ifc_scene_overview(model: IfcModel) -> dict:
    products = products_in_order(model)
    counts: dict[str, int] = {}
    for entity_id in products:
        camel = schema.camel_case(model.entities[entity_id].class_name)
        counts[camel] = counts.get(camel, 0) + 1
    for entity_id in type_objects_in_order(model):
        camel = schema.camel_case(model.entities[entity_id].class_name)
        counts[camel] = counts.get(camel, 0) + 1

    floor_area = 0.0
    for entity_id in sorted(model.by_class.get("IFCSLAB", ())):
        area = measure.element_area(model, entity_id)
        if area:
            floor_area += area

    bbox = None
    for entity_id in products:
        box = measure.world_bbox(model, entity_id)
        if box is None:
            continue
        lo, hi = box
        if bbox is None:
            bbox = [list(lo), list(hi)]
        else:
            bbox[0] = [min(a, b) for a, b in zip(bbox[0], lo)]
            bbox[1] = [max(a, b) for a, b in zip(bbox[1], hi)]

    def handle(entity_id: int | None) -> dict | None:
        if entity_id is None:
            return None
        return {"guid": model.guid_of(entity_id), "name": _name_of(model, entity_id)}

    return {
        "schema": model.header.file_schema[0] if model.header.file_schema else "IFC4",
        "class_counts": dict(sorted(counts.items())),
        "product_count": len(products),
        "spatial": {
            "project": handle(model.project_id),
            "site": handle(model.site_id),
            "building": handle(model.building_id),
        },
        "storeys": [
            {
                "guid": model.guid_of(storey_id),
                "name": _name_of(model, storey_id),
                "elevation": _round(model.storey_elevation(storey_id)),
            }
            for storey_id in model.storeys()
        ],
        "guid_count": len(model.by_guid),
        "total_floor_area": _round(floor_area),
        "bounding_box": None if bbox is None else {
            "min": _coords(bbox[0]), "max": _coords(bbox[1]),
        },
    }


def get_door_properties(model: IfcModel, guid: str) -> dict:
    inst = model.require_guid(guid)
    if inst.class_name != "IFCDOOR":
        raise NotADoor(f"{guid} is {schema.camel_case(inst.class_name)}, not IfcDoor")
    body = measure.body_of(model, inst.id)
    width = height = None
    if body is not None and body["kind"] == "extrusion":
        x0, _y0, x1, _y1 = body["profile"]["bbox"]
        width = _round(x1 - x0)
        height = _round(body["depth"])
    rels = _relationships(model, inst.id)
    host_wall = rels.get("host_wall")
    sill = 0.0
    if host_wall:
        wall = model.require_guid(host_wall)
        sill = _round(model.placement_of(inst.id).origin.z
                      - model.placement_of(wall.id).origin.z)
    storey_id = model.storey_of(inst.id)
    return {
        "guid": guid,
        "name": _name_of(model, inst.id),
        "width": width,
        "height": height,
        "sill_height": sill,
        "host_wall": host_wall,
        "storey": _name_of(model, storey_id) if storey_id is not None else None,
        "swing": None,
    }
