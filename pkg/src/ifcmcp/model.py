"""Typed model layer over the STEP entity graph.

Owns the spatial hierarchy, relationship management, property sets,
classifications, attribute edits, deletion with reference-counted
resource cleanup, and per-session display flags (which are never
persisted to file).
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass

from . import schema
from .errors import (
    CannotDeleteSpatial,
    EmptySpec,
    InvalidParams,
    UnknownAttribute,
    UnknownGuid,
)
from .geometry import Placement, Point3
from .guid import GuidGenerator, is_guid
from .step import (
    DERIVED,
    EntityInstance,
    EntityRef,
    EnumToken,
    StepHeader,
    TypedValue,
    iter_refs,
    parse_step,
    write_step,
)

EDITABLE_ATTRIBUTES = ("Name", "Description", "ObjectType", "LongName", "Tag")

_FIXED_TIMESTAMP = "2024-01-01T00:00:00"


@dataclass
class PropertySpec:
    pset_name: str
    properties: list[tuple[str, object, str | None]]

    def validate(self):
        if not self.pset_name:
            raise EmptySpec("property set name is empty")
        if not self.properties:
            raise EmptySpec(f"property set {self.pset_name!r} has no properties")
        seen = set()
        for name, value, _unit in self.properties:
            if not name:
                raise InvalidParams("property name is empty")
            if name in seen:
                raise InvalidParams(f"duplicate property name {name!r}")
            if not isinstance(value, (str, int, float, bool)):
                raise InvalidParams(f"property {name!r} value must be a scalar")
            seen.add(name)


@dataclass
class SessionFlags:
    visible: bool = True
    selected: bool = False


class IfcModel:
    """Entity graph plus indexes, spatial handles and session state."""

    def __init__(self, header: StepHeader | None = None,
                 guid_seed: int | None = None):
        self.header = header or StepHeader()
        self.entities: dict[int, EntityInstance] = {}
        self.next_id = 1
        self.by_class: dict[str, set[int]] = {}
        self.by_guid: dict[str, int] = {}
        self.session_flags: dict[int, SessionFlags] = {}
        self.dirty = False
        self.guids = GuidGenerator(guid_seed)
        self.project_id: int | None = None
        self.site_id: int | None = None
        self.building_id: int | None = None
        self.storey_ids: list[int] = []
        self.context_id: int | None = None
        self._name_counters: dict[str, int] = {}

    # --- low-level graph access ---

    def add(self, class_name: str, attributes: list) -> int:
        entity_id = self.next_id
        self.next_id += 1
        inst = EntityInstance(entity_id, class_name, list(attributes))
        self.entities[entity_id] = inst
        self._index(inst)
        self.dirty = True
        return entity_id

    def _index(self, inst: EntityInstance):
        self.by_class.setdefault(inst.class_name, set()).add(inst.id)
        rooted = schema.is_rooted(inst.class_name)
        if rooted is None:
            rooted = bool(inst.attributes) and is_guid(inst.attributes[0])
        # relationship records carry GlobalIds too but are not addressable
        # objects; keeping them out of by_guid matches the tool surface
        if rooted and not inst.class_name.startswith("IFCREL") \
                and inst.attributes and isinstance(inst.attributes[0], str):
            self.by_guid[inst.attributes[0]] = inst.id
        if inst.class_name in schema.PRODUCT_CLASSES or inst.class_name in schema.SPATIAL_CLASSES \
                or schema.is_type_object(inst.class_name):
            hidden = schema.is_type_object(inst.class_name)
            self.session_flags.setdefault(inst.id, SessionFlags(visible=not hidden))

    def rebuild_indexes(self):
        self.by_class = {}
        self.by_guid = {}
        flags = self.session_flags
        self.session_flags = {}
        for inst in self.entities.values():
            self._index(inst)
        for entity_id, f in flags.items():
            if entity_id in self.entities:
                self.session_flags[entity_id] = f

    def resolve(self, ref: EntityRef | int) -> EntityInstance:
        entity_id = ref.id if isinstance(ref, EntityRef) else ref
        return self.entities[entity_id]

    def require_guid(self, guid: str) -> EntityInstance:
        entity_id = self.by_guid.get(guid)
        if entity_id is None:
            raise UnknownGuid(guid)
        return self.entities[entity_id]

    def guid_of(self, entity_id: int) -> str | None:
        inst = self.entities[entity_id]
        first = inst.attributes[0] if inst.attributes else None
        if isinstance(first, str) and self.by_guid.get(first) == entity_id:
            return first
        return None

    def get_attr(self, inst: EntityInstance, name: str):
        index = schema.attribute_index(inst.class_name, name)
        if index is None or index >= len(inst.attributes):
            raise UnknownAttribute(name, inst.class_name)
        return inst.attributes[index]

    def set_attr(self, inst: EntityInstance, name: str, value):
        index = schema.attribute_index(inst.class_name, name)
        if index is None or index >= len(inst.attributes):
            raise UnknownAttribute(name, inst.class_name)
        inst.attributes[index] = value
        self.dirty = True

    def next_name(self, class_name: str) -> str:
        short = schema.short_name(class_name)
        count = self._name_counters.get(short, 0) + 1
        self._name_counters[short] = count
        return f"{short}_{count:03d}"

    def dangling_refs(self) -> list[int]:
        return sorted({
            ref.id
            for inst in self.entities.values()
            for ref in iter_refs(inst.attributes)
            if ref.id not in self.entities
        })

    # --- spatial structure ---

    def storeys(self) -> list[int]:
        """Storey ids ordered by elevation, then id."""
        def elevation(entity_id: int) -> float:
            value = self.entities[entity_id].attributes[9]
            return float(value) if isinstance(value, (int, float)) else 0.0
        return sorted(self.storey_ids, key=lambda i: (elevation(i), i))

    def storey_elevation(self, storey_id: int) -> float:
        value = self.entities[storey_id].attributes[9]
        return float(value) if isinstance(value, (int, float)) else 0.0

    def default_storey(self) -> int:
        storeys = self.storeys()
        if not storeys:
            raise InvalidParams("model has no building storey")
        return storeys[0]

    def storey_for_elevation(self, z: float) -> int:
        """Nearest storey at or below ``z``; the lowest one as a fallback."""
        storeys = self.storeys()
        if not storeys:
            raise InvalidParams("model has no building storey")
        best = storeys[0]
        for storey_id in storeys:
            if self.storey_elevation(storey_id) <= z + 1e-9:
                best = storey_id
        return best

    def storey_of(self, entity_id: int) -> int | None:
        for rel_id in self.by_class.get("IFCRELCONTAINEDINSPATIALSTRUCTURE", ()):
            rel = self.entities[rel_id]
            related = rel.attributes[4] or ()
            if any(isinstance(r, EntityRef) and r.id == entity_id for r in related):
                relating = rel.attributes[5]
                if isinstance(relating, EntityRef):
                    return relating.id
        return None

    def contain_in_storey(self, entity_id: int, storey_id: int):
        for rel_id in self.by_class.get("IFCRELCONTAINEDINSPATIALSTRUCTURE", ()):
            rel = self.entities[rel_id]
            relating = rel.attributes[5]
            if isinstance(relating, EntityRef) and relating.id == storey_id:
                rel.attributes[4] = tuple(rel.attributes[4] or ()) + (EntityRef(entity_id),)
                self.dirty = True
                return
        self.add("IFCRELCONTAINEDINSPATIALSTRUCTURE", [
            self.guids.fresh(), None, None, None,
            (EntityRef(entity_id),), EntityRef(storey_id),
        ])

    # --- placement resolution ---

    def _axis2placement(self, a2p_id: int) -> Placement:
        inst = self.entities[a2p_id]
        coords = self.resolve(inst.attributes[0]).attributes[0]
        origin = Point3(*(list(coords) + [0.0] * (3 - len(coords))))
        z_axis = Point3(0.0, 0.0, 1.0)
        x_axis = Point3(1.0, 0.0, 0.0)
        if inst.class_name == "IFCAXIS2PLACEMENT3D":
            if isinstance(inst.attributes[1], EntityRef):
                z_axis = _unit(Point3(*self.resolve(inst.attributes[1]).attributes[0]))
            if isinstance(inst.attributes[2], EntityRef):
                x_axis = _unit(Point3(*self.resolve(inst.attributes[2]).attributes[0]))
        return Placement(origin, z_axis, x_axis)

    def resolve_placement(self, placement_id: int | None) -> Placement:
        if placement_id is None:
            return Placement()
        inst = self.entities[placement_id]
        if inst.class_name != "IFCLOCALPLACEMENT":
            return self._axis2placement(placement_id)
        parent_ref, relative_ref = inst.attributes[0], inst.attributes[1]
        local = self._axis2placement(relative_ref.id)
        if not isinstance(parent_ref, EntityRef):
            return local
        parent = self.resolve_placement(parent_ref.id)
        return Placement(
            origin=parent.to_world(local.origin),
            z_axis=parent.rotate(local.z_axis),
            x_axis=parent.rotate(local.x_axis),
        )

    def placement_of(self, entity_id: int) -> Placement:
        inst = self.entities[entity_id]
        index = schema.attribute_index(inst.class_name, "ObjectPlacement")
        if index is None or index >= len(inst.attributes):
            return Placement()
        ref = inst.attributes[index]
        if not isinstance(ref, EntityRef):
            return Placement()
        return self.resolve_placement(ref.id)

    # --- persistence ---

    def to_bytes(self) -> bytes:
        return write_step(self.header, self.entities)

    def save(self, path: str):
        data = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(data)
        self.dirty = False


def _unit(v: Point3) -> Point3:
    length = (v.x ** 2 + v.y ** 2 + v.z ** 2) ** 0.5
    return Point3(v.x / length, v.y / length, v.z / length)


def _timestamp(deterministic: bool) -> str:
    if deterministic:
        return _FIXED_TIMESTAMP
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")


def new_model(project_name: str = "My Project",
              guid_seed: int | None = None) -> IfcModel:
    """Fresh IFC4 model: project, site, building, one storey at 0, SI units."""
    model = IfcModel(guid_seed=guid_seed)
    model.header = StepHeader(
        name=project_name,
        timestamp=_timestamp(deterministic=guid_seed is not None),
        file_schema=["IFC4"],
    )

    origin = model.add("IFCCARTESIANPOINT", [(0.0, 0.0, 0.0)])
    world = model.add("IFCAXIS2PLACEMENT3D", [EntityRef(origin), None, None])
    context = model.add("IFCGEOMETRICREPRESENTATIONCONTEXT",
                        [None, "Model", 3, 1e-05, EntityRef(world), None])
    model.context_id = context

    units = [
        model.add("IFCSIUNIT", [DERIVED, EnumToken("LENGTHUNIT"), None, EnumToken("METRE")]),
        model.add("IFCSIUNIT", [DERIVED, EnumToken("AREAUNIT"), None, EnumToken("SQUARE_METRE")]),
        model.add("IFCSIUNIT", [DERIVED, EnumToken("VOLUMEUNIT"), None, EnumToken("CUBIC_METRE")]),
        model.add("IFCSIUNIT", [DERIVED, EnumToken("PLANEANGLEUNIT"), None, EnumToken("RADIAN")]),
    ]
    unit_assignment = model.add("IFCUNITASSIGNMENT",
                                [tuple(EntityRef(u) for u in units)])

    project = model.add("IFCPROJECT", [
        model.guids.fresh(), None, project_name, None, None, None, None,
        (EntityRef(context),), EntityRef(unit_assignment),
    ])

    def local_placement(parent: int | None, z: float = 0.0) -> int:
        point = model.add("IFCCARTESIANPOINT", [(0.0, 0.0, z)])
        a2p = model.add("IFCAXIS2PLACEMENT3D", [EntityRef(point), None, None])
        rel_to = EntityRef(parent) if parent is not None else None
        return model.add("IFCLOCALPLACEMENT", [rel_to, EntityRef(a2p)])

    site_lp = local_placement(None)
    site = model.add("IFCSITE", [
        model.guids.fresh(), None, "My Site", None, None, EntityRef(site_lp),
        None, None, EnumToken("ELEMENT"), None, None, None, None, None,
    ])
    building_lp = local_placement(site_lp)
    building = model.add("IFCBUILDING", [
        model.guids.fresh(), None, "My Building", None, None, EntityRef(building_lp),
        None, None, EnumToken("ELEMENT"), None, None, None,
    ])
    storey_lp = local_placement(building_lp)
    storey = model.add("IFCBUILDINGSTOREY", [
        model.guids.fresh(), None, "My Storey", None, None, EntityRef(storey_lp),
        None, None, EnumToken("ELEMENT"), 0.0,
    ])

    def aggregate(relating: int, related: int):
        model.add("IFCRELAGGREGATES", [
            model.guids.fresh(), None, None, None,
            EntityRef(relating), (EntityRef(related),),
        ])

    aggregate(project, site)
    aggregate(site, building)
    aggregate(building, storey)

    model.project_id = project
    model.site_id = site
    model.building_id = building
    model.storey_ids = [storey]
    model.dirty = False
    return model


def add_storey(model: IfcModel, name: str, elevation: float) -> int:
    """Additional storey aggregated under the building."""
    if model.building_id is None:
        raise InvalidParams("model has no building")
    building_lp = model.entities[model.building_id].attributes[5]
    point = model.add("IFCCARTESIANPOINT", [(0.0, 0.0, float(elevation))])
    a2p = model.add("IFCAXIS2PLACEMENT3D", [EntityRef(point), None, None])
    lp = model.add("IFCLOCALPLACEMENT", [building_lp, EntityRef(a2p)])
    storey = model.add("IFCBUILDINGSTOREY", [
        model.guids.fresh(), None, name, None, None, EntityRef(lp),
        None, None, EnumToken("ELEMENT"), float(elevation),
    ])
    for rel_id in model.by_class.get("IFCRELAGGREGATES", ()):
        rel = model.entities[rel_id]
        relating = rel.attributes[4]
        if isinstance(relating, EntityRef) and relating.id == model.building_id:
            rel.attributes[5] = tuple(rel.attributes[5] or ()) + (EntityRef(storey),)
            break
    model.storey_ids.append(storey)
    return storey


def load_model(data: bytes | str, guid_seed: int | None = None) -> IfcModel:
    """Rebuild an IfcModel (indexes, handles, session defaults) from STEP text."""
    header, entities = parse_step(data)
    model = IfcModel(header=header, guid_seed=guid_seed)
    model.entities = entities
    model.next_id = max(entities) + 1 if entities else 1
    model.rebuild_indexes()

    projects = sorted(model.by_class.get("IFCPROJECT", ()))
    model.project_id = projects[0] if projects else None
    sites = sorted(model.by_class.get("IFCSITE", ()))
    model.site_id = sites[0] if sites else None
    buildings = sorted(model.by_class.get("IFCBUILDING", ()))
    model.building_id = buildings[0] if buildings else None
    model.storey_ids = sorted(model.by_class.get("IFCBUILDINGSTOREY", ()))
    contexts = sorted(model.by_class.get("IFCGEOMETRICREPRESENTATIONCONTEXT", ()))
    model.context_id = contexts[0] if contexts else None

    # seed auto-name counters past any existing "<Class>_NNN" names
    for inst in entities.values():
        index = schema.attribute_index(inst.class_name, "Name")
        if index is None or index >= len(inst.attributes):
            continue
        name = inst.attributes[index]
        short = schema.short_name(inst.class_name)
        if isinstance(name, str) and name.startswith(short + "_"):
            suffix = name[len(short) + 1:]
            if suffix.isdigit():
                current = model._name_counters.get(short, 0)
                model._name_counters[short] = max(current, int(suffix))
    model.dirty = False
    return model


def open_model(path: str, guid_seed: int | None = None) -> IfcModel:
    with open(path, "rb") as fh:
        return load_model(fh.read(), guid_seed=guid_seed)


# --- semantic operations ---

def edit_attributes(model: IfcModel, guid: str,
                    updates: dict[str, object]) -> list[dict]:
    """Replace direct attributes; returns old/new pairs in update order."""
    inst = model.require_guid(guid)
    for name in updates:
        if name not in EDITABLE_ATTRIBUTES:
            raise UnknownAttribute(name, inst.class_name)
        if schema.attribute_index(inst.class_name, name) is None:
            raise UnknownAttribute(name, inst.class_name)
    changes = []
    for name, value in updates.items():
        old = model.get_attr(inst, name)
        model.set_attr(inst, name, value)
        changes.append({"attribute": name, "old": old, "new": value})
    model.dirty = True
    return changes


def _nominal_value(value) -> TypedValue:
    if isinstance(value, bool):
        return TypedValue("IFCBOOLEAN", value)
    if isinstance(value, int):
        return TypedValue("IFCINTEGER", value)
    if isinstance(value, float):
        return TypedValue("IFCREAL", value)
    return TypedValue("IFCLABEL", str(value))


def python_value(value):
    """Unwrap a property NominalValue back to a plain Python scalar."""
    if isinstance(value, TypedValue):
        return python_value(value.value)
    if isinstance(value, EnumToken):
        return value.name
    return value


def find_pset_rel(model: IfcModel, entity_id: int, pset_name: str):
    """(rel, pset) pair for a named pset on an element, or (None, None)."""
    for rel_id in sorted(model.by_class.get("IFCRELDEFINESBYPROPERTIES", ())):
        rel = model.entities[rel_id]
        related = rel.attributes[4] or ()
        if not any(isinstance(r, EntityRef) and r.id == entity_id for r in related):
            continue
        pset_ref = rel.attributes[5]
        if not isinstance(pset_ref, EntityRef):
            continue
        pset = model.entities[pset_ref.id]
        if pset.class_name == "IFCPROPERTYSET" and pset.attributes[2] == pset_name:
            return rel, pset
    return None, None


def psets_of(model: IfcModel, entity_id: int) -> dict[str, dict[str, object]]:
    result: dict[str, dict[str, object]] = {}
    for rel_id in sorted(model.by_class.get("IFCRELDEFINESBYPROPERTIES", ())):
        rel = model.entities[rel_id]
        related = rel.attributes[4] or ()
        if not any(isinstance(r, EntityRef) and r.id == entity_id for r in related):
            continue
        pset_ref = rel.attributes[5]
        if not isinstance(pset_ref, EntityRef):
            continue
        pset = model.entities[pset_ref.id]
        if pset.class_name != "IFCPROPERTYSET":
            continue
        props: dict[str, object] = {}
        for prop_ref in pset.attributes[4] or ():
            prop = model.entities[prop_ref.id]
            if prop.class_name == "IFCPROPERTYSINGLEVALUE":
                props[prop.attributes[0]] = python_value(prop.attributes[2])
        result[pset.attributes[2]] = props
    return result


def add_property_set(model: IfcModel, guid: str, spec: PropertySpec) -> str:
    """Attach or merge a property set; returns the pset GlobalId."""
    spec.validate()
    inst = model.require_guid(guid)
    _rel, pset = find_pset_rel(model, inst.id, spec.pset_name)
    if pset is None:
        prop_ids = [
            model.add("IFCPROPERTYSINGLEVALUE",
                      [name, unit, _nominal_value(value), None])
            for name, value, unit in spec.properties
        ]
        pset_guid = model.guids.fresh()
        pset_id = model.add("IFCPROPERTYSET", [
            pset_guid, None, spec.pset_name, None,
            tuple(EntityRef(i) for i in prop_ids),
        ])
        model.add("IFCRELDEFINESBYPROPERTIES", [
            model.guids.fresh(), None, None, None,
            (EntityRef(inst.id),), EntityRef(pset_id),
        ])
        return pset_guid

    # merge: overwrite existing names, append new ones
    existing: dict[str, EntityInstance] = {}
    for prop_ref in pset.attributes[4] or ():
        prop = model.entities[prop_ref.id]
        if prop.class_name == "IFCPROPERTYSINGLEVALUE":
            existing[prop.attributes[0]] = prop
    appended = list(pset.attributes[4] or ())
    for name, value, unit in spec.properties:
        if name in existing:
            existing[name].attributes[2] = _nominal_value(value)
            if unit is not None:
                existing[name].attributes[1] = unit
        else:
            appended.append(EntityRef(model.add(
                "IFCPROPERTYSINGLEVALUE", [name, unit, _nominal_value(value), None]
            )))
    pset.attributes[4] = tuple(appended)
    model.dirty = True
    return pset.attributes[0]


def set_pset_property(model: IfcModel, guid: str, pset_name: str,
                      prop_name: str, value) -> str:
    return add_property_set(
        model, guid, PropertySpec(pset_name, [(prop_name, value, None)])
    )


def add_classification(model: IfcModel, guid: str, system: str, code: str) -> str:
    """Classify an element; returns the association GlobalId.

    One IFCCLASSIFICATION per system and one reference per (system, code)
    are created and reused across calls.
    """
    inst = model.require_guid(guid)

    classification_id = None
    for cid in sorted(model.by_class.get("IFCCLASSIFICATION", ())):
        if model.entities[cid].attributes[3] == system:
            classification_id = cid
            break
    if classification_id is None:
        classification_id = model.add("IFCCLASSIFICATION",
                                      [None, None, None, system, None, None, None])

    reference_id = None
    for rid in sorted(model.by_class.get("IFCCLASSIFICATIONREFERENCE", ())):
        ref = model.entities[rid]
        source = ref.attributes[3]
        if (ref.attributes[1] == code and isinstance(source, EntityRef)
                and source.id == classification_id):
            reference_id = rid
            break
    if reference_id is None:
        reference_id = model.add("IFCCLASSIFICATIONREFERENCE", [
            None, code, None, EntityRef(classification_id), None, None,
        ])

    for rel_id in sorted(model.by_class.get("IFCRELASSOCIATESCLASSIFICATION", ())):
        rel = model.entities[rel_id]
        relating = rel.attributes[5]
        if isinstance(relating, EntityRef) and relating.id == reference_id:
            related = tuple(rel.attributes[4] or ())
            if not any(r.id == inst.id for r in related):
                rel.attributes[4] = related + (EntityRef(inst.id),)
                model.dirty = True
            return rel.attributes[0]
    rel_guid = model.guids.fresh()
    model.add("IFCRELASSOCIATESCLASSIFICATION", [
        rel_guid, None, None, None, (EntityRef(inst.id),), EntityRef(reference_id),
    ])
    return rel_guid


def classifications_of(model: IfcModel, entity_id: int) -> list[dict[str, str]]:
    found = []
    for rel_id in sorted(model.by_class.get("IFCRELASSOCIATESCLASSIFICATION", ())):
        rel = model.entities[rel_id]
        related = rel.attributes[4] or ()
        if not any(isinstance(r, EntityRef) and r.id == entity_id for r in related):
            continue
        ref = model.entities[rel.attributes[5].id]
        source = ref.attributes[3]
        system = ""
        if isinstance(source, EntityRef):
            system = model.entities[source.id].attributes[3] or ""
        found.append({"system": system, "code": ref.attributes[1] or ""})
    return found


def set_owner_history(model: IfcModel, guids: list[str], user: str,
                      timestamp: int) -> int:
    """Attach one shared IFCOWNERHISTORY to every listed element."""
    instances = [model.require_guid(g) for g in guids]  # all-or-nothing
    if not instances:
        return 0
    person = model.add("IFCPERSON",
                       [user, user, None, None, None, None, None, None])
    organization = model.add("IFCORGANIZATION", [None, "ifcmcp", None, None, None])
    person_org = model.add("IFCPERSONANDORGANIZATION",
                           [EntityRef(person), EntityRef(organization), None])
    application = model.add("IFCAPPLICATION", [
        EntityRef(organization), "0.1.0", "ifcmcp", "ifcmcp",
    ])
    history = model.add("IFCOWNERHISTORY", [
        EntityRef(person_org), EntityRef(application), None, EnumToken("ADDED"),
        None, None, None, int(timestamp),
    ])
    for inst in instances:
        model.set_attr(inst, "OwnerHistory", EntityRef(history))
    return len(instances)


def owner_of(model: IfcModel, entity_id: int) -> dict | None:
    inst = model.entities[entity_id]
    index = schema.attribute_index(inst.class_name, "OwnerHistory")
    if index is None or index >= len(inst.attributes):
        return None
    ref = inst.attributes[index]
    if not isinstance(ref, EntityRef):
        return None
    history = model.entities[ref.id]
    user = None
    owning_user = history.attributes[0]
    if isinstance(owning_user, EntityRef):
        pao = model.entities[owning_user.id]
        person_ref = pao.attributes[0]
        if isinstance(person_ref, EntityRef):
            user = model.entities[person_ref.id].attributes[0]
    created = history.attributes[7]
    return {"user": user, "created": created if isinstance(created, int) else None}


# --- deletion ---

_GC_SAFE_ROOTED = {"IFCPROPERTYSET"}  # rooted but owned via their rel


def _cascade_set(model: IfcModel, start_id: int) -> set[int]:
    """Element plus the openings/fillers that cannot outlive it."""
    result: set[int] = set()
    queue = [start_id]
    while queue:
        entity_id = queue.pop()
        if entity_id in result or entity_id not in model.entities:
            continue
        result.add(entity_id)
        for class_name, relating_idx, related_idx in (
            ("IFCRELVOIDSELEMENT", 4, 5),
            ("IFCRELFILLSELEMENT", 4, 5),
        ):
            for rel_id in model.by_class.get(class_name, ()):
                rel = model.entities[rel_id]
                relating, related = rel.attributes[relating_idx], rel.attributes[related_idx]
                if not isinstance(relating, EntityRef) or not isinstance(related, EntityRef):
                    continue
                if relating.id == entity_id:
                    queue.append(related.id)
                elif related.id == entity_id:
                    # a filler dies with its opening, an opening with its filler
                    if class_name == "IFCRELFILLSELEMENT":
                        queue.append(relating.id)
    return result


def delete_element(model: IfcModel, guid: str) -> int:
    """Delete a product and its exclusively-owned subgraph.

    Shared resources (profiles, contexts, owner histories, ...) survive
    whenever anything outside the deleted set still references them.
    """
    inst = model.require_guid(guid)
    if inst.class_name in schema.SPATIAL_CLASSES:
        raise CannotDeleteSpatial(f"cannot delete spatial element {inst.class_name}")
    if inst.class_name not in schema.PRODUCT_CLASSES:
        raise CannotDeleteSpatial(f"{inst.class_name} is not a deletable product")

    dead = _cascade_set(model, inst.id)

    # prune relationship records; a rel dies when it loses its last member
    # or either scalar side of a voids/fills pair
    list_rels = {
        "IFCRELCONTAINEDINSPATIALSTRUCTURE": 4,
        "IFCRELDEFINESBYPROPERTIES": 4,
        "IFCRELDEFINESBYTYPE": 4,
        "IFCRELASSOCIATESCLASSIFICATION": 4,
        "IFCRELAGGREGATES": 5,
    }
    for class_name, index in list_rels.items():
        for rel_id in list(model.by_class.get(class_name, ())):
            rel = model.entities[rel_id]
            related = rel.attributes[index]
            if not isinstance(related, tuple):
                continue
            kept = tuple(r for r in related
                         if not (isinstance(r, EntityRef) and r.id in dead))
            if len(kept) != len(related):
                if kept:
                    rel.attributes[index] = kept
                else:
                    dead.add(rel_id)
    for class_name in ("IFCRELVOIDSELEMENT", "IFCRELFILLSELEMENT"):
        for rel_id in list(model.by_class.get(class_name, ())):
            rel = model.entities[rel_id]
            for value in rel.attributes[4:6]:
                if isinstance(value, EntityRef) and value.id in dead:
                    dead.add(rel_id)
                    break

    # candidates for resource cleanup: the attribute closure of the dead set
    candidates: set[int] = set()
    queue = [i for i in dead]
    while queue:
        entity_id = queue.pop()
        for ref in iter_refs(model.entities[entity_id].attributes):
            if ref.id in dead or ref.id in candidates:
                continue
            target = model.entities[ref.id]
            rooted = schema.is_rooted(target.class_name)
            if rooted is None:
                rooted = bool(target.attributes) and is_guid(target.attributes[0])
            if rooted and target.class_name not in _GC_SAFE_ROOTED:
                continue  # never sweep spatial/product/type entities
            candidates.add(ref.id)
            queue.append(ref.id)

    # iterative refcount sweep over the candidate closure
    while True:
        live_refs: set[int] = set()
        for entity_id, entity in model.entities.items():
            if entity_id in dead:
                continue
            live_refs.update(r.id for r in iter_refs(entity.attributes))
        swept = {c for c in candidates if c not in dead and c not in live_refs}
        if not swept:
            break
        dead.update(swept)

    for entity_id in dead:
        model.entities.pop(entity_id, None)
        model.session_flags.pop(entity_id, None)
    model.rebuild_indexes()
    model.dirty = True
    return len(dead)
