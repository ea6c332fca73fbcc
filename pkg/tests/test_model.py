from __future__ import annotations

import pytest

from ifcmcp import builders, scene
from ifcmcp.errors import (
    CannotDeleteSpatial,
    EmptySpec,
    UnknownAttribute,
    UnknownGuid,
)
from ifcmcp.model import (
    PropertySpec,
    add_classification,
    add_property_set,
    classifications_of,
    delete_element,
    edit_attributes,
    load_model,
    owner_of,
    psets_of,
    set_owner_history,
)
from ifcmcp.step import EntityRef


def add_bare_wall(model) -> str:
    """Wall without builder extras (no type object), for low-level tests."""
    guid = model.guids.fresh()
    point = model.add("IFCCARTESIANPOINT", [(0.0, 0.0, 0.0)])
    a2p = model.add("IFCAXIS2PLACEMENT3D", [EntityRef(point), None, None])
    lp = model.add("IFCLOCALPLACEMENT", [None, EntityRef(a2p)])
    wall = model.add("IFCWALL", [guid, None, "Wall_X", None, None,
                                 EntityRef(lp), None, None, None])
    model.contain_in_storey(wall, model.default_storey())
    return guid


def test_new_model_spatial_chain(fresh_model):
    info = scene.get_scene_info(fresh_model)
    assert info["total"] == 4
    classes = [o["ifc_class"] for o in info["objects"]]
    assert classes == ["IfcProject", "IfcSite", "IfcBuilding", "IfcBuildingStorey"]
    names = [o["name"] for o in info["objects"]]
    assert names == ["IfcProject/My Project", "IfcSite/My Site",
                     "IfcBuilding/My Building", "IfcBuildingStorey/My Storey"]


def test_new_model_guids_distinct(fresh_model):
    assert len(fresh_model.by_guid) == 4
    assert len(set(fresh_model.by_guid)) == 4


def test_round_trip_preserves_overview(fresh_model):
    reloaded = load_model(fresh_model.to_bytes())
    assert scene.get_scene_info(reloaded) == scene.get_scene_info(fresh_model)
    assert scene.get_ifc_scene_overview(reloaded) == \
        scene.get_ifc_scene_overview(fresh_model)


def test_edit_attributes_description(fresh_model):
    building = fresh_model.guid_of(fresh_model.building_id)
    changes = edit_attributes(fresh_model, building,
                              {"Description": "High-rise residential tower"})
    assert changes == [{"attribute": "Description", "old": None,
                        "new": "High-rise residential tower"}]
    info = scene.get_object_info(fresh_model, building)
    assert info["description"] == "High-rise residential tower"


def test_edit_attributes_idempotent_value_still_dirty(fresh_model):
    building = fresh_model.guid_of(fresh_model.building_id)
    fresh_model.dirty = False
    changes = edit_attributes(fresh_model, building, {"Name": "My Building"})
    assert changes[0]["old"] == changes[0]["new"] == "My Building"
    assert fresh_model.dirty


def test_edit_attributes_errors(fresh_model):
    with pytest.raises(UnknownGuid):
        edit_attributes(fresh_model, "0" * 22, {"Name": "x"})
    building = fresh_model.guid_of(fresh_model.building_id)
    with pytest.raises(UnknownAttribute):
        edit_attributes(fresh_model, building, {"GlobalId": "nope"})
    with pytest.raises(UnknownAttribute):
        edit_attributes(fresh_model, building, {"Tag": "T1"})  # no Tag on buildings


def test_rename_walls_by_measured_height(four_wall_model):
    from ifcmcp import measure

    model = four_wall_model
    for wall_id in sorted(model.by_class["IFCWALL"]):
        height = measure.element_height(model, wall_id)  # extrusion depth
        edit_attributes(model, model.guid_of(wall_id),
                        {"Name": f"Wall-{height:.1f}m"})
    names = [model.entities[w].attributes[2]
             for w in sorted(model.by_class["IFCWALL"])]
    assert names == ["Wall-3.0m"] * 4


def test_property_set_merge_idempotent(four_wall_model):
    model = four_wall_model
    wall = sorted(model.by_class["IFCWALL"])[0]
    guid = model.guid_of(wall)
    spec = PropertySpec("Thermal_Properties",
                        [("U-value", 0.25, None),
                         ("Insulation_Type", "Mineral Wool", None)])
    add_property_set(model, guid, spec)
    first = psets_of(model, wall)
    add_property_set(model, guid, spec)
    assert psets_of(model, wall) == first
    assert len(first["Thermal_Properties"]) == 2
    assert first["Thermal_Properties"]["U-value"] == 0.25


def test_property_set_merge_overwrites_and_appends(four_wall_model):
    model = four_wall_model
    guid = model.guid_of(sorted(model.by_class["IFCWALL"])[0])
    add_property_set(model, guid, PropertySpec("P", [("a", 1.0, None)]))
    add_property_set(model, guid, PropertySpec("P", [("a", 2.0, None),
                                                     ("b", "x", None)]))
    props = psets_of(model, model.by_guid[guid])["P"]
    assert props == {"a": 2.0, "b": "x"}


def test_property_set_on_all_slabs(l_building):
    model, handles = l_building
    for slab_id in sorted(model.by_class["IFCSLAB"]):
        add_property_set(model, model.guid_of(slab_id),
                         PropertySpec("Pset_SlabCommon",
                                      [("Fire_Rating", "2HR", None)]))
    for slab_id in sorted(model.by_class["IFCSLAB"]):
        assert psets_of(model, slab_id)["Pset_SlabCommon"]["Fire_Rating"] == "2HR"


def test_property_set_empty_spec(fresh_model):
    building = fresh_model.guid_of(fresh_model.building_id)
    with pytest.raises(EmptySpec):
        add_property_set(fresh_model, building, PropertySpec("X", []))


def test_classification_reuse(four_wall_model):
    model = four_wall_model
    walls = sorted(model.by_class["IFCWALL"])
    for wall in walls[:2]:
        add_classification(model, model.guid_of(wall), "Uniclass 2015",
                           "Ss_25_10_20")
    assert len(model.by_class["IFCCLASSIFICATION"]) == 1
    assert len(model.by_class["IFCCLASSIFICATIONREFERENCE"]) == 1
    assert classifications_of(model, walls[0]) == \
        [{"system": "Uniclass 2015", "code": "Ss_25_10_20"}]


def test_classification_removed_with_last_element(four_wall_model):
    model = four_wall_model
    wall = sorted(model.by_class["IFCWALL"])[0]
    guid = model.guid_of(wall)
    add_classification(model, guid, "Uniclass 2015", "Ss_25_10_20")
    delete_element(model, guid)
    assert model.dangling_refs() == []
    assert not model.by_class.get("IFCRELASSOCIATESCLASSIFICATION")
    assert not model.by_class.get("IFCCLASSIFICATION")


def test_delete_bare_wall_returns_to_spatial_only(fresh_model):
    guid = add_bare_wall(fresh_model)
    assert scene.get_scene_info(fresh_model)["total"] == 5
    delete_element(fresh_model, guid)
    assert scene.get_scene_info(fresh_model)["total"] == 4
    assert fresh_model.dangling_refs() == []


def test_delete_wall_cascades_door_and_opening(four_wall_model):
    model = four_wall_model
    wall_guid = model.guid_of(sorted(model.by_class["IFCWALL"])[0])
    door, opening = builders.create_door(model, wall_guid=wall_guid,
                                         position_along_axis=5.0)
    delete_element(model, wall_guid)
    assert model.dangling_refs() == []
    assert door not in model.by_guid
    assert opening not in model.by_guid
    assert not model.by_class.get("IFCRELVOIDSELEMENT")
    assert not model.by_class.get("IFCRELFILLSELEMENT")
    assert len(model.by_class["IFCWALL"]) == 3


def test_delete_door_removes_opening(four_wall_model):
    model = four_wall_model
    wall_guid = model.guid_of(sorted(model.by_class["IFCWALL"])[0])
    door, opening = builders.create_door(model, wall_guid=wall_guid,
                                         position_along_axis=5.0)
    delete_element(model, door)
    assert model.dangling_refs() == []
    assert opening not in model.by_guid
    assert not model.by_class.get("IFCOPENINGELEMENT")
    assert len(model.by_class["IFCWALL"]) == 4  # host survives


def test_delete_unknown_and_spatial(fresh_model):
    with pytest.raises(UnknownGuid):
        delete_element(fresh_model, "0" * 22)
    with pytest.raises(CannotDeleteSpatial):
        delete_element(fresh_model, fresh_model.guid_of(fresh_model.building_id))


def test_delete_keeps_shared_resources(four_wall_model):
    model = four_wall_model
    context_count = len(model.by_class["IFCGEOMETRICREPRESENTATIONCONTEXT"])
    delete_element(model, model.guid_of(sorted(model.by_class["IFCWALL"])[0]))
    assert len(model.by_class["IFCGEOMETRICREPRESENTATIONCONTEXT"]) == context_count
    assert model.project_id in model.entities


def test_owner_history_shared_instance(four_wall_model):
    model = four_wall_model
    walls = sorted(model.by_class["IFCWALL"])
    guids = [model.guid_of(w) for w in walls[:2]]
    assert set_owner_history(model, guids, "BIM Manager", 1700000000) == 2
    refs = {model.entities[w].attributes[1].id for w in walls[:2]}
    assert len(refs) == 1  # ref-equality: one shared history instance
    assert owner_of(model, walls[0]) == {"user": "BIM Manager",
                                         "created": 1700000000}


def test_owner_history_empty_and_atomic(four_wall_model):
    model = four_wall_model
    assert set_owner_history(model, [], "X", 0) == 0
    wall_guid = model.guid_of(sorted(model.by_class["IFCWALL"])[0])
    histories_before = len(model.by_class.get("IFCOWNERHISTORY", ()))
    with pytest.raises(UnknownGuid):
        set_owner_history(model, [wall_guid, "0" * 22], "X", 0)
    assert len(model.by_class.get("IFCOWNERHISTORY", ())) == histories_before
    assert model.entities[model.by_guid[wall_guid]].attributes[1] is None


def test_indexes_agree_with_scratch_rebuild(l_building):
    model, _ = l_building
    by_class = {k: set(v) for k, v in model.by_class.items() if v}
    by_guid = dict(model.by_guid)
    model.rebuild_indexes()
    assert {k: set(v) for k, v in model.by_class.items() if v} == by_class
    assert model.by_guid == by_guid


def test_containment_is_a_tree(l_building):
    model, _ = l_building
    containments: dict[int, int] = {}
    for rel_id in model.by_class["IFCRELCONTAINEDINSPATIALSTRUCTURE"]:
        rel = model.entities[rel_id]
        for ref in rel.attributes[4]:
            assert ref.id not in containments, "product contained twice"
            containments[ref.id] = rel.attributes[5].id
    products = set(scene.products_in_order(model))
    assert products <= set(containments)


def test_dangling_scan_clean_after_operation_mix(l_building):
    model, handles = l_building
    add_property_set(model, handles["walls"][0],
                     PropertySpec("P", [("a", 1.0, None)]))
    add_classification(model, handles["walls"][1], "S", "C1")
    delete_element(model, handles["walls"][2])
    delete_element(model, handles["door"])
    assert model.dangling_refs() == []


def test_storey_selection_by_elevation(fresh_model):
    from ifcmcp.model import add_storey

    upper = add_storey(fresh_model, "Level 2", 3.5)
    assert fresh_model.storey_for_elevation(0.0) == fresh_model.storeys()[0]
    assert fresh_model.storey_for_elevation(3.5) == upper
    assert fresh_model.storey_for_elevation(10.0) == upper
    assert fresh_model.storey_for_elevation(-5.0) == fresh_model.storeys()[0]
    assert fresh_model.dangling_refs() == []
