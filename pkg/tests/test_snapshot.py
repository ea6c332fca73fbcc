from __future__ import annotations

import re

import pytest

from ifcmcp import builders, snapshot
from ifcmcp.errors import EmptyModel


def ids_in_svg(svg: str) -> list[str]:
    return re.findall(r'id="([^"]+)"', svg)


def test_four_wall_plan_viewbox_and_rects(four_wall_model):
    svg = snapshot.render_plan(four_wall_model)
    # walls trace a 10x10 square; 1 m margin both sides at 50 px/m
    assert 'viewBox="0 0 600.00 600.00"' in svg
    wall_guids = {four_wall_model.guid_of(w)
                  for w in four_wall_model.by_class["IFCWALL"]}
    assert set(ids_in_svg(svg)) == wall_guids
    assert svg.count(f'fill="{snapshot._WALL_FILL}"') == 4


def test_plan_deterministic(l_building):
    model, _ = l_building
    assert snapshot.render_plan(model) == snapshot.render_plan(model)


def test_plan_one_id_per_cut_product(l_building):
    model, handles = l_building
    svg = snapshot.render_plan(model)
    ids = ids_in_svg(svg)
    assert len(ids) == len(set(ids))
    for wall in handles["walls"]:
        assert ids.count(wall) == 1
    # door glyph present once; roof sits above the cut plane
    assert ids.count(handles["door"]) == 1
    assert handles["roof"] not in ids
    # ground slab belongs to the storey and is outlined
    assert ids.count(handles["slab_ground"]) == 1


def test_plan_door_leaves_gap_glyph(l_building):
    model, _ = l_building
    svg = snapshot.render_plan(model)
    assert svg.count('fill="#ffffff"') == 1  # one opening gap
    assert " A" in svg  # door swing arc


def test_plan_window_glyph(four_wall_model):
    model = four_wall_model
    wall_guid = model.guid_of(sorted(model.by_class["IFCWALL"])[0])
    window, _ = builders.create_window(model, wall_guid=wall_guid,
                                       position_along_axis=5.0)
    svg = snapshot.render_plan(model)
    assert ids_in_svg(svg).count(window) == 1
    assert svg.count("<line") >= 3


def test_plan_empty_model(fresh_model):
    with pytest.raises(EmptyModel):
        snapshot.render_plan(fresh_model)


def test_plan_cut_height_excludes_low_walls(fresh_model):
    builders.create_wall(fresh_model, (0, 0), (5, 0), 1.0, 0.2)  # 1 m parapet
    svg = snapshot.render_plan(fresh_model, cut_height=0.5)
    assert len(ids_in_svg(svg)) == 1
    with pytest.raises(EmptyModel):
        snapshot.render_plan(fresh_model, cut_height=1.5)


def test_elevation_single_wall_rect(fresh_model):
    guid = builders.create_wall(fresh_model, (0, 0), (10, 0), 3.5, 0.25)
    svg = snapshot.render_elevation(fresh_model, "south")
    assert ids_in_svg(svg) == [guid]
    # 10 m x 3.5 m face at 50 px/m inside a 1 m margin
    assert 'viewBox="0 0 600.00 275.00"' in svg
    xs = [float(x) for x in re.findall(r"M([\d.]+),", svg)]
    assert xs  # face paths exist
    numbers = [float(v) for pair in
               re.findall(r"([\d.]+),([\d.]+)", svg) for v in pair]
    assert max(numbers) <= 600.0


def test_elevation_painter_order(fresh_model):
    near = builders.create_wall(fresh_model, (0, 1), (10, 1), 3.0, 0.25)
    far = builders.create_wall(fresh_model, (0, 8), (10, 8), 3.0, 0.25)
    svg = snapshot.render_elevation(fresh_model, "south")
    assert svg.index(f'id="{far}"') < svg.index(f'id="{near}"')
    svg_north = snapshot.render_elevation(fresh_model, "north")
    assert svg_north.index(f'id="{near}"') < svg_north.index(f'id="{far}"')


def test_elevation_includes_roof_silhouette(l_building):
    model, handles = l_building
    svg = snapshot.render_elevation(model, "south")
    assert handles["roof"] in ids_in_svg(svg)


def test_elevation_deterministic(l_building):
    model, _ = l_building
    for view in ("north", "south", "east", "west"):
        assert snapshot.render_elevation(model, view) == \
            snapshot.render_elevation(model, view)


def test_elevation_empty(fresh_model):
    with pytest.raises(EmptyModel):
        snapshot.render_elevation(fresh_model, "south")


def test_svg_subset_only(l_building):
    model, _ = l_building
    for svg in (snapshot.render_plan(model),
                snapshot.render_elevation(model, "east")):
        tags = set(re.findall(r"<([a-zA-Z]+)[ >]", svg))
        assert tags <= {"svg", "g", "path", "line", "rect", "title"}
