from __future__ import annotations

import pytest

from ifcmcp import builders
from ifcmcp.model import IfcModel, new_model

SQUARE_WALLS = [
    ((0, 0), (10, 0)),
    ((10, 0), (10, 10)),
    ((10, 10), (0, 10)),
    ((0, 10), (0, 0)),
]

L_OUTLINE = [(0, 0), (10, 0), (10, 5), (5, 5), (5, 10), (0, 10)]


@pytest.fixture
def fresh_model() -> IfcModel:
    return new_model("My Project", guid_seed=1234)


@pytest.fixture
def four_wall_model() -> IfcModel:
    model = new_model("My Project", guid_seed=1234)
    for start, end in SQUARE_WALLS:
        builders.create_wall(model, start, end, 3.0, 0.25)
    return model


def build_l_building(seed: int = 77) -> tuple[IfcModel, dict]:
    """The multi-step L-shaped building: slabs, walls, door, hip roof."""
    model = new_model("My Project", guid_seed=seed)
    handles: dict = {}
    handles["slab_ground"] = builders.create_slab(model, L_OUTLINE, 0.25,
                                                  elevation=0.0)
    handles["walls"] = builders.create_wall_chain(model, L_OUTLINE, 3.5, 0.25,
                                                  close=True)
    handles["door"], handles["opening"] = builders.create_door(
        model, position=(2, 0, 0))
    handles["slab_upper"] = builders.create_slab(model, L_OUTLINE, 0.25,
                                                 elevation=3.5)
    handles["roof"], handles["roof_warnings"] = builders.create_roof(
        model, L_OUTLINE, style="hip", slope_deg=30.0, base_z=7.0)
    return model, handles


@pytest.fixture
def l_building() -> tuple[IfcModel, dict]:
    return build_l_building()
