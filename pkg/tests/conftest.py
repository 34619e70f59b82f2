"""Shared fixtures: occupancy maps reused across the safety tests."""

import pytest

from fieldsim.units import GridMap, write_grid_map


def build_field_map() -> GridMap:
    # 14 m x 2.25 m strip with a 0.25 m wide, 0.75 m tall obstacle whose
    # near face sits at x = 10 and which straddles the vehicle's path.
    cells = [0] * (9 * 56)
    for row in (3, 4, 5):
        cells[row * 56 + 44] = 1
    return GridMap(56, 9, 0.25, -1.0, -1.125, tuple(cells))


def build_blind_map() -> GridMap:
    # Single occupied cell at x in [0.3, 0.55]: closer than any sensible
    # min_range, so a sensor with a blind zone never reports it.
    return GridMap(1, 1, 0.25, 0.3, -0.125, (1,))


@pytest.fixture(scope="session")
def field_map_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("maps") / "field.map"
    write_grid_map(build_field_map(), path)
    return path


@pytest.fixture(scope="session")
def blind_map_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("maps") / "blind.map"
    write_grid_map(build_blind_map(), path)
    return path
