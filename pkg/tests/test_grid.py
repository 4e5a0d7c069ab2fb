# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import numpy as np
import pytest
from PIL import Image

from wavebvs.common.errors import (
    GridFormatError,
    LatticeMismatchError,
    ZeroVarianceError,
)
from wavebvs.lattice.grid import (
    Grid,
    LatticeSpec,
    grid_locations,
    load_grid,
    require_same_lattice,
    save_grid,
    standardize,
)


@pytest.mark.parametrize("J, side, n, d", [(0, 4, 16, 4), (2, 16, 256, 64), (3, 32, 1024, 256)])
def test_lattice_sizes(J, side, n, d):
    spec = LatticeSpec(J)
    assert (spec.side, spec.n, spec.d) == (side, n, d)
    assert LatticeSpec.from_side(side) == spec


def test_lattice_rejects_bad_sides():
    with pytest.raises(ValueError):
        LatticeSpec(-1)
    for side in (2, 12, 100):
        with pytest.raises(LatticeMismatchError):
            LatticeSpec.from_side(side)


def test_locations_are_row_major():
    locs = grid_locations(4)
    assert locs.shape == (16, 2)
    np.testing.assert_array_equal(locs[1], [0.0, 0.25])
    np.testing.assert_array_equal(locs[4], [0.25, 0.0])
    assert locs.max() < 1.0


def test_grid_validates_values():
    with pytest.raises(LatticeMismatchError):
        Grid(4, np.zeros(15))
    with pytest.raises(ValueError):
        Grid(4, np.r_[np.zeros(15), np.nan])
    g = Grid(4, np.arange(16.0))
    with pytest.raises(ValueError):
        g.values[0] = 1.0
    assert g.as_array()[1, 2] == 6.0


def test_grid_from_function_follows_axes():
    g = Grid.from_function(4, lambda s1, s2: 10 * s1 + s2)
    assert g.as_array()[2, 1] == pytest.approx(10 * 0.5 + 0.25)


def test_require_same_lattice():
    require_same_lattice(Grid(4, np.zeros(16)), Grid(4, np.ones(16)))
    with pytest.raises(LatticeMismatchError):
        require_same_lattice(Grid(4, np.zeros(16)), Grid(8, np.zeros(64)))


def test_csv_round_trip_is_exact(tmp_path, rng):
    spec = LatticeSpec(1)
    g = Grid.on_lattice(spec, rng.normal(size=spec.n) * 1e3)
    path = tmp_path / "g.csv"
    save_grid(g, path)
    back = load_grid(path)
    assert back.spec == spec
    np.testing.assert_array_equal(back.values, g.values)


def test_csv_with_byte_order_mark(tmp_path):
    path = tmp_path / "bom.csv"
    path.write_bytes(b"\xef\xbb\xbf" + b"1.5,2,3,4\n1,2,3,4\n1,2,3,4\n1,2,3,4\n")
    g = load_grid(path)
    assert g.side == 4
    assert g.values[0] == 1.5


def test_csv_errors_carry_position(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3,4\n1,2,x,4\n1,2,3,4\n1,2,3,4\n")
    with pytest.raises(GridFormatError) as info:
        load_grid(path)
    assert (info.value.row, info.value.col) == (2, 3)
    assert "row 2" in str(info.value)

    path.write_text("1,2,3,4\n1,2,3\n1,2,3,4\n1,2,3,4\n")
    with pytest.raises(GridFormatError) as info:
        load_grid(path)
    assert info.value.row == 2

    path.write_text("1,2,3,4\n1,2,inf,4\n1,2,3,4\n1,2,3,4\n")
    with pytest.raises(GridFormatError):
        load_grid(path)


def test_csv_shape_errors(tmp_path):
    path = tmp_path / "rect.csv"
    path.write_text("1,2\n3,4\n5,6\n")
    with pytest.raises(GridFormatError, match="not square"):
        load_grid(path)

    path = tmp_path / "three.csv"
    path.write_text("1,2,3\n4,5,6\n7,8,9\n")
    with pytest.raises(GridFormatError, match="power of two"):
        load_grid(path)
    assert load_grid(path, require_power_of_two=False).side == 3


def test_load_grid_checks_requested_lattice(tmp_path):
    path = tmp_path / "g.csv"
    save_grid(Grid(4, np.zeros(16)), path)
    with pytest.raises(LatticeMismatchError):
        load_grid(path, spec=LatticeSpec(1))


def test_pgm_is_scaled_to_unit_interval(tmp_path):
    pixels = np.arange(64, dtype=np.uint8).reshape(8, 8) * 4
    path = tmp_path / "g.pgm"
    Image.fromarray(pixels).save(path)
    g = load_grid(path)
    assert g.spec == LatticeSpec(1)
    np.testing.assert_allclose(g.as_array(), pixels / 255.0)


def test_unknown_format(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("1")
    with pytest.raises(GridFormatError, match="unsupported"):
        load_grid(path)


def test_standardize(rng):
    g = Grid(4, rng.normal(3.0, 2.0, size=16))
    z, mean, sd = standardize(g)
    assert np.mean(z.values) == pytest.approx(0.0, abs=1e-12)
    assert np.std(z.values, ddof=1) == pytest.approx(1.0)
    np.testing.assert_allclose(z.values * sd + mean, g.values)
    with pytest.raises(ZeroVarianceError):
        standardize(Grid(4, np.full(16, 2.0)))
