"""Model loading, validation and round-trip serialization."""

import math

import numpy as np
import pytest

from smclab.robot_model import (ModelError, load_model, serialize_model,
                                validate_model)

BUNDLED = ("ur5e_like", "pendulum1", "planar2")


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_models_are_valid(name):
    model = load_model(name)
    assert validate_model(model) == []


def test_ur5e_like_shape_and_reach():
    model = load_model("ur5e_like")
    assert model.n == 6
    # shoulder-to-wrist reach: in-plane link lengths of the arm
    reach = float(np.sum(np.abs(model.dh.a)))
    assert abs(reach - 0.85) < 0.05


def test_single_link_pendulum_loads():
    doc = {
        "name": "mini",
        "dh": {"a": [1.0], "d": [0.0], "alpha": [0.0]},
        "links": [{"mass": 1.0, "com": [-0.5, 0.0, 0.0],
                   "inertia": [[1e-4, 0, 0], [0, 1 / 12, 0], [0, 0, 1 / 12]]}],
    }
    model = load_model(doc)
    assert model.n == 1
    assert validate_model(model) == []
    # absent sections fall back to defaults
    assert model.gravity[2] == -9.81
    assert model.limits.torque_max[0] == 150.0


def test_negative_mass_names_offending_link():
    doc = load_model("planar2").to_dict()
    doc["links"][1]["mass"] = -1.0
    with pytest.raises(ModelError, match="link 2"):
        load_model(doc)


def test_asymmetric_inertia_is_one_diagnostic():
    model = load_model("planar2")
    doc = model.to_dict()
    doc["links"][0]["inertia"][0][1] = 0.03  # break symmetry
    with pytest.raises(ModelError, match="symmetric"):
        load_model(doc)


def test_dimension_mismatch_diagnostic():
    doc = load_model("planar2").to_dict()
    doc["links"] = doc["links"][:1]
    with pytest.raises(ModelError, match="1 links"):
        load_model(doc)


def test_parse_failure_reports():
    with pytest.raises(ModelError, match="parse"):
        load_model("dh: [unclosed\n  x: {")


def test_missing_section_reports_field():
    with pytest.raises(ModelError, match="links"):
        load_model({"dh": {"a": [1.0], "d": [0.0], "alpha": [0.0]}})


@pytest.mark.parametrize("name", BUNDLED)
def test_serialize_round_trip_bit_exact(name):
    model = load_model(name)
    clone = load_model(serialize_model(model))
    assert clone.n == model.n
    np.testing.assert_array_equal(clone.dh.a, model.dh.a)
    np.testing.assert_array_equal(clone.dh.d, model.dh.d)
    np.testing.assert_array_equal(clone.dh.alpha, model.dh.alpha)
    np.testing.assert_array_equal(clone.dh.theta_offset, model.dh.theta_offset)
    np.testing.assert_array_equal(clone.gravity, model.gravity)
    for a, b in zip(clone.inertia, model.inertia):
        assert a.mass == b.mass
        np.testing.assert_array_equal(a.center_of_mass, b.center_of_mass)
        np.testing.assert_array_equal(a.inertia_tensor, b.inertia_tensor)
    np.testing.assert_array_equal(clone.limits.position_min, model.limits.position_min)
    np.testing.assert_array_equal(clone.limits.torque_max, model.limits.torque_max)


def test_validate_reports_each_violation_separately():
    model = load_model("planar2")
    doc = model.to_dict()
    doc["limits"]["velocity_max"][0] = -1.0
    doc["links"][0]["mass"] = -2.0
    try:
        load_model(doc)
    except ModelError as exc:
        message = str(exc)
        assert "mass" in message and "velocity_max" in message
    else:
        pytest.fail("expected ModelError")


def test_mass_scale_is_plant_side_copy():
    model = load_model("planar2")
    scaled = model.with_mass_scale(1.1)
    assert scaled.inertia[0].mass == pytest.approx(1.1 * model.inertia[0].mass)
    np.testing.assert_allclose(scaled.inertia[0].inertia_tensor,
                               1.1 * model.inertia[0].inertia_tensor)
    # original untouched
    assert model.inertia[0].mass == 1.2
    with pytest.raises(ModelError):
        model.with_mass_scale(0.0)


def test_angle_range_invariant():
    doc = load_model("pendulum1").to_dict()
    doc["dh"]["alpha"] = [2 * math.pi]
    with pytest.raises(ModelError, match="alpha"):
        load_model(doc)
