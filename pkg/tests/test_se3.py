import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rwhec.errors import DegenerateParameter
from rwhec.se3 import (
    RotationKind,
    RotationParam,
    compose,
    euler_from_rot,
    format_htm,
    inverse,
    is_rotation,
    load_htm,
    make_htm,
    param_from_rot,
    parse_htm,
    quat_from_rot,
    rot_from_param,
    rotation_angle,
    rotation_matrix,
    save_htm,
)
from rwhec.simulate import random_rotation

KINDS = list(RotationKind)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
unit_quats = arrays(float, 4, elements=st.floats(-1, 1)).filter(lambda q: np.linalg.norm(q) > 1e-3)


def rand_rot(seed):
    return random_rotation(np.random.default_rng(seed))


def test_euler_zero_is_identity():
    assert np.array_equal(rotation_matrix(RotationKind.EULER_XYZ, [0, 0, 0]), np.eye(3))


def test_axis_angle_half_turn_about_x():
    r = rotation_matrix(RotationKind.AXIS_ANGLE, [np.pi, 0, 0])
    np.testing.assert_allclose(r, np.diag([1.0, -1.0, -1.0]), atol=1e-15)


def test_quaternion_cyclic_permutation():
    r = rotation_matrix(RotationKind.QUATERNION, [0.5, 0.5, 0.5, 0.5])
    np.testing.assert_allclose(r, [[0, 0, 1], [1, 0, 0], [0, 1, 0]], atol=1e-15)


def test_euler_order_is_fixed_axis_xyz():
    # R = Rz(0.3) Ry(-0.2) Rx(0.1), values from an independent rotation library
    expected = [[0.9362933635841991, -0.3129918257854679, -0.1593450793079779],
                [0.2896294776255155, 0.9447024859948941, -0.1537919979889642],
                [0.19866933079506124, 0.0978433950072557, 0.9751703272018157]]
    np.testing.assert_allclose(rotation_matrix(RotationKind.EULER_XYZ, [0.1, -0.2, 0.3]), expected, atol=1e-15)


def test_degenerate_quaternion():
    with pytest.raises(DegenerateParameter):
        rotation_matrix(RotationKind.QUATERNION, [0, 0, 0, 1e-13])


def test_param_length_checked():
    with pytest.raises(ValueError):
        RotationParam(RotationKind.EULER_XYZ, np.zeros(4))


def test_identity_to_quaternion():
    np.testing.assert_array_equal(param_from_rot(np.eye(3), "quaternion").p, [1, 0, 0, 0])


def test_half_turn_to_axis_angle():
    np.testing.assert_allclose(param_from_rot(np.diag([1.0, -1, -1]), "axis-angle").p, [np.pi, 0, 0], atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_1000_rotations(kind):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        r = random_rotation(rng)
        back = rot_from_param(param_from_rot(r, kind))
        worst = max(worst, np.linalg.norm(back - r))
    assert worst < 1e-9


@given(unit_quats)
def test_quaternion_sign_convention(q):
    r = rotation_matrix(RotationKind.QUATERNION, q)
    p = quat_from_rot(r)
    assert p[0] >= 0
    assert abs(np.linalg.norm(p) - 1) < 1e-12


@given(unit_quats, st.floats(1e-3, 1e3))
def test_quaternion_scale_gauge(q, s):
    np.testing.assert_allclose(rotation_matrix(RotationKind.QUATERNION, q),
                               rotation_matrix(RotationKind.QUATERNION, s * q), atol=1e-12)


@pytest.mark.parametrize("kind", [RotationKind.EULER_XYZ, RotationKind.AXIS_ANGLE])
@given(p=arrays(float, 3, elements=finite))
def test_generated_matrices_are_rotations(kind, p):
    r = rotation_matrix(kind, p)
    assert np.linalg.norm(r.T @ r - np.eye(3)) < 1e-9
    assert abs(np.linalg.det(r) - 1) < 1e-9


@given(arrays(float, 3, elements=st.floats(-1e-5, 1e-5)))
def test_small_axis_angle_branch_is_smooth(v):
    # series branch agrees with the exact first-order expansion
    r = rotation_matrix(RotationKind.AXIS_ANGLE, v)
    skew = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    np.testing.assert_allclose(r, np.eye(3) + skew + skew @ skew / 2, atol=1e-15)


def test_gimbal_lock_flagged_and_valid():
    r = rotation_matrix(RotationKind.EULER_XYZ, [0.4, -np.pi / 2, 0.0])
    angles, locked = euler_from_rot(r)
    assert locked
    assert angles[2] == 0.0
    np.testing.assert_allclose(rotation_matrix(RotationKind.EULER_XYZ, angles), r, atol=1e-9)
    assert param_from_rot(r, "euler").gimbal_lock


def test_compose_identity():
    np.testing.assert_array_equal(compose(np.eye(4), np.eye(4)), np.eye(4))


def test_inverse_pure_translation():
    np.testing.assert_array_equal(inverse(make_htm(t=[1, 2, 3])), make_htm(t=[-1, -2, -3]))


@given(st.integers(0, 2**32 - 1), arrays(float, 3, elements=st.floats(-1e3, 1e3)))
def test_compose_with_inverse_is_identity(seed, t):
    h = make_htm(rand_rot(seed), t)
    np.testing.assert_allclose(compose(h, inverse(h)), np.eye(4), atol=1e-9)


def test_rotation_angle_examples():
    assert rotation_angle(np.eye(3)) == 0.0
    assert rotation_angle(np.diag([1.0, -1, -1])) == pytest.approx(np.pi, abs=1e-15)
    assert rotation_angle(rotation_matrix(RotationKind.AXIS_ANGLE, [0, 0, 0.3])) == pytest.approx(0.3, abs=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_relative_rotation_to_self_is_zero(seed):
    r = rand_rot(seed)
    assert rotation_angle(r.T @ r) == pytest.approx(0.0, abs=1e-7)


@given(st.integers(0, 2**32 - 1))
def test_rotation_angle_matches_arccos_form(seed):
    r = rand_rot(seed)
    c = np.clip((np.trace(r) - 1) / 2, -1, 1)
    assert rotation_angle(r) == pytest.approx(np.arccos(c), abs=1e-7)


def test_is_rotation():
    assert is_rotation(np.eye(3))
    assert not is_rotation(np.diag([1.0, 1.0, -1.0]))
    assert not is_rotation(2 * np.eye(3))


@given(st.integers(0, 2**32 - 1), arrays(float, 3, elements=st.floats(-1e4, 1e4)))
def test_htm_text_round_trip(seed, t):
    h = make_htm(rand_rot(seed), t)
    text = format_htm(h)
    assert text.splitlines()[-1] == "0 0 0 1"
    back = parse_htm(text)
    np.testing.assert_array_equal(back, h)
    assert format_htm(back) == text


def test_htm_file_round_trip(tmp_path):
    h = make_htm(rand_rot(1), [0.1, 2.5, -300.0])
    save_htm(tmp_path / "h.txt", h)
    np.testing.assert_array_equal(load_htm(tmp_path / "h.txt"), h)


def test_htm_last_row_validated():
    with pytest.raises(ValueError):
        parse_htm("1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 1 1\n")
    with pytest.raises(ValueError):
        parse_htm("1 0 0\n0 1 0\n0 0 1\n")
