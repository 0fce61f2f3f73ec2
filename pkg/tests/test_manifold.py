import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import quat_about, quaternions, random_pose, random_quat, random_tangent_s3, tangents, unit
from posevmp.errors import AntipodalError
from posevmp.manifold import (
    IDENTITY_QUAT,
    ORIGIN,
    Pose,
    align_hemispheres,
    dist_m,
    dist_s3,
    exp_m,
    exp_s3,
    geodesic_m,
    log_m,
    log_s3,
    minimal_rotation,
    quat_multiply,
    sq_dist_m,
    transport_m,
    transport_matrix_s3,
    transport_s3,
)


# -- S^3 exponential and logarithm ---------------------------------------------


def test_exp_zero_tangent_returns_base():
    q = unit([0.3, -0.2, 0.5, 0.1])
    assert np.array_equal(exp_s3(q, np.zeros(4)), q)


def test_exp_quarter_turn_about_x():
    # sphere arc pi/4 is a rotation by pi/2
    got = exp_s3(IDENTITY_QUAT, np.array([0.0, np.pi / 4, 0.0, 0.0]))
    c = np.cos(np.pi / 4)
    np.testing.assert_allclose(got, [c, c, 0.0, 0.0], atol=1e-15)


def test_exp_arc_half_pi_reaches_pure_quaternion():
    got = exp_s3(IDENTITY_QUAT, np.array([0.0, np.pi / 2, 0.0, 0.0]))
    np.testing.assert_allclose(got, [0.0, 1.0, 0.0, 0.0], atol=1e-15)


def test_log_of_base_is_zero():
    q = unit([0.3, -0.2, 0.5, 0.1])
    assert np.array_equal(log_s3(q, q), np.zeros(4))


def test_log_quarter_turn_arc_length():
    q = quat_about([1, 0, 0], np.pi / 2)
    assert np.linalg.norm(log_s3(IDENTITY_QUAT, q)) == pytest.approx(np.pi / 4, abs=1e-15)


def test_log_quarter_turn_about_x_in_tangent_parameters():
    # 90 degrees about x is the quaternion at tangent length pi/4
    v = log_s3(IDENTITY_QUAT, quat_about([1, 0, 0], np.pi / 2))
    np.testing.assert_allclose(v, [0.0, np.pi / 4, 0.0, 0.0], atol=1e-15)


def test_log_exp_inverse_at_quarter_arc():
    v = np.array([0.0, np.pi / 4, 0.0, 0.0])
    np.testing.assert_allclose(log_s3(IDENTITY_QUAT, exp_s3(IDENTITY_QUAT, v)), v, atol=1e-14)


def test_log_antipodal_raises():
    q = unit([0.1, 0.2, 0.3, 0.4])
    with pytest.raises(AntipodalError):
        log_s3(q, -q)


def test_log_is_tangent():
    rng = np.random.default_rng(0)
    for _ in range(50):
        q, p = random_quat(rng), random_quat(rng)
        if q @ p < -0.9:
            continue
        assert abs(log_s3(q, p) @ q) < 1e-14


@given(quaternions(), st.data())
def test_exp_log_roundtrip_property(q, data):
    v = data.draw(tangents(q))
    np.testing.assert_allclose(log_s3(q, exp_s3(q, v)), v, atol=1e-9)


@given(quaternions(), quaternions())
def test_log_exp_roundtrip_property(q, p):
    if q @ p < 0:
        p = -p
    np.testing.assert_allclose(exp_s3(q, log_s3(q, p)), p, atol=1e-12)


def test_exp_log_batch_matches_loop():
    rng = np.random.default_rng(1)
    Q = np.array([random_quat(rng) for _ in range(20)])
    V = np.array([random_tangent_s3(rng, q) for q in Q])
    batch = exp_s3(Q, V)
    loop = np.array([exp_s3(q, v) for q, v in zip(Q, V)])
    np.testing.assert_array_equal(batch, loop)


# -- transport --------------------------------------------------------------------


def test_transport_to_self_is_identity():
    rng = np.random.default_rng(2)
    q = random_quat(rng)
    v = random_tangent_s3(rng, q)
    np.testing.assert_allclose(transport_s3(q, q, v), v, atol=1e-15)


@given(quaternions(), quaternions(), st.data())
def test_transport_isometry_property(a, b, data):
    if a @ b < -0.9:
        b = -b
    u, v = data.draw(tangents(a)), data.draw(tangents(a))
    tu, tv = transport_s3(a, b, u), transport_s3(a, b, v)
    assert abs(tu @ tv - u @ v) < 1e-10
    assert abs(np.linalg.norm(tu) - np.linalg.norm(u)) < 1e-10
    assert abs(tu @ b) < 1e-10


def test_transport_maps_log_to_negated_log():
    rng = np.random.default_rng(3)
    a, b = random_quat(rng), random_quat(rng)
    if a @ b < 0:
        b = -b
    np.testing.assert_allclose(transport_s3(a, b, log_s3(a, b)), -log_s3(b, a), atol=1e-12)


def test_transport_matrix_matches_function():
    rng = np.random.default_rng(4)
    a, b = random_quat(rng), random_quat(rng)
    v = random_tangent_s3(rng, a)
    np.testing.assert_allclose(transport_matrix_s3(a, b) @ v, transport_s3(a, b, v), atol=1e-15)


def test_transport_antipodal_raises():
    q = unit([1, 2, 3, 4])
    with pytest.raises(AntipodalError):
        transport_s3(q, -q, np.zeros(4))


# -- distance -----------------------------------------------------------------------


def test_dist_s3_sign_invariant():
    q = unit([0.3, 0.4, -0.5, 0.2])
    assert dist_s3(q, -q) == 0.0
    p = quat_about([0, 0, 1], 0.8)
    assert dist_s3(IDENTITY_QUAT, p) == pytest.approx(0.4, abs=1e-15)
    assert dist_s3(IDENTITY_QUAT, -p) == pytest.approx(0.4, abs=1e-15)


def test_dist_m_three_four_five():
    a = np.array([0, 0, 0, 1, 0, 0, 0.0])
    b = np.array([3, 4, 0, 1, 0, 0, 0.0])
    assert dist_m(a, b, 1.0) == 5.0


def test_dist_m_zero_on_same_pose_and_double_cover():
    rng = np.random.default_rng(5)
    p = random_pose(rng)
    assert dist_m(p, p, 0.3) == 0.0
    flipped = np.concatenate([p[:3], -p[3:]])
    assert dist_m(p, flipped, 0.3) == 0.0


@given(st.integers(0, 10_000), st.floats(0.0, 2.0))
def test_dist_m_symmetric(seed, alpha):
    rng = np.random.default_rng(seed)
    a, b = random_pose(rng), random_pose(rng)
    assert dist_m(a, b, alpha) == pytest.approx(dist_m(b, a, alpha), abs=1e-14)


def test_sq_dist_m_matches_log_norm():
    rng = np.random.default_rng(6)
    a, b = random_pose(rng), random_pose(rng)
    if a[3:] @ b[3:] < 0:
        b[3:] *= -1
    assert sq_dist_m(a, b) == pytest.approx(np.sum(log_m(a, b) ** 2), rel=1e-12)


# -- product manifold -------------------------------------------------------------


def test_log_m_of_self_is_zero():
    rng = np.random.default_rng(7)
    p = random_pose(rng)
    assert np.array_equal(log_m(p, p), np.zeros(7))


def test_exp_m_pure_translation():
    p = np.array([1.0, 2.0, 3.0, *unit([0.2, 0.3, 0.4, 0.5])])
    got = exp_m(p, np.array([0.5, -1.0, 2.0, 0, 0, 0, 0]))
    np.testing.assert_array_equal(got[:3], [1.5, 1.0, 5.0])
    np.testing.assert_array_equal(got[3:], p[3:])


def test_transport_m_equal_orientations_is_identity():
    q = unit([0.2, 0.3, 0.4, 0.5])
    a = np.array([0.0, 0.0, 0.0, *q])
    b = np.array([1.0, 2.0, 3.0, *q])
    v = np.array([0.1, 0.2, 0.3, *(np.array([0.3, -0.1, 0.2, 0.0]) - 0.0)])
    v[3:] -= (v[3:] @ q) * q
    np.testing.assert_allclose(transport_m(a, b, v), v, atol=1e-15)


def test_geodesic_endpoints():
    rng = np.random.default_rng(8)
    a, b = random_pose(rng), random_pose(rng)
    if a[3:] @ b[3:] < 0:
        b[3:] *= -1
    assert np.array_equal(geodesic_m(a, b, 0.0), a)
    assert np.max(np.abs(geodesic_m(a, b, 1.0) - b)) < 1e-10


def test_geodesic_midpoint_slerp():
    a = np.array([0, 0, 0, *IDENTITY_QUAT])
    b = np.array([0, 0, 0, *quat_about([0, 0, 1], np.pi / 2)])
    mid = geodesic_m(a, b, 0.5)
    np.testing.assert_allclose(mid[3:], quat_about([0, 0, 1], np.pi / 4), atol=1e-15)


def test_geodesic_vectorized_over_s():
    rng = np.random.default_rng(9)
    a, b = random_pose(rng), random_pose(rng)
    s = np.linspace(0, 1, 7)
    out = geodesic_m(a, b, s)
    assert out.shape == (7, 7)
    np.testing.assert_allclose(out[3], geodesic_m(a, b, s[3]), atol=1e-15)


# -- alignment rotation ---------------------------------------------------------------


def test_minimal_rotation_same_vector_is_identity():
    u = unit(np.arange(1.0, 8.0))
    R = minimal_rotation(u, u)
    assert R.degenerate
    x = np.random.default_rng(0).normal(size=7)
    assert np.array_equal(R.apply(x), x)


def test_minimal_rotation_plane_definition():
    e = np.eye(7)
    R = minimal_rotation(e[0], e[1])
    np.testing.assert_allclose(R.apply(e[0]), e[1], atol=1e-15)
    np.testing.assert_allclose(R.apply(e[2]), e[2], atol=1e-15)


@given(st.integers(0, 10_000))
def test_rotation_inverse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    u, v = unit(rng.normal(size=7)), unit(rng.normal(size=7))
    R = minimal_rotation(u, v)
    w = rng.normal(size=(5, 7))
    np.testing.assert_allclose(R.inverse().apply(R.apply(w)), w, atol=1e-10)
    np.testing.assert_allclose(R.apply(u), v, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(R.apply(w), axis=1), np.linalg.norm(w, axis=1), rtol=1e-12)


# -- quaternion helpers -----------------------------------------------------------------


def test_quat_multiply_composes_rotations():
    a = quat_about([0, 0, 1], 0.3)
    b = quat_about([0, 0, 1], 0.5)
    np.testing.assert_allclose(quat_multiply(a, b), quat_about([0, 0, 1], 0.8), atol=1e-15)


def test_align_hemispheres_flips_sign_against_predecessor():
    q = unit([0.9, 0.1, 0.1, 0.1])
    Q = np.array([q, -q, q])
    out = align_hemispheres(Q)
    np.testing.assert_array_equal(out, [q, q, q])


def test_pose_roundtrip():
    p = Pose.from_array(ORIGIN)
    assert np.array_equal(p.as_array(), ORIGIN)
