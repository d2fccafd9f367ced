import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from movesketch.geom import (
    NonRotation,
    Pose,
    Quat,
    SimilarityTransform,
    Vec3,
    apply_similarity,
    compose,
    invert,
    slerp,
)


def random_rotation(rng) -> np.ndarray:
    return Rotation.random(random_state=rng).as_matrix()


def random_similarity(rng) -> SimilarityTransform:
    k = rng.uniform(0.5, 3.0)
    b = Vec3.from_seq(rng.uniform(-2.0, 2.0, size=3))
    return SimilarityTransform(k, random_rotation(rng), b)


class TestVec3:
    def test_algebra(self):
        a = Vec3(1.0, 2.0, 3.0)
        b = Vec3(-2.0, 0.5, 4.0)
        assert a + b == Vec3(-1.0, 2.5, 7.0)
        assert a - b == Vec3(3.0, 1.5, -1.0)
        assert 2.0 * a == Vec3(2.0, 4.0, 6.0)
        assert a.dot(b) == -2.0 + 1.0 + 12.0
        assert a.cross(b) == Vec3(2 * 4 - 3 * 0.5, 3 * -2 - 1 * 4, 1 * 0.5 - 2 * -2)

    def test_normalized(self):
        v = Vec3(3.0, 0.0, 4.0).normalized()
        assert v.norm() == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(ZeroDivisionError):
            Vec3.zero().normalized()


class TestQuat:
    def test_rotate_matches_matrix(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            m = random_rotation(rng)
            q = Quat.from_matrix(m)
            v = Vec3.from_seq(rng.uniform(-5, 5, size=3))
            expect = m @ v.to_array()
            got = q.rotate(v)
            assert np.allclose(got.to_array(), expect, atol=1e-12)

    def test_matrix_round_trip(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            m = random_rotation(rng)
            assert np.allclose(Quat.from_matrix(m).to_matrix(), m, atol=1e-12)

    def test_mul_matches_scipy(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            ra, rb = Rotation.random(random_state=rng), Rotation.random(random_state=rng)
            qa = Quat.from_matrix(ra.as_matrix())
            qb = Quat.from_matrix(rb.as_matrix())
            assert np.allclose((qa * qb).to_matrix(), (ra * rb).as_matrix(), atol=1e-12)

    def test_shortest_arc(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            a = Vec3.from_seq(rng.normal(size=3)).normalized()
            b = Vec3.from_seq(rng.normal(size=3)).normalized()
            q = Quat.shortest_arc(a, b)
            assert q.rotate(a).distance(b) < 1e-9
        opposite = Quat.shortest_arc(Vec3(0, 1, 0), Vec3(0, -1, 0))
        assert opposite.rotate(Vec3(0, 1, 0)).distance(Vec3(0, -1, 0)) < 1e-9


class TestSlerp:
    def test_same_input(self):
        q = Quat.from_axis_angle(Vec3(0, 0, 1), 0.7)
        got = slerp(q, q, 0.5)
        assert abs(got.dot(q)) == pytest.approx(1.0, abs=1e-12)

    def test_halving_oracle(self):
        # Interpolating identity -> 90 deg about Z at u=0.5 is 45 deg about Z.
        q90 = Quat.from_axis_angle(Vec3(0, 0, 1), math.pi / 2)
        q45 = Quat.from_axis_angle(Vec3(0, 0, 1), math.pi / 4)
        got = slerp(Quat.identity(), q90, 0.5)
        assert abs(got.dot(q45)) == pytest.approx(1.0, abs=1e-12)

    def test_endpoints(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            q0 = Quat.from_matrix(random_rotation(rng))
            q1 = Quat.from_matrix(random_rotation(rng))
            assert abs(slerp(q0, q1, 0.0).dot(q0)) == pytest.approx(1.0, abs=1e-12)
            assert abs(slerp(q0, q1, 1.0).dot(q1)) == pytest.approx(1.0, abs=1e-12)

    def test_double_cover(self):
        # Flipping the sign of one endpoint must not change the rotation path.
        rng = np.random.default_rng(5)
        q0 = Quat.from_matrix(random_rotation(rng))
        q1 = Quat.from_matrix(random_rotation(rng))
        q1_neg = Quat(-q1.w, -q1.x, -q1.y, -q1.z)
        for u in np.linspace(0.0, 1.0, 11):
            a = slerp(q0, q1, float(u))
            b = slerp(q0, q1_neg, float(u))
            assert abs(a.dot(b)) == pytest.approx(1.0, abs=1e-12)

    def test_unit_norm_on_grid(self):
        rng = np.random.default_rng(23)
        q0 = Quat.from_matrix(random_rotation(rng))
        q1 = Quat.from_matrix(random_rotation(rng))
        for u in np.arange(0.0, 1.0 + 1e-12, 0.01):
            assert abs(slerp(q0, q1, float(u)).norm() - 1.0) < 1e-9


class TestPose:
    def test_compose_inverse_round_trip(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            p = Pose(Vec3.from_seq(rng.uniform(-3, 3, size=3)), Quat.from_matrix(random_rotation(rng)))
            q = Pose(Vec3.from_seq(rng.uniform(-3, 3, size=3)), Quat.from_matrix(random_rotation(rng)))
            v = Vec3.from_seq(rng.uniform(-3, 3, size=3))
            direct = p.transform_point(q.transform_point(v))
            composed = p.compose(q).transform_point(v)
            assert direct.distance(composed) < 1e-12
            back = p.inverse().transform_point(p.transform_point(v))
            assert back.distance(v) < 1e-12


class TestSimilarityTransform:
    def test_identity_apply(self):
        t = SimilarityTransform.identity()
        assert t.apply(Vec3(1, 2, 3)) == Vec3(1, 2, 3)

    def test_scale_offset(self):
        t = SimilarityTransform(2.0, np.eye(3), Vec3(1, 0, 0))
        assert t.apply(Vec3.zero()) == Vec3(1, 0, 0)
        assert t.apply(Vec3(1, 1, 0)) == Vec3(3, 2, 0)

    def test_rot90_about_z(self):
        # Hand-applied rotation matrix: 90 deg about Z sends +X to +Y.
        rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        t = SimilarityTransform(1.0, rz, Vec3.zero())
        assert apply_similarity(t, Vec3(1, 0, 0)).distance(Vec3(0, 1, 0)) < 1e-15

    def test_compose_identity(self):
        rng = np.random.default_rng(41)
        t = random_similarity(rng)
        c = compose(t, SimilarityTransform.identity())
        p = Vec3(0.3, -0.2, 0.9)
        assert c.apply(p).distance(t.apply(p)) < 1e-12

    def test_invert_identity(self):
        t = invert(SimilarityTransform.identity())
        assert t.scale == 1.0
        assert np.allclose(t.rotation, np.eye(3))
        assert t.translation == Vec3.zero()

    def test_compose_matches_double_application(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            t1 = random_similarity(rng)
            t2 = random_similarity(rng)
            c = compose(t2, t1)
            for _ in range(5):
                p = Vec3.from_seq(rng.uniform(-10, 10, size=3))
                assert c.apply(p).distance(t2.apply(t1.apply(p))) < 1e-9

    def test_round_trip_over_random_points(self):
        rng = np.random.default_rng(47)
        worst = 0.0
        for _ in range(10):
            t = random_similarity(rng)
            ti = invert(t)
            for _ in range(100):
                p = Vec3.from_seq(rng.uniform(-10, 10, size=3))
                worst = max(worst, ti.apply(t.apply(p)).distance(p))
        assert worst < 1e-9

    def test_compose_invert_preserve_invariants(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            t = compose(random_similarity(rng), random_similarity(rng))
            for m in (t, invert(t)):
                assert np.max(np.abs(m.rotation.T @ m.rotation - np.eye(3))) < 1e-9
                assert abs(np.linalg.det(m.rotation) - 1.0) < 1e-9

    def test_rejects_non_rotation(self):
        with pytest.raises(NonRotation):
            SimilarityTransform(1.0, np.eye(3) * 2.0, Vec3.zero())
        reflect = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(NonRotation):
            SimilarityTransform(1.0, reflect, Vec3.zero())
        with pytest.raises(ValueError):
            SimilarityTransform(-1.0, np.eye(3), Vec3.zero())

    def test_apply_many_matches_apply(self):
        rng = np.random.default_rng(59)
        t = random_similarity(rng)
        pts = rng.uniform(-5, 5, size=(40, 3))
        got = t.apply_many(pts)
        for row, p in zip(got, pts):
            assert Vec3.from_seq(row).distance(t.apply(Vec3.from_seq(p))) < 1e-12
