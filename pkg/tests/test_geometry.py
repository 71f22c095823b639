"""Combat geometry against hand values and an independent rotation oracle."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from dogfight.errors import DegenerateGeometryError
from dogfight.geometry import (GeometrySnapshot, Pose, angles,
                               body_to_earth_matrix, heading_vector,
                               los_vector, wez_contains, wrap_pi)


def _pose(pos, roll=0.0, pitch=0.0, yaw=0.0):
    return Pose(position_e=np.array(pos, dtype=float), roll=roll, pitch=pitch,
                yaw=yaw)


def _random_pose(rng):
    return Pose(
        position_e=rng.uniform(-30000, 30000, 3) + np.array([0, 0, 45000.0]),
        roll=rng.uniform(-math.pi, math.pi),
        pitch=rng.uniform(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3),
        yaw=rng.uniform(-math.pi, math.pi),
    )


def oracle_angles(own: Pose, oppo: Pose):
    """Brute-force reference in north-east-down axes via scipy rotations."""
    def ned(p):
        return np.array([p[0], p[1], -p[2]])

    def heading(pose):
        r = Rotation.from_euler("ZYX", [pose.yaw, pose.pitch, pose.roll])
        return r.as_matrix() @ np.array([1.0, 0.0, 0.0])

    def ang(a, b):
        c = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
        return math.acos(np.clip(c, -1.0, 1.0))

    rho = ned(oppo.position_e) - ned(own.position_e)
    x_own, x_oppo = heading(own), heading(oppo)
    rho_proj = rho * np.array([1.0, 1.0, 0.0])
    x_proj = x_own * np.array([1.0, 1.0, 0.0])
    return {
        "deviation": ang(x_own, rho),
        "aspect": ang(x_oppo, rho),
        "angle_off": ang(x_own, x_oppo),
        "elevation": ang(rho, rho_proj),
        "horizontal": ang(x_proj, rho_proj),
    }


class TestLosVector:
    def test_direct_offset(self):
        own = _pose([0, 0, 15000])
        oppo = _pose([1000, 0, 15000])
        np.testing.assert_array_equal(los_vector(own, oppo), [1000, 0, 0])

    def test_coincident_zero(self):
        own = _pose([5, 5, 5])
        np.testing.assert_array_equal(los_vector(own, own), [0, 0, 0])

    def test_antisymmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a, b = _random_pose(rng), _random_pose(rng)
            np.testing.assert_array_equal(los_vector(a, b), -los_vector(b, a))


class TestAngles:
    def test_dead_ahead(self):
        own = _pose([0, 0, 15000], yaw=0.0)
        oppo = _pose([5000, 0, 15000], yaw=0.0)
        snap = angles(own, oppo)
        assert snap.deviation_deg == pytest.approx(0.0, abs=1e-9)
        assert snap.elevation_deg == pytest.approx(0.0, abs=1e-9)
        assert snap.horizontal_deg == pytest.approx(0.0, abs=1e-9)

    def test_forty_five_elevation(self):
        own = _pose([0, 0, 15000], yaw=0.0)
        oppo = _pose([1000, 0, 16000], yaw=0.0)
        snap = angles(own, oppo)
        assert snap.elevation_deg == pytest.approx(45.0, abs=1e-9)

    def test_matches_rotation_oracle(self):
        rng = np.random.default_rng(7)
        tol = 1e-9  # radians
        for _ in range(1000):
            own, oppo = _random_pose(rng), _random_pose(rng)
            snap = angles(own, oppo)
            ref = oracle_angles(own, oppo)
            assert abs(math.radians(snap.deviation_deg) - ref["deviation"]) < tol
            assert abs(math.radians(snap.aspect_deg) - ref["aspect"]) < tol
            assert abs(math.radians(snap.angle_off_deg) - ref["angle_off"]) < tol
            assert abs(math.radians(snap.elevation_deg) - ref["elevation"]) < tol
            assert abs(math.radians(snap.horizontal_deg) - ref["horizontal"]) < tol

    def test_ranges_and_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            own, oppo = _random_pose(rng), _random_pose(rng)
            fwd, rev = angles(own, oppo), angles(oppo, own)
            for snap in (fwd, rev):
                assert 0.0 <= snap.deviation_deg <= 180.0
                assert 0.0 <= snap.aspect_deg <= 180.0
                assert 0.0 <= snap.angle_off_deg <= 180.0
                assert 0.0 <= snap.horizontal_deg <= 180.0
                assert 0.0 <= snap.elevation_deg <= 180.0
                assert snap.range_ft > 0
            assert fwd.angle_off_deg == pytest.approx(rev.angle_off_deg, abs=1e-9)

    def test_common_yaw_rotation_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            own, oppo = _random_pose(rng), _random_pose(rng)
            delta = rng.uniform(-math.pi, math.pi)
            c, s = math.cos(delta), math.sin(delta)
            rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

            def rotated(p):
                return Pose(position_e=rot @ p.position_e, roll=p.roll,
                            pitch=p.pitch, yaw=wrap_pi(p.yaw + delta))

            base = angles(own, oppo)
            turned = angles(rotated(own), rotated(oppo))
            for attr in ("deviation_deg", "aspect_deg", "angle_off_deg",
                         "horizontal_deg", "elevation_deg"):
                assert getattr(base, attr) == pytest.approx(
                    getattr(turned, attr), abs=1e-8), attr

    def test_coincident_raises(self):
        own = _pose([0, 0, 15000])
        with pytest.raises(DegenerateGeometryError):
            angles(own, _pose([0, 0, 15000]))

    def test_vertical_los_convention(self):
        own = _pose([0, 0, 15000], yaw=0.3)
        oppo = _pose([0, 0, 18000], yaw=1.0)
        snap = angles(own, oppo)
        assert snap.elevation_deg == 90.0
        assert snap.horizontal_deg == 0.0

    def test_vertical_heading_convention(self):
        own = _pose([0, 0, 15000], pitch=math.pi / 2)
        oppo = _pose([4000, 0, 15000])
        snap = angles(own, oppo)
        assert snap.horizontal_deg == 0.0


class TestWez:
    def _snap(self, deviation, rng_ft):
        return GeometrySnapshot(los=np.zeros(3), range_ft=rng_ft,
                                deviation_deg=deviation, aspect_deg=0.0,
                                angle_off_deg=0.0, horizontal_deg=0.0,
                                elevation_deg=0.0)

    def test_inside(self):
        assert wez_contains(self._snap(0.0, 1000.0))

    def test_too_close(self):
        assert not wez_contains(self._snap(0.0, 400.0))

    def test_cone_exceeded(self):
        assert not wez_contains(self._snap(3.0, 1000.0))

    def test_boundaries_inclusive(self):
        assert wez_contains(self._snap(2.0, 500.0))
        assert wez_contains(self._snap(2.0, 3000.0))

    def test_monotone_in_deviation(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            r = rng.uniform(500, 3000)
            lam = rng.uniform(0, 10)
            if wez_contains(self._snap(lam, r)):
                assert wez_contains(self._snap(lam * rng.uniform(0, 1), r))


class TestFrames:
    def test_heading_vector_north_level(self):
        own = _pose([0, 0, 0], yaw=0.0)
        np.testing.assert_allclose(heading_vector(own), [1, 0, 0], atol=1e-12)

    def test_heading_vector_climb(self):
        own = _pose([0, 0, 0], pitch=math.radians(30))
        np.testing.assert_allclose(
            heading_vector(own),
            [math.cos(math.radians(30)), 0, math.sin(math.radians(30))],
            atol=1e-12)

    def test_matrix_orthonormal(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            r = body_to_earth_matrix(rng.uniform(-3, 3), rng.uniform(-1.5, 1.5),
                                     rng.uniform(-3, 3))
            np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-12)

    def test_wrap_pi(self):
        assert wrap_pi(math.pi) == pytest.approx(math.pi)
        assert wrap_pi(-math.pi) == pytest.approx(math.pi)
        assert wrap_pi(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
