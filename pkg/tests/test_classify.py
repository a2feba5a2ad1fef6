import numpy as np
import pytest

from armvol import (CircleFitError, JointFlag, Label, PlanarSubtype,
                    check_cyclic_closed, check_diacyclic, classify_critical,
                    detect_zigzag, fit_circle, gradient_norm, project_perp,
                    signed_area, signed_volume)
from _builders import (aligned_arm, arm_from_edges, full_ortho_arm,
                       mixed_even_arm, mixed_odd_arm, mixed_two_gon_arm,
                       zigzag_arm)

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def circle_points(center, radius, angles):
    return np.array([[center[0] + radius * np.cos(a),
                      center[1] + radius * np.sin(a)] for a in angles])


class TestFitCircle:
    def test_exact_unit_circle(self):
        pts = circle_points((0, 0), 1.0, [0.1, 1.7, 3.0, 5.1])
        fit = fit_circle(pts)
        assert np.linalg.norm(fit.center) <= 1e-12
        assert fit.radius == pytest.approx(1.0, abs=1e-12)
        assert fit.rms <= 1e-12

    def test_three_point_circumcircle(self):
        pts = circle_points((2.0, -1.0), 0.7, [0.4, 2.2, 4.0])
        fit = fit_circle(pts)
        assert fit.rms <= 1e-12
        assert fit.radius == pytest.approx(0.7, abs=1e-12)

    def test_collinear_points_fail(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(CircleFitError):
            fit_circle(pts)

    def test_coincident_points_fail(self):
        with pytest.raises(CircleFitError):
            fit_circle(np.zeros((4, 2)))

    def test_noisy_circle_rms(self):
        rng = np.random.default_rng(0)
        pts = circle_points((0.5, 0.5), 2.0, np.linspace(0, 5.5, 12))
        pts += 1e-4 * rng.normal(size=pts.shape)
        fit = fit_circle(pts)
        assert fit.radius == pytest.approx(2.0, abs=1e-3)
        assert fit.rms < 3e-4


class TestDiacyclic:
    def test_semicircular_chain(self):
        pts = circle_points((0, 0), 1.0, [np.pi, 2.0, 1.0, 0.0])
        res = check_diacyclic(pts, tol=1e-9)
        assert res.ok

    def test_closed_square_fails(self):
        square = np.array([(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)], float)
        res = check_diacyclic(square, tol=1e-6)
        assert not res.ok  # endpoints coincide, span is no diameter

    def test_perturbation_sweep(self):
        rng = np.random.default_rng(5)
        pts = circle_points((0, 0), 1.0, [np.pi, 2.4, 1.3, 0.0])
        noisy = pts + 1e-3 * rng.normal(size=pts.shape)
        assert not check_diacyclic(noisy, tol=1e-6).ok
        assert check_diacyclic(noisy, tol=1e-2).ok


class TestCyclicClosed:
    def test_regular_pentagon(self):
        angles = np.linspace(0, 2 * np.pi, 6)  # closed traversal
        pts = circle_points((0.2, -0.4), 1.3, angles)
        assert check_cyclic_closed(pts, tol=1e-9).ok

    def test_open_chain_fails_closure(self):
        pts = circle_points((0, 0), 1.0, [0.0, 1.5, 3.0, 4.0])
        assert not check_cyclic_closed(pts, tol=1e-6).ok

    def test_mixed_odd_sub_arm_closes(self):
        cfg = mixed_odd_arm()
        verts = project_perp(cfg, cfg.directions[0])
        # ortho sub-chain: vertices 1..4 of the projection (joints 2..4)
        sub = verts[:4]
        res = check_cyclic_closed(np.vstack((sub, sub[:1])), tol=1e-9)
        assert res.ok


class TestDetectZigzag:
    def test_alternating_arm(self):
        cfg = zigzag_arm([1.0, 0.9, 1.1, 0.8], amplitude=0.6)
        res = detect_zigzag(cfg, from_index=2, tol=1e-9)
        assert res.ok
        assert res.direction is not None

    def test_aligned_tail_is_degenerate_zigzag(self):
        res = detect_zigzag(aligned_arm([1, 1, 1, 1]), from_index=2, tol=1e-9)
        assert res.ok
        assert res.direction is None

    def test_generic_tail_fails(self):
        cfg = arm_from_edges([E1, E2, [0.0, 0.3, 0.954], E3])
        assert not detect_zigzag(cfg, from_index=2, tol=1e-6).ok

    def test_radius_condition(self):
        cfg = zigzag_arm([1.0, 0.9, 1.1, 0.8], amplitude=0.6)
        assert detect_zigzag(cfg, 2, 1e-9, circle_radius=0.3).ok
        assert not detect_zigzag(cfg, 2, 1e-9, circle_radius=0.85).ok

    def test_from_index_range(self):
        with pytest.raises(ValueError):
            detect_zigzag(aligned_arm([1, 1, 1]), from_index=7, tol=1e-6)


class TestClassifyCritical:
    def test_tri_orthogonal_full_ortho(self):
        cfg = arm_from_edges([E1, E2, E3])
        report = classify_critical(cfg)
        assert report.label is Label.FULL_ORTHO
        assert report.split == 3
        assert not report.ambiguous
        assert report.diameter.ok
        assert report.planar_subtype is PlanarSubtype.DIACYCLIC

    def test_aligned_five_arm(self):
        report = classify_critical(aligned_arm([1, 1, 1, 1, 1],
                                               signs=[1, 1, -1, 1, -1]))
        assert report.label is Label.ALIGNED
        assert not report.ambiguous
        assert report.zigzag.ok

    def test_zigzag_family(self):
        cfg = zigzag_arm([1.0, 1.0, 0.9, 1.2], amplitude=0.55)
        assert gradient_norm(cfg) <= 1e-13
        report = classify_critical(cfg)
        assert report.label is Label.ZIGZAG_FAMILY
        assert report.zigzag.ok

    def test_mixed_even_split(self):
        cfg = mixed_even_arm()
        assert gradient_norm(cfg) <= 1e-12
        report = classify_critical(cfg)
        assert report.label is Label.MIXED
        assert report.split == 4
        assert not report.ambiguous
        assert report.pattern == (JointFlag.ORTHO, JointFlag.ORTHO,
                                  JointFlag.ORTHO, JointFlag.PARALLEL,
                                  JointFlag.PARALLEL)
        # n - k = 2 even: diameter condition
        assert report.diameter is not None and report.diameter.ok
        assert report.closing is None
        assert report.zigzag.ok
        assert report.planar_subtype is PlanarSubtype.DIACYCLIC
        assert report.circle.rms <= 1e-6 * report.circle.radius

    def test_mixed_odd_split(self):
        cfg = mixed_odd_arm()
        assert gradient_norm(cfg) <= 1e-12
        report = classify_critical(cfg)
        assert report.label is Label.MIXED
        assert report.split == 4
        # n - k = 1 odd: closing condition
        assert report.closing is not None and report.closing.ok
        assert report.diameter is None
        assert report.planar_subtype is PlanarSubtype.CYCLIC_CLOSED

    def test_mixed_two_gon(self):
        cfg = mixed_two_gon_arm()
        assert gradient_norm(cfg) <= 1e-12
        report = classify_critical(cfg)
        assert report.label is Label.MIXED
        assert report.split == 3
        assert report.closing.ok
        assert report.zigzag.ok

    def test_full_ortho_value_identity(self):
        cfg = full_ortho_arm(1.3, 0.6, [2.7, 1.9, 0.8])
        report = classify_critical(cfg)
        assert report.label is Label.FULL_ORTHO
        verts = project_perp(cfg, cfg.directions[0])
        shoelace_twice = 2.0 * signed_area(verts)
        v = signed_volume(cfg)
        assert v == pytest.approx(cfg.lengths[0] * shoelace_twice, rel=1e-10)

    def test_projection_circle_property(self):
        for cfg in (full_ortho_arm(1.0, 0.5, [2.4, 1.5]), mixed_even_arm(),
                    mixed_odd_arm()):
            report = classify_critical(cfg)
            assert report.circle is not None
            assert report.circle.rms <= 1e-6 * report.circle.radius

    def test_near_miss_is_ambiguous_not_fatal(self):
        # nudge a mixed critical point just outside the parallel tolerance
        cfg = mixed_even_arm()
        dirs = cfg.directions.copy()
        dirs[4] = dirs[4] + 3e-5 * np.array([0.0, dirs[4][2], -dirs[4][1]])
        dirs[4] /= np.linalg.norm(dirs[4])
        report = classify_critical(cfg.with_directions(dirs), tol=1e-6)
        assert isinstance(report.ambiguous, bool)
        assert report.label in (Label.MIXED, Label.ZIGZAG_FAMILY)
