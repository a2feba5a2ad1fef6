import numpy as np
import pytest

from armvol import (ArmConfiguration, Mode, condition_residuals,
                    euclidean_gradient, gradient_check, gradient_norm,
                    hessian_tangent, morse_data, riemannian_gradient,
                    signed_volume_many)
from _builders import (aligned_arm, full_ortho_arm, random_reduced,
                       zigzag_arm)

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

TRI = ArmConfiguration([1, 1, 1], [E1, E2, E3], Mode.FULL)
NEG_TRI = ArmConfiguration([1, 1, 1], [E1, E3, E2], Mode.FULL)


def fd_directional(cfg, joint, delta, h=1e-5):
    """Central difference of V under an additive edge perturbation."""
    edges = cfg.edges
    plus, minus = edges.copy(), edges.copy()
    plus[joint] += h * delta
    minus[joint] -= h * delta
    ones = np.ones(cfg.n)
    vals = signed_volume_many(ones, np.stack((plus, minus)))
    return (vals[0] - vals[1]) / (2 * h)


class TestEuclideanGradient:
    def test_tri_orthogonal_second_joint(self):
        w = euclidean_gradient(TRI)
        # gradient for edge 2 lies on the e1 x e3 line with magnitude 1
        assert np.linalg.norm(w[0]) == pytest.approx(1.0, abs=1e-14)
        assert abs(w[0] @ E2) == pytest.approx(1.0, abs=1e-14)
        # sign convention fixed by finite differences
        assert w[0] @ E2 == pytest.approx(fd_directional(TRI, 1, E2), abs=1e-9)

    def test_aligned_tangent_gradient_vanishes(self):
        assert gradient_norm(aligned_arm([1, 1, 1, 1])) == 0.0

    def test_random_four_arm_matches_finite_differences(self):
        cfg = random_reduced([1.0, 0.9, 1.2, 0.7], seed=2)
        w = euclidean_gradient(cfg)
        for joint in range(1, 4):
            for delta in np.eye(3):
                fd = fd_directional(cfg, joint, delta)
                assert w[joint - 1] @ delta == pytest.approx(
                    fd, rel=1e-6, abs=1e-10)


class TestRiemannianGradient:
    def test_zero_at_tri_orthogonal(self):
        assert gradient_norm(TRI) <= 1e-12

    def test_zero_at_aligned(self):
        assert gradient_norm(aligned_arm([1, 1, 1])) <= 1e-12

    def test_nonzero_at_generic_point(self):
        assert gradient_norm(random_reduced([1, 1, 1], seed=4)) > 1e-3

    def test_orthogonal_to_first_edge_rotation_orbit(self):
        cfg = random_reduced([1.0, 0.6, 1.4, 0.8, 1.1], seed=8)
        g = riemannian_gradient(cfg)
        orbit = np.cross(np.broadcast_to(E1, (cfg.n - 1, 3)),
                         cfg.directions[1:])
        pairing = sum(g[r] @ orbit[r] for r in range(cfg.n - 1))
        assert abs(pairing) < 1e-12 * (1 + np.abs(g).max())

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_matches_retraction_finite_differences(self, n):
        rng = np.random.default_rng(n)
        for trial in range(25):
            lengths = rng.uniform(0.4, 1.9, size=n)
            cfg = random_reduced(lengths, seed=31 * n + trial)
            assert gradient_check(cfg) <= 1e-6

    def test_plane_b_gradient_stays_in_plane(self):
        cfg = random_reduced([1, 1, 1], seed=12, mode=Mode.PLANE_B)
        g = riemannian_gradient(cfg)
        assert g[0, 2] == 0.0
        assert gradient_check(cfg) <= 1e-6


class TestConditionResiduals:
    def test_tri_orthogonal_all_ortho(self):
        res = condition_residuals(TRI)
        assert res.flags(1e-8) == ["ortho", "ortho"]

    def test_aligned_all_parallel(self):
        res = condition_residuals(aligned_arm([1, 1, 1, 1, 1]))
        assert res.flags(1e-8) == ["parallel"] * 4

    def test_zigzag_tail_parallel(self):
        cfg = zigzag_arm([1.0, 1.0, 1.0, 1.0], amplitude=0.5)
        res = condition_residuals(cfg)
        assert res.flags(1e-8) == ["parallel"] * 3
        assert gradient_norm(cfg) <= 1e-12

    def test_difference_vector_uses_empty_leading_sum(self):
        cfg = random_reduced([1, 1, 1], seed=3)
        res = condition_residuals(cfg)
        expected = -(cfg.edges[2])
        assert np.allclose(res.differences[0], expected, atol=1e-14)


class TestFirstOrderDichotomy:
    """Per-joint ortho/parallel residuals vanish exactly at critical points."""

    def test_critical_configurations_satisfy_one_condition_per_joint(self):
        from _builders import mixed_even_arm
        for cfg in (TRI, aligned_arm([1, 1, 1, 1, 1]),
                    zigzag_arm([1.0, 1.1, 0.9, 1.2], amplitude=0.4),
                    mixed_even_arm()):
            scale = cfg.total_length
            res = condition_residuals(cfg)
            assert gradient_norm(cfg) <= 1e-8
            for o, p in zip(res.ortho, res.parallel):
                assert min(o, p) <= 1e-10 * scale

    def test_generic_configuration_violates_both_somewhere(self):
        cfg = random_reduced([1.0, 0.9, 1.1, 0.8], seed=17)
        res = condition_residuals(cfg)
        scale = cfg.total_length
        assert gradient_norm(cfg) > 1e-8
        assert any(min(o, p) > 1e-8 * scale
                   for o, p in zip(res.ortho, res.parallel))


class TestHessian:
    def test_tri_orthogonal_spectrum(self):
        md = morse_data(TRI)
        assert md.dimension == 4
        assert (md.morse_index, md.nullity) == (3, 1)
        assert md.transversal_index == 3

    def test_aligned_spectrum(self):
        md = morse_data(aligned_arm([1, 1, 1]))
        assert (md.morse_index, md.nullity) == (2, 0)
        assert md.eigenvalues[-1] > 0

    def test_negative_orientation_spectrum(self):
        md = morse_data(NEG_TRI)
        assert (md.morse_index, md.nullity) == (0, 1)
        assert md.transversal_index == 0

    def test_plane_b_degenerate_circle_point(self):
        # first two edges aligned, third anywhere in the xy-plane
        third = [np.sin(0.37), np.cos(0.37), 0.0]
        cfg = ArmConfiguration([1, 1, 1], [E1, E1, third], Mode.PLANE_B)
        assert gradient_norm(cfg) <= 1e-12
        md = morse_data(cfg)
        assert md.dimension == 3
        assert (md.morse_index, md.nullity) == (1, 1)
        assert md.transversal_index == 1

    def test_symmetry(self):
        cfg = full_ortho_arm(1.0, 0.5, [2.1, 1.2])
        H = hessian_tangent(cfg)
        bound = 1e-6 * (1 + np.abs(H).max())
        assert np.abs(H - H.T).max() <= bound

    def test_eigenvalue_count_consistency(self):
        configs = [TRI, NEG_TRI, aligned_arm([1, 1, 1, 1]),
                   full_ortho_arm(1.0, 0.4, [2.5, 1.7]),
                   zigzag_arm([1.0, 1.0, 1.0, 1.0], amplitude=0.3)]
        for cfg in configs:
            md = morse_data(cfg)
            positives = int(np.sum(md.eigenvalues > md.tau))
            assert md.morse_index + md.nullity + positives == md.dimension

    def test_warns_away_from_critical_points(self):
        cfg = random_reduced([1, 1, 1], seed=21)
        assert gradient_norm(cfg) > 1e-3
        with pytest.warns(RuntimeWarning):
            hessian_tangent(cfg)

    def test_no_warning_with_check_disabled(self):
        cfg = random_reduced([1, 1, 1], seed=21)
        import warnings as w
        with w.catch_warnings():
            w.simplefilter("error")
            hessian_tangent(cfg, warn_threshold=None)


class TestBottFamily:
    def test_rotating_critical_point_preserves_spectrum(self):
        cfg = full_ortho_arm(1.0, 0.45, [2.0, 1.0, 0.5])
        assert gradient_norm(cfg) <= 1e-12
        eig0 = morse_data(cfg).eigenvalues
        for theta in (0.7, 2.9):
            c, s = np.cos(theta), np.sin(theta)
            dirs = cfg.directions.copy()
            y, z = dirs[:, 1].copy(), dirs[:, 2].copy()
            dirs[:, 1] = c * y - s * z
            dirs[:, 2] = s * y + c * z
            rotated = cfg.with_directions(dirs)
            assert gradient_norm(rotated) <= 1e-8
            eig = morse_data(rotated).eigenvalues
            assert np.abs(eig - eig0).max() <= 1e-6
