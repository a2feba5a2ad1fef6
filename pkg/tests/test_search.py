import os

import numpy as np
import pytest

from armvol import (ArmConfiguration, ConvergenceError, Label, Mode,
                    SearchOptions, canonicalize, dedupe, find_critical_points,
                    gradient_norm, refine_newton, search_critical_points,
                    signed_volume)
from armvol.search import CriticalPointRecord
from _builders import aligned_arm, arm_from_edges, full_ortho_arm, random_reduced

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

TRI = ArmConfiguration([1, 1, 1], [E1, E2, E3], Mode.REDUCED)


def perturbed(cfg, scale, seed=0):
    rng = np.random.default_rng(seed)
    dirs = cfg.directions + scale * rng.normal(size=cfg.directions.shape)
    dirs[0] = E1
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return cfg.with_directions(dirs)


class TestRefineNewton:
    def test_perturbed_tri_orthogonal_converges(self):
        start = perturbed(TRI, 1e-3)
        refined = refine_newton(start, grad_tol=1e-12)
        assert gradient_norm(refined) <= 1e-12
        assert signed_volume(refined) == pytest.approx(1.0, abs=1e-10)

    def test_exact_critical_point_unchanged(self):
        refined = refine_newton(TRI, grad_tol=1e-10)
        assert np.abs(refined.directions - TRI.directions).max() <= 1e-14

    def test_perturbed_aligned_converges_to_zero_value(self):
        start = perturbed(aligned_arm([1, 1, 1]), 1e-3, seed=5)
        refined = refine_newton(start, grad_tol=1e-12)
        assert signed_volume(refined) == pytest.approx(0.0, abs=1e-10)

    def test_warns_far_from_critical(self):
        cfg = random_reduced([1, 1, 1], seed=13)
        assert gradient_norm(cfg) > 1e-2
        with pytest.warns(RuntimeWarning):
            try:
                refine_newton(cfg, grad_tol=1e-12, max_iters=3)
            except ConvergenceError:
                pass

    def test_nonconvergence_raises(self):
        cfg = perturbed(TRI, 1e-3, seed=1)
        with pytest.raises(ConvergenceError):
            refine_newton(cfg, grad_tol=1e-16, max_iters=1)


class TestCanonicalize:
    def test_quarter_rotation(self):
        cfg = arm_from_edges([E1, E3, np.array([0.0, -1.0, 0.0])])
        out = canonicalize(cfg)
        assert np.allclose(out.directions[1], E2, atol=1e-15)
        assert out.directions[1][2] == 0.0

    def test_aligned_unchanged(self):
        cfg = aligned_arm([1, 1, 1], signs=[1, -1, 1])
        out = canonicalize(cfg)
        assert np.array_equal(out.directions, cfg.directions)

    def test_rotations_of_critical_circle_agree(self):
        cfg = canonicalize(full_ortho_arm(1.0, 0.5, [2.2, 1.4]))
        rng = np.random.default_rng(3)
        for _ in range(5):
            theta = rng.uniform(0, 2 * np.pi)
            c, s = np.cos(theta), np.sin(theta)
            dirs = cfg.directions.copy()
            y, z = dirs[:, 1].copy(), dirs[:, 2].copy()
            dirs[:, 1] = c * y - s * z
            dirs[:, 2] = s * y + c * z
            again = canonicalize(cfg.with_directions(dirs))
            assert np.abs(again.directions - cfg.directions).max() <= 1e-10

    def test_plane_b_rejected(self):
        cfg = ArmConfiguration([1, 1, 1], [E1, E2, E3], Mode.PLANE_B)
        with pytest.raises(ValueError):
            canonicalize(cfg)


class TestDedupe:
    def _record(self, cfg, value=0.0, grad=1e-14, mult=1):
        return CriticalPointRecord(configuration=cfg, value=value,
                                   grad_norm=grad, multiplicity=mult)

    def test_merges_identical_points(self):
        a = self._record(TRI, value=1.0)
        b = self._record(TRI, value=1.0, grad=1e-15)
        out = dedupe([a, b])
        assert len(out) == 1
        assert out[0].multiplicity == 2
        assert out[0].grad_norm == 1e-15

    def test_opposite_orientations_stay_distinct(self):
        neg = ArmConfiguration([1, 1, 1], [E1, E2, -E3], Mode.REDUCED)
        out = dedupe([self._record(TRI, 1.0), self._record(neg, -1.0)])
        assert len(out) == 2
        assert out[0].value == 1.0  # sorted descending

    def test_order_independence(self):
        recs = [self._record(TRI, 1.0),
                self._record(aligned_arm([1, 1, 1]), 0.0),
                self._record(TRI, 1.0)]
        a = dedupe(recs)
        b = dedupe(recs[::-1])
        assert [r.value for r in a] == [r.value for r in b]
        assert [r.multiplicity for r in a] == [r.multiplicity for r in b]


class TestSearch:
    def test_unit_three_arm_inventory(self):
        records = find_critical_points([1, 1, 1],
                                       SearchOptions(restarts=100, seed=0,
                                                     mode=Mode.FULL))
        values = sorted({round(r.value, 8) for r in records})
        assert values == [-1.0, 0.0, 1.0]
        assert len(records) == 6  # two circles + four aligned points
        by_value = {}
        for r in records:
            by_value.setdefault(round(r.value, 8), []).append(r)
        assert len(by_value[0.0]) == 4
        for r in by_value[0.0]:
            assert (r.morse.morse_index, r.morse.nullity) == (2, 0)
        (top,) = by_value[1.0]
        assert (top.morse.morse_index, top.morse.nullity) == (3, 1)

    def test_scaled_lengths(self):
        records = find_critical_points([2, 1, 1],
                                       SearchOptions(restarts=60, seed=0,
                                                     mode=Mode.FULL))
        values = sorted({round(r.value, 8) for r in records})
        assert values == [-2.0, 0.0, 2.0]

    def test_soundness_and_sorting(self):
        opts = SearchOptions(restarts=40, seed=7)
        result = search_critical_points([1.0, 0.8, 1.1, 0.9], opts)
        assert result.attempts == 120
        values = [r.value for r in result.records]
        assert values == sorted(values, reverse=True)
        for rec in result.records:
            assert rec.grad_norm <= opts.grad_tol
            assert gradient_norm(rec.configuration) <= opts.grad_tol
            assert rec.morse is not None
            assert rec.classification is not None

    def test_equilateral_four_arm_classifies(self):
        records = find_critical_points([1, 1, 1, 1],
                                       SearchOptions(restarts=40, seed=2))
        labels = {r.classification.label for r in records}
        assert Label.FULL_ORTHO in labels
        assert not any(r.classification.ambiguous for r in records)

    def test_determinism(self):
        opts = SearchOptions(restarts=25, seed=11)
        a = search_critical_points([1.0, 0.7, 1.2], opts)
        b = search_critical_points([1.0, 0.7, 1.2], opts)
        assert len(a.records) == len(b.records)
        for ra, rb in zip(a.records, b.records):
            assert ra.value == rb.value
            assert np.array_equal(ra.configuration.directions,
                                  rb.configuration.directions)
            assert ra.multiplicity == rb.multiplicity

    def test_thread_count_does_not_change_results(self):
        opts = SearchOptions(restarts=20, seed=4)
        old = os.environ.get("LVL_THREADS")
        try:
            os.environ["LVL_THREADS"] = "1"
            a = search_critical_points([1, 1, 1], opts)
            os.environ["LVL_THREADS"] = "4"
            b = search_critical_points([1, 1, 1], opts)
        finally:
            if old is None:
                os.environ.pop("LVL_THREADS", None)
            else:
                os.environ["LVL_THREADS"] = old
        assert len(a.records) == len(b.records)
        for ra, rb in zip(a.records, b.records):
            assert ra.value == rb.value
            assert np.array_equal(ra.configuration.directions,
                                  rb.configuration.directions)

    def test_scaling_law(self):
        base = search_critical_points([1.0, 0.9, 0.8],
                                      SearchOptions(restarts=50, seed=5))
        scaled = search_critical_points([2.0, 1.8, 1.6],
                                        SearchOptions(restarts=50, seed=5))

        def clustered(result):
            vals = sorted(r.value for r in result.records)
            out = []
            for v in vals:
                if not out or abs(v - out[-1]) > 1e-7:
                    out.append(v)
            return out

        a = clustered(base)
        b = clustered(scaled)
        assert len(a) == len(b)
        for va, vb in zip(a, b):
            assert vb == pytest.approx(8.0 * va, rel=1e-10, abs=1e-10)

    def test_plane_b_search(self):
        result = search_critical_points(
            [1, 1, 1], SearchOptions(restarts=40, seed=0, mode=Mode.PLANE_B))
        summary = {}
        for r in result.records:
            key = (round(r.value, 6), r.morse.morse_index, r.morse.nullity)
            summary[key] = summary.get(key, 0) + 1
            assert r.classification is None
        assert summary[(1.0, 3, 0)] == 2
        assert summary[(-1.0, 0, 0)] == 2
        assert all(k[1:] == (1, 1) for k in summary if k[0] == 0.0)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            find_critical_points([1, 1], SearchOptions(restarts=1))
        with pytest.raises(ValueError):
            SearchOptions(restarts=0)
        with pytest.raises(ValueError):
            SearchOptions(seed=-1)
        with pytest.raises(ValueError):
            search_critical_points([1, 1, 1, 1],
                                   SearchOptions(mode=Mode.PLANE_B))
