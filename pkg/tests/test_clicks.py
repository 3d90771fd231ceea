import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sasaug import clicks, raster
from sasaug.clicks import ClickLabel, ClickPrompt
from sasaug.errors import EmptyMask, InvalidInput, PredictorContractViolation
from sasaug.metrics import dsc

from conftest import disk_mask


def square(shape=(12, 12), top=3, left=4, size=5):
    m = np.zeros(shape, bool)
    m[top:top + size, left:left + size] = True
    return m


class TestInitialClick:
    def test_single_pixel(self, rng):
        m = np.zeros((6, 6), bool)
        m[4, 1] = True
        c = clicks.initial_click(m, rng)
        assert (c.x, c.y, c.label, c.ordinal) == (1, 4, ClickLabel.POSITIVE, 1)

    def test_five_by_five_candidates(self):
        # depths: 16 pixels at 1, 8 at 2, centre at 3; the 18th smallest is 2
        m = np.ones((5, 5), bool)
        cand = clicks.initial_candidates(m)
        expected = np.zeros((5, 5), bool)
        expected[1:4, 1:4] = True
        assert np.array_equal(cand, expected)
        depth = raster.interior_depth(m)
        assert np.argmax(depth) == 12 and (depth == depth.max()).sum() == 1

    def test_uniform_over_candidates(self):
        m = np.ones((5, 5), bool)
        rng = np.random.default_rng(0)
        hits = {(c.x, c.y) for c in (clicks.initial_click(m, rng) for _ in range(300))}
        assert hits == {(x, y) for x in range(1, 4) for y in range(1, 4)}

    def test_empty(self, rng):
        with pytest.raises(EmptyMask):
            clicks.initial_click(np.zeros((3, 3), bool), rng)

    def test_nearest_rank(self):
        assert clicks.nearest_rank(np.arange(1, 11), 70) == 7
        assert clicks.nearest_rank(np.array([5.0]), 70) == 5

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.bool_, st.tuples(st.integers(1, 15), st.integers(1, 15))), st.integers(0, 2**32))
    def test_inside_mask(self, m, seed):
        if not m.any():
            return
        c = clicks.initial_click(m, np.random.default_rng(seed))
        assert m[c.y, c.x]


class TestErrorMap:
    def test_equal(self):
        m = square()
        assert not clicks.error_map(m, m).any()

    def test_empty_pred(self):
        m = square()
        assert np.array_equal(clicks.error_map(m, np.zeros_like(m)), m)

    def test_dilation_ring(self):
        m = square()
        grown = raster.dilate_disk(m, 1)
        assert np.array_equal(clicks.error_map(m, grown), grown & ~m)

    def test_mismatch(self):
        with pytest.raises(InvalidInput):
            clicks.error_map(np.zeros((2, 2)), np.zeros((2, 3)))


class TestNextClick:
    def test_converged(self):
        m = square()
        assert clicks.next_click(m, m) is None

    def test_empty_pred_square(self):
        c = clicks.next_click(square(), np.zeros((12, 12), bool), ordinal=2)
        assert (c.x, c.y, c.label, c.ordinal) == (6, 5, ClickLabel.POSITIVE, 2)

    def test_false_positive_blob(self):
        rs = square()
        pred = rs.copy()
        pred[0:3, 0:3] = True  # disjoint from the square at rows 3.., cols 4..
        c = clicks.next_click(rs, pred)
        assert (c.x, c.y, c.label) == (1, 1, ClickLabel.NEGATIVE)

    def test_largest_component_wins(self):
        rs = np.zeros((20, 20), bool)
        rs[10:18, 10:18] = True
        pred = rs.copy()
        pred[0:2, 0:2] = True  # 4-pixel false positive
        pred[12:16, 12:16] = False  # 16-pixel false negative
        c = clicks.next_click(rs, pred)
        assert c.label is ClickLabel.POSITIVE and 12 <= c.y < 16 and 12 <= c.x < 16

    def test_tie_breaks_row_major(self):
        rs = np.zeros((10, 10), bool)
        pred = rs.copy()
        pred[6, 6] = True
        pred[2, 8] = True
        c = clicks.next_click(rs, pred)
        assert (c.x, c.y) == (8, 2)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32))
    def test_lands_on_error(self, seed):
        r = np.random.default_rng(seed)
        rs, pred = r.random((14, 14)) < 0.4, r.random((14, 14)) < 0.4
        c = clicks.next_click(rs, pred)
        if c is None:
            assert np.array_equal(rs, pred)
            return
        assert (rs ^ pred)[c.y, c.x]
        assert (c.label is ClickLabel.POSITIVE) == bool(rs[c.y, c.x])


class TestMock:
    def test_no_clicks_is_erosion(self):
        rs = disk_mask((40, 40), (20, 20), 12)
        out = clicks.mock_predictor(rs, [])
        assert np.array_equal(out, raster.erode_disk(rs, 3))
        assert out.sum() < rs.sum()

    def test_covering_clicks(self):
        rs = disk_mask((40, 40), (20, 20), 12)
        cover = [ClickPrompt(int(x), int(y), ClickLabel.POSITIVE) for y, x in np.argwhere(rs)[::5]]
        assert np.array_equal(clicks.mock_predictor(rs, cover), rs)

    def test_far_negative_is_noop(self):
        rs = disk_mask((60, 60), (20, 20), 10)
        base = [ClickPrompt(20, 20, ClickLabel.POSITIVE)]
        far = base + [ClickPrompt(55, 55, ClickLabel.NEGATIVE)]
        assert np.array_equal(clicks.mock_predictor(rs, base), clicks.mock_predictor(rs, far))

    def test_negative_removes(self):
        rs = disk_mask((40, 40), (20, 20), 12)
        out = clicks.mock_predictor(rs, [ClickPrompt(20, 20, ClickLabel.NEGATIVE)])
        assert not out[20, 20]


class TestSession:
    def test_perfect_predictor(self, rng):
        rs = disk_mask((32, 32), (16, 16), 8)
        s = clicks.simulate_session(rs, lambda img, c: rs, 10, rng)
        assert s.converged and len(s.clicks) == len(s.predictions) == 1

    def test_empty_predictor(self, rng):
        rs = disk_mask((32, 32), (16, 16), 8)
        s = clicks.simulate_session(rs, lambda img, c: np.zeros_like(rs), 6, rng)
        assert not s.converged and len(s.clicks) == len(s.predictions) == 6
        assert all(c.label is ClickLabel.POSITIVE for c in s.clicks)
        assert [c.ordinal for c in s.clicks] == list(range(1, 7))

    def test_mock_monotone(self, rng):
        rs = disk_mask((128, 128), (64, 60), 30)
        s = clicks.simulate_session(rs, clicks.mock_for(rs), 5, rng)
        scores = [dsc(p, rs) for p in s.predictions]
        assert len(scores) == 5
        assert all(b >= a for a, b in zip(scores, scores[1:]))
        assert scores[-1] > scores[0]

    def test_predictor_sees_clicks_so_far(self, rng):
        seen = []
        rs = disk_mask((32, 32), (16, 16), 8)

        def predictor(image, cs):
            seen.append(len(cs))
            return np.zeros_like(rs)

        clicks.simulate_session(rs, predictor, 4, rng, image="ctx")
        assert seen == [1, 2, 3, 4]

    def test_bad_predictor(self, rng):
        rs = disk_mask((32, 32), (16, 16), 8)
        with pytest.raises(PredictorContractViolation):
            clicks.simulate_session(rs, lambda img, c: np.zeros((3, 3)), 3, rng)

    def test_max_clicks_validated(self, rng):
        with pytest.raises(InvalidInput):
            clicks.simulate_session(np.ones((3, 3)), lambda i, c: np.ones((3, 3)), 0, rng)

    def test_deterministic(self):
        rs = disk_mask((64, 64), (30, 33), 20)
        runs = [
            [c.to_dict() for c in clicks.simulate_session(rs, clicks.mock_for(rs), 5, np.random.default_rng(4)).clicks]
            for _ in range(2)
        ]
        assert runs[0] == runs[1]
