from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasaug import sas
from sasaug.errors import InvalidInput
from sasaug.sas import NoiseKind, NoiseSpec, Placement, Sample, SasConfig, SizeClass

from conftest import disk_mask

SIDE = 256


def canvas_sample(seed=0, radius=60, center=(128, 128), id="s"):
    rng = np.random.default_rng(seed)
    image = rng.random((SIDE, SIDE))
    return Sample.from_arrays(image, disk_mask((SIDE, SIDE), center, radius), id)


def exact_count_mask(count, shape=(100, 100)):
    m = np.zeros(shape[0] * shape[1], bool)
    m[:count] = True
    return m.reshape(shape)


class TestClassify:
    @pytest.mark.parametrize("count,expected", [
        (200, SizeClass.SMALL), (300, SizeClass.SMALL), (301, SizeClass.LARGE), (1000, SizeClass.LARGE),
    ])
    def test_threshold(self, count, expected):
        assert sas.classify_size(exact_count_mask(count), 0.03) is expected

    def test_sample_carries_original_fraction(self):
        s = Sample.from_arrays(np.zeros((10, 10)), np.zeros((10, 10)), original_mask_fraction=0.5)
        assert s.size_class is SizeClass.LARGE and s.original_mask_fraction == 0.5


class TestThumbnail:
    def test_half(self):
        t = sas.make_thumbnail(canvas_sample(), 128)
        assert t.image.shape == t.mask.shape == (128, 128)

    def test_ratio_one(self):
        s = canvas_sample()
        t = sas.make_thumbnail(s, 256)
        assert np.array_equal(t.image, s.image) and np.array_equal(t.mask, s.mask)

    def test_area_fraction_preserved(self):
        s = canvas_sample(radius=60)
        t = sas.make_thumbnail(s, 128)
        assert abs(t.mask.mean() - s.mask.mean()) <= 0.02

    def test_out_of_range(self):
        with pytest.raises(InvalidInput):
            sas.make_thumbnail(canvas_sample(), 63)
        with pytest.raises(InvalidInput):
            sas.make_thumbnail(canvas_sample(), 257)


class TestPlacement:
    def test_full_size_forced_origin(self, rng):
        s = canvas_sample()
        assert sas.draw_offset(s.image.shape, SasConfig(), rng) == (0, 0)
        out = sas.place_on_canvas(s, SasConfig(), rng)
        assert np.array_equal(out.image, s.image)

    def test_centered(self):
        t = sas.make_thumbnail(canvas_sample(), 64)
        cfg = SasConfig(placement=Placement.CENTERED)
        assert sas.draw_offset(t.image.shape, cfg, None) == (96, 96)
        out = sas.place_on_canvas(t, cfg)
        assert np.array_equal(out.mask[96:160, 96:160], t.mask)

    def test_moves_never_edits(self, rng):
        t = sas.make_thumbnail(canvas_sample(), 100)
        for _ in range(20):
            out = sas.place_on_canvas(t, SasConfig(), rng)
            assert out.mask.sum() == t.mask.sum()
            assert np.isclose(out.image.sum(), t.image.sum())

    def test_offsets_cover_range(self, rng):
        cfg = SasConfig(canvas_side=10, thumb_min=1, thumb_max=10)
        seen = {sas.draw_offset((7, 8), cfg, rng) for _ in range(500)}
        assert seen == {(x, y) for x in range(3) for y in range(4)}

    def test_too_large(self):
        big = Sample.from_arrays(np.zeros((300, 300)), np.zeros((300, 300)))
        with pytest.raises(InvalidInput):
            sas.place_on_canvas(big, SasConfig())


class TestNoise:
    def img_roi(self):
        img = np.full((10, 10), 0.5)
        roi = np.zeros((10, 10), bool)
        roi[2:7, 3:8] = True
        return img, roi

    def test_gaussian_zero_sigma(self, rng):
        img, roi = self.img_roi()
        out = sas.inject_noise(img, roi, NoiseSpec(NoiseKind.GAUSSIAN, gaussian_sigma=0.0), rng)
        assert out.tobytes() == img.tobytes()

    @pytest.mark.parametrize("kind", list(NoiseKind))
    def test_empty_roi(self, kind, rng):
        img = np.random.default_rng(0).random((8, 8))
        out = sas.inject_noise(img, np.zeros((8, 8), bool), NoiseSpec(kind), rng)
        assert out.tobytes() == img.tobytes()

    @pytest.mark.parametrize("kind", list(NoiseKind))
    def test_locality_and_range(self, kind, rng):
        img = np.random.default_rng(1).random((32, 32))
        roi = disk_mask((32, 32), (16, 16), 9)
        out = sas.inject_noise(img, roi, NoiseSpec(kind, gaussian_sigma=0.5, speckle_sigma=0.5), rng)
        assert out[~roi].tobytes() == img[~roi].tobytes()
        assert out.min() >= 0 and out.max() <= 1
        assert not np.array_equal(out[roi], img[roi])

    def test_salt_pepper_exact_count(self, rng):
        img = np.full((10, 10), 0.5)
        roi = np.ones((10, 10), bool)
        for _ in range(50):
            out = sas.inject_noise(img, roi, NoiseSpec(NoiseKind.SALT_PEPPER, sp_fraction=0.02), rng)
            changed = out != img
            assert changed.sum() == 2
            assert set(out[changed]) <= {0.0, 1.0}

    def test_poisson_is_rescaled_counts(self, rng):
        img, roi = self.img_roi()
        out = sas.inject_noise(img, roi, NoiseSpec(NoiseKind.POISSON, poisson_scale=10.0), rng)
        counts = out[roi] * 10.0
        np.testing.assert_allclose(counts, np.round(counts), atol=1e-9)

    def test_speckle_is_multiplicative(self, rng):
        img = np.zeros((6, 6))
        roi = np.ones((6, 6), bool)
        out = sas.inject_noise(img, roi, NoiseSpec(NoiseKind.SPECKLE, speckle_sigma=1.0), rng)
        assert np.all(out == 0)

    def test_shape_mismatch(self, rng):
        with pytest.raises(InvalidInput):
            sas.inject_noise(np.zeros((3, 3)), np.zeros((3, 4), bool), NoiseSpec(), rng)

    def test_bad_spec(self):
        with pytest.raises(InvalidInput):
            NoiseSpec(sp_fraction=1.5)
        with pytest.raises(InvalidInput):
            NoiseSpec(poisson_scale=0)


class TestSasTransform:
    def test_deterministic(self):
        s = canvas_sample()
        a = sas.sas_transform(s, SasConfig(), np.random.default_rng(7))
        b = sas.sas_transform(s, SasConfig(), np.random.default_rng(7))
        assert a.image.tobytes() == b.image.tobytes() and a.mask.tobytes() == b.mask.tobytes()
        assert a.sas == b.sas

    def test_support_inside_footprint(self):
        s = canvas_sample()
        for seed in range(30):
            out = sas.sas_transform(s, SasConfig(), np.random.default_rng(seed))
            r = out.sas
            footprint = np.zeros((SIDE, SIDE), bool)
            footprint[r.offset_y:r.offset_y + r.thumb_height, r.offset_x:r.offset_x + r.thumb_width] = True
            assert np.all(out.image[~footprint] == 0)
            assert not (out.mask & ~footprint).any()

    def test_scaling_never_enlarges(self):
        s = canvas_sample(radius=70)
        base = s.mask.mean()
        for seed in range(100):
            out = sas.sas_transform(s, SasConfig(), np.random.default_rng(seed))
            assert out.mask.mean() <= base

    def test_noise_never_touches_mask(self):
        s = canvas_sample()
        masks = {
            sas.sas_transform(s, SasConfig(), np.random.default_rng(3), noise_rng=np.random.default_rng(n)).mask.tobytes()
            for n in range(10)
        }
        assert len(masks) == 1

    def test_requires_canvas_size(self, rng):
        s = Sample.from_arrays(np.zeros((100, 100)), np.ones((100, 100)))
        with pytest.raises(InvalidInput):
            sas.sas_transform(s, SasConfig(), rng)

    def test_record(self):
        out = sas.sas_transform(canvas_sample(), SasConfig(), np.random.default_rng(11))
        r = out.sas
        assert 64 <= r.target_longest <= 256
        assert max(r.thumb_width, r.thumb_height) == r.target_longest
        assert r.noise_kind in NoiseKind
        assert set(r.noise_params) == set(NoiseSpec(r.noise_kind).params())


class TestAugmentBatch:
    def batch(self, n=20):
        return [canvas_sample(seed=i, radius=50 + i, id=f"s{i}") for i in range(n)]

    def test_prob_zero(self):
        samples = self.batch()
        out = sas.augment_batch(samples, SasConfig(apply_prob=0.0))
        assert all(o is s for o, s in zip(out, samples))

    def test_prob_one(self):
        out = sas.augment_batch(self.batch(), SasConfig(apply_prob=1.0))
        assert all(o.sas is not None for o in out)

    def test_small_pass_through(self):
        small = Sample.from_arrays(np.zeros((SIDE, SIDE)), disk_mask((SIDE, SIDE), (50, 50), 5))
        assert small.size_class is SizeClass.SMALL
        assert sas.augment_batch([small], SasConfig(apply_prob=1.0))[0] is small

    def test_order_independent(self):
        samples = self.batch(8)
        cfg = SasConfig(apply_prob=0.5, seed=99)
        full = sas.augment_batch(samples, cfg)
        for i in reversed(range(8)):
            one = sas.augment_one(samples[i], i, cfg)
            assert one.image.tobytes() == full[i].image.tobytes()
            assert (one.sas is None) == (full[i].sas is None)

    def test_epochs_differ(self):
        samples = self.batch(30)
        cfg = SasConfig(apply_prob=0.5, seed=1)
        e0 = [o.sas is not None for o in sas.augment_batch(samples, cfg, epoch=0)]
        e1 = [o.sas is not None for o in sas.augment_batch(samples, cfg, epoch=1)]
        assert e0 != e1

    def test_config_validation(self):
        for bad in (dict(thumb_min=300), dict(thumb_max=300), dict(apply_prob=1.5),
                    dict(small_threshold=0.0), dict(seed=-1)):
            with pytest.raises(InvalidInput):
                SasConfig(**bad)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**63), st.sampled_from(list(Placement)))
def test_background_black_property(seed, placement):
    s = canvas_sample(seed=seed % 1000)
    cfg = replace(SasConfig(), placement=placement)
    out = sas.sas_transform(s, cfg, np.random.default_rng(seed))
    r = out.sas
    inside = np.zeros((SIDE, SIDE), bool)
    inside[r.offset_y:r.offset_y + r.thumb_height, r.offset_x:r.offset_x + r.thumb_width] = True
    assert np.all(out.image[~inside] == 0.0)
