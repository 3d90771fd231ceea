"""Scale simulation and in-mask noise injection for small-structure training.

A large-structure sample is shrunk to a random thumbnail, pasted onto a black
canvas, and then one randomly chosen noise model perturbs the pixels under
the (transformed) mask. Small-structure samples are left alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import InvalidInput
from .raster import BinaryMask, GrayImage, as_gray, as_mask, resize_bilinear, resize_nearest
from .rng import AUGMENT, stream_id


class SizeClass(str, enum.Enum):
    SMALL = "small"
    LARGE = "large"


class NoiseKind(str, enum.Enum):
    SPECKLE = "speckle"
    GAUSSIAN = "gaussian"
    SALT_PEPPER = "salt_pepper"
    POISSON = "poisson"


NOISE_KINDS: tuple[NoiseKind, ...] = tuple(NoiseKind)


class Placement(str, enum.Enum):
    RANDOM = "random"
    CENTERED = "centered"


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = NoiseKind.SPECKLE
    gaussian_sigma: float = 0.05
    speckle_sigma: float = 0.1
    sp_fraction: float = 0.02
    poisson_scale: float = 255.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.gaussian_sigma < 0 or self.speckle_sigma < 0:
            raise InvalidInput("noise sigmas must be >= 0")
        if not 0.0 <= self.sp_fraction <= 1.0:
            raise InvalidInput(f"sp_fraction must lie in [0, 1], got {self.sp_fraction}")
        if not self.poisson_scale > 0:
            raise InvalidInput(f"poisson_scale must be > 0, got {self.poisson_scale}")

    def params(self) -> dict[str, float]:
        """The parameter(s) that matter for ``kind``."""
        return {
            NoiseKind.GAUSSIAN: {"gaussian_sigma": self.gaussian_sigma},
            NoiseKind.SPECKLE: {"speckle_sigma": self.speckle_sigma},
            NoiseKind.SALT_PEPPER: {"sp_fraction": self.sp_fraction},
            NoiseKind.POISSON: {"poisson_scale": self.poisson_scale},
        }[self.kind]


@dataclass(frozen=True)
class SasConfig:
    canvas_side: int = 256
    thumb_min: int = 64
    thumb_max: int = 256
    apply_prob: float = 0.5
    small_threshold: float = 0.03
    placement: Placement = Placement.RANDOM
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "placement", Placement(self.placement))
        if not 1 <= self.thumb_min <= self.thumb_max <= self.canvas_side:
            raise InvalidInput(
                f"need 1 <= thumb_min <= thumb_max <= canvas_side, got "
                f"{self.thumb_min}, {self.thumb_max}, {self.canvas_side}"
            )
        if not 0.0 <= self.apply_prob <= 1.0:
            raise InvalidInput(f"apply_prob must lie in [0, 1], got {self.apply_prob}")
        if not 0.0 < self.small_threshold < 1.0:
            raise InvalidInput(f"small_threshold must lie in (0, 1), got {self.small_threshold}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInput(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class SasRecord:
    """What a single transform did, for provenance logs."""

    target_longest: int
    thumb_width: int
    thumb_height: int
    offset_x: int
    offset_y: int
    noise_kind: NoiseKind
    noise_params: dict[str, float]
    stream: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "thumbnail_size": [self.thumb_width, self.thumb_height],
            "target_longest": self.target_longest,
            "offset": [self.offset_x, self.offset_y],
            "noise_kind": self.noise_kind.value,
            "noise_params": dict(self.noise_params),
        }


@dataclass(frozen=True, eq=False)
class Sample:
    image: GrayImage
    mask: BinaryMask
    id: str
    size_class: SizeClass
    original_mask_fraction: float
    sas: SasRecord | None = None

    def __post_init__(self) -> None:
        if self.image.shape != self.mask.shape:
            raise InvalidInput(f"image {self.image.shape} and mask {self.mask.shape} differ in shape")
        if not 0.0 <= self.original_mask_fraction <= 1.0:
            raise InvalidInput("original_mask_fraction must lie in [0, 1]")
        object.__setattr__(self, "size_class", SizeClass(self.size_class))

    @classmethod
    def from_arrays(
        cls,
        image: ArrayLike,
        mask: ArrayLike,
        id: str = "",
        original_mask_fraction: float | None = None,
        threshold: float = 0.03,
    ) -> "Sample":
        """Build a sample, measuring the mask fraction on ``mask`` unless given."""
        img, msk = as_gray(image), as_mask(mask)
        if original_mask_fraction is None:
            original_mask_fraction = mask_fraction(msk)
        size = SizeClass.SMALL if original_mask_fraction <= threshold else SizeClass.LARGE
        return cls(img, msk, id, size, float(original_mask_fraction))


def mask_fraction(mask: ArrayLike) -> float:
    m = as_mask(mask)
    if m.size == 0:
        raise InvalidInput("degenerate mask grid")
    return float(np.count_nonzero(m)) / m.size


def classify_size(mask: ArrayLike, threshold: float = 0.03) -> SizeClass:
    """``SMALL`` when the foreground covers at most ``threshold`` of the grid."""
    return SizeClass.SMALL if mask_fraction(mask) <= threshold else SizeClass.LARGE


def make_thumbnail(sample: Sample, target_longest: int, cfg: SasConfig = SasConfig()) -> Sample:
    if not cfg.thumb_min <= target_longest <= cfg.canvas_side:
        raise InvalidInput(
            f"thumbnail side {target_longest} outside [{cfg.thumb_min}, {cfg.canvas_side}]"
        )
    return replace(
        sample,
        image=resize_bilinear(sample.image, target_longest),
        mask=resize_nearest(sample.mask, target_longest),
    )


def draw_thumbnail_side(cfg: SasConfig, rng: np.random.Generator) -> int:
    return int(rng.integers(cfg.thumb_min, cfg.thumb_max + 1))


def draw_offset(
    thumb_shape: tuple[int, int], cfg: SasConfig, rng: np.random.Generator | None
) -> tuple[int, int]:
    """Top-left ``(x, y)`` of the thumbnail on the canvas."""
    h, w = thumb_shape
    side = cfg.canvas_side
    if h > side or w > side:
        raise InvalidInput(f"thumbnail {w}x{h} larger than {side}x{side} canvas")
    if cfg.placement is Placement.CENTERED:
        return (side - w) // 2, (side - h) // 2
    if rng is None:
        raise InvalidInput("random placement needs a generator")
    oy = int(rng.integers(0, side - h + 1))
    ox = int(rng.integers(0, side - w + 1))
    return ox, oy


def place_on_canvas(
    thumb: Sample,
    cfg: SasConfig,
    rng: np.random.Generator | None = None,
    *,
    offset: tuple[int, int] | None = None,
) -> Sample:
    """Paste the thumbnail onto a black ``canvas_side`` square.

    ``offset`` pins the top-left corner; otherwise it is drawn per
    ``cfg.placement``.
    """
    h, w = thumb.image.shape
    if offset is None:
        offset = draw_offset((h, w), cfg, rng)
    ox, oy = offset
    side = cfg.canvas_side
    if not (0 <= ox <= side - w and 0 <= oy <= side - h):
        raise InvalidInput(f"offset {offset} puts the {w}x{h} thumbnail outside the canvas")
    image = np.zeros((side, side), dtype=np.float64)
    mask = np.zeros((side, side), dtype=bool)
    image[oy:oy + h, ox:ox + w] = thumb.image
    mask[oy:oy + h, ox:ox + w] = thumb.mask
    return replace(thumb, image=image, mask=mask)


def inject_noise(
    img: ArrayLike, roi: ArrayLike, spec: NoiseSpec, rng: np.random.Generator
) -> GrayImage:
    """Perturb the pixels under ``roi`` with one noise model; others are untouched."""
    out = as_gray(img)
    region = as_mask(roi)
    if out.shape != region.shape:
        raise InvalidInput(f"image {out.shape} and roi {region.shape} differ in shape")
    idx = np.flatnonzero(region)
    if idx.size == 0:
        return out
    flat = out.ravel()
    x = flat[idx]
    if spec.kind is NoiseKind.GAUSSIAN:
        noisy = x + rng.normal(0.0, spec.gaussian_sigma, size=x.size)
    elif spec.kind is NoiseKind.SPECKLE:
        noisy = x * (1.0 + rng.normal(0.0, spec.speckle_sigma, size=x.size))
    elif spec.kind is NoiseKind.POISSON:
        noisy = rng.poisson(x * spec.poisson_scale) / spec.poisson_scale
    else:
        n_hit = int(np.floor(spec.sp_fraction * idx.size + 0.5))
        chosen = rng.choice(idx.size, size=n_hit, replace=False)
        noisy = x.copy()
        noisy[chosen] = rng.integers(0, 2, size=n_hit).astype(np.float64)
    flat[idx] = np.clip(noisy, 0.0, 1.0)
    return out


def sas_transform(
    sample: Sample,
    cfg: SasConfig,
    rng: np.random.Generator,
    *,
    noise_rng: np.random.Generator | None = None,
) -> Sample:
    """Thumbnail + placement from ``rng``, then noise from ``noise_rng``.

    ``noise_rng`` defaults to ``rng``. Keeping the two apart lets the
    geometric draw be replayed with a different noise draw; the mask never
    depends on the latter.
    """
    if sample.image.shape != (cfg.canvas_side, cfg.canvas_side):
        raise InvalidInput(
            f"sample {sample.id!r} is {sample.image.shape}, expected a "
            f"{cfg.canvas_side}x{cfg.canvas_side} canvas"
        )
    noise_rng = rng if noise_rng is None else noise_rng
    target = draw_thumbnail_side(cfg, rng)
    thumb = make_thumbnail(sample, target, cfg)
    offset = draw_offset(thumb.image.shape, cfg, rng)
    placed = place_on_canvas(thumb, cfg, offset=offset)

    kind = NOISE_KINDS[int(noise_rng.integers(len(NOISE_KINDS)))]
    spec = replace(cfg.noise, kind=kind)
    image = inject_noise(placed.image, placed.mask, spec, noise_rng)
    record = SasRecord(
        target_longest=target,
        thumb_width=thumb.image.shape[1],
        thumb_height=thumb.image.shape[0],
        offset_x=offset[0],
        offset_y=offset[1],
        noise_kind=kind,
        noise_params=spec.params(),
    )
    return replace(placed, image=image, sas=record)


def sample_streams(seed: int, epoch: int, index: int) -> tuple[np.random.Generator, ...]:
    """Independent (apply-decision, geometry, noise) generators for one sample."""
    ss = np.random.SeedSequence(seed, spawn_key=(AUGMENT, epoch, index))
    return tuple(np.random.default_rng(child) for child in ss.spawn(3))


def augment_one(sample: Sample, index: int, cfg: SasConfig, epoch: int = 0) -> Sample:
    """Apply the batch rule to one sample; the result depends only on its arguments."""
    if sample.size_class is SizeClass.SMALL:
        return sample
    decide, geometry, noise = sample_streams(cfg.seed, epoch, index)
    if not decide.random() < cfg.apply_prob:
        return sample
    out = sas_transform(sample, cfg, geometry, noise_rng=noise)
    return replace(out, sas=replace(out.sas, stream=stream_id(cfg.seed, AUGMENT, epoch, index)))


def augment_batch(samples: Sequence[Sample], cfg: SasConfig, epoch: int = 0) -> list[Sample]:
    """Transform each large sample with probability ``cfg.apply_prob``.

    Transformed samples carry a :class:`SasRecord` in ``.sas``; untouched
    ones are returned as-is.
    """
    return [augment_one(s, i, cfg, epoch) for i, s in enumerate(samples)]
