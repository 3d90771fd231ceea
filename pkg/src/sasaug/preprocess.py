"""Turn an 8-bit image/mask pair into a square, normalized network input."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import EmptyWindow, InvalidInput
from .raster import BinaryMask, GrayImage, minmax_normalize, pad_to_square, resize_bilinear, resize_nearest


@dataclass(frozen=True)
class RawPair:
    image: NDArray[np.uint8]
    mask: NDArray[np.uint8]
    id: str = ""

    def __post_init__(self) -> None:
        img = np.asarray(self.image)
        msk = np.asarray(self.mask)
        if img.ndim != 2 or msk.ndim != 2:
            raise InvalidInput("image and mask must be 2-D")
        if img.shape != msk.shape:
            raise InvalidInput(f"image {img.shape} and mask {msk.shape} differ in shape")
        if img.size == 0:
            raise InvalidInput("empty image")
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "mask", msk)

    @property
    def mask_fraction(self) -> float:
        return float(np.count_nonzero(self.mask)) / self.mask.size


@dataclass(frozen=True)
class PreprocConfig:
    input_side: int = 256
    crop_window: bool = False

    def __post_init__(self) -> None:
        if self.input_side < 16:
            raise InvalidInput(f"input_side must be >= 16, got {self.input_side}")


def crop_us_window(image: ArrayLike, mask: ArrayLike, id: str = "") -> RawPair:
    """Crop both grids to the bounding box of the image's nonzero pixels.

    Stands in for the scanner-metadata window crop: everything outside the
    acquisition window is assumed to be exactly zero.
    """
    img = np.asarray(image)
    nz_rows = np.flatnonzero(img.any(axis=1))
    if nz_rows.size == 0:
        raise EmptyWindow(f"image {id!r} has no nonzero pixel")
    nz_cols = np.flatnonzero(img.any(axis=0))
    r0, r1 = nz_rows[0], nz_rows[-1] + 1
    c0, c1 = nz_cols[0], nz_cols[-1] + 1
    return RawPair(img[r0:r1, c0:c1], np.asarray(mask)[r0:r1, c0:c1], id)


def preprocess_pair(raw: RawPair, cfg: PreprocConfig = PreprocConfig()) -> tuple[GrayImage, BinaryMask]:
    """Crop (optional), resize longest edge, min-max normalize, zero-pad.

    The mask is binarized (nonzero is foreground) before a nearest-exact
    resize so it shares the image's exact placement.
    """
    if cfg.crop_window:
        raw = crop_us_window(raw.image, raw.mask, raw.id)
    side = cfg.input_side
    # pre-scaling to [0, 1] commutes with the bilinear resize; it only keeps
    # resize_bilinear's range contract for non-8-bit inputs
    image = resize_bilinear(minmax_normalize(raw.image), side)
    image = minmax_normalize(image)
    mask = resize_nearest(raw.mask != 0, side)
    return pad_to_square(image, side, 0.0), pad_to_square(mask, side, False)
