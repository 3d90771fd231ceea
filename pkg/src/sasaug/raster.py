"""Raster primitives: resampling, padding, distance transforms and morphology.

Images are ``float64`` arrays of shape ``(height, width)`` with values in
``[0, 1]``; masks are ``bool`` arrays of the same layout. Every function here
is pure and returns a fresh array.
"""

from __future__ import annotations

import enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import ndimage

from .errors import EmptySourceSet, InvalidInput

GrayImage = NDArray[np.float64]
BinaryMask = NDArray[np.bool_]
DistanceField = NDArray[np.float64]


class Connectivity(enum.Enum):
    FOUR = 4
    EIGHT = 8

    @property
    def structure(self) -> NDArray[np.bool_]:
        if self is Connectivity.FOUR:
            return ndimage.generate_binary_structure(2, 1)
        return ndimage.generate_binary_structure(2, 2)


def as_gray(img: ArrayLike) -> GrayImage:
    """Validate and copy ``img`` as a 2-D float image in ``[0, 1]``."""
    arr = np.array(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInput(f"expected a 2-D image, got shape {arr.shape}")
    if arr.size and (not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0):
        raise InvalidInput("image intensities must lie in [0, 1]")
    return arr


def as_mask(mask: ArrayLike) -> BinaryMask:
    arr = np.array(mask)
    if arr.ndim != 2:
        raise InvalidInput(f"expected a 2-D mask, got shape {arr.shape}")
    return arr.astype(bool)


def scaled_shape(shape: tuple[int, int], target_longest: int) -> tuple[int, int]:
    """Shape after scaling so the longer side equals ``target_longest``.

    The shorter side is rounded half-up and never drops below one pixel.
    """
    if target_longest < 1:
        raise InvalidInput(f"target_longest must be >= 1, got {target_longest}")
    h, w = shape
    if h < 1 or w < 1:
        raise InvalidInput(f"cannot resize an empty grid of shape {shape}")
    longest = max(h, w)

    def side(n: int) -> int:
        if n == longest:
            return target_longest
        return max(1, int(np.floor(n * target_longest / longest + 0.5)))

    return side(h), side(w)


def _bilinear_axis(arr: NDArray[np.float64], new_len: int, axis: int) -> NDArray[np.float64]:
    old_len = arr.shape[axis]
    if new_len == old_len:
        return arr
    # half-pixel centres: dst centre (i + .5) maps to src centre (i + .5) * old/new
    src = (np.arange(new_len) + 0.5) * (old_len / new_len) - 0.5
    src = np.clip(src, 0.0, old_len - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, old_len - 1)
    frac = src - lo
    a = np.take(arr, lo, axis=axis)
    b = np.take(arr, hi, axis=axis)
    shape = [1, 1]
    shape[axis] = new_len
    # a + (b - a) * t keeps constant fields exact
    return a + (b - a) * frac.reshape(shape)


def resize_bilinear(img: ArrayLike, target_longest: int) -> GrayImage:
    """Resize so the longer side is ``target_longest``, keeping aspect ratio."""
    arr = as_gray(img)
    new_h, new_w = scaled_shape(arr.shape, target_longest)
    out = _bilinear_axis(arr, new_h, axis=0)
    out = _bilinear_axis(out, new_w, axis=1)
    return np.clip(out, 0.0, 1.0)


def _nearest_exact_index(old_len: int, new_len: int) -> NDArray[np.intp]:
    idx = np.floor((np.arange(new_len) + 0.5) * (old_len / new_len)).astype(np.intp)
    return np.minimum(idx, old_len - 1)


def resize_nearest(mask: ArrayLike, target_longest: int) -> BinaryMask:
    """Nearest-exact resize of a mask to the same geometry as :func:`resize_bilinear`."""
    arr = as_mask(mask)
    new_h, new_w = scaled_shape(arr.shape, target_longest)
    rows = _nearest_exact_index(arr.shape[0], new_h)
    cols = _nearest_exact_index(arr.shape[1], new_w)
    return arr[np.ix_(rows, cols)]


def pad_to_square(img: ArrayLike, side: int, fill: float | bool = 0.0) -> NDArray:
    """Place ``img`` in the top-left corner of a ``side`` x ``side`` grid.

    Works for both images and masks; the output keeps the input dtype.
    """
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise InvalidInput(f"expected a 2-D grid, got shape {arr.shape}")
    h, w = arr.shape
    if h > side or w > side:
        raise InvalidInput(f"grid {w}x{h} does not fit in a {side}x{side} square")
    out = np.full((side, side), fill, dtype=arr.dtype)
    out[:h, :w] = arr
    return out


def minmax_normalize(raw: ArrayLike) -> GrayImage:
    """Rescale intensities linearly to ``[0, 1]``; a constant input maps to zeros."""
    arr = np.asarray(raw, dtype=np.float64)
    if arr.size == 0:
        return arr.copy()
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    out = (arr - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)


def distance_transform(sources: ArrayLike) -> DistanceField:
    """Exact Euclidean distance from every pixel to the nearest source pixel."""
    src = as_mask(sources)
    if not src.any():
        raise EmptySourceSet("distance transform needs at least one source pixel")
    return ndimage.distance_transform_edt(~src).astype(np.float64)


def interior_depth(mask: ArrayLike) -> DistanceField:
    """Distance from each foreground pixel to the nearest background pixel.

    Pixels beyond the image border count as background, so a full mask
    still has finite depth. Background pixels have depth 0.
    """
    m = as_mask(mask)
    padded = np.pad(m, 1, constant_values=False)
    return distance_transform(~padded)[1:-1, 1:-1]


def boundary_pixels(mask: ArrayLike, conn: Connectivity = Connectivity.FOUR) -> BinaryMask:
    """Foreground pixels with at least one background neighbour under ``conn``.

    Out-of-bounds neighbours are background, so foreground on the image edge
    is always boundary.
    """
    m = as_mask(mask)
    if not m.any():
        return np.zeros_like(m)
    padded = np.pad(m, 1, constant_values=False)
    interior = ndimage.binary_erosion(padded, structure=conn.structure, border_value=0)
    return m & ~interior[1:-1, 1:-1]


def dilate_disk(mask: ArrayLike, radius: float) -> BinaryMask:
    """All pixels within Euclidean distance ``radius`` of the set."""
    if radius < 0:
        raise InvalidInput(f"radius must be >= 0, got {radius}")
    m = as_mask(mask)
    if not m.any():
        return np.zeros_like(m)
    return distance_transform(m) <= radius


def erode_disk(mask: ArrayLike, radius: float) -> BinaryMask:
    """Pixels whose radius-``radius`` disk stays inside the set (border is not background)."""
    m = as_mask(mask)
    return ~dilate_disk(~m, radius)


def disk(shape: tuple[int, int], center_xy: tuple[int, int], radius: float) -> BinaryMask:
    """Boolean disk of the given radius around ``(x, y)``, clipped to ``shape``."""
    yy, xx = np.indices(shape)
    cx, cy = center_xy
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius


def connected_components(
    mask: ArrayLike, conn: Connectivity = Connectivity.EIGHT
) -> tuple[NDArray[np.int32], NDArray[np.int64]]:
    """Label connected foreground regions.

    Returns ``(labels, sizes)``: labels run ``1..K`` in row-major order of each
    component's first pixel, background is 0, and ``sizes[k - 1]`` is the
    pixel count of component ``k``.
    """
    m = as_mask(mask)
    labels, count = ndimage.label(m, structure=conn.structure)
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:].astype(np.int64)
    return labels.astype(np.int32), sizes
