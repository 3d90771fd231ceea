"""8-bit PNG reading and writing."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from PIL import Image

from .errors import InvalidInput


def read_u8(path: str | Path) -> NDArray[np.uint8]:
    """Read a PNG as a 2-D ``uint8`` array, converting colour inputs to luminance."""
    try:
        with Image.open(path) as im:
            if im.mode != "L":
                im = im.convert("L")
            return np.array(im, dtype=np.uint8)
    except (OSError, SyntaxError, ValueError) as exc:
        raise InvalidInput(f"cannot read PNG {path}: {exc}") from exc


def read_image(path: str | Path) -> NDArray[np.float64]:
    return read_u8(path).astype(np.float64) / 255.0


def read_mask(path: str | Path) -> NDArray[np.bool_]:
    return read_u8(path) != 0


def image_to_u8(img: NDArray[np.float64]) -> NDArray[np.uint8]:
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def write_u8(path: str | Path, arr: NDArray[np.uint8]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint8), mode="L").save(path, format="PNG")


def write_image(path: str | Path, img: NDArray[np.float64]) -> None:
    write_u8(path, image_to_u8(img))


def write_mask(path: str | Path, mask: NDArray[np.bool_]) -> None:
    write_u8(path, np.where(mask, 255, 0).astype(np.uint8))
