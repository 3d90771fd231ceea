"""Simulated user clicks for interactive segmentation.

The first click lands deep inside the reference mask; each later click
targets the largest region where the current prediction disagrees with the
reference and is labeled by which side of the reference it falls on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import EmptyMask, InvalidInput, PredictorContractViolation
from .raster import BinaryMask, Connectivity, as_mask, connected_components, disk, erode_disk, interior_depth


class ClickLabel(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class ClickPrompt:
    x: int
    y: int
    label: ClickLabel
    ordinal: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {"x": self.x, "y": self.y, "label": self.label.value, "ordinal": self.ordinal}


Predictor = Callable[[Any, Sequence[ClickPrompt]], ArrayLike]


@dataclass(eq=False)
class PromptSession:
    rs_mask: BinaryMask
    clicks: list[ClickPrompt] = field(default_factory=list)
    predictions: list[BinaryMask] = field(default_factory=list)
    converged: bool = False


# top 30% of foreground depths are click candidates
INITIAL_PERCENTILE = 70.0


def nearest_rank(values: NDArray[np.float64], percentile: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    ordered = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if ordered.size == 0:
        raise InvalidInput("percentile of an empty set")
    rank = max(1, math.ceil(percentile / 100.0 * ordered.size))
    return float(ordered[rank - 1])


def initial_candidates(rs: ArrayLike) -> BinaryMask:
    """Foreground pixels whose depth reaches the 70th nearest-rank percentile."""
    m = as_mask(rs)
    if not m.any():
        raise EmptyMask("reference mask has no foreground")
    depth = interior_depth(m)
    cutoff = nearest_rank(depth[m], INITIAL_PERCENTILE)
    return m & (depth >= cutoff)


def initial_click(rs: ArrayLike, rng: np.random.Generator) -> ClickPrompt:
    """Positive click drawn uniformly from the deepest 30% of the reference mask."""
    candidates = np.flatnonzero(initial_candidates(rs))
    pick = int(candidates[rng.integers(candidates.size)])
    y, x = divmod(pick, np.shape(rs)[1])
    return ClickPrompt(x=x, y=y, label=ClickLabel.POSITIVE, ordinal=1)


def error_map(rs: ArrayLike, pred: ArrayLike) -> BinaryMask:
    r, p = as_mask(rs), as_mask(pred)
    if r.shape != p.shape:
        raise InvalidInput(f"reference {r.shape} and prediction {p.shape} differ in shape")
    return r ^ p


def next_click(
    rs: ArrayLike,
    pred: ArrayLike,
    rng: np.random.Generator | None = None,
    *,
    ordinal: int = 1,
) -> ClickPrompt | None:
    """Corrective click for ``pred``, or ``None`` once it matches ``rs``.

    Selection is deterministic: the largest 8-connected error component
    (earliest row-major start on ties), then its deepest pixel (earliest
    row-major on ties). ``rng`` is accepted for interface symmetry only.
    """
    r = as_mask(rs)
    errors = error_map(r, pred)
    if not errors.any():
        return None
    labels, sizes = connected_components(errors, Connectivity.EIGHT)
    flat = labels.ravel()
    label_ids, first_seen = np.unique(flat, return_index=True)
    fg = label_ids > 0
    label_ids, first_seen = label_ids[fg], first_seen[fg]
    comp_size = sizes[label_ids - 1]
    # largest first, then lowest first-pixel index
    best = label_ids[np.lexsort((first_seen, -comp_size))[0]]
    component = labels == best
    pick = int(np.argmax(interior_depth(component)))
    y, x = divmod(pick, r.shape[1])
    label = ClickLabel.POSITIVE if r[y, x] else ClickLabel.NEGATIVE
    return ClickPrompt(x=x, y=y, label=label, ordinal=ordinal)


def simulate_session(
    rs: ArrayLike,
    predictor: Predictor,
    max_clicks: int,
    rng: np.random.Generator,
    image: Any = None,
) -> PromptSession:
    """Run the click / predict loop until agreement or ``max_clicks``.

    ``predictor(image, clicks)`` must return a mask with the reference's
    shape; anything else raises :class:`PredictorContractViolation`.
    """
    if max_clicks < 1:
        raise InvalidInput(f"max_clicks must be >= 1, got {max_clicks}")
    r = as_mask(rs)
    session = PromptSession(rs_mask=r, clicks=[initial_click(r, rng)])
    while True:
        raw = predictor(image, tuple(session.clicks))
        pred = np.asarray(raw)
        if pred.shape != r.shape:
            raise PredictorContractViolation(
                f"predictor returned shape {pred.shape}, expected {r.shape}"
            )
        session.predictions.append(pred.astype(bool))
        click = next_click(r, pred, rng, ordinal=len(session.clicks) + 1)
        if click is None:
            session.converged = True
            break
        if len(session.clicks) >= max_clicks:
            break
        session.clicks.append(click)
    return session


MOCK_ERODE_RADIUS = 3
MOCK_CLICK_RADIUS = 5


def mock_predictor(rs: ArrayLike, clicks: Sequence[ClickPrompt]) -> BinaryMask:
    """Toy stand-in for a promptable model.

    Starts from ``rs`` eroded by a radius-3 disk; positive clicks add the part
    of ``rs`` within radius 5, negative clicks remove a radius-5 disk.
    """
    r = as_mask(rs)
    pred = erode_disk(r, MOCK_ERODE_RADIUS)
    for click in clicks:
        spot = disk(r.shape, (click.x, click.y), MOCK_CLICK_RADIUS)
        if click.label is ClickLabel.POSITIVE:
            pred |= r & spot
        else:
            pred &= ~spot
    return pred


def mock_for(rs: ArrayLike) -> Predictor:
    """Bind :func:`mock_predictor` to a reference so it fits the predictor callback."""
    r = as_mask(rs)
    return lambda image, clicks: mock_predictor(r, clicks)
