"""Overlap and boundary metrics with bootstrap confidence intervals."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import InvalidInput
from .raster import Connectivity, as_mask, boundary_pixels, distance_transform
from .sas import SizeClass, classify_size


@dataclass(frozen=True)
class MetricConfig:
    tau: float = 2.0
    bootstrap_n: int = 10_000
    alpha: float = 0.05
    boot_seed: int = 0

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise InvalidInput(f"tau must be >= 0, got {self.tau}")
        if self.bootstrap_n < 1:
            raise InvalidInput(f"bootstrap_n must be >= 1, got {self.bootstrap_n}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInput(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.boot_seed < 2**64:
            raise InvalidInput(f"boot_seed must be an unsigned 64-bit integer, got {self.boot_seed}")


@dataclass(frozen=True)
class MetricResult:
    sample_id: str
    dsc: float
    nsd: float
    pred_area: int
    rs_area: int
    size_class: SizeClass

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["size_class"] = self.size_class.value
        return d


@dataclass(frozen=True)
class BootstrapCI:
    mean: float
    lo: float
    hi: float
    n_resamples: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _pair(pred: ArrayLike, rs: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    p, r = as_mask(pred), as_mask(rs)
    if p.shape != r.shape:
        raise InvalidInput(f"prediction {p.shape} and reference {r.shape} differ in shape")
    return p, r


def dsc(pred: ArrayLike, rs: ArrayLike) -> float:
    """Dice similarity; 1.0 when both masks are empty."""
    p, r = _pair(pred, rs)
    total = int(p.sum()) + int(r.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(p & r)) / total


def nsd(pred: ArrayLike, rs: ArrayLike, tau: float) -> float:
    """Normalized surface distance at tolerance ``tau`` pixels.

    Boundaries are 4-connected (see :func:`boundary_pixels`); a boundary pixel
    of one mask counts as correct when it lies within Euclidean distance
    ``tau`` of the other mask's boundary.
    """
    if tau < 0:
        raise InvalidInput(f"tau must be >= 0, got {tau}")
    p, r = _pair(pred, rs)
    p_any, r_any = p.any(), r.any()
    if not p_any and not r_any:
        return 1.0
    if not p_any or not r_any:
        return 0.0
    sp = boundary_pixels(p, Connectivity.FOUR)
    sr = boundary_pixels(r, Connectivity.FOUR)
    near_r = distance_transform(sr) <= tau
    near_p = distance_transform(sp) <= tau
    hits = int(np.count_nonzero(sp & near_r)) + int(np.count_nonzero(sr & near_p))
    return hits / (int(sp.sum()) + int(sr.sum()))


_CHUNK_ELEMS = 4_000_000


def bootstrap_ci(values: Sequence[float], cfg: MetricConfig = MetricConfig()) -> BootstrapCI:
    """Percentile bootstrap interval for the mean of ``values``."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidInput("bootstrap_ci needs at least one value")
    n, b = x.size, cfg.bootstrap_n
    if np.all(x == x[0]):
        v = float(x[0])
        return BootstrapCI(v, v, v, b)
    mean = float(x.mean())
    rng = np.random.default_rng(cfg.boot_seed)
    means = np.empty(b, dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // n)
    for start in range(0, b, step):
        stop = min(b, start + step)
        idx = rng.integers(0, n, size=(stop - start, n))
        means[start:stop] = x[idx].mean(axis=1)
    lo, hi = np.quantile(means, [cfg.alpha / 2.0, 1.0 - cfg.alpha / 2.0])
    # a percentile interval can miss the point estimate on tiny skewed samples
    return BootstrapCI(mean, float(min(lo, mean)), float(max(hi, mean)), b)


@dataclass
class DatasetReport:
    results: list[MetricResult]
    aggregates: dict[str, dict[str, Any] | None]
    failures: list[dict[str, str]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "results": [r.to_dict() for r in self.results],
            "aggregates": {
                group: None if agg is None else {
                    "n": agg["n"],
                    "dsc": agg["dsc"].to_dict(),
                    "nsd": agg["nsd"].to_dict(),
                }
                for group, agg in self.aggregates.items()
            },
            "failures": list(self.failures),
        }


def _aggregate(results: list[MetricResult], cfg: MetricConfig) -> dict[str, Any] | None:
    if not results:
        return None
    return {
        "n": len(results),
        "dsc": bootstrap_ci([r.dsc for r in results], cfg),
        "nsd": bootstrap_ci([r.nsd for r in results], cfg),
    }


def evaluate_dataset(
    pairs: Iterable[tuple[ArrayLike, ArrayLike, str]],
    cfg: MetricConfig = MetricConfig(),
    size_classes: Mapping[str, SizeClass] | None = None,
    small_threshold: float = 0.03,
) -> DatasetReport:
    """Score every ``(pred, rs, id)`` and aggregate overall and per size class.

    Size classes come from ``size_classes`` when the id is present there,
    otherwise from the reference mask itself. A pair that fails to score is
    recorded in ``failures`` and skipped.
    """
    size_classes = size_classes or {}
    results: list[MetricResult] = []
    failures: list[dict[str, str]] = []
    for pred, rs, sample_id in pairs:
        try:
            p, r = _pair(pred, rs)
            size = size_classes.get(sample_id)
            if size is None:
                size = classify_size(r, small_threshold)
            results.append(
                MetricResult(
                    sample_id=sample_id,
                    dsc=dsc(p, r),
                    nsd=nsd(p, r, cfg.tau),
                    pred_area=int(p.sum()),
                    rs_area=int(r.sum()),
                    size_class=SizeClass(size),
                )
            )
        except InvalidInput as exc:
            failures.append({"id": sample_id, "reason": str(exc)})
    aggregates = {
        "overall": _aggregate(results, cfg),
        "small": _aggregate([r for r in results if r.size_class is SizeClass.SMALL], cfg),
        "large": _aggregate([r for r in results if r.size_class is SizeClass.LARGE], cfg),
    }
    return DatasetReport(results, aggregates, failures)
