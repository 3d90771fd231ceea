"""Slow, obviously-correct oracles for cross-checking the production code.

Nothing in here imports from the rest of the package: the point is to
re-derive every quantity from its definition, so a shared bug cannot hide.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats


class OracleInputError(ValueError):
    pass


@dataclass
class OracleReport:
    tolerance: float
    case_count: int = 0
    max_abs_error: float = 0.0
    failures: list[str] = field(default_factory=list)

    def add(self, case_id: str, expected: np.ndarray | float, actual: np.ndarray | float) -> None:
        expected = np.asarray(expected, dtype=np.float64)
        actual = np.asarray(actual, dtype=np.float64)
        self.case_count += 1
        if expected.shape != actual.shape:
            self.failures.append(case_id)
            self.max_abs_error = float("inf")
            return
        err = float(np.max(np.abs(expected - actual))) if expected.size else 0.0
        self.max_abs_error = max(self.max_abs_error, err)
        if err > self.tolerance:
            self.failures.append(case_id)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}: {self.case_count} cases, max |err| = {self.max_abs_error:.3g}, "
                f"{len(self.failures)} failures")


def brute_force_distance_transform(sources: np.ndarray) -> np.ndarray:
    """Minimum Euclidean distance to any source, by checking every pair."""
    src = np.asarray(sources).astype(bool)
    pts = np.argwhere(src)
    if len(pts) == 0:
        raise OracleInputError("no source pixel")
    h, w = src.shape
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            dy = pts[:, 0] - y
            dx = pts[:, 1] - x
            out[y, x] = np.sqrt(dy * dy + dx * dx).min()
    return out


def _neighbour_scan_boundary(mask: np.ndarray) -> list[tuple[int, int]]:
    h, w = mask.shape
    found = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ny, nx = y + dy, x + dx
                if not (0 <= ny < h and 0 <= nx < w) or not mask[ny, nx]:
                    found.append((y, x))
                    break
    return found


def _count_within(points: list[tuple[int, int]], others: list[tuple[int, int]], tau: float) -> int:
    if not points:
        return 0
    a = np.array(points, dtype=np.int64)
    b = np.array(others, dtype=np.int64)
    dy = a[:, None, 0] - b[None, :, 0]
    dx = a[:, None, 1] - b[None, :, 1]
    dist = np.sqrt(dy * dy + dx * dx)
    return int(np.count_nonzero((dist <= tau).any(axis=1)))


def brute_force_nsd(pred: np.ndarray, rs: np.ndarray, tau: float) -> float:
    """Surface agreement evaluated literally from boundary pixel lists."""
    p = np.asarray(pred).astype(bool)
    r = np.asarray(rs).astype(bool)
    if p.shape != r.shape:
        raise OracleInputError("shape mismatch")
    sp = _neighbour_scan_boundary(p)
    sr = _neighbour_scan_boundary(r)
    if not sp and not sr:
        return 1.0
    if not sp or not sr:
        return 0.0
    return (_count_within(sp, sr, tau) + _count_within(sr, sp, tau)) / (len(sp) + len(sr))


def flood_fill_count(mask: np.ndarray, eight: bool = False) -> int:
    """Number of connected foreground regions, by explicit stack flood fill."""
    m = np.asarray(mask).astype(bool)
    h, w = m.shape
    seen = np.zeros_like(m)
    steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    if eight:
        steps += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    count = 0
    for y in range(h):
        for x in range(w):
            if not m[y, x] or seen[y, x]:
                continue
            count += 1
            stack = [(y, x)]
            seen[y, x] = True
            while stack:
                cy, cx = stack.pop()
                for dy, dx in steps:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and m[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        stack.append((ny, nx))
    return count


def center_sample_resize(mask: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Resize by reading the source pixel under each destination pixel centre."""
    m = np.asarray(mask).astype(bool)
    h, w = m.shape
    oh, ow = out_shape
    out = np.zeros((oh, ow), dtype=bool)
    for y in range(oh):
        sy = min(h - 1, int(((y + 0.5) * h) // oh))
        for x in range(ow):
            sx = min(w - 1, int(((x + 0.5) * w) // ow))
            out[y, x] = m[sy, sx]
    return out


@dataclass(frozen=True)
class ChiSquareResult:
    passed: bool
    statistic: float
    critical: float
    dof: int


def chi_square_uniformity(counts: Sequence[int], alpha: float = 0.001) -> ChiSquareResult:
    """Pearson goodness-of-fit against equal category probabilities."""
    c = np.asarray(counts, dtype=np.float64)
    if c.ndim != 1 or c.size < 2 or np.any(c < 0) or c.sum() <= 0:
        raise OracleInputError("need >= 2 non-negative counts with a positive total")
    if not 0.0 < alpha < 1.0:
        raise OracleInputError("alpha must lie in (0, 1)")
    expected = c.sum() / c.size
    statistic = float(((c - expected) ** 2 / expected).sum())
    dof = c.size - 1
    critical = float(stats.chi2.ppf(1.0 - alpha, dof))
    return ChiSquareResult(statistic <= critical, statistic, critical, dof)


def binomial_central_interval(n: int, p: float, coverage: float) -> tuple[int, int]:
    """Smallest symmetric-tail integer interval holding at least ``coverage``."""
    tail = (1.0 - coverage) / 2.0
    return int(stats.binom.ppf(tail, n, p)), int(stats.binom.isf(tail, n, p))


def random_masks(rng: np.random.Generator, count: int, max_side: int = 32) -> Iterable[np.ndarray]:
    """Mixed-density random masks from 1x1 up to ``max_side`` square.

    Alternates pure noise, blobby thresholded noise and sparse masks so that
    holes, islands and border contact all show up.
    """
    for i in range(count):
        h = int(rng.integers(1, max_side + 1))
        w = int(rng.integers(1, max_side + 1))
        style = i % 3
        if style == 0:
            yield rng.random((h, w)) < rng.uniform(0.05, 0.95)
        elif style == 1:
            coarse = rng.random((h // 4 + 2, w // 4 + 2))
            big = np.kron(coarse, np.ones((4, 4)))[:h, :w]
            yield big < rng.uniform(0.2, 0.8)
        else:
            yield rng.random((h, w)) < 0.02


def run_oracle(
    cases: Iterable[tuple[str, Callable[[], float | np.ndarray], Callable[[], float | np.ndarray]]],
    tolerance: float,
) -> OracleReport:
    """Evaluate ``(case_id, expected_fn, actual_fn)`` triples into a report."""
    report = OracleReport(tolerance=tolerance)
    for case_id, expected_fn, actual_fn in cases:
        report.add(case_id, expected_fn(), actual_fn())
    return report
