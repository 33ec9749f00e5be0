"""Keyframe extraction from color histograms.

Every frame gets a 512-bin RGB histogram (8 bins per channel). Its Hellinger
distance to a reference image (black by default), scaled by 10,000, gives a 1-D
signal. Mean shift groups frames with similar distances, and every ``x``-th frame
of each group is kept as a keyframe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .imagecore import check_rgb

BINS_PER_CHANNEL = 8
N_BINS = BINS_PER_CHANNEL**3
DISTANCE_SCALE = 10_000.0
DEFAULT_STEP = 30


@dataclass
class DistanceSeries:
    distances: np.ndarray
    labels: np.ndarray | None = None
    modes: np.ndarray | None = None
    bandwidth: float | None = None

    def __len__(self) -> int:
        return len(self.distances)

    @property
    def n_clusters(self) -> int:
        return 0 if self.labels is None else int(self.labels.max()) + 1


@dataclass
class KeyframeSet:
    indices: list[int] = field(default_factory=list)
    source_clusters: list[int] = field(default_factory=list)


def compute_histogram(frame: np.ndarray) -> np.ndarray:
    """Flattened 3-D color histogram; bin = (r//32)*64 + (g//32)*8 + b//32."""
    frame = check_rgb(frame)
    q = (frame >> 5).astype(np.intp)
    idx = q[..., 0] * 64 + q[..., 1] * 8 + q[..., 2]
    hist = np.bincount(idx.ravel(), minlength=N_BINS).astype(np.float64)
    assert hist.sum() == frame.shape[0] * frame.shape[1]
    return hist


def hellinger_distance(H: np.ndarray, h: np.ndarray) -> float:
    H = np.asarray(H, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if H.shape != (N_BINS,) or h.shape != (N_BINS,):
        raise ValueError(f"histograms must have {N_BINS} bins")
    if (H < 0).any() or (h < 0).any():
        raise ValueError("histogram counts must be nonnegative")
    if H.sum() <= 0 or h.sum() <= 0:
        raise ValueError("histogram has no mass")
    # 1 - sum(sqrt(H h)) / sqrt(mean(H) mean(h) N^2) rewritten over unit-mass
    # histograms as half the squared distance of their square roots; identical
    # algebraically, but stays accurate when the histograms nearly coincide
    root_diff = np.sqrt(H / H.sum()) - np.sqrt(h / h.sum())
    return float(min(np.sqrt(0.5 * np.dot(root_diff, root_diff)), 1.0))


def scaled_distance(H: np.ndarray, h: np.ndarray) -> float:
    return DISTANCE_SCALE * hellinger_distance(H, h)


def distance_series(
    frames: Iterable[np.ndarray], sample: np.ndarray | None = None
) -> DistanceSeries:
    """Scaled distance of every frame's histogram to the sample frame's histogram.

    The sample defaults to an all-black frame of the first frame's size.
    """
    distances = []
    H = None
    for frame in frames:
        if H is None:
            if sample is None:
                sample = np.zeros_like(check_rgb(frame))
            H = compute_histogram(sample)
        distances.append(scaled_distance(H, compute_histogram(frame)))
    if not distances:
        raise ValueError("video has no frames")
    return DistanceSeries(np.asarray(distances))


def estimate_bandwidth(distances: np.ndarray) -> float:
    lo, hi = np.percentile(distances, [5, 95])
    return max(0.3 * (hi - lo), 1.0)


def _window_means(points: np.ndarray, data_sorted: np.ndarray, prefix: np.ndarray, bw: float):
    left = np.searchsorted(data_sorted, points - bw, side="left")
    right = np.searchsorted(data_sorted, points + bw, side="right")
    # the window always contains the point's own origin while the point sits
    # inside the data range, but guard against an empty window anyway
    count = right - left
    total = prefix[right] - prefix[left]
    return np.where(count > 0, total / np.maximum(count, 1), points)


def mean_shift_cluster(
    series: DistanceSeries,
    bandwidth: float | None = None,
    max_iter: int = 300,
) -> DistanceSeries:
    """1-D flat-kernel mean shift over the distance series.

    Each point climbs to the mean of the samples within ``bandwidth`` until its
    shift drops below ``1e-3 * bandwidth``. Converged positions closer than
    ``bandwidth / 2`` are merged into one mode, and every frame is labelled with
    the mode nearest to its converged position. Cluster ids follow ascending mode.
    """
    data = np.asarray(series.distances, dtype=np.float64)
    if data.size == 0:
        raise ValueError("cannot cluster an empty series")
    if bandwidth is None:
        bandwidth = estimate_bandwidth(data)
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")

    data_sorted = np.sort(data)
    prefix = np.concatenate([[0.0], np.cumsum(data_sorted)])
    points = data.copy()
    active = np.ones(len(points), dtype=bool)
    for _ in range(max_iter):
        moved = _window_means(points[active], data_sorted, prefix, bandwidth)
        shift = np.abs(moved - points[active])
        points[active] = moved
        still = shift >= 1e-3 * bandwidth
        active[np.flatnonzero(active)[~still]] = False
        if not active.any():
            break

    # greedy merge along the sorted converged positions
    order = np.sort(points)
    groups: list[list[float]] = [[order[0]]]
    for p in order[1:]:
        if p - groups[-1][0] < bandwidth / 2:
            groups[-1].append(p)
        else:
            groups.append([p])
    modes = np.array([np.mean(g) for g in groups])

    # argmin picks the first (lowest id) on ties
    labels = np.abs(points[:, None] - modes[None, :]).argmin(axis=1)
    used, labels = np.unique(labels, return_inverse=True)
    return DistanceSeries(data, labels.astype(np.intp), modes[used], float(bandwidth))


def select_keyframes(series: DistanceSeries, x: int = DEFAULT_STEP) -> KeyframeSet:
    """Every ``x``-th frame of each cluster, starting with the cluster's first frame."""
    if series.labels is None:
        raise ValueError("series has no cluster labels; run mean_shift_cluster first")
    if x < 1:
        raise ValueError(f"keyframe step must be a positive integer, got {x}")
    picked: dict[int, int] = {}
    for cluster in np.unique(series.labels):
        members = np.flatnonzero(series.labels == cluster)
        for idx in members[::x]:
            picked[int(idx)] = int(cluster)
    indices = sorted(picked)
    return KeyframeSet(indices, [picked[i] for i in indices])


def extract_keyframes(
    frames: Sequence[np.ndarray],
    x: int = DEFAULT_STEP,
    bandwidth: float | None = None,
    sample: np.ndarray | None = None,
) -> tuple[KeyframeSet, DistanceSeries]:
    series = mean_shift_cluster(distance_series(frames, sample), bandwidth)
    return select_keyframes(series, x), series
