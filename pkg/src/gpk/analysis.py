"""Distribution analyses: depth/attitude histograms, v-correlation scatter
series under camera-pose perturbation, and histogram-intersection overlap."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, GpkError, QuantityMismatch
from .geometry import (
    bottom_center,
    ground_depth_at_pixel,
    perturbation_rotation,
    plane_to_attitude,
    project_point,
)
from .maps import DenormMap, refine_map

QUANTITIES = ("depth", "roll", "pitch")


@dataclass
class Histogram:
    """Uniform-bin histogram with explicit under/overflow counters."""

    edges: np.ndarray  # (bins + 1,) strictly increasing
    counts: np.ndarray  # (bins,) int
    underflow: int
    overflow: int
    mean: float  # sample mean of the histogrammed values

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    @classmethod
    def from_values(cls, values, bins: int, lo=None, hi=None) -> "Histogram":
        values = np.asarray(list(values), dtype=float)
        if values.size == 0:
            raise EmptyInput("no values to histogram")
        if lo is None:
            lo = float(values.min())
        if hi is None:
            hi = float(values.max())
        if hi <= lo:
            hi = lo + 1.0  # all-equal samples: one occupied bin
        edges = np.linspace(lo, hi, bins + 1)
        inside = (values >= lo) & (values <= hi)
        counts, _ = np.histogram(values[inside], bins=edges)
        return cls(
            edges=edges,
            counts=counts,
            underflow=int((values < lo).sum()),
            overflow=int((values > hi).sum()),
            mean=float(values.mean()),
        )

    def occupied_support(self):
        """(lo, hi) spanned by the occupied bins, or None if empty."""
        idx = np.nonzero(self.counts)[0]
        if idx.size == 0:
            return None
        return float(self.edges[idx[0]]), float(self.edges[idx[-1] + 1])

    def relative_support(self) -> float:
        """Occupied support width divided by |mean| of the samples."""
        sup = self.occupied_support()
        if sup is None or self.mean == 0:
            return math.inf if sup is not None else 0.0
        return (sup[1] - sup[0]) / abs(self.mean)

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        for i, c in enumerate(self.counts):
            lines.append(f"{self.edges[i]!r},{self.edges[i + 1]!r},{int(c)}")
        return "\n".join(lines) + "\n"


@dataclass
class ScatterSeries:
    """Per-object (v, value) samples for one quantity and condition."""

    quantity: str  # depth | roll | pitch
    condition: str  # clean | perturbed
    frame_ids: list
    v: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if not (np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.values))):
            raise ValueError("scatter series must be finite")

    def to_csv(self) -> str:
        lines = ["frame_id,v,value,condition"]
        for fid, v, val in zip(self.frame_ids, self.v, self.values):
            lines.append(f"{fid},{v!r},{val!r},{self.condition}")
        return "\n".join(lines) + "\n"


def _object_ground_depths(frame):
    """Analytic ground depth at each projected bottom-center pixel."""
    k = frame.rig.intrinsics
    out = []
    for obj in frame.objects:
        p = bottom_center(obj.box3d, frame.ground)
        try:
            px = project_point(p, k)
            out.append(ground_depth_at_pixel(px, k, frame.ground))
        except GpkError:
            continue
    return out


def depth_histogram(frames, bins: int, lo=None, hi=None) -> Histogram:
    """Histogram of per-object ground depths at annotated bottom centers."""
    depths = []
    for f in frames:
        depths.extend(_object_ground_depths(f))
    if not depths:
        raise EmptyInput("no annotated boxes")
    return Histogram.from_values(depths, bins, lo, hi)


def map_attitudes(m: DenormMap):
    """Vectorized per-pixel (roll, pitch, height) from a denorm map."""
    a = m.data[..., 0]
    b = m.data[..., 1]
    c = m.data[..., 2]
    d = m.data[..., 3]
    s = np.where(b > 0, -1.0, 1.0)
    pitch = np.arcsin(np.clip(-c * s, -1.0, 1.0))
    roll = np.arctan2(a * s, -b * s)
    return roll, pitch, d


def attitude_histograms(frames, bins: int, stride: int = 16):
    """(roll, pitch, height) histograms with one sample per refined-map pixel.

    Maps are built at 1/stride resolution of each frame's image, matching
    the predictor's feature stride.
    """
    frames = list(frames)
    if not frames:
        raise EmptyInput("no frames")
    rolls, pitches, heights = [], [], []
    for f in frames:
        k = f.rig.intrinsics
        h = max(int(round(2 * k.cy)) // stride, 1)
        w = max(int(round(2 * k.cx)) // stride, 1)
        ks = type(k)(
            fx=k.fx / stride, fy=k.fy / stride, cx=k.cx / stride, cy=k.cy / stride
        )
        m, _ = refine_map(f.ground, [o.box3d for o in f.objects], ks, h, w)
        r, p, d = map_attitudes(m)
        rolls.append(r.reshape(-1))
        pitches.append(p.reshape(-1))
        heights.append(d.reshape(-1))
    return (
        Histogram.from_values(np.concatenate(rolls), bins),
        Histogram.from_values(np.concatenate(pitches), bins),
        Histogram.from_values(np.concatenate(heights), bins),
    )


def v_correlation_series(
    frames,
    quantity: str,
    perturb=None,
    clip_to_image: bool = True,
) -> ScatterSeries:
    """(projected bottom-center v, quantity) per annotated object.

    Values come from the frame record: the object's camera-frame depth,
    or the stored ground prior's roll/pitch (constant per frame on flat
    ground). With `perturb`, a per-frame (droll, dpitch) rotation about
    the camera center is applied to the projection — bottom centers are
    rotated before projecting and depth is read in the rotated frame —
    while the stored prior is left untouched. Comparing clean and
    perturbed series therefore shows how far each per-pixel
    representation drifts when the mount shifts. Objects that move
    behind the camera or outside the image rows are dropped.
    """
    if quantity not in QUANTITIES:
        raise QuantityMismatch(f"unknown quantity {quantity!r}")
    frames = list(frames)
    if not frames:
        raise EmptyInput("no frames")
    if perturb is not None:
        perturb = list(perturb)
        if len(perturb) != len(frames):
            raise ValueError("need one (droll, dpitch) pair per frame")

    fids, vs, vals = [], [], []
    for i, f in enumerate(frames):
        k = f.rig.intrinsics
        img_h = 2 * k.cy
        rot = None
        if perturb is not None:
            droll, dpitch = perturb[i]
            rot = perturbation_rotation(droll, dpitch)
        att = plane_to_attitude(f.ground)
        for obj in f.objects:
            p = bottom_center(obj.box3d, f.ground)
            if rot is not None:
                p = rot @ p
            if p[2] <= 0:
                continue
            px = project_point(p, k)
            if clip_to_image and not (0.0 <= px.v < img_h):
                continue
            if quantity == "depth":
                value = float(p[2])
            elif quantity == "roll":
                value = att.roll
            else:
                value = att.pitch
            fids.append(f.frame_id)
            vs.append(px.v)
            vals.append(value)
    if not vs:
        raise EmptyInput("no visible objects")
    return ScatterSeries(
        quantity=quantity,
        condition="clean" if perturb is None else "perturbed",
        frame_ids=fids,
        v=np.array(vs),
        values=np.array(vals),
    )


def overlap_coefficient(a: ScatterSeries, b: ScatterSeries, bins: int = 32) -> float:
    """Normalized 2D histogram intersection over (v, value) joint support."""
    if a.quantity != b.quantity:
        raise QuantityMismatch(f"{a.quantity} vs {b.quantity}")
    if a.v.size == 0 or b.v.size == 0:
        raise EmptyInput("empty scatter series")
    v_lo = min(a.v.min(), b.v.min())
    v_hi = max(a.v.max(), b.v.max())
    x_lo = min(a.values.min(), b.values.min())
    x_hi = max(a.values.max(), b.values.max())
    if v_hi <= v_lo:
        v_hi = v_lo + 1.0
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    v_edges = np.linspace(v_lo, v_hi, bins + 1)
    x_edges = np.linspace(x_lo, x_hi, bins + 1)
    ha, _, _ = np.histogram2d(a.v, a.values, bins=[v_edges, x_edges])
    hb, _, _ = np.histogram2d(b.v, b.values, bins=[v_edges, x_edges])
    ha /= ha.sum()
    hb /= hb.sum()
    return float(np.minimum(ha, hb).sum())
