"""Masked-segmentation construction: target rectangle, hand-retention squares,
channel-selective masking of the seg map, and masking of the RGB person image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_data import (
    ARM_LABELS,
    KP_LEFT_ELBOW,
    KP_LEFT_WRIST,
    KP_RIGHT_ELBOW,
    KP_RIGHT_WRIST,
    LABEL_BACKGROUND,
    TARGET_LABELS,
    ImageGeometry,
    KeypointSet,
    RGBImage,
    SegMap,
)
from .errors import EmptyTargetRegion, ShapeMismatch

# Channels zeroed inside the masked region: torso, arms, top clothes, background.
MASKABLE_LABELS = tuple(sorted(set(TARGET_LABELS) | {LABEL_BACKGROUND}))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle with inclusive pixel bounds."""

    top: int
    left: int
    bottom: int
    right: int

    def __post_init__(self):
        if not (0 <= self.top <= self.bottom and 0 <= self.left <= self.right):
            raise ValueError(f"degenerate rect {self}")

    def mask(self, geom: ImageGeometry) -> np.ndarray:
        m = np.zeros(geom.shape, dtype=bool)
        m[self.top : self.bottom + 1, self.left : self.right + 1] = True
        return m


@dataclass(frozen=True)
class OrientedSquare:
    """Square with sides normal to the forearm axis, covering the hand.

    `center` is the square's center; `axis` is the unit elbow->wrist
    direction in (row, col) coordinates; `side` is the edge length.
    """

    center: tuple[float, float]
    axis: tuple[float, float]
    side: float

    def __post_init__(self):
        n = float(np.hypot(*self.axis))
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"axis must be unit length, got norm {n}")
        if self.side <= 0:
            raise ValueError("side must be positive")

    def contains(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Vectorized point-in-square test (boundary inclusive)."""
        ar, ac = self.axis
        dr = rows - self.center[0]
        dc = cols - self.center[1]
        along = dr * ar + dc * ac
        across = -dr * ac + dc * ar
        half = self.side / 2.0
        eps = 1e-9
        return (np.abs(along) <= half + eps) & (np.abs(across) <= half + eps)

    def corners(self) -> np.ndarray:
        """4x2 array of corner (row, col) coordinates."""
        ar, ac = self.axis
        perp = np.array([-ac, ar])
        ax = np.array([ar, ac])
        c = np.array(self.center)
        h = self.side / 2.0
        return np.stack(
            [c - h * ax - h * perp, c - h * ax + h * perp,
             c + h * ax + h * perp, c + h * ax - h * perp]
        )


@dataclass(frozen=True)
class MaskRegion:
    rect: Rect
    hand_squares: tuple[OrientedSquare, ...]
    region_mask: np.ndarray  # H x W, 1 = masked

    @staticmethod
    def empty(geom: ImageGeometry) -> "MaskRegion":
        return MaskRegion(
            rect=Rect(0, 0, 0, 0),
            hand_squares=(),
            region_mask=np.zeros(geom.shape, dtype=np.float32),
        )


@dataclass(frozen=True)
class MaskedSegMap:
    data: np.ndarray  # H x W x 10
    region: MaskRegion

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.data.shape[0], self.data.shape[1])


def default_pad(geom: ImageGeometry) -> int:
    """2 px of rectangle padding at 64-pixel height, scaling with resolution."""
    return int(round(8 * geom.height / 256))


def target_bounding_rect(seg: SegMap, pad: int) -> Rect:
    """Smallest rectangle containing torso/arm/top-clothes pixels, padded and clipped."""
    union = seg.data[:, :, list(TARGET_LABELS)].sum(axis=2) > 0
    rows, cols = np.nonzero(union)
    if rows.size == 0:
        raise EmptyTargetRegion("no torso/arm/top-clothes pixel in scene")
    h, w = union.shape
    return Rect(
        top=max(0, int(rows.min()) - pad),
        left=max(0, int(cols.min()) - pad),
        bottom=min(h - 1, int(rows.max()) + pad),
        right=min(w - 1, int(cols.max()) + pad),
    )


def _arm_square(kp: KeypointSet, elbow: int, wrist: int) -> OrientedSquare | None:
    if not (kp.visible(elbow) and kp.visible(wrist)):
        return None
    e = kp.location(elbow)
    w = kp.location(wrist)
    d = w - e
    length = float(np.hypot(*d))
    if length == 0.0:
        return None
    axis = d / length
    # One side passes through the wrist; the square extends one forearm
    # length beyond the wrist along the axis.
    center = w + (length / 2.0) * axis
    return OrientedSquare(center=(float(center[0]), float(center[1])),
                          axis=(float(axis[0]), float(axis[1])),
                          side=length)


def hand_retention_squares(kp: KeypointSet) -> list[OrientedSquare]:
    """One square per arm whose elbow and wrist are both visible."""
    squares = []
    for elbow, wrist in ((KP_LEFT_ELBOW, KP_LEFT_WRIST), (KP_RIGHT_ELBOW, KP_RIGHT_WRIST)):
        sq = _arm_square(kp, elbow, wrist)
        if sq is not None:
            squares.append(sq)
    return squares


def build_mask_region(seg: SegMap, kp: KeypointSet, pad: int) -> MaskRegion:
    """Rectangle pixels minus hand-square pixels that carry an arm label."""
    rect = target_bounding_rect(seg, pad)
    geom = seg.geometry
    squares = tuple(hand_retention_squares(kp))
    mask = rect.mask(geom)
    if squares:
        rows, cols = np.indices(geom.shape)
        in_square = np.zeros(geom.shape, dtype=bool)
        for sq in squares:
            in_square |= sq.contains(rows.astype(np.float64), cols.astype(np.float64))
        arm = seg.data[:, :, list(ARM_LABELS)].sum(axis=2) > 0
        mask &= ~(in_square & arm)
    return MaskRegion(rect=rect, hand_squares=squares,
                      region_mask=mask.astype(np.float32))


def mask_segmentation(seg: SegMap, kp: KeypointSet, pad: int | None = None) -> MaskedSegMap:
    """Zero the torso/arm/top-clothes/background channels inside the region."""
    if pad is None:
        pad = default_pad(seg.geometry)
    region = build_mask_region(seg, kp, pad)
    data = seg.data.copy()
    masked = region.region_mask > 0
    for ch in MASKABLE_LABELS:
        data[:, :, ch][masked] = 0.0
    return MaskedSegMap(data=data, region=region)


def mask_person_image(img: RGBImage, seg: SegMap, region: MaskRegion) -> RGBImage:
    """Zero-fill person pixels that are both target-labeled and inside the region."""
    if img.data.shape[:2] != seg.data.shape[:2] or img.data.shape[:2] != region.region_mask.shape:
        raise ShapeMismatch("image / seg / region geometries differ")
    target = seg.data[:, :, list(TARGET_LABELS)].sum(axis=2) > 0
    kill = target & (region.region_mask > 0)
    data = img.data.copy()
    data[kill] = 0.0
    return RGBImage(data)
