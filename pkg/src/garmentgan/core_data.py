"""Canonical domain types and encodings.

Images are numpy arrays in HWC layout. RGB values live in [-1, 1]
(tanh-output generators); masks and heatmaps live in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from .errors import DegeneratePixel, InvalidLabel, ShapeMismatch

NUM_PARSE_LABELS = 10

# Fixed label -> channel mapping for the 10-class parse vocabulary.
LABEL_HAT = 0
LABEL_FACE_HAIR = 1
LABEL_TORSO = 2
LABEL_LEFT_ARM = 3
LABEL_RIGHT_ARM = 4
LABEL_TOP_CLOTHES = 5
LABEL_BOTTOM_CLOTHES = 6
LABEL_LEGS = 7
LABEL_SHOES = 8
LABEL_BACKGROUND = 9

# Channels that make up the clothing/body target area.
TARGET_LABELS = (LABEL_TORSO, LABEL_LEFT_ARM, LABEL_RIGHT_ARM, LABEL_TOP_CLOTHES)
ARM_LABELS = (LABEL_LEFT_ARM, LABEL_RIGHT_ARM)

# Canonical COCO-17 keypoint order.
COCO_KEYPOINT_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)
NUM_KEYPOINTS = len(COCO_KEYPOINT_NAMES)

KP_LEFT_ELBOW = 7
KP_RIGHT_ELBOW = 8
KP_LEFT_WRIST = 9
KP_RIGHT_WRIST = 10


@dataclass(frozen=True)
class ImageGeometry:
    height: int
    width: int

    def __post_init__(self):
        if self.height < 8 or self.width < 8:
            raise ValueError(f"geometry too small: {self.height}x{self.width}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def divisible_by(self, depth: int) -> bool:
        f = 2**depth
        return self.height % f == 0 and self.width % f == 0


def _check_geometry(data: np.ndarray, channels: int | None):
    if channels is None:
        if data.ndim != 2:
            raise ShapeMismatch(f"expected HxW array, got shape {data.shape}")
    elif data.ndim != 3 or data.shape[2] != channels:
        raise ShapeMismatch(f"expected HxWx{channels} array, got shape {data.shape}")


@dataclass(frozen=True)
class RGBImage:
    """H x W x 3 image with values in [-1, 1]."""

    data: np.ndarray

    def __post_init__(self):
        _check_geometry(self.data, 3)
        if not np.all(np.isfinite(self.data)):
            raise ValueError("non-finite pixel values")
        if self.data.min() < -1.0 - 1e-6 or self.data.max() > 1.0 + 1e-6:
            raise ValueError("RGB values must lie in [-1, 1]")

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.data.shape[0], self.data.shape[1])


@dataclass(frozen=True)
class ParseLabelMap:
    """H x W integer map with labels in {0..9}."""

    labels: np.ndarray

    def __post_init__(self):
        _check_geometry(self.labels, None)
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise InvalidLabel(f"labels must be integers, got dtype {self.labels.dtype}")
        if self.labels.min() < 0 or self.labels.max() >= NUM_PARSE_LABELS:
            raise InvalidLabel("label outside {0..9}")

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.labels.shape[0], self.labels.shape[1])


@dataclass(frozen=True)
class SegMap:
    """H x W x 10 one-hot (hard) or softmax (soft) segmentation map."""

    data: np.ndarray
    hard: bool = True

    def __post_init__(self):
        _check_geometry(self.data, NUM_PARSE_LABELS)
        sums = self.data.sum(axis=2)
        if self.hard:
            if not (np.isin(self.data, (0.0, 1.0)).all() and np.all(sums == 1.0)):
                raise ValueError("hard SegMap must be one-hot at every pixel")
        else:
            if np.abs(sums - 1.0).max() > 1e-5:
                raise ValueError("soft SegMap channel sums must be within 1e-5 of 1")

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.data.shape[0], self.data.shape[1])


@dataclass(frozen=True)
class KeypointSet:
    """17 body keypoints in COCO order: rows of (row, col, visible)."""

    points: np.ndarray

    def __post_init__(self):
        if self.points.shape != (NUM_KEYPOINTS, 3):
            raise ShapeMismatch(f"expected {NUM_KEYPOINTS}x3, got {self.points.shape}")

    def visible(self, index: int) -> bool:
        return bool(self.points[index, 2] > 0)

    def location(self, index: int) -> np.ndarray:
        return self.points[index, :2].astype(np.float64)


@dataclass(frozen=True)
class PersonRepresentation:
    """H x W x 18 conditioning tensor: 17 keypoint heatmaps + blurred body shape."""

    data: np.ndarray

    def __post_init__(self):
        _check_geometry(self.data, NUM_KEYPOINTS + 1)
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise ValueError("person representation values must lie in [0, 1]")

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.data.shape[0], self.data.shape[1])


def onehot_encode(parse: ParseLabelMap) -> SegMap:
    """Expand a label map into a 10-channel one-hot map."""
    h, w = parse.labels.shape
    data = np.zeros((h, w, NUM_PARSE_LABELS), dtype=np.float32)
    rows, cols = np.indices((h, w))
    data[rows, cols, parse.labels] = 1.0
    return SegMap(data, hard=True)


def decode_to_labels(seg: SegMap) -> ParseLabelMap:
    """Per-pixel argmax over channels; ties break to the lowest channel index."""
    if np.any(seg.data.sum(axis=2) <= 0):
        raise DegeneratePixel("all-zero pixel cannot be decoded")
    # np.argmax returns the first maximal index, which is the stated tie rule.
    return ParseLabelMap(np.argmax(seg.data, axis=2).astype(np.int64))


def heatmap_radius(geom: ImageGeometry) -> int:
    """Disk radius of 4 px at 256-pixel height, scaling with resolution."""
    return int(round(4 * geom.height / 256))


def keypoints_to_heatmaps(kp: KeypointSet, geom: ImageGeometry) -> np.ndarray:
    """Binary disk heatmaps, one channel per keypoint; invisible -> zero channel."""
    r = heatmap_radius(geom)
    out = np.zeros((geom.height, geom.width, NUM_KEYPOINTS), dtype=np.float32)
    rows, cols = np.indices(geom.shape)
    for k in range(NUM_KEYPOINTS):
        if not kp.visible(k):
            continue
        pr, pc = kp.location(k)
        dist2 = (rows - pr) ** 2 + (cols - pc) ** 2
        out[:, :, k] = (dist2 <= r * r).astype(np.float32)
    return out


BODY_SHAPE_DOWN_FACTOR = 16


def body_shape_mask(seg: SegMap) -> np.ndarray:
    """Blurred binary mask of torso, arms and top clothes.

    Blur = area-average downsample by 16, then bilinear upsample back.
    """
    union = seg.data[:, :, list(TARGET_LABELS)].sum(axis=2)
    mask = (union > 0).astype(np.float32)
    h, w = mask.shape
    small_h = max(1, h // BODY_SHAPE_DOWN_FACTOR)
    small_w = max(1, w // BODY_SHAPE_DOWN_FACTOR)
    small = cv2.resize(mask, (small_w, small_h), interpolation=cv2.INTER_AREA)
    up = cv2.resize(small, (w, h), interpolation=cv2.INTER_LINEAR)
    return np.clip(up, 0.0, 1.0)


def assemble_person_representation(
    heatmaps: np.ndarray, shape_mask: np.ndarray
) -> PersonRepresentation:
    """Concatenate heatmaps (first 17 channels) with the body-shape mask."""
    if heatmaps.shape[:2] != shape_mask.shape:
        raise ShapeMismatch(
            f"heatmaps {heatmaps.shape[:2]} vs shape mask {shape_mask.shape}"
        )
    data = np.concatenate([heatmaps, shape_mask[:, :, None]], axis=2)
    return PersonRepresentation(data.astype(np.float32))


def build_person_representation(seg: SegMap, kp: KeypointSet) -> PersonRepresentation:
    """Convenience: heatmaps + body-shape mask in one call."""
    hm = keypoints_to_heatmaps(kp, seg.geometry)
    return assemble_person_representation(hm, body_shape_mask(seg))
