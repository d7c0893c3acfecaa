"""Procedural toy scenes: a stylized "person" with a consistent parse map and
keypoints, paired with a product shot of the worn garment. This is the
desk-scale substrate on which the whole pipeline is trained and verified.
"""

from __future__ import annotations

import numpy as np

from .core_data import (
    ImageGeometry,
    KeypointSet,
    ParseLabelMap,
    RGBImage,
)
from .dataset import TrainingSample

_SKIN = np.array([0.55, 0.25, 0.05])
_HAIR = np.array([-0.55, -0.65, -0.7])
_HAT = np.array([-0.2, -0.2, 0.5])
_BOTTOM = np.array([-0.3, -0.3, -0.1])
_LEGS = np.array([0.45, 0.2, 0.05])
_SHOES = np.array([-0.7, -0.7, -0.7])

_PATTERNS = ("solid", "hstripes", "checker")


def _draw_disk(labels, center, radius, value):
    h, w = labels.shape
    rows, cols = np.indices((h, w))
    m = (rows - center[0]) ** 2 + (cols - center[1]) ** 2 <= radius**2
    labels[m] = value


def _draw_rect(labels, top, left, bottom, right, value):
    labels[max(0, top):bottom, max(0, left):right] = value


def _draw_segment(labels, p0, p1, half_width, value):
    """Thick line segment between p0 and p1 (row, col)."""
    h, w = labels.shape
    rows, cols = np.indices((h, w))
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    length2 = (d**2).sum()
    if length2 == 0:
        return
    t = ((rows - p0[0]) * d[0] + (cols - p0[1]) * d[1]) / length2
    t = np.clip(t, 0.0, 1.0)
    pr = p0[0] + t * d[0]
    pc = p0[1] + t * d[1]
    dist2 = (rows - pr) ** 2 + (cols - pc) ** 2
    labels[dist2 <= half_width**2] = value


def _pattern_color(kind, c1, c2, u, v):
    """Garment color at local coordinates (u, v) in [0, 1]."""
    if kind == "solid":
        return np.where(True, c1, c2)
    if kind == "hstripes":
        band = (np.floor(v * 6).astype(int) % 2) == 0
        return np.where(band[..., None], c1, c2)
    band = ((np.floor(v * 4).astype(int) + np.floor(u * 4).astype(int)) % 2) == 0
    return np.where(band[..., None], c1, c2)


def _paint_pattern(img, mask, kind, c1, c2):
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return
    r0, r1 = rows.min(), rows.max()
    c0, c1_ = cols.min(), cols.max()
    v = (rows - r0) / max(1, r1 - r0)
    u = (cols - c0) / max(1, c1_ - c0)
    img[rows, cols] = _pattern_color(kind, c1, c2, u, v)


def _random_garment(rng) -> tuple[str, np.ndarray, np.ndarray]:
    kind = _PATTERNS[int(rng.integers(len(_PATTERNS)))]
    # Saturated, well-separated primary color.
    c1 = rng.uniform(-1.0, 1.0, size=3)
    c1[int(rng.integers(3))] = rng.uniform(0.6, 1.0)
    c2 = np.clip(-c1 + rng.uniform(-0.2, 0.2, size=3), -1, 1)
    return kind, c1, c2


def generate_toy_scene(seed: int, geometry: ImageGeometry = ImageGeometry(64, 48)
                       ) -> TrainingSample:
    """Deterministic toy person/garment pair for a given seed."""
    rng = np.random.default_rng(seed)
    h, w = geometry.shape
    sr, sc = h / 64.0, w / 48.0

    def R(r):  # scale a base-64 row coordinate
        return int(round(r * sr))

    def C(c):  # scale a base-48 col coordinate
        return int(round(c * sc))

    labels = np.full((h, w), 9, dtype=np.int64)

    # Lower body.
    jx = int(rng.integers(-2, 3))
    _draw_rect(labels, R(38), C(16 + jx), R(48), C(32 + jx), 6)
    _draw_rect(labels, R(48), C(18 + jx), R(58), C(22 + jx), 7)
    _draw_rect(labels, R(48), C(26 + jx), R(58), C(30 + jx), 7)
    _draw_rect(labels, R(58), C(17 + jx), R(62), C(23 + jx), 8)
    _draw_rect(labels, R(58), C(25 + jx), R(62), C(31 + jx), 8)

    # Torso + top clothes (slight size jitter so layouts vary).
    tj = int(rng.integers(-1, 2))
    top_rect = (R(18), C(14 + tj), R(38), C(34 + tj))
    _draw_rect(labels, *top_rect, 5)
    _draw_rect(labels, R(15), C(21 + tj), R(18), C(27 + tj), 2)  # neck

    # Head, hair, optional hat.
    head_c = (R(9), C(24 + tj))
    _draw_disk(labels, head_c, R(5), 1)
    if rng.random() < 0.5:
        _draw_rect(labels, R(3), C(20 + tj), R(6), C(28 + tj), 0)

    # Arms: shoulder -> elbow -> wrist, drawn last so joints stay arm-labeled.
    shoulders = {3: (R(20), C(15 + tj)), 4: (R(20), C(33 + tj))}
    joints = {}
    for label, shoulder in shoulders.items():
        sign = -1.0 if label == 3 else 1.0
        a1 = rng.uniform(0.1, 0.9) * sign  # radians off vertical-down
        l1 = rng.uniform(8, 11) * sr
        elbow = (shoulder[0] + l1 * np.cos(a1), shoulder[1] + l1 * np.sin(a1))
        a2 = a1 + rng.uniform(-0.9, 0.9)
        l2 = rng.uniform(6, 9) * sr
        wrist = (elbow[0] + l2 * np.cos(a2), elbow[1] + l2 * np.sin(a2))
        margin = 2
        elbow = (float(np.clip(elbow[0], margin, h - 1 - margin)),
                 float(np.clip(elbow[1], margin, w - 1 - margin)))
        wrist = (float(np.clip(wrist[0], margin, h - 1 - margin)),
                 float(np.clip(wrist[1], margin, w - 1 - margin)))
        half_width = max(1.5, 1.5 * sr)
        _draw_segment(labels, shoulder, elbow, half_width, label)
        _draw_segment(labels, elbow, wrist, half_width, label)
        joints[label] = (shoulder, elbow, wrist)

    # Keypoints in COCO-17 order, all visible.
    ls, le, lw = joints[3]
    rs, re, rw = joints[4]
    pts = [
        head_c,                                  # nose
        (head_c[0] - R(1), head_c[1] - C(2)),    # left eye
        (head_c[0] - R(1), head_c[1] + C(2)),    # right eye
        (head_c[0], head_c[1] - C(4)),           # left ear
        (head_c[0], head_c[1] + C(4)),           # right ear
        ls, rs, le, re, lw, rw,
        (R(40), C(20 + jx)), (R(40), C(28 + jx)),  # hips
        (R(52), C(20 + jx)), (R(52), C(28 + jx)),  # knees
        (R(58), C(20 + jx)), (R(58), C(28 + jx)),  # ankles
    ]
    kp = np.array([[p[0], p[1], 1.0] for p in pts], dtype=np.float64)

    # Person image: region colors + noise background + patterned garment.
    person = rng.uniform(-0.25, 0.05, size=(h, w, 3))
    for label, color in ((0, _HAT), (1, _SKIN), (2, _SKIN), (3, _SKIN),
                         (4, _SKIN), (6, _BOTTOM), (7, _LEGS), (8, _SHOES)):
        person[labels == label] = color
    hair = (labels == 1) & (np.indices((h, w))[0] < head_c[0] - R(2))
    person[hair] = _HAIR
    kind, c1, c2 = _random_garment(rng)
    _paint_pattern(person, labels == 5, kind, c1, c2)

    # Product shot: the same garment, larger and centered on white.
    cloth = np.ones((h, w, 3))
    cloth_mask = np.zeros((h, w), dtype=bool)
    cloth_mask[R(16):R(48), C(10):C(38)] = True
    _paint_pattern(cloth, cloth_mask, kind, c1, c2)

    worn = np.where((labels == 5)[:, :, None], person, 0.0)

    return TrainingSample(
        person=RGBImage(np.clip(person, -1, 1).astype(np.float32)),
        cloth=RGBImage(np.clip(cloth, -1, 1).astype(np.float32)),
        parse=ParseLabelMap(labels),
        keypoints=KeypointSet(kp),
        worn_cloth=RGBImage(np.clip(worn, -1, 1).astype(np.float32)),
    )


def toy_split(seed: int) -> str:
    """90/10 train/val split by seed hash."""
    return "val" if seed % 10 == 0 else "train"


def toy_train_seeds(n: int, start: int = 0) -> list[int]:
    out = []
    s = start
    while len(out) < n:
        if toy_split(s) == "train":
            out.append(s)
        s += 1
    return out


def toy_val_seeds(n: int, start: int = 0) -> list[int]:
    out = []
    s = start
    while len(out) < n:
        if toy_split(s) == "val":
            out.append(s)
        s += 1
    return out
