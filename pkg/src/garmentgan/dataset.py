"""Training samples, VITON-layout disk I/O, and batch preparation.

Disk layout under a dataset root:
    image/{id}.png   RGB person photo
    cloth/{id}.png   RGB product shot
    parse/{id}.png   8-bit single-channel parse map, values 0..9
    pose/{id}.json   17 entries of [row, col, visible]
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
import torch

from .core_data import (
    LABEL_TOP_CLOTHES,
    NUM_KEYPOINTS,
    ImageGeometry,
    KeypointSet,
    ParseLabelMap,
    RGBImage,
    SegMap,
    build_person_representation,
    onehot_encode,
)
from .errors import InvalidPose, MissingAsset
from .masking import mask_person_image, mask_segmentation


@dataclass(frozen=True)
class TrainingSample:
    person: RGBImage
    cloth: RGBImage
    parse: ParseLabelMap
    keypoints: KeypointSet
    worn_cloth: RGBImage

    def __post_init__(self):
        geoms = {self.person.geometry, self.cloth.geometry,
                 self.parse.geometry, self.worn_cloth.geometry}
        if len(geoms) != 1:
            raise ValueError(f"sample geometries differ: {geoms}")

    @property
    def geometry(self) -> ImageGeometry:
        return self.person.geometry


def _read_rgb(path: Path, geom: ImageGeometry) -> RGBImage:
    raw = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if raw is None:
        raise MissingAsset(f"cannot read image {path}")
    rgb = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    rgb = cv2.resize(rgb, (geom.width, geom.height), interpolation=cv2.INTER_LINEAR)
    return RGBImage((rgb.astype(np.float32) / 127.5 - 1.0).clip(-1, 1))


def _write_rgb(path: Path, img: RGBImage):
    arr = ((img.data + 1.0) * 127.5).round().clip(0, 255).astype(np.uint8)
    cv2.imwrite(str(path), cv2.cvtColor(arr, cv2.COLOR_RGB2BGR))


def load_viton_sample(root: str | Path, sample_id: str,
                      geometry: ImageGeometry) -> TrainingSample:
    root = Path(root)
    paths = {
        "person": root / "image" / f"{sample_id}.png",
        "cloth": root / "cloth" / f"{sample_id}.png",
        "parse": root / "parse" / f"{sample_id}.png",
        "pose": root / "pose" / f"{sample_id}.json",
    }
    for name, p in paths.items():
        if not p.exists():
            raise MissingAsset(f"missing {name} file: {p}")

    person = _read_rgb(paths["person"], geometry)
    cloth = _read_rgb(paths["cloth"], geometry)

    raw_parse = cv2.imread(str(paths["parse"]), cv2.IMREAD_GRAYSCALE)
    if raw_parse is None:
        raise MissingAsset(f"cannot read parse map {paths['parse']}")
    src_h, src_w = raw_parse.shape
    parse_arr = cv2.resize(raw_parse, (geometry.width, geometry.height),
                           interpolation=cv2.INTER_NEAREST)
    parse = ParseLabelMap(parse_arr.astype(np.int64))

    try:
        entries = json.loads(paths["pose"].read_text())
        pts = np.asarray(entries, dtype=np.float64)
        if pts.shape != (NUM_KEYPOINTS, 3):
            raise ValueError(f"expected {NUM_KEYPOINTS}x3 pose, got {pts.shape}")
    except (ValueError, TypeError) as exc:
        raise InvalidPose(f"{paths['pose']}: {exc}") from exc
    pts[:, 0] *= geometry.height / src_h
    pts[:, 1] *= geometry.width / src_w
    kp = KeypointSet(pts)

    worn = np.where((parse.labels == LABEL_TOP_CLOTHES)[:, :, None],
                    person.data, 0.0).astype(np.float32)
    return TrainingSample(person=person, cloth=cloth, parse=parse,
                          keypoints=kp, worn_cloth=RGBImage(worn))


def save_viton_sample(root: str | Path, sample_id: str, sample: TrainingSample):
    root = Path(root)
    for sub in ("image", "cloth", "parse", "pose"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    _write_rgb(root / "image" / f"{sample_id}.png", sample.person)
    _write_rgb(root / "cloth" / f"{sample_id}.png", sample.cloth)
    cv2.imwrite(str(root / "parse" / f"{sample_id}.png"),
                sample.parse.labels.astype(np.uint8))
    (root / "pose" / f"{sample_id}.json").write_text(
        json.dumps(sample.keypoints.points.tolist()))


def _hwc_to_tensor(arr: np.ndarray) -> torch.Tensor:
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return torch.from_numpy(np.ascontiguousarray(arr)).float().permute(2, 0, 1)


def prepare_sample(sample: TrainingSample) -> dict[str, torch.Tensor]:
    """All per-sample tensors needed by both training stages (CHW)."""
    seg = onehot_encode(sample.parse)
    person_rep = build_person_representation(seg, sample.keypoints)
    masked = mask_segmentation(seg, sample.keypoints)
    masked_person = mask_person_image(sample.person, seg, masked.region)
    worn_support = (sample.parse.labels == LABEL_TOP_CLOTHES).astype(np.float32)
    return {
        "real_seg": _hwc_to_tensor(seg.data),
        "masked_seg": _hwc_to_tensor(masked.data),
        "region_mask": _hwc_to_tensor(masked.region.region_mask),
        "person_rep": _hwc_to_tensor(person_rep.data),
        "cloth": _hwc_to_tensor(sample.cloth.data),
        "real_person": _hwc_to_tensor(sample.person.data),
        "masked_person": _hwc_to_tensor(masked_person.data),
        "worn_cloth": _hwc_to_tensor(sample.worn_cloth.data),
        "worn_support": _hwc_to_tensor(worn_support),
    }


class SamplePool:
    """Pregenerated pool of prepared samples with random batch draws."""

    def __init__(self, samples: list[TrainingSample], seed: int = 0):
        prepared = [prepare_sample(s) for s in samples]
        self.tensors = {
            key: torch.stack([p[key] for p in prepared])
            for key in prepared[0]
        }
        self.size = len(samples)
        self._rng = np.random.default_rng(seed)

    def batch(self, batch_size: int) -> dict[str, torch.Tensor]:
        idx = self._rng.integers(0, self.size, size=batch_size)
        idx_t = torch.from_numpy(idx)
        return {k: v[idx_t] for k, v in self.tensors.items()}
