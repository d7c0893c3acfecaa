"""End-to-end try-on inference from trained checkpoints."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .config import PipelineConfig
from .core_data import (
    KeypointSet,
    ParseLabelMap,
    RGBImage,
    SegMap,
    build_person_representation,
    onehot_encode,
)
from .dataset import _hwc_to_tensor
from .errors import MissingAsset
from .masking import mask_person_image, mask_segmentation
from .shape_gan import compose_shape, shape_forward
from .training import (
    APPEARANCE_CKPT,
    SHAPE_CKPT,
    build_appearance_models,
    build_shape_models,
    load_checkpoint,
)


@dataclass(frozen=True)
class TryonResult:
    output: RGBImage
    composed_seg: SegMap
    warped_cloth: RGBImage
    timing_ms: float


class TryonPipeline:
    """Loads both stage checkpoints and runs the full transfer chain."""

    def __init__(self, config: PipelineConfig, checkpoint_dir: str | Path):
        ckpt_dir = Path(checkpoint_dir)
        shape_path = ckpt_dir / SHAPE_CKPT
        appearance_path = ckpt_dir / APPEARANCE_CKPT
        for p in (shape_path, appearance_path):
            if not p.exists():
                raise MissingAsset(f"checkpoint not found: {p}")
        self.config = config
        self.shape_gen, _ = build_shape_models(config)
        self.shape_gen.load_state_dict(
            load_checkpoint(shape_path)["models"]["generator"])
        self.shape_gen.eval()
        app_state = load_checkpoint(appearance_path)
        self.appearance_gen, _, self.align, self.warper = \
            build_appearance_models(config)
        self.appearance_gen.load_state_dict(app_state["models"]["generator"])
        self.align.load_state_dict(app_state["models"]["alignment"])
        self.appearance_gen.eval()
        self.align.eval()

    @torch.no_grad()
    def infer(self, person: RGBImage, parse: ParseLabelMap, kp: KeypointSet,
              garment: RGBImage) -> TryonResult:
        t0 = time.perf_counter()
        seg = onehot_encode(parse)
        person_rep = build_person_representation(seg, kp)
        masked = mask_segmentation(seg, kp)

        mseg_t = _hwc_to_tensor(masked.data).unsqueeze(0)
        prep_t = _hwc_to_tensor(person_rep.data).unsqueeze(0)
        cloth_t = _hwc_to_tensor(garment.data).unsqueeze(0)

        pred = shape_forward(self.shape_gen, mseg_t, prep_t, cloth_t)
        pred_seg = SegMap(pred[0].permute(1, 2, 0).numpy(), hard=False)
        composed = compose_shape(pred_seg, seg, masked.region)

        theta = self.align(prep_t, cloth_t)
        warped_t = self.warper(cloth_t, theta)
        warped = RGBImage(
            np.clip(warped_t[0].permute(1, 2, 0).numpy(), -1, 1))

        masked_person = mask_person_image(person, seg, masked.region)
        out = self.appearance_gen(
            torch.cat([_hwc_to_tensor(masked_person.data).unsqueeze(0),
                       warped_t, prep_t], dim=1),
            torch.cat([_hwc_to_tensor(composed.data).unsqueeze(0), warped_t],
                      dim=1))
        output = RGBImage(np.clip(out[0].permute(1, 2, 0).numpy(), -1, 1))
        dt = (time.perf_counter() - t0) * 1000.0
        return TryonResult(output=output, composed_seg=composed,
                           warped_cloth=warped, timing_ms=dt)

    def infer_sample(self, sample, garment: RGBImage) -> TryonResult:
        return self.infer(sample.person, sample.parse, sample.keypoints, garment)
