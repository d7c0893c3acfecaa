"""Two-stage training orchestration: sample pools, optimizers, JSON-lines
loss logs, and resumable checkpoint archives."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from filelock import FileLock, Timeout

from . import toydata
from .appearance_gan import (
    AppearanceGenerator,
    AppearanceLossWeights,
    MultiScaleDiscriminator,
    appearance_train_step,
)
from .backbones import FrozenConvBackbone
from .config import PipelineConfig
from .dataset import SamplePool, load_viton_sample
from .errors import ConfigError
from .geometric_alignment import AlignmentNet, TpsWarper
from .shape_gan import (
    ShapeDiscriminator,
    ShapeGenerator,
    ShapeLossWeights,
    shape_train_step,
)

SHAPE_CKPT = "shape.pt"
APPEARANCE_CKPT = "appearance.pt"


def make_optimizer(params, config: PipelineConfig):
    return torch.optim.Adam(params, lr=config.lr,
                            betas=(config.adam_beta1, config.adam_beta2))


def build_shape_models(config: PipelineConfig):
    gen = ShapeGenerator(depth=config.depth, base_width=config.base_width)
    disc = ShapeDiscriminator(n_layers=config.disc_layers,
                              base_width=config.disc_base_width)
    return gen, disc


def build_appearance_models(config: PipelineConfig):
    gen = AppearanceGenerator(depth=config.depth, base_width=config.base_width)
    disc = MultiScaleDiscriminator(num_scales=config.disc_scales,
                                   n_layers=config.disc_layers,
                                   base_width=config.disc_base_width)
    align = AlignmentNet(config.geometry.shape, grid_size=config.grid_size,
                         n_down=config.align_downsamples)
    warper = TpsWarper(config.grid_size)
    return gen, disc, align, warper


def training_pool(config: PipelineConfig) -> SamplePool:
    if config.data_root is None:
        seeds = toydata.toy_train_seeds(config.pool_size)
        samples = [toydata.generate_toy_scene(s, config.geometry) for s in seeds]
    else:
        root = Path(config.data_root)
        list_file = root / "train_ids.txt"
        if not list_file.exists():
            raise ConfigError(f"missing id list {list_file}")
        ids = list_file.read_text().split()[: config.pool_size]
        samples = [load_viton_sample(root, i, config.geometry) for i in ids]
    return SamplePool(samples, seed=config.seed)


class LossLog:
    """JSON-lines loss log, one record per logged step."""

    def __init__(self, path: Path):
        self.path = path

    def append(self, step: int, report: dict):
        with self.path.open("a") as fh:
            fh.write(json.dumps({"step": step, **report}) + "\n")

    @staticmethod
    def read(path: Path) -> list[dict]:
        return [json.loads(line) for line in path.read_text().splitlines() if line]


def _save_checkpoint(path: Path, step: int, models: dict, optimizers: dict,
                     config: PipelineConfig):
    torch.save({
        "step": step,
        "models": {k: m.state_dict() for k, m in models.items()},
        "optimizers": {k: o.state_dict() for k, o in optimizers.items()},
        "config": json.loads(config.to_json()),
    }, path)


def load_checkpoint(path: Path) -> dict:
    return torch.load(path, map_location="cpu", weights_only=False)


def _acquire_lock(out_dir: Path) -> FileLock:
    lock = FileLock(out_dir / "train.lock")
    try:
        lock.acquire(timeout=0.5)
    except Timeout as exc:
        raise ConfigError(f"another training run holds {out_dir}") from exc
    return lock


def _run_loop(config: PipelineConfig, out_dir: Path, ckpt_name: str,
              log_name: str, steps: int | None, models: dict, optimizers: dict,
              step_fn) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = _acquire_lock(out_dir)
    try:
        torch.manual_seed(config.seed)
        np.random.seed(config.seed)
        ckpt_path = out_dir / ckpt_name
        start_step = 0
        if ckpt_path.exists():
            state = load_checkpoint(ckpt_path)
            for k, m in models.items():
                m.load_state_dict(state["models"][k])
            for k, o in optimizers.items():
                o.load_state_dict(state["optimizers"][k])
            start_step = state["step"]
        pool = training_pool(config)
        log = LossLog(out_dir / log_name)
        total = steps if steps is not None else config.steps_shape
        for step in range(start_step, total):
            report = step_fn(pool.batch(config.batch_size))
            if step % config.log_every == 0 or step == total - 1:
                log.append(step, report)
            if (step + 1) % config.checkpoint_every == 0 or step == total - 1:
                _save_checkpoint(ckpt_path, step + 1, models, optimizers, config)
        if total > start_step or not ckpt_path.exists():
            _save_checkpoint(ckpt_path, max(total, start_step), models,
                             optimizers, config)
        return ckpt_path
    finally:
        lock.release()


def train_shape(config: PipelineConfig, out_dir: str | Path,
                steps: int | None = None) -> Path:
    gen, disc = build_shape_models(config)
    opt_g = make_optimizer(gen.parameters(), config)
    opt_d = make_optimizer(disc.parameters(), config)
    weights = ShapeLossWeights(config.gamma1, config.gamma2, config.gamma3)

    def step_fn(batch):
        return shape_train_step(gen, disc, batch, opt_g, opt_d, weights,
                                gp_enabled=config.gp_enabled)

    return _run_loop(config, Path(out_dir), SHAPE_CKPT, "shape_loss.jsonl",
                     steps if steps is not None else config.steps_shape,
                     {"generator": gen, "discriminator": disc},
                     {"generator": opt_g, "discriminator": opt_d}, step_fn)


def train_appearance(config: PipelineConfig, out_dir: str | Path,
                     steps: int | None = None) -> Path:
    gen, disc, align, warper = build_appearance_models(config)
    backbone = FrozenConvBackbone(seed=config.seed)
    opt_g = make_optimizer(
        list(gen.parameters()) + list(align.parameters()), config)
    opt_d = make_optimizer(disc.parameters(), config)
    weights = AppearanceLossWeights(config.alpha1, config.alpha2, config.alpha3,
                                    config.alpha4, config.beta)

    def step_fn(batch):
        # Ground-truth seg conditions stage 2 during training.
        batch = dict(batch)
        batch["seg"] = batch["real_seg"]
        return appearance_train_step(gen, disc, align, warper, batch,
                                     opt_g, opt_d, backbone, weights,
                                     gp_enabled=config.gp_enabled)

    return _run_loop(config, Path(out_dir), APPEARANCE_CKPT,
                     "appearance_loss.jsonl",
                     steps if steps is not None else config.steps_appearance,
                     {"generator": gen, "discriminator": disc, "alignment": align},
                     {"generator": opt_g, "discriminator": opt_d}, step_fn)
