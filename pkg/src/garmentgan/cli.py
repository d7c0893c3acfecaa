"""Command-line interface.

Verbs: toygen, train-shape, train-appearance, infer, metrics (fid / is),
serve. Exit codes: 0 ok, 2 config error, 3 data error, 4 training diverged.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import metrics as metrics_mod
from . import toydata, training
from .backbones import get_backbone
from .config import PipelineConfig
from .dataset import load_viton_sample, save_viton_sample
from .errors import (
    ConfigError,
    GarmentGanError,
    InsufficientData,
    InvalidPose,
    MissingAsset,
    TrainingDiverged,
)
from .inference import TryonPipeline

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (MissingAsset, InvalidPose, InsufficientData)):
        return EXIT_DATA
    if isinstance(exc, TrainingDiverged):
        return EXIT_DIVERGED
    return 1


def _load_config(config_path, overrides, seed) -> PipelineConfig:
    cfg = PipelineConfig.from_file(config_path) if config_path else PipelineConfig()
    if overrides:
        cfg = cfg.with_overrides(list(overrides))
    if seed is not None:
        cfg = cfg.with_overrides([f"seed={seed}"])
    return cfg


def common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="YAML/JSON config file")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="override a config field")(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    return fn


@click.group()
def main():
    """Two-stage garment transfer pipeline."""


def _run(fn):
    try:
        fn()
    except GarmentGanError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_code(exc))


@main.command()
@common_options
@click.option("--count", type=int, default=32, help="number of scenes")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def toygen(config_path, overrides, seed, count, out_dir):
    """Export procedural toy scenes in the VITON directory layout."""
    def body():
        cfg = _load_config(config_path, overrides, seed)
        ids = []
        for s in range(cfg.seed, cfg.seed + count):
            sample = toydata.generate_toy_scene(s, cfg.geometry)
            sid = f"toy-{s}"
            save_viton_sample(out_dir, sid, sample)
            ids.append(sid)
        train = [i for s, i in zip(range(cfg.seed, cfg.seed + count), ids)
                 if toydata.toy_split(s) == "train"]
        val = [i for i in ids if i not in train]
        Path(out_dir, "train_ids.txt").write_text("\n".join(train))
        Path(out_dir, "val_ids.txt").write_text("\n".join(val))
        click.echo(f"wrote {count} scenes to {out_dir}")
    _run(body)


@main.command("train-shape")
@common_options
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--steps", type=int, default=None)
def train_shape_cmd(config_path, overrides, seed, out_dir, steps):
    """Train the stage-1 shape transfer network."""
    def body():
        cfg = _load_config(config_path, overrides, seed)
        path = training.train_shape(cfg, out_dir or cfg.checkpoint_dir, steps)
        click.echo(f"checkpoint: {path}")
    _run(body)


@main.command("train-appearance")
@common_options
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--steps", type=int, default=None)
def train_appearance_cmd(config_path, overrides, seed, out_dir, steps):
    """Train the stage-2 appearance network jointly with the alignment module."""
    def body():
        cfg = _load_config(config_path, overrides, seed)
        path = training.train_appearance(cfg, out_dir or cfg.checkpoint_dir, steps)
        click.echo(f"checkpoint: {path}")
    _run(body)


@main.command()
@common_options
@click.option("--checkpoints", "ckpt_dir", type=click.Path(), default="checkpoints")
@click.option("--data-root", type=click.Path(), default=None,
              help="VITON-layout dataset root (default: procedural toy data)")
@click.option("--person", "person_id", required=True,
              help="sample id, or toy-<seed> without --data-root")
@click.option("--garment", "garment_id", required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def infer(config_path, overrides, seed, ckpt_dir, data_root, person_id,
          garment_id, out_path):
    """Run full try-on inference and write the output image."""
    def body():
        from .dataset import _write_rgb
        cfg = _load_config(config_path, overrides, seed)

        def load(sid):
            if data_root is not None:
                return load_viton_sample(data_root, sid, cfg.geometry)
            if not sid.startswith("toy-"):
                raise MissingAsset(f"unknown toy id {sid!r} (expected toy-<seed>)")
            return toydata.generate_toy_scene(int(sid[4:]), cfg.geometry)

        pipe = TryonPipeline(cfg, ckpt_dir)
        result = pipe.infer_sample(load(person_id), load(garment_id).cloth)
        _write_rgb(Path(out_path), result.output)
        click.echo(f"wrote {out_path} ({result.timing_ms:.0f} ms)")
    _run(body)


@main.group()
def metrics():
    """Evaluation metrics over image directories."""


def _load_image_dir(path: str) -> np.ndarray:
    import cv2
    files = sorted(Path(path).glob("*.png")) + sorted(Path(path).glob("*.jpg"))
    if not files:
        raise MissingAsset(f"no images in {path}")
    imgs = []
    for f in files:
        raw = cv2.imread(str(f), cv2.IMREAD_COLOR)
        if raw is None:
            raise MissingAsset(f"cannot read {f}")
        imgs.append(cv2.cvtColor(raw, cv2.COLOR_BGR2RGB).astype(np.float32)
                    / 127.5 - 1.0)
    return np.stack(imgs)


@metrics.command()
@click.option("--real", "real_dir", type=click.Path(exists=True), required=True)
@click.option("--fake", "fake_dir", type=click.Path(exists=True), required=True)
@click.option("--backbone", "backbone_name", default="frozen")
def fid(real_dir, fake_dir, backbone_name):
    """Frechet distance between two image directories."""
    def body():
        real = _load_image_dir(real_dir)
        fake = _load_image_dir(fake_dir)
        value = metrics_mod.fid(real, fake, get_backbone(backbone_name))
        click.echo(json.dumps({"fid": value, "n_real": len(real),
                               "n_fake": len(fake)}))
    _run(body)


@metrics.command("is")
@click.option("--fake", "fake_dir", type=click.Path(exists=True), required=True)
@click.option("--backbone", "backbone_name", default="frozen")
@click.option("--splits", type=int, default=10)
def inception(fake_dir, backbone_name, splits):
    """Inception score of an image directory."""
    def body():
        fake = _load_image_dir(fake_dir)
        mean, std = metrics_mod.inception_score(fake, get_backbone(backbone_name),
                                                splits)
        click.echo(json.dumps({"is_mean": mean, "is_std": std,
                               "n_fake": len(fake)}))
    _run(body)


@main.command()
@common_options
@click.option("--checkpoints", "ckpt_dir", type=click.Path(), default="checkpoints")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(config_path, overrides, seed, ckpt_dir, host, port):
    """Start the HTTP inference service."""
    def body():
        import uvicorn

        from .service import create_app
        cfg = _load_config(config_path, overrides, seed)
        uvicorn.run(create_app(cfg, ckpt_dir), host=host, port=port)
    _run(body)


if __name__ == "__main__":
    main()
