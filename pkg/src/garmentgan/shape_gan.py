"""Stage-1 shape transfer: encoder-decoder generator over segmentation maps,
PatchGAN discriminator, composition rule, and the adversarial loss suite
(hinge + gradient penalty, parsing and per-pixel terms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .core_data import (
    LABEL_BOTTOM_CLOTHES,
    LABEL_FACE_HAIR,
    LABEL_HAT,
    LABEL_LEGS,
    LABEL_SHOES,
    NUM_PARSE_LABELS,
    SegMap,
)
from .errors import InvalidGeometry, TrainingDiverged
from .masking import MaskRegion

# Generator input: 10-ch masked seg + 18-ch person representation + 3-ch cloth.
SHAPE_GEN_IN_CHANNELS = 31
# Discriminator sees candidate seg concatenated with the full conditioning.
SHAPE_DISC_IN_CHANNELS = NUM_PARSE_LABELS + SHAPE_GEN_IN_CHANNELS

# Labels copied from the source map inside the masked region (identity
# preservation); arm pixels retained by hand squares sit outside the region
# mask and are therefore copied automatically.
COMPOSE_KEEP_LABELS = (LABEL_HAT, LABEL_FACE_HAIR, LABEL_BOTTOM_CLOTHES,
                       LABEL_LEGS, LABEL_SHOES)


@dataclass(frozen=True)
class ShapeLossWeights:
    gamma1: float = 15.0
    gamma2: float = 20.0
    gamma3: float = 10.0

    def __post_init__(self):
        if min(self.gamma1, self.gamma2, self.gamma3) < 0:
            raise ValueError("loss weights must be non-negative")


def conv_block(in_ch, out_ch, stride=1):
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1),
        nn.InstanceNorm2d(out_ch),
        nn.LeakyReLU(0.2, inplace=True),
    )


class ResidualBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.body(x)


class ShapeGenerator(nn.Module):
    """3x3 convs, stride-2 downsampling x depth, instance norm, leaky ReLU,
    4 residual bottleneck blocks, residual decoder with nearest upsampling,
    softmax head producing a 10-channel soft seg map.
    """

    def __init__(self, depth: int = 5, base_width: int = 64, max_width: int = 256):
        super().__init__()
        self.depth = depth
        widths = [min(base_width * 2**i, max_width) for i in range(depth + 1)]
        self.stem = conv_block(SHAPE_GEN_IN_CHANNELS, widths[0])
        self.encoder = nn.ModuleList(
            conv_block(widths[i], widths[i + 1], stride=2) for i in range(depth)
        )
        self.bottleneck = nn.Sequential(*[ResidualBlock(widths[depth]) for _ in range(4)])
        ups = []
        for i in reversed(range(depth)):
            ups.append(nn.Sequential(
                nn.Upsample(scale_factor=2, mode="nearest"),
                conv_block(widths[i + 1], widths[i]),
                ResidualBlock(widths[i]),
            ))
        self.decoder = nn.ModuleList(ups)
        self.head = nn.Conv2d(widths[0], NUM_PARSE_LABELS, 1)

    def forward(self, x):
        h, w = x.shape[-2:]
        if h % 2**self.depth or w % 2**self.depth:
            raise InvalidGeometry(
                f"{h}x{w} not divisible by 2^{self.depth}"
            )
        y = self.stem(x)
        for enc in self.encoder:
            y = enc(y)
        y = self.bottleneck(y)
        for dec in self.decoder:
            y = dec(y)
        return torch.softmax(self.head(y), dim=1)


class ShapeDiscriminator(nn.Module):
    """PatchGAN: 3x3 kernels, stride-2 downsampling, instance norm, leaky
    ReLU, linear patch-score head (hinge formulation, no sigmoid).
    """

    def __init__(self, in_channels: int = SHAPE_DISC_IN_CHANNELS,
                 n_layers: int = 3, base_width: int = 32, max_width: int = 256):
        super().__init__()
        self.n_layers = n_layers
        layers = [nn.Conv2d(in_channels, base_width, 3, stride=2, padding=1),
                  nn.LeakyReLU(0.2, inplace=True)]
        ch = base_width
        for _ in range(n_layers - 1):
            nxt = min(ch * 2, max_width)
            layers += [nn.Conv2d(ch, nxt, 3, stride=2, padding=1),
                       nn.InstanceNorm2d(nxt),
                       nn.LeakyReLU(0.2, inplace=True)]
            ch = nxt
        layers.append(nn.Conv2d(ch, 1, 3, padding=1))
        self.body = nn.Sequential(*layers)

    def patch_grid_size(self, h: int, w: int) -> tuple[int, int]:
        f = 2**self.n_layers
        return (h + f - 1) // f, (w + f - 1) // f

    def forward(self, x):
        return self.body(x)


def shape_forward(gen: ShapeGenerator, masked_seg: torch.Tensor,
                  person_rep: torch.Tensor, cloth: torch.Tensor) -> torch.Tensor:
    """Generator forward on (I_m,seg, P_s, I_c) batches in NCHW layout."""
    return gen(torch.cat([masked_seg, person_rep, cloth], dim=1))


def compose_shape(pred: SegMap, source: SegMap, region: MaskRegion) -> SegMap:
    """Replace out-of-region and identity-class pixels from the source map;
    harden the prediction elsewhere. Output is a hard seg map.
    """
    src_labels = np.argmax(source.data, axis=2)
    pred_labels = np.argmax(pred.data, axis=2)
    in_region = region.region_mask > 0
    keep_source = ~in_region | np.isin(src_labels, COMPOSE_KEEP_LABELS)
    labels = np.where(keep_source, src_labels, pred_labels)
    h, w = labels.shape
    out = np.zeros((h, w, NUM_PARSE_LABELS), dtype=np.float32)
    rows, cols = np.indices((h, w))
    out[rows, cols, labels] = 1.0
    return SegMap(out, hard=True)


def parsing_loss(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Pixel-wise multi-class cross-entropy between soft pred and one-hot gt."""
    logp = torch.log(pred.clamp_min(1e-8))
    return -(gt * logp).sum(dim=1).mean()


def per_pixel_loss(pred: torch.Tensor, gt: torch.Tensor,
                   region_mask: torch.Tensor) -> torch.Tensor:
    """L1 over in-region pixels, normalized by the in-region pixel count."""
    if region_mask.dim() == 3:
        region_mask = region_mask.unsqueeze(1)
    n = region_mask.sum()
    if n.item() == 0:
        return pred.sum() * 0.0
    return ((pred - gt).abs() * region_mask).sum() / n


def gradient_penalty(disc_fn, real: torch.Tensor, fake: torch.Tensor) -> torch.Tensor:
    """(||grad D(x)||_2 - 1)^2 at x uniformly sampled on the real-fake line."""
    u = torch.rand(real.shape[0], *([1] * (real.dim() - 1)),
                   device=real.device, dtype=real.dtype)
    x = (u * real + (1 - u) * fake.detach()).requires_grad_(True)
    d = disc_fn(x)
    grad = torch.autograd.grad(d.sum(), x, create_graph=True)[0]
    norms = grad.flatten(1).norm(dim=1)
    return ((norms - 1.0) ** 2).mean()


def hinge_discriminator_loss(d_real: torch.Tensor, d_fake: torch.Tensor) -> torch.Tensor:
    return F.relu(1.0 - d_real).mean() + F.relu(1.0 + d_fake).mean()


def shape_generator_loss(l_parsing, l_per_pixel, d_fake,
                         weights: ShapeLossWeights = ShapeLossWeights()):
    return (weights.gamma1 * l_parsing + weights.gamma2 * l_per_pixel
            - d_fake.mean())


def shape_discriminator_loss(d_real, d_fake, gp,
                             weights: ShapeLossWeights = ShapeLossWeights()):
    return hinge_discriminator_loss(d_real, d_fake) + weights.gamma3 * gp


def shape_train_step(gen: ShapeGenerator, disc: ShapeDiscriminator,
                     batch: dict, opt_g, opt_d,
                     weights: ShapeLossWeights = ShapeLossWeights(),
                     gp_enabled: bool = True) -> dict:
    """One discriminator update followed by one generator update.

    `batch` holds NCHW tensors: masked_seg, person_rep, cloth, real_seg,
    region_mask (N1HW).
    """
    cond = torch.cat([batch["masked_seg"], batch["person_rep"], batch["cloth"]], dim=1)
    real = batch["real_seg"]

    with torch.no_grad():
        fake = shape_forward(gen, batch["masked_seg"], batch["person_rep"],
                             batch["cloth"])

    def disc_on(seg):
        return disc(torch.cat([seg, cond], dim=1))

    # Discriminator step.
    opt_d.zero_grad(set_to_none=True)
    d_real = disc_on(real)
    d_fake = disc_on(fake)
    gp = gradient_penalty(disc_on, real, fake) if gp_enabled else real.new_zeros(())
    loss_d = shape_discriminator_loss(d_real, d_fake, gp, weights)
    loss_d.backward()
    opt_d.step()

    # Generator step.
    opt_g.zero_grad(set_to_none=True)
    fake = shape_forward(gen, batch["masked_seg"], batch["person_rep"], batch["cloth"])
    l_parse = parsing_loss(fake, real)
    l_pp = per_pixel_loss(fake, real, batch["region_mask"])
    loss_g = shape_generator_loss(l_parse, l_pp, disc_on(fake), weights)
    loss_g.backward()
    opt_g.step()

    report = {
        "loss_d": loss_d.item(), "loss_g": loss_g.item(),
        "parsing": l_parse.item(), "per_pixel": l_pp.item(),
        "gp": gp.item(),
    }
    if not all(np.isfinite(v) for v in report.values()):
        raise TrainingDiverged(f"non-finite loss: {report}")
    return report
