"""Stage-2 appearance transfer: SPADE-conditioned generator, multi-scale
spectrally-normalized patch discriminator, perceptual / feature-matching
losses, and the joint train step that co-trains the alignment module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils import spectral_norm

from .errors import ShapeMismatch, TrainingDiverged
from .geometric_alignment import AlignmentNet, TpsWarper, tps_loss
from .shape_gan import gradient_penalty, hinge_discriminator_loss

# Encoder input: masked person (3) + warped cloth (3) + person representation (18).
APPEAR_GEN_IN_CHANNELS = 24
# SPADE conditioning: seg map (10) + warped cloth (3).
SPADE_COND_CHANNELS = 13
# Discriminator input: candidate RGB (3) + seg (10) + warped cloth (3).
APPEAR_DISC_IN_CHANNELS = 16


@dataclass(frozen=True)
class AppearanceLossWeights:
    alpha1: float = 10.0  # TPS
    alpha2: float = 10.0  # per-pixel
    alpha3: float = 10.0  # perceptual
    alpha4: float = 10.0  # feature matching
    beta: float = 10.0    # gradient penalty

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.beta) < 0:
            raise ValueError("loss weights must be non-negative")


class SpadeBlock(nn.Module):
    """Instance-normalize features, then modulate with per-pixel scale/shift
    predicted from the conditioning map (resized to the feature resolution)."""

    def __init__(self, norm_channels: int, cond_channels: int = SPADE_COND_CHANNELS,
                 hidden: int = 64):
        super().__init__()
        self.norm = nn.InstanceNorm2d(norm_channels, affine=False)
        self.shared = nn.Sequential(
            nn.Conv2d(cond_channels, hidden, 3, padding=1),
            nn.ReLU(inplace=True),
        )
        self.gamma = nn.Conv2d(hidden, norm_channels, 3, padding=1)
        self.beta = nn.Conv2d(hidden, norm_channels, 3, padding=1)

    def forward(self, features: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        normalized = self.norm(features)
        cond = F.interpolate(cond, size=features.shape[-2:], mode="nearest")
        actv = self.shared(cond)
        return normalized * (1 + self.gamma(actv)) + self.beta(actv)


def spade_normalize(features: torch.Tensor, cond: torch.Tensor,
                    block: SpadeBlock) -> torch.Tensor:
    return block(features, cond)


class SpadeResBlock(nn.Module):
    def __init__(self, channels: int, cond_channels: int = SPADE_COND_CHANNELS):
        super().__init__()
        self.spade1 = SpadeBlock(channels, cond_channels)
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.spade2 = SpadeBlock(channels, cond_channels)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x, cond):
        y = self.conv1(F.leaky_relu(self.spade1(x, cond), 0.2))
        y = self.conv2(F.leaky_relu(self.spade2(y, cond), 0.2))
        return x + y


class AppearanceGenerator(nn.Module):
    """Stride-2 conv encoder, SPADE residual decoder with nearest upsampling,
    tanh RGB head."""

    def __init__(self, depth: int = 3, base_width: int = 32, max_width: int = 256,
                 cond_channels: int = SPADE_COND_CHANNELS):
        super().__init__()
        self.depth = depth
        widths = [min(base_width * 2**i, max_width) for i in range(depth + 1)]
        enc = [nn.Conv2d(APPEAR_GEN_IN_CHANNELS, widths[0], 3, padding=1),
               nn.LeakyReLU(0.2, inplace=True)]
        for i in range(depth):
            enc += [nn.Conv2d(widths[i], widths[i + 1], 3, stride=2, padding=1),
                    nn.InstanceNorm2d(widths[i + 1]),
                    nn.LeakyReLU(0.2, inplace=True)]
        self.encoder = nn.Sequential(*enc)
        self.mid = SpadeResBlock(widths[depth], cond_channels)
        self.up_blocks = nn.ModuleList()
        self.up_convs = nn.ModuleList()
        for i in reversed(range(depth)):
            self.up_convs.append(nn.Conv2d(widths[i + 1], widths[i], 3, padding=1))
            self.up_blocks.append(SpadeResBlock(widths[i], cond_channels))
        self.head = nn.Conv2d(widths[0], 3, 3, padding=1)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        y = self.encoder(x)
        y = self.mid(y, cond)
        for conv, block in zip(self.up_convs, self.up_blocks):
            y = F.interpolate(y, scale_factor=2, mode="nearest")
            y = conv(y)
            y = block(y, cond)
        return torch.tanh(self.head(y))


def appearance_forward(gen: AppearanceGenerator, masked_person: torch.Tensor,
                       warped_cloth: torch.Tensor, person_rep: torch.Tensor,
                       seg: torch.Tensor) -> torch.Tensor:
    """Generator forward: encoder sees (I_m,person, warped cloth, P_s); SPADE
    layers are conditioned on (seg, warped cloth)."""
    for t in (warped_cloth, person_rep, seg):
        if t.shape[-2:] != masked_person.shape[-2:]:
            raise ShapeMismatch("appearance inputs must share a geometry")
    x = torch.cat([masked_person, warped_cloth, person_rep], dim=1)
    cond = torch.cat([seg, warped_cloth], dim=1)
    return gen(x, cond)


class PatchDiscriminatorSN(nn.Module):
    """SN-PatchGAN discriminator exposing intermediate features."""

    def __init__(self, in_channels: int = APPEAR_DISC_IN_CHANNELS,
                 n_layers: int = 3, base_width: int = 32, max_width: int = 256):
        super().__init__()
        blocks = []
        ch = in_channels
        width = base_width
        for i in range(n_layers):
            layers = [spectral_norm(nn.Conv2d(ch, width, 3, stride=2, padding=1))]
            if i > 0:
                layers.append(nn.InstanceNorm2d(width))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            blocks.append(nn.Sequential(*layers))
            ch = width
            width = min(width * 2, max_width)
        self.blocks = nn.ModuleList(blocks)
        self.score = spectral_norm(nn.Conv2d(ch, 1, 3, padding=1))

    def forward(self, x) -> tuple[torch.Tensor, list[torch.Tensor]]:
        feats = []
        y = x
        for block in self.blocks:
            y = block(y)
            feats.append(y)
        return self.score(y), feats


class MultiScaleDiscriminator(nn.Module):
    """S patch discriminators, scale s consuming the input downsampled 2^s."""

    def __init__(self, in_channels: int = APPEAR_DISC_IN_CHANNELS,
                 num_scales: int = 2, n_layers: int = 3, base_width: int = 32):
        super().__init__()
        self.num_scales = num_scales
        self.discs = nn.ModuleList(
            PatchDiscriminatorSN(in_channels, n_layers, base_width)
            for _ in range(num_scales)
        )

    def forward(self, x) -> tuple[list[torch.Tensor], list[list[torch.Tensor]]]:
        scores, feats = [], []
        y = x
        for s, disc in enumerate(self.discs):
            if s > 0:
                y = F.avg_pool2d(y, 2)
            score, f = disc(y)
            scores.append(score)
            feats.append(f)
        return scores, feats


def conv_weight_matrices(disc: nn.Module) -> list[np.ndarray]:
    """Effective (spectrally normalized) conv weights, 2D-reshaped."""
    mats = []
    for module in disc.modules():
        if isinstance(module, nn.Conv2d) and hasattr(module, "weight_orig"):
            w = module.weight.detach().cpu().numpy()
            mats.append(w.reshape(w.shape[0], -1))
    return mats


def perceptual_loss(a: torch.Tensor, b: torch.Tensor, backbone) -> torch.Tensor:
    """Sum over backbone stages of lambda_s * mean |phi_s(a) - phi_s(b)|,
    lambda_s = 1 / 2^s."""
    feats_a = backbone.features(a)
    feats_b = backbone.features(b)
    loss = a.new_zeros(())
    for s, (fa, fb) in enumerate(zip(feats_a, feats_b)):
        loss = loss + (fa - fb).abs().mean() / 2**s
    return loss


def feature_matching_loss(real_feats: list[list[torch.Tensor]],
                          fake_feats: list[list[torch.Tensor]]) -> torch.Tensor:
    """Mean over scales of the summed per-layer L1 between discriminator
    features; real features are treated as constants."""
    total = None
    for rf, ff in zip(real_feats, fake_feats):
        scale_loss = sum((r.detach() - f).abs().mean() for r, f in zip(rf, ff))
        total = scale_loss if total is None else total + scale_loss
    return total / len(real_feats)


def appearance_generator_loss(l_tps, l_per_pixel, l_percept, l_feat,
                              fake_scores: list[torch.Tensor],
                              weights: AppearanceLossWeights = AppearanceLossWeights()):
    adv = torch.stack([s.mean() for s in fake_scores]).mean()
    return (weights.alpha1 * l_tps + weights.alpha2 * l_per_pixel
            + weights.alpha3 * l_percept + weights.alpha4 * l_feat - adv)


def appearance_discriminator_loss(real_scores, fake_scores, gp,
                                  weights: AppearanceLossWeights = AppearanceLossWeights()):
    hinge = torch.stack([
        hinge_discriminator_loss(r, f) for r, f in zip(real_scores, fake_scores)
    ]).mean()
    return hinge + weights.beta * gp


def multiscale_gradient_penalty(disc: MultiScaleDiscriminator,
                                real: torch.Tensor, fake: torch.Tensor,
                                cond: torch.Tensor) -> torch.Tensor:
    """Gradient penalty per scale on the RGB part, averaged over scales."""
    gps = []
    r, f, c = real, fake, cond
    for s, sub in enumerate(disc.discs):
        if s > 0:
            r, f, c = (F.avg_pool2d(t, 2) for t in (r, f, c))
        cond_s = c

        def disc_on(x, sub=sub, cond_s=cond_s):
            return sub(torch.cat([x, cond_s], dim=1))[0]

        gps.append(gradient_penalty(disc_on, r, f))
    return torch.stack(gps).mean()


def appearance_train_step(gen: AppearanceGenerator, disc: MultiScaleDiscriminator,
                          align: AlignmentNet, warper: TpsWarper,
                          batch: dict, opt_g, opt_d,
                          backbone,
                          weights: AppearanceLossWeights = AppearanceLossWeights(),
                          gp_enabled: bool = True) -> dict:
    """One discriminator update, then one joint generator+alignment update.

    `batch` holds NCHW tensors: masked_person, cloth, person_rep, seg,
    real_person, worn_cloth, worn_support (N1HW).
    """
    real = batch["real_person"]

    # Discriminator step (generator and warp outputs are constants here).
    with torch.no_grad():
        theta = align(batch["person_rep"], batch["cloth"])
        warped = warper(batch["cloth"], theta)
        cond = torch.cat([batch["seg"], warped], dim=1)
        fake = appearance_forward(gen, batch["masked_person"], warped,
                                  batch["person_rep"], batch["seg"])
    opt_d.zero_grad(set_to_none=True)
    real_scores, real_feats = disc(torch.cat([real, cond], dim=1))
    fake_scores, _ = disc(torch.cat([fake, cond], dim=1))
    if gp_enabled:
        gp = multiscale_gradient_penalty(disc, real, fake, cond)
    else:
        gp = real.new_zeros(())
    loss_d = appearance_discriminator_loss(real_scores, fake_scores, gp, weights)
    loss_d.backward()
    opt_d.step()

    # Joint generator + alignment step.
    opt_g.zero_grad(set_to_none=True)
    theta = align(batch["person_rep"], batch["cloth"])
    warped = warper(batch["cloth"], theta)
    cond = torch.cat([batch["seg"], warped], dim=1)
    fake = appearance_forward(gen, batch["masked_person"], warped,
                              batch["person_rep"], batch["seg"])
    l_tps = tps_loss(warped, batch["worn_cloth"], batch["worn_support"])
    l_pp = (fake - real).abs().mean()
    l_percept = perceptual_loss(fake, real, backbone)
    real_scores, real_feats = disc(torch.cat([real, cond], dim=1))
    fake_scores, fake_feats = disc(torch.cat([fake, cond], dim=1))
    l_feat = feature_matching_loss(real_feats, fake_feats)
    loss_g = appearance_generator_loss(l_tps, l_pp, l_percept, l_feat,
                                       fake_scores, weights)
    loss_g.backward()
    opt_g.step()

    report = {
        "loss_d": loss_d.item(), "loss_g": loss_g.item(),
        "tps": l_tps.item(), "per_pixel": l_pp.item(),
        "percept": l_percept.item(), "feat": l_feat.item(), "gp": gp.item(),
    }
    if not all(np.isfinite(v) for v in report.values()):
        raise TrainingDiverged(f"non-finite loss: {report}")
    return report
