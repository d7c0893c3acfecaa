"""End-to-end geometric alignment: correlation matching of person/garment
features, regression of thin-plate-spline control points, and differentiable
TPS warping of the garment image.

Coordinates are normalized to [-1, 1] with align_corners convention
(-1 and +1 are the centers of the border pixels); points are (x, y) with x
along columns, matching torch.nn.functional.grid_sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .core_data import RGBImage
from .errors import ShapeMismatch, SingularTps

TPS_EPS = 1e-6


def control_grid(grid_size: int) -> np.ndarray:
    """Regular grid_size x grid_size control points in [-1,1]^2, row-major,
    as (x, y) pairs."""
    lin = np.linspace(-1.0, 1.0, grid_size)
    ys, xs = np.meshgrid(lin, lin, indexing="ij")
    return np.stack([xs.ravel(), ys.ravel()], axis=1)


@dataclass(frozen=True)
class TpsParams:
    """Target positions of the regular control grid, in normalized coords."""

    grid_size: int
    offsets: np.ndarray  # (G^2, 2) of (x, y)

    def __post_init__(self):
        if self.grid_size < 3:
            raise ValueError("grid_size must be >= 3")
        if self.offsets.shape != (self.grid_size**2, 2):
            raise ShapeMismatch(
                f"offsets shape {self.offsets.shape} != ({self.grid_size**2}, 2)"
            )
        if not np.all(np.isfinite(self.offsets)):
            raise ValueError("non-finite TPS offsets")

    @staticmethod
    def identity(grid_size: int = 5) -> "TpsParams":
        return TpsParams(grid_size, control_grid(grid_size))

    def to_json(self) -> str:
        return json.dumps([float(v) for v in self.offsets.ravel()])

    @staticmethod
    def from_json(text: str, grid_size: int = 5) -> "TpsParams":
        vals = np.asarray(json.loads(text), dtype=np.float64)
        return TpsParams(grid_size, vals.reshape(grid_size**2, 2))


def _tps_u(r2):
    """Radial kernel U(d) = d^2 log(d^2 + eps), on squared distances."""
    if isinstance(r2, torch.Tensor):
        return r2 * torch.log(r2 + TPS_EPS)
    return r2 * np.log(r2 + TPS_EPS)


def _system_matrix(src: np.ndarray) -> np.ndarray:
    n = src.shape[0]
    d2 = ((src[:, None, :] - src[None, :, :]) ** 2).sum(-1)
    K = _tps_u(d2)
    P = np.concatenate([np.ones((n, 1)), src], axis=1)
    L = np.zeros((n + 3, n + 3))
    L[:n, :n] = K
    L[:n, n:] = P
    L[n:, :n] = P.T
    return L


@dataclass(frozen=True)
class TpsCoeffs:
    """Warp coefficients: f(p) = affine^T [1,p] + sum_i w_i U(|p - src_i|)."""

    src: np.ndarray      # (n, 2)
    weights: np.ndarray  # (n, 2)
    affine: np.ndarray   # (3, 2), rows = (const, x, y)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        d2 = ((pts[:, None, :] - self.src[None, :, :]) ** 2).sum(-1)
        basis = np.concatenate(
            [_tps_u(d2), np.ones((pts.shape[0], 1)), pts], axis=1
        )
        coef = np.concatenate([self.weights, self.affine], axis=0)
        return basis @ coef


def solve_tps_kernel(control_src: np.ndarray, control_dst: np.ndarray) -> TpsCoeffs:
    """Solve for the TPS interpolant mapping control_src onto control_dst,
    with side conditions sum(w)=0 and sum(w*src)=0."""
    src = np.asarray(control_src, dtype=np.float64)
    dst = np.asarray(control_dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ShapeMismatch(f"control shapes {src.shape} vs {dst.shape}")
    n = src.shape[0]
    L = _system_matrix(src)
    rhs = np.concatenate([dst, np.zeros((3, 2))], axis=0)
    try:
        sol = np.linalg.solve(L, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularTps(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularTps("non-finite TPS solution")
    return TpsCoeffs(src=src, weights=sol[:n], affine=sol[n:])


class TpsWarper(nn.Module):
    """Differentiable backward warp: output(p) = input(f(p)) where f maps the
    regular control grid onto theta's target positions."""

    def __init__(self, grid_size: int = 5):
        super().__init__()
        self.grid_size = grid_size
        src = control_grid(grid_size)
        L = _system_matrix(src)
        try:
            L_inv = np.linalg.inv(L)
        except np.linalg.LinAlgError as exc:
            raise SingularTps(str(exc)) from exc
        self.register_buffer("src", torch.from_numpy(src))
        self.register_buffer("L_inv", torch.from_numpy(L_inv))
        self._basis_cache: dict[tuple[int, int], torch.Tensor] = {}

    def _pixel_basis(self, h: int, w: int, device) -> torch.Tensor:
        key = (h, w)
        basis = self._basis_cache.get(key)
        if basis is None:
            ys = torch.linspace(-1.0, 1.0, h, dtype=torch.float64)
            xs = torch.linspace(-1.0, 1.0, w, dtype=torch.float64)
            gy, gx = torch.meshgrid(ys, xs, indexing="ij")
            pts = torch.stack([gx.reshape(-1), gy.reshape(-1)], dim=1)
            d2 = ((pts[:, None, :] - self.src[None, :, :]) ** 2).sum(-1)
            basis = torch.cat(
                [_tps_u(d2), torch.ones(pts.shape[0], 1, dtype=torch.float64), pts],
                dim=1,
            )
            self._basis_cache[key] = basis
        return basis.to(device)

    def sampling_grid(self, theta: torch.Tensor, h: int, w: int) -> torch.Tensor:
        """theta: (B, G^2, 2) target positions -> (B, h, w, 2) sample grid."""
        b = theta.shape[0]
        rhs = torch.cat(
            [theta.double(), torch.zeros(b, 3, 2, dtype=torch.float64,
                                         device=theta.device)], dim=1)
        coeffs = self.L_inv.unsqueeze(0) @ rhs
        basis = self._pixel_basis(h, w, theta.device)
        grid = basis.unsqueeze(0) @ coeffs
        return grid.reshape(b, h, w, 2)

    def forward(self, img: torch.Tensor, theta: torch.Tensor) -> torch.Tensor:
        grid = self.sampling_grid(theta, img.shape[-2], img.shape[-1])
        return F.grid_sample(img, grid.to(img.dtype), mode="bilinear",
                             padding_mode="border", align_corners=True)


def tps_warp(cloth: RGBImage, theta: TpsParams) -> RGBImage:
    """Numpy-level warp of a single image by TPS parameters."""
    warper = TpsWarper(theta.grid_size)
    img = torch.from_numpy(cloth.data).double().permute(2, 0, 1).unsqueeze(0)
    th = torch.from_numpy(theta.offsets).unsqueeze(0)
    out = warper(img, th)[0].permute(1, 2, 0).numpy()
    return RGBImage(np.clip(out, -1.0, 1.0).astype(np.float32))


def correlation_match(feat_a: torch.Tensor, feat_b: torch.Tensor) -> torch.Tensor:
    """out[b, i*w + j, r, c] = <feat_a[b, :, r, c], feat_b[b, :, i, j]>."""
    if feat_a.shape != feat_b.shape:
        raise ShapeMismatch(f"{tuple(feat_a.shape)} vs {tuple(feat_b.shape)}")
    b, c, h, w = feat_a.shape
    corr = torch.einsum("bcrs,bcij->bijrs", feat_a, feat_b)
    return corr.reshape(b, h * w, h, w)


class FeatureTower(nn.Module):
    """Convolutional tower: n_down stride-2 blocks, instance norm, leaky ReLU."""

    def __init__(self, in_channels: int, width: int = 32, n_down: int = 4,
                 out_channels: int = 64):
        super().__init__()
        layers = []
        ch = in_channels
        for i in range(n_down):
            nxt = min(width * 2**i, out_channels)
            layers += [nn.Conv2d(ch, nxt, 3, stride=2, padding=1),
                       nn.InstanceNorm2d(nxt),
                       nn.LeakyReLU(0.2, inplace=True)]
            ch = nxt
        layers.append(nn.Conv2d(ch, out_channels, 3, padding=1))
        self.body = nn.Sequential(*layers)

    def forward(self, x):
        return self.body(x)


class AlignmentNet(nn.Module):
    """Extracts features of the person representation and the garment,
    correlates them, and regresses TPS control-point targets."""

    def __init__(self, geometry: tuple[int, int], grid_size: int = 5,
                 n_down: int = 4, feat_channels: int = 64):
        super().__init__()
        self.grid_size = grid_size
        h, w = geometry
        fh, fw = h // 2**n_down, w // 2**n_down
        if fh < 1 or fw < 1:
            raise ShapeMismatch(f"geometry {h}x{w} too small for {n_down} downsamples")
        self.person_tower = FeatureTower(18, n_down=n_down, out_channels=feat_channels)
        self.cloth_tower = FeatureTower(3, n_down=n_down, out_channels=feat_channels)
        self.reduce = nn.Sequential(
            nn.Conv2d(fh * fw, 128, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(128, 64, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        )
        self.regress = nn.Linear(64 * fh * fw, 2 * grid_size**2)
        # Start near the identity warp: bias = grid positions, tiny weights.
        with torch.no_grad():
            nn.init.normal_(self.regress.weight, std=1e-4)
            self.regress.bias.copy_(
                torch.from_numpy(control_grid(grid_size).ravel()).float()
            )

    def forward(self, person_rep: torch.Tensor, cloth: torch.Tensor) -> torch.Tensor:
        fa = F.normalize(self.person_tower(person_rep), dim=1)
        fb = F.normalize(self.cloth_tower(cloth), dim=1)
        corr = correlation_match(fa, fb)
        y = self.reduce(corr).flatten(1)
        theta = self.regress(y)
        return theta.reshape(-1, self.grid_size**2, 2)


def regress_theta(net: AlignmentNet, person_rep: torch.Tensor,
                  cloth: torch.Tensor) -> torch.Tensor:
    return net(person_rep, cloth)


def tps_loss(warped: torch.Tensor, worn: torch.Tensor,
             support: torch.Tensor | None = None) -> torch.Tensor:
    """Mean absolute difference over the worn-garment support."""
    if warped.shape != worn.shape:
        raise ShapeMismatch(f"{tuple(warped.shape)} vs {tuple(worn.shape)}")
    if support is None:
        return (warped - worn).abs().mean()
    if support.dim() == 3:
        support = support.unsqueeze(1)
    n = support.sum() * warped.shape[1]
    if n.item() == 0:
        return warped.sum() * 0.0
    return ((warped - worn).abs() * support).sum() / n
