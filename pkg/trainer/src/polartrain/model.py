"""UNet encoder-decoder fused with a frozen multi-stage backbone.

The UNet branch consumes all five input channels (RGB + DoLP + AoLP,
or RGB only under the ``with_polar`` ablation); the backbone branch
consumes only the RGB channels and stays frozen, contributing feature
maps at four hierarchical stages.  Each decoder level bilinearly
resizes the matching backbone feature map to its resolution and
concatenates it with the skip connection before the convolutional
block.  The head emits per-pixel 3-vectors normalized to unit length.
"""

import torch
import torch.nn.functional as F
from torch import nn

from .config import ConfigurationError, ModelConfig

_DOWN_FACTOR = 16  # four 2x downsampling stages


class ConvBlock(nn.Module):
    def __init__(self, in_ch, out_ch):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, 3, padding=1),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class FrozenBackbone(nn.Module):
    """Four-stage convolutional feature extractor, frozen.

    Random initialization by default so everything runs offline; a
    pretrained torchvision trunk can be swapped in where available.
    Stage k outputs stride-2^(k+1) features.
    """

    def __init__(self, widths, pretrained: bool = False):
        super().__init__()
        if pretrained:
            raise ConfigurationError(
                "pretrained backbone weights are not bundled; provide them via "
                "torchvision and adapt FrozenBackbone.load_pretrained"
            )
        stages = []
        in_ch = 3
        for w in widths:
            stages.append(
                nn.Sequential(
                    nn.Conv2d(in_ch, w, 3, stride=2, padding=1),
                    nn.GELU(),
                    nn.Conv2d(w, w, 3, padding=1),
                    nn.GELU(),
                )
            )
            in_ch = w
        self.stages = nn.ModuleList(stages)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def train(self, mode: bool = True):
        # stays in eval mode regardless of the surrounding module
        return super().train(False)

    def forward(self, rgb):
        feats = []
        x = rgb
        with torch.no_grad():
            for stage in self.stages:
                x = stage(x)
                feats.append(x)
        return feats


class FusionNormalNet(nn.Module):
    """Normal-map regressor: padded UNet with four fusion stages."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        w = config.unet_channel_widths
        in_ch = config.in_channels if config.with_polar else 3

        self.enc = nn.ModuleList(
            [
                ConvBlock(in_ch, w[0]),
                ConvBlock(w[0], w[1]),
                ConvBlock(w[1], w[2]),
                ConvBlock(w[2], w[3]),
            ]
        )
        self.pool = nn.MaxPool2d(2)
        self.bottleneck = ConvBlock(w[3], w[3] * 2)

        if config.with_backbone:
            self.backbone = FrozenBackbone(
                config.backbone_channel_widths, config.backbone_pretrained
            )
            bb = config.backbone_channel_widths
        else:
            self.backbone = None
            bb = (0, 0, 0, 0)

        self.dec = nn.ModuleList(
            [
                ConvBlock(w[3] * 2 + w[3] + bb[3], w[3]),
                ConvBlock(w[3] + w[2] + bb[2], w[2]),
                ConvBlock(w[2] + w[1] + bb[1], w[1]),
                ConvBlock(w[1] + w[0] + bb[0], w[0]),
            ]
        )
        self.head = nn.Conv2d(w[0], 3, 1)

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.requires_grad]

    def forward(self, x):
        if x.dim() != 4 or x.size(1) != self.config.in_channels:
            raise ConfigurationError(
                f"expected (N, {self.config.in_channels}, H, W) input, got {tuple(x.shape)}"
            )
        if not self.config.with_polar:
            x = x[:, :3]
        rgb = x[:, :3]

        h, w = x.shape[2:]
        pad_h = (-h) % _DOWN_FACTOR
        pad_w = (-w) % _DOWN_FACTOR
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
            rgb = F.pad(rgb, (0, pad_w, 0, pad_h), mode="reflect")

        skips = []
        cur = x
        for enc in self.enc:
            cur = enc(cur)
            skips.append(cur)
            cur = self.pool(cur)
        cur = self.bottleneck(cur)

        feats = self.backbone(rgb) if self.backbone is not None else None

        for level, dec in enumerate(self.dec):
            skip = skips[-1 - level]
            cur = F.interpolate(cur, size=skip.shape[2:], mode="bilinear", align_corners=False)
            parts = [cur, skip]
            if feats is not None:
                # spatial alignment: resize the stage feature to this level
                f = feats[-1 - level]
                parts.append(
                    F.interpolate(f, size=skip.shape[2:], mode="bilinear", align_corners=False)
                )
            cur = dec(torch.cat(parts, dim=1))

        out = self.head(cur)
        if pad_h or pad_w:
            out = out[:, :, :h, :w]
        return F.normalize(out, dim=1, eps=1e-8)


def build_model(config: ModelConfig) -> FusionNormalNet:
    return FusionNormalNet(config)
