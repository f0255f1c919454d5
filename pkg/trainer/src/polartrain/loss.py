"""Masked cosine loss for normal supervision."""

import torch
import torch.nn.functional as F


def masked_cosine_loss(pred, gt, mask, renormalize: bool = True):
    """Mean of (1 - gt . pred) over foreground pixels.

    ``pred``/``gt`` are (N, 3, H, W); ``mask`` is (N, 1, H, W) in {0, 1}.
    Predictions are renormalized by default so the loss is well defined
    for raw (unnormalized) outputs too.
    """
    if renormalize:
        pred = F.normalize(pred, dim=1, eps=1e-8)
    dots = (pred * gt).sum(dim=1, keepdim=True)
    weight = mask.to(pred.dtype)
    total = weight.sum().clamp_min(1.0)
    return ((1.0 - dots) * weight).sum() / total
