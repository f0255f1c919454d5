"""Inference: load a checkpoint, predict normal maps for every scene in
a manifest, write them in the pipeline's float-image format so the
``polarshape eval`` command can score them directly."""

from pathlib import Path

import numpy as np
import torch

from .data import SceneDataset, write_pfm
from .train import load_checkpoint


def infer(checkpoint_path, manifest_path, out_dir, split: str = None):
    """Returns the list of written normal-map paths."""
    model, ckpt = load_checkpoint(checkpoint_path)
    with_polar = bool(ckpt["model_config"].get("with_polar", True))
    dataset = SceneDataset(manifest_path, with_polar=with_polar, split=split)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    with torch.no_grad():
        for idx in range(len(dataset)):
            x, _, _, scene_id = dataset[idx]
            pred = model(x[None])[0].numpy()
            normal = np.moveaxis(pred, 0, -1).astype(np.float32)
            path = out_dir / f"{scene_id}_normal.pfm"
            write_pfm(path, normal)
            written.append(path)
    return written
