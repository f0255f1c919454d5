"""Training loop: Adam, step-halved learning rate, cosine supervision.

Deterministic for a fixed seed (single process, no workers, seeded
shuffling); the backbone never receives gradient updates.  Checkpoints
and the loss curve are written atomically.
"""

import json
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .config import ModelConfig, TrainConfig
from .data import SceneDataset
from .loss import masked_cosine_loss
from .model import build_model


def _atomic_save(obj, path):
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    torch.save(obj, tmp)
    os.replace(tmp, path)


def _collate(batch):
    xs, normals, masks, ids = zip(*batch)
    return torch.stack(xs), torch.stack(normals), torch.stack(masks), list(ids)


def load_checkpoint(path):
    ckpt = torch.load(path, map_location="cpu", weights_only=False)
    model = build_model(ModelConfig(**ckpt["model_config"]))
    model.load_state_dict(ckpt["state_dict"])
    model.eval()
    return model, ckpt


def train(
    manifest_path,
    model_config: ModelConfig,
    train_config: TrainConfig,
    out_dir,
    split: str = None,
):
    """Train on the scenes in a pipeline manifest.

    Returns (checkpoint path, per-step loss list).  ``max_steps`` in the
    train config caps total optimizer steps for desk-scale runs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(train_config.seed)
    np.random.seed(train_config.seed % 2**32)

    dataset = SceneDataset(manifest_path, with_polar=model_config.with_polar, split=split)
    generator = torch.Generator().manual_seed(train_config.seed)
    loader = DataLoader(
        dataset,
        batch_size=train_config.batch_size,
        shuffle=True,
        generator=generator,
        num_workers=0,
        collate_fn=_collate,
    )

    model = build_model(model_config)
    model.train()
    optimizer = torch.optim.Adam(model.trainable_parameters(), lr=train_config.learning_rate)
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer, step_size=train_config.lr_step_epochs, gamma=train_config.lr_decay
    )

    losses = []
    lr_by_epoch = []
    step = 0
    done = False
    for epoch in range(train_config.epochs):
        lr_by_epoch.append(optimizer.param_groups[0]["lr"])
        for x, normal, mask, _ in loader:
            optimizer.zero_grad()
            pred = model(x)
            loss = masked_cosine_loss(pred, normal, mask, renormalize=False)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
            step += 1
            if train_config.max_steps and step >= train_config.max_steps:
                done = True
                break
        scheduler.step()
        if done:
            break

    ckpt_path = out_dir / "checkpoint.pt"
    _atomic_save(
        {
            "state_dict": model.state_dict(),
            "model_config": asdict(model_config),
            "train_config": asdict(train_config),
            "steps": step,
        },
        ckpt_path,
    )
    curve_path = out_dir / "loss_curve.json"
    tmp = curve_path.with_name(curve_path.name + f".tmp{os.getpid()}")
    tmp.write_text(json.dumps({"loss": losses, "lr_by_epoch": lr_by_epoch}, indent=0))
    os.replace(tmp, curve_path)
    return ckpt_path, losses
