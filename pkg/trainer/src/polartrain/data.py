"""Readers for the dataset formats the pipeline CLI emits, plus the
input normalization used by the network.

The formats are consumed as documented: PFM float images (text header,
scale-line sign encodes endianness, bottom-to-top rows), 8-bit PNG
masks, and a JSON-lines manifest with ``scene_id``, ``split`` and
``paths`` fields.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .config import DataError

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def read_pfm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, rest = data[:2], data[2:]
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise DataError(f"{path}: not a float image")
    tokens = []
    pos = 0
    while len(tokens) < 3:
        while pos < len(rest) and rest[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(rest) and not rest[pos : pos + 1].isspace():
            pos += 1
        tokens.append(rest[start:pos])
    pos += 1  # single whitespace after the scale line
    w, h, scale = int(tokens[0]), int(tokens[1]), float(tokens[2])
    dtype = "<f4" if scale < 0 else ">f4"
    payload = rest[pos : pos + w * h * channels * 4]
    if len(payload) != w * h * channels * 4:
        raise DataError(f"{path}: truncated payload")
    img = np.frombuffer(payload, dtype=dtype).astype(np.float32)
    img = img.reshape((h, w, channels)) if channels == 3 else img.reshape((h, w))
    return np.flipud(img).copy()


def write_pfm(path, image: np.ndarray) -> None:
    image = np.asarray(image, dtype=np.float32)
    magic = b"PF" if image.ndim == 3 else b"Pf"
    h, w = image.shape[:2]
    header = magic + b"\n" + f"{w} {h}\n".encode() + b"-1.0\n"
    Path(path).write_bytes(header + np.flipud(image).astype("<f4").tobytes())


def read_mask_png(path) -> np.ndarray:
    try:
        arr = np.asarray(Image.open(path).convert("L"))
    except OSError as exc:
        raise DataError(f"{path}: unreadable mask PNG ({exc})") from exc
    return arr > 127


@dataclass(frozen=True)
class SceneFiles:
    scene_id: str
    split: str
    paths: dict


def read_manifest(path):
    path = Path(path)
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        records.append(SceneFiles(rec["scene_id"], rec["split"], rec["paths"]))
    if not records:
        raise DataError(f"{path}: manifest lists no scenes")
    return records


def normalize_inputs(s0: np.ndarray, dolp: np.ndarray, aolp: np.ndarray) -> np.ndarray:
    """Stack the five input channels: RGB standardized with ImageNet
    statistics (gray intensity replicated), DoLP and AoLP mapped to
    [-1, 1].  Returns (5, H, W) float32."""
    if s0.ndim == 2:
        rgb = np.repeat(s0[None, :, :], 3, axis=0)
    else:
        rgb = np.moveaxis(s0, -1, 0)
        if rgb.shape[0] == 1:
            rgb = np.repeat(rgb, 3, axis=0)
    mean = np.asarray(IMAGENET_MEAN, dtype=np.float32)[:, None, None]
    std = np.asarray(IMAGENET_STD, dtype=np.float32)[:, None, None]
    rgb = (rgb.astype(np.float32) - mean) / std
    dolp_m = (2.0 * dolp.astype(np.float32) - 1.0)[None]
    aolp_m = (aolp.astype(np.float32) / np.float32(np.pi / 2))[None]
    return np.concatenate([rgb, dolp_m, aolp_m], axis=0)


class SceneDataset(torch.utils.data.Dataset):
    """(input, normal, mask) triples read from a pipeline manifest.

    Requires s0/normal/mask planes always, and dolp/aolp when the model
    consumes polarization cues.  Desk-scale datasets are small, so all
    tensors are cached in memory by default; pass ``cache=False`` to
    stream from disk instead.
    """

    REQUIRED = ("s0", "normal", "mask")
    POLAR = ("dolp", "aolp")

    def __init__(
        self, manifest_path, with_polar: bool = True, split: str = None, cache: bool = True
    ):
        self.manifest_path = Path(manifest_path)
        self.with_polar = with_polar
        records = read_manifest(self.manifest_path)
        if split is not None:
            records = [r for r in records if r.split == split]
            if not records:
                raise DataError(f"no scenes with split {split!r} in {manifest_path}")
        self.records = sorted(records, key=lambda r: r.scene_id)
        needed = self.REQUIRED + (self.POLAR if with_polar else ())
        for rec in self.records:
            missing = [k for k in needed if k not in rec.paths]
            if missing:
                raise DataError(
                    f"scene {rec.scene_id!r} lacks required plane(s) {missing}"
                )
        self._cache = [None] * len(self.records) if cache else None

    def __len__(self):
        return len(self.records)

    def _plane(self, rec, kind):
        return self.manifest_path.parent / rec.paths[kind]

    def _load(self, idx):
        rec = self.records[idx]
        s0 = read_pfm(self._plane(rec, "s0"))
        if self.with_polar:
            dolp = read_pfm(self._plane(rec, "dolp"))
            aolp = read_pfm(self._plane(rec, "aolp"))
        else:
            dolp = np.full(s0.shape[:2], 0.5, dtype=np.float32)
            aolp = np.zeros(s0.shape[:2], dtype=np.float32)
        x = normalize_inputs(s0, dolp, aolp)
        normal = np.moveaxis(read_pfm(self._plane(rec, "normal")), -1, 0)
        mask = read_mask_png(self._plane(rec, "mask"))
        return (
            torch.from_numpy(x),
            torch.from_numpy(normal.astype(np.float32)),
            torch.from_numpy(mask[None].astype(np.float32)),
            rec.scene_id,
        )

    def __getitem__(self, idx):
        if self._cache is None:
            return self._load(idx)
        if self._cache[idx] is None:
            self._cache[idx] = self._load(idx)
        return self._cache[idx]
