"""Bit-exact file formats for the dataset pipeline.

Float images travel as portable float maps (PFM): a text header with a
"PF" (3-channel) or "Pf" (1-channel) magic, dimensions, and a scale line
whose sign encodes endianness (negative = little-endian), followed by
raw 32-bit floats in bottom-to-top row order.  Normal maps and masks use
8-bit PNG; quantized polarizer intensities use 16-bit grayscale PNG with
the ADC codes left-aligned.  All writers are deterministic and atomic
(write to a temp file, then rename).

File naming convention within a dataset directory:
``{scene_id}_{i0|i45|i90|i135|s0|s1|s2|dolp|aolp|normal|mask}.{pfm|png}``.
A dataset manifest is UTF-8 text, one JSON record per scene with fields
``scene_id``, ``split`` and ``paths`` (plane kind -> relative path).
"""

import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, StructuralError

# Refuse headers that would allocate more than this many payload bytes.
MAX_IMAGE_BYTES = 1 << 31

PLANE_KINDS = ("i0", "i45", "i90", "i135", "s0", "s1", "s2", "dolp", "aolp", "normal", "mask")

SPLITS = ("train", "val", "test")


class MalformedHeaderError(FormatError):
    """The file header is not a valid float-image header."""


class TruncatedPayloadError(FormatError):
    """The payload is shorter than the header promises."""


class DimensionOverflowError(FormatError):
    """The header declares dimensions beyond the supported size."""


def atomic_write_bytes(path, data: bytes) -> None:
    """Write ``data`` to ``path`` via a same-directory temp file and rename."""
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def plane_filename(scene_id: str, kind: str, ext: str = None) -> str:
    """Canonical file name for one plane of one scene."""
    if kind not in PLANE_KINDS:
        raise ValueError(f"unknown plane kind {kind!r}")
    if ext is None:
        ext = "png" if kind in ("normal", "mask") else "pfm"
    return f"{scene_id}_{kind}.{ext}"


# ---------------------------------------------------------------------------
# Portable float maps


def float_image_bytes(image: np.ndarray) -> bytes:
    """Encode a (H, W) or (H, W, 3) float image as little-endian PFM bytes."""
    image = np.asarray(image)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    if image.ndim == 2:
        magic = b"Pf"
    elif image.ndim == 3 and image.shape[2] == 3:
        magic = b"PF"
    else:
        raise StructuralError(f"float images must have 1 or 3 channels, got shape {image.shape}")
    if image.size == 0:
        raise StructuralError("cannot write an empty image")
    if not np.all(np.isfinite(image)):
        raise StructuralError("cannot write non-finite values")
    h, w = image.shape[:2]
    header = magic + b"\n" + f"{w} {h}\n".encode("ascii") + b"-1.0\n"
    payload = np.flipud(image).astype("<f4").tobytes()
    return header + payload


def write_float_image(path, image: np.ndarray) -> None:
    """Write a float image as PFM; float32 data round-trips bit-exactly."""
    atomic_write_bytes(path, float_image_bytes(image))


def _read_header_token(buf: io.BytesIO) -> bytes:
    # Tokens are separated by single whitespace bytes (canonically '\n').
    token = b""
    while True:
        c = buf.read(1)
        if c == b"":
            raise MalformedHeaderError("unexpected end of file inside header")
        if c in b" \t\r\n":
            if token:
                return token
            continue
        token += c
        if len(token) > 32:
            raise MalformedHeaderError("header token too long")


def float_image_from_bytes(data: bytes) -> np.ndarray:
    """Decode PFM bytes; inverse of :func:`float_image_bytes`."""
    buf = io.BytesIO(data)
    magic = buf.read(2)
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise MalformedHeaderError(f"bad magic {magic!r}, expected 'PF' or 'Pf'")
    try:
        w = int(_read_header_token(buf))
        h = int(_read_header_token(buf))
        scale = float(_read_header_token(buf))
    except ValueError as exc:
        raise MalformedHeaderError(f"unparseable header field: {exc}") from exc
    if w <= 0 or h <= 0:
        raise MalformedHeaderError(f"non-positive dimensions {w}x{h}")
    if scale == 0:
        raise MalformedHeaderError("scale must be nonzero")
    n_bytes = w * h * channels * 4
    if n_bytes > MAX_IMAGE_BYTES:
        raise DimensionOverflowError(f"{w}x{h}x{channels} exceeds the supported image size")
    payload = buf.read(n_bytes)
    if len(payload) < n_bytes:
        raise TruncatedPayloadError(
            f"payload holds {len(payload)} bytes, header promises {n_bytes}"
        )
    if buf.read(1) != b"":
        raise FormatError("trailing bytes after payload")
    dtype = "<f4" if scale < 0 else ">f4"
    img = np.frombuffer(payload, dtype=dtype).astype(np.float32, copy=False)
    img = img.reshape((h, w, channels)) if channels == 3 else img.reshape((h, w))
    return np.flipud(img).copy()


def read_float_image(path) -> np.ndarray:
    return float_image_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Normal maps and masks (8-bit PNG)


def _round_half_away_nonneg(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def encode_normal_image(normals: np.ndarray, mask=None) -> np.ndarray:
    """8-bit RGB encoding: channel = round((n + 1) / 2 * 255).

    Zero background vectors land on mid-gray (128); when a mask is given,
    background pixels are forced there regardless of stored values.
    """
    normals = np.asarray(normals)
    if normals.ndim != 3 or normals.shape[2] != 3:
        raise StructuralError(f"expected (H, W, 3) normals, got shape {normals.shape}")
    n = np.clip(normals, -1.0, 1.0)
    codes = _round_half_away_nonneg((n + 1.0) * 0.5 * 255.0).astype(np.uint8)
    if mask is not None:
        mask = np.asarray(mask).astype(bool)
        codes[~mask] = 128
    return codes


def decode_normal_image(rgb: np.ndarray, mask) -> np.ndarray:
    """Inverse of :func:`encode_normal_image`; foreground renormalized to
    unit length, background set to the zero vector."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise StructuralError(f"expected (H, W, 3) image, got shape {rgb.shape}")
    mask = np.asarray(mask).astype(bool)
    n = rgb.astype(np.float32) / 255.0 * 2.0 - 1.0
    norm = np.linalg.norm(n, axis=2, keepdims=True)
    n = n / np.maximum(norm, 1e-6)
    n[~mask] = 0.0
    return n


def _png_bytes(img: Image.Image) -> bytes:
    out = io.BytesIO()
    img.save(out, format="PNG")
    return out.getvalue()


def write_normal_png(path, normals: np.ndarray, mask=None) -> None:
    rgb = encode_normal_image(normals, mask)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(rgb, mode="RGB")))


def read_normal_png(path, mask) -> np.ndarray:
    rgb = np.asarray(Image.open(path).convert("RGB"))
    return decode_normal_image(rgb, mask)


def write_mask_png(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask).astype(bool)
    arr = np.where(mask, 255, 0).astype(np.uint8)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(arr, mode="L")))


def read_mask_png(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("L"))
    return arr > 127


# ---------------------------------------------------------------------------
# Quantized polarizer intensities (16-bit grayscale PNG, codes left-aligned)


def write_code_png(path, plane: np.ndarray, bits: int = 12) -> None:
    """Store a [0, 1] plane as its ``bits``-bit ADC codes, left-aligned in
    a 16-bit grayscale PNG so standard viewers show sensible brightness."""
    if not 1 <= bits <= 16:
        raise ValueError(f"bits must be in [1, 16], got {bits}")
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise StructuralError(f"code images are single-channel, got shape {plane.shape}")
    levels = (1 << bits) - 1
    v = np.clip(plane.astype(np.float64), 0.0, 1.0)
    codes = _round_half_away_nonneg(v * levels).astype(np.uint16)
    aligned = codes << (16 - bits)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(aligned)))


def read_code_png(path, bits: int = 12) -> np.ndarray:
    """Recover the [0, 1] grid values written by :func:`write_code_png`."""
    arr = np.asarray(Image.open(path)).astype(np.uint16)
    codes = arr >> (16 - bits)
    levels = (1 << bits) - 1
    return (codes.astype(np.float64) / levels).astype(np.float32)


# ---------------------------------------------------------------------------
# Colorizations


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    # Vectorized standard HSV -> RGB; h, s, v in [0, 1].
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    rgb = np.zeros(h.shape + (3,), dtype=np.float64)
    lut = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]
    for idx, (r_, g_, b_) in enumerate(lut):
        sel = i == idx
        rgb[sel, 0] = np.broadcast_to(r_, h.shape)[sel]
        rgb[sel, 1] = np.broadcast_to(g_, h.shape)[sel]
        rgb[sel, 2] = np.broadcast_to(b_, h.shape)[sel]
    return rgb


def colorize_aolp(aolp: np.ndarray, dolp: np.ndarray = None) -> np.ndarray:
    """Cyclic hue-wheel rendering of AoLP, optionally value-modulated by
    DoLP (unpolarized pixels go dark)."""
    aolp = np.asarray(aolp)
    if aolp.ndim == 3:
        aolp = aolp[:, :, 0]
    hue = (aolp + 0.5 * np.pi) / np.pi
    if dolp is None:
        value = np.ones_like(hue)
    else:
        dolp = np.asarray(dolp)
        if dolp.ndim == 3:
            dolp = dolp[:, :, 0]
        value = np.clip(dolp, 0.0, 1.0)
    rgb = _hsv_to_rgb(hue, np.ones_like(hue), value)
    return _round_half_away_nonneg(rgb * 255.0).astype(np.uint8)


def colorize_dolp(dolp: np.ndarray) -> np.ndarray:
    """Linear grayscale rendering of DoLP: 0 -> black, 1 -> white."""
    dolp = np.asarray(dolp)
    if dolp.ndim == 3:
        dolp = dolp[:, :, 0]
    return _round_half_away_nonneg(np.clip(dolp, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(path, array: np.ndarray) -> None:
    """Write an 8-bit grayscale or RGB array as PNG."""
    arr = np.asarray(array)
    mode = "L" if arr.ndim == 2 else "RGB"
    atomic_write_bytes(path, _png_bytes(Image.fromarray(arr, mode=mode)))


# ---------------------------------------------------------------------------
# Dataset manifests


@dataclass(frozen=True)
class SceneRecord:
    """One dataset scene: id, split, and relative paths per plane kind."""

    scene_id: str
    split: str
    paths: dict

    def __post_init__(self):
        if self.split not in SPLITS:
            raise FormatError(f"split must be one of {SPLITS}, got {self.split!r}")
        for kind in self.paths:
            if kind not in PLANE_KINDS:
                raise FormatError(f"unknown plane kind {kind!r} in record {self.scene_id!r}")


def manifest_to_text(records) -> str:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {"scene_id": r.scene_id, "split": r.split, "paths": r.paths},
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"


def manifest_from_text(text: str):
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            records.append(
                SceneRecord(scene_id=rec["scene_id"], split=rec["split"], paths=rec["paths"])
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"manifest line {lineno}: {exc}") from exc
    return records


def write_manifest(path, records) -> None:
    atomic_write_bytes(path, manifest_to_text(records).encode("utf-8"))


def read_manifest(path):
    return manifest_from_text(Path(path).read_text(encoding="utf-8"))


def resolve_plane(manifest_path, record: SceneRecord, kind: str) -> Path:
    """Absolute path of one plane file; raises if the record lacks it."""
    if kind not in record.paths:
        raise FormatError(f"scene {record.scene_id!r} has no {kind!r} plane")
    return Path(manifest_path).parent / record.paths[kind]
