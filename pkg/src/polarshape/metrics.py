"""Masked cosine loss and angular-error evaluation for normal maps.

Normal maps are (H, W, 3) arrays of camera-space unit vectors with +z
toward the camera; background pixels are zero vectors and every metric
is gated by a boolean foreground mask.  Reported numbers are the mean
angular error in degrees and the fraction of pixels below the 11.25 and
22.50 degree thresholds.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, StructuralError

DEFAULT_THRESHOLDS_DEG = (11.25, 22.50)

# Angular-error sentinel for pixels where either normal is (near) zero.
ERROR_SENTINEL = np.nan

_NORM_EPS = 1e-6


def _check_normal_map(n, name: str) -> np.ndarray:
    n = np.asarray(n)
    if n.ndim != 3 or n.shape[2] != 3:
        raise StructuralError(f"{name}: expected (H, W, 3) array, got shape {n.shape}")
    if not np.all(np.isfinite(n)):
        raise StructuralError(f"{name}: non-finite values present")
    return n


def _check_pair(pred, gt):
    pred = _check_normal_map(pred, "pred")
    gt = _check_normal_map(gt, "gt")
    if pred.shape != gt.shape:
        raise StructuralError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    return pred, gt


def _check_mask(mask, shape):
    mask = np.asarray(mask)
    if mask.shape != shape[:2]:
        raise StructuralError(f"mask shape {mask.shape} does not match image {shape[:2]}")
    mask = mask.astype(bool)
    if not mask.any():
        raise EvaluationError("foreground mask is empty")
    return mask


def _unit(n: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(n, axis=2, keepdims=True)
    return n / np.maximum(norm, _NORM_EPS)


def cosine_loss(pred, gt, mask) -> float:
    """Mean of (1 - n_gt . n_pred) over the foreground mask; range [0, 2].

    Predictions are defensively renormalized before the dot product;
    ground truth must already be unit length on the mask (tolerance 1e-3).
    """
    pred, gt = _check_pair(pred, gt)
    mask = _check_mask(mask, pred.shape)
    gt_norm = np.linalg.norm(gt[mask], axis=1)
    if np.any(np.abs(gt_norm - 1.0) > 1e-3):
        raise StructuralError("gt normals are not unit length on the mask")
    dots = np.sum(_unit(pred)[mask] * gt[mask], axis=1)
    return float(np.mean(1.0 - dots))


def angular_error_map(pred, gt) -> np.ndarray:
    """Per-pixel angle in degrees between the two normal maps.

    Both inputs are renormalized; pixels where either vector has a
    near-zero norm get the NaN sentinel and are excluded from any
    aggregation downstream.
    """
    pred, gt = _check_pair(pred, gt)
    pred_norm = np.linalg.norm(pred, axis=2)
    gt_norm = np.linalg.norm(gt, axis=2)
    degenerate = (pred_norm < _NORM_EPS) | (gt_norm < _NORM_EPS)
    dots = np.sum(_unit(pred) * _unit(gt), axis=2)
    err = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
    err = err.astype(np.float64)
    err[degenerate] = ERROR_SENTINEL
    return err


@dataclass(frozen=True)
class EvalReport:
    """Angular-error summary; ``accuracies`` parallels ``thresholds_deg``."""

    mae_deg: float
    thresholds_deg: tuple
    accuracies: tuple
    n_pixels: int
    image_id: str = ""
    per_image: tuple = ()

    def accuracy_at(self, threshold_deg: float) -> float:
        for t, a in zip(self.thresholds_deg, self.accuracies):
            if math.isclose(t, threshold_deg):
                return a
        raise KeyError(f"no accuracy recorded at {threshold_deg} degrees")

    @property
    def acc_11_25(self) -> float:
        return self.accuracy_at(11.25)

    @property
    def acc_22_50(self) -> float:
        return self.accuracy_at(22.50)


def evaluate(pred, gt, mask, thresholds_deg=DEFAULT_THRESHOLDS_DEG, image_id: str = "") -> EvalReport:
    """Score one image: MAE over the mask plus below-threshold fractions."""
    thresholds = tuple(float(t) for t in thresholds_deg)
    if not thresholds or any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise EvaluationError(f"thresholds must be strictly increasing, got {thresholds}")
    pred, gt = _check_pair(pred, gt)
    mask = _check_mask(mask, pred.shape)
    err = angular_error_map(pred, gt)[mask]
    err = err[~np.isnan(err)]
    if err.size == 0:
        raise EvaluationError("no valid (non-degenerate) pixels under the mask")
    accs = tuple(float(np.mean(err < t)) for t in thresholds)
    return EvalReport(
        mae_deg=float(np.mean(err)),
        thresholds_deg=thresholds,
        accuracies=accs,
        n_pixels=int(err.size),
        image_id=image_id,
    )


def aggregate(reports, pixel_weighted: bool = False) -> EvalReport:
    """Combine per-image reports into a dataset-level summary.

    Default is the image-mean convention (every image counts equally);
    ``pixel_weighted=True`` weights images by their masked pixel counts.
    """
    reports = list(reports)
    if not reports:
        raise EvaluationError("cannot aggregate an empty report list")
    thresholds = reports[0].thresholds_deg
    for r in reports:
        if r.thresholds_deg != thresholds:
            raise EvaluationError("reports use inconsistent thresholds")
    if pixel_weighted:
        weights = np.asarray([r.n_pixels for r in reports], dtype=np.float64)
    else:
        weights = np.ones(len(reports), dtype=np.float64)
    weights = weights / weights.sum()
    mae = float(np.sum(weights * np.asarray([r.mae_deg for r in reports])))
    accs = tuple(
        float(np.sum(weights * np.asarray([r.accuracies[i] for r in reports])))
        for i in range(len(thresholds))
    )
    return EvalReport(
        mae_deg=mae,
        thresholds_deg=thresholds,
        accuracies=accs,
        n_pixels=int(sum(r.n_pixels for r in reports)),
        image_id="",
        per_image=tuple(reports),
    )


def _acc_key(threshold: float) -> str:
    return "acc_" + f"{threshold:.2f}".replace(".", "_")


def _record_fields(r: EvalReport) -> dict:
    fields = {
        "mae_deg": r.mae_deg,
        "n_pixels": r.n_pixels,
        "thresholds_deg": list(r.thresholds_deg),
        "accuracies": list(r.accuracies),
    }
    for t, a in zip(r.thresholds_deg, r.accuracies):
        fields[_acc_key(t)] = a
    return fields


def report_to_text(report: EvalReport, pixel_weighted: bool = False) -> str:
    """Serialize a summary report: one JSON record per image plus a
    final summary record."""
    lines = []
    for r in report.per_image:
        rec = {"record": "image", "image_id": r.image_id}
        rec.update(_record_fields(r))
        lines.append(json.dumps(rec, sort_keys=True))
    summary = {
        "record": "summary",
        "n_images": len(report.per_image) or 1,
        "weighting": "pixel" if pixel_weighted else "image_mean",
    }
    summary.update(_record_fields(report))
    lines.append(json.dumps(summary, sort_keys=True))
    return "\n".join(lines) + "\n"


def report_from_text(text: str) -> EvalReport:
    """Parse the text produced by :func:`report_to_text`."""
    images = []
    summary = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        rec = json.loads(line)
        report = EvalReport(
            mae_deg=rec["mae_deg"],
            thresholds_deg=tuple(rec["thresholds_deg"]),
            accuracies=tuple(rec["accuracies"]),
            n_pixels=rec["n_pixels"],
            image_id=rec.get("image_id", ""),
        )
        if rec["record"] == "image":
            images.append(report)
        elif rec["record"] == "summary":
            summary = report
    if summary is None:
        raise EvaluationError("report text has no summary record")
    return EvalReport(
        mae_deg=summary.mae_deg,
        thresholds_deg=summary.thresholds_deg,
        accuracies=summary.accuracies,
        n_pixels=summary.n_pixels,
        per_image=tuple(images),
    )
