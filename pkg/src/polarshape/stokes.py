"""Conversions between four-angle polarizer intensities, Stokes planes,
and the derived DoLP / AoLP cues.

A division-of-focal-plane polarization camera captures four intensity
images behind linear polarizers at 0, 45, 90 and 135 degrees in a single
shot.  The per-pixel linear polarization state is the Stokes triple
(s0, s1, s2): total intensity, horizontal-vs-vertical difference, and
45-vs-135 difference.  Renderers emit Stokes planes directly; sensors
emit the four intensities; everything downstream consumes DoLP (degree
of linear polarization, in [0, 1]) and AoLP (angle of linear
polarization, in (-pi/2, pi/2], defined modulo pi).

All operations are pure elementwise maps over float arrays of shape
(H, W) or (H, W, C) with C in {1, 3}; no function mutates its input.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError

DOLP_EPSILON = 1e-6

# Rec. 709 luma weights for linear radiance.
_LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)


def _as_float(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype not in (np.float32, np.float64):
        a = a.astype(np.float32)
    return a


def _check_planes(planes, names) -> None:
    shape = planes[0].shape
    for name, p in zip(names, planes):
        if p.ndim not in (2, 3):
            raise StructuralError(
                f"plane {name}: expected 2-D or 3-D array, got ndim={p.ndim}"
            )
        if p.ndim == 3 and p.shape[2] not in (1, 3):
            raise StructuralError(
                f"plane {name}: channel count must be 1 or 3, got {p.shape[2]}"
            )
        if p.shape != shape:
            raise StructuralError(
                f"plane {name}: shape {p.shape} differs from {shape}"
            )
        if not np.all(np.isfinite(p)):
            raise StructuralError(f"plane {name}: non-finite values present")


@dataclass(frozen=True)
class QuadPolarImage:
    """Intensities behind linear polarizers at 0/45/90/135 degrees.

    Planes are linear radiance with nominal full scale [0, 1]; values
    outside that range are permitted transiently (e.g. after noise).
    """

    i0: np.ndarray
    i45: np.ndarray
    i90: np.ndarray
    i135: np.ndarray

    def __post_init__(self):
        for name in ("i0", "i45", "i90", "i135"):
            object.__setattr__(self, name, _as_float(getattr(self, name)))
        _check_planes(self.planes, ("i0", "i45", "i90", "i135"))

    @property
    def planes(self):
        return (self.i0, self.i45, self.i90, self.i135)

    @property
    def height(self) -> int:
        return self.i0.shape[0]

    @property
    def width(self) -> int:
        return self.i0.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.i0.ndim == 2 else self.i0.shape[2]


@dataclass(frozen=True)
class StokesImage:
    """Per-pixel linear polarization state (s0, s1, s2).

    Physical validity (s0 >= 0 and sqrt(s1^2 + s2^2) <= s0) is checkable
    via :func:`validate_stokes` but is deliberately not enforced here:
    sensor-style degradations legitimately produce invalid pixels.
    """

    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray

    def __post_init__(self):
        for name in ("s0", "s1", "s2"):
            object.__setattr__(self, name, _as_float(getattr(self, name)))
        _check_planes(self.planes, ("s0", "s1", "s2"))

    @property
    def planes(self):
        return (self.s0, self.s1, self.s2)

    @property
    def height(self) -> int:
        return self.s0.shape[0]

    @property
    def width(self) -> int:
        return self.s0.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.s0.ndim == 2 else self.s0.shape[2]


@dataclass(frozen=True)
class StokesValidity:
    """Violation counts from :func:`validate_stokes` (per value, i.e.
    per pixel and channel)."""

    n_values: int
    n_negative_s0: int
    n_overpolarized: int

    @property
    def frac_negative_s0(self) -> float:
        return self.n_negative_s0 / self.n_values

    @property
    def frac_overpolarized(self) -> float:
        return self.n_overpolarized / self.n_values

    @property
    def ok(self) -> bool:
        return self.n_negative_s0 == 0 and self.n_overpolarized == 0


def quad_to_stokes(q: QuadPolarImage) -> StokesImage:
    """Stokes planes from the four polarizer intensities.

    s0 = (i0 + i45 + i90 + i135) / 2,  s1 = i0 - i90,  s2 = i45 - i135.
    """
    s0 = 0.5 * (q.i0 + q.i45 + q.i90 + q.i135)
    s1 = q.i0 - q.i90
    s2 = q.i45 - q.i135
    return StokesImage(s0, s1, s2)


def stokes_to_quad(s: StokesImage) -> QuadPolarImage:
    """Ideal-polarizer intensities from Stokes planes.

    Uses the Malus form I_phi = (s0 + s1*cos(2*phi) + s2*sin(2*phi)) / 2,
    the unique inverse of :func:`quad_to_stokes` consistent with an ideal
    division-of-focal-plane sensor.  No clamping is performed.
    """
    i0 = 0.5 * (s.s0 + s.s1)
    i90 = 0.5 * (s.s0 - s.s1)
    i45 = 0.5 * (s.s0 + s.s2)
    i135 = 0.5 * (s.s0 - s.s2)
    return QuadPolarImage(i0, i45, i90, i135)


def stokes_to_dolp(s: StokesImage, epsilon: float = DOLP_EPSILON) -> np.ndarray:
    """Degree of linear polarization, sqrt(s1^2 + s2^2) / s0, in [0, 1].

    The division is guarded by ``max(s0, epsilon)`` and the result is
    clamped to [0, 1]; both guards exist because degraded inputs can
    carry s0 <= 0 or over-unity polarization.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    lp = np.sqrt(s.s1 * s.s1 + s.s2 * s.s2)
    dolp = lp / np.maximum(s.s0, np.asarray(epsilon, dtype=s.s0.dtype))
    return np.clip(dolp, 0.0, 1.0)


def stokes_to_aolp(s: StokesImage) -> np.ndarray:
    """Angle of linear polarization, atan2(s2, s1) / 2, in (-pi/2, pi/2].

    Quadrant-aware two-argument arctangent keeps the s1 < 0 half-plane;
    the degenerate unpolarized case s1 = s2 = 0 maps to 0.
    """
    a = 0.5 * np.arctan2(s.s2, s.s1)
    # atan2 can return exactly -pi (signed zeros), putting a at -pi/2.
    pi = np.asarray(np.pi, dtype=a.dtype)
    half_pi = np.asarray(0.5 * np.pi, dtype=a.dtype)
    return np.where(a <= -half_pi, a + pi, a)


def wrap_aolp(a: np.ndarray) -> np.ndarray:
    """Wrap arbitrary angles into the AoLP range (-pi/2, pi/2] modulo pi."""
    a = np.asarray(a)
    pi = np.asarray(np.pi, dtype=a.dtype)
    half_pi = np.asarray(0.5 * np.pi, dtype=a.dtype)
    w = np.mod(a + half_pi, pi) - half_pi
    return np.where(w <= -half_pi, w + pi, w)


def aolp_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Signed angular difference a - b folded into (-pi/2, pi/2]."""
    return wrap_aolp(np.asarray(a) - np.asarray(b))


def validate_stokes(s: StokesImage, tolerance: float = 1e-6) -> StokesValidity:
    """Count physically invalid values: s0 < 0, and linear polarization
    magnitude exceeding s0 * (1 + tolerance).  Never mutates the input."""
    lp = np.sqrt(s.s1 * s.s1 + s.s2 * s.s2)
    n_negative = int(np.count_nonzero(s.s0 < 0))
    n_over = int(np.count_nonzero(lp > s.s0 * (1.0 + tolerance)))
    return StokesValidity(
        n_values=int(s.s0.size),
        n_negative_s0=n_negative,
        n_overpolarized=n_over,
    )


def collapse_luminance(s: StokesImage) -> StokesImage:
    """Collapse a 3-channel Stokes image to single-channel luminance.

    Optional variant for consumers that want one DoLP/AoLP map instead
    of per-channel maps; uses Rec. 709 weights on linear radiance.
    """
    if s.channels == 1:
        return s
    w = np.asarray(_LUMA_WEIGHTS, dtype=s.s0.dtype)
    planes = [p @ w for p in s.planes]
    return StokesImage(*planes)
