"""Sensor-aware degradation of polarized images.

Rendered Stokes planes are too clean: a real division-of-focal-plane
sensor sees defocus blur, shot/read noise, and a 12-bit ADC.  The main
pipeline (:func:`augment_pre`) therefore reconstructs the four polarizer
intensities from the Stokes planes, degrades those, and only then
re-derives intensity/DoLP/AoLP, so the noise propagates through the
polarization arithmetic the same way it does in a camera.

:func:`augment_post` is the deliberately wrong ablation variant that
degrades the derived maps directly; it exists so the two orderings can
be compared.

Augmentation is a training-time tool only; the evaluation path never
imports this module.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .rng import RandomStream
from .stokes import (
    QuadPolarImage,
    StokesImage,
    quad_to_stokes,
    stokes_to_dolp,
    stokes_to_aolp,
    stokes_to_quad,
    wrap_aolp,
)

MODE_PRE = "pre"
MODE_POST = "post"

# Standard ImageNet channel statistics used to standardize RGB inputs.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

_CONFIG_KEYS = (
    "blur_kernels",
    "noise_sigma_min",
    "noise_sigma_max",
    "quant_bits",
    "mode",
    "seed",
    "enable_blur",
    "enable_noise",
    "enable_quant",
)


@dataclass(frozen=True)
class AugmentConfig:
    """Degradation settings; defaults model a 12-bit polarization sensor.

    Blur sigma is tied to the kernel as sigma = k / 6 so the truncated
    kernel captures +-3 sigma; kernel 1 means no blur.  Noise sigma is
    relative to full scale 1.0 and drawn uniformly per scene.
    """

    blur_kernel_choices: tuple = (1, 3, 5, 7)
    noise_sigma_range: tuple = (0.0, 0.02)
    quant_bits: int = 12
    enable_blur: bool = True
    enable_noise: bool = True
    enable_quant: bool = True
    mode: str = MODE_PRE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "blur_kernel_choices", tuple(int(k) for k in self.blur_kernel_choices)
        )
        object.__setattr__(
            self, "noise_sigma_range", tuple(float(v) for v in self.noise_sigma_range)
        )
        if not self.blur_kernel_choices:
            raise ConfigError("blur_kernel_choices must be nonempty")
        for k in self.blur_kernel_choices:
            if k < 1 or k % 2 == 0:
                raise ConfigError(f"blur kernel sizes must be odd and >= 1, got {k}")
        if len(self.noise_sigma_range) != 2:
            raise ConfigError("noise_sigma_range must be (min, max)")
        lo, hi = self.noise_sigma_range
        if lo < 0 or hi < lo:
            raise ConfigError(f"invalid noise_sigma_range ({lo}, {hi})")
        if not 1 <= int(self.quant_bits) <= 16:
            raise ConfigError(f"quant_bits must be in [1, 16], got {self.quant_bits}")
        if self.mode not in (MODE_PRE, MODE_POST):
            raise ConfigError(f"mode must be '{MODE_PRE}' or '{MODE_POST}', got {self.mode!r}")

    def to_text(self) -> str:
        """Flat key=value serialization (one key per line)."""
        lines = [
            "blur_kernels = " + ",".join(str(k) for k in self.blur_kernel_choices),
            f"noise_sigma_min = {self.noise_sigma_range[0]!r}",
            f"noise_sigma_max = {self.noise_sigma_range[1]!r}",
            f"quant_bits = {self.quant_bits}",
            f"mode = {self.mode}",
            f"seed = {self.seed}",
            f"enable_blur = {str(self.enable_blur).lower()}",
            f"enable_noise = {str(self.enable_noise).lower()}",
            f"enable_quant = {str(self.enable_quant).lower()}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AugmentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
            values[key] = value

        def parse_bool(key, default):
            if key not in values:
                return default
            v = values[key].lower()
            if v not in ("true", "false"):
                raise ConfigError(f"{key}: expected true/false, got {values[key]!r}")
            return v == "true"

        kwargs = {}
        if "blur_kernels" in values:
            kwargs["blur_kernel_choices"] = tuple(
                int(tok) for tok in values["blur_kernels"].split(",") if tok.strip()
            )
        lo = float(values.get("noise_sigma_min", cls.noise_sigma_range[0]))
        hi = float(values.get("noise_sigma_max", cls.noise_sigma_range[1]))
        kwargs["noise_sigma_range"] = (lo, hi)
        if "quant_bits" in values:
            kwargs["quant_bits"] = int(values["quant_bits"])
        if "mode" in values:
            kwargs["mode"] = values["mode"]
        if "seed" in values:
            kwargs["seed"] = int(values["seed"])
        kwargs["enable_blur"] = parse_bool("enable_blur", cls.enable_blur)
        kwargs["enable_noise"] = parse_bool("enable_noise", cls.enable_noise)
        kwargs["enable_quant"] = parse_bool("enable_quant", cls.enable_quant)
        return cls(**kwargs)

    def with_mode(self, mode: str) -> "AugmentConfig":
        return replace(self, mode=mode)


@dataclass(frozen=True)
class NetworkInput:
    """Standardized network inputs: RGB (ImageNet statistics), DoLP and
    AoLP linearly mapped to [-1, 1]."""

    rgb: np.ndarray
    dolp: np.ndarray
    aolp: np.ndarray


def blur_sigma_for_kernel(kernel: int) -> float:
    """Sigma rule tying blur strength to kernel size: sigma = k / 6."""
    return kernel / 6.0


def gaussian_kernel1d(size: int, sigma: float) -> np.ndarray:
    """Truncated, normalized 1-D Gaussian of odd length ``size``."""
    if size < 1 or size % 2 == 0:
        raise ConfigError(f"kernel size must be odd and >= 1, got {size}")
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    r = size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def _blur_plane(plane: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # Separable convolution over the two spatial axes, reflect padding.
    out = ndimage.convolve1d(plane, weights, axis=0, mode="reflect")
    return ndimage.convolve1d(out, weights, axis=1, mode="reflect")


def gaussian_blur(q: QuadPolarImage, kernel: int, sigma: float = None) -> QuadPolarImage:
    """Apply one separable Gaussian identically to all four planes.

    Kernel 1 is the identity (input returned unchanged).  Defaults sigma
    to the k/6 rule when not given.
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ConfigError(f"kernel size must be odd and >= 1, got {kernel}")
    if kernel == 1:
        return q
    if sigma is None:
        sigma = blur_sigma_for_kernel(kernel)
    w = gaussian_kernel1d(kernel, sigma)
    return QuadPolarImage(*(_blur_plane(p, w) for p in q.planes))


def add_noise(q: QuadPolarImage, sigma: float, rng: RandomStream) -> QuadPolarImage:
    """Add zero-mean Gaussian noise (std ``sigma`` of full scale) to each
    plane independently; sigma 0 is the identity.  No clamping."""
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return q
    planes = []
    for p in q.planes:  # fixed plane order: i0, i45, i90, i135
        noise = rng.normal_field(p.shape, sigma).astype(p.dtype)
        planes.append(p + noise)
    return QuadPolarImage(*planes)


def _quantize_plane(plane: np.ndarray, levels: int) -> np.ndarray:
    v = np.clip(plane.astype(np.float64, copy=False), 0.0, 1.0)
    # round half away from zero; v >= 0 here so floor(x + 0.5) suffices
    codes = np.floor(v * levels + 0.5)
    return (codes / levels).astype(plane.dtype)


def quantize(q: QuadPolarImage, bits: int) -> QuadPolarImage:
    """Clamp to [0, 1] and snap onto the (2^bits - 1)-step ADC grid."""
    if not 1 <= bits <= 16:
        raise ConfigError(f"bits must be in [1, 16], got {bits}")
    levels = (1 << bits) - 1
    return QuadPolarImage(*(_quantize_plane(p, levels) for p in q.planes))


def _draw_stage_params(cfg: AugmentConfig, rng: RandomStream):
    # Draw order is fixed and parameters are consumed even for disabled
    # stages, so results are stable within one enable set.
    kernel = rng.choice(cfg.blur_kernel_choices)
    sigma = rng.uniform(*cfg.noise_sigma_range)
    return kernel, sigma


def _to_float64(s: StokesImage) -> StokesImage:
    # The quad-domain round trip must not cost AoLP precision at low
    # DoLP, so the pipeline runs in float64 regardless of input dtype.
    if s.s0.dtype == np.float64:
        return s
    return StokesImage(*(p.astype(np.float64) for p in s.planes))


def augment_pre(s: StokesImage, cfg: AugmentConfig, rng: RandomStream):
    """Degrade in the polarizer-intensity domain, then re-derive cues.

    Pipeline: stokes -> quad -> blur -> noise -> quantize -> stokes,
    returning (intensity, DoLP, AoLP) of the degraded signal.  The
    intensity image is the degraded s0.
    """
    if cfg.mode != MODE_PRE:
        raise ConfigError(f"augment_pre requires mode '{MODE_PRE}', got {cfg.mode!r}")
    q = stokes_to_quad(_to_float64(s))
    kernel, sigma = _draw_stage_params(cfg, rng)
    if cfg.enable_blur:
        q = gaussian_blur(q, kernel)
    if cfg.enable_noise and sigma > 0:
        q = add_noise(q, sigma, rng)
    if cfg.enable_quant:
        q = quantize(q, cfg.quant_bits)
    s_aug = quad_to_stokes(q)
    return s_aug.s0, stokes_to_dolp(s_aug), stokes_to_aolp(s_aug)


def augment_post(s: StokesImage, cfg: AugmentConfig, rng: RandomStream):
    """Ablation variant: derive clean cues first, then degrade the maps.

    Blur and noise hit intensity/DoLP/AoLP directly (AoLP noise is added
    then wrapped back into (-pi/2, pi/2], DoLP is re-clamped to [0, 1]);
    quantization applies to the intensity image only.
    """
    if cfg.mode != MODE_POST:
        raise ConfigError(f"augment_post requires mode '{MODE_POST}', got {cfg.mode!r}")
    s = _to_float64(s)
    rgb = s.s0
    dolp = stokes_to_dolp(s)
    aolp = stokes_to_aolp(s)
    kernel, sigma = _draw_stage_params(cfg, rng)
    if cfg.enable_blur and kernel > 1:
        w = gaussian_kernel1d(kernel, blur_sigma_for_kernel(kernel))
        rgb = _blur_plane(rgb, w)
        dolp = _blur_plane(dolp, w)
        aolp = _blur_plane(aolp, w)
    if cfg.enable_noise and sigma > 0:
        rgb = rgb + rng.normal_field(rgb.shape, sigma).astype(rgb.dtype)
        dolp = np.clip(dolp + rng.normal_field(dolp.shape, sigma).astype(dolp.dtype), 0.0, 1.0)
        aolp = wrap_aolp(aolp + rng.normal_field(aolp.shape, sigma).astype(aolp.dtype))
    if cfg.enable_quant:
        levels = (1 << cfg.quant_bits) - 1
        rgb = _quantize_plane(rgb, levels)
    return rgb, dolp, aolp


def _ensure_rgb3(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb)
    if rgb.ndim == 2:
        rgb = rgb[:, :, None]
    if rgb.ndim != 3:
        raise ConfigError(f"rgb must be 2-D or 3-D, got ndim={rgb.ndim}")
    if rgb.shape[2] == 1:
        rgb = np.repeat(rgb, 3, axis=2)
    if rgb.shape[2] != 3:
        raise ConfigError(f"rgb must have 1 or 3 channels, got {rgb.shape[2]}")
    return rgb


def make_network_input(rgb, dolp, aolp) -> NetworkInput:
    """Map raw cues to network ranges.

    DoLP [0, 1] -> [-1, 1]; AoLP (-pi/2, pi/2] -> (-1, 1]; RGB is
    standardized channelwise with ImageNet mean and std.  Single-channel
    intensity is replicated to three channels first.
    """
    rgb3 = _ensure_rgb3(rgb)
    dolp = np.asarray(dolp)
    aolp = np.asarray(aolp)
    if dolp.shape[:2] != rgb3.shape[:2] or aolp.shape != dolp.shape:
        raise ConfigError(
            f"inconsistent input shapes: rgb {rgb3.shape}, dolp {dolp.shape}, aolp {aolp.shape}"
        )
    mean = np.asarray(IMAGENET_MEAN, dtype=rgb3.dtype)
    std = np.asarray(IMAGENET_STD, dtype=rgb3.dtype)
    rgb_std = (rgb3 - mean) / std
    dolp_m = 2.0 * dolp - 1.0
    half_pi = np.asarray(0.5 * np.pi, dtype=aolp.dtype)
    aolp_m = aolp / half_pi
    return NetworkInput(rgb=rgb_std, dolp=dolp_m, aolp=aolp_m)
