"""Deterministic scene sampling, scene-spec serialization, and a toy
analytic polarized renderer.

Scene sampling follows the tabletop protocol: 1-10 objects from an asset
catalog are scaled and dropped on a flat ground disk with bounding-circle
overlap rejection, one environment map is picked and rotated, and a
camera is placed on the upper hemisphere looking at the origin.  Scene
specs serialize to a versioned, renderer-agnostic text format intended
as the hand-off point to an external polarized renderer.

The toy renderer is explicitly NON-physical: it projects analytic
spheres over a ground plane and fabricates polarization cues from the
geometry (DoLP = kappa * sin^2(zenith), AoLP = normal azimuth modulo
pi).  Its only purpose is to exercise the full pipeline with a known
ground truth; it does not model Fresnel or pBRDF behavior.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, StructuralError
from .rng import substream
from .stokes import StokesImage, wrap_aolp

SCENE_FORMAT_TAG = "polarshape-scene v1"
CATALOG_FORMAT_TAG = "polarshape-catalog v1"

DEFAULT_RESOLUTION = (512, 612)  # (height, width)


def _require_token(value: str, what: str) -> str:
    value = str(value)
    if not value or any(c.isspace() for c in value):
        raise ConfigError(f"{what} must be a nonempty token without whitespace, got {value!r}")
    return value


@dataclass(frozen=True)
class CatalogObject:
    object_id: str
    radius: float  # bounding-circle radius on the ground plane, meters

    def __post_init__(self):
        _require_token(self.object_id, "object_id")
        if not self.radius > 0:
            raise ConfigError(f"object radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class AssetCatalog:
    objects: tuple
    envmaps: tuple

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "envmaps", tuple(self.envmaps))
        if not self.objects:
            raise ConfigError("catalog has no objects")
        if not self.envmaps:
            raise ConfigError("catalog has no environment maps")
        for e in self.envmaps:
            _require_token(e, "envmap id")


@dataclass(frozen=True)
class Placement:
    object_id: str
    scale: float
    x: float
    y: float
    yaw: float


@dataclass(frozen=True)
class CameraPose:
    """Hemisphere camera looking at the origin: azimuth/elevation in
    radians (elevation in (0, pi/2]), distance in meters."""

    azimuth: float
    elevation: float
    radius: float

    def __post_init__(self):
        if not 0 < self.elevation <= 0.5 * math.pi:
            raise StructuralError(
                f"camera elevation must lie in (0, pi/2], got {self.elevation}"
            )
        if not self.radius > 0:
            raise StructuralError(f"camera radius must be positive, got {self.radius}")

    @property
    def position(self):
        ce = math.cos(self.elevation)
        return np.array(
            [
                self.radius * ce * math.cos(self.azimuth),
                self.radius * ce * math.sin(self.azimuth),
                self.radius * math.sin(self.elevation),
            ]
        )


def _overlaps(a: Placement, ra: float, b: Placement, rb: float) -> bool:
    dist = math.hypot(a.x - b.x, a.y - b.y)
    return dist <= a.scale * ra + b.scale * rb


@dataclass(frozen=True)
class SceneSpec:
    scene_id: str
    placements: tuple
    envmap_id: str
    env_rotation: float
    camera: CameraPose
    resolution: tuple = DEFAULT_RESOLUTION

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(self.placements))
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))
        _require_token(self.scene_id, "scene_id")
        _require_token(self.envmap_id, "envmap_id")
        if not 1 <= len(self.placements) <= 10:
            raise StructuralError(
                f"scene must place 1-10 objects, got {len(self.placements)}"
            )
        if len(self.resolution) != 2 or any(v <= 0 for v in self.resolution):
            raise StructuralError(f"bad resolution {self.resolution}")


def check_no_overlap(spec: SceneSpec, radii: dict) -> None:
    """Raise when any two placements violate the bounding-circle rule."""
    ps = spec.placements
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if _overlaps(ps[i], radii[ps[i].object_id], ps[j], radii[ps[j].object_id]):
                raise StructuralError(
                    f"placements {i} and {j} overlap in scene {spec.scene_id!r}"
                )


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs of the scene sampling protocol.  The geometric defaults
    (scale range, ground disk, camera shell) are pragmatic choices that
    frame typical scenes well; all are overridable."""

    max_objects: int = 10
    scale_range: tuple = (0.5, 2.0)
    disk_radius: float = 1.5
    camera_radius_range: tuple = (1.5, 3.0)
    elevation_range_deg: tuple = (10.0, 80.0)
    max_attempts: int = 100
    resolution: tuple = DEFAULT_RESOLUTION


def sample_scene(
    catalog: AssetCatalog, seed: int, index: int, config: SamplerConfig = SamplerConfig()
) -> SceneSpec:
    """Draw one scene spec, deterministic in (seed, index).

    Object count is uniform on [1, max_objects]; positions are rejection
    sampled on the ground disk until the bounding-circle overlap rule
    holds, dropping an object after ``max_attempts`` failures (the first
    object always places, so a scene never ends up empty).
    """
    rng = substream(seed, "scene", index)
    radii = {o.object_id: o.radius for o in catalog.objects}

    count = int(rng.integers(1, config.max_objects + 1))
    placements = []
    for _ in range(count):
        obj = catalog.objects[int(rng.integers(0, len(catalog.objects)))]
        scale = float(rng.uniform(*config.scale_range))
        yaw = float(rng.uniform(0.0, 2.0 * math.pi))
        for _ in range(config.max_attempts):
            r = config.disk_radius * math.sqrt(float(rng.uniform(0.0, 1.0)))
            t = float(rng.uniform(0.0, 2.0 * math.pi))
            cand = Placement(obj.object_id, scale, r * math.cos(t), r * math.sin(t), yaw)
            if all(
                not _overlaps(cand, obj.radius, p, radii[p.object_id]) for p in placements
            ):
                placements.append(cand)
                break

    envmap_id = catalog.envmaps[int(rng.integers(0, len(catalog.envmaps)))]
    env_rotation = float(rng.uniform(0.0, 2.0 * math.pi))
    lo_el, hi_el = (math.radians(d) for d in config.elevation_range_deg)
    camera = CameraPose(
        azimuth=float(rng.uniform(0.0, 2.0 * math.pi)),
        elevation=float(rng.uniform(lo_el, hi_el)),
        radius=float(rng.uniform(*config.camera_radius_range)),
    )
    return SceneSpec(
        scene_id=f"scene_{index:06d}",
        placements=tuple(placements),
        envmap_id=envmap_id,
        env_rotation=env_rotation,
        camera=camera,
        resolution=config.resolution,
    )


# ---------------------------------------------------------------------------
# Scene-spec text format


def scene_spec_to_text(spec: SceneSpec) -> str:
    """Versioned line format; floats use repr so round trips are bit-exact."""
    lines = [
        SCENE_FORMAT_TAG,
        f"scene_id {spec.scene_id}",
        f"resolution {spec.resolution[0]} {spec.resolution[1]}",
        f"envmap_id {spec.envmap_id}",
        f"env_rotation {spec.env_rotation!r}",
        f"camera {spec.camera.azimuth!r} {spec.camera.elevation!r} {spec.camera.radius!r}",
    ]
    for p in spec.placements:
        lines.append(f"placement {p.object_id} {p.scale!r} {p.x!r} {p.y!r} {p.yaw!r}")
    return "\n".join(lines) + "\n"


def scene_spec_from_text(text: str) -> SceneSpec:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != SCENE_FORMAT_TAG:
        raise FormatError(f"missing version tag {SCENE_FORMAT_TAG!r}")
    fields = {}
    placements = []
    for raw in lines[1:]:
        tokens = raw.split()
        key = tokens[0]
        try:
            if key == "placement":
                oid, scale, x, y, yaw = tokens[1:]
                placements.append(
                    Placement(oid, float(scale), float(x), float(y), float(yaw))
                )
            elif key in ("scene_id", "envmap_id"):
                (fields[key],) = tokens[1:]
            elif key == "resolution":
                h, w = tokens[1:]
                fields[key] = (int(h), int(w))
            elif key == "env_rotation":
                (v,) = tokens[1:]
                fields[key] = float(v)
            elif key == "camera":
                az, el, rad = tokens[1:]
                fields[key] = CameraPose(float(az), float(el), float(rad))
            else:
                raise FormatError(f"unknown scene-spec line {raw!r}")
        except (ValueError, TypeError) as exc:
            raise FormatError(f"malformed scene-spec line {raw!r}: {exc}") from exc
    missing = {"scene_id", "resolution", "envmap_id", "env_rotation", "camera"} - set(fields)
    if missing:
        raise FormatError(f"scene spec missing fields: {sorted(missing)}")
    return SceneSpec(
        scene_id=fields["scene_id"],
        placements=tuple(placements),
        envmap_id=fields["envmap_id"],
        env_rotation=fields["env_rotation"],
        camera=fields["camera"],
        resolution=fields["resolution"],
    )


def export_scene_spec(spec: SceneSpec, path) -> None:
    from .image_io import atomic_write_bytes

    atomic_write_bytes(path, scene_spec_to_text(spec).encode("utf-8"))


def import_scene_spec(path) -> SceneSpec:
    return scene_spec_from_text(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Asset catalog text format


def catalog_to_text(catalog: AssetCatalog) -> str:
    lines = [CATALOG_FORMAT_TAG]
    lines += [f"object {o.object_id} {o.radius!r}" for o in catalog.objects]
    lines += [f"envmap {e}" for e in catalog.envmaps]
    return "\n".join(lines) + "\n"


def catalog_from_text(text: str) -> AssetCatalog:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != CATALOG_FORMAT_TAG:
        raise FormatError(f"missing version tag {CATALOG_FORMAT_TAG!r}")
    objects, envmaps = [], []
    for raw in lines[1:]:
        tokens = raw.split()
        try:
            if tokens[0] == "object":
                _, oid, radius = tokens
                objects.append(CatalogObject(oid, float(radius)))
            elif tokens[0] == "envmap":
                _, eid = tokens
                envmaps.append(eid)
            else:
                raise FormatError(f"unknown catalog line {raw!r}")
        except ValueError as exc:
            raise FormatError(f"malformed catalog line {raw!r}: {exc}") from exc
    return AssetCatalog(tuple(objects), tuple(envmaps))


def read_catalog(path) -> AssetCatalog:
    return catalog_from_text(Path(path).read_text(encoding="utf-8"))


def write_catalog(catalog: AssetCatalog, path) -> None:
    from .image_io import atomic_write_bytes

    atomic_write_bytes(path, catalog_to_text(catalog).encode("utf-8"))


def default_toy_catalog() -> AssetCatalog:
    """Small built-in catalog of abstract round objects for toy datasets."""
    radii = (0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50)
    objects = tuple(
        CatalogObject(f"ball_{i:02d}", r) for i, r in enumerate(radii)
    )
    envmaps = tuple(f"env_{i:02d}" for i in range(6))
    return AssetCatalog(objects, envmaps)


# ---------------------------------------------------------------------------
# Toy analytic forward model


@dataclass(frozen=True)
class ToySphere:
    x: float
    y: float
    z: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"sphere radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class ToyScene:
    """Analytic spheres over an optional ground plane, one directional
    light, and a polarization gain kappa scaling the fabricated DoLP."""

    spheres: tuple
    ground: bool = True
    light_dir: tuple = (0.3, 0.2, 0.9)
    kappa: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "spheres", tuple(self.spheres))
        if not self.spheres:
            raise ConfigError("toy scene needs at least one sphere")
        if not 0.0 <= self.kappa <= 1.0:
            raise ConfigError(f"kappa must lie in [0, 1], got {self.kappa}")
        light = np.asarray(self.light_dir, dtype=np.float64)
        norm = float(np.linalg.norm(light))
        if norm == 0:
            raise ConfigError("light direction must be nonzero")
        object.__setattr__(self, "light_dir", tuple(light / norm))


def toy_scene_from_spec(
    spec: SceneSpec, catalog: AssetCatalog, kappa: float = 0.6
) -> ToyScene:
    """Stand-in geometry for a sampled scene: each placement becomes a
    sphere resting on the ground; the light direction is a deterministic
    function of the environment rotation."""
    radii = {o.object_id: o.radius for o in catalog.objects}
    spheres = []
    for p in spec.placements:
        r = p.scale * radii[p.object_id]
        spheres.append(ToySphere(p.x, p.y, r, r))
    el = math.radians(50.0)
    light = (
        math.cos(spec.env_rotation) * math.cos(el),
        math.sin(spec.env_rotation) * math.cos(el),
        math.sin(el),
    )
    return ToyScene(spheres=tuple(spheres), ground=True, light_dir=light, kappa=kappa)


def _camera_basis(camera: CameraPose):
    # Right-handed camera frame with +z pointing from the scene toward
    # the camera; world up is +z, with a fallback near the zenith.
    pos = camera.position
    z_cam = pos / np.linalg.norm(pos)
    up = np.array([0.0, 0.0, 1.0])
    x_cam = np.cross(up, z_cam)
    if np.linalg.norm(x_cam) < 1e-8:
        up = np.array([0.0, 1.0, 0.0])
        x_cam = np.cross(up, z_cam)
    x_cam = x_cam / np.linalg.norm(x_cam)
    y_cam = np.cross(z_cam, x_cam)
    return np.stack([x_cam, y_cam, z_cam]), pos


def toy_render(
    ts: ToyScene,
    resolution=DEFAULT_RESOLUTION,
    camera: CameraPose = CameraPose(azimuth=0.4, elevation=0.9, radius=2.5),
    frame_half_extent: float = 2.0,
):
    """Orthographic render of the toy scene.

    Returns (StokesImage, normal map, foreground mask).  Per visible
    surface point with camera-space unit normal n and view direction v:
    zenith theta = arccos(n . v), azimuth alpha = atan2(ny, nx),
    s0 = max(n . light, 0.1), DoLP = kappa * sin^2(theta),
    AoLP = alpha wrapped into (-pi/2, pi/2], and
    (s1, s2) = s0 * DoLP * (cos 2*AoLP, sin 2*AoLP).

    The mask marks exactly the sphere-hit pixels; the ground plane (when
    enabled) contributes shading and polarization but stays background,
    and its normal-map entries remain zero vectors.
    """
    h, w = (int(v) for v in resolution)
    basis, cam_pos = _camera_basis(camera)

    half_h = frame_half_extent
    half_w = frame_half_extent * w / h
    xs = (np.arange(w) + 0.5) / w * (2 * half_w) - half_w
    ys = half_h - (np.arange(h) + 0.5) / h * (2 * half_h)
    px, py = np.meshgrid(xs, ys)

    depth = np.full((h, w), -np.inf)
    normal = np.zeros((h, w, 3), dtype=np.float64)
    mask = np.zeros((h, w), dtype=bool)

    for sp in ts.spheres:
        center = basis @ (np.asarray([sp.x, sp.y, sp.z]) - cam_pos)
        dx = px - center[0]
        dy = py - center[1]
        rho2 = dx * dx + dy * dy
        hit = rho2 <= sp.radius * sp.radius
        if not hit.any():
            continue
        dz = np.sqrt(np.maximum(sp.radius * sp.radius - rho2, 0.0))
        z_hit = center[2] + dz  # front surface, toward the camera
        closer = hit & (z_hit > depth)
        depth[closer] = z_hit[closer]
        for k, comp in enumerate((dx, dy, dz)):
            normal[closer, k] = comp[closer] / sp.radius
        mask |= closer

    ground_mask = np.zeros((h, w), dtype=bool)
    if ts.ground:
        # Orthogonal rays: world z of the ray at camera depth z is linear in z.
        n_ground = basis @ np.array([0.0, 0.0, 1.0])
        if abs(basis[2, 2]) > 1e-9:
            origin_wz = cam_pos[2] + basis[0, 2] * px + basis[1, 2] * py
            z_ground = -origin_wz / basis[2, 2]
            ground_mask = ~mask & (z_ground < 0)  # in front of the camera plane
    light_cam = basis @ np.asarray(ts.light_dir)

    s0 = np.zeros((h, w), dtype=np.float64)
    s1 = np.zeros((h, w), dtype=np.float64)
    s2 = np.zeros((h, w), dtype=np.float64)

    def shade(region, normals):
        if not region.any():
            return
        n = normals[region]
        s0_r = np.maximum(n @ light_cam, 0.1)
        cos_theta = np.clip(n[:, 2], -1.0, 1.0)  # view dir is +z
        dolp = ts.kappa * (1.0 - cos_theta * cos_theta)
        alpha = np.arctan2(n[:, 1], n[:, 0])
        aolp = wrap_aolp(alpha)
        s0[region] = s0_r
        s1[region] = s0_r * dolp * np.cos(2.0 * aolp)
        s2[region] = s0_r * dolp * np.sin(2.0 * aolp)

    shade(mask, normal)
    if ground_mask.any():
        g_normals = np.broadcast_to(basis @ np.array([0.0, 0.0, 1.0]), (h, w, 3))
        shade(ground_mask, g_normals)

    stokes = StokesImage(
        s0.astype(np.float32), s1.astype(np.float32), s2.astype(np.float32)
    )
    return stokes, normal.astype(np.float32), mask
