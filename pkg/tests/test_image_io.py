import numpy as np
import pytest

from polarshape import image_io as iio
from polarshape.errors import FormatError, StructuralError


def random_float_image(rng, channels=None):
    h = int(rng.integers(1, 24))
    w = int(rng.integers(1, 24))
    c = channels if channels is not None else int(rng.choice([1, 3]))
    shape = (h, w) if c == 1 else (h, w, 3)
    return (rng.normal(0, 10, shape) * rng.choice([1e-8, 1.0, 1e6])).astype(np.float32)


class TestFloatImage:
    def test_tiny_constant_image_layout(self, tmp_path):
        img = np.full((2, 2), 0.25, dtype=np.float32)
        path = tmp_path / "tiny.pfm"
        iio.write_float_image(path, img)
        data = path.read_bytes()
        header = b"Pf\n2 2\n-1.0\n"
        assert data.startswith(header)
        assert len(data) - len(header) == 16
        assert np.array_equal(iio.read_float_image(path), img)

    def test_full_frame_three_channel_bit_exact(self, tmp_path, np_rng):
        img = np_rng.normal(0, 1, (512, 612, 3)).astype(np.float32)
        path = tmp_path / "frame.pfm"
        iio.write_float_image(path, img)
        back = iio.read_float_image(path)
        assert back.dtype == np.float32
        assert back.tobytes() == img.tobytes()

    def test_fuzz_round_trips_bit_exact(self, tmp_path, np_rng):
        for i in range(200):
            img = random_float_image(np_rng)
            path = tmp_path / f"fuzz_{i}.pfm"
            iio.write_float_image(path, img)
            back = iio.read_float_image(path)
            assert back.shape == img.shape
            assert back.tobytes() == img.tobytes()

    def test_single_channel_3d_collapses(self, tmp_path, np_rng):
        img = np_rng.normal(size=(5, 6, 1)).astype(np.float32)
        path = tmp_path / "c1.pfm"
        iio.write_float_image(path, img)
        assert np.array_equal(iio.read_float_image(path), img[:, :, 0])

    def test_big_endian_payload_readable(self):
        img = np.arange(6, dtype=">f4").reshape(2, 3)
        data = b"Pf\n3 2\n1.0\n" + np.flipud(img).tobytes()
        back = iio.float_image_from_bytes(data)
        assert np.array_equal(back, img.astype(np.float32))

    def test_bad_magic(self):
        with pytest.raises(iio.MalformedHeaderError):
            iio.float_image_from_bytes(b"P6\n2 2\n-1.0\n" + b"\0" * 16)

    def test_short_payload_by_one_row(self, tmp_path, np_rng):
        img = np_rng.normal(size=(4, 5)).astype(np.float32)
        path = tmp_path / "short.pfm"
        iio.write_float_image(path, img)
        data = path.read_bytes()
        with pytest.raises(iio.TruncatedPayloadError):
            iio.float_image_from_bytes(data[: -5 * 4])

    def test_dimension_overflow(self):
        with pytest.raises(iio.DimensionOverflowError):
            iio.float_image_from_bytes(b"PF\n100000 100000\n-1.0\n")

    def test_nonpositive_dims(self):
        with pytest.raises(iio.MalformedHeaderError):
            iio.float_image_from_bytes(b"Pf\n0 2\n-1.0\n")

    def test_zero_scale(self):
        with pytest.raises(iio.MalformedHeaderError):
            iio.float_image_from_bytes(b"Pf\n1 1\n0\n" + b"\0" * 4)

    def test_trailing_bytes_rejected(self):
        data = iio.float_image_bytes(np.zeros((1, 1), np.float32)) + b"x"
        with pytest.raises(FormatError):
            iio.float_image_from_bytes(data)

    def test_nonfinite_rejected(self):
        img = np.asarray([[np.inf]], dtype=np.float32)
        with pytest.raises(StructuralError):
            iio.float_image_bytes(img)

    def test_deterministic_bytes(self, np_rng):
        img = np_rng.normal(size=(7, 9, 3)).astype(np.float32)
        assert iio.float_image_bytes(img) == iio.float_image_bytes(img.copy())


class TestNormalEncoding:
    def test_axis_vectors(self):
        n = np.zeros((1, 2, 3))
        n[0, 0] = (0.0, 0.0, 1.0)
        n[0, 1] = (-1.0, 0.0, 0.0)
        rgb = iio.encode_normal_image(n)
        # (v + 1) / 2 * 255 with round half away: 0 -> 127.5 -> 128
        assert tuple(rgb[0, 0]) == (128, 128, 255)
        assert tuple(rgb[0, 1]) == (0, 128, 128)

    def test_background_is_midgray(self):
        n = np.zeros((2, 2, 3))
        rgb = iio.encode_normal_image(n)
        assert np.all(rgb == 128)

    def test_mask_forces_background(self, np_rng):
        n = np_rng.normal(size=(3, 3, 3))
        mask = np.zeros((3, 3), dtype=bool)
        rgb = iio.encode_normal_image(n, mask)
        assert np.all(rgb == 128)

    def test_component_error_bound_before_renormalization(self, np_rng):
        v = np_rng.normal(size=(16, 16, 3))
        n = v / np.linalg.norm(v, axis=2, keepdims=True)
        rgb = iio.encode_normal_image(n)
        raw = rgb.astype(np.float64) / 255.0 * 2.0 - 1.0
        assert np.max(np.abs(raw - n)) <= 1.0 / 255.0 + 1e-12

    def test_decode_renormalizes_foreground_zeroes_background(self, np_rng):
        v = np_rng.normal(size=(8, 8, 3))
        n = v / np.linalg.norm(v, axis=2, keepdims=True)
        mask = np_rng.uniform(size=(8, 8)) > 0.4
        back = iio.decode_normal_image(iio.encode_normal_image(n, mask), mask)
        norms = np.linalg.norm(back[mask], axis=1)
        assert np.allclose(norms, 1.0, atol=1e-5)
        assert np.all(back[~mask] == 0.0)
        dots = np.sum(back[mask] * n[mask], axis=1)
        assert np.min(dots) > 0.9999

    def test_png_file_round_trip(self, tmp_path, np_rng):
        v = np_rng.normal(size=(6, 7, 3))
        n = v / np.linalg.norm(v, axis=2, keepdims=True)
        mask = np.ones((6, 7), dtype=bool)
        path = tmp_path / "n.png"
        iio.write_normal_png(path, n, mask)
        back = iio.read_normal_png(path, mask)
        assert np.sum(back * n, axis=2).min() > 0.9999


class TestMaskPng:
    def test_round_trip_exact(self, tmp_path, np_rng):
        mask = np_rng.uniform(size=(9, 11)) > 0.5
        path = tmp_path / "m.png"
        iio.write_mask_png(path, mask)
        assert np.array_equal(iio.read_mask_png(path), mask)


class TestCodePng:
    def test_grid_values_round_trip_exact(self, tmp_path, np_rng):
        from polarshape.augment import quantize
        from polarshape.stokes import QuadPolarImage

        plane = np_rng.uniform(0, 1, (10, 12)).astype(np.float32)
        q = quantize(QuadPolarImage(plane, plane, plane, plane), 12)
        path = tmp_path / "codes.png"
        iio.write_code_png(path, q.i0, bits=12)
        back = iio.read_code_png(path, bits=12)
        assert np.array_equal(back, q.i0)

    def test_codes_left_aligned(self, tmp_path):
        plane = np.asarray([[1.0]])
        path = tmp_path / "one.png"
        iio.write_code_png(path, plane, bits=12)
        from PIL import Image

        raw = np.asarray(Image.open(path)).astype(np.uint32)
        assert raw[0, 0] == 4095 << 4


class TestColorize:
    def test_zero_dolp_is_black(self):
        out = iio.colorize_aolp(np.zeros((4, 4)), np.zeros((4, 4)))
        assert np.all(out == 0)

    def test_constant_aolp_is_constant_hue(self, np_rng):
        a = np.full((5, 5), 0.3)
        out = iio.colorize_aolp(a)
        assert np.all(out.reshape(-1, 3) == out[0, 0])

    def test_cyclic_continuity_at_wrap(self):
        eps = 1e-6
        lo = iio.colorize_aolp(np.full((1, 1), -np.pi / 2 + eps))
        hi = iio.colorize_aolp(np.full((1, 1), np.pi / 2))
        assert np.max(np.abs(lo.astype(int) - hi.astype(int))) <= 1

    def test_dolp_grayscale_endpoints(self):
        out = iio.colorize_dolp(np.asarray([[0.0, 1.0]]))
        assert out[0, 0] == 0 and out[0, 1] == 255


class TestManifest:
    def test_round_trip(self, tmp_path):
        records = [
            iio.SceneRecord(
                "scene_000001",
                "train",
                {"s0": "scene_000001_s0.pfm", "mask": "scene_000001_mask.png"},
            ),
            iio.SceneRecord("scene_000002", "val", {"normal": "scene_000002_normal.pfm"}),
        ]
        path = tmp_path / "manifest.txt"
        iio.write_manifest(path, records)
        back = iio.read_manifest(path)
        assert back == records

    def test_bad_split_rejected(self):
        with pytest.raises(FormatError):
            iio.SceneRecord("a", "training", {})

    def test_unknown_kind_rejected(self):
        with pytest.raises(FormatError):
            iio.SceneRecord("a", "train", {"rgb": "a_rgb.pfm"})

    def test_malformed_line_rejected(self):
        with pytest.raises(FormatError):
            iio.manifest_from_text("not json\n")

    def test_missing_plane_resolution_rejected(self, tmp_path):
        rec = iio.SceneRecord("a", "train", {"s0": "a_s0.pfm"})
        with pytest.raises(FormatError):
            iio.resolve_plane(tmp_path / "manifest.txt", rec, "dolp")


class TestNaming:
    def test_plane_filenames(self):
        assert iio.plane_filename("scene_7", "i45") == "scene_7_i45.pfm"
        assert iio.plane_filename("scene_7", "mask") == "scene_7_mask.png"
        assert iio.plane_filename("scene_7", "normal", ext="pfm") == "scene_7_normal.pfm"

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            iio.plane_filename("s", "depth")
