"""Acceptance gate: one test per headline criterion, each printing a
PASS line (run with ``pytest tests/test_acceptance.py -v -s``).

Numeric tolerances are pinned here and nowhere else; tests are seeded
and deterministic.
"""

import math
import subprocess
import sys
import time
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pytest
from scipy import stats as sps

from polarshape import cli
from polarshape import image_io as iio
from polarshape import metrics
from polarshape import scenegen as sg
from polarshape import stokes as stk
from polarshape.augment import AugmentConfig, add_noise, augment_post, augment_pre, quantize
from polarshape.rng import RandomStream

from conftest import backlit_probe_sphere, random_valid_stokes


def _pass(name):
    print(f"[ACCEPTANCE] {name}: PASS")


def test_stokes_round_trips():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()

    s = random_valid_stokes(rng, (1000, 1000), dtype=np.float32)  # 10^6 pixels
    back = stk.quad_to_stokes(stk.stokes_to_quad(s))
    worst = max(float(np.max(np.abs(a - b))) for a, b in zip(s.planes, back.planes))
    assert worst < 1e-6, f"round-trip error {worst}"

    # scalar brute-force reference, exact equality on a pixel sample
    q = stk.stokes_to_quad(s)
    s2 = stk.quad_to_stokes(q)
    idx = rng.integers(0, 1000, size=(8000, 2))
    for i, j in idx:
        i0 = np.float32(q.i0[i, j])
        i45 = np.float32(q.i45[i, j])
        i90 = np.float32(q.i90[i, j])
        i135 = np.float32(q.i135[i, j])
        assert s2.s0[i, j] == np.float32(0.5) * (((i0 + i45) + i90) + i135)
        assert s2.s1[i, j] == i0 - i90
        assert s2.s2[i, j] == i45 - i135

    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    _pass(f"stokes round trips (worst {worst:.2e}, {elapsed:.2f}s)")


def test_polarization_cue_conformance():
    rng = np.random.default_rng(202)
    shape = (500, 100)
    valid = random_valid_stokes(rng, shape, dtype=np.float64)
    wild = stk.StokesImage(
        rng.normal(0.3, 0.5, shape), rng.normal(0, 0.5, shape), rng.normal(0, 0.5, shape)
    )
    s = stk.StokesImage(
        np.concatenate([valid.s0, wild.s0]),
        np.concatenate([valid.s1, wild.s1]),
        np.concatenate([valid.s2, wild.s2]),
    )  # 10^5 pixels
    dolp = stk.stokes_to_dolp(s)
    aolp = stk.stokes_to_aolp(s)

    assert np.all(dolp >= 0.0) and np.all(dolp <= 1.0)
    assert np.all(aolp > -np.pi / 2) and np.all(aolp <= np.pi / 2)

    eps = stk.DOLP_EPSILON
    flat = [p.ravel() for p in (s.s0, s.s1, s.s2)]
    dolp_flat, aolp_flat = dolp.ravel(), aolp.ravel()
    worst_d = worst_a = 0.0
    for k in range(dolp_flat.size):
        s0, s1, s2 = float(flat[0][k]), float(flat[1][k]), float(flat[2][k])
        ref_d = min(max(math.sqrt(s1 * s1 + s2 * s2) / max(s0, eps), 0.0), 1.0)
        ref_a = 0.5 * math.atan2(s2, s1)
        if ref_a <= -0.5 * math.pi:
            ref_a += math.pi
        worst_d = max(worst_d, abs(float(dolp_flat[k]) - ref_d))
        worst_a = max(worst_a, abs(float(aolp_flat[k]) - ref_a))
    assert worst_d < 1e-6 and worst_a < 1e-6, (worst_d, worst_a)

    # rotation covariance: DoLP invariant, AoLP shifts by psi modulo pi
    worst_rot = 0.0
    for psi in (-1.3, -0.4, 0.17, 0.9, 1.5):
        c, sn = math.cos(2 * psi), math.sin(2 * psi)
        rot = stk.StokesImage(valid.s0, valid.s1 * c - valid.s2 * sn, valid.s1 * sn + valid.s2 * c)
        d_err = np.max(np.abs(stk.stokes_to_dolp(rot) - stk.stokes_to_dolp(valid)))
        expected = stk.wrap_aolp(stk.stokes_to_aolp(valid) + psi)
        got = stk.stokes_to_aolp(rot)
        off = np.abs(np.abs(expected) - np.pi / 2) > 1e-3
        a_err = np.max(np.abs(stk.aolp_difference(got, expected))[off])
        worst_rot = max(worst_rot, float(d_err), float(a_err))
    assert worst_rot < 1e-5, worst_rot
    _pass(f"DoLP/AoLP conformance (oracle {max(worst_d, worst_a):.2e}, rotation {worst_rot:.2e})")


def test_quantization_oracle():
    levels = 4095
    sweep = np.arange(-0.1, 1.1, 5e-6, dtype=np.float64)
    q = stk.QuadPolarImage(sweep[None, :], sweep[None, :], sweep[None, :], sweep[None, :])
    got = quantize(q, 12).i0[0]

    expected = np.empty_like(sweep)
    for k, v in enumerate(sweep):
        clamped = min(max(float(v), 0.0), 1.0)
        code = int((Decimal(clamped) * levels).quantize(Decimal(1), rounding=ROUND_HALF_UP))
        expected[k] = code / levels
    assert np.array_equal(got, expected), "grid mapping mismatch"

    again = quantize(quantize(q, 12), 12).i0[0]
    assert np.array_equal(got, again), "quantization is not idempotent"

    in_range = (sweep >= 0.0) & (sweep <= 1.0)
    recon = np.max(np.abs(got[in_range] - sweep[in_range]))
    assert recon <= 0.5 / levels + 1e-15, recon
    _pass(f"12-bit quantization oracle ({sweep.size} sweep points, recon {recon:.3e})")


def test_noise_statistics():
    shape = (512, 612)
    sigma = 0.02
    n = shape[0] * shape[1]
    q = stk.QuadPolarImage(*(np.full(shape, 0.5, np.float32) for _ in range(4)))
    out = add_noise(q, sigma, RandomStream(7, "noise_stats"))
    diff = (out.i0 - q.i0).astype(np.float64)
    mean, std = diff.mean(), diff.std()
    assert abs(mean) < 3 * sigma / math.sqrt(n), mean
    assert abs(std - sigma) < 0.02 * sigma, std

    rep = add_noise(q, sigma, RandomStream(7, "noise_stats"))
    for a, b in zip(out.planes, rep.planes):
        assert np.array_equal(a, b)
    _pass(f"noise statistics (mean {mean:+.2e}, std {std:.5f})")


def test_augmentation_ordering_property():
    t0 = time.perf_counter()
    stokes_img, _, mask = backlit_probe_sphere((256, 306))
    clean_d = stk.stokes_to_dolp(stokes_img).astype(np.float64)
    clean_a = stk.stokes_to_aolp(stokes_img).astype(np.float64)

    rho = {}
    for mode, fn in (("pre", augment_pre), ("post", augment_post)):
        cfg = AugmentConfig(
            mode=mode,
            noise_sigma_range=(0.02, 0.02),
            enable_blur=False,
            enable_noise=True,
            enable_quant=False,
            seed=3,
        )
        _, _, aolp = fn(stokes_img, cfg, RandomStream(cfg.seed, "ordering_probe"))
        err = np.abs(stk.aolp_difference(aolp, clean_a))
        rho[mode] = float(sps.spearmanr(err[mask], clean_d[mask]).statistic)

    elapsed = time.perf_counter() - t0
    assert rho["pre"] < -0.3, rho
    assert abs(rho["post"]) < 0.15, rho
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    _pass(f"augmentation ordering (pre {rho['pre']:+.3f}, post {rho['post']:+.3f}, {elapsed:.1f}s)")


def test_identity_pipeline():
    rng = np.random.default_rng(303)
    cfg = AugmentConfig(enable_blur=False, enable_noise=False, enable_quant=False)
    worst = 0.0
    stokes_sphere, _, _ = backlit_probe_sphere((128, 154))
    for s in (random_valid_stokes(rng, (64, 64)), stokes_sphere):
        rgb, dolp, aolp = augment_pre(s, cfg, RandomStream(0, "identity"))
        worst = max(
            worst,
            float(np.max(np.abs(dolp - stk.stokes_to_dolp(s)))),
            float(np.max(np.abs(stk.aolp_difference(aolp, stk.stokes_to_aolp(s))))),
            float(np.max(np.abs(rgb - s.s0))),
        )
    assert worst < 1e-6, worst
    _pass(f"identity pipeline (worst {worst:.2e})")


def test_metrics_criteria():
    # exact two-pixel fixture at 10 and 20 degrees
    gt = np.zeros((1, 2, 3))
    gt[..., 2] = 1.0
    pred = np.zeros((1, 2, 3))
    for j, deg in enumerate((10.0, 20.0)):
        pred[0, j, 1] = math.sin(math.radians(deg))
        pred[0, j, 2] = math.cos(math.radians(deg))
    rep = metrics.evaluate(pred, gt, np.ones((1, 2), dtype=bool))
    assert rep.mae_deg == pytest.approx(15.0, abs=1e-9)
    assert rep.acc_11_25 == 0.5 and rep.acc_22_50 == 1.0

    rng = np.random.default_rng(404)
    v = rng.normal(size=(40, 40, 3))
    pred_map = v / np.linalg.norm(v, axis=2, keepdims=True)
    w = rng.normal(size=(40, 40, 3))
    gt_map = w / np.linalg.norm(w, axis=2, keepdims=True)
    mask = np.ones((40, 40), dtype=bool)
    loss = metrics.cosine_loss(pred_map, gt_map, mask)
    err = np.radians(metrics.angular_error_map(pred_map, gt_map)[mask])
    ident_gap = abs(loss - float(np.mean(1 - np.cos(err))))
    assert ident_gap < 1e-5, ident_gap

    for scale in (0.25, 4.0, 1e3):
        scaled = metrics.evaluate(scale * pred_map, gt_map, mask)
        base = metrics.evaluate(pred_map, gt_map, mask)
        assert scaled.mae_deg == pytest.approx(base.mae_deg, abs=1e-6)
        assert scaled.accuracies == base.accuracies
    _pass(f"metrics (fixture exact, loss/error identity gap {ident_gap:.1e})")


def test_scene_sampling_protocol():
    catalog = sg.default_toy_catalog()
    cfg = sg.SamplerConfig()
    radii = {o.object_id: o.radius for o in catalog.objects}

    def generate():
        specs = []
        for i in range(10_000):
            spec = sg.sample_scene(catalog, seed=99, index=i, config=cfg)
            assert 1 <= len(spec.placements) <= 10
            sg.check_no_overlap(spec, radii)
            assert spec.camera.elevation > 0
            specs.append(sg.scene_spec_to_text(spec))
        return "".join(specs).encode()

    first = generate()
    second = generate()
    assert first == second, "regeneration is not byte-identical"
    _pass("scene sampling protocol (10^4 scenes, byte-identical regeneration)")


def test_io_round_trips_and_eval_isolation(tmp_path):
    rng = np.random.default_rng(505)

    for i in range(1000):
        h = int(rng.integers(1, 20))
        w = int(rng.integers(1, 20))
        c = int(rng.choice([1, 3]))
        shape = (h, w) if c == 1 else (h, w, 3)
        img = (rng.normal(0, 3, shape) * rng.choice([1e-6, 1.0, 1e5])).astype(np.float32)
        back = iio.float_image_from_bytes(iio.float_image_bytes(img))
        assert back.tobytes() == img.tobytes() and back.shape == img.shape

    from test_scenegen import random_spec

    for i in range(1000):
        spec = random_spec(rng, i)
        assert sg.scene_spec_from_text(sg.scene_spec_to_text(spec)) == spec

    data = tmp_path / "iso"
    rc = cli.main(
        ["toyset", "-n", "1", "--seed", "0", "--out", str(data), "--height", "24", "--width", "30"]
    )
    assert rc == 0
    code = (
        "import sys\n"
        "from polarshape import cli\n"
        f"rc = cli.main(['eval', '--pred', {str(data)!r}, '--gt', {str(data)!r}])\n"
        "assert rc == 0, rc\n"
        "bad = [m for m in sys.modules if 'augment' in m]\n"
        "assert not bad, f'augment imported: {bad}'\n"
    )
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    _pass("I/O round trips bit-exact; eval CLI independent of augmentation")
