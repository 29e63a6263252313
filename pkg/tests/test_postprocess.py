import sys

import numpy as np
import pytest

from memdeblur import Image, Kernel, add_gaussian_noise, psnr
from memdeblur import _ckernels, _pykernels
from memdeblur.postprocess import (PipelineConfig, Stage, external_denoise, gaussian_denoise,
                                   gaussian_kernel_for, parse_post, parse_pre, threshold,
                                   total_variation, tv_denoise)
from memdeblur.synthetic import finder_pattern, smooth_scene


def _blocks():
    a = np.zeros((32, 32))
    a[8:24, 8:24] = 1.0
    a[12:20, 12:20] = 0.4
    return Image(a)


def test_tv_small_weight_is_identity(rng):
    img = Image(rng.random((16, 16)))
    out = tv_denoise(img, weight=1e-6, iters=50)
    assert np.max(np.abs(out.data - img.data)) <= 1e-5


def test_tv_large_weight_flattens(rng):
    img = Image(rng.random((16, 16)))
    out = tv_denoise(img, weight=100.0, iters=3000)
    assert np.ptp(out.data) <= 0.05
    assert out.data.mean() == pytest.approx(img.data.mean(), abs=1e-12)


def test_tv_preserves_mean_and_lowers_variation(rng):
    noisy = add_gaussian_noise(_blocks(), 10, seed=3)
    out = tv_denoise(noisy, weight=0.1, iters=200)
    assert out.data.mean() == pytest.approx(noisy.data.mean(), abs=1e-12)
    assert total_variation(out.channel(0)) < total_variation(noisy.channel(0))
    assert np.var(out.data - _blocks().data) < np.var(noisy.data - _blocks().data)
    assert psnr(out, _blocks()) > psnr(noisy, _blocks()) + 3


def test_tv_per_channel(rng):
    planes = [rng.random((8, 8)) for _ in range(3)]
    out = tv_denoise(Image.from_channels(planes), 0.1, 30)
    for c, p in enumerate(planes):
        assert np.allclose(out.channel(c), tv_denoise(Image(p), 0.1, 30).channel(0), atol=0)


def test_tv_backends_agree(rng):
    f = rng.random((20, 13))
    a = _pykernels.chambolle_tv(f, 0.2, 80, 0.248)
    b = _ckernels.chambolle_tv(f, 0.2, 80, 0.248)
    assert np.max(np.abs(a - b)) <= 1e-13


def test_tv_rejects_bad_weight():
    with pytest.raises(ValueError):
        tv_denoise(_blocks(), weight=0.0)


def test_threshold():
    img = Image(np.array([[0.1, 0.5], [0.49, 0.9]]))
    assert threshold(img).channel(0).tolist() == [[0.0, 1.0], [0.0, 1.0]]
    assert threshold(img, 0.05).data.min() == 1.0
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            threshold(img, bad)


def test_threshold_recovers_binary_pattern():
    pattern = finder_pattern(16, seed=0)
    noisy = add_gaussian_noise(Image(pattern), 10, seed=1)
    assert np.array_equal(threshold(noisy).channel(0), pattern)


def test_gaussian_semigroup():
    img = smooth_scene(64, seed=4)
    s1, s2 = 1.5, 1.2
    twice = gaussian_denoise(gaussian_denoise(img, s1), s2)
    once = gaussian_denoise(img, np.hypot(s1, s2))
    assert np.max(np.abs(twice.data - once.data)) <= 1e-6


def test_gaussian_preserves_mean_and_zero_sigma():
    img = smooth_scene(16, seed=1)
    assert gaussian_denoise(img, 0.0) is img
    assert gaussian_denoise(img, 1.0).data.mean() == pytest.approx(img.data.mean(), abs=1e-12)
    with pytest.raises(ValueError):
        gaussian_denoise(img, -1.0)


def test_gaussian_kernel_truncated_to_image():
    assert gaussian_kernel_for(1.0, 64, 64).size == 13
    assert gaussian_kernel_for(10.0, 12, 20).size == 11


SCRIPT = ("import sys; from PIL import Image, ImageOps; "
          "ImageOps.invert(Image.open(sys.argv[1])).save(sys.argv[2])")


def test_external_denoiser_with_placeholders():
    img = Image(np.array([[0.0, 1.0], [0.2, 0.6]]))
    out = external_denoise(img, f'{sys.executable} -c "{SCRIPT}" {{input}} {{output}}')
    assert np.allclose(out.data, 1.0 - np.round(img.data * 255) / 255)


def test_external_denoiser_appended_paths():
    img = Image(np.full((3, 3), 0.2))
    out = external_denoise(img, f'{sys.executable} -c "{SCRIPT}"')
    assert np.allclose(out.data, 1.0 - 51 / 255)


def test_external_denoiser_failure():
    with pytest.raises(RuntimeError, match="failed"):
        external_denoise(_blocks(), f'{sys.executable} -c "raise SystemExit(3)"')
    with pytest.raises(RuntimeError, match="no output"):
        external_denoise(_blocks(), f'{sys.executable} -c "pass"')


def test_total_variation():
    assert total_variation(np.array([[0.0, 1.0], [1.0, 1.0]])) == 2.0
    assert total_variation(np.ones((4, 4))) == 0.0


def test_parse_stages():
    assert parse_pre("none") == Stage()
    assert parse_pre("gaussian:0.7") == Stage("gaussian", (0.7,))
    assert parse_pre("extern:my denoiser --x").params == ("my denoiser --x",)
    assert parse_post("tv") == Stage("tv", (0.05, 100))
    assert parse_post("tv:0.1:20") == Stage("tv", (0.1, 20))
    assert parse_post("threshold:0.3") == Stage("threshold", (0.3,))
    assert str(parse_post("tv:0.1:20")) == "tv:0.1:20"
    for bad in ("median", "extern"):
        with pytest.raises(ValueError):
            parse_pre(bad)
    with pytest.raises(ValueError):
        parse_post("sharpen")


def test_pipeline_runs_stages():
    img = add_gaussian_noise(_blocks(), 5, seed=0)
    cfg = PipelineConfig(pre=parse_pre("gaussian:1.0"), post=parse_post("threshold:0.5"))
    assert np.allclose(cfg.run_pre(img).data, gaussian_denoise(img, 1.0).data)
    assert set(np.unique(cfg.run_post(img).data)) <= {0.0, 1.0}
    plain = PipelineConfig()
    assert plain.run_pre(img) is img and plain.run_post(img) is img
