import numpy as np
import pytest

from segeval.synthetic import (
    GradientFixture,
    fit_saliency_constant,
    gradient_image,
    half_contrast_square,
    split_columns,
    table1_config,
    table1_experiment,
)


def test_gradient_image_values():
    img = gradient_image()
    row = img.data[0, :, 0]
    assert row[0] == 0 and row[128] == 128 and row[255] == 255
    assert np.all(img.data == img.data[:1])


def test_gradient_image_narrow():
    assert gradient_image(3, 1).data.ravel().tolist() == [0.0, 128.0, 255.0]
    with pytest.raises(ValueError):
        gradient_image(1, 4)


def test_split_columns():
    assert split_columns(256, 1, 2).labels[0, :128].max() == 0
    assert split_columns(256, 1, 2).labels[0, 128] == 1
    assert split_columns(256, 2, 256).labels[1].tolist() == list(range(256))
    assert split_columns(256, 2, 1).labels.max() == 0
    with pytest.raises(ValueError):
        split_columns(256, 2, 3)


def test_half_contrast_square():
    img, lm = half_contrast_square(4, 100.0)
    assert img.data[0, :, 0].tolist() == [0.0, 0.0, 100.0, 100.0]
    assert img.data.mean() == 50.0
    assert lm.labels.max() == 0
    const, _ = half_contrast_square(4, 0.0)
    assert np.all(const.data == 0)
    with pytest.raises(ValueError):
        half_contrast_square(5, 10.0)


def test_fixture_build():
    fx = GradientFixture.build((2, 4))
    assert sorted(fx.splits) == [2, 4]
    assert fx.image.width == 256


def test_fit_no_blur_is_exact():
    slope, r2 = fit_saliency_constant(blur=False)
    assert slope == 0.5
    assert r2 == pytest.approx(1.0, abs=1e-15)


def test_fit_with_blur():
    slope, r2 = fit_saliency_constant()
    assert 0.47 <= slope <= 0.53
    assert r2 >= 0.99


def test_fit_needs_three_contrasts():
    with pytest.raises(ValueError):
        fit_saliency_constant(ts=(0, 10))
    with pytest.raises(ValueError):
        fit_saliency_constant(ts=(10, 20))


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64])
def test_table1_ratio_is_two(n):
    d_intra, d_inter, q0 = table1_experiment(splits=(n,))[n]
    assert 1.9 <= d_inter / d_intra <= 2.1


def test_table1_endpoints():
    table = table1_experiment(splits=(2, 128, 256))
    assert table[2][:2] == pytest.approx((64.0, 128.0), rel=0.01)
    assert table[128][:2] == pytest.approx((1.0, 2.0), rel=0.05)
    assert table[256][0] == 0.0
    assert table[256][1] == pytest.approx(1.0)


def test_table1_default_fit_constant_scales_intra():
    base = table1_experiment(splits=(4,))[4]
    published = table1_experiment(table1_config().with_(fit_constant=0.515), splits=(4,))[4]
    assert published[0] == pytest.approx(base[0] * 0.5 / 0.515)
    assert published[1] == base[1]
