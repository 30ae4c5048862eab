import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connectlab.errors import AugmentationError, ValidationError
from connectlab.graph import TARGET
from connectlab.heads import erm_minimizers
from connectlab.numerics import Rng
from connectlab.targeted import (
    OD_MATRIX,
    Categorical,
    RgbImage,
    Sampler,
    TargetedAugmentation,
    graph_targeted_aug,
    graph_targeted_augmentation,
    read_ppm,
    sample_augmentation,
    stain_color_jitter,
    write_ppm,
)


def test_categorical_validates():
    with pytest.raises(ValidationError):
        Categorical({"a": 0.5, "b": 0.4})
    with pytest.raises(ValidationError):
        Categorical({"a": 1.5, "b": -0.5})


def test_categorical_frequencies():
    c = Categorical({"a": 0.25, "b": 0.75})
    r = Rng(0)
    draws = [c.sample(r) for _ in range(20000)]
    assert draws.count("a") / len(draws) == pytest.approx(0.25, abs=0.01)


def test_identity_composition_leaves_input():
    a = TargetedAugmentation(lambda x: x, Categorical.point, lambda x, z: Categorical.point(x))
    assert sample_augmentation(a, 7, Rng(0)) == 7


def test_kernel_rows_sum_to_one():
    # random finite shift and transform tables
    r = np.random.default_rng(0)
    inputs = list(range(6))

    def dist(n):
        p = r.random(n)
        p /= p.sum()
        return p

    shift = {z: Categorical(dict(enumerate(dist(3)))) for z in range(3)}
    trans = {(x, z): Categorical(dict(zip(inputs, dist(6)))) for x in inputs for z in range(3)}
    a = TargetedAugmentation(lambda x: x % 3, lambda z: shift[z], lambda x, z: trans[x, z])
    k = a.kernel(inputs)
    assert np.all(k >= 0)
    assert np.max(np.abs(k.sum(axis=1) - 1)) <= 1e-12


def test_rejection_exhausts_retries():
    a = TargetedAugmentation(lambda x: 0, Categorical.point, lambda x, z: Categorical.point(None), max_retries=3)
    with pytest.raises(AugmentationError):
        sample_augmentation(a, 1, Rng(0))


def test_rejection_then_accept_with_sampler_shift():
    calls = []

    def transformer(x, z):
        calls.append(z)
        return Categorical.point(None if z < 0.5 else x + 1)

    a = TargetedAugmentation(lambda x: 0, lambda z: Sampler(lambda r: r.random()), transformer, max_retries=50)
    assert sample_augmentation(a, 1, Rng(4)) == 2
    assert calls[-1] >= 0.5 and all(z < 0.5 for z in calls[:-1])


@pytest.mark.parametrize("mode", ["literal", "class_consistent"])
def test_graph_aug_kernel_shape(swapped, mode):
    k = graph_targeted_aug(swapped, mode).kernel
    assert np.array_equal(k.sum(axis=1), np.ones(8))
    assert np.array_equal(k[2:, 2:], np.eye(6))


def test_graph_aug_modes(swapped):
    lit = graph_targeted_aug(swapped, "literal").kernel
    cc = graph_targeted_aug(swapped, "class_consistent").kernel
    assert lit[0, 3] == 1 and lit[1, 2] == 1
    assert cc[0, 2] == 1 and cc[1, 3] == 1


def test_graph_aug_sampling(swapped):
    a = graph_targeted_augmentation(swapped)
    r = Rng(0)
    assert sample_augmentation(a, 0, r) == 2  # node 1 -> node 3
    assert sample_augmentation(a, 4, r) == 4  # node 5 stays
    assert swapped.domain_of[2] == TARGET


def test_graph_aug_unknown_mode(swapped):
    with pytest.raises(ValidationError):
        graph_targeted_aug(swapped, "bogus")


def test_class_consistent_erm_forced_correct(swapped):
    m = erm_minimizers(swapped, graph_targeted_aug(swapped, "class_consistent"))
    assert m.forced_correct(swapped) == [3, 4]


def test_literal_erm_forces_wrong_labels(swapped):
    m = erm_minimizers(swapped, graph_targeted_aug(swapped, "literal"))
    assert m.forced_correct(swapped) == []
    assert m.min_target_error == pytest.approx(2 / 6)


# -- stain color jitter ------------------------------------------------------


def _test_image(seed=0, size=64):
    return RgbImage(np.random.default_rng(seed).integers(0, 256, size=(size, size, 3), dtype=np.uint8))


def test_od_matrix_rows_unit():
    assert np.allclose(np.linalg.norm(OD_MATRIX, axis=1), 1.0)


def test_sigma_zero_round_trip():
    img = _test_image()
    out = stain_color_jitter(img, 0.0, Rng(0))
    assert np.max(np.abs(out.pixels.astype(int) - img.pixels.astype(int))) <= 1


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_outputs_in_range(sigma, seed):
    out = stain_color_jitter(_test_image(seed % 7, 16), sigma, Rng(seed))
    assert out.pixels.dtype == np.uint8 and out.pixels.shape == (16, 16, 3)


def test_uniform_gray_stays_uniform():
    img = RgbImage(np.full((32, 32, 3), 128, dtype=np.uint8))
    out = stain_color_jitter(img, 0.1, Rng(11))
    flat = out.pixels.reshape(-1, 3)
    assert np.all(flat == flat[0])


def test_jitter_deterministic_and_changes_colors():
    img = _test_image(1)
    a = stain_color_jitter(img, 0.1, Rng(5))
    b = stain_color_jitter(img, 0.1, Rng(5))
    c = stain_color_jitter(img, 0.1, Rng(6))
    assert np.array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, c.pixels)


def test_sigma_out_of_range():
    with pytest.raises(ValidationError):
        stain_color_jitter(_test_image(), 1.5, Rng(0))


def test_rgb_image_validation():
    with pytest.raises(ValidationError):
        RgbImage(np.zeros((4, 4)))
    with pytest.raises(ValidationError):
        RgbImage(np.full((2, 2, 3), 300))


def test_ppm_round_trip(tmp_path):
    img = _test_image(2, 17)
    write_ppm(img, tmp_path / "a.ppm")
    back = read_ppm(tmp_path / "a.ppm")
    assert np.array_equal(back.pixels, img.pixels)
    assert (tmp_path / "a.ppm").read_bytes().startswith(b"P6\n17 17\n255\n")


def test_ppm_with_comment(tmp_path):
    px = np.arange(12, dtype=np.uint8).reshape(2, 2, 3)
    (tmp_path / "c.ppm").write_bytes(b"P6\n# made by hand\n2 2\n255\n" + px.tobytes())
    assert np.array_equal(read_ppm(tmp_path / "c.ppm").pixels, px)


def test_ppm_rejects_ascii(tmp_path):
    (tmp_path / "p3.ppm").write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(ValidationError):
        read_ppm(tmp_path / "p3.ppm")
