"""Progressive enhancement step and trace tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import textured_raw
from rawlume.enhance import (
    DEFAULT_ITERATIONS,
    IterationTrace,
    clamp_output,
    enhance_progressive,
    enhance_step,
    luminance_map,
)
from rawlume.grid import BilateralGridSet
from rawlume.raw import pack_cfa


def test_default_iteration_count():
    assert DEFAULT_ITERATIONS == 9


def test_luminance_rggb_averages_greens(unit_profile):
    planes = np.zeros((4, 2, 2))
    planes[0] = 0.2  # R
    planes[1] = 0.4  # G1
    planes[2] = 0.8  # G2
    planes[3] = 0.1  # B
    lum = luminance_map(planes, unit_profile, layout="rggb")
    w = unit_profile.luminance_weights
    expected = w[0] * 0.2 + w[1] * 0.6 + w[2] * 0.1
    np.testing.assert_allclose(lum, expected, atol=1e-15)


def test_luminance_rgb_layout(unit_profile):
    planes = np.zeros((3, 2, 2))
    planes[0] = 0.3
    planes[1] = 0.5
    planes[2] = 0.7
    lum = luminance_map(planes, unit_profile, layout="rgb")
    w = unit_profile.luminance_weights
    np.testing.assert_allclose(lum, w[0] * 0.3 + w[1] * 0.5 + w[2] * 0.7, atol=1e-15)


def test_luminance_unit_profile_uses_rec709_weights(unit_profile):
    w = unit_profile.luminance_weights
    np.testing.assert_allclose(w, [0.2126, 0.7152, 0.0722], atol=2e-4)


def test_luminance_clamps_to_unit_interval(unit_profile):
    bright = np.full((3, 2, 2), 3.0)
    np.testing.assert_array_equal(luminance_map(bright, unit_profile, layout="rgb"), 1.0)
    dark = np.full((3, 2, 2), -1.0)
    np.testing.assert_array_equal(luminance_map(dark, unit_profile, layout="rgb"), 0.0)


def test_luminance_rejects_wrong_plane_count(unit_profile):
    with pytest.raises(ValueError):
        luminance_map(np.zeros((3, 2, 2)), unit_profile, layout="rggb")
    with pytest.raises(ValueError):
        luminance_map(np.zeros((4, 2, 2)), unit_profile, layout="rgb")
    with pytest.raises(ValueError):
        luminance_map(np.zeros((3, 2, 2)), unit_profile, layout="hsv")


def test_enhance_step_closed_form():
    i_prev = np.full((2, 1, 1), 0.2)
    theta = np.full((1, 1), 0.5)
    lum = np.full((1, 1), 0.25)
    i_next, r = enhance_step(i_prev, theta, lum)
    # R = 0.5 * 0.75 * 0.2 = 0.075
    np.testing.assert_allclose(r, 0.075, atol=1e-15)
    np.testing.assert_allclose(i_next, 0.275, atol=1e-15)


def test_enhance_step_zero_theta_is_identity():
    rng = np.random.default_rng(0)
    i_prev = rng.uniform(0, 1, size=(4, 6, 6))
    i_next, r = enhance_step(i_prev, np.zeros((6, 6)), rng.uniform(0, 1, size=(6, 6)))
    np.testing.assert_array_equal(i_next, i_prev)
    np.testing.assert_array_equal(r, np.zeros_like(i_prev))


def test_enhance_step_saturated_luminance_is_identity():
    rng = np.random.default_rng(1)
    i_prev = rng.uniform(0, 1, size=(4, 5, 5))
    i_next, r = enhance_step(i_prev, rng.normal(size=(5, 5)), np.ones((5, 5)))
    np.testing.assert_array_equal(i_next, i_prev)
    np.testing.assert_array_equal(r, np.zeros_like(i_prev))


def test_enhance_step_rejects_geometry_mismatch():
    with pytest.raises(ValueError):
        enhance_step(np.zeros((4, 4, 4)), np.zeros((3, 4)), np.zeros((4, 4)))
    with pytest.raises(ValueError):
        enhance_step(np.zeros((4, 4, 4)), np.zeros((4, 4)), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        enhance_step(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4)))


def _run(seed, n, shape=(16, 16)):
    rng = np.random.default_rng(seed)
    raw = textured_raw(shape=shape, lo=0.02, hi=0.3)
    planes = pack_cfa(raw)
    grids = BilateralGridSet(grids=rng.uniform(-0.5, 1.5, size=(n, 16, 16, 16)))
    return planes, grids


def test_trace_shape_and_final(unit_profile):
    planes, grids = _run(2, 5)
    guidance = luminance_map(planes, unit_profile)
    trace = enhance_progressive(planes, grids, guidance, unit_profile)
    assert trace.n == 5
    assert len(trace.images) == 6
    assert len(trace.residuals) == 5
    assert trace.final is trace.images[-1]
    np.testing.assert_array_equal(trace.images[0], planes)


@pytest.mark.parametrize("n", [1, 4, 16])
def test_residual_telescoping_identity(n, unit_profile):
    planes, grids = _run(3 + n, n)
    guidance = luminance_map(planes, unit_profile)
    trace = enhance_progressive(planes, grids, guidance, unit_profile)
    recon = trace.images[0] + np.sum(trace.residuals, axis=0)
    assert np.max(np.abs(trace.final - recon)) < 1e-9


def test_zero_grids_leave_image_unchanged(unit_profile):
    planes, _ = _run(4, 1)
    guidance = luminance_map(planes, unit_profile)
    trace = enhance_progressive(planes, BilateralGridSet.zeros(3), guidance, unit_profile)
    for img in trace.images:
        np.testing.assert_array_equal(img, planes)
    for r in trace.residuals:
        np.testing.assert_array_equal(r, np.zeros_like(planes))


def test_interleaved_zero_grid_matches_shorter_run(unit_profile):
    planes, grids = _run(5, 2)
    guidance = luminance_map(planes, unit_profile)
    padded = np.stack([grids.grids[0], np.zeros((16, 16, 16)), grids.grids[1]])
    short = enhance_progressive(planes, grids, guidance, unit_profile)
    long = enhance_progressive(planes, BilateralGridSet(grids=padded), guidance, unit_profile)
    np.testing.assert_array_equal(long.final, short.final)


def test_all_ones_image_is_fixed_point(unit_profile):
    rng = np.random.default_rng(6)
    planes = np.ones((4, 8, 8))
    grids = BilateralGridSet(grids=rng.normal(size=(4, 16, 16, 16)))
    guidance = luminance_map(planes, unit_profile)
    trace = enhance_progressive(planes, grids, guidance, unit_profile)
    np.testing.assert_array_equal(trace.final, planes)


@given(seed=st.integers(0, 2**31), n=st.integers(1, 6))
@settings(max_examples=25, deadline=None)
def test_nonnegative_grids_never_darken(seed, n):
    from rawlume.raw import CameraProfile

    profile = CameraProfile(black_level=0.0, white_level=1.0)
    rng = np.random.default_rng(seed)
    planes = rng.uniform(0, 1, size=(4, 8, 8))
    grids = BilateralGridSet(grids=rng.uniform(0, 2, size=(n, 16, 16, 16)))
    guidance = luminance_map(planes, profile)
    trace = enhance_progressive(planes, grids, guidance, profile)
    for prev, nxt in zip(trace.images, trace.images[1:]):
        assert np.all(nxt >= prev - 1e-12)


def test_progressive_rejects_non_planar(unit_profile):
    with pytest.raises(ValueError):
        enhance_progressive(
            np.zeros((8, 8)), BilateralGridSet.zeros(1), np.zeros((8, 8)), unit_profile
        )


def test_clamp_output():
    arr = np.array([[-0.5, 0.25], [0.75, 1.5]])[None]
    np.testing.assert_array_equal(clamp_output(arr), [[[0.0, 0.25], [0.75, 1.0]]])


def test_trace_empty_defaults():
    t = IterationTrace()
    assert t.n == 0
    assert t.images == []
