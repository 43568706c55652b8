import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from matplotlib.path import Path as PolyPath

from melanfis import features as F
from melanfis.segmentation import largest_component
from melanfis.features import (FeatureCsvError, FeatureVector, asymmetry, brightness_difference, color_stats,
                               diameter, edge_uniformity, extract_features, irregularity_index, mask_geometry,
                               read_feature_csv, sphericity, standardize, write_feature_csv)

from conftest import disk, square


def star_mask(size=120, points=5, outer=50, inner=20):
    k = np.arange(2 * points)
    r = np.where(k % 2 == 0, outer, inner)
    t = np.pi * k / points
    c = (size - 1) / 2
    poly = PolyPath(np.column_stack([c + r * np.cos(t), c + r * np.sin(t)]))
    yy, xx = np.mgrid[:size, :size]
    return poly.contains_points(np.column_stack([xx.ravel(), yy.ravel()])).reshape(size, size)


def half_disk(size=121, radius=40):
    m = disk(size, radius)
    m[: size // 2] = False
    return m


def reflect_oracle(bits, cx, cy, ux, uy):
    """Pixel-by-pixel mirror of ``bits`` about the line through (cx, cy)
    along (ux, uy); returns the XOR count of the mask and its mirror."""
    h, w = bits.shape
    pad = max(h, w)
    count = 0
    for r in range(-pad, h + pad):
        for c in range(-pad, w + pad):
            px, py = c - cx, r - cy
            d = px * ux + py * uy
            mc, mr = int(np.rint(cx + 2 * d * ux - px)), int(np.rint(cy + 2 * d * uy - py))
            a = 0 <= r < h and 0 <= c < w and bits[r, c]
            b = 0 <= mr < h and 0 <= mc < w and bits[mr, mc]
            count += a != b
    return count


def enumerate_boundary(bits):
    h, w = bits.shape
    out = []
    for r in range(h):
        for c in range(w):
            if bits[r, c] and any(not (0 <= r + dr < h and 0 <= c + dc < w) or not bits[r + dr, c + dc]
                                  for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))):
                out.append((r, c))
    return out


def upscale(bits, f=2):
    return np.kron(bits, np.ones((f, f), bool))


def random_blob(seed, size=60):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:size, :size]
    c = (size - 1) / 2
    t = np.arctan2(yy - c, xx - c)
    r = 15 * (1 + 0.2 * np.cos(3 * t + rng.uniform(0, 6)) + 0.1 * np.cos(5 * t + rng.uniform(0, 6)))
    return np.hypot(xx - c, yy - c) <= r


# ------------------------------------------------------------------ geometry

def test_square_perimeter_hand_trace():
    g = mask_geometry(square(20, 10))
    assert g.area == 100
    # 36 unit steps, 9 per side. Averaging 4 consecutive steps leaves 6
    # straight windows per side; the 3 windows that straddle each corner
    # hold (1,3), (2,2) and (3,1) steps along the two sides.
    corner = (math.hypot(1, 3) + math.hypot(2, 2) + math.hypot(3, 1)) / 4
    hand = 4 * 6 + 4 * corner + math.pi
    assert g.perimeter == pytest.approx(hand, rel=1e-12)


def test_chain_of_square_is_four_runs():
    chain = F.trace_boundary(square(20, 10))
    assert len(chain) == 36
    assert sorted(set(chain)) == [0, 2, 4, 6]


def test_single_pixel_geometry():
    m = np.zeros((7, 9), bool)
    m[4, 2] = True
    g = mask_geometry(m)
    assert g.area == 1 and g.centroid == (2.0, 4.0) and g.perimeter > 0


def test_disk_centroid_and_angle_range():
    m = disk(101, 30, cx=47.0, cy=55.0)
    g = mask_geometry(m)
    assert abs(g.centroid[0] - 47.0) <= 0.5 and abs(g.centroid[1] - 55.0) <= 0.5
    assert -math.pi / 2 <= g.principal_axis_angle < math.pi / 2


def test_principal_axis_of_horizontal_bar():
    m = np.zeros((30, 60), bool)
    m[12:16, 5:55] = True
    assert abs(mask_geometry(m).principal_axis_angle) < 1e-12


def test_diameter_values():
    assert diameter(mask_geometry(disk(121, 50))) == pytest.approx(100, rel=0.02)
    one = np.zeros((3, 3), bool)
    one[1, 1] = True
    assert diameter(mask_geometry(one)) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-12)


@pytest.mark.parametrize("radius", [50, 80])
def test_disk_sphericity_near_one(radius):
    g = mask_geometry(disk(2 * radius + 11, radius))
    assert sphericity(g) == pytest.approx(1.0, abs=0.05)
    assert irregularity_index(g) == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("side", [50, 100, 200])
def test_square_sphericity(side):
    g = mask_geometry(square(side + 10, side))
    assert sphericity(g) == pytest.approx(math.pi / 4, abs=0.05)
    assert irregularity_index(g) == pytest.approx(4 / math.pi, abs=0.05)


def test_thin_bar_sphericity():
    m = np.zeros((10, 110), bool)
    m[4:6, 5:105] = True
    assert sphericity(mask_geometry(m)) < 0.2


def test_star_reciprocal_exact():
    g = mask_geometry(star_mask())
    s, i = sphericity(g), irregularity_index(g)
    assert s * i == 1.0
    assert i == 1.0 / s
    assert s < 0.8


@given(arrays(np.bool_, (10, 10)))
@settings(max_examples=150, deadline=None)
def test_reciprocal_holds_for_any_mask(bits):
    if not bits.any():
        return
    g = mask_geometry(largest_component(bits).bits)
    s = sphericity(g)
    assert 0 < s <= 1
    assert s * irregularity_index(g) == 1.0


def test_scaling_laws():
    m = random_blob(3)
    g1, g2 = mask_geometry(m), mask_geometry(upscale(m))
    assert g2.area == 4 * g1.area
    assert diameter(g2) == pytest.approx(2 * diameter(g1), rel=0.05)
    assert g2.perimeter == pytest.approx(2 * g1.perimeter, rel=0.05)


# ----------------------------------------------------------------- asymmetry

def test_disk_is_symmetric():
    assert asymmetry(disk(121, 40)) <= 0.05


def test_half_disk_matches_pixel_oracle():
    m = half_disk()
    rows, cols = np.nonzero(m)
    cx, cy = cols.mean(), rows.mean()
    cov = np.cov(np.vstack([cols - cx, rows - cy]), bias=True)
    vals, vecs = np.linalg.eigh(cov)
    major = vecs[:, np.argmax(vals)]
    minor = np.array([-major[1], major[0]])
    expect = np.mean([reflect_oracle(m, cx, cy, *u) / m.sum() for u in (major, minor)])
    got = asymmetry(m)
    assert got == pytest.approx(expect, abs=0.01)
    # mirroring across the flat edge direction flips the half-disk onto empty space
    assert got > 0.15


@given(arrays(np.bool_, (9, 9)))
@settings(max_examples=100, deadline=None)
def test_asymmetry_in_unit_range(bits):
    if bits.any():
        assert 0.0 <= asymmetry(bits) <= 1.0


def test_translation_invariance_exact():
    m = random_blob(5)
    shifted = np.roll(np.roll(np.pad(m, 10), 7, axis=0), -4, axis=1)
    base = np.pad(m, 10)
    assert asymmetry(shifted) == asymmetry(base)
    assert sphericity(mask_geometry(shifted)) == sphericity(mask_geometry(base))
    assert edge_uniformity(shifted) == pytest.approx(edge_uniformity(base), rel=1e-12)


def test_rotation_invariance():
    m = random_blob(8)
    r = np.rot90(m)
    assert asymmetry(r) == pytest.approx(asymmetry(m), abs=0.02)
    assert sphericity(mask_geometry(r)) == pytest.approx(sphericity(mask_geometry(m)), rel=0.02)
    assert edge_uniformity(r) == pytest.approx(edge_uniformity(m), rel=0.02)


# ------------------------------------------------------------ edge uniformity

def test_disk_edge_uniformity_near_zero():
    assert edge_uniformity(disk(121, 50)) <= 0.01


def test_square_edge_uniformity_by_enumeration():
    m = square(60, 40)
    pts = np.array(enumerate_boundary(m), dtype=np.float64)
    rows, cols = np.nonzero(m)
    radius = np.hypot(pts[:, 1] - cols.mean(), pts[:, 0] - rows.mean())
    expect = radius.var() / radius.mean() ** 2
    assert edge_uniformity(m) == pytest.approx(expect, rel=1e-12)
    assert len(pts) == 4 * 40 - 4


def test_edge_uniformity_scale_invariant():
    m = random_blob(11)
    assert edge_uniformity(upscale(m)) == pytest.approx(edge_uniformity(m), abs=0.02)


def test_edge_uniformity_gray_shape_checked():
    with pytest.raises(ValueError):
        edge_uniformity(square(10, 4), np.zeros((9, 10)))


# --------------------------------------------------------------------- color

def test_constant_colour_lesion():
    img = np.zeros((20, 20, 3), np.uint8)
    img[:] = (120, 60, 30)
    m = square(20, 8)
    v = color_stats(img, m)
    assert v[:3] == (0.0, 0.0, 0.0)
    assert v[3:6] == pytest.approx((120 / 210, 60 / 210, 30 / 210), rel=1e-12)
    assert v[6] in (0.0, 1.0)


def test_black_lesion_convention():
    img = np.full((20, 20, 3), 255, np.uint8)
    m = square(20, 8)
    img[m] = 0
    v = color_stats(img, m)
    assert v[3:6] == pytest.approx((1 / 3, 1 / 3, 1 / 3), rel=1e-12)
    assert v[3] + v[4] + v[5] == 1.0
    # black sits within distance 60 of its reference; nothing else does
    assert v[6] == 1.0


def test_two_tone_variance():
    img = np.zeros((10, 10, 3), np.uint8)
    m = np.zeros((10, 10), bool)
    m[2:8, 2:8] = True
    img[2:5, 2:8, 0] = 100
    img[5:8, 2:8, 0] = 200
    v = color_stats(img, m)
    assert v[:3] == (2500.0, 0.0, 0.0)


def test_colour_count_multiple_refs():
    img = np.zeros((20, 20, 3), np.uint8)
    m = np.ones((20, 20), bool)
    img[:10] = F.REFERENCE_COLORS["red"]
    img[10:] = F.REFERENCE_COLORS["blue_gray"]
    assert color_stats(img, m)[6] == 2.0


@given(arrays(np.uint8, (6, 6, 3)), arrays(np.bool_, (6, 6)))
@settings(max_examples=200, deadline=None)
def test_ratios_sum_to_exactly_one(img, bits):
    if not bits.any():
        return
    v = color_stats(img, bits)
    assert v[3] + v[4] + v[5] == 1.0


# ---------------------------------------------------------------- brightness

def test_brightness_difference_values():
    g = np.full((10, 10), 0.8)
    m = square(10, 4)
    g[m] = 0.2
    assert brightness_difference(g, m) == pytest.approx(0.6, abs=1e-12)
    assert brightness_difference(np.full((10, 10), 0.5), m) == 0.0


def test_brightness_difference_on_gradient():
    g = np.add.outer(np.linspace(0, 1, 17), np.linspace(0, 0.5, 23)) / 1.5
    m = disk(23, 6)[:17]
    inside = outside = 0.0
    n_in = n_out = 0
    for r in range(17):
        for c in range(23):
            if m[r, c]:
                inside += g[r, c]
                n_in += 1
            else:
                outside += g[r, c]
                n_out += 1
    assert brightness_difference(g, m) == pytest.approx(outside / n_out - inside / n_in, rel=1e-12)


def test_brightness_difference_full_mask_raises():
    with pytest.raises(ValueError):
        brightness_difference(np.zeros((4, 4)), np.ones((4, 4), bool))


# ------------------------------------------------------------------ assembly

def disk_image(size=121, radius=40):
    m = disk(size, radius)
    img = np.empty((size, size, 3), np.uint8)
    img[:] = (210, 180, 160)
    img[m] = (110, 70, 40)
    return img, m


def test_disk_feature_vector():
    img, m = disk_image()
    v = extract_features(img, m, label=1).as_dict()
    assert len(v) == 13
    assert v["sphericity"] == pytest.approx(1, abs=0.05)
    assert v["irregularity_index"] == pytest.approx(1, abs=0.05)
    assert v["asymmetry"] <= 0.05
    assert v["brightness_difference"] > 0


def test_feature_vector_validation():
    with pytest.raises(ValueError):
        FeatureVector((1.0,) * 12)
    with pytest.raises(ValueError):
        FeatureVector((1.0,) * 12 + (math.nan,))
    with pytest.raises(ValueError):
        FeatureVector((1.0,) * 13, label=3)


def test_feature_row_byte_identical(tmp_path):
    img, m = disk_image()
    star = star_mask(121)
    img[star & ~m] = (40, 30, 30)
    a = write_feature_csv(tmp_path / "a.csv", [extract_features(img, m | star, 2)]).read_bytes()
    b = write_feature_csv(tmp_path / "b.csv", [extract_features(img, m | star, 2)]).read_bytes()
    assert a == b


# --------------------------------------------------------------- standardize

def vec(values, label=1):
    return FeatureVector(tuple(values), label)


def test_standardize_plus_minus():
    x = np.arange(1.0, 14.0)
    zt, _, _ = standardize([vec(x), vec(-x)])
    np.testing.assert_allclose(zt[0].values, 1.0, rtol=0, atol=1e-15)
    np.testing.assert_allclose(zt[1].values, -1.0, rtol=0, atol=1e-15)


def test_standardize_constant_and_mean():
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(6, 13))
    rows[:, 4] = 3.0
    train = [vec(r) for r in rows]
    zt, za, st = standardize(train, [vec(rows.mean(axis=0), 2)])
    assert all(z.values[4] == 0.0 for z in zt)
    assert st.stds[4] == 1.0
    np.testing.assert_allclose(za[0].values, 0.0, atol=1e-12)
    assert za[0].label == 2


def test_standardize_needs_two():
    with pytest.raises(ValueError):
        standardize([vec(np.ones(13))])


# ----------------------------------------------------------------------- CSV

def test_csv_round_trip_exact(tmp_path):
    rng = np.random.default_rng(1)
    vs = [vec(rng.normal(size=13) * 10.0 ** rng.integers(-8, 8), int(rng.integers(1, 3))) for _ in range(20)]
    back = read_feature_csv(write_feature_csv(tmp_path / "f.csv", vs))
    assert back == vs


def test_csv_slash_decimal_fixture(tmp_path):
    p = tmp_path / "sample.csv"
    row = "64/15905,0/574186,0/993547,0/88246,0/8926,11/36519,14/45734,21/0563,2/755188,0/3,0/3,0/4,2,1"
    p.write_text(",".join(F.CSV_HEADER) + "\n" + row + "\n")
    (v,) = read_feature_csv(p)
    assert v.values[0] == 64.15905
    assert v.values[8] == 2.755188 and v.label == 1


def test_csv_bad_row_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    good = ",".join(["1.0"] * 13 + ["1"])
    p.write_text(",".join(F.CSV_HEADER) + "\n" + good + "\n" + good.replace("1.0", "abc", 1) + "\n")
    with pytest.raises(FeatureCsvError, match="row 3"):
        read_feature_csv(p)


def test_csv_wrong_header(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(FeatureCsvError):
        read_feature_csv(p)
