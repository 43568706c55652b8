"""ABCD lesion features.

Thirteen real-valued features are computed per lesion, always in the order
of ``FEATURE_NAMES``. Masks are ``LesionMask`` objects or 2-D boolean arrays.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .imaging import as_rgb, to_gray
from .segmentation import LesionMask

FEATURE_NAMES = (
    "diameter",
    "sphericity",
    "irregularity_index",
    "asymmetry",
    "edge_uniformity",
    "var_r",
    "var_g",
    "var_b",
    "ratio_r",
    "ratio_g",
    "ratio_b",
    "brightness_difference",
    "color_count",
)
CSV_HEADER = (
    "diameter", "sphericity", "irregularity", "asymmetry", "edge_uniformity",
    "var_r", "var_g", "var_b", "ratio_r", "ratio_g", "ratio_b",
    "brightness_diff", "color_count", "label",
)
N_FEATURES = len(FEATURE_NAMES)

REFERENCE_COLORS = {
    "white": (255, 255, 255),
    "red": (204, 51, 51),
    "light_brown": (181, 134, 84),
    "dark_brown": (91, 60, 17),
    "blue_gray": (90, 110, 140),
    "black": (30, 30, 30),
}
COLOR_DISTANCE = 60.0
COLOR_COVERAGE = 0.05

# steps averaged when measuring boundary length
CHAIN_WINDOW = 4

# 8-neighbourhood, clockwise starting from west; entries are (drow, dcol)
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))


@dataclass(frozen=True)
class FeatureVector:
    values: tuple
    label: Optional[int] = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} feature values, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("feature values must be finite")
        if self.label is not None and self.label not in (1, 2):
            raise ValueError(f"label must be 1 or 2, got {self.label!r}")
        object.__setattr__(self, "values", vals)

    def as_dict(self):
        return dict(zip(FEATURE_NAMES, self.values))


@dataclass(frozen=True)
class MaskGeometry:
    area: int
    perimeter: float
    centroid: tuple  # (x, y) = (column, row)
    principal_axis_angle: float


def _bits(mask):
    return mask.bits if isinstance(mask, LesionMask) else np.asarray(mask, dtype=bool)


def trace_boundary(mask):
    """Moore-neighbour trace of the outer boundary of the first component.

    Returns the list of chain directions (indices into the clockwise
    8-neighbourhood starting at west). A single pixel yields an empty chain.
    """
    padded = np.pad(_bits(mask), 1)
    rows, cols = np.nonzero(padded)
    if rows.size == 0:
        raise ValueError("cannot trace an empty mask")
    start = (int(rows[0]), int(cols[0]))

    def step(p, back):
        for k in range(1, 9):
            d = (back + k) % 8
            q = (p[0] + _MOORE[d][0], p[1] + _MOORE[d][1])
            if padded[q]:
                return d, q
        return None, None

    # the scan-order first pixel always has background to its west
    first_dir, _ = step(start, 0)
    if first_dir is None:
        return []
    chain = []
    p, back = start, 0
    while True:
        d, q = step(p, back)
        if chain and p == start and d == first_dir:
            break
        chain.append(d)
        prev = (d - 1) % 8
        b = (p[0] + _MOORE[prev][0] - q[0], p[1] + _MOORE[prev][1] - q[1])
        back = _MOORE.index(b)
        p = q
    return chain


def chain_length(chain, window=CHAIN_WINDOW):
    """Boundary length from a chain code.

    Each step is replaced by the mean of ``window`` consecutive step vectors
    (cyclically) before summing lengths, which straightens digital
    staircases while keeping true corners. Pi is added for the half-pixel
    offset from pixel centres to the lesion's outer edge.
    """
    if not chain:
        return math.pi
    v = np.array([_MOORE[d] for d in chain], dtype=np.float64)
    n = len(v)
    c = np.cumsum(np.vstack([np.zeros((1, 2)), v[np.arange(n + window) % n]]), axis=0)
    mean = (c[window:window + n] - c[:n]) / window
    return float(np.sqrt((mean ** 2).sum(axis=1)).sum()) + math.pi


def mask_geometry(mask):
    bits = _bits(mask)
    rows, cols = np.nonzero(bits)
    area = int(rows.size)
    if area == 0:
        raise ValueError("mask is empty")
    cx, cy = float(cols.mean()), float(rows.mean())
    dx, dy = cols - cx, rows - cy
    mu20, mu02, mu11 = float((dx * dx).mean()), float((dy * dy).mean()), float((dx * dy).mean())
    angle = 0.5 * math.atan2(2.0 * mu11, mu20 - mu02)
    if angle >= math.pi / 2:
        angle -= math.pi
    return MaskGeometry(area, chain_length(trace_boundary(bits)), (cx, cy), angle)


def diameter(geom):
    """Equivalent-circle diameter in pixels."""
    return 2.0 * math.sqrt(geom.area / math.pi)


def _reciprocal_pair(s):
    # nudge s by a few ulps until s * (1/s) rounds to exactly 1
    for _ in range(64):
        r = 1.0 / s
        if s * r == 1.0:
            return s, r
        s = math.nextafter(s, 0.0)
    return s, 1.0 / s


def sphericity(geom):
    s = 4.0 * math.pi * geom.area / geom.perimeter ** 2
    return _reciprocal_pair(min(s, 1.0))[0]


def irregularity_index(geom):
    """Perimeter^2 / (4 pi area); the exact reciprocal of sphericity."""
    return _reciprocal_pair(sphericity(geom))[1]


def _reflected_xor(bits, centre, direction):
    h, w = bits.shape
    rows, cols = np.nonzero(bits)
    cx, cy = centre
    reach = math.ceil(float(np.hypot(cols - cx, rows - cy).max())) + 2
    r0, r1 = int(math.floor(cy)) - reach, int(math.ceil(cy)) + reach + 1
    c0, c1 = int(math.floor(cx)) - reach, int(math.ceil(cx)) + reach + 1
    yy, xx = np.mgrid[r0:r1, c0:c1]

    def sample(r, c):
        inside = (r >= 0) & (r < h) & (c >= 0) & (c < w)
        out = np.zeros(r.shape, dtype=bool)
        out[inside] = bits[r[inside], c[inside]]
        return out

    ux, uy = direction
    px, py = xx - cx, yy - cy
    proj = px * ux + py * uy
    # reflection is an involution, so sampling at the mirrored point gives R(M)
    mx = np.rint(cx + 2 * proj * ux - px).astype(np.intp)
    my = np.rint(cy + 2 * proj * uy - py).astype(np.intp)
    original = sample(yy, xx)
    mirrored = sample(my, mx)
    return int(np.count_nonzero(original ^ mirrored))


def asymmetry(mask, geom=None):
    """Mean XOR area fraction after mirroring about the principal axis and
    its perpendicular, both through the centroid. 0 means symmetric."""
    bits = _bits(mask)
    geom = geom or mask_geometry(bits)
    t = geom.principal_axis_angle
    axes = ((math.cos(t), math.sin(t)), (-math.sin(t), math.cos(t)))
    fractions = [_reflected_xor(bits, geom.centroid, a) / geom.area for a in axes]
    return float(min(1.0, max(0.0, sum(fractions) / 2.0)))


def boundary_pixels(mask):
    """(row, col) of lesion pixels with at least one 4-neighbour outside."""
    bits = _bits(mask)
    p = np.pad(bits, 1)
    interior = p[1:-1, 1:-1] & p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return np.nonzero(bits & ~interior)


def edge_uniformity(mask, gray=None):
    """Squared coefficient of variation of centroid-to-boundary distances."""
    bits = _bits(mask)
    if gray is not None and np.shape(gray) != bits.shape:
        raise ValueError(f"gray raster shape {np.shape(gray)} does not match mask {bits.shape}")
    rows, cols = np.nonzero(bits)
    if rows.size == 0:
        raise ValueError("mask is empty")
    cy, cx = rows.mean(), cols.mean()
    br, bc = boundary_pixels(bits)
    radius = np.hypot(bc - cx, br - cy)
    mean = radius.mean()
    if mean == 0:
        return 0.0
    return float(radius.var() / mean ** 2)


def color_stats(img, mask):
    """Returns (var_r, var_g, var_b, ratio_r, ratio_g, ratio_b, color_count)."""
    rgb = as_rgb(img)
    bits = _bits(mask)
    if rgb.shape[:2] != bits.shape:
        raise ValueError(f"image {rgb.shape[:2]} and mask {bits.shape} differ in size")
    px = rgb[bits].astype(np.float64)
    if px.shape[0] == 0:
        raise ValueError("mask is empty")
    var = px.var(axis=0)
    means = px.mean(axis=0)
    total = float(means.sum())
    if total == 0.0:
        ratio_r = ratio_g = 1.0 / 3.0
    else:
        ratio_r, ratio_g = means[0] / total, means[1] / total
    # defined as the complement so the three ratios sum to exactly 1
    ratio_b = 1.0 - (ratio_r + ratio_g)

    refs = np.array(list(REFERENCE_COLORS.values()), dtype=np.float64)
    dist = np.sqrt(((px[:, None, :] - refs[None, :, :]) ** 2).sum(axis=2))
    coverage = (dist <= COLOR_DISTANCE).mean(axis=0)
    count = int(np.count_nonzero(coverage >= COLOR_COVERAGE))
    return (float(var[0]), float(var[1]), float(var[2]),
            float(ratio_r), float(ratio_g), float(ratio_b), float(count))


def brightness_difference(gray, mask):
    """Mean background grey minus mean lesion grey."""
    g = np.asarray(gray, dtype=np.float64)
    bits = _bits(mask)
    if g.shape != bits.shape:
        raise ValueError(f"gray raster {g.shape} and mask {bits.shape} differ in size")
    if not bits.any():
        raise ValueError("mask is empty")
    if bits.all():
        raise ValueError("mask covers the whole image; no background to compare against")
    return float(g[~bits].mean() - g[bits].mean())


def extract_features(img, mask, label=None):
    rgb = as_rgb(img)
    bits = _bits(mask)
    gray = to_gray(rgb)
    geom = mask_geometry(bits)
    colors = color_stats(rgb, bits)
    values = (
        diameter(geom),
        sphericity(geom),
        irregularity_index(geom),
        asymmetry(bits, geom),
        edge_uniformity(bits, gray),
        *colors[:6],
        brightness_difference(gray, bits),
        colors[6],
    )
    return FeatureVector(values, label)


# --------------------------------------------------------------- standardize

@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, x):
        return (np.asarray(x, dtype=np.float64) - self.means) / self.stds


def to_matrix(vectors: Sequence[FeatureVector]):
    """Stack feature vectors into ``(X, y)``; ``y`` holds None for unlabeled rows."""
    x = np.array([v.values for v in vectors], dtype=np.float64).reshape(-1, N_FEATURES)
    y = [v.label for v in vectors]
    return x, y


def fit_standardizer(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError(f"standardization needs >= 2 training vectors, got {x.shape[0]}")
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    stds = np.where(stds > 0, stds, 1.0)
    return Standardizer(means, stds)


def standardize(train, apply_to=()):
    """z-score both sets using statistics of ``train`` only.

    Returns ``(train_z, apply_z, standardizer)`` where the first two are
    lists of FeatureVector with labels preserved.
    """
    xt, yt = to_matrix(train)
    st = fit_standardizer(xt)
    zt = [FeatureVector(row, lab) for row, lab in zip(st.transform(xt), yt)]
    if len(apply_to):
        xa, ya = to_matrix(apply_to)
        za = [FeatureVector(row, lab) for row, lab in zip(st.transform(xa), ya)]
    else:
        za = []
    return zt, za, st


# ----------------------------------------------------------------------- CSV

def parse_decimal(text):
    """Parse a number that may use '/' as its decimal separator ("64/15905")."""
    return float(text.strip().replace("/", "."))


def write_feature_csv(path, vectors):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for v in vectors:
            w.writerow([repr(x) for x in v.values] + ["" if v.label is None else v.label])
    return path


class FeatureCsvError(ValueError):
    pass


def read_feature_csv(path):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise FeatureCsvError(f"{path}: header does not match {','.join(CSV_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise FeatureCsvError(f"{path}: row {lineno} has {len(row)} columns, expected {len(CSV_HEADER)}")
            try:
                values = [parse_decimal(c) for c in row[:N_FEATURES]]
                label = int(row[-1]) if row[-1].strip() else None
                out.append(FeatureVector(values, label))
            except ValueError as exc:
                raise FeatureCsvError(f"{path}: row {lineno}: {exc}") from exc
    return out
