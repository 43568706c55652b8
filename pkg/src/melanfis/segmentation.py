"""Lesion segmentation: seeded k-means on pixel colours, Otsu thresholding,
morphological cleanup and largest-component selection."""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError, SegmentationError
from .imaging import LUMA_WEIGHTS, as_rgb, to_gray

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class LesionMask:
    bits: np.ndarray
    component_count: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {bits.shape}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits, dtype=bool)
        _, n = ndimage.label(bits, structure=FOUR_CONNECTED)
        return cls(bits, int(n))

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def area(self):
        return int(self.bits.sum())


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    n_iter: int = 0
    # inertia after every assignment step of the winning restart
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class SegmentationConfig:
    kmeans_seed: int = 0
    combine: str = "intersect"
    morph_element: int = 3
    kmeans_max_iter: int = 100
    kmeans_n_init: int = 1

    def __post_init__(self):
        if self.combine not in ("intersect", "union"):
            raise ValueError(f"combine must be 'intersect' or 'union', got {self.combine!r}")
        if self.morph_element < 1:
            raise ValueError("morph_element must be >= 1")


def _sq_dists(x, centroids):
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _plus_plus_init(x, k, rng):
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    d2 = _sq_dists(x, centroids[:1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centroids[j] = x[idx]
        d2 = np.minimum(d2, _sq_dists(x, centroids[j:j + 1])[:, 0])
    return centroids


def _lloyd(x, centroids, max_iter):
    d2 = _sq_dists(x, centroids)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(x)), labels].sum())
    history = [inertia]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new = np.empty_like(centroids)
        for j in range(len(centroids)):
            members = labels == j
            if members.any():
                new[j] = x[members].mean(axis=0)
            else:
                # empty cluster: jump to the sample farthest from the old centroid
                far = _sq_dists(x, centroids[j:j + 1])[:, 0].argmax()
                new[j] = x[far]
        centroids = new
        d2 = _sq_dists(x, centroids)
        new_labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(len(x)), new_labels].sum())
        history.append(inertia)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centroids, labels, inertia, n_iter, history


def kmeans(samples, k, max_iter=100, seed=0, n_init=1):
    """Lloyd's k-means from k-means++ seeding.

    With ``n_init > 1`` the restart with the lowest inertia wins (first one
    on ties). Fully determined by ``seed``.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if x.shape[0] < k:
        raise ValueError(f"need at least k={k} samples, got {x.shape[0]}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        init = _plus_plus_init(x, k, rng)
        c, labels, inertia, n_iter, hist = _lloyd(x, init, max_iter)
        if best is None or inertia < best.inertia:
            best = KMeansResult(c, labels, inertia, n_iter, hist)
    return best


def threshold_otsu(gray):
    """Otsu threshold on a 256-bin histogram of a [0, 1] raster.

    Returns a value in (0, 1); pixels strictly below it form the dark class.
    Exact ties between candidate bins resolve to the lowest maximising run
    of bins, and the threshold is placed at the middle of that run.
    """
    g = np.asarray(gray, dtype=np.float64)
    levels = np.clip(np.rint(g.ravel() * 255), 0, 255).astype(np.intp)
    hist = np.bincount(levels, minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateInputError("Otsu threshold needs at least two distinct grey levels")
    total = hist.sum()
    idx = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)[:-1]
    s0 = np.cumsum(hist * idx)[:-1]
    w1 = total - w0
    s1 = (hist * idx).sum() - s0
    valid = (w0 > 0) & (w1 > 0)
    between = np.full(255, -np.inf)
    mu0 = s0[valid] / w0[valid]
    mu1 = s1[valid] / w1[valid]
    between[valid] = w0[valid] * w1[valid] * (mu0 - mu1) ** 2
    best = between.max()
    is_max = between >= best * (1 - 1e-12)
    lo = int(np.argmax(is_max))
    hi = lo
    while hi + 1 < 255 and is_max[hi + 1]:
        hi += 1
    # dark class = levels <= t; cut halfway to the next level
    return ((lo + hi) / 2 + 0.5) / 255.0


def largest_component(mask, image_id="<unknown>"):
    """Keep the largest 4-connected component; ties go to the component
    reached first in row-major scan order."""
    bits = mask.bits if isinstance(mask, LesionMask) else np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(bits, structure=FOUR_CONNECTED)
    if n == 0:
        raise SegmentationError(image_id, "mask has no foreground pixels")
    sizes = np.bincount(labels.ravel())[1:]
    # ndimage numbers components in scan order of their first pixel
    keep = int(np.argmax(sizes)) + 1
    return LesionMask(labels == keep, 1)


def _square(size):
    return np.ones((size, size), dtype=bool)


def lesion_mask(img, cfg=None, image_id="<unknown>"):
    """Binary lesion mask for a preprocessed RGB raster."""
    cfg = cfg or SegmentationConfig()
    rgb = as_rgb(img)
    h, w = rgb.shape[:2]
    pixels = rgb.reshape(-1, 3).astype(np.float64)

    km = kmeans(pixels, 2, max_iter=cfg.kmeans_max_iter, seed=cfg.kmeans_seed,
                n_init=cfg.kmeans_n_init)
    luma = km.centroids @ np.asarray(LUMA_WEIGHTS)
    if np.isclose(luma[0], luma[1], rtol=0, atol=1e-9):
        raise SegmentationError(image_id, "colour clusters are indistinguishable")
    dark_cluster = (km.assignments == int(np.argmin(luma))).reshape(h, w)

    gray = to_gray(rgb)
    try:
        thr = threshold_otsu(gray)
    except DegenerateInputError as exc:
        raise SegmentationError(image_id, str(exc)) from exc
    below = gray < thr

    if cfg.combine == "intersect":
        candidate = dark_cluster & below
    else:
        candidate = dark_cluster | below

    element = _square(cfg.morph_element)
    candidate = ndimage.binary_opening(candidate, structure=element)
    candidate = ndimage.binary_closing(candidate, structure=element)
    if not candidate.any():
        raise SegmentationError(image_id, "no lesion pixels after morphological cleanup")
    single = largest_component(candidate, image_id=image_id)
    filled = ndimage.binary_fill_holes(single.bits)
    return LesionMask(filled, 1)
