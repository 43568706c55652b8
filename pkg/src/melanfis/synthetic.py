"""Synthetic dermoscopy-like dataset.

Benign lesions are near-circular, single-tone brown disks. Melanoma-like
lesions are jagged, asymmetric blobs with several dark tones (dark brown,
black, blue-grey, red). Both sit on noisy, unevenly lit skin.

A minority of each class is drawn from a harder variant (atypical benign
moles: oval, slightly wavy, two-tone; early melanomas: small, mildly
irregular, few tones) so the two classes overlap somewhat.
"""

import csv
from pathlib import Path

import numpy as np

from .imaging import save_image

SKIN = np.array([214.0, 176.0, 152.0])
BENIGN_TONES = np.array([[150.0, 102.0, 70.0], [125.0, 82.0, 55.0], [168.0, 118.0, 84.0]])
MELANOMA_TONES = np.array([
    [92.0, 60.0, 35.0],    # dark brown
    [35.0, 28.0, 28.0],    # black
    [90.0, 108.0, 138.0],  # blue-grey
    [170.0, 58.0, 55.0],   # red
])
HARD_FRACTION = 0.2


def _skin(rng, size):
    yy, xx = np.mgrid[:size, :size] / size
    base = SKIN + rng.normal(0.0, 8.0, 3)
    tilt = rng.normal(0.0, 10.0, 2)
    light = tilt[0] * (yy - 0.5) + tilt[1] * (xx - 0.5)
    return base[None, None, :] + light[..., None]


def _polar(size, cx, cy):
    yy, xx = np.mgrid[:size, :size].astype(np.float64)
    return np.hypot(xx - cx, yy - cy), np.arctan2(yy - cy, xx - cx), yy, xx


def _wobble(rng, theta, harmonics, lo, hi):
    out = np.zeros_like(theta)
    for k in harmonics:
        out += rng.uniform(lo, hi) * np.cos(k * theta + rng.uniform(0, 2 * np.pi))
    return out


def benign_image(rng, size=320, atypical=None):
    if atypical is None:
        atypical = rng.random() < HARD_FRACTION
    img = _skin(rng, size)
    r0 = rng.uniform(0.10, 0.22) * size
    cx, cy = size / 2 + rng.normal(0, 0.04 * size, 2)
    rad, theta, yy, xx = _polar(size, cx, cy)
    ecc = rng.uniform(1.15, 1.5) if atypical else rng.uniform(1.0, 1.08)
    phi = rng.uniform(0, np.pi)
    boundary = r0 / np.sqrt(np.cos(theta - phi) ** 2 / ecc ** 2 + np.sin(theta - phi) ** 2)
    if atypical:
        boundary *= 1.0 + _wobble(rng, theta, range(2, 6), 0.01, 0.04)
    lesion = rad <= boundary
    tone = BENIGN_TONES[rng.integers(len(BENIGN_TONES))] + rng.normal(0, 6.0, 3)
    img[lesion] = tone
    if atypical:
        # darker eccentric patch
        px, py = cx + rng.normal(0, 0.4 * r0), cy + rng.normal(0, 0.4 * r0)
        patch = lesion & (np.hypot(xx - px, yy - py) < rng.uniform(0.3, 0.6) * r0)
        img[patch] = MELANOMA_TONES[0] + rng.normal(0, 6.0, 3)
    img += rng.normal(0.0, 6.0, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def melanoma_image(rng, size=320, early=None):
    if early is None:
        early = rng.random() < HARD_FRACTION
    img = _skin(rng, size)
    r0 = rng.uniform(0.09, 0.16 if early else 0.26) * size
    cx, cy = size / 2 + rng.normal(0, 0.04 * size, 2)
    rad, theta, yy, xx = _polar(size, cx, cy)
    if early:
        wobble = _wobble(rng, theta, range(2, 7), 0.01, 0.04)
        lobe = rng.uniform(0.0, 0.12)
    else:
        wobble = _wobble(rng, theta, range(2, 9), 0.02, 0.09)
        lobe = rng.uniform(0.15, 0.35)
    # a lopsided lobe breaks mirror symmetry
    lobe_dir = rng.uniform(0, 2 * np.pi)
    wobble += lobe * np.exp(-((np.angle(np.exp(1j * (theta - lobe_dir)))) ** 2) / 0.5)
    lesion = rad <= r0 * (1.0 + wobble)

    n_seeds = rng.integers(2, 4) if early else rng.integers(4, 9)
    seeds = np.column_stack([
        cx + rng.uniform(-r0, r0, n_seeds),
        cy + rng.uniform(-r0, r0, n_seeds),
    ])
    tones = np.vstack([MELANOMA_TONES[0], MELANOMA_TONES[rng.integers(len(MELANOMA_TONES), size=n_seeds - 1)]])
    d2 = (xx[..., None] - seeds[:, 0]) ** 2 + (yy[..., None] - seeds[:, 1]) ** 2
    region = d2.argmin(axis=2)
    img[lesion] = tones[region[lesion]] + rng.normal(0, 4.0, 3)
    img += rng.normal(0.0, 6.0, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate_dataset(out_dir, n_benign=280, n_melanoma=280, size=320, seed=0):
    """Write PNG images plus ``manifest.csv`` (path,label) to ``out_dir``.

    Images alternate benign/melanoma while both remain, so any prefix of the
    manifest is roughly balanced. Returns the manifest path.
    """
    out = Path(out_dir)
    img_dir = out / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    streams = np.random.SeedSequence(seed).spawn(n_benign + n_melanoma)
    labels = []
    b = m = 0
    while b < n_benign or m < n_melanoma:
        if b < n_benign and (b <= m or m >= n_melanoma):
            labels.append(1)
            b += 1
        else:
            labels.append(2)
            m += 1
    rows = []
    for i, (label, ss) in enumerate(zip(labels, streams)):
        rng = np.random.default_rng(ss)
        img = benign_image(rng, size) if label == 1 else melanoma_image(rng, size)
        name = f"synthetic_{i:04d}_{'benign' if label == 1 else 'melanoma'}.png"
        save_image(img, img_dir / name)
        rows.append((f"images/{name}", label))
    manifest = out / "manifest.csv"
    with manifest.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label"])
        w.writerows(rows)
    return manifest
