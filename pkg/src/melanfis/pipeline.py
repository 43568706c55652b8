"""Image-to-feature pipeline and dataset manifests."""

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

from .features import extract_features
from .imaging import load_image, preprocess
from .segmentation import lesion_mask

log = logging.getLogger(__name__)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Manifest:
    entries: Tuple[Tuple[Path, int], ...]
    source: str = ""

    def __len__(self):
        return len(self.entries)

    def class_counts(self):
        counts = {1: 0, 2: 0}
        for _, label in self.entries:
            counts[label] += 1
        return counts


def read_manifest(path, source=""):
    """Parse a ``path,label`` CSV. Relative image paths resolve against the
    manifest's directory."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
            raise ManifestError(f"{path}: expected header 'path,label'")
        entries, seen = [], set()
        for lineno, row in enumerate(reader, start=2):
            if not row or not row[0].strip():
                continue
            if len(row) < 2:
                raise ManifestError(f"{path}: row {lineno} is missing the label column")
            img = Path(row[0].strip())
            if not img.is_absolute():
                img = path.parent / img
            try:
                label = int(row[1])
            except ValueError:
                raise ManifestError(f"{path}: row {lineno} has non-integer label {row[1]!r}") from None
            if label not in (1, 2):
                raise ManifestError(f"{path}: row {lineno} has label {label}, expected 1 or 2")
            if img in seen:
                raise ManifestError(f"{path}: duplicate image path {img}")
            seen.add(img)
            entries.append((img, label))
    return Manifest(tuple(entries), source or path.name)


def extract_one(image_path, label, cfg):
    img = load_image(image_path)
    img = preprocess(img, size=cfg.image_size, window=cfg.median_window)
    mask = lesion_mask(img, cfg.segmentation, image_id=str(image_path))
    return extract_features(img, mask, label)


def _extract_job(args):
    image_path, label, cfg = args
    try:
        return extract_one(image_path, label, cfg), None
    except Exception as exc:  # per-image failures are reported, not fatal
        return None, f"{type(exc).__name__}: {exc}"


@dataclass
class ExtractionResult:
    vectors: List
    paths: List[Path]
    errors: List[Tuple[Path, str]]


def extract_manifest(manifest, cfg, jobs=1):
    """Extract features for every manifest entry, in manifest order."""
    work = [(p, label, cfg) for p, label in manifest.entries]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_job, work, chunksize=4))
    else:
        results = [_extract_job(w) for w in work]
    vectors, paths, errors = [], [], []
    for (p, _, _), (vec, err) in zip(work, results):
        if err is None:
            vectors.append(vec)
            paths.append(p)
        else:
            log.warning("skipping %s: %s", p, err)
            errors.append((p, err))
    return ExtractionResult(vectors, paths, errors)


def write_errors_csv(path, errors, root=None):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "error"])
        for p, err in errors:
            w.writerow([_display(p, root), err])


def _display(p, root):
    if root is not None:
        try:
            return str(Path(p).relative_to(root))
        except ValueError:
            pass
    return str(p)
