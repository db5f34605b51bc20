"""
Image datasets on disk: a folder of PNG/PPM files plus a CSV manifest.

manifest.csv::

    # classes: circle,square,triangle
    # image_shape: 32,32,3
    path,label
    images/000000.png,0
    images/000001.png,2

Pixels are loaded as ``uint8 / 255`` in float32; images are always written as PNG.
"""

import csv
import io
import logging
import os
from typing import Dict, List, Tuple

import numpy as np
from PIL import Image

from robustlab.core.exceptions import (
    ConfigurationError,
    DatasetError,
    ImageShapeError,
    ManifestLabelError,
    MissingImageError,
)
from robustlab.models.dataset import Dataset, DatasetManifest, ManifestEntry
from robustlab.utils.helpers import ensure_dir, sha256_array, to_uint8

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.csv"
SUPPORTED_FORMATS = ("PNG", "PPM")
_HEADER = ["path", "label"]


def dataset_id(root: str, images: np.ndarray) -> str:
    """Folder name plus a short content hash of the pixels."""
    name = os.path.basename(os.path.normpath(root)) or "dataset"
    return f"{name}-{sha256_array(images)[:12]}"


def read_manifest(path: str) -> DatasetManifest:
    """
    Parse a manifest file.

    Raises:
        MissingImageError: the manifest itself does not exist
        DatasetError: missing header metadata or malformed lines
        ManifestLabelError: a label outside the class table (with its line number)
    """
    if not os.path.isfile(path):
        raise MissingImageError(path)

    meta: Dict[str, str] = {}
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                key, _, value = stripped[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            rows.append((line_number, stripped))

    if "classes" not in meta or "image_shape" not in meta:
        raise DatasetError(f"{path}: header must declare '# classes:' and '# image_shape:'")
    class_names = [c.strip() for c in meta["classes"].split(",") if c.strip()]
    try:
        image_shape = tuple(int(v) for v in meta["image_shape"].split(","))
    except ValueError:
        raise DatasetError(f"{path}: bad image_shape {meta['image_shape']!r}")
    if len(image_shape) != 3:
        raise DatasetError(f"{path}: image_shape must have three values, got {meta['image_shape']!r}")

    entries: List[ManifestEntry] = []
    for line_number, text in rows:
        fields = next(csv.reader(io.StringIO(text)))
        if fields == _HEADER:
            continue
        if len(fields) != 2:
            raise DatasetError(f"{path}:{line_number}: expected 'path,label', got {text!r}")
        try:
            label = int(fields[1])
        except ValueError:
            raise DatasetError(f"{path}:{line_number}: label {fields[1]!r} is not an integer")
        if not 0 <= label < len(class_names):
            raise ManifestLabelError(line_number, label, len(class_names))
        entries.append(ManifestEntry(path=fields[0].strip(), label=label))

    return DatasetManifest(entries=entries, class_names=class_names, image_shape=image_shape)


def write_manifest(path: str, manifest: DatasetManifest) -> str:
    directory = os.path.dirname(path)
    if directory:
        ensure_dir(directory)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# classes: {','.join(manifest.class_names)}\n")
        f.write(f"# image_shape: {','.join(str(v) for v in manifest.image_shape)}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_HEADER)
        for entry in manifest.entries:
            writer.writerow([entry.path, entry.label])
    return path


def load_image(path: str) -> np.ndarray:
    """
    Decode one PNG or binary PPM file to float32 RGB in [0, 1].

    Raises:
        MissingImageError: the file does not exist
        DatasetError: the file is not PNG or PPM
    """
    if not os.path.isfile(path):
        raise MissingImageError(path)
    with Image.open(path) as img:
        if img.format not in SUPPORTED_FORMATS:
            raise DatasetError(f"{path}: unsupported image format {img.format}, expected PNG or PPM")
        pixels = np.asarray(img)
    if pixels.dtype != np.uint8:
        raise DatasetError(f"{path}: expected 8-bit pixels, got {pixels.dtype}")
    return pixels.astype(np.float32) / np.float32(255.0)


def load_dataset(root: str, manifest: str = MANIFEST_NAME) -> Dataset:
    """
    Load every image listed in ``<root>/<manifest>``.

    Args:
        root: dataset directory; manifest paths are relative to it
        manifest: manifest file name

    Returns:
        Dataset in manifest order

    Raises:
        MissingImageError: a listed image does not exist
        ImageShapeError: an image differs from the declared shape
        ManifestLabelError: a label outside the class table
    """
    parsed = read_manifest(os.path.join(root, manifest))
    images = np.empty((len(parsed.entries),) + tuple(parsed.image_shape), dtype=np.float32)
    for i, entry in enumerate(parsed.entries):
        path = os.path.join(root, entry.path)
        pixels = load_image(path)
        if pixels.shape != tuple(parsed.image_shape):
            raise ImageShapeError(path, parsed.image_shape, pixels.shape)
        images[i] = pixels

    labels = np.array([e.label for e in parsed.entries], dtype=np.int64)
    dataset = Dataset(
        images=images,
        labels=labels,
        class_names=list(parsed.class_names),
        dataset_id=dataset_id(root, images),
        paths=[e.path for e in parsed.entries],
    )
    logger.info(f"Loaded {len(dataset)} images ({dataset.num_classes} classes) from {root}")
    return dataset


def _png_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".png"


def save_dataset(dataset: Dataset, root: str, manifest: str = MANIFEST_NAME) -> str:
    """
    Write the images as 8-bit PNGs plus a manifest; reloading gives the quantized pixels.

    Returns:
        Path of the written manifest
    """
    ensure_dir(root)
    paths = [_png_path(p) for p in dataset.paths] if dataset.paths else [
        os.path.join("images", f"{i:06d}.png") for i in range(len(dataset))
    ]
    pixels = to_uint8(dataset.images)
    for rel, image in zip(paths, pixels):
        target = os.path.join(root, rel)
        ensure_dir(os.path.dirname(target))
        Image.fromarray(image).save(target, format="PNG")

    parsed = DatasetManifest(
        entries=[ManifestEntry(path=p, label=int(l)) for p, l in zip(paths, dataset.labels)],
        class_names=list(dataset.class_names),
        image_shape=dataset.image_shape,
    )
    manifest_path = write_manifest(os.path.join(root, manifest), parsed)
    logger.info(f"Wrote {len(dataset)} images to {root}")
    return manifest_path


def split_dataset(dataset: Dataset, test_per_class: int) -> Tuple[Dataset, Dataset]:
    """
    Hold out the last ``test_per_class`` images of every class.

    Raises:
        ConfigurationError: a class has too few images to leave a training example
    """
    if test_per_class < 1:
        raise ConfigurationError(f"test_per_class must be at least 1, got {test_per_class}")
    test_idx: List[int] = []
    for label in range(dataset.num_classes):
        members = np.flatnonzero(dataset.labels == label)
        if len(members) <= test_per_class:
            raise ConfigurationError(
                f"class {dataset.class_names[label]} has {len(members)} images, cannot hold out {test_per_class}"
            )
        test_idx.extend(members[-test_per_class:].tolist())
    test_mask = np.zeros(len(dataset), dtype=bool)
    test_mask[test_idx] = True
    train = dataset.subset(np.flatnonzero(~test_mask), dataset_id=f"{dataset.dataset_id}-train")
    test = dataset.subset(np.flatnonzero(test_mask), dataset_id=f"{dataset.dataset_id}-test")
    return train, test
