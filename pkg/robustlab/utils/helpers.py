import hashlib
import json
import logging
import os
from typing import Any

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def sha256_file(path: str) -> str:
    """Hex SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_array(array: np.ndarray) -> str:
    digest = hashlib.sha256()
    digest.update(str(array.shape).encode())
    digest.update(np.ascontiguousarray(array).tobytes())
    return digest.hexdigest()


def derive_seed(base: int, *keys: int) -> int:
    """
    Deterministic 64-bit child seed of ``base`` for the given integer keys.

    Args:
        base: parent seed
        keys: any number of non-negative integers (image index, stream, epoch...)

    Returns:
        Seed in [0, 2**64)
    """
    sequence = np.random.SeedSequence([int(base)] + [int(k) for k in keys])
    return int(sequence.generate_state(1, np.uint64)[0])


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for ``(seed, stream)``; streams never overlap."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_json(path: str, payload: Any) -> str:
    """Write a pydantic model or plain data as indented, key-sorted JSON."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    directory = os.path.dirname(path)
    if directory:
        ensure_dir(directory)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"Wrote {path}")
    return path


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def to_uint8(images: np.ndarray) -> np.ndarray:
    """Round [0, 1] floats to 8-bit pixel values."""
    return np.round(np.clip(images, 0.0, 1.0) * 255.0).astype(np.uint8)


def quantize_8bit(images: np.ndarray) -> np.ndarray:
    """Float32 images as they come back after a PNG write and read."""
    return to_uint8(images).astype(np.float32) / np.float32(255.0)
