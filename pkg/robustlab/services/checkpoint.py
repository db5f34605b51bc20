"""
Binary checkpoint persistence.

Layout (little-endian):

    b"CRBT"  u16 version
    u32 descriptor length, UTF-8 JSON {"architecture": ..., "seed": ...}
    u32 parameter count, then per tensor:
        u16 name length, name, u8 rank, rank x u32 dims, float32 payload
    u32 velocity count, then velocity records in the same layout
"""

import io
import json
import logging
import struct
from typing import BinaryIO, Dict, List, Tuple

import numpy as np
from pydantic import ValidationError

from robustlab.core.config import settings
from robustlab.core.exceptions import (
    BadMagicError,
    CheckpointFormatError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from robustlab.models.architecture import Architecture
from robustlab.services.network import HEAD_NAMES, ModelBundle, init_bundle

logger = logging.getLogger(__name__)

MAX_RANK = 8


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, count: int, what: str) -> bytes:
        end = self.offset + count
        if end > len(self.data):
            raise TruncatedCheckpointError(
                f"Checkpoint truncated while reading {what} (needed {count} bytes at offset {self.offset}, "
                f"file has {len(self.data)})"
            )
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _write_record(out: BinaryIO, name: str, array: np.ndarray) -> None:
    encoded = name.encode("utf-8")
    out.write(struct.pack("<H", len(encoded)))
    out.write(encoded)
    out.write(struct.pack("<B", array.ndim))
    out.write(struct.pack(f"<{array.ndim}I", *array.shape))
    out.write(np.ascontiguousarray(array, dtype="<f4").tobytes())


def _read_record(reader: _Reader) -> Tuple[str, np.ndarray]:
    (name_length,) = reader.unpack("<H", "record name length")
    try:
        name = reader.take(name_length, "record name").decode("utf-8")
    except UnicodeDecodeError as e:
        raise CheckpointFormatError(f"Record name is not valid UTF-8: {e}") from e
    (rank,) = reader.unpack("<B", f"rank of {name}")
    if rank > MAX_RANK:
        raise CheckpointFormatError(f"Record {name} declares rank {rank}")
    dims = reader.unpack(f"<{rank}I", f"dims of {name}") if rank else ()
    count = int(np.prod(dims)) if dims else 1
    payload = reader.take(4 * count, f"payload of {name}")
    array = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(dims)
    return name, array


def serialize_bundle(bundle: ModelBundle) -> bytes:
    out = io.BytesIO()
    out.write(settings.CHECKPOINT_MAGIC)
    out.write(struct.pack("<H", settings.CHECKPOINT_VERSION))

    descriptor = json.dumps(
        {"architecture": bundle.architecture.model_dump(mode="json"), "seed": bundle.seed}, sort_keys=True
    ).encode("utf-8")
    out.write(struct.pack("<I", len(descriptor)))
    out.write(descriptor)

    tensors = list(bundle.named_tensors())
    out.write(struct.pack("<I", len(tensors)))
    for name, tensor in tensors:
        _write_record(out, name, tensor.data)

    velocity: List[Tuple[str, np.ndarray]] = []
    for head, params in bundle.heads().items():
        for name, _ in params.named_tensors():
            if name in params.velocity:
                velocity.append((f"{head}.{name}", params.velocity[name]))
    out.write(struct.pack("<I", len(velocity)))
    for name, array in velocity:
        _write_record(out, name, array)
    return out.getvalue()


def save_checkpoint(bundle: ModelBundle, path: str) -> str:
    """
    Write ``bundle`` (parameters and momentum buffers) to ``path``.

    Args:
        bundle: model to persist
        path: destination file

    Returns:
        The path written
    """
    payload = serialize_bundle(bundle)
    with open(path, "wb") as f:
        f.write(payload)
    logger.info(f"Saved checkpoint with {bundle.parameter_count()} parameters to {path}")
    return path


def _split_name(name: str) -> Tuple[str, str]:
    head, _, rest = name.partition(".")
    if head not in HEAD_NAMES or not rest:
        raise CheckpointFormatError(f"Unknown parameter record {name!r}")
    return head, rest


def deserialize_bundle(data: bytes) -> ModelBundle:
    reader = _Reader(data)
    magic = reader.take(len(settings.CHECKPOINT_MAGIC), "magic")
    if magic != settings.CHECKPOINT_MAGIC:
        raise BadMagicError(f"Not a checkpoint: magic {magic!r}")
    (version,) = reader.unpack("<H", "version")
    if version != settings.CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"Checkpoint format version {version}, this build reads version {settings.CHECKPOINT_VERSION}"
        )

    (descriptor_length,) = reader.unpack("<I", "descriptor length")
    raw = reader.take(descriptor_length, "architecture descriptor")
    try:
        descriptor = json.loads(raw.decode("utf-8"))
        architecture = Architecture(**descriptor["architecture"])
        seed = int(descriptor["seed"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as e:
        raise CheckpointFormatError(f"Invalid architecture descriptor: {e}") from e

    bundle = init_bundle(architecture, seed=seed)
    expected = dict(bundle.named_tensors())

    (count,) = reader.unpack("<I", "parameter count")
    if count != len(expected):
        raise CheckpointFormatError(f"Checkpoint holds {count} parameter tensors, architecture needs {len(expected)}")
    seen: Dict[str, bool] = {}
    for _ in range(count):
        name, array = _read_record(reader)
        if name not in expected or name in seen:
            raise CheckpointFormatError(f"Unexpected parameter record {name!r}")
        if array.shape != expected[name].shape:
            raise CheckpointFormatError(
                f"Parameter {name} has shape {array.shape}, architecture needs {expected[name].shape}"
            )
        expected[name].data = array
        seen[name] = True

    (velocity_count,) = reader.unpack("<I", "velocity count")
    heads = bundle.heads()
    for _ in range(velocity_count):
        name, array = _read_record(reader)
        if name not in expected or array.shape != expected[name].shape:
            raise CheckpointFormatError(f"Velocity record {name!r} does not match any parameter")
        head, tensor_name = _split_name(name)
        heads[head].velocity[tensor_name] = array

    if reader.offset != len(data):
        raise CheckpointFormatError(f"{len(data) - reader.offset} trailing bytes after the last record")
    return bundle


def load_checkpoint(path: str) -> ModelBundle:
    """
    Read a bundle written by ``save_checkpoint``.

    Raises:
        BadMagicError, VersionMismatchError, TruncatedCheckpointError, CheckpointFormatError
    """
    with open(path, "rb") as f:
        data = f.read()
    try:
        bundle = deserialize_bundle(data)
    except Exception as e:
        logger.error(f"Failed to load checkpoint {path}: {e}")
        raise
    logger.info(f"Loaded checkpoint {path} ({bundle.parameter_count()} parameters)")
    return bundle
