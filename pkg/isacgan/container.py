# isacgan/container.py

"""
ISACGAN - Versioned container files for datasets and checkpoints.

Layout:
    ISACGAN\\n
    <one-line JSON header>\\n
    <payload: every array as little-endian float64, C order, in header order>

The header carries the kind, the format version, free-form metadata, the
array manifest (name + shape), the payload length and a SHA-256 computed
over the canonical header body and the payload, so any edit to either is
detected on load.
"""
import hashlib
import json
import logging
import os

import numpy as np

from isacgan.errors import ContainerFormatError, FormatVersionError, IntegrityError
from isacgan.utils import canonical_json

logger = logging.getLogger(__name__)

MAGIC = b"ISACGAN\n"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


def _digest(kind: str, metadata: dict, manifest: list, payload: bytes) -> str:
    body = canonical_json({"kind": kind, "metadata": metadata, "arrays": manifest})
    return hashlib.sha256(body.encode("utf-8") + payload).hexdigest()


def write_container(path: str, kind: str, metadata: dict, arrays: dict[str, np.ndarray]):
    """Writes `arrays` (cast to float64) and `metadata` atomically to `path`."""
    manifest, chunks = [], []
    for name, array in arrays.items():
        array = np.ascontiguousarray(array, dtype=_DTYPE)
        manifest.append({"name": name, "shape": list(array.shape)})
        chunks.append(array.tobytes())
    payload = b"".join(chunks)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "metadata": metadata,
        "arrays": manifest,
        "payload_bytes": len(payload),
        "sha256": _digest(kind, metadata, manifest, payload),
    }

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(canonical_json(header).encode("utf-8") + b"\n")
        handle.write(payload)
    os.replace(tmp_path, path)
    logger.debug("wrote %s container %s (%d bytes payload)", kind, path, len(payload))


def read_container(path: str, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    """Reads a container, verifying magic, kind, version, length and hash."""
    with open(path, "rb") as handle:
        if handle.read(len(MAGIC)) != MAGIC:
            raise ContainerFormatError(f"{path} is not an ISACGAN container")
        header_line = handle.readline()
        payload = handle.read()

    if not header_line.endswith(b"\n"):
        raise ContainerFormatError(f"{path}: header is truncated")
    try:
        header = json.loads(header_line.decode("utf-8"))
        version = header["format_version"]
        stored_kind = header["kind"]
        metadata = header["metadata"]
        manifest = header["arrays"]
        expected_bytes = header["payload_bytes"]
        stored_hash = header["sha256"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ContainerFormatError(f"{path}: malformed header ({exc})") from exc

    if version != FORMAT_VERSION:
        raise FormatVersionError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    if stored_kind != kind:
        raise ContainerFormatError(f"{path}: holds a {stored_kind!r}, expected {kind!r}")
    if len(payload) != expected_bytes:
        raise ContainerFormatError(f"{path}: payload is {len(payload)} bytes, header says {expected_bytes}")
    if _digest(stored_kind, metadata, manifest, payload) != stored_hash:
        raise IntegrityError(f"{path}: integrity hash mismatch")

    arrays, offset = {}, 0
    for entry in manifest:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + count * _DTYPE.itemsize
        if end > len(payload):
            raise ContainerFormatError(f"{path}: array {entry['name']!r} runs past the payload")
        arrays[entry["name"]] = np.frombuffer(payload[offset:end], dtype=_DTYPE).reshape(shape).copy()
        offset = end
    if offset != len(payload):
        raise ContainerFormatError(f"{path}: {len(payload) - offset} trailing payload bytes")
    return metadata, arrays
