"""Versioned binary checkpoints: config fingerprint, named float32 parameter
blobs, and the vocabulary maps. Loading verifies the fingerprint and
refuses configs it was not trained under."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = b"GDCP"
CHECKPOINT_VERSION = 1

_PREFIX = struct.Struct("<4sI64sQ")  # magic, version, fingerprint hex, header length


class FingerprintError(ValueError):
    """Checkpoint or artifact produced under a different configuration."""


def config_fingerprint(config: dict) -> str:
    """sha256 over the canonical JSON of the configuration dict."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class Checkpoint:
    config: dict
    params: dict[str, np.ndarray]
    vocab: dict[str, dict[str, int]]

    @property
    def fingerprint(self) -> str:
        return config_fingerprint(self.config)


def save_checkpoint(ckpt: Checkpoint, path: Path | str) -> None:
    names = sorted(ckpt.params)
    header = {
        "config": ckpt.config,
        "vocab": ckpt.vocab,
        "params": [{"name": n, "shape": list(ckpt.params[n].shape)} for n in names],
    }
    header_blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(
            _PREFIX.pack(
                CHECKPOINT_MAGIC,
                CHECKPOINT_VERSION,
                ckpt.fingerprint.encode(),
                len(header_blob),
            )
        )
        fh.write(header_blob)
        for n in names:
            fh.write(np.ascontiguousarray(ckpt.params[n], dtype=np.float32).tobytes())


def load_checkpoint(path: Path | str, expected_config: dict | None = None) -> Checkpoint:
    """Load and verify a checkpoint.

    Always re-verifies the stored fingerprint against the stored config;
    if `expected_config` is given, its fingerprint must match too.
    """
    blob = Path(path).read_bytes()
    magic, version, fp_hex, header_len = _PREFIX.unpack_from(blob, 0)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(blob[_PREFIX.size : _PREFIX.size + header_len])
    stored_fp = fp_hex.decode()
    if config_fingerprint(header["config"]) != stored_fp:
        raise FingerprintError(f"{path}: fingerprint does not match the stored config")
    if expected_config is not None and config_fingerprint(expected_config) != stored_fp:
        raise FingerprintError(
            f"{path}: checkpoint was produced under a different configuration"
        )
    params: dict[str, np.ndarray] = {}
    offset = _PREFIX.size + header_len
    for spec in header["params"]:
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arr = np.frombuffer(blob, dtype=np.float32, count=count, offset=offset)
        params[spec["name"]] = arr.reshape(spec["shape"]).copy()
        offset += count * 4
    return Checkpoint(config=header["config"], params=params, vocab=header["vocab"])
