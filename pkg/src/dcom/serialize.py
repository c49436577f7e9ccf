"""Model bundle persistence.

One binary file carries everything needed to predict: architecture config,
parameters, tokenizer vocabulary, feature scaler, class vocabulary, and
training metadata.  Layout (all integers little-endian):

    magic "DCOM" | version u32 | payload_len u64 | crc32 u32 | payload

    payload = header_len u32 | header JSON (UTF-8) | param buffers (float64 LE,
              in the header's listed order)

Saving is deterministic, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .core import ClassVocabulary
from .errors import BundleError
from .features import FeatureScaler
from .nn import ArchitectureConfig
from .tokenizers import Vocabulary

MAGIC = b"DCOM"
FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    arch: ArchitectureConfig
    params: dict
    vocab: Vocabulary
    scaler: FeatureScaler
    class_vocab: ClassVocabulary
    training: dict | object = None
    metadata: dict = None

    def training_dict(self) -> dict:
        if self.training is None:
            return {}
        if hasattr(self.training, "to_dict"):
            return self.training.to_dict()
        return dict(self.training)


def _payload(bundle: ModelBundle) -> bytes:
    names = sorted(bundle.params)
    header = {
        "arch": bundle.arch.to_dict(),
        "training": bundle.training_dict(),
        "metadata": bundle.metadata or {},
        "classes": list(bundle.class_vocab.names),
        "vocab": {"kind": bundle.vocab.kind, "tokens": list(bundle.vocab.tokens)},
        "scaler": {
            "mean": bundle.scaler.mean.tolist(),
            "std": bundle.scaler.std.tolist(),
        },
        "params": [
            {"name": n, "shape": list(bundle.params[n].shape)} for n in names
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    chunks = [struct.pack("<I", len(header_bytes)), header_bytes]
    for name in names:
        chunks.append(np.ascontiguousarray(bundle.params[name], dtype="<f8").tobytes())
    return b"".join(chunks)


def save_bundle(bundle: ModelBundle, path) -> None:
    payload = _payload(bundle)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(struct.pack("<I", zlib.crc32(payload)))
        fh.write(payload)


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20 or blob[:4] != MAGIC:
        raise BundleError(f"{path}: not a model bundle (bad magic)")
    version = struct.unpack_from("<I", blob, 4)[0]
    if version != FORMAT_VERSION:
        raise BundleError(f"{path}: unsupported format version {version}")
    payload_len = struct.unpack_from("<Q", blob, 8)[0]
    crc = struct.unpack_from("<I", blob, 16)[0]
    payload = blob[20 : 20 + payload_len]
    if len(payload) != payload_len:
        raise BundleError(f"{path}: truncated bundle")
    if zlib.crc32(payload) != crc:
        raise BundleError(f"{path}: checksum mismatch")

    header_len = struct.unpack_from("<I", payload, 0)[0]
    try:
        header = json.loads(payload[4 : 4 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError(f"{path}: corrupt header") from exc
    offset = 4 + header_len
    params = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(payload):
            raise BundleError(f"{path}: truncated parameter {entry['name']}")
        params[entry["name"]] = (
            np.frombuffer(payload[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
        )
        offset = end
    return ModelBundle(
        arch=ArchitectureConfig.from_dict(header["arch"]),
        params=params,
        vocab=Vocabulary(kind=header["vocab"]["kind"], tokens=tuple(header["vocab"]["tokens"])),
        scaler=FeatureScaler(
            mean=np.asarray(header["scaler"]["mean"], dtype=np.float64),
            std=np.asarray(header["scaler"]["std"], dtype=np.float64),
        ),
        class_vocab=ClassVocabulary(tuple(header["classes"])),
        training=header.get("training") or {},
        metadata=header.get("metadata") or {},
    )
