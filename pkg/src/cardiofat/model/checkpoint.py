"""Binary checkpoint container.

Layout: magic "CFSG", version byte 0x01, u32le header length, a UTF-8 JSON
header (config, epoch, history, architecture, tensor table), then the raw
tensor payloads as 32-bit little-endian floats in table order. The JSON is
serialized with sorted keys and no whitespace so equal checkpoints produce
byte-identical files.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import CorruptCheckpoint
from .networks import PatchDiscriminator, UNetGenerator

MAGIC = b"CFSG"
VERSION = 1


@dataclass
class Checkpoint:
    generator: UNetGenerator
    discriminator: PatchDiscriminator
    config: dict
    epoch: int
    history: list = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, Checkpoint):
            return NotImplemented
        if (self.config, self.epoch, self.history) != (other.config, other.epoch, other.history):
            return False
        for mine, theirs in ((self.generator, other.generator),
                             (self.discriminator, other.discriminator)):
            if sorted(mine.weights) != sorted(theirs.weights):
                return False
            for name in mine.weights:
                a, b = mine.weights[name], theirs.weights[name]
                if a.shape != b.shape or not np.array_equal(a, b):
                    return False
        return True


def _architecture(ckpt):
    g, d = ckpt.generator, ckpt.discriminator
    return {
        "generator": {
            "depth": g.depth,
            "base_channels": g.base_channels,
            "in_channels": g.in_channels,
            "out_channels": g.out_channels,
            "dropout_rate": g.dropout_rate,
        },
        "discriminator": {
            "layers": d.layers,
            "base_channels": d.base_channels,
            "in_channels": d.in_channels,
            "cand_channels": d.cand_channels,
        },
    }


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    """Serialize deterministically; equal checkpoints give equal bytes."""
    tensors = []
    payload = bytearray()
    for prefix, net in (("gen", ckpt.generator), ("disc", ckpt.discriminator)):
        for name in sorted(net.weights):
            arr = np.ascontiguousarray(net.weights[name], dtype="<f4")
            tensors.append(
                {"name": f"{prefix}.{name}", "shape": list(arr.shape), "offset": len(payload)}
            )
            payload.extend(arr.tobytes())
    header = {
        "architecture": _architecture(ckpt),
        "config": ckpt.config,
        "epoch": ckpt.epoch,
        "history": ckpt.history,
        "tensors": tensors,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + bytes([VERSION]) + struct.pack("<I", len(blob)) + blob + bytes(payload)


def save_checkpoint(ckpt: Checkpoint, path):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(ckpt))


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    if len(data) < 9:
        raise CorruptCheckpoint("shorter than the fixed header")
    if data[:4] != MAGIC:
        raise CorruptCheckpoint(f"bad magic {data[:4]!r}")
    if data[4] != VERSION:
        raise CorruptCheckpoint(f"unsupported version {data[4]}")
    (header_len,) = struct.unpack_from("<I", data, 5)
    if len(data) < 9 + header_len:
        raise CorruptCheckpoint("truncated JSON header")
    try:
        header = json.loads(data[9 : 9 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"unreadable header: {exc}") from exc
    payload = data[9 + header_len :]

    arch = header.get("architecture", {})
    try:
        generator = UNetGenerator(seed=0, **arch["generator"])
        discriminator = PatchDiscriminator(seed=0, **arch["discriminator"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpoint(f"bad architecture record: {exc}") from exc

    tables = {f"gen.{n}": (generator, n) for n in generator.weights}
    tables.update({f"disc.{n}": (discriminator, n) for n in discriminator.weights})
    seen = set()
    for entry in header.get("tensors", []):
        name = entry.get("name")
        if name not in tables:
            raise CorruptCheckpoint(f"unknown tensor {name!r}")
        net, local = tables[name]
        shape = tuple(entry["shape"])
        if shape != net.weights[local].shape:
            raise CorruptCheckpoint(
                f"tensor {name!r} shape {shape} != expected {net.weights[local].shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + 4 * count
        if start < 0 or end > len(payload):
            raise CorruptCheckpoint(f"tensor {name!r} payload out of range")
        net.weights[local] = (
            np.frombuffer(payload[start:end], dtype="<f4").reshape(shape).astype(np.float32)
        )
        seen.add(name)
    if seen != set(tables):
        raise CorruptCheckpoint(f"tensor table missing {sorted(set(tables) - seen)}")
    return Checkpoint(
        generator=generator,
        discriminator=discriminator,
        config=header.get("config", {}),
        epoch=header.get("epoch", 0),
        history=header.get("history", []),
    )


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())
