"""Binary checkpoint format.

Layout: magic ``APN1``, stage tag, channel count, length-prefixed
canonical config text, then named parameter blocks (name, shape, raw
little-endian float64 data). Loading rebuilds the state from the config
echo and refuses mismatched shapes or configs, so a round trip is
bit-exact on every parameter.
"""

from __future__ import annotations

import struct
from dataclasses import fields
from pathlib import Path

import numpy as np

from .autodiff import Parameter
from .config import ExperimentConfig, parse_config_text
from .train import TrainState, build_state

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint"]

MAGIC = b"APN1"


class CheckpointError(ValueError):
    """Corrupt, truncated, or mismatched checkpoint file."""


def _named_parameters(state: TrainState) -> dict[str, Parameter]:
    groups = []
    if state.filters is not None:
        groups.extend(state.filters.parameters())
    if state.mppm is not None:
        groups.extend(state.mppm.parameters())
    groups.extend(state.fm.parameters())
    if state.revin is not None:
        groups.extend([state.revin.gamma, state.revin.delta])
    out = {}
    for p in groups:
        if p.name in out:
            raise CheckpointError(f"duplicate parameter name {p.name!r}")
        out[p.name] = p
    return out


def save_checkpoint(state: TrainState, path) -> None:
    path = Path(path)
    params = _named_parameters(state)
    chunks = [MAGIC]
    stage = state.stage.encode()
    chunks.append(struct.pack("<I", len(stage)) + stage)
    chunks.append(struct.pack("<I", state.channels))
    cfg = state.config.canonical_text().encode()
    chunks.append(struct.pack("<I", len(cfg)) + cfg)
    chunks.append(struct.pack("<I", len(params)))
    for name, p in params.items():
        encoded = name.encode()
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        value = np.ascontiguousarray(p.value, dtype="<f8")
        chunks.append(struct.pack("<B", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(value.tobytes())
    path.write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError("truncated checkpoint file")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path, expected_config: ExperimentConfig | None = None) -> TrainState:
    """Rebuild a TrainState from disk; optionally pin it to a config."""
    blob = Path(path).read_bytes()
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint")
    (stage_len,) = r.unpack("<I")
    stage = r.take(stage_len).decode()
    (channels,) = r.unpack("<I")
    (cfg_len,) = r.unpack("<I")
    config = parse_config_text(r.take(cfg_len).decode())
    if expected_config is not None:
        for f in fields(ExperimentConfig):
            got, want = getattr(config, f.name), getattr(expected_config, f.name)
            if got != want:
                raise CheckpointError(
                    f"checkpoint config mismatch on {f.name!r}: "
                    f"stored {got!r}, expected {want!r}"
                )
    state = build_state(config, channels)
    state.stage = stage
    params = _named_parameters(state)
    (n_params,) = r.unpack("<I")
    seen = set()
    for _ in range(n_params):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode()
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I") if ndim else ()
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = np.frombuffer(r.take(8 * size), dtype="<f8").reshape(shape)
        if name not in params:
            raise CheckpointError(f"checkpoint has unknown parameter {name!r}")
        p = params[name]
        if p.value.shape != data.shape:
            raise CheckpointError(
                f"parameter {name!r} shape {data.shape} does not match "
                f"configured shape {p.value.shape}"
            )
        p.value = data.astype(np.float64).copy()
        seen.add(name)
    missing = set(params) - seen
    if missing:
        raise CheckpointError(f"checkpoint missing parameters: {sorted(missing)}")
    if r.pos != len(blob):
        raise CheckpointError("trailing bytes after checkpoint payload")
    return state
