import json
import logging
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.settings import ModelConfig
from model.baselineNet import BaselineNet
from model.params import VrnParams
from model.signalState import LearningSignalState

logger = logging.getLogger(__name__)

MAGIC = b"VRNCKPT\x00"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<II")


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint file."""


@dataclass
class Checkpoint:
    params: VrnParams
    numEntities: int
    baseline: Optional[BaselineNet] = None
    signalState: LearningSignalState = field(default_factory=LearningSignalState)
    step: int = 0


def _blocks(checkpoint: Checkpoint) -> List[Tuple[str, np.ndarray]]:
    blocks = list(checkpoint.params.blocks().items())
    if checkpoint.baseline is not None:
        blocks += list(checkpoint.baseline.blocks().items())
    return blocks


def encodeCheckpoint(checkpoint: Checkpoint) -> bytes:
    """
    Serialize a checkpoint.

    Layout: magic, (version, header length) as little-endian uint32, a JSON
    header with sorted keys, then every block as little-endian float64 in
    header order.
    """
    params = checkpoint.params
    blocks = _blocks(checkpoint)
    header = {
        "formatVersion": FORMAT_VERSION,
        "dim": params.dim,
        "numRelations": params.numRelations,
        "numEntities": checkpoint.numEntities,
        "vocabSize": params.vocabSize,
        "model": asdict(params.settings),
        "signal": asdict(checkpoint.signalState),
        "step": checkpoint.step,
        "hasBaseline": checkpoint.baseline is not None,
        "blocks": [[name, list(block.shape)] for name, block in blocks],
    }
    headerBytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, _PREAMBLE.pack(FORMAT_VERSION, len(headerBytes)), headerBytes]
    parts += [np.ascontiguousarray(block, dtype="<f8").tobytes() for _, block in blocks]
    return b"".join(parts)


def decodeCheckpoint(data: bytes) -> Checkpoint:
    if not data.startswith(MAGIC):
        raise CheckpointError("not a checkpoint file (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + _PREAMBLE.size:
        raise CheckpointError("truncated checkpoint header")
    version, headerLength = _PREAMBLE.unpack_from(data, offset)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    offset += _PREAMBLE.size
    if len(data) < offset + headerLength:
        raise CheckpointError("truncated checkpoint header")
    header = json.loads(data[offset:offset + headerLength].decode("utf-8"))
    offset += headerLength

    blocks: Dict[str, np.ndarray] = {}
    for name, shape in header["blocks"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointError(f"truncated checkpoint in block {name}")
        blocks[name] = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
        offset = end
    if offset != len(data):
        raise CheckpointError("trailing bytes after the last block")

    settings = ModelConfig(**header["model"])
    params = VrnParams.fromBlocks(settings, header["numRelations"], blocks)
    baseline = None
    if header["hasBaseline"]:
        baseline = BaselineNet.fromBlocks(header["numEntities"], header["vocabSize"], blocks)
    return Checkpoint(
        params=params,
        numEntities=header["numEntities"],
        baseline=baseline,
        signalState=LearningSignalState(**header["signal"]),
        step=header["step"],
    )


def saveCheckpoint(path, checkpoint: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encodeCheckpoint(checkpoint))
    logger.info(f"Checkpoint saved: {path} (step {checkpoint.step})")
    return path


def loadCheckpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    checkpoint = decodeCheckpoint(path.read_bytes())
    logger.info(f"Checkpoint loaded: {path} (step {checkpoint.step})")
    return checkpoint
