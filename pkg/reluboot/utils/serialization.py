"""Versioned little-endian binary format for trained networks.

Layout:
    magic b"RBNT" | uint32 version | uint32 d | uint32 L | uint32 width |
    float64 W1, b1, ..., WL, bL, w_out, b_out (row-major)
"""

import logging
from pathlib import Path
from typing import Union

import aiofiles
import numpy as np

from ..constants import ERROR_MESSAGES, NETWORK_FORMAT_VERSION, NETWORK_MAGIC
from ..models import Network, NetworkArch
from .validation import ValidationError

logger = logging.getLogger(__name__)

_HEADER_WORDS = 4
_HEADER_SIZE = len(NETWORK_MAGIC) + 4 * _HEADER_WORDS


def dump_network(net: Network) -> bytes:
    """Serialize the parameters of a network (training loss is not stored)."""
    arch = net.arch
    header = np.array([NETWORK_FORMAT_VERSION, arch.input_dim, arch.depth, arch.width], dtype="<u4")
    body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in net.parameters())
    return NETWORK_MAGIC + header.tobytes() + body


def load_network(blob: bytes) -> Network:
    """Inverse of dump_network; parameters are restored bit for bit."""
    if len(blob) < _HEADER_SIZE or blob[: len(NETWORK_MAGIC)] != NETWORK_MAGIC:
        raise ValidationError(ERROR_MESSAGES["bad_network_blob"].format(detail="missing magic header"))
    version, d, depth, width = (int(v) for v in np.frombuffer(blob, dtype="<u4", count=_HEADER_WORDS, offset=len(NETWORK_MAGIC)))
    if version != NETWORK_FORMAT_VERSION:
        raise ValidationError(ERROR_MESSAGES["bad_network_blob"].format(detail=f"unsupported version {version}"))
    try:
        arch = NetworkArch(input_dim=d, depth=depth, width=width)
    except ValueError as e:
        raise ValidationError(ERROR_MESSAGES["bad_network_blob"].format(detail=str(e)))

    expected = _HEADER_SIZE + 8 * arch.parameter_count
    if len(blob) != expected:
        raise ValidationError(ERROR_MESSAGES["bad_network_blob"].format(
            detail=f"expected {expected} bytes, got {len(blob)}"
        ))
    params = []
    offset = _HEADER_SIZE
    for shape in arch.parameter_shapes():
        count = int(np.prod(shape))
        params.append(np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64))
        offset += 8 * count
    return Network.from_parameters(arch, params)


async def save_network(net: Network, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "wb") as f:
        await f.write(dump_network(net))
    logger.debug(f"Saved network {net.arch} to {path}")
    return path


async def read_network(path: Union[str, Path]) -> Network:
    async with aiofiles.open(Path(path), "rb") as f:
        return load_network(await f.read())
