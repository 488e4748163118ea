"""
Checkpoint persistence

Layout: b"FSG1", uint32 little-endian header length, UTF-8 JSON header, then
contiguous little-endian float32 blobs at the offsets listed in the header.
"""

import json
import struct

import numpy as np

from src.nn.network import NetworkConfig, build_network
from src.utils.errors import BadMagicError, CheckpointError, ShapeMismatchError, TruncatedCheckpointError

MAGIC = b"FSG1"
TENSOR_NAMES = ("W", "D", "bias")
_BLOB_DTYPE = np.dtype("<f4")


def save_checkpoint(net, path, meta=None):
    """
    Write network parameters and architecture

    Args:
        net (FSGNet): Network to save
        path (str): Output file
        meta (dict): Extra JSON-serializable metadata (training mode, normalization)
    """
    entries = []
    blobs = []
    offset = 0
    for layer_name, params in net.named_layers:
        for tensor_name, tensor in zip(TENSOR_NAMES, params.tensors()):
            blob = np.ascontiguousarray(tensor, dtype=_BLOB_DTYPE).tobytes()
            entries.append(
                {
                    "layer": layer_name,
                    "tensor": tensor_name,
                    "shape": list(tensor.shape),
                    "dtype": "float32",
                    "byte_offset": offset,
                }
            )
            blobs.append(blob)
            offset += len(blob)

    header = {
        "format": MAGIC.decode("ascii"),
        "meta": {"network": net.config.to_dict(), **(meta or {})},
        "tensors": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)


def read_checkpoint_meta(path):
    """Return the header metadata without loading tensors"""
    header, _ = _read(path)
    return header["meta"]


def load_checkpoint(path):
    """
    Rebuild a network from a checkpoint

    Returns:
        FSGNet: Network with the stored parameters

    Raises:
        BadMagicError, TruncatedCheckpointError, ShapeMismatchError, CheckpointError
    """
    header, payload = _read(path)
    try:
        config = NetworkConfig.from_dict(header["meta"]["network"])
        net = build_network(config)
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"Failed to read network description from {path}: {str(e)}")

    try:
        entries = {(entry["layer"], entry["tensor"]): entry for entry in header["tensors"]}
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"Malformed tensor manifest in {path}: {type(e).__name__} {str(e)}")
    tensors = []
    for layer_name, params in net.named_layers:
        for tensor_name, expected in zip(TENSOR_NAMES, params.tensors()):
            entry = entries.get((layer_name, tensor_name))
            if entry is None:
                raise ShapeMismatchError(f"Checkpoint lacks tensor {layer_name}.{tensor_name}", layer=layer_name)
            shape, start = _entry_geometry(entry, layer_name, tensor_name)
            if shape != expected.shape:
                raise ShapeMismatchError(
                    f"Layer {layer_name} tensor {tensor_name}: manifest shape {shape} != expected {expected.shape}",
                    layer=layer_name,
                )
            count = int(np.prod(shape))
            stop = start + count * _BLOB_DTYPE.itemsize
            if start < 0 or stop > len(payload):
                raise TruncatedCheckpointError(
                    f"Tensor {layer_name}.{tensor_name} needs bytes {start}..{stop}, blob has {len(payload)}"
                )
            data = np.frombuffer(payload[start:stop], dtype=_BLOB_DTYPE).reshape(shape)
            tensors.append(data.astype(expected.dtype))
    net.set_parameters(tensors)
    return net


def _entry_geometry(entry, layer_name, tensor_name):
    try:
        return tuple(int(n) for n in entry["shape"]), int(entry["byte_offset"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Manifest entry {layer_name}.{tensor_name} is malformed: {type(e).__name__} {str(e)}")


def _read(path):
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 8 or data[:4] != MAGIC:
        raise BadMagicError(f"{path} is not an FSG checkpoint (bad magic)")
    (header_length,) = struct.unpack("<I", data[4:8])
    if 8 + header_length > len(data):
        raise TruncatedCheckpointError(f"{path}: header declares {header_length} bytes, file is shorter")
    try:
        header = json.loads(data[8 : 8 + header_length].decode("utf-8"))
        if "meta" not in header or "tensors" not in header:
            raise KeyError("meta/tensors")
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointError(f"Failed to parse checkpoint header of {path}: {str(e)}")
    return header, data[8 + header_length :]

