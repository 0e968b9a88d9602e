"""Versioned checkpoint container.

Layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON header
{format_version, module_name, params: [{name, shape}], meta}, then each array
as raw little-endian float64 in header order. The run config is written next
to it as a JSON sidecar (``<name>.config.json``).
"""
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np

MAGIC = b"ARTGCKPT"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    module_name: str
    arrays: Dict[str, np.ndarray]
    meta: Dict[str, Any] = field(default_factory=dict)
    config: Optional[Dict[str, Any]] = None


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".config.json")


def save_checkpoint(path, module_name: str, arrays: Mapping[str, np.ndarray],
                    meta: Optional[Dict[str, Any]] = None,
                    config: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(arrays)
    header = {
        "format_version": FORMAT_VERSION,
        "module_name": module_name,
        "params": [{"name": n, "shape": list(np.shape(arrays[n]))} for n in names],
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for n in names:
            f.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())
    os.replace(tmp, path)
    if config is not None:
        sidecar_path(path).write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    return path


def load_checkpoint(path, module_name: Optional[str] = None) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[:len(MAGIC)] != MAGIC or len(raw) < len(MAGIC) + 4:
        raise ValueError(f"corrupt checkpoint {path}: bad magic")
    (hlen,) = struct.unpack("<I", raw[len(MAGIC):len(MAGIC) + 4])
    offset = len(MAGIC) + 4
    try:
        header = json.loads(raw[offset:offset + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"corrupt checkpoint {path}: unreadable header ({e})")
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"checkpoint {path} has format_version {header.get('format_version')}, "
                         f"expected {FORMAT_VERSION}")
    if module_name is not None and header.get("module_name") != module_name:
        raise ValueError(f"checkpoint {path} belongs to module '{header.get('module_name')}', "
                         f"expected '{module_name}'")
    offset += hlen
    arrays = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8
        if offset + nbytes > len(raw):
            raise ValueError(f"corrupt checkpoint {path}: payload truncated at '{entry['name']}'")
        arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=nbytes // 8,
                                              offset=offset).astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(raw):
        raise ValueError(f"corrupt checkpoint {path}: {len(raw) - offset} trailing bytes")
    config = None
    side = sidecar_path(path)
    if side.exists():
        config = json.loads(side.read_text())
    return Checkpoint(header["module_name"], arrays, header.get("meta", {}), config)
