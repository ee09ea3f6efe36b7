"""
Contêiner de checkpoint.

Layout (tudo little-endian):
    8 bytes   magic b"SKYCKPT1"
    4 bytes   uint32 com o tamanho N do cabeçalho
    N bytes   cabeçalho JSON UTF-8: format_version, seed, episode, uav,
              version, entries = [{name, shape, dtype, offset, nbytes}]
    ...       bytes crus dos arrays, na ordem do cabeçalho
"""

import json
import os
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from app.core.exceptions import CheckpointError
from app.core.logging import get_logger
from app.services.nn.params import ParameterStore

logger = get_logger("checkpoint")

MAGIC = b"SKYCKPT1"
FORMAT_VERSION = 1
_DTYPES = {"float64": "<f8", "float32": "<f4"}


def save_checkpoint(
    path: str,
    store: ParameterStore,
    seed: int,
    episode: int,
    uav: Optional[int] = None,
    extra: Optional[Dict[str, Any]] = None
) -> str:
    """Grava o store em `path`; a leitura reproduz os bits exatamente"""

    entries, blobs, offset = [], [], 0
    for name, array in store.items():
        dtype_name = np.dtype(array.dtype).name
        if dtype_name not in _DTYPES:
            raise CheckpointError(f"dtype não suportado em {name}: {dtype_name}", path=path)
        blob = np.ascontiguousarray(array, dtype=_DTYPES[dtype_name]).tobytes()
        entries.append({
            "name": name,
            "shape": list(array.shape),
            "dtype": dtype_name,
            "offset": offset,
            "nbytes": len(blob)
        })
        blobs.append(blob)
        offset += len(blob)

    header = {
        "format_version": FORMAT_VERSION,
        "seed": int(seed),
        "episode": int(episode),
        "uav": uav,
        "version": store.version,
        "entries": entries,
        "extra": extra or {}
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        tmp_path = f"{path}.tmp"
        with open(tmp_path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<I", len(header_bytes)))
            f.write(header_bytes)
            for blob in blobs:
                f.write(blob)
        os.replace(tmp_path, path)
    except OSError as e:
        raise CheckpointError(f"Falha ao gravar checkpoint: {e}", path=path) from e

    logger.debug(f"Checkpoint gravado: {path} ({len(entries)} arrays)")
    return path


def load_checkpoint(path: str) -> Tuple[ParameterStore, Dict[str, Any]]:
    """Lê um checkpoint e devolve (store, cabeçalho)"""

    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise CheckpointError(f"Falha ao ler checkpoint: {e}", path=path) from e

    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointError("Arquivo não é um checkpoint SkyEdge", path=path)
    try:
        (header_len,) = struct.unpack("<I", data[8:12])
        header = json.loads(data[12:12 + header_len].decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Cabeçalho corrompido: {e}", path=path) from e

    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"Versão de formato não suportada: {header.get('format_version')}", path=path)

    body = data[12 + header_len:]
    entries = {}
    for entry in header["entries"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(body):
            raise CheckpointError(f"Checkpoint truncado em {entry['name']}", path=path)
        array = np.frombuffer(body[start:start + nbytes], dtype=_DTYPES[entry["dtype"]])
        entries[entry["name"]] = array.reshape(entry["shape"]).astype(entry["dtype"])

    return ParameterStore(entries, version=header["version"]), header
