"""
Versioned structured-text artifacts (kernels, checkpoints, corpora, reports).

Documents are JSON objects with a small header; arrays are stored flat with
interleaved real/imaginary parts, either as decimal floats (shortest repr,
which round-trips exactly) or as base-16 strings from float.hex.
"""

import json
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ValidationError

from .exceptions import FormatError

logger = logging.getLogger(__name__)

FORMAT_NAME = "specnet-lab"
FORMAT_VERSION = 1
ENCODINGS = ("decimal", "hex")


class DocumentHeader(BaseModel):
    format: Literal["specnet-lab"]
    format_version: int
    kind: str


def encode_array(array, encoding: str = "decimal") -> dict:
    if encoding not in ENCODINGS:
        raise FormatError(f"Unknown float encoding: {encoding}")
    array = np.asarray(array)
    is_complex = np.iscomplexobj(array)
    if is_complex:
        flat = np.asarray(array, dtype=complex).reshape(-1).view(np.float64)
    else:
        flat = np.asarray(array, dtype=np.float64).reshape(-1)
    if encoding == "hex":
        data = [float(x).hex() for x in flat]
    else:
        data = [float(x) for x in flat]
    return {
        "dtype": "complex128" if is_complex else "float64",
        "shape": list(array.shape),
        "encoding": encoding,
        "data": data,
    }


def decode_array(payload: dict) -> np.ndarray:
    try:
        dtype = payload["dtype"]
        shape = tuple(payload["shape"])
        encoding = payload.get("encoding", "decimal")
        raw = payload["data"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"Malformed array payload: {exc}") from exc

    if encoding == "hex":
        flat = np.array([float.fromhex(x) for x in raw], dtype=np.float64)
    elif encoding == "decimal":
        flat = np.array(raw, dtype=np.float64)
    else:
        raise FormatError(f"Unknown float encoding: {encoding}")

    if dtype == "complex128":
        if flat.size % 2:
            raise FormatError("Complex array payload has an odd number of values")
        values = flat.view(np.complex128)
    elif dtype == "float64":
        values = flat
    else:
        raise FormatError(f"Unsupported dtype: {dtype}")

    expected = int(np.prod(shape)) if shape else 1
    if values.size != expected:
        raise FormatError(f"Array payload holds {values.size} values, shape {shape} needs {expected}")
    return values.reshape(shape)


def make_document(kind: str, **fields) -> dict:
    return {"format": FORMAT_NAME, "format_version": FORMAT_VERSION, "kind": kind, **fields}


def check_document(document: dict, kind: str = None) -> dict:
    try:
        header = DocumentHeader.model_validate(document)
    except ValidationError as exc:
        raise FormatError(f"Not a {FORMAT_NAME} document: {exc}") from exc
    if header.format_version != FORMAT_VERSION:
        raise FormatError(
            f"Unsupported format_version {header.format_version} (expected {FORMAT_VERSION})"
        )
    if kind is not None and header.kind != kind:
        raise FormatError(f"Expected a '{kind}' document, found '{header.kind}'")
    return document


def jsonable(value):
    """Non-finite floats become null; numpy scalars become Python numbers"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_document(path, document: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    check_document(document)
    document = jsonable(document)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(document, fh, allow_nan=False)
        fh.write("\n")
    logger.debug(f"Wrote {document['kind']} document to {path}")
    return path


def read_document(path, kind: str = None) -> dict:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    return check_document(document, kind)
