"""Shared JSON conventions.

Complex 2x2 matrices are encoded row-major as nested [re, im] pairs,
Bloch vectors as plain length-3 real arrays. Every top-level output
document carries a ``schema_version`` field so downstream consumers can
detect format changes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Raised when a JSON document does not match the expected schema."""


def matrix_to_json(matrix) -> list:
    """Encode a 2x2 complex matrix as [[[re,im],[re,im]],[[re,im],[re,im]]]."""
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise SchemaError(f"expected a 2x2 matrix, got shape {m.shape}")
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape != (2, 2, 2):
        raise SchemaError(f"expected a 2x2 matrix of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def bloch_to_json(r) -> list:
    v = np.asarray(r, dtype=float)
    if v.shape != (3,):
        raise SchemaError(f"expected a length-3 Bloch vector, got shape {v.shape}")
    return [float(x) for x in v]


def bloch_from_json(data) -> np.ndarray:
    v = np.asarray(data, dtype=float)
    if v.shape != (3,):
        raise SchemaError(f"expected a length-3 Bloch vector, got shape {v.shape}")
    return v


def dump_json(payload: dict, path) -> None:
    """Write a JSON document byte-stably (sorted keys, fixed indentation)."""
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
