"""Versioned, self-describing model files.

Two containers: npz for array-heavy models (the sentence classifier) and JSON
for structured ones (tree ensembles, PMI tables, mention scorer). Both embed a
format version and a model kind; loading anything else fails loudly.
"""

from __future__ import annotations

import io
import json

import numpy as np

FORMAT_VERSION = 1


class ModelFormatError(Exception):
    pass


def save_npz_model(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    header = {"format_version": FORMAT_VERSION, "kind": kind, "meta": meta}
    payload = {f"arr_{k}": np.asarray(v) for k, v in arrays.items()}
    payload["__header__"] = np.frombuffer(
        json.dumps(header).encode("utf-8"), dtype=np.uint8
    )
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_npz_model(path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    with np.load(path, allow_pickle=False) as data:
        if "__header__" not in data:
            raise ModelFormatError(f"{path}: not a recognized model file")
        header = json.loads(bytes(data["__header__"]).decode("utf-8"))
        _check_header(path, header, kind)
        arrays = {
            k[len("arr_"):]: np.array(data[k]) for k in data.files if k.startswith("arr_")
        }
    return header["meta"], arrays


def save_json_model(path, kind: str, payload: dict) -> None:
    doc = {"format_version": FORMAT_VERSION, "kind": kind, "payload": payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_json_model(path, kind: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError(f"{path}: not a recognized model file")
    _check_header(path, doc, kind)
    return doc["payload"]


def _check_header(path, header: dict, kind: str) -> None:
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format version {version} unsupported (expected {FORMAT_VERSION})"
        )
    if header.get("kind") != kind:
        raise ModelFormatError(
            f"{path}: model kind {header.get('kind')!r} does not match expected {kind!r}"
        )
