"""
File formats: parameter files, model files, reports.

Everything is JSON with matrices stored row-major under explicit
dimensions.  Floats go through Python's shortest round-trip repr, so a
model survives a save/load cycle bit-identically.  Complex entries in
parameter files are [re, im] pairs.  Writes are atomic (temp file plus
rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .model import PhysicalParams, QuadratureModel

__all__ = [
    "FileFormatError",
    "load_params",
    "save_model",
    "load_model",
    "save_json",
]


class FileFormatError(ValueError):
    """Malformed parameter or model file; message carries field context."""


def _encode_matrix(M: NDArray) -> dict:
    M = np.asarray(M)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "entries": [float(v) for v in M.ravel()],
    }


def _decode_matrix(obj: dict, field: str) -> NDArray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"{field}: expected rows/cols/entries") from exc
    if len(entries) != rows * cols:
        raise FileFormatError(
            f"{field}: {len(entries)} entries for {rows}x{cols} matrix"
        )
    return np.array(entries, dtype=float).reshape(rows, cols)


def _decode_complex_matrix(obj: dict, field: str) -> NDArray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"{field}: expected rows/cols/entries") from exc
    if len(entries) != rows * cols:
        raise FileFormatError(
            f"{field}: {len(entries)} entries for {rows}x{cols} matrix"
        )
    out = np.empty(rows * cols, dtype=complex)
    for i, pair in enumerate(entries):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise FileFormatError(f"{field}: entry {i} is not an [re, im] pair")
        out[i] = complex(float(pair[0]), float(pair[1]))
    return out.reshape(rows, cols)


def save_json(path, payload: dict) -> None:
    """Atomically write a JSON document (temp file + rename)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_params(path) -> PhysicalParams:
    """Read a parameter file into PhysicalParams."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: top level must be an object")

    def scalar_list(field, count):
        val = doc.get(field)
        if val is None:
            raise FileFormatError(f"{path}: missing field {field!r}")
        if not isinstance(val, list) or len(val) != count:
            raise FileFormatError(
                f"{path}: field {field!r} must be a list of {count} numbers"
            )
        return tuple(float(v) for v in val)

    try:
        m, n = int(doc["m"]), int(doc["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: integer fields 'm' and 'n' required") from exc

    kwargs = {}
    for field in ("Omega_p", "Omega_a", "N_p", "N_a", "G_a_row", "K_p_row"):
        if field in doc:
            kwargs[field] = _decode_complex_matrix(doc[field], f"{path}:{field}")
    try:
        return PhysicalParams(
            m=m,
            n=n,
            omega_p=scalar_list("omega_p", m),
            omega_a=scalar_list("omega_a", n),
            gamma_p=scalar_list("gamma_p", m),
            gamma_a=scalar_list("gamma_a", n),
            kappa=scalar_list("kappa", m),
            **kwargs,
        )
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def save_model(path, mdl: QuadratureModel) -> None:
    payload = {
        "dims": {"m": mdl.m, "n_or_r": mdl.k, "n_in": mdl.n_in},
        "A": _encode_matrix(mdl.A),
        "B": _encode_matrix(mdl.B),
        "C": _encode_matrix(mdl.C),
        "D": _encode_matrix(mdl.D),
        "provenance": {
            "sign_convention": mdl.sign_convention,
            "synthesized_defaults": list(mdl.synthesized),
        },
    }
    save_json(path, payload)


def load_model(path) -> QuadratureModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    try:
        dims = doc["dims"]
        m, k, n_in = int(dims["m"]), int(dims["n_or_r"]), int(dims["n_in"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: dims block with m/n_or_r/n_in required") from exc
    prov = doc.get("provenance", {})
    try:
        return QuadratureModel(
            A=_decode_matrix(doc["A"], f"{path}:A"),
            B=_decode_matrix(doc["B"], f"{path}:B"),
            C=_decode_matrix(doc["C"], f"{path}:C"),
            D=_decode_matrix(doc["D"], f"{path}:D"),
            m=m,
            k=k,
            n_in=n_in,
            sign_convention=prov.get("sign_convention", "positive"),
            synthesized=tuple(prov.get("synthesized_defaults", ())),
        )
    except KeyError as exc:
        raise FileFormatError(f"{path}: missing matrix {exc}") from exc
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
