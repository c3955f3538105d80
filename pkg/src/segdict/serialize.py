"""Diff-friendly text serialization for matrices, labels, and models.

A matrix block is a header line ``rows cols name`` followed by the values
row-major, whitespace-separated, 17 significant digits.  Files may hold
several blocks back to back.
"""

from __future__ import annotations

import numpy as np

from .beat_model import SegmentDictionary, SparseCodeMatrix
from .classifier import MultiClassSvm, TrainedSvm
from .errors import ParseError


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def write_matrix(fh, name: str, arr: np.ndarray) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    if any(ch.isspace() for ch in name) or not name:
        raise ValueError(f"bad block name {name!r}")
    fh.write(f"{arr.shape[0]} {arr.shape[1]} {name}\n")
    for row in arr:
        fh.write(" ".join(_fmt(v) for v in row) + "\n")


def _read_block(lines: list[str], pos: int) -> tuple[str, np.ndarray, int]:
    header = lines[pos].split()
    if len(header) != 3:
        raise ParseError(f"row {pos + 1}: bad matrix header {lines[pos]!r}")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ParseError(f"row {pos + 1}: {exc}") from exc
    name = header[2]
    values = np.empty((rows, cols))
    for r in range(rows):
        lineno = pos + 1 + r
        try:
            fields = lines[lineno].split()
            if len(fields) != cols:
                raise ValueError(f"expected {cols} values, got {len(fields)}")
            values[r] = [float(f) for f in fields]
        except (IndexError, ValueError) as exc:
            raise ParseError(f"row {lineno + 1}: {exc}") from exc
    return name, values, pos + 1 + rows


def save_matrices(path, items: list[tuple[str, np.ndarray]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, arr in items:
            write_matrix(fh, name, arr)


def load_matrices(path) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    out: dict[str, np.ndarray] = {}
    pos = 0
    while pos < len(lines):
        if not lines[pos].strip():
            pos += 1
            continue
        name, arr, pos = _read_block(lines, pos)
        out[name] = arr
    return out


def save_dictionaries(path, dicts: list[SegmentDictionary]) -> None:
    ordered = sorted(dicts, key=lambda d: d.segment_index)
    save_matrices(path, [(f"segment_{d.segment_index}", d.atoms) for d in ordered])


def load_dictionaries(path) -> list[SegmentDictionary]:
    blocks = load_matrices(path)
    dicts = []
    for name, arr in blocks.items():
        if not name.startswith("segment_"):
            raise ParseError(f"unexpected block {name!r} in dictionary file")
        dicts.append(SegmentDictionary(arr, int(name.split("_", 1)[1])))
    return sorted(dicts, key=lambda d: d.segment_index)


def save_codes(path, codes: SparseCodeMatrix) -> None:
    save_matrices(path, [("codes", codes.codes),
                         ("lambda", np.array([[codes.lam]]))])


def load_codes(path) -> SparseCodeMatrix:
    blocks = load_matrices(path)
    try:
        return SparseCodeMatrix(blocks["codes"], float(blocks["lambda"][0, 0]))
    except KeyError as exc:
        raise ParseError(f"missing block {exc} in codes file") from exc


def save_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label in labels:
            fh.write(f"{label}\n")


def load_labels(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def save_svm(path, model: MultiClassSvm) -> None:
    for c in model.classes:
        if any(ch.isspace() for ch in c):
            raise ValueError(f"label {c!r} contains whitespace")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("classes " + " ".join(model.classes) + "\n")
        for i, m in enumerate(model.machines):
            fh.write(f"machine {m.class_pair[0]} {m.class_pair[1]} "
                     f"{_fmt(m.bias)} {_fmt(m.gamma)} {_fmt(m.c_penalty)} "
                     f"{int(m.converged)}\n")
            write_matrix(fh, f"support_vectors_{i}", m.support_vectors)
            write_matrix(fh, f"alphas_{i}", m.alphas.reshape(1, -1))
            write_matrix(fh, f"sv_indices_{i}",
                         m.sv_indices.astype(float).reshape(1, -1))


def load_svm(path) -> MultiClassSvm:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("classes "):
        raise ParseError("row 1: expected a classes line")
    classes = tuple(lines[0].split()[1:])
    machines = []
    pos = 1
    while pos < len(lines):
        if not lines[pos].strip():
            pos += 1
            continue
        fields = lines[pos].split()
        if fields[0] != "machine" or len(fields) != 7:
            raise ParseError(f"row {pos + 1}: bad machine line")
        a, b = fields[1], fields[2]
        bias, gamma, c_penalty = (float(fields[3]), float(fields[4]),
                                  float(fields[5]))
        converged = bool(int(fields[6]))
        pos += 1
        _, sv, pos = _read_block(lines, pos)
        _, alphas, pos = _read_block(lines, pos)
        _, sv_idx, pos = _read_block(lines, pos)
        machines.append(TrainedSvm(sv, alphas.ravel(), bias, gamma, c_penalty,
                                   (a, b), sv_idx.ravel().astype(int),
                                   converged))
    return MultiClassSvm(tuple(machines), classes)
