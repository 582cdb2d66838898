"""Plain-text persistence for models, datasets and configuration.

Model files are versioned and human-readable: a ``redar-model 1`` header,
a ``type`` line, then ``matrix NAME ROWS COLS`` blocks with one
whitespace-separated row per line.  Floats are written with ``repr`` so a
save/load/save cycle is byte-identical.  Closed loops nest their plant
and controller in ``begin``/``end`` sections.

Datasets travel as CSV with channel headers u1..u_{n_u}, y1..y_{n_y}.
Configuration files are flat ``key = value`` lines with ``#`` comments.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import SchemaError
from .realization import IdentifiedModel
from .systems import ClosedLoop, Controller, InnovationModel, assemble_closed_loop
from .varx import Dataset

__all__ = [
    "FORMAT_VERSION",
    "save_model",
    "load_model",
    "dumps_model",
    "loads_model",
    "save_dataset_csv",
    "load_dataset_csv",
    "parse_config",
    "load_config",
]

FORMAT_VERSION = 1

_INNOVATION_FIELDS = ("a", "b", "c", "k", "psi")
_CONTROLLER_FIELDS = ("af", "b1f", "b2f", "cf", "d1f", "d2f")
_IDENTIFIED_FIELDS = ("a", "b", "c", "d", "k")


def _format_matrix(name: str, m) -> list[str]:
    m = np.asarray(m, dtype=float)
    lines = [f"matrix {name} {m.shape[0]} {m.shape[1]}"]
    for row in m:
        lines.append(" ".join(repr(float(v)) for v in row))
    return lines


def _model_body(model) -> list[str]:
    if isinstance(model, InnovationModel):
        lines = ["type innovation"]
        for name in _INNOVATION_FIELDS:
            lines += _format_matrix(name, getattr(model, name))
    elif isinstance(model, Controller):
        lines = ["type controller"]
        for name in _CONTROLLER_FIELDS:
            lines += _format_matrix(name, getattr(model, name))
    elif isinstance(model, IdentifiedModel):
        lines = ["type identified"]
        for name in _IDENTIFIED_FIELDS:
            lines += _format_matrix(name, getattr(model, name))
    elif isinstance(model, ClosedLoop):
        lines = ["type closed-loop", "begin plant"]
        lines += _model_body(model.plant)
        lines += ["end", "begin controller"]
        lines += _model_body(model.controller)
        lines += ["end"]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return lines


def dumps_model(model) -> str:
    return "\n".join([f"redar-model {FORMAT_VERSION}"] + _model_body(model)) + "\n"


def save_model(path, model) -> None:
    Path(path).write_text(dumps_model(model))


class _Parser:
    """Line cursor with schema errors carrying 1-based line numbers."""

    def __init__(self, text: str):
        self.lines = text.split("\n")
        self.pos = 0

    def fail(self, message: str):
        # pos already sits one past the consumed line, so it is its 1-based number
        raise SchemaError(message, line=self.pos)

    def next_line(self, skip_blank: bool = True) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if skip_blank and not line.strip():
                continue
            return line
        self.pos = len(self.lines)
        self.fail("unexpected end of file")

    def peek(self) -> str | None:
        pos = self.pos
        while pos < len(self.lines):
            if self.lines[pos].strip():
                return self.lines[pos]
            pos += 1
        return None


def _parse_matrix(parser: _Parser, header: str):
    parts = header.split()
    if len(parts) != 4:
        parser.fail(f"malformed matrix header: {header!r}")
    _, name, rows_s, cols_s = parts
    try:
        rows, cols = int(rows_s), int(cols_s)
    except ValueError:
        parser.fail(f"matrix dimensions must be integers: {header!r}")
    if rows < 0 or cols < 0:
        parser.fail(f"matrix dimensions must be nonnegative: {header!r}")
    data = np.zeros((rows, cols))
    for i in range(rows):
        line = parser.next_line(skip_blank=cols > 0)
        tokens = line.split()
        if len(tokens) != cols:
            parser.fail(f"matrix {name} row {i + 1}: expected {cols} values, got {len(tokens)}")
        try:
            data[i] = [float(t) for t in tokens]
        except ValueError:
            parser.fail(f"matrix {name} row {i + 1}: non-numeric value")
    return name, data


def _parse_body(parser: _Parser):
    """Read one typed block: a type line, then matrices and nested sections."""
    type_line = parser.next_line().strip()
    if not type_line.startswith("type "):
        parser.fail(f"expected a type line, got {type_line!r}")
    kind = type_line[5:].strip()
    matrices: dict[str, np.ndarray] = {}
    sections: dict[str, object] = {}
    while True:
        nxt = parser.peek()
        if nxt is None:
            break
        stripped = nxt.strip()
        if stripped.startswith("matrix "):
            parser.next_line()
            name, data = _parse_matrix(parser, stripped)
            if name in matrices:
                parser.fail(f"duplicate matrix {name!r}")
            matrices[name] = data
        elif stripped.startswith("begin "):
            parser.next_line()
            section = stripped[6:].strip()
            sections[section] = _build(parser)
            end = parser.next_line().strip()
            if end != "end":
                parser.fail(f"expected 'end', got {end!r}")
        else:
            break
    return kind, matrices, sections


def _require(parser: _Parser, matrices: dict, fields: tuple[str, ...], kind: str):
    missing = [f for f in fields if f not in matrices]
    extra = [f for f in matrices if f not in fields]
    if missing or extra:
        parser.fail(f"{kind} model needs matrices {fields}, missing {missing}, extra {extra}")


def _build(parser: _Parser):
    block_kind, matrices, sections = _parse_body(parser)
    if block_kind == "innovation":
        _require(parser, matrices, _INNOVATION_FIELDS, block_kind)
        return InnovationModel(**matrices)
    if block_kind == "controller":
        _require(parser, matrices, _CONTROLLER_FIELDS, block_kind)
        return Controller(**matrices)
    if block_kind == "identified":
        _require(parser, matrices, _IDENTIFIED_FIELDS, block_kind)
        return IdentifiedModel(**matrices)
    if block_kind == "closed-loop":
        if matrices or set(sections) != {"plant", "controller"}:
            parser.fail("closed-loop model needs exactly the plant and controller sections")
        plant, controller = sections["plant"], sections["controller"]
        if not isinstance(plant, InnovationModel) or not isinstance(controller, Controller):
            parser.fail("closed-loop sections have the wrong types")
        return assemble_closed_loop(plant, controller)
    parser.fail(f"unknown model type {block_kind!r}")


def loads_model(text: str):
    parser = _Parser(text)
    header = parser.next_line().strip()
    parts = header.split()
    if len(parts) != 2 or parts[0] != "redar-model":
        parser.fail(f"expected 'redar-model {FORMAT_VERSION}' header, got {header!r}")
    if parts[1] != str(FORMAT_VERSION):
        parser.fail(f"unsupported format version {parts[1]!r}")
    model = _build(parser)
    trailing = parser.peek()
    if trailing is not None:
        parser.next_line()
        parser.fail(f"trailing content: {trailing.strip()!r}")
    return model


def load_model(path):
    return loads_model(Path(path).read_text())


def save_dataset_csv(path, ds: Dataset) -> None:
    """Write the joint signal as CSV with u/y channel headers."""
    header = [f"u{i + 1}" for i in range(ds.n_u)] + [f"y{i + 1}" for i in range(ds.n_y)]
    lines = [",".join(header)]
    for row in ds.z:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset_csv(path, p: int) -> Dataset:
    """Read a channel CSV back into a Dataset with lag order p."""
    text = Path(path).read_text()
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise SchemaError("empty dataset file", line=1)
    header = [h.strip() for h in lines[0].split(",")]
    n_u = 0
    while n_u < len(header) and header[n_u] == f"u{n_u + 1}":
        n_u += 1
    n_y = 0
    while n_u + n_y < len(header) and header[n_u + n_y] == f"y{n_y + 1}":
        n_y += 1
    if n_u == 0 or n_y == 0 or n_u + n_y != len(header):
        raise SchemaError(f"header must be u1..u_nu,y1..y_ny, got {header}", line=1)
    z = np.zeros((len(lines) - 1, n_u + n_y))
    for i, line in enumerate(lines[1:], start=2):
        tokens = line.split(",")
        if len(tokens) != n_u + n_y:
            raise SchemaError(f"expected {n_u + n_y} columns, got {len(tokens)}", line=i)
        try:
            z[i - 2] = [float(t) for t in tokens]
        except ValueError:
            raise SchemaError("non-numeric value", line=i) from None
    return Dataset(z=z, p=p, n_u=n_u, n_y=n_y)


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` pairs; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise SchemaError("empty key", line=lineno)
        if key in out:
            raise SchemaError(f"duplicate key {key!r}", line=lineno)
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text())
