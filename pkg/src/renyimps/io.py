"""Versioned JSON formats for tensors, channels and reports.

Tensor and channel files are written by a fixed emitter: one matrix row per
line, complex entries as ``[re, im]`` with 17 significant digits.  Parsing a
file produced by ``serialize`` and serializing the result reproduces it byte
for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .channels import QuantumChannel
from .errors import InvariantViolation, SchemaError
from .mps import MpsTensor

FORMAT_VERSION = "v1"
KINDS = {"mps-tensor": "matrices", "channel-kraus": "kraus"}


def format_number(x: float) -> str:
    if not math.isfinite(x):
        raise SchemaError(f"non-finite number {x!r} cannot be serialized")
    text = format(float(x), ".17g")
    # keep a float marker so that "-0" does not parse back as the integer 0
    return text if any(c in text for c in ".e") else text + ".0"


def _row(row) -> str:
    return "[" + ", ".join(f"[{format_number(z.real)}, {format_number(z.imag)}]" for z in row) + "]"


def serialize(obj: MpsTensor | QuantumChannel) -> str:
    """Canonical text for a tensor or a channel."""
    if isinstance(obj, MpsTensor):
        kind, stack = "mps-tensor", obj.matrices
    elif isinstance(obj, QuantumChannel):
        kind, stack = "channel-kraus", obj.kraus
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    d, D, _ = stack.shape
    lines = ["{", f'  "version": "{FORMAT_VERSION}",', f'  "kind": "{kind}",',
             f'  "d": {d},', f'  "D": {D},', f'  "{KINDS[kind]}": [']
    for i, M in enumerate(stack):
        lines.append("    [")
        lines += [f"      {_row(r)}" + ("," if j < D - 1 else "") for j, r in enumerate(M)]
        lines.append("    ]" + ("," if i < d - 1 else ""))
    lines += ["  ]", "}", ""]
    return "\n".join(lines)


def _array_element_lines(text: str, key: str) -> list[int]:
    """1-based line numbers where the elements of the top-level array ``key`` start."""
    pos = text.find(f'"{key}"')
    if pos < 0:
        return []
    pos = text.find("[", pos)
    depth, in_str, lines, expect = 0, False, [], True
    line = text.count("\n", 0, pos) + 1
    for ch in text[pos:]:
        if ch == "\n":
            line += 1
        if in_str:
            in_str = ch != '"'
            continue
        if ch == '"':
            in_str = True
        if ch in "[{":
            depth += 1
            if depth == 2 and expect:
                lines.append(line)
                expect = False
        elif ch in "]}":
            depth -= 1
            if depth == 0:
                break
        elif ch == "," and depth == 1:
            expect = True
    return lines


def _complex(entry, field: str, line) -> complex:
    if (not isinstance(entry, list) or len(entry) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)):
        raise SchemaError("complex entries must be [re, im] number pairs", field=field, line=line)
    return complex(entry[0], entry[1])


def _int(doc: dict, key: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise SchemaError(f"must be a positive integer, got {v!r}", field=key)
    return v


def parse_text(text: str) -> MpsTensor | QuantumChannel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    if doc.get("version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported version {doc.get('version')!r}", field="version")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"kind must be one of {sorted(KINDS)}, got {kind!r}", field="kind")
    if doc.get("boundary", "periodic") != "periodic":
        raise SchemaError("only periodic boundary conditions are supported", field="boundary")
    key = KINDS[kind]
    d, D = _int(doc, "d"), _int(doc, "D")
    stack = doc.get(key)
    if not isinstance(stack, list):
        raise SchemaError("missing or not a list", field=key)
    starts = _array_element_lines(text, key)
    if len(stack) != d:
        raise SchemaError(f"expected d={d} matrices, found {len(stack)}", field=key)
    out = np.empty((d, D, D), dtype=complex)
    for i, M in enumerate(stack):
        where, line = f"{key}[{i}]", starts[i] if i < len(starts) else None
        if not isinstance(M, list) or len(M) != D or any(not isinstance(r, list) or len(r) != D for r in M):
            raise SchemaError(f"matrix is not {D}x{D}", field=where, line=line)
        for a, r in enumerate(M):
            for b, z in enumerate(r):
                out[i, a, b] = _complex(z, f"{where}[{a}][{b}]", None if line is None else line + 1 + a)
    if not np.all(np.isfinite(out)):
        raise SchemaError("non-finite entry", field=key)
    if not np.any(out):
        raise InvariantViolation("all matrices vanish")
    return MpsTensor(out) if kind == "mps-tensor" else QuantumChannel(out)


def parse_tensor_file(path) -> MpsTensor | QuantumChannel:
    """Read a ``v1`` tensor or channel file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text)


def write_tensor_file(path, obj) -> None:
    Path(path).write_text(serialize(obj), encoding="utf-8")


def digest(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return "sha256:" + hashlib.sha256(data).hexdigest()


def to_jsonable(x):
    """Convert numpy scalars/arrays and complex numbers for ``json.dumps``."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def payload_text(results) -> str:
    """Canonical JSON of a results block; this is what the payload digest covers."""
    return json.dumps(to_jsonable(results), sort_keys=True, separators=(",", ":"))
