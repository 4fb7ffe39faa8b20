"""Loop-spec files: a small JSON document describing a banded (matrix) loop.

Example (the scalar loop ``z - 2``)::

    {
      "version": 1,
      "n": 1,
      "kmin": 0,
      "kmax": 1,
      "entries": [
        [
          [[-2.0, 0.0], [1.0, 0.0]]
        ]
      ]
    }

``entries[i][j]`` lists the coefficients of entry ``(i, j)`` for exponents
``kmin..kmax`` as ``[re, im]`` pairs.  An optional ``lie_basis`` holds a list
of ``n x n`` matrices in the same ``[re, im]`` encoding.  Floats are written
with ``repr`` precision, so emit/parse round-trips bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .laurent import LaurentSeries, MatrixLoop

__all__ = [
    "SPEC_VERSION",
    "LoopSpec",
    "parse_loop_spec",
    "emit_loop_spec",
    "read_loop_spec",
    "complex_to_json",
    "matrix_to_json",
    "spec_to_dict",
    "spec_from_dict",
]

SPEC_VERSION = 1


@dataclass(eq=False)
class LoopSpec:
    n: int
    kmin: int
    kmax: int
    coeffs: np.ndarray
    lie_basis: np.ndarray | None = None
    version: int = SPEC_VERSION

    def __eq__(self, other):
        if not isinstance(other, LoopSpec):
            return NotImplemented
        same_basis = (self.lie_basis is None and other.lie_basis is None) or (
            self.lie_basis is not None
            and other.lie_basis is not None
            and _bit_equal(self.lie_basis, other.lie_basis)
        )
        return (
            (self.version, self.n, self.kmin, self.kmax) == (other.version, other.n, other.kmin, other.kmax)
            and _bit_equal(self.coeffs, other.coeffs)
            and same_basis
        )

    @classmethod
    def from_loop(cls, loop, lie_basis=None) -> "LoopSpec":
        coeffs = loop.coeffs if isinstance(loop, MatrixLoop) else loop.coeffs[:, None, None]
        basis = None if lie_basis is None else np.asarray(lie_basis, dtype=complex)
        return cls(coeffs.shape[1], loop.kmin, loop.kmax, np.array(coeffs), basis)

    def to_matrix_loop(self) -> MatrixLoop:
        return MatrixLoop(self.coeffs, self.kmin)

    def to_series(self) -> LaurentSeries:
        if self.n != 1:
            raise ParseError(f"expected a scalar loop (n = 1), got n = {self.n}", where="n")
        return LaurentSeries(self.coeffs[:, 0, 0], self.kmin)


def _bit_equal(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def _num(x):
    return json.dumps(float(x))


def complex_to_json(c):
    c = complex(c)
    return [c.real, c.imag]


def matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[complex_to_json(v) for v in row] for row in m]


def _pairs(values):
    return "[" + ", ".join(f"[{_num(v.real)}, {_num(v.imag)}]" for v in values) + "]"


def emit_loop_spec(spec: LoopSpec) -> str:
    lines = [
        "{",
        f'  "version": {spec.version},',
        f'  "n": {spec.n},',
        f'  "kmin": {spec.kmin},',
        f'  "kmax": {spec.kmax},',
        '  "entries": [',
    ]
    for i in range(spec.n):
        lines.append("    [")
        row = [f"      {_pairs(spec.coeffs[:, i, j])}" for j in range(spec.n)]
        lines.append(",\n".join(row))
        lines.append("    ]" + ("," if i < spec.n - 1 else ""))
    if spec.lie_basis is None:
        lines.append("  ]")
    else:
        lines.append("  ],")
        lines.append('  "lie_basis": [')
        mats = []
        for m in spec.lie_basis:
            rows = ",\n".join(f"      {_pairs(r)}" for r in m)
            mats.append("    [\n" + rows + "\n    ]")
        lines.append(",\n".join(mats))
        lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _int_field(doc, key):
    if key not in doc:
        raise ParseError("missing field", where=key)
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"expected an integer, got {v!r}", where=key)
    return v


def _complex(pair, where):
    if not (isinstance(pair, list) and len(pair) == 2):
        raise ParseError(f"expected a [re, im] pair, got {pair!r}", where=where)
    re, im = pair
    for part in (re, im):
        if isinstance(part, bool) or not isinstance(part, (int, float)):
            raise ParseError(f"expected numbers, got {pair!r}", where=where)
        if not math.isfinite(part):
            raise ParseError("coefficients must be finite", where=where)
    return complex(float(re), float(im))


def _complex_list(values, length, where):
    if not isinstance(values, list):
        raise ParseError("expected a list of [re, im] pairs", where=where)
    if length is not None and len(values) != length:
        raise ParseError(f"band declares {length} coefficients, got {len(values)}", where=where)
    return [_complex(p, f"{where}[{k}]") for k, p in enumerate(values)]


def parse_loop_spec(text: str) -> LoopSpec:
    """Parse loop-spec JSON text; errors name the line or field at fault."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, where=f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", where="line 1")
    version = _int_field(doc, "version")
    if version != SPEC_VERSION:
        raise ParseError(f"unsupported version {version}", where="version")
    n = _int_field(doc, "n")
    if n < 1:
        raise ParseError("matrix dimension must be >= 1", where="n")
    kmin, kmax = _int_field(doc, "kmin"), _int_field(doc, "kmax")
    if kmin > kmax:
        raise ParseError(f"kmin {kmin} > kmax {kmax}", where="kmin")
    length = kmax - kmin + 1
    entries = doc.get("entries")
    if not isinstance(entries, list) or len(entries) != n:
        raise ParseError(f"expected {n} rows", where="entries")
    coeffs = np.zeros((length, n, n), dtype=complex)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"expected {n} entries", where=f"entries[{i}]")
        for j, values in enumerate(row):
            coeffs[:, i, j] = _complex_list(values, length, f"entries[{i}][{j}]")
    basis = None
    if doc.get("lie_basis") is not None:
        raw = doc["lie_basis"]
        if not isinstance(raw, list) or not raw:
            raise ParseError("expected a non-empty list of matrices", where="lie_basis")
        basis = np.zeros((len(raw), n, n), dtype=complex)
        for d, m in enumerate(raw):
            if not isinstance(m, list) or len(m) != n:
                raise ParseError(f"expected {n} rows", where=f"lie_basis[{d}]")
            for i, row in enumerate(m):
                basis[d, i] = _complex_list(row, n, f"lie_basis[{d}][{i}]")
    unknown = set(doc) - {"version", "n", "kmin", "kmax", "entries", "lie_basis"}
    if unknown:
        raise ParseError(f"unknown fields {sorted(unknown)}", where="top level")
    return LoopSpec(n, kmin, kmax, coeffs, basis, version)


def read_loop_spec(path) -> tuple[LoopSpec, bytes]:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 ({exc.reason})", where=str(path)) from None
    return parse_loop_spec(text), raw


def spec_to_dict(spec: LoopSpec) -> dict:
    """The JSON tree of ``spec`` (as embedded in reports)."""
    out = {
        "version": spec.version,
        "n": spec.n,
        "kmin": spec.kmin,
        "kmax": spec.kmax,
        "entries": [
            [[complex_to_json(v) for v in spec.coeffs[:, i, j]] for j in range(spec.n)] for i in range(spec.n)
        ],
    }
    if spec.lie_basis is not None:
        out["lie_basis"] = [matrix_to_json(m) for m in spec.lie_basis]
    return out


def spec_from_dict(doc: dict) -> LoopSpec:
    return parse_loop_spec(json.dumps(doc))
