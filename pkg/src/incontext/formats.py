"""Plain-text formats for measures, layer stacks, algebra elements and configs.

All floats are written with 17 significant digits so reading back is exact.
Lines starting with ``#`` and blank lines are ignored everywhere.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .attention import Attention, ContextFree, HeadParams, LayerStack, MlpParams, MultiHeadParams, PointwiseMap
from .measures import ParticleMeasure, SpaceTimeMeasure
from .universality.algebra import AlgebraElement

__all__ = [
    "FormatError",
    "dump_measure",
    "load_measure",
    "dump_stack",
    "load_stack",
    "dump_algebra",
    "load_algebra",
    "parse_config",
    "dump_config",
    "dump_json",
    "read_text",
    "write_text",
]


class FormatError(ValueError):
    """Malformed input text, with the offending line number when known."""


def _f(x: float) -> str:
    return format(float(x), ".17g")


def _row(values) -> str:
    return " ".join(_f(v) for v in np.ravel(values))


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _header(line: str, lineno: int, keyword: str | None = None) -> dict:
    parts = line.split()
    start = 0
    out = {}
    if keyword is not None:
        if parts[0] != keyword:
            raise FormatError(f"line {lineno}: expected '{keyword}', got '{parts[0]}'")
        start = 1
    for tok in parts[start:]:
        if "=" not in tok:
            raise FormatError(f"line {lineno}: expected key=value, got '{tok}'")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _floats(line: str, lineno: int, count: int | None = None) -> np.ndarray:
    try:
        vals = np.array([float(tok) for tok in line.split()])
    except ValueError:
        raise FormatError(f"line {lineno}: non-numeric entry in '{line}'") from None
    if count is not None and vals.size != count:
        raise FormatError(f"line {lineno}: expected {count} numbers, got {vals.size}")
    return vals


def _int(header: dict, key: str, lineno: int) -> int:
    try:
        return int(header[key])
    except KeyError:
        raise FormatError(f"line {lineno}: missing '{key}'") from None
    except ValueError:
        raise FormatError(f"line {lineno}: '{key}' must be an integer") from None


# --------------------------------------------------------------------------
# measures
# --------------------------------------------------------------------------


def dump_measure(mu) -> str:
    """``d=<d> spacetime=<0|1>`` then one particle per line: ``weight x_1 .. x_d [time]``."""
    st = isinstance(mu, SpaceTimeMeasure)
    out = [f"d={mu.dim} spacetime={int(st)}"]
    for i in range(mu.size):
        vals = [mu.weights[i], *mu.points[i]]
        if st:
            vals.append(mu.times[i])
        out.append(_row(vals))
    return "\n".join(out) + "\n"


def load_measure(text: str):
    lines = list(_lines(text))
    if not lines:
        raise FormatError("empty measure file")
    lineno, head = lines[0]
    hdr = _header(head, lineno)
    d = _int(hdr, "d", lineno)
    st = _int(hdr, "spacetime", lineno) if "spacetime" in hdr else 0
    width = 1 + d + st
    rows = np.array([_floats(line, n, width) for n, line in lines[1:]]).reshape(-1, width)
    if rows.shape[0] == 0:
        raise FormatError("measure has no particles")
    try:
        if st:
            return SpaceTimeMeasure(rows[:, 1:1 + d], rows[:, -1], rows[:, 0])
        return ParticleMeasure(rows[:, 1:], rows[:, 0])
    except ValueError as exc:
        raise FormatError(str(exc)) from None


# --------------------------------------------------------------------------
# layer stacks
# --------------------------------------------------------------------------


def _dump_matrix(name: str, M: np.ndarray) -> list[str]:
    M = np.atleast_2d(M)
    return [f"{name} {M.shape[0]} {M.shape[1]}"] + [_row(r) for r in M]


def dump_stack(stack: LayerStack) -> str:
    out = [f"stack layers={len(stack.layers)}"]
    for layer in stack.layers:
        if isinstance(layer, Attention):
            th = layer.params
            out.append(f"attention d_in={th.d_in} heads={th.H} k={th.k} d_head={th.d_head} masked={int(layer.masked)}")
            for W, head in th.heads:
                out += _dump_matrix("W", W)
                out += _dump_matrix("K", head.K)
                out += _dump_matrix("Q", head.Q)
                out += _dump_matrix("V", head.V)
        elif isinstance(layer, ContextFree):
            out.append(f"mlp depth={layer.mlp.depth}")
            for W, b, act in layer.mlp.layers:
                out.append(f"dense act={act}")
                out += _dump_matrix("W", W)
                out += _dump_matrix("b", np.asarray(b)[None, :])
        elif isinstance(layer, PointwiseMap):
            raise FormatError(f"layer '{layer.name}' is a Python function and cannot be serialised")
        else:
            raise FormatError(f"unknown layer type {type(layer).__name__}")
    return "\n".join(out) + "\n"


class _Cursor:
    def __init__(self, text: str):
        self.lines = list(_lines(text))
        self.i = 0

    def next(self):
        if self.i >= len(self.lines):
            raise FormatError("unexpected end of input")
        item = self.lines[self.i]
        self.i += 1
        return item

    def matrix(self, name: str) -> np.ndarray:
        lineno, line = self.next()
        parts = line.split()
        if len(parts) != 3 or parts[0] != name:
            raise FormatError(f"line {lineno}: expected '{name} <rows> <cols>'")
        rows, cols = int(parts[1]), int(parts[2])
        return np.array([_floats(self.next()[1], lineno + r + 1, cols) for r in range(rows)]).reshape(rows, cols)


def load_stack(text: str) -> LayerStack:
    try:
        return _load_stack(text)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _load_stack(text: str) -> LayerStack:
    cur = _Cursor(text)
    lineno, line = cur.next()
    n_layers = _int(_header(line, lineno, "stack"), "layers", lineno)
    layers = []
    for _ in range(n_layers):
        lineno, line = cur.next()
        kind = line.split()[0]
        if kind == "attention":
            hdr = _header(line, lineno, "attention")
            heads = []
            for _ in range(_int(hdr, "heads", lineno)):
                W = cur.matrix("W")
                K, Q, V = cur.matrix("K"), cur.matrix("Q"), cur.matrix("V")
                heads.append((W, HeadParams(K, Q, V)))
            layers.append(Attention(MultiHeadParams(tuple(heads)), bool(_int(hdr, "masked", lineno))))
        elif kind == "mlp":
            hdr = _header(line, lineno, "mlp")
            dense = []
            for _ in range(_int(hdr, "depth", lineno)):
                ln, dl = cur.next()
                act = _header(dl, ln, "dense").get("act", "identity")
                W = cur.matrix("W")
                b = cur.matrix("b")[0]
                dense.append((W, b, act))
            layers.append(ContextFree(MlpParams(tuple(dense))))
        else:
            raise FormatError(f"line {lineno}: unknown layer kind '{kind}'")
    return LayerStack(tuple(layers))


# --------------------------------------------------------------------------
# algebra elements
# --------------------------------------------------------------------------


def dump_algebra(A: AlgebraElement) -> str:
    """Header ``algebra d= dprime= T= N=`` then ``t n h b c v a_1 .. a_d`` per line."""
    out = [f"algebra d={A.dim} dprime={A.dprime} T={A.T} N={A.N}"]
    for n in range(A.N):
        for t in range(A.T):
            for h in range(A.dprime):
                out.append(f"{t} {n} {h} " + _row([A.b[h, t, n], A.c[h, t, n], A.v[h, t, n], *A.a[h, t, n]]))
    return "\n".join(out) + "\n"


def load_algebra(text: str) -> AlgebraElement:
    lines = list(_lines(text))
    if not lines:
        raise FormatError("empty algebra file")
    lineno, head = lines[0]
    hdr = _header(head, lineno, "algebra")
    d, dp, T, N = (_int(hdr, k, lineno) for k in ("d", "dprime", "T", "N"))
    a = np.zeros((dp, T, N, d))
    b, c, v = (np.zeros((dp, T, N)) for _ in range(3))
    seen = np.zeros((dp, T, N), dtype=bool)
    for ln, line in lines[1:]:
        parts = line.split()
        if len(parts) != 6 + d:
            raise FormatError(f"line {ln}: expected {6 + d} fields, got {len(parts)}")
        try:
            t, n, h = (int(p) for p in parts[:3])
        except ValueError:
            raise FormatError(f"line {ln}: indices must be integers") from None
        if not (0 <= t < T and 0 <= n < N and 0 <= h < dp):
            raise FormatError(f"line {ln}: index ({t},{n},{h}) out of range")
        vals = _floats(" ".join(parts[3:]), ln)
        b[h, t, n], c[h, t, n], v[h, t, n] = vals[:3]
        a[h, t, n] = vals[3:]
        seen[h, t, n] = True
    if not seen.all():
        raise FormatError(f"{int((~seen).sum())} grid entries missing")
    return AlgebraElement(a, b, c, v)


# --------------------------------------------------------------------------
# configs and JSON
# --------------------------------------------------------------------------


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; keys may be dotted (``fit.N = 4``).  Later keys win."""
    out = {}
    for lineno, line in _lines(text):
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise FormatError(f"line {lineno}: empty key")
        out[k] = v
    return out


def dump_config(cfg: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in sorted(cfg.items()))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def read_text(path) -> str:
    return Path(path).read_text()


def write_text(path, text: str) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
