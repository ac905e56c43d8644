"""Rectangular charts, sampled fields, finite differences and the SGF1 format.

Field values are stored as arrays of shape ``(n1, n2, n3, n4, *payload)``.
Derivatives add one axis of length 4 right after the grid axes, so
``fd_partials(v)[i1, i2, i3, i4, alpha, ...] = d_alpha v``.
"""
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, GridTooSmall
from .tensor_core import EPS4

MIN_POINTS = 5
SGF1_MAGIC = "SGF1"

PAYLOAD_COMPONENTS = {
    "sigma": (3, 4, 4),
    "coframe": (4, 4),
    "metric": (4, 4),
    "gauge": (3, 4),
    "curvature": (3, 4, 4),
    "scalar": (),
}


@dataclass(frozen=True)
class ChartGrid:
    lo: tuple
    hi: tuple
    n: tuple
    periodic: bool = False

    def __post_init__(self):
        lo = tuple(float(v) for v in np.broadcast_to(self.lo, 4))
        hi = tuple(float(v) for v in np.broadcast_to(self.hi, 4))
        n = tuple(int(v) for v in np.broadcast_to(self.n, 4))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)
        if min(n) < MIN_POINTS:
            raise GridTooSmall(f"need at least {MIN_POINTS} points per axis, got {n}")
        if any(b <= a for a, b in zip(lo, hi)):
            raise GridTooSmall("chart bounds must satisfy lo < hi")

    @classmethod
    def cube(cls, lo, hi, n, periodic=False):
        return cls((lo,) * 4, (hi,) * 4, (n,) * 4, periodic)

    @property
    def spacing(self):
        denom = np.array(self.n, float) if self.periodic else np.array(self.n, float) - 1.0
        return (np.array(self.hi) - np.array(self.lo)) / denom

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    def axis(self, mu):
        return self.lo[mu] + self.spacing[mu] * np.arange(self.n[mu])

    def coords(self):
        """Point coordinates, shape ``(n1, n2, n3, n4, 4)``."""
        return np.stack(np.meshgrid(*(self.axis(m) for m in range(4)), indexing="ij"), axis=-1)

    def point(self, index):
        return np.array(self.lo) + self.spacing * np.asarray(index, float)

    def cell_volume(self):
        return float(np.prod(self.spacing))

    def quadrature_weights(self):
        """Midpoint weights on periodic grids, trapezoid weights otherwise."""
        if self.periodic:
            return np.full(self.n, self.cell_volume())
        w = self.cell_volume()
        for mu in range(4):
            edge = np.ones(self.n[mu])
            edge[[0, -1]] = 0.5
            shape = [1, 1, 1, 1]
            shape[mu] = -1
            w = w * edge.reshape(shape)
        return np.broadcast_to(w, self.n).copy()

    @property
    def quadrature(self):
        return "midpoint" if self.periodic else "trapezoid"

    def window(self, index, halo=2):
        """Non-periodic sub-grid of ``2*halo+1`` points per axis centred on ``index``.

        Its points coincide with points of this grid (for periodic grids the
        coordinates are unwrapped), and central stencils at the centre see the
        same neighbours as on the full grid, so nested derivatives of depth
        ``halo`` reproduce the full-grid value there exactly.
        """
        index = np.asarray(index)
        h = self.spacing
        lo = np.array(self.lo) + (index - halo) * h
        hi = np.array(self.lo) + (index + halo) * h
        if not self.periodic and (np.any(index - halo < 0) or np.any(index + halo > np.array(self.n) - 1)):
            raise GridTooSmall("window reaches beyond the chart")
        return ChartGrid(tuple(lo), tuple(hi), (2 * halo + 1,) * 4, False)

    def refined(self):
        """Grid with half the spacing and the same lower corner; point k maps to 2k."""
        if self.periodic:
            return ChartGrid(self.lo, self.hi, tuple(2 * v for v in self.n), True)
        h = self.spacing / 2.0
        n = tuple(2 * v for v in self.n)
        hi = tuple(np.array(self.lo) + h * (np.array(n) - 1))
        return ChartGrid(self.lo, hi, n, False)

    def header(self):
        return {"lo": list(self.lo), "hi": list(self.hi), "n": list(self.n), "periodic": bool(self.periodic)}


@dataclass
class SampledField:
    grid: ChartGrid
    values: np.ndarray
    kind: str = "generic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.values.shape[:4]) != self.grid.n:
            raise FormatError(f"values shape {self.values.shape} does not match grid {self.grid.n}")

    @property
    def payload_shape(self):
        return self.values.shape[4:]

    def flat(self):
        """Values as ``(points, components)`` with x^1 varying fastest."""
        comps = int(np.prod(self.payload_shape))
        return np.transpose(self.values.reshape(self.grid.n + (comps,)), (3, 2, 1, 0, 4)).reshape(-1, comps)

    @classmethod
    def from_flat(cls, grid, flat, payload_shape, kind="generic"):
        n = grid.n
        comps = int(np.prod(payload_shape))
        arr = np.asarray(flat).reshape(n[3], n[2], n[1], n[0], comps)
        arr = np.transpose(arr, (3, 2, 1, 0, 4)).reshape(n + tuple(payload_shape))
        return cls(grid, np.ascontiguousarray(arr), kind)


def _partial_axis(v, mu, h, periodic, out):
    sl = lambda a, b: tuple([slice(None)] * mu + [slice(a, b)])
    np.subtract(v[sl(2, None)], v[sl(None, -2)], out=out[sl(1, -1)])
    if periodic:
        np.subtract(v[sl(1, 2)], v[sl(-1, None)], out=out[sl(0, 1)])
        np.subtract(v[sl(0, 1)], v[sl(-2, -1)], out=out[sl(-1, None)])
    else:
        out[sl(0, 1)] = -3.0 * v[sl(0, 1)] + 4.0 * v[sl(1, 2)] - v[sl(2, 3)]
        out[sl(-1, None)] = 3.0 * v[sl(-1, None)] - 4.0 * v[sl(-2, -1)] + v[sl(-3, -2)]
    out *= 1.0 / (2.0 * h)


def fd_partials(values, grid):
    """Second-order finite-difference partials; new axis 4 indexes the direction."""
    values = np.asarray(values)
    if min(values.shape[:4]) < MIN_POINTS:
        raise GridTooSmall(f"need at least {MIN_POINTS} points per axis")
    h = grid.spacing
    out = np.empty(values.shape[:4] + (4,) + values.shape[4:], dtype=values.dtype)
    for mu in range(4):
        _partial_axis(values, mu, h[mu], grid.periodic, out[:, :, :, :, mu])
    return out


def fd_field(f: SampledField, kind=None):
    return SampledField(f.grid, fd_partials(f.values, f.grid), kind or f"d_{f.kind}")


def exterior_d_from_partials(ds):
    """Packed 3-forms of dSigma^i from partials ``ds[..., alpha, i, b, c]``; returns ``(..., 3, 4)``.

    Since ``(dS)_abc = 3 d_[a S_bc]``, the packed form is c^m = eps^{mabc} d_a S_bc / 2.
    """
    return 0.5 * np.einsum("mabc,...aibc->...im", EPS4, ds)


def write_sgf1(path_or_buf, f: SampledField, payload_kind=None):
    kind = payload_kind or f.kind
    flat = f.flat()
    header = {"magic": SGF1_MAGIC, "payload_kind": kind, **f.grid.header(),
              "component_count": int(flat.shape[1])}
    data = json.dumps(header, sort_keys=True).encode() + b"\n" + flat.astype("<f8").tobytes()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(data)
    else:
        with open(path_or_buf, "wb") as fh:
            fh.write(data)


def read_sgf1(path_or_buf, payload_shape=None):
    if hasattr(path_or_buf, "read"):
        raw = path_or_buf.read()
    else:
        with open(path_or_buf, "rb") as fh:
            raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError("missing SGF1 header line")
    try:
        header = json.loads(raw[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad SGF1 header: {exc}") from exc
    if not isinstance(header, dict) or header.get("magic") != SGF1_MAGIC:
        raise FormatError("not an SGF1 file")
    try:
        grid = ChartGrid(tuple(header["lo"]), tuple(header["hi"]), tuple(header["n"]), bool(header["periodic"]))
        comps = int(header["component_count"])
        kind = str(header["payload_kind"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"incomplete SGF1 header: {exc}") from exc
    body = raw[nl + 1:]
    expected = grid.size * comps * 8
    if len(body) != expected:
        raise FormatError(f"SGF1 body has {len(body)} bytes, expected {expected}")
    flat = np.frombuffer(body, dtype="<f8").reshape(grid.size, comps)
    if payload_shape is None:
        payload_shape = PAYLOAD_COMPONENTS.get(kind, (comps,))
        if int(np.prod(payload_shape)) != comps:
            payload_shape = (comps,)
    return SampledField.from_flat(grid, flat.astype(float), payload_shape, kind)


def sgf1_bytes(f: SampledField, payload_kind=None):
    buf = io.BytesIO()
    write_sgf1(buf, f, payload_kind)
    return buf.getvalue()
