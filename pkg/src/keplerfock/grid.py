"""GridState: sampled wavefunctions on a uniform 3D lattice, and their file format.

Binary layout (all little-endian):

    8 bytes   magic b"KFGRID01"
    int64     space code (0 = position, 1 = momentum)
    int64     N
    float64   E, p0, hbar
    float64   origin[3]
    float64   spacing[3]
    int64     shape[3]
    complex   samples, C order, as interleaved float64 (re, im) pairs

A JSON sidecar ``<path>.json`` mirrors the header.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, PreconditionError
from .geometry import SemiclassicalScale

MAGIC = b"KFGRID01"
_SPACES = {"position": 0, "momentum": 1}
_HEADER = struct.Struct("<8sqq3d3d3d3q")


@dataclass(frozen=True)
class GridState:
    origin: np.ndarray
    spacing: np.ndarray
    samples: np.ndarray
    scale: SemiclassicalScale
    space: str = "position"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.space not in _SPACES:
            raise PreconditionError(f"space must be one of {list(_SPACES)}")
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 3:
            raise PreconditionError("samples must be a 3D array")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "spacing", np.asarray(self.spacing, dtype=float).reshape(3))

    @property
    def shape(self):
        return self.samples.shape

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self):
        return [self.origin[k] + self.spacing[k] * np.arange(self.shape[k]) for k in range(3)]

    def points(self) -> np.ndarray:
        """Lattice points, shape (*shape, 3)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def norm(self) -> float:
        """Discrete L2 norm."""
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.cell_volume))

    def header(self) -> dict:
        return {
            "format": MAGIC.decode(),
            "space": self.space,
            "N": self.scale.N,
            "E": self.scale.E,
            "p0": self.scale.p0,
            "hbar": self.scale.hbar,
            "origin": self.origin.tolist(),
            "spacing": self.spacing.tolist(),
            "shape": list(self.shape),
            "dtype": "complex128 little-endian, interleaved re/im, C order",
            "meta": self.meta,
        }

    def save(self, path) -> Path:
        path = Path(path)
        head = _HEADER.pack(
            MAGIC,
            _SPACES[self.space],
            self.scale.N,
            self.scale.E,
            self.scale.p0,
            self.scale.hbar,
            *self.origin,
            *self.spacing,
            *self.shape,
        )
        with open(path, "wb") as fh:
            fh.write(head)
            fh.write(np.ascontiguousarray(self.samples, dtype="<c16").tobytes())
        Path(str(path) + ".json").write_text(json.dumps(self.header(), indent=2) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "GridState":
        path = Path(path)
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise ConfigError(f"{path}: truncated header")
        fields = _HEADER.unpack_from(raw)
        if fields[0] != MAGIC:
            raise ConfigError(f"{path}: bad magic {fields[0]!r}")
        code, N, E, p0, hbar = fields[1:6]
        origin, spacing, shape = fields[6:9], fields[9:12], fields[12:15]
        count = int(np.prod(shape))
        body = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
        if body.size != count:
            raise ConfigError(f"{path}: expected {count} samples, found {body.size}")
        space = {v: k for k, v in _SPACES.items()}[code]
        meta = {}
        side = Path(str(path) + ".json")
        if side.exists():
            meta = json.loads(side.read_text()).get("meta", {})
        return cls(
            origin, spacing, body.reshape(shape).astype(complex),
            SemiclassicalScale(int(N), E, p0, hbar), space, meta,
        )
