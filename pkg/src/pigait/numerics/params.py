"""Flat learnable-parameter vector with named, shaped slices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ParamStore:
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    slices: dict[str, tuple[int, tuple[int, ...]]] = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self._rng = np.random.default_rng(self.rng_seed)
        self._check_cover()

    def _check_cover(self):
        pos = 0
        for name, (off, shape) in sorted(self.slices.items(), key=lambda kv: kv[1][0]):
            if off != pos:
                raise ValueError(f"slice {name!r} at offset {off}, expected {pos}")
            pos += int(np.prod(shape, dtype=np.int64))
        if pos != self.values.size:
            raise ValueError(f"slices cover {pos} values, store holds {self.values.size}")

    def __len__(self):
        return self.values.size

    def __contains__(self, name):
        return name in self.slices

    def register(self, name: str, shape, init: str = "glorot", scale: float = 1.0) -> np.ndarray:
        """Append a new slice and initialise it. Returns a view of the slice."""
        if name in self.slices:
            raise KeyError(f"parameter slice {name!r} already registered")
        shape = tuple(int(s) for s in shape)
        size = int(np.prod(shape, dtype=np.int64))
        if init == "zeros":
            block = np.zeros(size)
        elif init == "ones":
            block = np.ones(size)
        elif init == "glorot":
            fan_in = shape[0] if len(shape) > 1 else 1
            fan_out = shape[-1]
            lim = scale * math.sqrt(6.0 / (fan_in + fan_out))
            block = self._rng.uniform(-lim, lim, size)
        elif init == "normal":
            block = scale * self._rng.standard_normal(size)
        else:
            raise ValueError(f"unknown init {init!r}")
        self.slices[name] = (self.values.size, shape)
        self.values = np.concatenate([self.values, block])
        return self.view(name)

    def view(self, name: str) -> np.ndarray:
        try:
            off, shape = self.slices[name]
        except KeyError:
            raise KeyError(f"unregistered parameter slice {name!r}") from None
        size = int(np.prod(shape, dtype=np.int64))
        return self.values[off:off + size].reshape(shape)

    def slice_range(self, name: str) -> tuple[int, int]:
        off, shape = self.slices[name]
        return off, off + int(np.prod(shape, dtype=np.int64))

    def names(self) -> list[str]:
        return sorted(self.slices, key=lambda n: self.slices[n][0])

    def copy(self) -> "ParamStore":
        return ParamStore(self.values.copy(), dict(self.slices), self.rng_seed)

    def with_values(self, values) -> "ParamStore":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ValueError(f"expected {self.values.shape} values, got {values.shape}")
        return ParamStore(values.copy(), dict(self.slices), self.rng_seed)
