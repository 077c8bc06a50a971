"""Unscrambled Sobol sequence driven by Joe-Kuo direction numbers."""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

BITS = 52
_SCALE = 2.0**-BITS
# size of the leading block that is skipped; also the per-region stride
SKIP = 2**16
EMBEDDED_TABLE = "new-joe-kuo-6.64"


class DimensionError(ValueError):
    """Requested dimension exceeds the loaded direction-number table."""


@dataclass(frozen=True)
class DirectionTable:
    """Primitive polynomials and initial direction numbers per dimension.

    Row ``j`` describes dimension ``j + 2``; dimension 1 is implicit (all
    ``m_i = 1``) exactly as in the published file format.
    """

    degrees: tuple[int, ...]
    coefficients: tuple[int, ...]
    initial: tuple[tuple[int, ...], ...]

    @property
    def max_dimension(self) -> int:
        return len(self.degrees) + 1


def parse_direction_numbers(text: str) -> DirectionTable:
    degrees, coeffs, initial = [], [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        fields = line.split()
        if not fields or not fields[0].isdigit():
            continue
        d, s, a, *m = (int(f) for f in fields)
        if d != len(degrees) + 2:
            raise ValueError(f"line {lineno}: expected dimension {len(degrees) + 2}, got {d}")
        if len(m) != s:
            raise ValueError(f"line {lineno}: degree {s} needs {s} direction numbers, got {len(m)}")
        for i, mi in enumerate(m, 1):
            if mi % 2 == 0 or mi >= 2**i:
                raise ValueError(f"line {lineno}: m_{i}={mi} must be odd and < 2^{i}")
        degrees.append(s)
        coeffs.append(a)
        initial.append(tuple(m))
    return DirectionTable(tuple(degrees), tuple(coeffs), tuple(initial))


_TABLE_CACHE: dict[str, DirectionTable] = {}


def load_direction_numbers(path: Union[str, os.PathLike, None] = None) -> DirectionTable:
    """Load a direction-number file; ``None`` selects the embedded 64-dim table."""
    key = str(path) if path is not None else EMBEDDED_TABLE
    table = _TABLE_CACHE.get(key)
    if table is None:
        if path is None:
            text = resources.files("trsearch.sampling").joinpath("data", EMBEDDED_TABLE).read_text()
        else:
            text = Path(path).read_text()
        table = _TABLE_CACHE[key] = parse_direction_numbers(text)
    return table


def direction_matrix(table: DirectionTable, dim: int) -> np.ndarray:
    """Return the ``(dim, BITS)`` matrix of direction integers ``V[j, i]``."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    if dim > table.max_dimension:
        raise DimensionError(
            f"dimension {dim} exceeds direction-number table size {table.max_dimension}"
        )
    V = np.zeros((dim, BITS), dtype=np.uint64)
    for i in range(BITS):
        V[0, i] = 1 << (BITS - 1 - i)
    for j in range(1, dim):
        s = table.degrees[j - 1]
        a = table.coefficients[j - 1]
        m = table.initial[j - 1]
        v = [0] * BITS
        for i in range(min(s, BITS)):
            v[i] = m[i] << (BITS - 1 - i)
        for i in range(s, BITS):
            x = v[i - s] ^ (v[i - s] >> s)
            for q in range(1, s):
                if (a >> (s - 1 - q)) & 1:
                    x ^= v[i - q]
            v[i] = x
        V[j] = v
    return V


class SobolEngine:
    """Sequential Sobol point generator.

    The point with raw index ``i`` is ``XOR_b V[:, b]`` over the set bits of
    the Gray code of ``i``; :meth:`point_at` computes it directly, while
    :meth:`next` advances incrementally and is bit-identical to it. The
    first block of ``SKIP`` points, which holds the all-zeros point at raw
    index 0, is never returned: the engine starts at raw index
    ``SKIP + offset``. Starting on a multiple of a power of two keeps every
    leading run of ``2**m`` points (``2**m <= SKIP``) a balanced net, which
    skipping only the origin would break.
    """

    def __init__(
        self,
        dimension: int,
        table: Optional[DirectionTable] = None,
        offset: int = 0,
    ):
        if offset < 0:
            raise ValueError("offset must be non-negative")
        self.dimension = dimension
        self.table = table if table is not None else load_direction_numbers()
        self._V = direction_matrix(self.table, dimension)
        self.start_index = SKIP + offset
        self.next_index = 0
        self._raw = self.start_index
        self._state = self._integer_point(self._raw)

    def _integer_point(self, raw: int) -> np.ndarray:
        gray = raw ^ (raw >> 1)
        x = np.zeros(self.dimension, dtype=np.uint64)
        b = 0
        while gray:
            if gray & 1:
                x ^= self._V[:, b]
            gray >>= 1
            b += 1
        return x

    def point_at(self, raw_index: int) -> np.ndarray:
        """Point at raw sequence index ``raw_index`` (0 is the origin)."""
        if raw_index < 0 or raw_index >= 2**BITS:
            raise IndexError("raw index out of range")
        return self._integer_point(raw_index).astype(np.float64) * _SCALE

    def next(self) -> np.ndarray:
        u = self._state.astype(np.float64) * _SCALE
        raw = self._raw
        # Gray-code step: flip the direction number at the lowest set bit of raw+1
        c = ((raw + 1) & -(raw + 1)).bit_length() - 1
        self._state = self._state ^ self._V[:, c]
        self._raw = raw + 1
        self.next_index += 1
        return u

    def draw(self, n: int) -> np.ndarray:
        return np.stack([self.next() for _ in range(n)]) if n else np.empty((0, self.dimension))


def sobol_unit_point(engine: SobolEngine) -> np.ndarray:
    return engine.next()
