"""Discrete geometry and calculus on truncated lattice graphs Z^d.

The box is the l1 ball {x : |x| = sum |x_i| <= L}. Values outside the box
are zero (Dirichlet extension), so every site has 2d neighbor slots.
"""

import io
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse

from .constants import FIELD_CSV_VALUE_COLUMN, FLOAT_FORMAT
from .livetypes import DomainMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoxDomain:
    """Truncated lattice {x in Z^d : |x|_1 <= L} with zero exterior."""

    d: int
    L: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {self.d}")
        if self.L < 0:
            raise InvalidParameterError(f"radius must be >= 0, got {self.L}")

    @cached_property
    def sites(self) -> np.ndarray:
        """Site coordinates, shape (site_count, d), in lexicographic order."""
        axis = np.arange(-self.L, self.L + 1)
        mesh = np.stack(np.meshgrid(*([axis] * self.d), indexing="ij"), axis=-1)
        coords = mesh.reshape(-1, self.d)
        coords = coords[np.abs(coords).sum(axis=1) <= self.L]
        coords.setflags(write=False)
        return coords

    @property
    def site_count(self) -> int:
        return int(self.sites.shape[0])

    @cached_property
    def _index_grid(self) -> np.ndarray:
        # One cell of padding on every side so neighbor lookups never go out of range
        grid = np.full((2 * self.L + 3,) * self.d, -1, dtype=np.int64)
        grid[tuple((self.sites + self.L + 1).T)] = np.arange(self.site_count)
        return grid

    def index_of(self, x: Sequence[int]) -> int:
        """Enumeration index of site x, or -1 if x lies outside the box."""
        coords = np.asarray(x, dtype=np.int64).reshape(self.d)
        if np.abs(coords).sum() > self.L:
            return -1
        return int(self._index_grid[tuple(coords + self.L + 1)])

    @cached_property
    def neighbors(self) -> np.ndarray:
        """Neighbor indices, shape (site_count, 2d); -1 marks an exterior slot."""
        shifted = self.sites + self.L + 1
        columns = []
        for axis in range(self.d):
            for sign in (-1, 1):
                offset = np.zeros(self.d, dtype=np.int64)
                offset[axis] = sign
                columns.append(self._index_grid[tuple((shifted + offset).T)])
        table = np.stack(columns, axis=1)
        table.setflags(write=False)
        return table

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected edges with both endpoints in the box, shape (m, 2), i < j."""
        n = self.site_count
        rows = np.repeat(np.arange(n), 2 * self.d)
        cols = self.neighbors.reshape(-1)
        keep = cols > rows
        pairs = np.stack([rows[keep], cols[keep]], axis=1)
        pairs.setflags(write=False)
        return pairs

    @cached_property
    def exterior_degree(self) -> np.ndarray:
        """Number of neighbor slots of each site that fall outside the box."""
        return (self.neighbors < 0).sum(axis=1)

    @cached_property
    def laplacian_matrix(self) -> sparse.csr_matrix:
        """Sparse matrix of Delta with zero exterior: A - 2d I."""
        n = self.site_count
        i, j = self.edges[:, 0], self.edges[:, 1]
        ones = np.ones(len(i))
        adjacency = sparse.coo_matrix(
            (np.concatenate([ones, ones]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        )
        return (adjacency - 2 * self.d * sparse.identity(n)).tocsr()

    @cached_property
    def l1_norms(self) -> np.ndarray:
        """|x| = sum |x_i| per site."""
        return np.abs(self.sites).sum(axis=1).astype(float)

    @cached_property
    def sup_norms(self) -> np.ndarray:
        """|x|_inf = max |x_i| per site."""
        return np.abs(self.sites).max(axis=1).astype(float)

    @property
    def origin_index(self) -> int:
        return self.index_of([0] * self.d)


class _Field:
    """Shared behavior of real and complex lattice fields."""

    dtype: type = float

    def __init__(self, domain: BoxDomain, values: np.ndarray | Sequence[float]):
        arr = np.array(values, dtype=self.dtype).reshape(-1)
        if arr.shape[0] != domain.site_count:
            raise InvalidParameterError(
                f"field has {arr.shape[0]} values but domain has {domain.site_count} sites"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("field values must be finite")
        arr.setflags(write=False)
        self.domain = domain
        self.values = arr

    def _check_same_domain(self, other: "_Field") -> None:
        if self.domain != other.domain:
            raise DomainMismatchError(
                f"fields live on different domains: {self.domain} vs {other.domain}"
            )

    def __add__(self, other):
        self._check_same_domain(other)
        return type(self)(self.domain, self.values + other.values)

    def __sub__(self, other):
        self._check_same_domain(other)
        return type(self)(self.domain, self.values - other.values)

    def __neg__(self):
        return type(self)(self.domain, -self.values)

    def __mul__(self, scalar):
        return type(self)(self.domain, self.values * scalar)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d={self.domain.d}, L={self.domain.L}, n={len(self.values)})"

    def at(self, x: Sequence[int]):
        """Value at site x (zero outside the box)."""
        idx = self.domain.index_of(x)
        return self.values[idx] if idx >= 0 else self.dtype(0)


class LatticeField(_Field):
    """Real-valued function on a BoxDomain."""

    dtype = float

    @classmethod
    def zeros(cls, domain: BoxDomain) -> "LatticeField":
        return cls(domain, np.zeros(domain.site_count))

    @classmethod
    def delta(cls, domain: BoxDomain, x: Sequence[int] | None = None, value: float = 1.0) -> "LatticeField":
        """value * delta_x (x defaults to the origin)."""
        idx = domain.index_of(x if x is not None else [0] * domain.d)
        if idx < 0:
            raise InvalidParameterError(f"site {x} lies outside the box")
        values = np.zeros(domain.site_count)
        values[idx] = value
        return cls(domain, values)

    def to_complex(self) -> "ComplexLatticeField":
        return ComplexLatticeField(self.domain, self.values.astype(complex))


class ComplexLatticeField(_Field):
    """Complex-valued function on a BoxDomain, used by the time evolution."""

    dtype = complex

    @classmethod
    def zeros(cls, domain: BoxDomain) -> "ComplexLatticeField":
        return cls(domain, np.zeros(domain.site_count, dtype=complex))

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)


# Array kernels. Leading axes index independent fields; the last axis is sites.


def apply_laplacian(domain: BoxDomain, values: np.ndarray) -> np.ndarray:
    """Delta applied to the rows of `values` (any leading shape)."""
    flat = values.reshape(-1, domain.site_count)
    out = (domain.laplacian_matrix @ flat.T).T
    return np.asarray(out).reshape(values.shape)


def gradient_energy_values(domain: BoxDomain, values: np.ndarray) -> np.ndarray:
    """Once-per-edge sum of squared differences, exterior values zero."""
    i, j = domain.edges[:, 0], domain.edges[:, 1]
    interior = np.sum(np.abs(values[..., i] - values[..., j]) ** 2, axis=-1)
    boundary = np.sum(domain.exterior_degree * np.abs(values) ** 2, axis=-1)
    return interior + boundary


# Operations


def laplacian(u: LatticeField) -> LatticeField:
    """(Delta u)(x) = sum over the 2d neighbors y of (u(y) - u(x))."""
    return LatticeField(u.domain, apply_laplacian(u.domain, u.values))


def gradient_energy(u: LatticeField) -> float:
    """Sum over undirected edges touching the box of (u(y) - u(x))^2."""
    return float(gradient_energy_values(u.domain, u.values))


def lp_norm(u: _Field, p: float) -> float:
    """l^p norm for p in [1, inf]."""
    if not p >= 1:
        raise InvalidParameterError(f"l^p norm needs p >= 1, got {p}")
    mags = np.abs(u.values)
    if math.isinf(p):
        return float(mags.max(initial=0.0))
    if p == 2:
        return float(np.sqrt(np.dot(mags, mags)))
    scale = mags.max(initial=0.0)
    if scale == 0.0:
        return 0.0
    # Scaling keeps large p from overflowing
    return float(scale * np.sum((mags / scale) ** p) ** (1.0 / p))


def inner(u: LatticeField, v: LatticeField) -> float:
    """Counting-measure inner product sum_x u(x) v(x)."""
    if u.domain != v.domain:
        raise DomainMismatchError(
            f"inner product of fields on different domains: {u.domain} vs {v.domain}"
        )
    return float(np.dot(u.values, v.values))


def shift(u: LatticeField, offset: Sequence[int]) -> LatticeField:
    """Translate u by `offset`; the shifted support must stay inside the box."""
    domain = u.domain
    offset_arr = np.asarray(offset, dtype=np.int64).reshape(domain.d)
    out = np.zeros(domain.site_count)
    for idx in np.flatnonzero(u.values):
        target = domain.index_of(domain.sites[idx] + offset_arr)
        if target < 0:
            raise InvalidParameterError(
                f"shift by {offset_arr.tolist()} moves support outside the box"
            )
        out[target] = u.values[idx]
    return LatticeField(domain, out)


def field_to_csv(u: LatticeField) -> str:
    """CSV with columns x1..xd,value in enumeration order."""
    domain = u.domain
    buf = io.StringIO()
    header = [f"x{k + 1}" for k in range(domain.d)] + [FIELD_CSV_VALUE_COLUMN]
    buf.write(",".join(header) + "\n")
    for coords, value in zip(domain.sites, u.values):
        row = [str(int(c)) for c in coords] + [format(float(value), FLOAT_FORMAT)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def field_from_csv(text: str, domain: BoxDomain) -> LatticeField:
    """Parse a field written by `field_to_csv`; missing sites stay zero."""
    lines = [line for line in text.strip().splitlines() if line]
    header = lines[0].split(",")
    if len(header) != domain.d + 1:
        raise InvalidParameterError(
            f"expected {domain.d + 1} CSV columns, got {len(header)}"
        )
    values = np.zeros(domain.site_count)
    for line in lines[1:]:
        parts = line.split(",")
        idx = domain.index_of([int(c) for c in parts[:-1]])
        if idx < 0:
            raise InvalidParameterError(f"CSV site {parts[:-1]} lies outside the box")
        values[idx] = float(parts[-1])
    return LatticeField(domain, values)
