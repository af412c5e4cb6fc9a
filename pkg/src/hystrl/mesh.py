"""Quaternary triangle meshes on the threshold domain and piecewise
constant parameter fields over them.

The parameter domain is the triangle ``{s_lo <= s1 <= s2 <= s_hi}`` in the
threshold plane.  Level ``j`` splits it into ``4**j`` congruent cells by
recursive midpoint subdivision: each parent produces three corner children
(one per parent vertex, in vertex order) and the inverted central child.
Children of cell ``k`` occupy indices ``4*k .. 4*k+3`` on the next level,
so the descendants of any cell form a contiguous block and restriction of
cell averages is a reshape-and-mean.

Fields are stored as cell values (one array per channel).  With the area
measure this makes restriction to a coarser level exactly the L2
orthogonal projection between the nested piecewise constant spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import LevelMismatch, LevelTooDeep

__all__ = [
    "MAX_LEVEL",
    "TriDomain",
    "MeshLevel",
    "DistributedParameter",
    "refine",
    "cell_address",
    "address_to_index",
    "project_analytic",
    "restrict",
    "prolong",
    "p_norm",
    "p_dot",
    "approx_seminorm",
    "save_parameter",
    "load_parameter",
]

MAX_LEVEL = 12


@dataclass(frozen=True)
class TriDomain:
    """Closed triangle ``{s_lo <= s1 <= s2 <= s_hi}`` of threshold pairs."""

    s_lo: float = -1.0
    s_hi: float = 1.0

    def __post_init__(self):
        if not self.s_lo < self.s_hi:
            raise ValueError("domain requires s_lo < s_hi")

    @property
    def area(self) -> float:
        return 0.5 * (self.s_hi - self.s_lo) ** 2

    @property
    def corners(self) -> np.ndarray:
        """Vertices ``(s_lo, s_lo), (s_hi, s_hi), (s_lo, s_hi)``."""
        lo, hi = self.s_lo, self.s_hi
        return np.array([[lo, lo], [hi, hi], [lo, hi]])


@dataclass(frozen=True, eq=False)
class MeshLevel:
    """All cells of one refinement level, in depth-first cell order.

    Attributes
    ----------
    vertices : ndarray, shape (4**level, 3, 2)
        Cell vertices; read-only.
    areas : ndarray, shape (4**level,)
        Cell areas (all equal up to roundoff).
    centroids : ndarray, shape (4**level, 2)
        Quadrature points, one per cell.
    """

    domain: TriDomain
    level: int
    vertices: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray

    @property
    def n_cells(self) -> int:
        return 4 ** self.level


@lru_cache(maxsize=None)
def _refine_cached(domain: TriDomain, level: int) -> MeshLevel:
    verts = domain.corners[None, :, :]
    for _ in range(level):
        v0, v1, v2 = verts[:, 0], verts[:, 1], verts[:, 2]
        m01 = 0.5 * (v0 + v1)
        m12 = 0.5 * (v1 + v2)
        m20 = 0.5 * (v2 + v0)
        children = np.stack(
            [
                np.stack([v0, m01, m20], axis=1),
                np.stack([v1, m12, m01], axis=1),
                np.stack([v2, m20, m12], axis=1),
                np.stack([m01, m12, m20], axis=1),
            ],
            axis=1,
        )
        verts = children.reshape(-1, 3, 2)
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    centroids = verts.mean(axis=1)
    for arr in (verts, areas, centroids):
        arr.setflags(write=False)
    return MeshLevel(domain, level, verts, areas, centroids)


def refine(domain: TriDomain, level: int) -> MeshLevel:
    """Mesh of ``4**level`` congruent cells covering ``domain``.

    Results are cached per ``(domain, level)``; the returned arrays are
    read-only and shared between callers.

    Raises
    ------
    LevelTooDeep
        If ``level`` is negative or exceeds ``MAX_LEVEL``.
    """
    if not 0 <= level <= MAX_LEVEL:
        raise LevelTooDeep(f"level must lie in [0, {MAX_LEVEL}], got {level}")
    return _refine_cached(domain, int(level))


def cell_address(index: int, level: int) -> tuple[int, ...]:
    """Digit path (entries 1..4) of a cell, root child first."""
    if not 0 <= index < 4**level:
        raise IndexError("cell index out of range for level")
    digits = []
    for _ in range(level):
        index, d = divmod(index, 4)
        digits.append(d + 1)
    return tuple(reversed(digits))


def address_to_index(digits: tuple[int, ...]) -> int:
    """Inverse of :func:`cell_address`."""
    index = 0
    for d in digits:
        if not 1 <= d <= 4:
            raise ValueError("address digits must lie in 1..4")
        index = 4 * index + (d - 1)
    return index


@dataclass(frozen=True, eq=False)
class DistributedParameter:
    """Piecewise constant field over the threshold triangle, one value
    array per channel.  Channels may live on different levels.

    Instances are value objects: share freely, do not mutate the arrays.
    """

    domain: TriDomain
    levels: tuple[int, ...]
    channel_values: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.levels) != len(self.channel_values) or not self.levels:
            raise ValueError("need one value array per channel")
        vals = []
        for j, v in zip(self.levels, self.channel_values):
            v = np.asarray(v, dtype=float)
            if v.shape != (4**j,):
                raise LevelMismatch(f"channel at level {j} needs {4 ** j} values, got {v.shape}")
            vals.append(v)
        object.__setattr__(self, "levels", tuple(int(j) for j in self.levels))
        object.__setattr__(self, "channel_values", tuple(vals))

    @classmethod
    def from_values(cls, domain: TriDomain, level: int, values) -> "DistributedParameter":
        """Single-channel field from a value array at ``level``."""
        return cls(domain, (level,), (np.asarray(values, dtype=float),))

    @classmethod
    def zeros(cls, domain: TriDomain, levels) -> "DistributedParameter":
        levels = tuple(int(j) for j in np.atleast_1d(levels))
        return cls(domain, levels, tuple(np.zeros(4**j) for j in levels))

    @property
    def n_channels(self) -> int:
        return len(self.levels)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(4**j for j in self.levels)

    def meshes(self) -> tuple[MeshLevel, ...]:
        return tuple(refine(self.domain, j) for j in self.levels)

    def flat(self) -> np.ndarray:
        """All channel values concatenated (channel 0 first)."""
        return np.concatenate(self.channel_values)

    def with_flat(self, vec) -> "DistributedParameter":
        """Same layout, values replaced from a flat vector."""
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (sum(self.sizes),):
            raise LevelMismatch("flat vector length does not match channel layout")
        out, pos = [], 0
        for n in self.sizes:
            out.append(vec[pos : pos + n].copy())
            pos += n
        return DistributedParameter(self.domain, self.levels, tuple(out))


def project_analytic(domain: TriDomain, fn, level: int, oversample: int = 4) -> DistributedParameter:
    """L2 projection of a pointwise-defined field onto level ``level``.

    Cell means are approximated by averaging centroid samples of an
    auxiliary mesh ``oversample`` levels finer; the sampling error decays
    like ``4**-oversample`` for smooth fields and is exact for fields that
    are affine on the fine cells.

    Parameters
    ----------
    fn : callable
        Vectorized map ``(s1, s2) -> value`` over threshold arrays.
    """
    if oversample < 0:
        raise ValueError("oversample must be >= 0")
    fine = refine(domain, level + oversample)
    samples = np.asarray(fn(fine.centroids[:, 0], fine.centroids[:, 1]), dtype=float)
    if samples.shape != (fine.n_cells,):
        raise ValueError("fn must return one value per sample point")
    values = samples.reshape(4**level, -1).mean(axis=1)
    return DistributedParameter.from_values(domain, level, values)


def restrict(mu: DistributedParameter, level: int) -> DistributedParameter:
    """Orthogonal projection of every channel onto the coarser ``level``.

    Because descendant blocks are contiguous and cell areas equal, this is
    a block mean.  Raises :class:`LevelMismatch` if any channel is already
    coarser than ``level``.
    """
    if any(j < level for j in mu.levels):
        raise LevelMismatch("cannot restrict below a channel's own level")
    vals = tuple(v.reshape(4**level, -1).mean(axis=1) for v in mu.channel_values)
    return DistributedParameter(mu.domain, (level,) * mu.n_channels, vals)


def prolong(mu: DistributedParameter, level: int) -> DistributedParameter:
    """Injection of every channel into the finer ``level`` (values repeat)."""
    if any(j > level for j in mu.levels):
        raise LevelMismatch("cannot prolong above the target level")
    vals = tuple(np.repeat(v, 4 ** (level - j)) for v, j in zip(mu.channel_values, mu.levels))
    return DistributedParameter(mu.domain, (level,) * mu.n_channels, vals)


def p_norm(mu: DistributedParameter) -> float:
    """L2(area) norm over the triangle, summed in squares across channels."""
    total = 0.0
    for v, mesh in zip(mu.channel_values, mu.meshes()):
        total += float(np.sum(v * v * mesh.areas))
    return float(np.sqrt(total))


def p_dot(a: DistributedParameter, b: DistributedParameter) -> float:
    """L2(area) inner product; both fields must share domain and levels."""
    if a.domain != b.domain or a.levels != b.levels:
        raise LevelMismatch("inner product requires matching domain and levels")
    total = 0.0
    for va, vb, mesh in zip(a.channel_values, b.channel_values, a.meshes()):
        total += float(np.sum(va * vb * mesh.areas))
    return total


def approx_seminorm(domain: TriDomain, fn, alpha: float, max_level: int, oversample: int = 4) -> float:
    """Weighted multilevel detail norm of a field,

    ``sqrt(sum_j 4**(alpha*j) * ||(P_j - P_{j-1}) f||^2)`` for
    ``j = 0 .. max_level`` with ``P_{-1} = 0``.  Grows with ``max_level``
    but stabilizes when the field has the matching smoothness.
    """
    mu_fine = project_analytic(domain, fn, max_level, oversample)
    total = 0.0
    current = mu_fine
    for j in range(max_level, 0, -1):
        coarse = restrict(current, j - 1)
        detail_sq = p_norm(current) ** 2 - p_norm(coarse) ** 2
        total += 4.0 ** (alpha * j) * max(detail_sq, 0.0)
        current = coarse
    total += p_norm(current) ** 2
    return float(np.sqrt(total))


def save_parameter(path, mu: DistributedParameter) -> None:
    """Write a field as CSV rows ``level,cell_index,channel,value``."""
    with open(path, "w") as fh:
        fh.write(f"# domain,{mu.domain.s_lo:.17g},{mu.domain.s_hi:.17g}\n")
        fh.write("level,cell_index,channel,value\n")
        for ch, (j, v) in enumerate(zip(mu.levels, mu.channel_values)):
            for k, val in enumerate(v):
                fh.write(f"{j},{k},{ch},{val:.17g}\n")


def load_parameter(path, domain: TriDomain | None = None) -> DistributedParameter:
    """Read a field written by :func:`save_parameter`.

    The domain is taken from the file's header comment unless given.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# domain,") and domain is None:
                _, lo, hi = line[2:].split(",")
                domain = TriDomain(float(lo), float(hi))
            elif line and not line.startswith(("#", "level,")):
                j, k, ch, val = line.split(",")
                rows.append((int(ch), int(j), int(k), float(val)))
    if domain is None:
        raise ValueError("no domain header in file and none supplied")
    rows.sort()
    channels: dict[int, tuple[int, np.ndarray]] = {}
    for ch, j, k, val in rows:
        if ch not in channels:
            channels[ch] = (j, np.zeros(4**j))
        channels[ch][1][k] = val
    levels = tuple(channels[ch][0] for ch in sorted(channels))
    values = tuple(channels[ch][1] for ch in sorted(channels))
    return DistributedParameter(domain, levels, values)
