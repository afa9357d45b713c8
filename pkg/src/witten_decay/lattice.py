"""Finite boxes in Z^d with nearest-neighbor adjacency and graph metric.

Sites are indexed 0..size-1 in row-major order over the box extents.  Boxes
carry no periodic wrap, so the graph distance between two sites is the L1
distance between their integer coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

SiteSet = frozenset
"""A lattice support: a set of site indices."""


@dataclass(eq=False)
class Lattice:
    """A finite box in Z^d, immutable after construction."""

    extents: tuple[int, ...]
    coords: np.ndarray = field(repr=False)      # (size, ndim) integer coordinates
    neighbors: tuple[tuple[int, ...], ...] = field(repr=False)
    edges: np.ndarray = field(repr=False)       # (n_edges, 2) with i < j

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def ndim(self) -> int:
        return len(self.extents)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def check_site(self, i: int) -> None:
        if not 0 <= i < self.size:
            raise IndexError(f"site {i} out of range for lattice of size {self.size}")


def build_box_lattice(extents: Iterable[int]) -> Lattice:
    """Build the box lattice with the given side lengths.

    Row-major site indexing; adjacency links sites at L1 distance 1 inside
    the box (no wraparound).
    """
    extents = tuple(int(e) for e in extents)
    if len(extents) == 0:
        raise ValueError("extents must be a non-empty list")
    if any(e < 1 for e in extents):
        raise ValueError(f"all extents must be >= 1, got {extents}")

    d = len(extents)
    size = int(np.prod(extents))
    idx = np.arange(size)
    coords = np.stack(np.unravel_index(idx, extents), axis=1).astype(np.int64)

    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * extents[k + 1]

    nbrs: list[list[int]] = [[] for _ in range(size)]
    edges: list[tuple[int, int]] = []
    for i in range(size):
        for k in range(d):
            if coords[i, k] + 1 < extents[k]:
                j = i + int(strides[k])
                nbrs[i].append(j)
                nbrs[j].append(i)
                edges.append((i, j))
    edge_arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
    return Lattice(
        extents=extents,
        coords=coords,
        neighbors=tuple(tuple(sorted(n)) for n in nbrs),
        edges=edge_arr,
    )


def graph_distance(lat: Lattice, i: int, j: int) -> int:
    """L1 distance between the coordinates of two sites."""
    lat.check_site(i)
    lat.check_site(j)
    return int(np.abs(lat.coords[i] - lat.coords[j]).sum())


def distance_to_set(lat: Lattice, i: int, members: Iterable[int]) -> int:
    """min_{s in S} graph_distance(i, s); S must be nonempty."""
    s = SiteSet(members)
    if not s:
        raise ValueError("distance to the empty site set is undefined")
    for j in s:
        lat.check_site(j)
    lat.check_site(i)
    pts = lat.coords[sorted(s)]
    return int(np.abs(pts - lat.coords[i]).sum(axis=1).min())


def support_of_coordinate(lat: Lattice, i: int) -> SiteSet:
    """Lattice support of the coordinate observable x_i: the singleton {i}."""
    lat.check_site(i)
    return SiteSet((i,))


def distance_between_sets(lat: Lattice, a: Iterable[int], b: Iterable[int]) -> int:
    """min over (s, t) in A x B of the graph distance."""
    bs = SiteSet(b)
    if not bs:
        raise ValueError("distance to the empty site set is undefined")
    return min(distance_to_set(lat, s, bs) for s in SiteSet(a))
