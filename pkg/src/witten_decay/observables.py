"""Coordinate and coordinate-product observables with lattice supports."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import Lattice, SiteSet


@dataclass(frozen=True)
class Observable:
    """A scalar function of configurations with its lattice support."""

    label: str
    support: SiteSet
    func: Callable[[np.ndarray], np.ndarray]
    grad_sup_sq: float  # sum over the support of sup_x (d g / d x_i)^2

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.func(x)


def coordinate(lat: Lattice, i: int) -> Observable:
    lat.check_site(i)
    return Observable(label=f"x{i}", support=SiteSet((i,)),
                      func=lambda x, i=i: x[..., i], grad_sup_sq=1.0)


def product(lat: Lattice, i: int, j: int, box_half_width: float | None = None) -> Observable:
    """x_i * x_j; the gradient sup is only finite on a bounded box."""
    lat.check_site(i)
    lat.check_site(j)
    sup = (2.0 * box_half_width**2) if box_half_width is not None else float("inf")
    return Observable(label=f"x{i}*x{j}", support=SiteSet((i, j)),
                      func=lambda x, i=i, j=j: x[..., i] * x[..., j], grad_sup_sq=sup)


_COORD_RE = re.compile(r"^x(\d+)$")
_PROD_RE = re.compile(r"^x(\d+)\*x(\d+)$")


def parse_observable(lat: Lattice, text: str, box_half_width: float | None = None) -> Observable:
    """Parse 'x3' or 'x0*x1' selectors."""
    text = text.strip().replace(" ", "")
    m = _COORD_RE.match(text)
    if m:
        return coordinate(lat, int(m.group(1)))
    m = _PROD_RE.match(text)
    if m:
        return product(lat, int(m.group(1)), int(m.group(2)), box_half_width)
    raise ValueError(f"unsupported observable selector {text!r}; use 'x<i>' or 'x<i>*x<j>'")
