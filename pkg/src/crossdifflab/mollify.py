"""Periodic mollifiers: wrapped Gaussians, FFT convolution, Dirac sequences.

Kernels are sampled on the grid and renormalized so the discrete integral
is exactly 1; circular convolution then conserves mass to round-off.
"""

from __future__ import annotations

import json

import numpy as np

from .torus import Field, Grid, dump_field

N_IMAGES = 3  # wrap images per axis; enough for eps <= 0.5 to 1e-12


class Kernel:
    """Non-negative unit-mass kernel of width `eps` sampled on `grid`."""

    def __init__(self, grid: Grid, eps: float, values: Field):
        self.grid = grid
        self.eps = float(eps)
        self.values = values
        self._fft = None

    def fft(self) -> np.ndarray:
        if self._fft is None:
            self._fft = np.fft.rfftn(self.values.reshaped())
        return self._fft


def make_kernel(grid: Grid, eps: float) -> Kernel:
    eps = float(eps)
    if eps < 2.0 * grid.h:
        raise ValueError(
            f"under-resolved kernel: eps={eps} < 2h={2.0 * grid.h}")
    if eps > 0.5:
        raise ValueError(f"kernel too wide: eps={eps} > 0.5")
    x = np.arange(grid.n) * grid.h
    # wrapped Gaussian along one axis; the dim-d kernel is the tensor product
    g1 = np.zeros(grid.n)
    for m in range(-N_IMAGES, N_IMAGES + 1):
        g1 += np.exp(-((x + m) ** 2) / (2.0 * eps ** 2))
    if grid.dim == 1:
        vals = g1
    else:
        vals = g1[:, None] * g1[None, :]
    vals = vals / (vals.sum() * grid.cell_volume())
    return Kernel(grid, eps, Field(grid, vals.reshape(-1)))


def convolve(f: Field, k: Kernel) -> Field:
    if f.grid != k.grid:
        raise ValueError("field and kernel live on different grids")
    out = convolve_array(f.values, k)
    return Field(f.grid, out)


def convolve_array(v: np.ndarray, k: Kernel) -> np.ndarray:
    """Circular convolution of a flat array with the kernel (times h^dim)."""
    g = k.grid
    fv = np.fft.rfftn(v.reshape(g.shape))
    out = np.fft.irfftn(fv * k.fft(), s=g.shape,
                        axes=tuple(range(g.dim))) * g.cell_volume()
    return out.reshape(v.shape)


class KernelSequence:
    """Kernels with strictly decreasing eps, approaching the Dirac mass."""

    def __init__(self, kernels):
        kernels = list(kernels)
        if not kernels:
            raise ValueError("empty kernel sequence")
        eps = [k.eps for k in kernels]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"eps must be strictly decreasing, got {eps}")
        self.kernels = kernels

    def __iter__(self):
        return iter(self.kernels)

    def __len__(self):
        return len(self.kernels)

    @property
    def eps_list(self):
        return [k.eps for k in self.kernels]


def kernel_sequence(grid: Grid, eps0: float, factor: float,
                    count: int) -> KernelSequence:
    if not 0.0 < factor < 1.0:
        raise ValueError(f"factor must be in (0,1), got {factor}")
    if count < 1:
        raise ValueError("count must be >= 1")
    finest = eps0 * factor ** (count - 1)
    if finest < 2.0 * grid.h:
        raise ValueError(
            f"finest kernel under-resolved: eps={finest} < 2h={2.0 * grid.h}")
    return KernelSequence(
        [make_kernel(grid, eps0 * factor ** j) for j in range(count)])


def dirac_defect(k: Kernel) -> float:
    """Second moment of the kernel w.r.t. squared torus distance to 0."""
    g = k.grid
    x = np.arange(g.n) * g.h
    d1 = np.minimum(x, 1.0 - x) ** 2
    if g.dim == 1:
        dist2 = d1
    else:
        dist2 = d1[:, None] + d1[None, :]
    return float(np.sum(dist2.reshape(-1) * k.values.values)
                 * g.cell_volume())


def dump_kernel(path, k: Kernel) -> None:
    """Binary dump plus a JSON sidecar describing the kernel."""
    dump_field(path, k.values)
    sidecar = {"eps": k.eps, "n": k.grid.n, "dim": k.grid.dim,
               "family": "wrapped_gaussian"}
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
