"""Periodic sample grids on ``[-L, L)^3`` and their continuous-normalized spectra."""
from dataclasses import dataclass
from functools import lru_cache
import json
import os

import numpy as np
import scipy.fft as sfft

from ._validation import check_cube, check_positive

_WORKERS = None


def set_workers(n):
    """Thread count for the FFTs (``None`` leaves the scipy default)."""
    global _WORKERS
    _WORKERS = n


def fftn(a):
    return sfft.fftn(a, workers=_WORKERS)


def ifftn(a):
    return sfft.ifftn(a, workers=_WORKERS)


@lru_cache(maxsize=16)
def _axis_wavenumbers(M, L):
    k = sfft.fftfreq(M, d=2 * L / M) * 2 * np.pi
    k.flags.writeable = False
    return k


@lru_cache(maxsize=8)
def _modulus(M, L):
    k = _axis_wavenumbers(M, L)
    kk = np.sqrt(k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2)
    kk.flags.writeable = False
    return kk


@lru_cache(maxsize=8)
def _phase(M):
    # e^{i L xi} = (-1)^k relates the grid origin -L to the FFT origin
    k = np.rint(sfft.fftfreq(M, 1 / M)).astype(int)
    s = np.where(k % 2 == 0, 1.0, -1.0)
    out = s[:, None, None] * s[None, :, None] * s[None, None, :]
    out.flags.writeable = False
    return out


class GridField:
    """Complex samples of a function on the cube ``[-L, L)^3`` with ``M`` points per axis."""

    def __init__(self, samples, L, time=None):
        self.samples = check_cube(samples).astype(complex, copy=False)
        self.L = float(check_positive(L, "L"))
        self.time = time

    @property
    def M(self):
        return self.samples.shape[0]

    @property
    def spacing(self):
        return 2 * self.L / self.M

    @property
    def cell_volume(self):
        return self.spacing**3

    @property
    def axis(self):
        return -self.L + self.spacing * np.arange(self.M)

    def mesh(self):
        """Coordinate arrays ``(X, Y, Z)``."""
        return np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")

    def radius(self):
        X, Y, Z = self.mesh()
        return np.sqrt(X**2 + Y**2 + Z**2)

    @property
    def wavenumbers(self):
        """Dual-lattice axis ``(pi / L) k`` in FFT order."""
        return _axis_wavenumbers(self.M, self.L)

    @property
    def frequency_modulus(self):
        return _modulus(self.M, self.L)

    @property
    def dual_cell_volume(self):
        return (np.pi / self.L) ** 3

    @classmethod
    def from_function(cls, fn, M, L):
        """Sample ``fn(X, Y, Z)`` on the grid."""
        probe = cls(np.zeros((M, M, M)), L)
        return cls(fn(*probe.mesh()), L)

    def spectrum(self):
        """``SpectralField`` approximating ``int e^{-i<x, xi>} f(x) dx`` on the dual lattice."""
        coef = fftn(self.samples) * _phase(self.M) * self.cell_volume
        return SpectralField(coef, self.L)

    def copy(self, samples=None):
        return GridField(self.samples.copy() if samples is None else samples, self.L, self.time)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.cell_volume))

    def __add__(self, other):
        return GridField(self.samples + _samples(other), self.L)

    def __sub__(self, other):
        return GridField(self.samples - _samples(other), self.L)

    def __mul__(self, c):
        return GridField(self.samples * _samples(c), self.L)

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(-self.samples, self.L)

    # -- snapshots --------------------------------------------------------

    def save(self, path, **meta):
        """Write ``path.bin`` (little-endian complex128, C order) and ``path.json``."""
        base = os.fspath(path)
        np.ascontiguousarray(self.samples, dtype="<c16").tofile(base + ".bin")
        sidecar = {"M": self.M, "L": self.L, "time": self.time, "dtype": "<c16", "order": "C"}
        sidecar.update(meta)
        with open(base + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        base = os.fspath(path)
        with open(base + ".json") as fh:
            meta = json.load(fh)
        M = meta["M"]
        data = np.fromfile(base + ".bin", dtype=meta.get("dtype", "<c16")).reshape(M, M, M)
        return cls(data.astype(complex), meta["L"], meta.get("time"))


def _samples(x):
    return x.samples if isinstance(x, GridField) else x


@dataclass
class SpectralField:
    """Continuous-normalized Fourier coefficients on the dual lattice, FFT order."""

    coefficients: np.ndarray
    L: float

    @property
    def M(self):
        return self.coefficients.shape[0]

    @property
    def modulus(self):
        return _modulus(self.M, self.L)

    @property
    def wavenumbers(self):
        return _axis_wavenumbers(self.M, self.L)

    def to_grid(self):
        M = self.M
        cell = (2 * self.L / M) ** 3
        return GridField(ifftn(self.coefficients * _phase(M)) / cell, self.L)

    def multiply(self, m):
        return SpectralField(self.coefficients * m, self.L)
