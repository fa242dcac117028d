"""Tabulated ``F_N`` on a uniform radius grid, with a hashed CSV file format.

A table file is plain CSV preceded by one ``#``-prefixed JSON header line::

    # {"order": 2, "step": 0.05, "r_max": 16.0, "quadrature": {...}, "sha256": "..."}
    r_1,r_2,re,im
    0.0,0.0,...

The hash covers the numeric payload only, so rebuilding a table with the
same settings reproduces it bit for bit.
"""
from dataclasses import dataclass, field
import hashlib
import io
import itertools
import json
import math

import numpy as np
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator

from ._validation import check_order, check_positive
from .exceptions import TableRangeExceeded
from .kernels import F_N_closed, F_N_eval
from .quadrature import QuadratureSpec

DEFAULT_STEP = 0.05


def _payload_hash(values):
    data = np.ascontiguousarray(values, dtype="<c16").tobytes()
    return hashlib.sha256(data).hexdigest()


@dataclass
class KernelTable:
    """Values of ``F_N`` on the tensor grid ``{0, step, ..., r_max}^N``."""

    order: int
    step: float
    r_max: float
    values: np.ndarray
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    method: str = "closed"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        n = self.n_nodes
        if self.values.shape != (n,) * self.order:
            raise ValueError(f"values must have shape {(n,) * self.order}")
        self._interp = None

    @property
    def n_nodes(self):
        return int(round(self.r_max / self.step)) + 1

    @property
    def grid(self):
        return self.step * np.arange(self.n_nodes)

    @property
    def sha256(self):
        return _payload_hash(self.values)

    @property
    def header(self):
        return {
            "order": self.order,
            "step": self.step,
            "r_max": self.r_max,
            "n_nodes": self.n_nodes,
            "method": self.method,
            "quadrature": self.quadrature.as_dict(),
            "sha256": self.sha256,
            "coarse": self.step > DEFAULT_STEP,
        }

    @classmethod
    def build(cls, order, r_max, step=DEFAULT_STEP, quadrature=None, method="closed"):
        """Tabulate ``F_N``.

        ``method="closed"`` uses the closed form of the cutoff transform;
        ``"quadrature"`` integrates in time node by node (slow, for checks).
        Nodes are filled in a fixed order so the result is deterministic.
        """
        order = check_order(order)
        check_positive(step, "step")
        quadrature = quadrature or QuadratureSpec(rule="adaptive", rel_tol=1e-12)
        n = int(round(r_max / step)) + 1
        grid = step * np.arange(n)
        mesh = np.stack(np.meshgrid(*([grid] * order), indexing="ij"), axis=-1)
        if method == "closed":
            values = F_N_closed(mesh).astype(complex)
        elif method == "quadrature":
            values = np.empty((n,) * order, dtype=complex)
            for idx in itertools.product(range(n), repeat=order):
                values[idx] = F_N_eval(mesh[idx], quadrature)
        else:
            raise ValueError(f"unknown method {method!r}")
        return cls(order, float(step), float(grid[-1]), values, quadrature, method)

    def save(self, path, **meta):
        """Write the table; ``meta`` lands in the header under ``"run"``."""
        grid = self.grid
        nodes = np.stack(np.meshgrid(*([grid] * self.order), indexing="ij"), axis=-1)
        flat = np.column_stack(
            [nodes.reshape(-1, self.order), self.values.real.ravel(), self.values.imag.ravel()]
        )
        cols = [f"r_{j + 1}" for j in range(self.order)] + ["re", "im"]
        buf = io.StringIO()
        np.savetxt(buf, flat, delimiter=",", fmt="%.17g", header=",".join(cols), comments="")
        with open(path, "w") as fh:
            header = dict(self.header, run=meta) if meta else self.header
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            fh.write(buf.getvalue())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("#"):
                raise ValueError(f"{path}: missing JSON header line")
            header = json.loads(first[1:])
            data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
        N = header["order"]
        n = header["n_nodes"]
        values = (data[:, N] + 1j * data[:, N + 1]).reshape((n,) * N)
        table = cls(N, header["step"], header["r_max"], values,
                    QuadratureSpec(**header["quadrature"]), header.get("method", "closed"))
        if table.sha256 != header["sha256"]:
            raise ValueError(f"{path}: content hash mismatch")
        return table

    def covers(self, r):
        return bool(np.all(np.asarray(r) <= self.r_max * (1 + 1e-12)))

    def __call__(self, r):
        """Interpolate ``F_N`` at radii ``r`` of shape ``(..., N)`` (tensor cubic)."""
        r = np.asarray(r, dtype=float)
        if r.shape[-1] != self.order:
            raise ValueError(f"expected {self.order} radii in the last axis")
        if not self.covers(r):
            raise TableRangeExceeded(f"radius {r.max():.4g} beyond table range {self.r_max:.4g}")
        pts = np.minimum(r.reshape(-1, self.order), self.r_max)
        if self._interp is None:
            self._interp = self._make_interp()
        out = self._interp(pts)
        return out.reshape(r.shape[:-1])

    def _make_interp(self):
        g = self.grid
        if self.order == 2:
            re = RectBivariateSpline(g, g, self.values.real, kx=3, ky=3)
            im = RectBivariateSpline(g, g, self.values.imag, kx=3, ky=3)
            return lambda p: re.ev(p[:, 0], p[:, 1]) + 1j * im.ev(p[:, 0], p[:, 1])
        method = "cubic" if self.n_nodes >= 4 else "linear"
        re = RegularGridInterpolator((g,) * self.order, self.values.real, method=method)
        im = RegularGridInterpolator((g,) * self.order, self.values.imag, method=method)
        return lambda p: re(p) + 1j * im(p)


def grid_radius_bound(M, L, radius=1.0):
    """Radius up to which a table must reach for an ``M``-point grid on ``[-L, L)^3``
    and kernel radius ``radius``: ``radius * pi * M / L`` covers every dual-lattice modulus."""
    return radius * math.pi * M / L
