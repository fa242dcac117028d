"""scikit-learn style wrappers around the functional API."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .grid import GridField
from .transform import truncated_transform
from .wave import born_series, wave_solve


def _as_list(X):
    return list(X) if isinstance(X, (list, tuple)) else [X]


class BackscatterTransform(TransformerMixin, BaseEstimator):
    """Map grid potentials to the truncated series ``v + B_2 v + ... + B_M v``.

    Parameters
    ----------
    order : int
        Highest term ``M`` kept.
    method : str
        Route for ``B_2`` (``"lattice"`` or ``"physical"``).
    pad : int or None
        Zero-padding factor for the lattice route (``None`` picks the smallest safe one).
    sobolev_s : float
        Exponent of the per-term norms stored in ``term_norms_``.
    """

    def __init__(self, order=2, method="lattice", pad=None, sobolev_s=0.0):
        self.order = order
        self.method = method
        self.pad = pad
        self.sobolev_s = sobolev_s

    def fit(self, X, y=None):
        items = _as_list(X)
        if not items:
            raise ValueError("need at least one potential")
        shapes = {(v.M, v.L) for v in items}
        if len(shapes) != 1:
            raise ValueError("all potentials must share one grid")
        if self.order > 2 and self.method != "monte_carlo":
            raise ValueError("orders above 2 need the radial Monte Carlo route")
        self.grid_ = shapes.pop()
        return self

    def transform(self, X):
        if not hasattr(self, "grid_"):
            raise NotFittedError("call fit first")
        options = {}
        if self.method == "lattice":
            options = {2: {"pad": self.pad, "estimate_error": False}}
        out, norms = [], []
        for v in _as_list(X):
            if (v.M, v.L) != self.grid_:
                raise ValueError("potential grid differs from the fitted one")
            res = truncated_transform(v, self.order, {2: self.method}, s=self.sobolev_s, options=options)
            out.append(np.real(res.field.samples))
            norms.append(res.norms)
        self.term_norms_ = norms
        return np.stack(out)


class BornSeriesPropagator(BaseEstimator):
    """Wave propagation ``u(t)`` under a fixed potential by the truncated Born series.

    ``fit(v)`` stores the potential; ``predict(f)`` returns the partial sum
    ``sum_{N <= n_terms} (-1)^N K_N(t) f``; ``score(f)`` is minus the relative
    L2 distance to a split-step reference solve.
    """

    def __init__(self, t=1.0, n_terms=3, steps=64, richardson=False):
        self.t = t
        self.n_terms = n_terms
        self.steps = steps
        self.richardson = richardson

    def fit(self, v, y=None):
        if not isinstance(v, GridField):
            v = getattr(v, "field", v)
        if not isinstance(v, GridField):
            raise TypeError("fit expects a GridField or GridPotential")
        self.potential_ = v
        return self

    def terms(self, f):
        if not hasattr(self, "potential_"):
            raise NotFittedError("call fit first")
        return born_series(self.potential_, f, self.n_terms, self.t, self.steps, self.richardson)

    def predict(self, f):
        total = None
        for N, term in enumerate(self.terms(f)):
            signed = term if N % 2 == 0 else term * -1.0
            total = signed if total is None else total + signed
        return total

    def score(self, f, y=None):
        ref = wave_solve(self.potential_, f, self.t).u
        approx = self.predict(f)
        return -(approx - ref).l2_norm() / ref.l2_norm()
