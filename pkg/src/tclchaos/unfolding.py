"""Polynomial unfolding of spectra and density-of-states histograms."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev

from .spectra import Spectrum

DEFAULT_DEGREE = 12
#: condition number of the Chebyshev design matrix beyond which a fit is refused
MAX_CONDITION = 1e8


class UnfoldingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class UnfoldedSpectrum:
    """Unfolded levels and the smooth staircase they were mapped through.

    ``fit`` is a :class:`numpy.polynomial.Chebyshev` whose domain is the raw
    spectral range, so the fit is internally done on ``[-1, 1]``.
    """

    values: np.ndarray
    fit: Chebyshev
    degree: int
    residual: float
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    @property
    def coefficients(self) -> np.ndarray:
        return self.fit.coef

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            for k, v in sorted(self.provenance.items()):
                fh.write(f"# {k}={v}\n")
            fh.write(f"# degree={self.degree}\n")
            fh.write(f"# domain={self.fit.domain[0]:.17g},{self.fit.domain[1]:.17g}\n")
            fh.write("# coefficients=" + ",".join(f"{c:.17g}" for c in self.fit.coef) + "\n")
            fh.write(f"# residual={self.residual:.17g}\n")
            fh.write("eigenvalue\n")
            for x in self.values:
                fh.write(f"{x:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "UnfoldedSpectrum":
        meta, vals = {}, []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    meta[k] = v
                elif line and line != "eigenvalue":
                    vals.append(float(line))
        dom = [float(x) for x in meta.pop("domain").split(",")]
        coef = [float(x) for x in meta.pop("coefficients").split(",")]
        degree = int(meta.pop("degree"))
        residual = float(meta.pop("residual"))
        return cls(np.array(vals), Chebyshev(coef, domain=dom), degree, residual, meta)


def staircase(spec, E):
    """Number of levels ``<= E`` (the step is closed on the left: ``Theta(0) = 1``)."""
    values = spec.values if hasattr(spec, "values") else np.asarray(spec)
    out = np.searchsorted(values, E, side="right")
    return int(out) if np.ndim(out) == 0 else out


def unfold(spec: Spectrum, degree: int = DEFAULT_DEGREE, check_monotone: bool = True) -> UnfoldedSpectrum:
    """Map levels through a least-squares polynomial fit of the staircase.

    The staircase is sampled at each level at the midpoint ``n - 1/2`` of its
    jump, and the fit is done in a Chebyshev basis on the rescaled range.
    """
    E = np.asarray(spec.values, dtype=float)
    n = len(E)
    if n <= degree + 1:
        raise UnfoldingError(f"need more than degree + 1 = {degree + 1} levels, got {n}")
    if E[-1] == E[0]:
        raise UnfoldingError("spectrum has zero width")
    target = np.arange(1, n + 1) - 0.5
    domain = [E[0], E[-1]]
    xs = np.polynomial.polyutils.mapdomain(E, domain, [-1.0, 1.0])
    cond = np.linalg.cond(np.polynomial.chebyshev.chebvander(xs, degree))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise UnfoldingError(f"ill-conditioned staircase fit (condition {cond:.3g})")
    fit = Chebyshev.fit(E, target, degree, domain=domain)
    if check_monotone:
        grid = np.linspace(E[0], E[-1], 10 * n)
        slope = fit.deriv()(grid)
        if np.any(slope < 0):
            raise UnfoldingError("fitted staircase is not monotone over the spectral range")
    unfolded = fit(E)
    resid = float(np.sqrt(np.mean((unfolded - target) ** 2)))
    prov = dict(spec.provenance) if hasattr(spec, "provenance") else {}
    return UnfoldedSpectrum(unfolded, fit, degree, resid, prov)


def dos_histogram(values, bins: int = 50, empty: str = "raise"):
    """Counts per uniform bin over ``[min, max]``; the last bin is closed.

    Returns ``(counts, edges)``.  For empty input either raise
    (``empty="raise"``) or return zero counts on ``[0, 1]``.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        if empty == "raise":
            raise ValueError("cannot histogram an empty spectrum")
        return np.zeros(bins, dtype=int), np.linspace(0.0, 1.0, bins + 1)
    counts, edges = np.histogram(v, bins=bins, range=(v.min(), v.max()))
    return counts, edges


def write_histogram_csv(path, counts, edges) -> None:
    with open(path, "w") as fh:
        fh.write("bin_left,bin_right,count\n")
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            fh.write(f"{lo:.17g},{hi:.17g},{c:.17g}\n")
