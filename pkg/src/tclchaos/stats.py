"""Level-spacing and adjacent-gap-ratio statistics with their reference laws."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma, gammaln

from .spectra import Spectrum

POISSON_MEAN_R = 2 * math.log(2) - 1
GOE_MEAN_R = 4 - 2 * math.sqrt(3)
#: normalization of the GOE (beta = 1) ratio law on [0, inf)
GOE_RATIO_Z = 8.0 / 27.0

BRODY_B_MAX = 1.2
SPACING_BINS = (50, 0.0, 4.0)
RATIO_BINS = (25, 0.0, 1.0)
DEGENERATE_GAP_RTOL = 1e-14


class FitError(RuntimeError):
    pass


@dataclass
class SpacingHistogram:
    edges: np.ndarray
    density: np.ndarray
    n_samples: int
    trims: list = field(default_factory=list)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


@dataclass
class BrodyFit:
    b: float
    eta: float
    objective: float
    method: str
    n_samples: int
    stderr: float = float("nan")
    n_degenerate: int = 0


@dataclass
class GapRatioStats:
    r_values: np.ndarray
    mean_r: float
    stderr: float
    hist_edges: np.ndarray
    hist_density: np.ndarray
    n_skipped: int = 0


def spacings(unfolded) -> np.ndarray:
    """Nearest-neighbour gaps of an (unfolded) ordered level sequence."""
    v = unfolded.values if hasattr(unfolded, "values") else np.asarray(unfolded, dtype=float)
    if len(v) < 2:
        raise ValueError("need at least two levels")
    return np.diff(v)


def reference_spacing_pdf(kind: str, s):
    """Poisson ``exp(-s)`` or GOE Wigner surmise ``(pi/2) s exp(-pi s^2/4)``."""
    s = np.asarray(s, dtype=float)
    if kind == "poisson":
        out = np.exp(-s)
    elif kind == "goe":
        out = 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s * s)
    else:
        raise ValueError(f"unknown reference {kind!r}")
    return out if out.ndim else float(out)


def brody_eta(b: float) -> float:
    return math.exp((b + 1) * gammaln((b + 2) / (b + 1)))


def brody_pdf(b: float, s):
    r"""Brody density ``(b+1) eta s^b exp(-eta s^(b+1))``, ``eta = Gamma((b+2)/(b+1))^(b+1)``."""
    s = np.asarray(s, dtype=float)
    eta = gamma((b + 2) / (b + 1)) ** (b + 1)
    out = (b + 1) * eta * s**b * np.exp(-eta * s ** (b + 1))
    return out if out.ndim else float(out)


def sample_brody(b: float, size: int, rng=None) -> np.ndarray:
    """Exact inverse-CDF draws ``s = (-ln u / eta)^(1/(b+1))``."""
    rng = np.random.default_rng(rng)
    u = 1.0 - rng.random(size)  # (0, 1]
    return (-np.log(u) / brody_eta(b)) ** (1.0 / (b + 1))


def _brody_nll(b: float, s: np.ndarray, logs: np.ndarray) -> float:
    eta = brody_eta(b)
    return -(len(s) * math.log((b + 1) * eta) + b * logs.sum() - eta * np.sum(s ** (b + 1)))


def spacing_histogram(s, bins=SPACING_BINS, trims=None) -> SpacingHistogram:
    nb, lo, hi = bins
    counts, edges = np.histogram(s, bins=nb, range=(lo, hi))
    width = np.diff(edges)
    total = counts.sum()
    density = counts / (total * width) if total else np.zeros(nb)
    return SpacingHistogram(edges, density, int(total), list(trims or []))


def fit_brody(s, method: str = "mle", bins=SPACING_BINS, xtol: float = 1e-6) -> BrodyFit:
    """Fit the Brody parameter on ``[0, 1.2]``.

    ``"mle"`` maximizes the likelihood of the raw spacings (bin-free) and
    reports a Fisher-information standard error; ``"lsq"`` minimizes the
    squared deviation from a density histogram.
    """
    s = np.asarray(s, dtype=float)
    s = s[np.isfinite(s)]
    if len(s) < 200:
        warnings.warn(f"Brody fit on only {len(s)} spacings", RuntimeWarning, stacklevel=2)
    if len(s) < 2:
        raise FitError("need at least two spacings")
    n_deg = 0
    if method == "mle":
        # exact degeneracies (zero gaps) have zero likelihood for every b > 0
        # and would pin the fit at b = 0; they are excluded and counted
        keep = s > DEGENERATE_GAP_RTOL * max(s.sum(), 1.0)
        n_deg = int((~keep).sum())
        sp = s[keep]
        if len(sp) < 2:
            raise FitError("fewer than two non-degenerate spacings")
        logs = np.log(sp)

        def objective(b):
            return _brody_nll(b, sp, logs)

    elif method == "lsq":
        hist = spacing_histogram(s, bins)
        centers = hist.centers

        def objective(b):
            return float(np.sum((brody_pdf(b, centers) - hist.density) ** 2))

    else:
        raise ValueError(f"unknown fit method {method!r}")
    res = minimize_scalar(
        objective, bounds=(0.0, BRODY_B_MAX), method="bounded", options={"xatol": xtol}
    )
    if not res.success or not np.isfinite(res.fun):
        raise FitError(f"Brody fit did not converge: {res.message}")
    b = float(res.x)
    # the bounded search never lands exactly on an edge; snap if the edge is better
    for edge in (0.0, BRODY_B_MAX):
        if abs(b - edge) < 10 * xtol and objective(edge) <= res.fun:
            b = edge
    stderr = float("nan")
    if method == "mle":
        h = 1e-4
        lo, hi = max(b - h, 0.0), min(b + h, BRODY_B_MAX)
        mid = 0.5 * (lo + hi)
        d2 = (objective(hi) - 2 * objective(mid) + objective(lo)) / (0.5 * (hi - lo)) ** 2
        if d2 > 0:
            stderr = 1.0 / math.sqrt(d2)
    return BrodyFit(b, brody_eta(b), float(objective(b)), method, int(len(s)), stderr, n_deg)


def gap_ratios(spec, bins=RATIO_BINS) -> GapRatioStats:
    """Adjacent gap ratios ``min(d_n, d_n+1) / max(d_n, d_n+1)`` of a raw spectrum.

    Pairs whose two gaps both fall below ``1e-14`` times the spectral width
    are treated as numerically degenerate, skipped and counted.
    """
    v = spec.values if hasattr(spec, "values") else np.sort(np.asarray(spec, dtype=float))
    if len(v) < 3:
        raise ValueError("need at least three levels")
    d = np.diff(v)
    lo = np.minimum(d[:-1], d[1:])
    hi = np.maximum(d[:-1], d[1:])
    ok = hi > DEGENERATE_GAP_RTOL * (v[-1] - v[0])
    r = lo[ok] / hi[ok]
    nb, a, b = bins
    counts, edges = np.histogram(r, bins=nb, range=(a, b))
    dens = counts / (counts.sum() * np.diff(edges)) if counts.sum() else np.zeros(nb)
    mean = float(r.mean()) if len(r) else float("nan")
    se = float(r.std(ddof=1) / math.sqrt(len(r))) if len(r) > 1 else float("nan")
    return GapRatioStats(r, mean, se, edges, dens, int((~ok).sum()))


def reference_ratio_pdf(kind: str, r):
    """Ratio densities on ``[0, 1]`` (zero elsewhere), Poisson or GOE."""
    r = np.asarray(r, dtype=float)
    inside = (r >= 0) & (r <= 1)
    rr = np.where(inside, r, 0.0)
    if kind == "poisson":
        out = 2.0 / (1.0 + rr) ** 2
    elif kind == "goe":
        out = (2.0 / GOE_RATIO_Z) * (rr + rr * rr) / (1.0 + rr + rr * rr) ** 2.5
    else:
        raise ValueError(f"unknown reference {kind!r}")
    out = np.where(inside, out, 0.0)
    return out if out.ndim else float(out)


def goe_matrix(dim: int, rng) -> np.ndarray:
    """Real symmetric Gaussian matrix, off-diagonal variance 1, diagonal variance 2."""
    a = rng.standard_normal((dim, dim))
    return (a + a.T) / math.sqrt(2.0)


def goe_sample_spectrum(dim: int, seed: int) -> Spectrum:
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    w = np.linalg.eigvalsh(goe_matrix(dim, rng))
    return Spectrum(np.sort(w), {"ensemble": "GOE", "dim": dim, "seed": seed})


def poisson_levels(n: int, seed=None) -> np.ndarray:
    """``n`` levels with independent unit-mean exponential gaps."""
    rng = np.random.default_rng(seed)
    return np.cumsum(rng.exponential(1.0, n))


@dataclass
class StatsReport:
    params: dict
    n_levels_used: int
    b: float
    b_err: float
    b_method: str
    mean_r: float
    r_err: float
    histograms: dict

    def to_json(self, path=None) -> str:
        def conv(o):
            if isinstance(o, np.ndarray):
                return o.tolist()
            if isinstance(o, (np.floating, np.integer)):
                return o.item()
            raise TypeError(type(o))

        text = json.dumps(asdict(self), default=conv, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def stats_report(raw: Spectrum, unfolded, method: str = "mle", params=None) -> StatsReport:
    """Brody fit on the unfolded spacings plus gap ratios of the raw levels."""
    s = spacings(unfolded)
    fit = fit_brody(s, method)
    gr = gap_ratios(raw)
    sh = spacing_histogram(s, trims=raw.provenance.get("trims", []))
    return StatsReport(
        params=dict(params or raw.provenance),
        n_levels_used=len(raw),
        b=fit.b,
        b_err=fit.stderr,
        b_method=method,
        mean_r=gr.mean_r,
        r_err=gr.stderr,
        histograms={
            "spacing": {"edges": sh.edges, "density": sh.density},
            "ratio": {"edges": gr.hist_edges, "density": gr.hist_density},
        },
    )
