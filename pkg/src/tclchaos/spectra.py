"""Full dense diagonalization and spectrum trimming."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .hamiltonian import SymmetricSparseMatrix

#: beyond this dimension a dense double-precision matrix is refused (~20 GB)
MAX_DENSE_DIM = 50_000


class DiagonalizationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues with a provenance record."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("spectrum must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum contains non-finite values")
        if np.any(np.diff(v) < 0):
            raise ValueError("spectrum must be sorted ascending")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_values(cls, values, **provenance) -> "Spectrum":
        return cls(np.sort(np.asarray(values, dtype=float)), dict(provenance))

    def to_csv(self, path) -> None:
        """One eigenvalue per line under ``#``-prefixed provenance header lines."""
        with open(path, "w") as fh:
            for k, v in sorted(self.provenance.items()):
                fh.write(f"# {k}={v}\n")
            fh.write("eigenvalue\n")
            for x in self.values:
                fh.write(f"{x:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "Spectrum":
        prov, vals = {}, []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    prov[k] = v
                elif line == "eigenvalue":
                    continue
                else:
                    vals.append(float(line.split(",")[0]))
        return cls.from_values(vals, **prov)


def diagonalize(
    matrix: SymmetricSparseMatrix,
    check_residuals: bool = False,
    n_samples: int = 5,
    seed: int = 0,
) -> Spectrum:
    """All eigenvalues of a real symmetric matrix, ascending.

    The trace identity is always verified.  With ``check_residuals`` the
    eigenvectors are computed as well and ``||Hv - Ev|| <= 1e-10 ||H||`` is
    asserted on ``n_samples`` randomly chosen eigenpairs.
    """
    if matrix.dim < 1:
        raise ValueError("cannot diagonalize an empty matrix")
    if matrix.dim > MAX_DENSE_DIM:
        raise DiagonalizationError(
            f"dimension {matrix.dim} exceeds the dense limit {MAX_DENSE_DIM}"
        )
    dense = matrix.to_dense()
    try:
        if check_residuals:
            w, v = sla.eigh(dense, driver="evr", check_finite=False)
        else:
            w = sla.eigvalsh(dense, driver="evr", check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise DiagonalizationError(str(exc)) from exc
    w = np.sort(w)
    norm = matrix.norm_estimate()
    tr = matrix.trace()
    scale = max(norm * math.sqrt(matrix.dim), abs(tr), 1.0)
    if abs(w.sum() - tr) > 1e-10 * scale:
        raise DiagonalizationError(f"trace check failed: {w.sum()} vs {tr}")
    if check_residuals:
        rng = np.random.default_rng(seed)
        picks = rng.choice(matrix.dim, size=min(n_samples, matrix.dim), replace=False)
        for k in picks:
            res = np.linalg.norm(dense @ v[:, k] - w[k] * v[:, k])
            if res > 1e-10 * max(norm, 1.0):
                raise DiagonalizationError(f"residual {res:.3g} too large for eigenpair {k}")
    prov = {k: v for k, v in matrix.meta.items()}
    prov["dim"] = matrix.dim
    return Spectrum(w, prov)


def trim_spectrum(spec: Spectrum, drop_low_frac: float = 0.0, drop_high_frac: float = 0.0) -> Spectrum:
    """Drop ``floor(frac * N)`` eigenvalues at each end.

    Both counts refer to the original length ``N``: ``N=100``, ``0.1`` and
    ``0.5`` keep indices 10 through 59.
    """
    if drop_low_frac < 0 or drop_high_frac < 0:
        raise ValueError("trim fractions must be non-negative")
    if drop_low_frac + drop_high_frac >= 1:
        raise ValueError("trim fractions must sum to less than one")
    n = len(spec)
    # high end first, then the low end; both as fractions of n
    n_high = math.floor(drop_high_frac * n)
    n_low = math.floor(drop_low_frac * n)
    kept = spec.values[: n - n_high][n_low:]
    if len(kept) == 0:
        raise ValueError("trimming would leave an empty spectrum")
    trims = list(spec.provenance.get("trims", []))
    trims.append({"n_in": n, "drop_low": n_low, "drop_high": n_high})
    prov = dict(spec.provenance)
    prov["trims"] = trims
    return replace(spec, values=kept.copy(), provenance=prov)
