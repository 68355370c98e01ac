"""Occupation-number bases for the Tavis-Cummings lattice and its impurity model.

A local state on one site is a pair ``(n, m)``: ``n`` bosons in the cavity mode
and spin index ``m`` in ``[0, S]``, the latter representing the ``S^z``
eigenvalue ``m - S/2``.  A lattice configuration is stored flattened as
``(n_1, m_1, ..., n_L, m_L)``, which is also the lexicographic sort key.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

PARITIES = ("symmetric", "antisymmetric", "none")

#: default ceiling on basis size; dense diagonalization beyond this is hopeless anyway
DEFAULT_MAX_DIM = 400_000


class CapacityError(RuntimeError):
    """Raised when a requested basis exceeds the configured memory budget."""


@dataclass(frozen=True)
class LatticeParams:
    """Parameters of the Tavis-Cummings lattice (open chain)."""

    L: int
    S: int
    lam: float = 1.0
    J: float = 0.0
    omega_c: float = 1.0
    omega_s: float = 1.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        if int(self.S) != self.S or self.S < 1:
            raise ValueError(f"S must be a positive integer, got {self.S}")
        if self.J < 0:
            raise ValueError(f"hopping J must be non-negative, got {self.J}")

    @property
    def resonant(self) -> bool:
        return self.omega_c == self.omega_s


@dataclass(frozen=True)
class ImpurityParams:
    """Parameters of the driven single-site impurity model.

    A negative drive is mapped to ``|mu|``: the boson phase rotation
    ``a -> -a`` combined with ``S^+ -> -S^+`` flips its sign and leaves the
    spectrum unchanged.
    """

    S: int
    lam: float = 1.0
    mu: float = 0.0
    omega_c: float = 1.0
    omega_s: float = 1.0
    n_cutoff: int = 1024

    def __post_init__(self):
        if int(self.S) != self.S or self.S < 1:
            raise ValueError(f"S must be a positive integer, got {self.S}")
        if int(self.n_cutoff) != self.n_cutoff or self.n_cutoff < 1:
            raise ValueError(f"n_cutoff must be a positive integer, got {self.n_cutoff}")
        if self.mu < 0:
            object.__setattr__(self, "mu", -self.mu)


@dataclass(frozen=True)
class LocalState:
    n: int
    m: int

    def excitations(self) -> int:
        return self.n + self.m


def reflect(config: tuple) -> tuple:
    """Mirror a flattened configuration about the chain centre."""
    sites = [config[2 * i: 2 * i + 2] for i in range(len(config) // 2)]
    return tuple(x for site in reversed(sites) for x in site)


def canonical(config: tuple) -> tuple:
    """Lexicographically smallest member of the reflection orbit."""
    return min(config, reflect(config))


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """An ordered, immutable basis of one Hilbert-space sector.

    Attributes
    ----------
    params : LatticeParams or ImpurityParams
    n_ex : int or None
        Total excitation number; ``None`` for the (unprojected) impurity basis.
    parity : str
        ``"symmetric"``, ``"antisymmetric"`` or ``"none"``.
    configs : (dim, 2L) int array
        Flattened representative configurations in canonical order.
    weights : (dim,) float array
        ``1/sqrt(2)`` for configurations with a distinct mirror image, ``1``
        otherwise (always ``1`` when ``parity == "none"``).
    """

    params: object
    n_ex: int | None
    parity: str
    configs: np.ndarray
    weights: np.ndarray
    index: Mapping[tuple, int] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.configs)

    @property
    def n_sites(self) -> int:
        return self.configs.shape[1] // 2

    @property
    def kind(self) -> str:
        return "impurity" if isinstance(self.params, ImpurityParams) else "lattice"

    def __len__(self) -> int:
        return self.dim

    @property
    def states(self) -> list[tuple[LocalState, ...]]:
        return [
            tuple(LocalState(int(c[2 * i]), int(c[2 * i + 1])) for i in range(self.n_sites))
            for c in self.configs
        ]

    def lookup(self, config) -> int:
        return self.index[tuple(int(x) for x in config)]

    def excitation_counts(self) -> np.ndarray:
        return self.configs.sum(axis=1)

    def checksum(self) -> str:
        h = hashlib.sha256(np.ascontiguousarray(self.configs, dtype=np.int64).tobytes())
        h.update(self.parity.encode())
        return h.hexdigest()[:16]

    def to_csv(self, path) -> None:
        """Dump as CSV with site-resolved ``n_i, m_i`` columns, weight and index."""
        header = [f"{x}_{i + 1}" for i in range(self.n_sites) for x in ("n", "m")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header + ["weight", "index"])
            for k, (c, wt) in enumerate(zip(self.configs, self.weights)):
                w.writerow([int(x) for x in c] + [repr(float(wt)), k])


def _local_count_poly(S: int, n_max: int) -> np.ndarray:
    """Coefficients of the single-site generating function truncated at ``n_max``.

    The number of local states with ``n + m = k`` is ``min(k, S) + 1``.
    """
    k = np.arange(n_max + 1)
    return np.minimum(k, S) + 1


def _poly_power_coeff(base: np.ndarray, power: int, n: int) -> int:
    out = np.zeros(n + 1, dtype=object)
    out[0] = 1
    base = base[: n + 1].astype(object)
    for _ in range(power):
        out = np.convolve(out, base)[: n + 1]
    return int(out[n])


def _check_parity(parity: str) -> None:
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")


def sector_dimension(params: LatticeParams, n_ex: int, parity: str = "none") -> int:
    """Number of basis states in a fixed-excitation, fixed-parity sector.

    Counted with generating functions, never by enumeration: the full sector
    is the ``n_ex`` coefficient of ``g(x)**L`` and the mirror-invariant
    configurations that of ``g(x**2)**(L//2) * g(x)**(L%2)``, where ``g`` is
    the single-site series.  Orbit counting then splits the sector.
    """
    _check_parity(parity)
    if n_ex < 0:
        return 0
    g = _local_count_poly(params.S, n_ex)
    full = _poly_power_coeff(g, params.L, n_ex)
    if parity == "none":
        return full
    # palindromes: mirrored site pairs share a local state (2x excitations)
    g2 = np.zeros(n_ex + 1, dtype=object)
    g2[::2] = g[: n_ex // 2 + 1]
    pal = np.zeros(n_ex + 1, dtype=object)
    pal[0] = 1
    for _ in range(params.L // 2):
        pal = np.convolve(pal, g2)[: n_ex + 1]
    if params.L % 2:
        pal = np.convolve(pal, g.astype(object))[: n_ex + 1]
    n_pal = int(pal[n_ex])
    if parity == "symmetric":
        return (full + n_pal) // 2
    return (full - n_pal) // 2


def _iter_sorted(L: int, S: int, n_ex: int) -> Iterator[tuple]:
    """All flattened configurations with total excitation ``n_ex``, lexicographic."""
    if L == 1:
        for n in range(max(0, n_ex - S), n_ex + 1):
            yield (n, n_ex - n)
        return
    for n in range(n_ex + 1):
        for m in range(min(S, n_ex - n) + 1):
            for rest in _iter_sorted(L - 1, S, n_ex - n - m):
                yield (n, m) + rest


def build_sector_basis(
    params: LatticeParams,
    n_ex: int,
    parity: str = "symmetric",
    max_dim: int = DEFAULT_MAX_DIM,
) -> SectorBasis:
    """Enumerate a lattice sector of fixed excitation number and reflection parity.

    In a parity sector each orbit is represented by its lexicographically
    smallest member; mirror-invariant configurations only live in the
    symmetric sector.
    """
    _check_parity(parity)
    if n_ex < 0:
        raise ValueError("n_ex must be non-negative")
    expected = sector_dimension(params, n_ex, parity)
    if expected > max_dim:
        raise CapacityError(
            f"sector dimension {expected} exceeds the budget max_dim={max_dim}"
        )
    configs, weights = [], []
    for c in _iter_sorted(params.L, params.S, n_ex):
        if parity == "none":
            configs.append(c)
            weights.append(1.0)
            continue
        r = reflect(c)
        if r < c:
            continue
        if r == c:
            if parity == "antisymmetric":
                continue
            weights.append(1.0)
        else:
            weights.append(1.0 / math.sqrt(2.0))
        configs.append(c)
    arr = np.array(configs, dtype=np.int64).reshape(len(configs), 2 * params.L)
    index = {c: k for k, c in enumerate(configs)}
    return SectorBasis(params, n_ex, parity, arr, np.array(weights), index)


def build_impurity_basis(params: ImpurityParams, max_dim: int = DEFAULT_MAX_DIM) -> SectorBasis:
    """Truncated product basis ``(n, m)``, ``n < n_cutoff``, ``0 <= m <= S``.

    No symmetry projection: the drive breaks the U(1) charge.
    """
    dim = params.n_cutoff * (params.S + 1)
    if dim > max_dim:
        raise CapacityError(f"impurity dimension {dim} exceeds the budget max_dim={max_dim}")
    n, m = np.meshgrid(np.arange(params.n_cutoff), np.arange(params.S + 1), indexing="ij")
    arr = np.stack([n.ravel(), m.ravel()], axis=1).astype(np.int64)
    index = _ImpurityIndex(params.S, params.n_cutoff)
    return SectorBasis(params, None, "none", arr, np.ones(dim), index)


class _ImpurityIndex(Mapping):
    """Closed-form index map for the product basis (avoids a 10^5-entry dict)."""

    def __init__(self, S: int, n_cutoff: int):
        self._S, self._nc = S, n_cutoff

    def __getitem__(self, key):
        n, m = key
        if not (0 <= n < self._nc and 0 <= m <= self._S):
            raise KeyError(key)
        return n * (self._S + 1) + m

    def __iter__(self):
        for n in range(self._nc):
            for m in range(self._S + 1):
                yield (n, m)

    def __len__(self):
        return self._nc * (self._S + 1)
