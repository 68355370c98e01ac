"""Sparse assembly of the lattice and impurity Hamiltonians.

Both Hamiltonians are real in the occupation basis, so everything is stored
as real upper-triangle coordinate lists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import ImpurityParams, LatticeParams, SectorBasis, reflect


@dataclass(frozen=True, eq=False)
class SymmetricSparseMatrix:
    """Real symmetric matrix stored as its upper triangle (``row <= col``)."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.rows > self.cols):
            raise ValueError("only upper-triangle entries may be stored")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("matrix entries must be finite")

    @classmethod
    def from_triplets(cls, dim, rows, cols, values, meta=None, drop_zeros=True):
        """Fold arbitrary ``(i, j, v)`` triplets of a symmetric operator.

        Entries below the diagonal are mirrored up and duplicates summed, so
        callers may emit each off-diagonal element from either side, but only
        once per pair.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        m = sp.coo_matrix((values, (lo, hi)), shape=(dim, dim)).tocsr()
        m.sum_duplicates()
        m = m.tocoo()
        keep = m.data != 0 if drop_zeros else np.ones(m.nnz, bool)
        order = np.lexsort((m.col[keep], m.row[keep]))
        return cls(
            dim,
            m.row[keep][order].astype(np.int64),
            m.col[keep][order].astype(np.int64),
            m.data[keep][order],
            dict(meta or {}),
        )

    @property
    def nnz_upper(self) -> int:
        return len(self.values)

    def to_scipy(self) -> sp.csr_matrix:
        """Full symmetric CSR matrix."""
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.values, self.values[off]])
        return sp.csr_matrix((v, (r, c)), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        out[self.rows, self.cols] = self.values
        out[self.cols, self.rows] = self.values
        return out

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.dim)
        on = self.rows == self.cols
        d[self.rows[on]] = self.values[on]
        return d

    def trace(self) -> float:
        return float(self.diagonal().sum())

    def norm_estimate(self) -> float:
        """Frobenius norm; an upper bound on the spectral norm."""
        off = self.rows != self.cols
        return float(np.sqrt(np.sum(self.values**2) + np.sum(self.values[off] ** 2)))

    def write_text(self, path) -> None:
        """Write ``row col value`` lines under a ``#`` header naming the parameters."""
        with open(path, "w") as fh:
            fh.write(f"# dim={self.dim}\n")
            for k, v in sorted(self.meta.items()):
                fh.write(f"# {k}={v}\n")
            for r, c, v in zip(self.rows, self.cols, self.values):
                fh.write(f"{r} {c} {v:.17g}\n")

    @classmethod
    def read_text(cls, path) -> "SymmetricSparseMatrix":
        meta, dim, rows, cols, vals = {}, None, [], [], []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    if k == "dim":
                        dim = int(v)
                    else:
                        meta[k] = v
                    continue
                r, c, v = line.split()
                rows.append(int(r))
                cols.append(int(c))
                vals.append(float(v))
        return cls(dim, np.array(rows, np.int64), np.array(cols, np.int64), np.array(vals), meta)


def spin_ladder_amplitude(S: int, m: int, direction: str) -> float:
    """Matrix element of ``S^+`` (``"raise"``) or ``S^-`` (``"lower"``) from index ``m``.

    Spin magnitude is ``S/2``; index ``m`` represents ``S^z = m - S/2``.
    Returns 0 when the target leaves ``[0, S]``.
    """
    if direction not in ("raise", "lower"):
        raise ValueError(f"direction must be 'raise' or 'lower', got {direction!r}")
    step = 1 if direction == "raise" else -1
    if not (0 <= m <= S) or not (0 <= m + step <= S):
        return 0.0
    s = S / 2.0
    mz = m - s
    return math.sqrt(s * (s + 1) - mz * (mz + step))


def _params_meta(params) -> dict:
    return {k: getattr(params, k) for k in params.__dataclass_fields__}


def _lattice_action(config: tuple, params: LatticeParams, sp_amp: list):
    """Off-diagonal action of the lattice Hamiltonian on one product state.

    Yields ``(new_config, amplitude)``; the diagonal part is handled separately.
    """
    L, S = params.L, params.S
    g = params.lam / math.sqrt(S)
    c = list(config)
    for i in range(L):
        n, m = c[2 * i], c[2 * i + 1]
        # a_i^dag S_i^-
        if m > 0:
            new = c.copy()
            new[2 * i], new[2 * i + 1] = n + 1, m - 1
            yield tuple(new), g * math.sqrt(n + 1) * sp_amp[m - 1]
        # a_i S_i^+
        if n > 0 and m < S:
            new = c.copy()
            new[2 * i], new[2 * i + 1] = n - 1, m + 1
            yield tuple(new), g * math.sqrt(n) * sp_amp[m]
    if params.J == 0:
        return
    t = -params.J / 2.0
    for i in range(L - 1):
        j = i + 1
        ni, nj = c[2 * i], c[2 * j]
        # a_i^dag a_j and a_j^dag a_i
        if nj > 0:
            new = c.copy()
            new[2 * i], new[2 * j] = ni + 1, nj - 1
            yield tuple(new), t * math.sqrt((ni + 1) * nj)
        if ni > 0:
            new = c.copy()
            new[2 * i], new[2 * j] = ni - 1, nj + 1
            yield tuple(new), t * math.sqrt(ni * (nj + 1))


def assemble_lattice_hamiltonian(basis: SectorBasis) -> SymmetricSparseMatrix:
    """Tavis-Cummings lattice Hamiltonian restricted to a sector basis.

    In a reflection sector with parity ``p`` the state built on representative
    ``c`` is ``N_c (|c> + p|Rc>)``; applying ``H`` to ``c`` and folding every
    image ``c'`` onto its representative gives the element
    ``amp * sign * w(c') / w(c)``, with ``sign = p`` when ``c'`` is the
    non-representative orbit member.
    """
    params = basis.params
    if not isinstance(params, LatticeParams):
        raise TypeError("assemble_lattice_hamiltonian needs a lattice sector basis")
    if basis.dim == 0:
        raise ValueError("empty basis")
    if basis.n_sites != params.L:
        raise ValueError("basis and params disagree on the number of sites")
    S = params.S
    sp_amp = [spin_ladder_amplitude(S, m, "raise") for m in range(S + 1)]
    p = {"symmetric": 1.0, "antisymmetric": -1.0}.get(basis.parity)
    index, weights = basis.index, basis.weights

    configs = [tuple(int(x) for x in c) for c in basis.configs]
    diag = (
        params.omega_c * basis.configs[:, 0::2].sum(axis=1)
        + params.omega_s * (basis.configs[:, 1::2] - S / 2.0).sum(axis=1)
    )
    rows, cols, vals = list(range(basis.dim)), list(range(basis.dim)), list(diag)
    for k, c in enumerate(configs):
        for new, amp in _lattice_action(c, params, sp_amp):
            if p is None:
                kk = index.get(new)
                if kk is None:
                    raise ValueError(f"configuration {new} escaped the sector")
                sign, ratio = 1.0, 1.0
            else:
                r = reflect(new)
                rep = min(new, r)
                kk = index.get(rep)
                if kk is None:
                    # mirror-invariant image has no antisymmetric partner
                    if p < 0 and rep == r:
                        continue
                    raise ValueError(f"configuration {new} escaped the sector")
                sign = p if new != rep else 1.0
                ratio = weights[kk] / weights[k]
            # each unordered pair is visited from both ends; keep one
            if kk < k:
                continue
            rows.append(k)
            cols.append(kk)
            vals.append(amp * sign * ratio)
    meta = _params_meta(params)
    meta.update(n_ex=basis.n_ex, parity=basis.parity, basis_checksum=basis.checksum())
    return SymmetricSparseMatrix.from_triplets(basis.dim, rows, cols, vals, meta)


def assemble_impurity_hamiltonian(basis: SectorBasis) -> SymmetricSparseMatrix:
    """Driven single-site Hamiltonian on the truncated product basis.

    Transitions that would leave ``n < n_cutoff`` are dropped (hard cutoff).
    """
    params = basis.params
    if not isinstance(params, ImpurityParams):
        raise TypeError("assemble_impurity_hamiltonian needs an impurity basis")
    S, nc = params.S, params.n_cutoff
    if basis.dim != nc * (S + 1):
        raise ValueError("basis and params disagree on the dimension")
    n = basis.configs[:, 0]
    m = basis.configs[:, 1]
    idx = np.arange(basis.dim)
    diag = params.omega_c * n + params.omega_s * (m - S / 2.0)

    s = S / 2.0
    mz = m - s
    raise_amp = np.sqrt(np.maximum(s * (s + 1) - mz * (mz + 1), 0.0))
    # a S^+ : (n, m) -> (n-1, m+1)
    sel = (n > 0) & (m < S)
    src, dst = idx[sel], idx[sel] - (S + 1) + 1
    cpl = params.lam / math.sqrt(S) * np.sqrt(n[sel]) * raise_amp[sel]

    # -mu sqrt(S) (a + a^dag) : (n, m) <-> (n+1, m)
    seld = n < nc - 1
    dsrc, ddst = idx[seld], idx[seld] + (S + 1)
    drv = -params.mu * math.sqrt(S) * np.sqrt(n[seld] + 1.0)

    rows = np.concatenate([idx, src, dsrc])
    cols = np.concatenate([idx, dst, ddst])
    vals = np.concatenate([diag, cpl, drv])
    meta = _params_meta(params)
    meta.update(basis_checksum=basis.checksum())
    return SymmetricSparseMatrix.from_triplets(basis.dim, rows, cols, vals, meta)


def number_operator(basis: SectorBasis) -> SymmetricSparseMatrix:
    """Diagonal total excitation count ``sum_i (n_i + m_i)``."""
    counts = basis.excitation_counts().astype(float)
    idx = np.arange(basis.dim)
    return SymmetricSparseMatrix.from_triplets(
        basis.dim, idx, idx, counts, {"operator": "N"}, drop_zeros=False
    )
