"""Block-averaged spectral form factor and its Poisson/GOE references."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import j1

DEFAULT_BLOCK = 100


def default_times(n: int = 400, t_min: float = 1e-2, t_max: float = 1e2) -> np.ndarray:
    return np.geomspace(t_min, t_max, n)


@dataclass
class SffCurve:
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    block_size: int
    n_blocks: int
    goe: np.ndarray = field(repr=False, default=None)
    poisson: np.ndarray = field(repr=False, default=None)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,K_measured,K_stderr,K_goe,K_poisson,n_blocks,block_size\n")
            for t, k, e, g, p in zip(self.times, self.values, self.stderr, self.goe, self.poisson):
                fh.write(
                    f"{t:.17g},{k:.17g},{e:.17g},{g:.17g},{p:.17g},{self.n_blocks},{self.block_size}\n"
                )

    @classmethod
    def from_csv(cls, path) -> "SffCurve":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(
            data[:, 0], data[:, 1], data[:, 2], int(data[0, 6]), int(data[0, 5]),
            data[:, 3], data[:, 4],
        )


def block_form_factors(levels, times) -> np.ndarray:
    """``|sum_n exp(i E_n t)|^2`` for one block of levels, for every time."""
    levels = np.asarray(levels, dtype=float)
    times = np.asarray(times, dtype=float)
    phase = np.outer(times, levels)
    return np.cos(phase).sum(axis=1) ** 2 + np.sin(phase).sum(axis=1) ** 2


def sff(unfolded, block_size: int = DEFAULT_BLOCK, times=None, min_blocks: int = 2) -> SffCurve:
    """Average ``|Tr e^{iHt}|^2`` over disjoint consecutive blocks of levels.

    Leftover levels beyond the last full block are dropped.
    """
    v = unfolded.values if hasattr(unfolded, "values") else np.asarray(unfolded, dtype=float)
    times = default_times() if times is None else np.asarray(times, dtype=float)
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    n_blocks = len(v) // block_size
    if n_blocks < min_blocks:
        raise ValueError(
            f"{len(v)} levels give {n_blocks} blocks of {block_size}; need {min_blocks}"
        )
    per_block = np.empty((n_blocks, len(times)))
    for k in range(n_blocks):
        block = v[k * block_size:(k + 1) * block_size]
        # shifting each block to its centre costs nothing and keeps phases small
        per_block[k] = block_form_factors(block - block.mean(), times)
    mean = per_block.mean(axis=0)
    se = per_block.std(axis=0, ddof=1) / math.sqrt(n_blocks) if n_blocks > 1 else np.zeros_like(mean)
    return SffCurve(
        times, mean, se, block_size, n_blocks,
        sff_goe_reference(block_size, times), sff_poisson_reference(block_size, times),
    )


def sff_goe_reference(N: int, t):
    """Large-``N`` GOE form factor for unit mean spacing.

    Disconnected part ``[(pi/t) J1(2Nt/pi)]^2`` plus ``N`` times the GOE
    two-level form factor, whose branches meet at the Heisenberg time ``2 pi``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    disc = (np.pi / t * j1(2 * N * t / np.pi)) ** 2
    tau = t / (2 * np.pi)
    early = 2 * tau - tau * np.log1p(2 * tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        late = 2 - tau * np.log((t + np.pi) / (t - np.pi))
    conn = np.where(t < 2 * np.pi, early, late)
    out = disc + N * conn
    return out if out.ndim else float(out)


def sff_poisson_reference(N: int, t):
    """Form factor of ``N`` Poisson levels with unit mean spacing.

    ``N + 2/t^2 - [(1+it)^(1-N) + (1-it)^(1-N)]/t^2``, with the complex
    powers written in polar form, ``2 (1+t^2)^((1-N)/2) cos((N-1) atan t)``,
    and the cancellation at small ``t`` handled with ``expm1``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    a = 0.5 * (1 - N) * np.log1p(t * t)
    theta = (N - 1) * np.arctan(t)
    # 2 - 2 e^a cos(theta) = -2 expm1(a) + 4 e^a sin^2(theta/2)
    numer = -2.0 * np.expm1(a) + 4.0 * np.exp(a) * np.sin(0.5 * theta) ** 2
    out = N + numer / (t * t)
    return out if out.ndim else float(out)
