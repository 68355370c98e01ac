"""Classical large-S limit of the driven impurity and its Poincare sections.

The spin is bosonized (Holstein-Primakoff) and all canonical coordinates and
energies are rescaled by ``sqrt(S)`` and ``S``.  The spin oscillator then
lives on the disk ``p_s^2 + omega_s^2 x_s^2 <= 2 omega_s``, where the factor

    eta(x_s, p_s) = sqrt(1 - (p_s^2 + omega_s^2 x_s^2) / (2 omega_s))

is real.  State vectors are ordered ``(x_c, p_c, x_s, p_s)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

from .basis import ImpurityParams

ETA_FLOOR = 1e-8
CROSSING_TOL = 1e-10


class DomainError(ValueError):
    """State outside the physical disk ``0 <= eta <= 1``."""


class StepUnderflowError(RuntimeError):
    pass


class SeedingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClassicalState:
    x_c: float
    p_c: float
    x_s: float
    p_s: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x_c, self.p_c, self.x_s, self.p_s], dtype=float)

    @classmethod
    def from_array(cls, y) -> "ClassicalState":
        return cls(*(float(v) for v in y))


def _as_vec(state) -> np.ndarray:
    return state.as_array() if isinstance(state, ClassicalState) else np.asarray(state, dtype=float)


def eta_squared(x_s, p_s, omega_s: float = 1.0):
    return 1.0 - (p_s * p_s + omega_s * omega_s * x_s * x_s) / (2.0 * omega_s)


def classical_energy(state, params: ImpurityParams) -> float:
    """Rescaled classical energy (constant offsets dropped)."""
    x_c, p_c, x_s, p_s = _as_vec(state)
    wc, ws, lam, mu = params.omega_c, params.omega_s, params.lam, params.mu
    e2 = eta_squared(x_s, p_s, ws)
    if e2 < 0 or e2 > 1:
        raise DomainError(f"eta^2 = {e2} outside [0, 1]")
    w = math.sqrt(wc * ws)
    return (
        0.5 * (p_c * p_c + wc * wc * x_c * x_c)
        + 0.5 * (p_s * p_s + ws * ws * x_s * x_s)
        + lam * (w * x_c * x_s + p_c * p_s / w) * math.sqrt(e2)
        - math.sqrt(2.0 * wc) * mu * x_c
    )


def _rhs(y, wc, ws, lam, mu, floor):
    x_c, p_c, x_s, p_s = y
    e2 = 1.0 - (p_s * p_s + ws * ws * x_s * x_s) / (2.0 * ws)
    if not e2 >= floor * floor:
        return None
    eta = math.sqrt(e2)
    w = math.sqrt(wc * ws)
    q = wc * ws * x_c * x_s + p_c * p_s
    return (
        p_c + lam / w * eta * p_s,
        -wc * wc * x_c - lam * w * eta * x_s + math.sqrt(2.0 * wc) * mu,
        p_s + lam / w * (eta * p_c - q * p_s / (2.0 * ws * eta)),
        -ws * ws * x_s - lam * w * (eta * x_c - q * x_s / (2.0 * wc * eta)),
    )


def eom_rhs(state, params: ImpurityParams) -> np.ndarray:
    """Hamilton's equations ``(dx_c, dp_c, dx_s, dp_s)/dt``."""
    out = _rhs(_as_vec(state), params.omega_c, params.omega_s, params.lam, params.mu, ETA_FLOOR)
    if out is None:
        raise DomainError("eta below the floor; equations of motion are singular there")
    return np.array(out)


def u1_charge(state, params: ImpurityParams) -> float:
    """Total classical excitation number, conserved when the drive vanishes."""
    x_c, p_c, x_s, p_s = _as_vec(state)
    wc, ws = params.omega_c, params.omega_s
    return (p_c**2 + wc**2 * x_c**2) / (2 * wc) + (p_s**2 + ws**2 * x_s**2) / (2 * ws)


_A = _dop.A[:_dop.N_STAGES, :_dop.N_STAGES].copy()
_B = _dop.B.copy()
_C = _dop.C[:_dop.N_STAGES].copy()
_E3 = _dop.E3.copy()
_E5 = _dop.E5.copy()

# integer status codes returned by the compiled core
_DONE, _CROSSINGS, _UNDERFLOW, _MAXSTEPS = 0, 1, 2, 3


@njit(cache=True)
def _f(y, prm, out):
    wc, ws, lam, mu, floor = prm[0], prm[1], prm[2], prm[3], prm[4]
    x_c, p_c, x_s, p_s = y[0], y[1], y[2], y[3]
    e2 = 1.0 - (p_s * p_s + ws * ws * x_s * x_s) / (2.0 * ws)
    if not e2 >= floor * floor:
        return False
    eta = math.sqrt(e2)
    w = math.sqrt(wc * ws)
    q = wc * ws * x_c * x_s + p_c * p_s
    out[0] = p_c + lam / w * eta * p_s
    out[1] = -wc * wc * x_c - lam * w * eta * x_s + math.sqrt(2.0 * wc) * mu
    out[2] = p_s + lam / w * (eta * p_c - q * p_s / (2.0 * ws * eta))
    out[3] = -ws * ws * x_s - lam * w * (eta * x_c - q * x_s / (2.0 * wc * eta))
    return True


@njit(cache=True)
def _energy(y, prm):
    wc, ws, lam, mu = prm[0], prm[1], prm[2], prm[3]
    x_c, p_c, x_s, p_s = y[0], y[1], y[2], y[3]
    e2 = 1.0 - (p_s * p_s + ws * ws * x_s * x_s) / (2.0 * ws)
    w = math.sqrt(wc * ws)
    return (0.5 * (p_c * p_c + wc * wc * x_c * x_c) + 0.5 * (p_s * p_s + ws * ws * x_s * x_s)
            + lam * (w * x_c * x_s + p_c * p_s / w) * math.sqrt(max(e2, 0.0))
            - math.sqrt(2.0 * wc) * mu * x_c)


@njit(cache=True)
def _rk_step(y, f0, h, prm, K, A, B, C):
    """One Dormand-Prince 8 step; fills ``K`` and returns ``(y_new, ok)``."""
    n_st = B.shape[0]
    K[0, :] = f0
    tmp = np.empty(4)
    for s in range(1, n_st):
        for i in range(4):
            acc = 0.0
            for j in range(s):
                acc += A[s, j] * K[j, i]
            tmp[i] = y[i] + h * acc
        if not _f(tmp, prm, K[s]):
            return y, False
    y_new = np.empty(4)
    for i in range(4):
        acc = 0.0
        for j in range(n_st):
            acc += B[j] * K[j, i]
        y_new[i] = y[i] + h * acc
    if not _f(y_new, prm, K[n_st]):
        return y, False
    return y_new, True


@njit(cache=True)
def _err_norm(y, y_new, K, h, rtol, atol, E3, E5):
    e5 = 0.0
    e3 = 0.0
    for i in range(4):
        sc = atol + max(abs(y[i]), abs(y_new[i])) * rtol
        a5 = 0.0
        a3 = 0.0
        for j in range(E5.shape[0]):
            a5 += K[j, i] * E5[j]
            a3 += K[j, i] * E3[j]
        e5 += (a5 / sc) ** 2
        e3 += (a3 / sc) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * 4.0)


@njit(cache=True)
def _core(y0, t_end, h0, rtol, atol, etol, prm, A, B, C, E3, E5,
          n_cross_max, record, max_steps, h_max):
    direction = 1.0 if t_end >= 0 else -1.0
    K = np.empty((B.shape[0] + 1, 4))
    y = y0.copy()
    f0 = np.empty(4)
    _f(y, prm, f0)
    t = 0.0
    h = direction * min(abs(h0), abs(t_end)) if t_end != 0 else 0.0
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, 4))
    n_rec = 0
    if record:
        ts[0] = 0.0
        ys[0] = y
        n_rec = 1
    cross_t = np.empty(max(n_cross_max, 1))
    cross_y = np.empty((max(n_cross_max, 1), 4))
    n_cross = 0
    n_acc = 0
    n_rej = 0
    status = _DONE
    e_cur = _energy(y, prm)
    e_scale = max(1.0, abs(e_cur))
    while direction * (t_end - t) > 0:
        if n_acc + n_rej >= max_steps:
            status = _MAXSTEPS
            break
        if abs(h) > h_max:
            h = direction * h_max
        if direction * (t + h - t_end) > 0:
            h = t_end - t
        if abs(h) < 1e-14 * max(1.0, abs(t)):
            status = _UNDERFLOW
            break
        y_new, ok = _rk_step(y, f0, h, prm, K, A, B, C)
        if not ok:
            # a stage left the eta-domain: halve and retry
            h *= 0.5
            n_rej += 1
            continue
        err = _err_norm(y, y_new, K, h, rtol, atol, E3, E5)
        e_new = _energy(y_new, prm)
        de = abs(e_new - e_cur) / (e_scale * abs(h))
        if err <= 1.0 and de <= etol:
            factor = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** (-1.0 / 8.0))
            if de > 0.0:
                factor = min(factor, max(0.2, 0.9 * (etol / de) ** (1.0 / 8.0)))
            if n_cross_max > 0 and y[3] > 0.0 and y_new[3] <= 0.0:
                # bisect on the sub-step length for p_s = 0
                lo = 0.0
                hi = h
                yc = y_new
                tc = t + h
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    yc, okc = _rk_step(y, f0, mid, prm, K, A, B, C)
                    tc = t + mid
                    if not okc:
                        break
                    if abs(yc[3]) < 1e-10 or abs(hi - lo) < 1e-15 * max(1.0, abs(t)):
                        break
                    if yc[3] > 0.0:
                        lo = mid
                    else:
                        hi = mid
                cross_t[n_cross] = tc
                cross_y[n_cross] = yc
                n_cross += 1
            t += h
            y = y_new
            _f(y, prm, f0)
            e_cur = e_new
            n_acc += 1
            if record:
                if n_rec == cap:
                    cap *= 2
                    ts2 = np.empty(cap)
                    ys2 = np.empty((cap, 4))
                    ts2[:n_rec] = ts[:n_rec]
                    ys2[:n_rec] = ys[:n_rec]
                    ts = ts2
                    ys = ys2
                ts[n_rec] = t
                ys[n_rec] = y
                n_rec += 1
            h *= factor
            if n_cross_max > 0 and n_cross >= n_cross_max:
                status = _CROSSINGS
                break
        else:
            factor = max(0.2, 0.9 * err ** (-1.0 / 8.0)) if err > 1.0 and np.isfinite(err) else 0.5
            if de > etol:
                factor = min(factor, max(0.2, 0.9 * (etol / de) ** (1.0 / 8.0)))
            h *= min(factor, 0.9)
            n_rej += 1
    if not record:
        ts[0] = t
        ys[0] = y
        n_rec = 1
    return ts[:n_rec], ys[:n_rec], n_acc, n_rej, status, cross_t[:n_cross], cross_y[:n_cross]


def _prm(params) -> np.ndarray:
    return np.array([params.omega_c, params.omega_s, params.lam, params.mu, ETA_FLOOR])


def _run(state0, params, t_max, tol, n_cross=0, record=True, max_steps=50_000_000, h_max=np.inf):
    y0 = _as_vec(state0)
    if eta_squared(y0[2], y0[3], params.omega_s) < 1e-12:
        raise DomainError("initial state too close to the eta = 0 boundary")
    if _rhs(y0, params.omega_c, params.omega_s, params.lam, params.mu, ETA_FLOOR) is None:
        raise DomainError("initial state outside the integrable domain")
    return _core(y0, float(t_max), 1e-2, tol, tol * 1e-2, tol * 1e-2, _prm(params),
                 _A, _B, _C, _E3, _E5, int(n_cross), bool(record), int(max_steps), float(h_max))


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    n_accepted: int
    n_rejected: int
    truncated: bool = False

    @property
    def final(self) -> ClassicalState:
        return ClassicalState.from_array(self.y[-1])


def integrate(state0, params: ImpurityParams, t_max: float, tol: float = 1e-10,
              record: bool = True, strict: bool = False) -> Trajectory:
    """Adaptive Dormand-Prince 8(5,3) integration of Hamilton's equations.

    A step is accepted only if the embedded error estimate is within
    ``rtol = tol``, ``atol = tol/100`` and the energy changed by less than
    ``tol/100`` (relative) per unit time.  Trial steps with a stage outside
    the disk are halved and retried; if the step underflows near the
    boundary the trajectory is truncated and flagged.  Negative ``t_max``
    integrates backward.  With ``strict`` an underflow raises
    :class:`StepUnderflowError` instead.
    """
    ts, ys, n_acc, n_rej, status, _, _ = _run(state0, params, t_max, tol, record=record)
    if status == _UNDERFLOW and strict:
        raise StepUnderflowError(f"step size underflow at t={ts[-1]:.6g} near the eta = 0 boundary")
    return Trajectory(ts, ys, int(n_acc), int(n_rej), status == _UNDERFLOW)


@dataclass
class PoincareSection:
    energy: float
    params: dict
    points: list  # per trajectory: (k, 2) arrays of (x_c, p_c)
    times: list
    direction: str = "p_s decreasing"
    tol: float = 1e-10
    seeds: list = field(default_factory=list)
    truncated: list = field(default_factory=list)
    n_steps: list = field(default_factory=list)
    crossing_states: list = field(default_factory=list, repr=False)

    def all_points(self) -> np.ndarray:
        pts = [p for p in self.points if len(p)]
        return np.vstack(pts) if pts else np.zeros((0, 2))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("trajectory_id,crossing_index,x_c,p_c,t_cross\n")
            for tid, (pts, ts) in enumerate(zip(self.points, self.times)):
                for k, ((x, p), t) in enumerate(zip(pts, ts)):
                    fh.write(f"{tid},{k},{x:.17g},{p:.17g},{t:.17g}\n")

    def metadata(self) -> dict:
        return {
            "E": self.energy, **self.params, "tol": self.tol, "crossing_tol": CROSSING_TOL,
            "direction": self.direction, "seeds": self.seeds, "truncated": self.truncated,
            "n_steps": self.n_steps,
        }


def trajectory_section(state0, params, n_crossings, tol=1e-10, t_max=None):
    """One-sided ``p_s = 0`` crossings (``dp_s/dt < 0``) of a single trajectory.

    Returns ``(points, times, states, truncated, n_steps)``.
    """
    if t_max is None:
        t_max = 100.0 * n_crossings + 100.0
    _, _, n_acc, _, status, ct, cy = _run(state0, params, t_max, tol, n_cross=n_crossings, record=False)
    return cy[:, :2].copy(), ct, cy, status == _UNDERFLOW, int(n_acc)


def _min_energy_given_spin(x_s, p_s, params):
    """Minimum over ``(x_c, p_c)`` of the energy, and the minimizing pair."""
    wc, ws, lam, mu = params.omega_c, params.omega_s, params.lam, params.mu
    e2 = eta_squared(x_s, p_s, ws)
    eta = math.sqrt(max(e2, 0.0))
    w = math.sqrt(wc * ws)
    B = lam * eta * p_s / w  # linear coefficient of p_c
    k = lam * w * eta * x_s - math.sqrt(2 * wc) * mu  # linear coefficient of x_c
    c0 = 0.5 * (p_s * p_s + ws * ws * x_s * x_s)
    e_min = c0 - 0.5 * B * B - 0.5 * k * k / (wc * wc)
    return e_min, -k / (wc * wc), -B, (B, k, c0)


def minimum_energy(params: ImpurityParams, n_starts: int = 16, seed: int = 0):
    """Global minimum of the classical energy and a state attaining it."""
    rng = np.random.default_rng(seed)
    ws = params.omega_s
    rad = math.sqrt(2.0 / ws), math.sqrt(2.0 * ws)

    def f(z):
        x_s, p_s = z
        if eta_squared(x_s, p_s, ws) < 0:
            return 1e6 * (1 - eta_squared(x_s, p_s, ws))
        return _min_energy_given_spin(x_s, p_s, params)[0]

    best = None
    starts = [np.zeros(2)] + [rng.uniform(-1, 1, 2) * np.array(rad) * 0.9 for _ in range(n_starts)]
    for z0 in starts:
        res = minimize(f, z0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
        if best is None or res.fun < best.fun:
            best = res
    x_s, p_s = best.x
    e, x_c, p_c, _ = _min_energy_given_spin(x_s, p_s, params)
    return float(e), ClassicalState(x_c, p_c, float(x_s), float(p_s))


def _solve_pc(x_c, x_s, p_s, E, params):
    wc = params.omega_c
    _, _, _, (B, k, c0) = _min_energy_given_spin(x_s, p_s, params)
    # 0.5 p^2 + B p + (0.5 wc^2 x^2 + k x + c0 - E) = 0
    c = 0.5 * wc * wc * x_c * x_c + k * x_c + c0 - E
    disc = B * B - 2.0 * c
    if disc < 0:
        return None
    root = math.sqrt(disc)
    return -B + root, -B - root


def sample_energy_shell(params: ImpurityParams, E: float, seed=None, max_tries: int = 100_000,
                        e_min=None) -> ClassicalState:
    """Draw a state on the energy shell ``H = E``.

    ``(x_s, p_s)`` is drawn uniformly in the disk; for that spin state the
    admissible ``x_c`` form an interval (the energy is quadratic in
    ``(x_c, p_c)``), from which ``x_c`` is drawn uniformly before solving
    the quadratic for ``p_c``.  When the shell is a thin region around the
    minimum, proposals fall back to a small ball about the minimizer.
    """
    rng = np.random.default_rng(seed)
    ws, wc = params.omega_s, params.omega_c
    if e_min is None:
        e_min, argmin = minimum_energy(params)
    else:
        e_min, argmin = e_min
    scale = max(1.0, abs(E))
    if E < e_min - 1e-10 * scale:
        raise SeedingError(f"energy {E} below the classical minimum {e_min}")
    if E - e_min <= 1e-12 * scale:
        return argmin
    r_disk = math.sqrt(2.0 * ws)
    ball = math.sqrt(2.0 * (E - e_min))
    for attempt in range(max_tries):
        if attempt < max_tries // 2:
            rho = r_disk * math.sqrt(rng.random())
            phi = 2 * math.pi * rng.random()
            p_s, x_s = rho * math.cos(phi), rho * math.sin(phi) / ws
        else:
            p_s = argmin.p_s + ball * rng.uniform(-1, 1)
            x_s = argmin.x_s + ball * rng.uniform(-1, 1)
        if eta_squared(x_s, p_s, ws) <= 1e-6:
            continue
        e_spin, x_mid, _, (B, k, c0) = _min_energy_given_spin(x_s, p_s, params)
        if e_spin > E:
            continue
        half = math.sqrt(2.0 * (E - e_spin)) / wc
        x_c = x_mid + half * rng.uniform(-1, 1)
        roots = _solve_pc(x_c, x_s, p_s, E, params)
        if roots is None:
            continue
        p_c = roots[rng.integers(2)]
        state = ClassicalState(x_c, p_c, x_s, p_s)
        if abs(classical_energy(state, params) - E) <= 1e-10 * scale:
            return state
    raise SeedingError(f"no state found on the shell E={E} after {max_tries} tries")


def poincare_section(params: ImpurityParams, E: float, n_seeds: int = 8, n_crossings: int = 200,
                     seed: int = 0, tol: float = 1e-10, max_seed_attempts: int = 50) -> PoincareSection:
    """Section of the energy shell by ``p_s = 0`` (crossed downward), in the ``(x_c, p_c)`` plane."""
    rng = np.random.default_rng(seed)
    minimum = minimum_energy(params)
    points, times, seeds, trunc, steps = [], [], [], [], []
    attempts = 0
    while len(points) < n_seeds:
        attempts += 1
        if attempts > max_seed_attempts * n_seeds:
            raise SeedingError("could not seed enough trajectories")
        s = int(rng.integers(2**31))
        try:
            state = sample_energy_shell(params, E, seed=s, e_min=minimum)
        except SeedingError:
            if attempts > max_seed_attempts:
                raise
            continue
        if eta_squared(state.x_s, state.p_s, params.omega_s) < 1e-6:
            continue
        pts, ts, _, truncated, n = trajectory_section(state, params, n_crossings, tol)
        points.append(pts)
        times.append(ts)
        seeds.append(s)
        trunc.append(truncated)
        steps.append(n)
    pdict = {"S": params.S, "lam": params.lam, "mu": params.mu,
             "omega_c": params.omega_c, "omega_s": params.omega_s}
    return PoincareSection(E, pdict, points, times, tol=tol, seeds=seeds, truncated=trunc, n_steps=steps)


def correlation_dimension(points, c_lo: float = 0.005, c_hi: float = 0.05) -> float:
    """Grassberger-Procaccia slope of the pair-correlation sum.

    The correlation sum ``C(r)`` (fraction of point pairs closer than
    ``r``) grows like ``r^d`` on a ``d``-dimensional set.  The slope is
    taken between the radii where ``C = c_lo`` and ``C = c_hi``, after
    scaling both coordinates to unit span.  Invariant curves give about 1,
    area-filling chaotic clouds about 2, periodic orbits about 0.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < 50:
        raise ValueError("too few points for a dimension estimate")
    span = np.ptp(pts, axis=0)
    pts = pts / np.where(span > 0, span, 1.0)
    d = pdist(pts)
    r_lo, r_hi = np.quantile(d, [c_lo, c_hi])
    if r_lo <= 0:
        return 0.0
    return float(math.log(c_hi / c_lo) / math.log(r_hi / r_lo))


def section_dimension(section: PoincareSection) -> float:
    """Median over trajectories of :func:`correlation_dimension`."""
    dims = [correlation_dimension(p) for p in section.points if len(p) >= 50]
    if not dims:
        raise ValueError("no trajectory has enough crossings")
    return float(np.median(dims))
