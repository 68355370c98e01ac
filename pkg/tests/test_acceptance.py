"""Acceptance criteria 1-9 at their stated tolerances.

Each test records a PASS/FAIL line (shown in the terminal summary) before
asserting.  The lattice and impurity sweeps are shared between criteria
4-7 through session fixtures; the whole file takes roughly ten minutes
on one core.
"""
import math

import numpy as np
import pytest

from acceptance_log import record
from oracles import orbit_counts, sector_spectrum
from tclchaos.basis import ImpurityParams, LatticeParams, build_sector_basis, sector_dimension
from tclchaos.classical import (
    classical_energy,
    eom_rhs,
    integrate,
    minimum_energy,
    poincare_section,
    sample_energy_shell,
    section_dimension,
    u1_charge,
)
from tclchaos.crossover import band_overlap_fraction, collapse_check, extract_map, increasing_branch, sweep
from tclchaos.hamiltonian import assemble_lattice_hamiltonian
from tclchaos.sff import default_times, sff, sff_goe_reference, sff_poisson_reference
from tclchaos.spectra import diagonalize, trim_spectrum
from tclchaos.stats import (
    GOE_MEAN_R,
    POISSON_MEAN_R,
    brody_pdf,
    fit_brody,
    gap_ratios,
    goe_sample_spectrum,
    poisson_levels,
    spacings,
)
from tclchaos.unfolding import unfold

LATTICE = dict(L=3, S=4, lam=1.0)
LATTICE_NEX = 17
LATTICE_GRID = [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6, 0.7, 1.0]
# scaled impurity controls mu * S^(3/4); beyond 24 the photon cutoff distorts the spectrum
IMPURITY_X = [0.5, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 16, 20, 24]
COLLAPSE_X = [0.5, 1, 2, 4, 6, 8, 10, 12, 14, 16, 20, 24]
COLLAPSE_CUTOFF = {8: 256, 16: 256, 32: 128}


def impurity_sweep(S, xs, n_cutoff):
    return sweep("impurity", np.asarray(xs, float) / S**0.75, dict(S=S, lam=1.0, n_cutoff=n_cutoff))


@pytest.fixture(scope="session")
def lattice_curve():
    return sweep("lattice", LATTICE_GRID, LATTICE, n_ex=LATTICE_NEX)


@pytest.fixture(scope="session")
def impurity16():
    return impurity_sweep(16, IMPURITY_X, 256)


def test_criterion_1_brody_reductions():
    s = np.linspace(0, 10, 10001)
    e0 = np.max(np.abs(brody_pdf(0.0, s) - np.exp(-s)))
    e1 = np.max(np.abs(brody_pdf(1.0, s) - 0.5 * math.pi * s * np.exp(-math.pi * s * s / 4)))
    ok = e0 <= 1e-12 and e1 <= 1e-12
    record(1, ok, f"max |brody(0)-exp| = {e0:.1e}, max |brody(1)-Wigner| = {e1:.1e}")
    assert ok


def test_criterion_2_gap_ratio_calibration():
    r_p = gap_ratios(poisson_levels(100_000, 0)).mean_r
    ratios = []
    for k in range(50):
        v = goe_sample_spectrum(400, k).values[100:300]
        ratios.append(gap_ratios(v).r_values)
    r_g = float(np.mean(np.concatenate(ratios)))
    ok = abs(r_p - 0.386) <= 0.005 and abs(r_g - 0.536) <= 0.01
    record(2, ok, f"<r> Poisson = {r_p:.4f} (0.386 +- 0.005), GOE = {r_g:.4f} (0.536 +- 0.01)")
    assert ok


def test_criterion_3_sff_references():
    t = default_times()
    t = t[(t >= 0.1) & (t <= 50)]
    c = sff(poisson_levels(10_000, 0), 100, t)
    z = np.abs(c.values - sff_poisson_reference(100, t)) / c.stderr
    poisson_ok = bool(np.all(z <= 3))

    blocks = []
    for k in range(25):
        spec = trim_spectrum(goe_sample_spectrum(500, k), 0.1, 0.1)
        blocks.append(unfold(spec).values + 1e4 * k)
    tt = np.geomspace(0.1, 100, 300)
    g = sff(np.concatenate(blocks), 100, tt)

    def avg(a, b):
        return g.values[(tt >= a) & (tt <= b)].mean()

    plateau = avg(10 * math.pi, 20 * math.pi)
    ramp = [avg(0.5, 1), avg(1, 2), avg(2, 4), avg(4, 6)]
    ramp_ref = [sff_goe_reference(100, tt[(tt >= a) & (tt <= b)]).mean() for a, b in
                [(0.5, 1), (1, 2), (2, 4), (4, 6)]]
    goe_ok = (abs(plateau - 100) <= 10 and bool(np.all(np.diff(ramp) > 0)) and ramp[-1] < plateau
              and np.allclose(ramp, ramp_ref, rtol=0.2))
    ok = poisson_ok and goe_ok
    record(3, ok, f"Poisson: {int(np.sum(z > 3))}/{len(t)} points beyond 3 SE (max {z.max():.2f}); "
                  f"GOE ramp {np.round(ramp, 1).tolist()} vs {np.round(ramp_ref, 1).tolist()}, "
                  f"plateau {plateau:.1f} (100 +- 10)")
    assert ok


def test_criterion_4_lattice_crossover(lattice_curve):
    dim = sector_dimension(LatticeParams(**LATTICE), LATTICE_NEX, "symmetric")
    c = lattice_curve
    assert c.control[0] == 0.02 and c.control[-1] == 1.0
    r0, r1, b0, b1 = c.mean_r[0], c.mean_r[-1], c.b[0], c.b[-1]
    checks = [2000 <= dim <= 6000, abs(r0 - 0.39) <= 0.03, abs(r1 - 0.53) <= 0.02, b0 <= 0.2, b1 >= 0.8]
    ok = all(checks)
    record(4, ok, f"dim {dim}; <r>(0.02) = {r0:.3f} (0.39 +- 0.03), <r>(1.0) = {r1:.3f} (0.53 +- 0.02), "
                  f"b(0.02) = {b0:.3f} (<= 0.2), b(1.0) = {b1:.3f} (>= 0.8)")
    assert ok


def test_criterion_5_impurity_crossover(impurity16):
    c = impurity16
    x = c.scaled_control
    r, err = c.mean_r, c.r_err
    low = r[x <= 1]
    run = np.convolve(r, np.ones(3) / 3, mode="valid")
    ipk = int(np.argmax(run)) + 1
    peak = run.max()
    tail = r[-2:]
    # monotone rise: the 3-point running mean never drops by more than 2 standard errors before the peak
    rise = run[: ipk]
    drops = np.maximum.accumulate(rise) - rise
    checks = [
        low.size > 0 and bool(np.all(np.abs(low - POISSON_MEAN_R) <= 0.03)),
        bool(abs(peak - GOE_MEAN_R) <= 0.02),
        bool(np.all(tail <= peak - 0.03)),
        bool(np.all(drops <= 2 * err.mean())),
    ]
    ok = all(checks) and not c.failed
    record(5, ok, f"<r> at x<=1 {np.round(low, 3).tolist()}, plateau {peak:.3f} at x={x[ipk]:g}, "
                  f"tail {np.round(tail, 3).tolist()}, checks {checks}")
    assert ok


def test_criterion_6_collapse(impurity16):
    curves = [impurity16 if S == 16 else impurity_sweep(S, COLLAPSE_X, COLLAPSE_CUTOFF[S])
              for S in (8, 16, 32)]
    s0 = collapse_check(curves, 0.0)
    s34 = collapse_check(curves, 0.75)
    ok = s34 * 2 <= s0
    record(6, ok, f"collapse score exponent 0: {s0:.4f}, exponent 3/4: {s34:.4f}, ratio {s0 / s34:.2f} (>= 2)")
    assert ok


def test_criterion_7_map_agreement(lattice_curve, impurity16):
    mb = extract_map(lattice_curve, impurity16, "b")
    mr = extract_map(lattice_curve, impurity16, "r")
    frac = band_overlap_fraction(mb, mr)
    ok = frac >= 0.8
    record(7, ok, f"b-map window {np.round(mb.window, 3).tolist()}, r-map window {np.round(mr.window, 3).tolist()}, "
                  f"band overlap on {frac:.0%} of the shared window (>= 80%)")
    assert ok


def test_criterion_8_classical():
    P = ImpurityParams(S=1, lam=1.0, mu=1.8)
    rng = np.random.default_rng(0)
    Jm = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])
    worst = 0.0
    n = 0
    while n < 100:
        y = np.r_[rng.uniform(-3, 3, 2), rng.uniform(-1.3, 1.3, 2)]
        if 0.5 * (y[2] ** 2 + y[3] ** 2) >= 0.95:
            continue
        n += 1
        g = np.zeros(4)
        for i in range(4):
            e = np.zeros(4)
            e[i] = 1e-6
            g[i] = (classical_energy(y + e, P) - classical_energy(y - e, P)) / 2e-6
        f = eom_rhs(y, P)
        worst = max(worst, np.max(np.abs(f - Jm @ g)) / np.abs(f).max())
    y0 = sample_energy_shell(P, minimum_energy(P)[0] + 2.0, seed=1)
    tr = integrate(y0, P, 1000.0, tol=1e-10)
    E = np.array([classical_energy(y, P) for y in tr.y])
    drift = np.abs(E - E[0]).max() / max(1.0, abs(E[0]))
    p0 = ImpurityParams(S=1, lam=1.0, mu=0.0)
    tr0 = integrate([0.8, -0.3, 0.5, 0.2], p0, 1000.0, tol=1e-10)
    q = np.array([u1_charge(y, p0) for y in tr0.y])
    dq = np.abs(q - q[0]).max()
    weak = ImpurityParams(S=1, lam=1.0, mu=0.1)
    d_weak = section_dimension(poincare_section(weak, minimum_energy(weak)[0] + 0.5, 8, 1000, seed=0))
    d_strong = section_dimension(poincare_section(P, minimum_energy(P)[0] + 2.0, 8, 1000, seed=0))
    checks = [worst <= 1e-6, drift <= 1e-8 and not tr.truncated, dq <= 1e-8, d_weak < 1.5 < d_strong]
    ok = all(checks)
    record(8, ok, f"gradient rel err {worst:.1e}, energy drift {drift:.1e}, Noether drift {dq:.1e}, "
                  f"dimension proxy mu=0.1: {d_weak:.2f}, mu=1.8: {d_strong:.2f}")
    assert ok


def test_criterion_9_oracles():
    bad = []
    for L in (1, 2, 3):
        for S in range(1, 5):
            p = LatticeParams(L, S)
            for n_ex in range(9):
                full, sym, anti = orbit_counts(L, S, n_ex)
                got = tuple(sector_dimension(p, n_ex, par) for par in ("none", "symmetric", "antisymmetric"))
                if got != (full, sym, anti):
                    bad.append((L, S, n_ex))
    union_err = 0.0
    for n_ex in (1, 2):
        p = LatticeParams(2, 1, lam=1.0, J=0.7)
        parts = [diagonalize(assemble_lattice_hamiltonian(build_sector_basis(p, n_ex, par))).values
                 for par in ("symmetric", "antisymmetric") if sector_dimension(p, n_ex, par)]
        ours = np.sort(np.concatenate(parts))
        ref = sector_spectrum(2, 1, n_ex, 1.0, 0.7)
        union_err = max(union_err, np.max(np.abs(ours - ref)))
    lam = 0.37
    block = assemble_lattice_hamiltonian(build_sector_basis(LatticeParams(1, 2, lam=lam), 1, "none")).to_dense()
    block_ok = np.allclose(block, [[0, lam], [lam, 0]], atol=1e-15)
    ok = not bad and union_err <= 1e-10 and block_ok
    record(9, ok, f"dimension mismatches {bad}, sector-union max error {union_err:.1e}, 2x2 block ok {block_ok}")
    assert ok


def test_unfolding_degree_stability(lattice_curve):
    spec = trim_spectrum(diagonalize(assemble_lattice_hamiltonian(
        build_sector_basis(LatticeParams(J=1.0, **LATTICE), LATTICE_NEX, "symmetric"))), 0.02, 0.02)
    b10 = fit_brody(spacings(unfold(spec, 10))).b
    b14 = fit_brody(spacings(unfold(spec, 14))).b
    assert abs(b10 - b14) <= 0.05


def test_increasing_branch_on_acceptance_data(impurity16):
    kx, ky, _ = increasing_branch(impurity16.control, impurity16.mean_r, impurity16.r_err)
    assert ky[0] < 0.42 and ky[-1] > 0.5
