import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import j1

from tclchaos.sff import (
    SffCurve,
    block_form_factors,
    default_times,
    sff,
    sff_goe_reference,
    sff_poisson_reference,
)
from tclchaos.stats import goe_sample_spectrum, poisson_levels
from tclchaos.spectra import trim_spectrum
from tclchaos.unfolding import unfold


def test_default_grid():
    t = default_times()
    assert len(t) == 400 and t[0] == pytest.approx(1e-2) and t[-1] == pytest.approx(1e2)
    assert np.all(np.diff(t) > 0)


def test_single_level_and_coherent_sum():
    t = default_times(50)
    assert np.allclose(block_form_factors([3.7], t), 1.0)
    lv = np.random.default_rng(1).normal(size=30)
    assert block_form_factors(lv, [0.0])[0] == pytest.approx(900)


def test_n1_blocks_give_one():
    c = sff(np.arange(5.0), block_size=1, times=default_times(20))
    assert np.allclose(c.values, 1.0)
    assert c.n_blocks == 5


def test_too_few_blocks():
    with pytest.raises(ValueError):
        sff(np.arange(150.0), block_size=100)
    with pytest.raises(ValueError):
        sff(np.arange(10.0), block_size=0)


def test_leftover_dropped():
    v = poisson_levels(250, 3)
    t = default_times(30)
    a = sff(v, 100, t)
    b = sff(v[:200], 100, t)
    assert a.n_blocks == 2
    assert np.array_equal(a.values, b.values)


@given(st.floats(-1e3, 1e3, allow_nan=False), st.integers(0, 2**31 - 1))
def test_shift_invariance(shift, seed):
    lv = np.random.default_rng(seed).uniform(0, 20, 20)
    t = default_times(25)
    assert np.allclose(block_form_factors(lv + shift, t), block_form_factors(lv, t), rtol=1e-9, atol=1e-9)


@given(st.integers(0, 2**31 - 1), st.integers(1, 25))
def test_realness_pairwise_cosines(seed, n):
    lv = np.random.default_rng(seed).uniform(0, 10, n)
    t = default_times(30)
    pair = np.cos(np.subtract.outer(lv, lv)[None, :, :] * t[:, None, None]).sum(axis=(1, 2))
    assert np.allclose(block_form_factors(lv, t), pair, atol=1e-10 * n * n)


@given(st.integers(0, 2**31 - 1))
def test_nonneg_and_bound(seed):
    v = poisson_levels(300, seed)
    c = sff(v, 100, default_times(40))
    assert np.all(c.values >= 0)
    assert np.all(c.values <= 100**2 + 1e-9)


def test_poisson_reference_limits():
    t = np.geomspace(0.01, 1e4, 60)
    assert np.allclose(sff_poisson_reference(1, t), 1.0, atol=1e-12)
    assert sff_poisson_reference(100, 1e6) == pytest.approx(100, rel=1e-9)


def test_poisson_reference_matches_finite_sum():
    # exact: K = N + sum_{m != n} <cos((E_m - E_n) t)>, gaps of k unit exponentials
    N = 100
    for t in (1e-3, 0.05, 0.3, 1.0, 7.0):
        z = 1 / (1 + 1j * t)
        exact = N + 2 * sum((N - k) * (z**k).real for k in range(1, N))
        assert sff_poisson_reference(N, t) == pytest.approx(exact, rel=1e-9)


def test_poisson_reference_small_t():
    # N^2 to 1e-2 needs N t << 0.1; at t = 0.01 the value is already 8% below
    assert sff_poisson_reference(100, 1e-3) == pytest.approx(100**2, rel=1e-2)
    assert sff_poisson_reference(100, 0.01) == pytest.approx(9179.837, rel=1e-6)


def test_goe_reference_branches():
    N = 100

    def left(t):
        return (math.pi / t * j1(2 * N * t / math.pi)) ** 2 + N * (t / (2 * math.pi) * (2 - math.log1p(t / math.pi)))

    eps = 1e-9
    a = sff_goe_reference(N, 2 * math.pi - eps)
    b = sff_goe_reference(N, 2 * math.pi + eps)
    assert a == pytest.approx(b, abs=1e-5)
    assert sff_goe_reference(N, 2 * math.pi) == pytest.approx(left(2 * math.pi), abs=1e-8)
    t = 100 * math.pi
    direct = (math.pi / t * j1(2 * N * t / math.pi)) ** 2 + N * (
        2 - t / (2 * math.pi) * math.log((t + math.pi) / (t - math.pi))
    )
    assert abs(sff_goe_reference(N, t) - direct) < 1e-9
    assert sff_goe_reference(N, 1e-6) == pytest.approx(N**2, rel=1e-6)
    with pytest.raises(ValueError):
        sff_goe_reference(N, 0.0)


def test_reference_plateaus():
    t = np.linspace(10 * math.pi, 20 * math.pi, 200)
    for ref in (sff_goe_reference, sff_poisson_reference):
        assert np.mean(ref(100, t)) == pytest.approx(100, rel=0.1)


def test_goe_measured_plateau():
    lv = []
    for k in range(6):
        spec = trim_spectrum(goe_sample_spectrum(600, k), 0.1, 0.1)
        lv.append(unfold(spec).values + 1000.0 * k)
    v = np.concatenate(lv)
    t = np.linspace(10 * math.pi, 20 * math.pi, 100)
    c = sff(v, 100, t)
    assert np.mean(c.values) == pytest.approx(100, rel=0.1)


def test_csv_roundtrip(tmp_path):
    c = sff(poisson_levels(400, 2), 100, default_times(30))
    c.to_csv(tmp_path / "s.csv")
    d = SffCurve.from_csv(tmp_path / "s.csv")
    assert np.array_equal(d.values, c.values) and np.array_equal(d.times, c.times)
    assert np.array_equal(d.goe, c.goe) and d.n_blocks == 4 and d.block_size == 100
