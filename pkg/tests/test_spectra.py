import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import sector_spectrum
from tclchaos.basis import LatticeParams, build_sector_basis
from tclchaos.hamiltonian import SymmetricSparseMatrix, assemble_lattice_hamiltonian
from tclchaos.spectra import Spectrum, diagonalize, trim_spectrum


def _dense(a):
    a = np.asarray(a, dtype=float)
    r, c = np.triu_indices(len(a))
    return SymmetricSparseMatrix.from_triplets(len(a), r, c, a[r, c])


def test_examples():
    assert np.allclose(diagonalize(_dense([[0, 1], [1, 0]])).values, [-1, 1])
    assert np.allclose(diagonalize(_dense(np.diag([3.0, 1.0, 2.0]))).values, [1, 2, 3])
    b = build_sector_basis(LatticeParams(1, 2, lam=0.5), 1, "none")
    assert np.allclose(diagonalize(assemble_lattice_hamiltonian(b)).values, [-0.5, 0.5])


@pytest.mark.parametrize("n_ex", [0, 1, 2])
def test_sector_union(n_ex):
    p = LatticeParams(2, 1, lam=1.0, J=0.7)
    full = diagonalize(assemble_lattice_hamiltonian(build_sector_basis(p, n_ex, "none"))).values
    parts = []
    for par in ("symmetric", "antisymmetric"):
        b = build_sector_basis(p, n_ex, par)
        if b.dim:
            parts.append(diagonalize(assemble_lattice_hamiltonian(b)).values)
    assert np.allclose(full, np.sort(np.concatenate(parts)), atol=1e-10)


def test_residual_check_and_trace():
    b = build_sector_basis(LatticeParams(3, 1, J=0.4), 3, "symmetric")
    H = assemble_lattice_hamiltonian(b)
    spec = diagonalize(H, check_residuals=True)
    assert spec.values.sum() == pytest.approx(H.trace(), rel=1e-10, abs=1e-10)
    assert np.allclose(spec.values, sector_spectrum(3, 1, 3, 1.0, 0.4, "symmetric"), atol=1e-10)
    assert spec.provenance["dim"] == b.dim


def test_trim_examples():
    s = Spectrum(np.arange(100.0))
    t = trim_spectrum(s, 0.1, 0.5)
    # both fractions refer to the original N: 10 dropped below, 50 above
    assert len(t) == 40 and t.values[0] == 10 and t.values[-1] == 49
    assert np.array_equal(trim_spectrum(s, 0, 0).values, s.values)
    assert len(trim_spectrum(Spectrum(np.arange(10.0)), 0.05, 0)) == 10
    assert t.provenance["trims"] == [{"n_in": 100, "drop_low": 10, "drop_high": 50}]
    with pytest.raises(ValueError):
        trim_spectrum(s, 0.5, 0.5)


@given(st.integers(3, 300), st.floats(0, 0.45), st.floats(0, 0.45))
def test_trim_counts(n, lo, hi):
    t = trim_spectrum(Spectrum(np.arange(float(n))), lo, hi)
    assert len(t) == n - int(np.floor(lo * n)) - int(np.floor(hi * n))


def test_spectrum_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        Spectrum(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        Spectrum(np.array([1.0, np.nan]))
    s = Spectrum(np.array([-1.0 / 3, 0.1, np.pi]), {"model": "x"})
    s.to_csv(tmp_path / "s.csv")
    s2 = Spectrum.from_csv(tmp_path / "s.csv")
    assert np.array_equal(s.values, s2.values)
    assert s2.provenance["model"] == "x"
