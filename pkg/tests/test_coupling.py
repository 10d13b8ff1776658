import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopsurf.coupling import (
    FROM_BARE,
    FROM_SHIFTED,
    AtomArray,
    build_matrices,
    casimir_shift_and_rate,
    evolution_matrix,
    extract_c3,
    mode_spectrum,
)
from coopsurf.dielectric import SAPPHIRE, VACUUM, ConstantPermittivity
from coopsurf.errors import DomainError, ModelMismatchError
from coopsurf.green_surface import REDUCED_SCALE

SAPH = (SAPPHIRE, 12.15)


def test_single_atom_vacuum():
    m = build_matrices(AtomArray(1))
    assert m.V.tolist() == [[0.0]] and m.Gamma.tolist() == [[1.0]]


def test_single_atom_sapphire_kh1():
    m = build_matrices(AtomArray(1, kh=1.0), SAPH, scale=REDUCED_SCALE)
    # reference (1, 1.074); shift of the level is -V
    assert -m.V[0, 0] == pytest.approx(1.0, rel=0.1)
    assert m.Gamma[0, 0] == pytest.approx(1.074, rel=0.05)


def test_pair_at_pi():
    m = build_matrices(AtomArray(2, kd=np.pi))
    assert m.Gamma[0, 1] == pytest.approx(-3 / (2 * np.pi**2))


def test_casimir_vacuum_is_zero():
    assert casimir_shift_and_rate((VACUUM, 1.0), 0.5) == (0.0, 0.0)


def test_casimir_kh_2p5():
    d, gz = casimir_shift_and_rate(SAPH, 2.5, scale=REDUCED_SCALE)
    assert d == pytest.approx(-0.06, abs=0.05)
    assert gz == pytest.approx(-0.1, abs=0.05)


def test_c3_vacuum_and_sapphire():
    assert extract_c3((VACUUM, 12.15)).c3 == 0.0
    fit = extract_c3(SAPH)
    assert abs(fit.c3) == pytest.approx(113.39, rel=0.02)
    assert fit.residual < 1e-3


def test_c3_quasi_static_oracle():
    # closed form: δ = -(3/4)Re(S/4)/kh³ Γ, so C3 = (3/16) Re S Γ/k³
    eps = -0.95 + 0.11j
    S = (eps - 1) / (eps + 1)
    k = 2 * np.pi / 12.15
    c3 = 3 / 16 * S.real * 14.32 / k**3
    assert extract_c3(SAPH).c3 == pytest.approx(c3, rel=2e-3)


def test_c3_scan_domain_and_mismatch():
    with pytest.raises(DomainError):
        extract_c3(SAPH, heights_um=[1.0])
    # retardation makes the top of the near-field window deviate from 1/h³
    h = np.array([0.005, 0.02, 0.049]) * 12.15 / (2 * np.pi)
    with pytest.raises(ModelMismatchError):
        extract_c3(SAPH, heights_um=h, max_residual=1e-6)


def test_evolution_matrix_conventions():
    m = build_matrices(AtomArray(1))
    assert evolution_matrix(m, 0.0).M.tolist() == [[-0.5 + 0j]]
    ms = build_matrices(AtomArray(1, kh=0.25), SAPH, scale=REDUCED_SCALE)
    M = evolution_matrix(ms, 10.0, FROM_SHIFTED).M
    assert M[0, 0].imag == 10.0
    assert M[0, 0].real == pytest.approx(-176 / 2, rel=0.01)
    Mb = evolution_matrix(ms, 10.0, FROM_BARE).M
    assert Mb[0, 0].imag == pytest.approx(10.0 + ms.V[0, 0])
    with pytest.raises(ValueError):
        evolution_matrix(ms, 0.0, "other")


def test_off_diagonals_from_assembly():
    m = build_matrices(AtomArray(2, kd=1.3))
    M = evolution_matrix(m, 3.0).M
    assert M[0, 1] == 1j * m.V[0, 1] - 0.5 * m.Gamma[0, 1]


def test_two_atom_dark_and_bright():
    # V12 ~ 1/κ³ limits the eigenvalue precision, so κ is not taken smaller
    m = build_matrices(AtomArray(2, kd=1e-3, d_hat=(1, 0, 0)))
    rates = np.sort(-2 * mode_spectrum(evolution_matrix(m)).real)
    assert rates == pytest.approx([0.0, 2.0], abs=1e-5)


def _surface_excess(kh):
    a = AtomArray(4, kd=1.0, kh=kh)
    s = build_matrices(a, SAPH)
    f = build_matrices(a)
    return max(np.max(np.abs(s.V - f.V)), np.max(np.abs(s.Gamma - f.Gamma)))


def test_large_height_recovers_free_space():
    # the reflected field decays slowly; the 1e-3 level is reached near kh ~ 40
    e = [_surface_excess(kh) for kh in (6.0, 12.0, 24.0, 48.0)]
    assert e[-1] < 1e-3
    assert all(a > b for a, b in zip(e, e[1:]))


def test_array_validation():
    with pytest.raises(DomainError):
        AtomArray(0)
    with pytest.raises(DomainError):
        AtomArray(3, kd=0.0)
    with pytest.raises(DomainError):
        AtomArray(1, kh=0.0)


def test_json_export():
    m = build_matrices(AtomArray(2, kd=1.0, kh=1.0), SAPH)
    j = m.to_json()
    assert j["n"] == 2 and len(j["V_surface"]) == 2
    e = evolution_matrix(m, 1.0).to_json()
    assert np.allclose(np.array(e["re"]) + 1j * np.array(e["im"]), evolution_matrix(m, 1.0).M)


scenarios = st.tuples(st.integers(1, 10), st.floats(0.3, 10), st.floats(0.1, 5),
                      st.sampled_from([(0, 0, 1), (1, 0, 0), (0, 1, 0), (1, 1, 1)]))


@settings(max_examples=12, deadline=None)
@given(scenarios)
def test_matrix_invariants(sc):
    n, kd, kh, d = sc
    m = build_matrices(AtomArray(n, kd, kh, d), SAPH)
    assert np.array_equal(m.V, m.V.T) and np.array_equal(m.Gamma, m.Gamma.T)
    assert np.linalg.eigvalsh(m.Gamma_free).min() >= -1e-9
    assert np.allclose(np.diag(m.Gamma_free), 1.0)
    assert np.allclose(np.diag(m.Gamma), m.Gamma[0, 0])
    # Toeplitz structure
    for k in range(n):
        assert np.allclose(np.diagonal(m.V, k), m.V[0, k])
    M = evolution_matrix(m, 2.0)
    rates = -2 * mode_spectrum(M).real
    assert rates.sum() == pytest.approx(np.trace(m.Gamma), rel=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 50), st.floats(0, 10))
def test_constant_medium_passive_rate(re, im):
    # a passive surface never drives the single-atom total rate negative
    m = build_matrices(AtomArray(1, kh=0.3), (ConstantPermittivity(complex(re, im)), 1.0))
    assert m.Gamma[0, 0] >= -1e-9
