import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elastic_ep import fock as fk
from elastic_ep.errors import DimensionMismatch, GridTooCoarse, TruncationTooSmall, ZeroMeanField

from _oracles import expm_taylor, ladder


# -- constructors ----------------------------------------------------------------

def test_vacuum_and_fock():
    vac = fk.coherent(0)
    assert vac.amplitudes[0] == 1 and np.all(vac.amplitudes[1:] == 0)
    f = fk.fock_state(6)
    assert f.photon_distribution()[6] == 1.0
    with pytest.raises(TruncationTooSmall):
        fk.fock_state(6, dim=6)


def test_coherent_mean_photon_number():
    s = fk.coherent(5.0, dim=60)
    assert s.dim >= 60
    assert s.mean_photon_number() == pytest.approx(25.0, rel=1e-6)


def test_coherent_amplitudes_extended_precision():
    getcontext().prec = 50
    alpha = Decimal(2)
    s = fk.coherent(2.0, dim=40)
    pref = (-(alpha**2) / 2).exp()
    fact = Decimal(1)
    for n in range(40):
        if n:
            fact *= n
        exact = pref * alpha**n / fact.sqrt()
        assert abs(s.amplitudes[n] - float(exact)) < 1e-12


def test_pinned_dimension_audit():
    with pytest.raises(TruncationTooSmall):
        fk.coherent(5.0, dim=30, pin=True)
    assert fk.coherent(5.0, dim=30).dim >= fk.coherent_dim(5.0)


def test_squeezed_vacuum_mean():
    s = fk.squeezed_vacuum(1.0)
    assert s.mean_photon_number() == pytest.approx(math.sinh(1.0) ** 2, abs=1e-4)
    assert s.photon_distribution()[1::2].max() < 1e-20  # only even levels


def test_displacement_of_vacuum_is_coherent():
    alpha = 1.3 - 0.7j
    c = fk.coherent(alpha)
    D = fk.displacement_op(alpha, c.dim)
    s = fk.apply(D, fk.QuantumState(np.eye(c.dim)[0], "vac"))
    assert fk.fidelity(s, c) >= 1 - 1e-9


def test_squeeze_zero_is_identity():
    assert np.allclose(fk.squeeze_op(0, 10).matrix, np.eye(10), atol=0)


def test_operator_tail_audit():
    with pytest.raises(TruncationTooSmall):
        fk.displacement_op(4.0, 12)
    with pytest.raises(TruncationTooSmall):
        fk.displaced_squeezed(5.0, 1.0, dim=40, pin=True)


def test_cat_normalization_and_parity():
    for theta in (0.0, math.pi, 0.7):
        c = fk.cat(2.0, theta)
        assert np.linalg.norm(c.amplitudes) == pytest.approx(1.0, abs=1e-12)
    odd = fk.cat(2.0, math.pi)
    assert odd.photon_distribution()[0::2].max() < 1e-28
    with pytest.raises(ValueError):
        fk.cat(0.0, math.pi)


def test_state_norm_validated():
    with pytest.raises(ValueError):
        fk.QuantumState(np.array([1.0, 1.0]), "bad")


# -- elastic phase operator ------------------------------------------------------------

def test_phase_op_identity_and_fock_global_phase():
    assert np.array_equal(fk.elastic_phase_op(0.0, 1, 8).matrix, np.eye(8))
    f = fk.fock_state(6)
    out = fk.apply(fk.elastic_phase_op(0.2, 3, f.dim), f)
    assert out.amplitudes[6] == pytest.approx(np.exp(-1j * 0.2 * 3 * 6), abs=1e-15)
    assert fk.fidelity(out, f) == pytest.approx(1.0, abs=1e-15)


def test_phase_op_rotates_coherent():
    alpha, gN = 5.0, 0.4
    c = fk.coherent(alpha)
    out = fk.apply(fk.elastic_phase_op(gN, 1, c.dim), c)
    ref = fk.coherent(alpha * np.exp(-1j * gN), c.dim, pin=True)
    assert fk.fidelity(out, ref) >= 1 - 1e-8


def test_phase_op_rotates_squeezing():
    zeta, g = 0.8, 0.35
    s = fk.squeezed_vacuum(zeta)
    out = fk.apply(fk.elastic_phase_op(g, 1, s.dim), s)
    ref = fk.squeezed_vacuum(zeta * np.exp(-2j * g), s.dim, pin=True)
    assert fk.fidelity(out, ref) >= 1 - 1e-8


def test_apply_dimension_mismatch_and_inverse():
    c = fk.coherent(1.0)
    with pytest.raises(DimensionMismatch):
        fk.apply(fk.elastic_phase_op(0.1, 1, c.dim + 1), c)
    back = fk.apply(fk.elastic_phase_op(-0.37, 1, c.dim), fk.apply(fk.elastic_phase_op(0.37, 1, c.dim), c))
    assert np.max(np.abs(back.amplitudes - c.amplitudes)) < 1e-12
    ident = fk.FockOperator(np.eye(c.dim, dtype=complex), "I")
    assert np.array_equal(fk.apply(ident, c).amplitudes, c.amplitudes)


@settings(max_examples=40, deadline=None)
@given(g=st.floats(-10, 10), n=st.integers(0, 50), dim=st.integers(2, 64))
def test_phase_op_unitary_and_commutes(g, n, dim):
    U = fk.elastic_phase_op(g, n, dim).matrix
    assert np.max(np.abs(U.conj().T @ U - np.eye(dim))) < 1e-14
    N = fk.number_operator(dim)
    assert np.max(np.abs(U @ N - N @ U)) < 1e-14


@settings(max_examples=40, deadline=None)
@given(g=st.floats(-3, 3), a=st.integers(0, 20), b=st.integers(0, 20))
def test_phase_op_composes(g, a, b):
    d = 16
    lhs = fk.elastic_phase_op(g, a, d) @ fk.elastic_phase_op(g, b, d)
    assert np.max(np.abs(lhs.matrix - fk.elastic_phase_op(g, a + b, d).matrix)) < 1e-12


def test_sequential_single_electrons_accumulate():
    g, n = 1.8e-7, 1000
    c = fk.coherent(3.0)
    seq = c
    op = fk.elastic_phase_op(g, 1, c.dim)
    for _ in range(n):
        seq = fk.apply(op, seq)
    once = fk.apply(fk.elastic_phase_op(g, n, c.dim), c)
    assert np.max(np.abs(seq.amplitudes - once.amplitudes)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-2, 2), g=st.floats(-4, 4))
def test_photon_statistics_invariant(re, im, g):
    s = fk.coherent(complex(re, im))
    out = fk.apply(fk.elastic_phase_op(g, 1, s.dim), s)
    assert np.max(np.abs(out.photon_distribution() - s.photon_distribution())) < 1e-14


def test_bch_conjugation_identities():
    d, g = 12, 0.47
    a = ladder(d)
    U = fk.elastic_phase_op(g, 1, d).matrix  # exp(-i g n)
    Ui = U.conj().T
    blk = slice(0, d - 2)
    lhs = (U @ a @ Ui)[blk, blk]
    assert np.max(np.abs(lhs - (np.exp(1j * g) * a)[blk, blk])) < 1e-9
    ad2 = a.conj().T @ a.conj().T
    lhs2 = (U @ ad2 @ Ui)[blk, blk]
    assert np.max(np.abs(lhs2 - (np.exp(-2j * g) * ad2)[blk, blk])) < 1e-9


def test_operators_match_taylor_oracle():
    d = 12
    a = ladder(d)
    ad = a.conj().T
    alpha, zeta, g = 0.4 - 0.2j, 0.15 + 0.1j, 0.8
    D = fk.displacement_op(alpha, d).matrix
    assert np.max(np.abs(D - expm_taylor(alpha * ad - np.conj(alpha) * a))) < 1e-12
    S = fk.squeeze_op(zeta, d).matrix
    assert np.max(np.abs(S - expm_taylor(0.5 * (np.conj(zeta) * a @ a - zeta * ad @ ad)))) < 1e-12
    P = fk.elastic_phase_op(g, 1, d).matrix
    assert np.max(np.abs(P - expm_taylor(-1j * g * np.diag(np.arange(d))))) < 1e-12


def test_truncated_operators_unitary_on_low_block():
    d = 40
    for op in (fk.displacement_op(1.5, d), fk.squeeze_op(0.5, d)):
        U = op.matrix
        assert np.max(np.abs((U.conj().T @ U - np.eye(d))[: d - 10, : d - 10])) < 1e-9


# -- transforms ------------------------------------------------------------------

def test_transform_displaced_squeezed():
    s0 = fk.displaced_squeezed(5.0, 1.0)
    same = fk.transform_displaced_squeezed(5.0, 1.0, 0.0, 1, s0.dim)
    assert fk.fidelity(same, s0) == pytest.approx(1.0, abs=1e-14)
    rot = fk.transform_displaced_squeezed(5.0, 1.0, 0.3, 1)
    direct = fk.apply(fk.elastic_phase_op(0.3, 1, s0.dim), s0)
    assert fk.fidelity(rot, direct) >= 1 - 1e-8
    vac = fk.transform_displaced_squeezed(0.0, 0.6, 0.2, 1)
    ref = fk.squeezed_vacuum(0.6 * np.exp(-0.4j), vac.dim, pin=True)
    assert fk.fidelity(vac, ref) >= 1 - 1e-10


def test_transform_cat():
    c0 = fk.cat(2.0, 0.0)
    assert fk.fidelity(fk.transform_cat(2.0, 0.0, 0.0, 1), c0) == pytest.approx(1.0, abs=1e-12)
    rot = fk.transform_cat(2.0, 0.0, 0.5, 1)
    direct = fk.apply(fk.elastic_phase_op(0.5, 1, c0.dim), c0)
    assert fk.fidelity(rot, direct) >= 1 - 1e-8
    odd = fk.transform_cat(2.0, math.pi, 0.5, 1)
    assert odd.photon_distribution()[0::2].max() < 1e-28


def test_transform_noon():
    same = fk.transform_noon(0, 0.3, 1)
    assert np.array_equal(np.abs(same.amplitudes), np.abs(fk.noon(0).amplitudes))
    s = fk.transform_noon(6, math.pi / 6, 1)
    assert fk.noon_relative_phase(s, 6) == pytest.approx(math.pi, abs=1e-12)
    # orthogonal to the unshifted N00N state
    assert abs(np.vdot(fk.noon(6).amplitudes, s.amplitudes)) < 1e-15
    p3 = fk.noon_relative_phase(fk.transform_noon(3, 0.1, 1), 3)
    p6 = fk.noon_relative_phase(fk.transform_noon(6, 0.1, 1), 6)
    assert p6 == pytest.approx(2 * p3, abs=1e-12)


def test_expectation_field_phase():
    c = fk.coherent(5.0)
    assert fk.expectation_field_phase(c, 0.0, 1) == 0.0
    assert fk.expectation_field_phase(c, 0.2, 1) == pytest.approx(-0.2, abs=1e-9)
    with pytest.raises(ZeroMeanField):
        fk.expectation_field_phase(fk.cat(2.0, 0.0), 0.2, 1)
    with pytest.raises(ZeroMeanField):
        fk.expectation_field_phase(fk.fock_state(3), 0.2, 1)


def test_classical_limit_phase():
    z = fk.classical_limit_electron_phase(3.0, 0.0)
    assert z.exact_overlap == 1 and z.approx_phase == 0
    n, g = 1e6, 1.8e-7
    r = fk.classical_limit_electron_phase(math.sqrt(n), g)
    assert r.approx_phase == pytest.approx(-0.18, rel=1e-12)
    expected = np.exp(n * (np.exp(-1j * g) - 1))
    assert r.exact_overlap == pytest.approx(expected, rel=1e-9)
    assert abs(r.exact_overlap) == pytest.approx(1 - n * g * g / 2, abs=1e-12)
    assert abs(r.exact_phase - r.approx_phase) <= n * g * g / 2 + 1e-12
    r2 = fk.classical_limit_electron_phase(math.sqrt(2 * n), g)
    assert r2.approx_phase == pytest.approx(2 * r.approx_phase, rel=1e-14)


# -- Wigner ---------------------------------------------------------------------

def test_vacuum_wigner():
    x = np.linspace(-5, 5, 101)
    w = fk.wigner(fk.coherent(0), x)
    assert w.W[50, 50] * math.pi == pytest.approx(1.0, abs=1e-3)
    assert w.normalization() == pytest.approx(1.0, abs=1e-3)


def test_wigner_orientation():
    w = fk.wigner(fk.coherent(2j), np.linspace(-6, 6, 121))
    j, i = np.unravel_index(np.argmax(w.W), w.W.shape)
    assert w.x[i] == pytest.approx(0.0, abs=0.11)
    assert w.p[j] == pytest.approx(2 * math.sqrt(2), abs=0.11)


def test_fock_wigner_symmetric_and_phase_invariant():
    f = fk.fock_state(6)
    axis = fk.default_wigner_axis(f.dim)
    w0 = fk.wigner(f, axis)
    assert np.allclose(w0.W, w0.W.T, atol=1e-12)
    assert np.allclose(w0.W, w0.W[::-1, :], atol=1e-12)
    w1 = fk.wigner(fk.apply(fk.elastic_phase_op(0.7, 1, f.dim), f), axis)
    assert np.max(np.abs(w1.W - w0.W)) < 1e-12
    assert w0.normalization() == pytest.approx(1.0, abs=1e-3)


def test_squeezed_wigner_rotation():
    s = fk.squeezed_vacuum(0.5)
    axis = np.linspace(-5, 5, 201)
    g = 0.25
    before = fk.wigner(s, axis)
    after = fk.wigner(fk.apply(fk.elastic_phase_op(g, 1, s.dim), s), axis)
    assert np.max(np.abs(after.W - fk.rotate_wigner(before, g))) < 1e-3


def test_wigner_grid_checks(tmp_path):
    with pytest.raises(GridTooCoarse):
        fk.wigner(fk.coherent(1.0), np.linspace(-5, 5, 11))
    assert np.diff(fk.default_wigner_axis(400, 11)).max() <= fk.WIGNER_MAX_STEP
    w = fk.wigner(fk.coherent(1.0), np.linspace(-3, 3, 31))
    fk.write_wigner_csv(tmp_path / "w.csv", w)
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0].startswith("p\\x,")
    assert len(lines) == 32 and len(lines[1].split(",")) == 32
    fk.write_state_csv(tmp_path / "s.csv", fk.coherent(1.0))
    assert (tmp_path / "s.csv").read_text().startswith("n,re,im\n")
