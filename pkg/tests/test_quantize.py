import numpy as np
import pytest

from moyalkit import families as fam
from moyalkit.errors import SpecMismatch, ValidationError
from moyalkit.gaussian import ground_state_wigner
from moyalkit.gridfn import GridSpec, sample
from moyalkit.quantize import (
    apply_op,
    hermite_basis,
    op_matrix,
    transform_symbol,
    weyl_kernel,
    wigner,
)
from moyalkit.starprod import StarConfig, star_S

SPEC = GridSpec.make(2, 128, 12.0)
LINE = GridSpec.make(1, 128, 12.0)
K = 16


def ladder(K, hbar=1.0):
    """Position and momentum matrices on the oscillator basis."""
    s = np.sqrt(np.arange(1, K))
    a = np.diag(s, 1)
    Q = np.sqrt(hbar / 2) * (a + a.T)
    P = 1j * np.sqrt(hbar / 2) * (a.T - a)
    return Q, P


def poly(coeffs):
    return sample(fam.polynomial(coeffs), SPEC)


@pytest.mark.parametrize("hb", [0.5, 1.0])
def test_oscillator_spectrum(hb):
    M = op_matrix(sample(fam.oscillator_symbol(), SPEC), StarConfig(hb), K)
    assert np.max(np.abs(M.block(11) - np.diag(hb * (np.arange(11) + 0.5)))) <= 1e-4


def test_constant_symbol_is_identity():
    M = op_matrix(sample(fam.constant(1.0, 2), SPEC), StarConfig(1.0), K)
    assert np.max(np.abs(M.entries - np.eye(K))) <= 1e-10


def test_position_and_momentum():
    Q, P = ladder(K)
    Mq = op_matrix(poly({(1, 0): 1}), StarConfig(1.0), K)
    Mp = op_matrix(poly({(0, 1): 1}), StarConfig(1.0), K)
    assert np.max(np.abs(Mq.entries - Q)) <= 1e-10
    assert np.max(np.abs(Mp.entries - P)) <= 1e-10


@pytest.mark.parametrize("s", [1.0, -1.0, 0.3])
def test_ordering_of_qp(s):
    # S = s [[0, 1], [1, 0]] interpolates between PQ (s = 1), QP (s = -1) and Weyl (s = 0)
    Q, P = ladder(K)
    target = 0.5 * (1 + s) * (P @ Q) + 0.5 * (1 - s) * (Q @ P)
    M = op_matrix(poly({(1, 1): 1}), StarConfig(1.0, [[0, s], [s, 0]]), K)
    # the last row of a truncated product is incomplete
    assert np.max(np.abs(M.block(K - 1) - target[: K - 1, : K - 1])) <= 1e-10


def test_homomorphism():
    S = np.array([[0.0, 0.3], [0.3, 0.0]])
    f = sample(fam.gaussian([0.2, -0.1], [[0.9, 0.2], [0.2, 0.7]]), SPEC)
    g = sample(fam.gaussian([-0.3, 0.2], [[1.1, -0.1], [-0.1, 0.8]]), SPEC)
    c = StarConfig(1.0, S)
    A, B = op_matrix(f, c, K), op_matrix(g, c, K)
    C = op_matrix(star_S(f, g, c), c, K)
    prod = (A @ B).block(8)
    scale = np.max(np.abs(A.block(8))) * np.max(np.abs(B.block(8)))
    assert np.max(np.abs(C.block(8) - prod)) <= 1e-4 * scale


def transformed_gaussian(c, P, S, hbar):
    """Closed form of F^-1[f^ exp(i hbar/4 zeta.S zeta)] for f = exp(-(x-c).P(x-c))."""
    M = np.linalg.inv(P) - 1j * hbar * S
    return fam.gaussian(c, np.linalg.inv(M), 1 / np.sqrt(np.linalg.det(P) * np.linalg.det(M)))


def test_transform_symbol_gaussian():
    S = np.array([[0.2, 0.3], [0.3, -0.1]])
    c, P = [0.2, -0.1], np.array([[0.9, 0.2], [0.2, 0.7]])
    T = transform_symbol(sample(fam.gaussian(c, P), SPEC), StarConfig(1.0, S))
    ref = transformed_gaussian(c, P, S, 1.0)(SPEC.points())
    assert np.max(np.abs(T.samples - ref)) <= 1e-10


def test_s_path_independence():
    # grid transform + band-limited kernel against closed form + quadrature kernel
    S = np.array([[0.0, 0.3], [0.3, 0.0]])
    c, P = [0.2, -0.1], np.array([[0.9, 0.2], [0.2, 0.7]])
    direct = op_matrix(sample(fam.gaussian(c, P), SPEC), StarConfig(1.0, S), K)
    via = op_matrix(sample(transformed_gaussian(c, P, S, 1.0), SPEC), StarConfig(1.0), K)
    assert np.max(np.abs(direct.entries - via.entries)) <= 1e-8


def test_transform_symbol_polynomial():
    # exp(-(i hbar/4) d.S d) (q p) = q p - i hbar s / 2
    f = poly({(1, 1): 1})
    T = transform_symbol(f, StarConfig(1.0, [[0, 0.4], [0.4, 0]]))
    z = SPEC.points()
    np.testing.assert_allclose(T.samples, z[..., 0] * z[..., 1] - 0.2j, atol=1e-12)


def test_real_symbol_is_hermitian():
    f = sample(fam.gaussian([0.5, 0.3], [[0.6, 0.1], [0.1, 1.4]]), SPEC)
    assert op_matrix(f, StarConfig(1.0), 24).hermiticity_defect() <= 1e-10
    sym = op_matrix(f, StarConfig(1.0), 24).spectrum()
    assert np.all(np.abs(sym.imag) < 1e-12)


def test_trace():
    g = fam.gaussian([0.3, -0.2], [[0.9, 0.2], [0.2, 0.7]])
    M = op_matrix(sample(g, SPEC), StarConfig(1.0), 32)
    exact = g.as_gaussian().integral() / (2 * np.pi)
    assert abs(np.trace(M.entries) - exact) <= 1e-8 * abs(exact)


def test_basis_bounds():
    with pytest.raises(ValidationError):
        hermite_basis(SPEC, 0, 1.0)
    with pytest.raises(ValidationError):
        hermite_basis(SPEC, 65, 1.0)
    psi = hermite_basis(SPEC, 8, 1.0)
    gram = psi.conj() @ psi.T * SPEC.h[0]
    assert np.max(np.abs(gram - np.eye(8))) <= 1e-12


def test_projector_action():
    proj = sample(fam.gaussian([0, 0], np.eye(2), 2.0), SPEC)
    h0, h1 = sample(fam.hermite(0, 1.0), LINE), sample(fam.hermite(1, 1.0), LINE)
    assert np.max(np.abs(apply_op(proj, h0).samples - h0.samples)) <= 1e-8
    assert np.max(np.abs(apply_op(proj, h1).samples)) <= 1e-8


def test_kernel_of_plain_samples_matches_closed_form():
    g = fam.gaussian([0.2, 0.1], [[1.0, 0.3], [0.3, 0.8]])
    a = weyl_kernel(sample(g, SPEC), 1.0)
    b = weyl_kernel(sample(g, SPEC).with_samples(g(SPEC.points())), 1.0)
    assert a.method == "closed_form" and b.method == "band_limited"
    assert np.max(np.abs(a.values - b.values)) <= 1e-8 * np.max(np.abs(a.values))


def test_kernel_rejects_bad_input():
    with pytest.raises(ValidationError):
        weyl_kernel(sample(fam.constant(1.0, 2), SPEC), 0.0)
    with pytest.raises(SpecMismatch):
        weyl_kernel(sample(fam.constant(1.0, 1), LINE), 1.0)


@pytest.mark.parametrize("hb", [0.5, 1.0])
def test_wigner_ground_state(hb):
    h0 = sample(fam.hermite(0, hb), LINE)
    W = wigner(h0, h0, hb, SPEC)
    assert np.max(np.abs(W.samples - ground_state_wigner(hb)(SPEC.points()))) <= 1e-8


def test_wigner_marginals_and_overlap():
    hb = 1.0
    psi = sample(fam.hermite(3, hb), LINE)
    phi = sample(fam.hermite(1, hb), LINE)
    W = wigner(psi, psi, hb, SPEC)
    assert W.integral().real == pytest.approx(1.0, abs=1e-10)
    # integrating out p leaves |psi(q)|^2
    marg = W.samples.sum(axis=1) * SPEC.h[1]
    np.testing.assert_allclose(marg.real, np.abs(psi.samples) ** 2, atol=1e-10)
    # ∫ W_psi W_phi = |<psi, phi>|^2 / (2 pi hbar)
    Wp = wigner(phi, phi, hb, SPEC)
    assert abs(np.sum(W.samples * Wp.samples) * SPEC.cell) <= 1e-10
    assert np.sum(W.samples**2).real * SPEC.cell == pytest.approx(1 / (2 * np.pi * hb), rel=1e-8)


def test_wigner_weyl_duality():
    # <psi, Op(f) psi> = ∫ f W_psi
    hb = 1.0
    g = fam.gaussian([0.4, -0.2], [[0.8, 0.1], [0.1, 1.2]])
    f = sample(g, SPEC)
    psi = sample(fam.hermite(2, hb), LINE)
    lhs = np.vdot(psi.samples, apply_op(f, psi).samples) * LINE.h[0]
    rhs = np.sum(f.samples * wigner(psi, psi, hb, SPEC).samples) * SPEC.cell
    assert abs(lhs - rhs) <= 1e-9


def test_wigner_grid_checks():
    psi = sample(fam.hermite(0, 1.0), LINE)
    with pytest.raises(SpecMismatch):
        wigner(psi, sample(fam.hermite(0, 1.0), GridSpec.make(1, 64, 12.0)))
    with pytest.raises(ValidationError):
        wigner(psi, psi, 0.0)
