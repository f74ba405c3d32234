import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moyalkit import families as fam
from moyalkit.errors import BoundaryLeak, OrderTooHigh, SpecMismatch, UnsupportedFamily, ValidationError
from moyalkit.gridfn import (
    GridFunction,
    GridSpec,
    derivative,
    e_norm,
    fit_class_constants,
    fourier,
    fourier_at,
    gs_norm,
    s_norm,
    sample,
)
from moyalkit.sequences import make_sequence

A_HALF = make_sequence("gevrey", 0.5, 1024)


def grid1(N=128, L=12.0):
    return GridSpec.make(1, N, L)


def test_gridspec_validation():
    with pytest.raises(ValidationError):
        GridSpec.make(1, 100, 10.0)
    with pytest.raises(ValidationError):
        GridSpec.make(1, 1024, 10.0)
    with pytest.raises(ValidationError):
        GridSpec.make(3, 32, 10.0)
    with pytest.raises(ValidationError):
        GridSpec.make(1, 64, -1.0)


def test_grid_points_centered():
    spec = GridSpec.make(1, 64, 8.0)
    x = spec.axis(0)
    assert x[0] == -8.0
    assert x[32] == 0.0
    assert x[1] - x[0] == pytest.approx(0.25)


def test_sample_gaussian():
    spec = GridSpec.make(1, 64, 8.0)
    f = sample(fam.gaussian([0.0], [[1.0]]), spec)
    np.testing.assert_allclose(f.samples, np.exp(-spec.axis(0) ** 2), rtol=1e-15)


def test_hermite_normalization():
    spec = grid1()
    for k in (0, 3, 10):
        f = sample(fam.hermite(k, 1.0), spec)
        assert f.l2_norm() == pytest.approx(1.0, abs=1e-8)
    h0 = sample(fam.hermite(0, 1.0), spec)
    np.testing.assert_allclose(h0.samples, np.pi**-0.25 * np.exp(-spec.axis(0) ** 2 / 2), rtol=1e-14)


def test_hermite_orthogonality():
    spec = grid1()
    a, b = sample(fam.hermite(2, 0.5), spec), sample(fam.hermite(5, 0.5), spec)
    assert abs(a.inner(b)) < 1e-12


def test_chirp_sampling():
    spec = GridSpec.make(2, 64, 6.0)
    hbar = 0.5
    f = sample(fam.chirp(np.array([[0, 1], [1, 0]]) / hbar), spec)
    pts = spec.points()
    np.testing.assert_allclose(f.samples, np.exp(2j / hbar * pts[..., 0] * pts[..., 1]), rtol=1e-13)


def test_unsupported_family():
    with pytest.raises(UnsupportedFamily):
        sample({"family": "bessel"}, grid1())


def test_dimension_mismatch():
    with pytest.raises(SpecMismatch):
        sample(fam.gaussian([0.0, 0.0], np.eye(2)), grid1())


def test_fourier_gaussian_self_dual():
    spec = grid1(128, 12.0)
    f = sample(fam.gaussian([0.0], [[0.5]]), spec)
    F = fourier(f)
    zeta = F.spec.axis(0)
    err = np.max(np.abs(F.samples - np.exp(-zeta**2 / 2)))
    assert err <= 1e-8
    assert F.spec.L[0] == pytest.approx(np.pi * 128 / 24)


def test_fourier_shifted_gaussian():
    # transform of exp(-(x - c)^2) is exp(-zeta^2/4 - i c zeta) / sqrt(2)
    spec = grid1(128, 12.0)
    c = 1.3
    F = fourier(sample(fam.gaussian([c], [[1.0]]), spec))
    z = F.spec.axis(0)
    np.testing.assert_allclose(F.samples, np.exp(-z**2 / 4 - 1j * c * z) / np.sqrt(2), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(0.5, 2.0), st.floats(-2, 2))
def test_fourier_round_trip(c, w, phase):
    spec = GridSpec.make(2, 128, 10.0)
    f = sample(fam.gaussian([c, -c / 2], [[w, 0.1], [0.1, 1.0]], np.exp(1j * phase)), spec)
    back = fourier(fourier(f), "inverse")
    assert np.max(np.abs(back.samples - f.samples)) <= 1e-10 * f.sup()


def test_parseval():
    spec = GridSpec.make(2, 64, 10.0)
    f = sample(fam.gaussian([0.5, -1.0], [[0.7, 0.2], [0.2, 1.1]]), spec)
    assert fourier(f).l2_norm() == pytest.approx(f.l2_norm(), rel=1e-8)


@pytest.mark.parametrize("k", [0, 1, 2, 5])
def test_hermite_eigenfunctions(k):
    spec = grid1(128, 12.0)
    F = fourier(sample(fam.hermite(k, 1.0), spec))
    # the dual grid differs from the space grid, so compare with the closed form there
    ref = (-1j) ** k * fam.hermite(k, 1.0)(F.spec.axis(0))
    np.testing.assert_allclose(F.samples, ref, atol=1e-10)


def test_fourier_requires_decay():
    f = sample(fam.chirp([[1.0]]), grid1())
    with pytest.raises(BoundaryLeak) as err:
        fourier(f)
    assert err.value.quantity > err.value.threshold


def test_fourier_at_matches_closed_form_inside_band():
    spec = grid1(64, 10.0)
    f = sample(fam.gaussian([0.0], [[1.0]]), spec)
    z = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(fourier_at(f, [z]), np.exp(-z**2 / 4) / np.sqrt(2), atol=1e-13)
    # beyond the band the interpolant has no content
    assert fourier_at(f, [np.array([100.0])])[0] == 0


def test_derivative_gaussian():
    spec = grid1(128, 10.0)
    x = spec.axis(0)
    d = derivative(sample(fam.gaussian([0.0], [[1.0]]), spec), (1,))
    assert np.max(np.abs(d.samples + 2 * x * np.exp(-x**2))) <= 1e-7


def test_derivative_identity_order_zero():
    spec = grid1()
    f = sample(fam.gaussian([0.3], [[1.0]]), spec)
    np.testing.assert_array_equal(derivative(f, (0,)).samples, f.samples)


def test_second_derivative_hermite():
    spec = grid1(128, 12.0)
    q = spec.axis(0)
    h0 = sample(fam.hermite(0, 1.0), spec)
    d2 = derivative(h0, (2,))
    np.testing.assert_allclose(d2.samples, (q**2 - 1) * h0.samples, atol=1e-10)


def test_mixed_derivative_2d():
    spec = GridSpec.make(2, 64, 8.0)
    g = fam.gaussian([0.2, -0.1], [[1.0, 0.3], [0.3, 0.8]])
    d = derivative(sample(g, spec), (1, 2))
    ref = g.derivative((1, 2))(spec.points())
    np.testing.assert_allclose(d.samples, ref, atol=1e-9)


def test_derivative_order_cap():
    f = sample(fam.gaussian([0.0], [[1.0]]), grid1())
    with pytest.raises(OrderTooHigh):
        derivative(f, (9,))


def test_derivative_needs_decay():
    f = sample(fam.chirp([[1.0]]), grid1())
    with pytest.raises(BoundaryLeak):
        derivative(f, (1,))
    x = f.spec.axis(0)
    exact = derivative(f, (1,), exact_source=True)
    np.testing.assert_allclose(exact.samples, 2j * x * np.exp(1j * x**2), rtol=1e-13)


def test_derivative_commutes_with_cell_shift():
    spec = grid1(128, 12.0)
    g = sample(fam.gaussian([0.0], [[1.0]]), spec)
    shifted = g.with_samples(np.roll(g.samples, 5))
    lhs = derivative(shifted, (1,)).samples
    rhs = np.roll(derivative(g, (1,)).samples, 5)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_gs_norm_zero():
    f = GridFunction(grid1(), np.zeros(128))
    assert gs_norm(f, A_HALF, A_HALF, 4.0, 4.0, 4).value == 0.0


def test_gs_norm_monotone():
    f = sample(fam.gaussian([0.0], [[1.0]]), grid1())
    base = gs_norm(f, A_HALF, A_HALF, 4.0, 4.0, 4)
    assert np.isfinite(base.value)
    assert gs_norm(f, A_HALF, A_HALF, 8.0, 4.0, 4).value <= base.value
    assert gs_norm(f, A_HALF, A_HALF, 4.0, 8.0, 4).value <= base.value
    assert gs_norm(f, A_HALF, A_HALF, 4.0, 4.0, 6).value >= base.value
    assert base.truncation["estimator"].startswith("lower bound")


def test_gs_norm_beats_multi_index_form():
    # sup_alpha |x|^k / (A^k a_k) = w_a(|x|/A) in 1-D, so the truncated
    # multi-index form can never exceed the weighted form
    f = sample(fam.gaussian([0.0], [[1.0]]), grid1())
    gs = gs_norm(f, A_HALF, A_HALF, 2.0, 2.0, 3).value
    s = s_norm(f, A_HALF, A_HALF, 2.0, 2.0, 3).value
    assert s <= gs * (1 + 1e-12)


def test_gs_norm_constant_one_support():
    one = make_sequence("constant_one", None, 64)
    f = sample(fam.gaussian([0.0], [[1.0]]), grid1())
    assert gs_norm(f, one, A_HALF, 2.0, 4.0, 2).infinite
    compact = f.with_samples(np.where(np.abs(f.spec.axis(0)) <= 2.0, f.samples, 0.0))
    assert not gs_norm(compact, one, A_HALF, 2.0, 4.0, 0).infinite


def test_e_norm_constant():
    h = sample(fam.constant(1.0, 1), grid1())
    a1 = make_sequence("gevrey", 1.0, 64)
    for A, B in ((0.5, 1.0), (2.0, 3.0)):
        assert e_norm(h, a1, a1, A, B, 0).value == pytest.approx(1.0)


def test_e_norm_polynomial_monotone():
    # the weight sits in the denominator, so a larger A gives a larger norm
    a1 = make_sequence("gevrey", 1.0, 64)
    h = sample(fam.polynomial([0, 0, 1]), grid1())
    vals = [e_norm(h, a1, a1, A, 1.0, 2).value for A in (0.5, 1.0, 2.0, 4.0)]
    assert all(np.isfinite(vals))
    assert vals[0] <= vals[1] <= vals[2] <= vals[3]
    assert vals[0] < vals[3]
    byB = [e_norm(h, a1, a1, 1.0, B, 2).value for B in (0.5, 1.0, 2.0)]
    assert byB[0] >= byB[1] >= byB[2]


def test_e_norm_constant_one_restricts_support():
    one = make_sequence("constant_one", None, 64)
    a1 = make_sequence("gevrey", 1.0, 64)
    h = sample(fam.polynomial([0, 0, 1]), grid1())
    assert e_norm(h, one, a1, 3.0, 1.0, 0).value == pytest.approx(9.0)


def test_e_norm_divergence_witness():
    # e^{x^2} outgrows w_a(|x|/A) ~ exp(x^2 / (2 e A^2)) when A is small
    vals = []
    for L in (2.0, 3.0, 4.0):
        h = sample(fam.PolyExp({(0,): 1.0}, [[-1.0]]), GridSpec.make(1, 64, L))
        vals.append(e_norm(h, A_HALF, A_HALF, 0.6, 1.0, 0).value)
    assert vals[0] < vals[1] < vals[2]


def test_fit_class_gaussian():
    f = sample(fam.gaussian([0.0], [[1.0]]), grid1())
    fit = fit_class_constants(f, A_HALF, A_HALF, 4, 10.0)
    assert fit.found and fit.value <= 10.0
    assert not fit.edge_attained


def test_fit_class_zero():
    f = GridFunction(grid1(), np.zeros(128))
    fit = fit_class_constants(f, A_HALF, A_HALF, 2, 1.0)
    assert fit.found
    assert (fit.A, fit.B) == (2.0**-6, 2.0**-6)


def test_fit_class_chirp_fails():
    f = sample(fam.chirp([[1.0]]), grid1())
    assert not fit_class_constants(f, A_HALF, A_HALF, 2, 10.0).found
