import numpy as np
import pytest

from moyalkit import families as fam
from moyalkit.errors import (
    IntegrandGrowth,
    NegativeValues,
    NotNormalized,
    OffLattice,
    OuterBoundaryLeak,
    UnsupportedFamily,
    ValidationError,
)
from moyalkit.gridfn import GridFunction, GridSpec, sample
from moyalkit.multipliers import (
    DualElement,
    approx_identity_errors,
    convolve_dual,
    extend_functional,
    make_approx_identity,
    multiplier_experiment,
    report_to_dict,
    resolved_grid_size,
    riemann_sequence,
    star_with_multiplier,
    twisted_translate,
)
from moyalkit.starprod import StarConfig, twisted_convolution

SPEC = GridSpec.make(2, 128, 12.0)
G = fam.gaussian([0.5, -0.3], [[1, 0.2], [0.2, 0.7]])


def rel(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def unit_gaussian(s, spec=SPEC):
    return sample(fam.gaussian([0, 0], np.eye(2) / s**2, 1 / (np.pi * s**2)), spec)


def test_approx_identity_scaling():
    e1 = unit_gaussian(2.0)
    ai = make_approx_identity(e1, 3)
    assert ai.e_n.integral().real == pytest.approx(1.0, abs=1e-12)
    # e_3(z) = 9 e_1(3 z): the peak grows by n^2
    assert ai.e_n.sup() == pytest.approx(9 * e1.sup(), rel=1e-6)
    assert ai.raw_mass == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("order", ["left", "right"])
def test_approx_identity_converges(order):
    e1, g = unit_gaussian(2.0), sample(G, SPEC)
    err = approx_identity_errors(e1, g, range(1, 33), 1.0, order)
    assert np.all(np.diff(err) < 0)
    assert err[-1] <= 1e-2 * g.sup()


def test_approx_identity_validation():
    with pytest.raises(NotNormalized):
        make_approx_identity(sample(fam.gaussian([0, 0], np.eye(2)), SPEC), 2)
    neg = unit_gaussian(1.0)
    neg = neg.with_samples(neg.samples - 0.1 * neg.sup())
    with pytest.raises(NegativeValues):
        make_approx_identity(neg, 2)
    with pytest.raises(ValidationError):
        make_approx_identity(unit_gaussian(1.0), 0)


def test_twisted_translate_closed_form():
    g = sample(G, SPEC)
    h = SPEC.h
    xi = np.array([3 * h[0], -2 * h[1]])
    out = twisted_translate(g, xi, 1.0)
    z = SPEC.points()
    # J xi = (xi_p, -xi_q), so xi.J z = xi_q z_p - xi_p z_q
    ref = np.exp(0.5j * (xi[0] * z[..., 1] - xi[1] * z[..., 0])) * G(z - xi)
    assert rel(out.samples, ref) <= 1e-12


def test_twisted_translate_inverse():
    g = sample(G, SPEC)
    xi = (4 * SPEC.h[0], 5 * SPEC.h[1])
    back = twisted_translate(twisted_translate(g, xi, 1.0), (-xi[0], -xi[1]), 1.0)
    assert rel(back.samples, g.samples) <= 1e-12


@pytest.mark.parametrize("k", [(3, 0), (0, -5), (2, 7), (-8, 2)])
def test_twisted_translation_commutes(k):
    v = sample(fam.gaussian([0.2, 0.1], [[0.8, 0], [0, 1.1]]), SPEC)
    g = sample(G, SPEC)
    xi = (k[0] * SPEC.h[0], k[1] * SPEC.h[1])
    lhs = twisted_convolution(v, twisted_translate(g, xi, 1.0), 1.0)
    rhs = twisted_translate(twisted_convolution(v, g, 1.0), xi, 1.0)
    assert rel(lhs.samples, rhs.samples) <= 1e-7


def test_off_lattice_shift():
    with pytest.raises(OffLattice):
        twisted_translate(sample(G, SPEC), (0.1, 0.0), 1.0)


def test_convolve_dual_polynomial():
    spec = GridSpec.make(1, 128, 10.0)
    u = DualElement.from_family(fam.polynomial([0, 0, 1]), spec)
    out = convolve_dual(u, sample(fam.gaussian([0.0], [[1.0]]), spec))
    x = spec.axis(0)
    # ∫ y^2 exp(-(x - y)^2) dy = sqrt(pi) (x^2 + 1/2), exact over the whole box
    np.testing.assert_allclose(out.samples, np.sqrt(np.pi) * (x**2 + 0.5), rtol=1e-10)


def test_convolve_dual_growth_guard():
    spec = GridSpec.make(1, 128, 10.0)
    u = DualElement.from_family(fam.gaussian([0.0], [[-0.5]]), spec)
    with pytest.raises(IntegrandGrowth):
        convolve_dual(u, sample(fam.gaussian([0.0], [[0.2]]), spec))


def test_pairing():
    u = DualElement.from_family(fam.constant(1.0, 2), SPEC)
    assert u.pair(sample(G, SPEC)) == pytest.approx(G.as_gaussian().integral(), rel=1e-12)


@pytest.mark.parametrize("s0", [1.0, 0.7])
def test_extension_polynomial(s0):
    u = DualElement.from_family(fam.polynomial({(0, 0): 1, (2, 0): 1, (0, 2): 1}), SPEC)
    h = sample(fam.gaussian([0.3, 0], np.eye(2)), SPEC)
    res = extend_functional(u, unit_gaussian(s0), h)
    # ∫ (1 + q^2 + p^2) exp(-(q - 0.3)^2 - p^2) = pi (1 + 0.09 + 1/2 + 1/2)
    exact = np.pi * 2.09
    assert abs(res.value - exact) <= 1e-6 * exact
    assert abs(res.direct_pairing - exact) <= 1e-9 * exact


def test_extension_chirp_independent_of_f0():
    u = DualElement.from_family(fam.chirp([[0.5, 0], [0, 0.25]]), SPEC)
    h = sample(fam.gaussian([0.0, -0.5], [[0.7, 0], [0, 1.3]]), SPEC)
    a = extend_functional(u, unit_gaussian(1.0), h)
    b = extend_functional(u, unit_gaussian(0.7), h)
    assert abs(a.value - b.value) <= 1e-6 * abs(a.value)
    assert abs(a.value - a.direct_pairing) <= 1e-6 * abs(a.direct_pairing)


def test_extension_guards():
    u = DualElement.from_family(fam.constant(1.0, 2), SPEC)
    h = sample(G, SPEC)
    with pytest.raises(NotNormalized):
        extend_functional(u, sample(fam.gaussian([0, 0], np.eye(2)), SPEC), h)
    wide = GridFunction(SPEC, np.ones(SPEC.shape))
    with pytest.raises(OuterBoundaryLeak):
        extend_functional(u, unit_gaussian(1.0), wide)


def test_riemann_brute_force():
    spec = GridSpec.make(2, 32, 4.0)
    h = sample(G, spec)
    s = 0.5
    f0 = fam.gaussian([0, 0], np.eye(2) / s**2, 1 / (np.pi * s**2))
    n = 3
    out = riemann_sequence(h, f0, n)
    a = np.arange(-n * n, n * n + 1) / n
    alpha = np.stack(np.meshgrid(a, a, indexing="ij"), axis=-1).reshape(-1, 2)
    for idx in [(5, 7), (16, 16), (20, 3)]:
        x = spec.points()[idx]
        ref = h.samples[idx] * np.sum(f0(alpha - x)) / n**2
        assert out.samples[idx] == pytest.approx(ref, rel=1e-12)


def test_riemann_converges():
    s = 0.08
    f0 = fam.gaussian([0, 0], np.eye(2) / s**2, 1 / (np.pi * s**2))
    h = sample(fam.gaussian([0.3, -0.2], [[0.5, 0.1], [0.1, 0.6]]), SPEC)
    errs = [np.max(np.abs(riemann_sequence(h, f0, n).samples - h.samples)) for n in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_riemann_needs_separable_gaussian():
    h = sample(G, SPEC)
    with pytest.raises(UnsupportedFamily):
        riemann_sequence(h, G, 4)
    with pytest.raises(UnsupportedFamily):
        riemann_sequence(h, fam.constant(1.0, 2), 4)


def test_resolved_grid_size():
    assert resolved_grid_size(8.0, 1.0) == 128
    assert resolved_grid_size(16.0, 1.0) == 512
    N = resolved_grid_size(12.0, 0.5)
    assert np.pi * N / 12.0 > 4 * 12.0 / 0.5


@pytest.mark.parametrize("order", ["hf", "fh"])
def test_star_with_polynomial(order):
    # H * g = H g +- i hbar (q d_p - p d_q) g - hbar^2/4 Laplacian g for H = 1 + q^2 + p^2
    hb = 1.0
    spec = GridSpec.make(2, 128, 8.0)
    g = fam.gaussian([0.2, -0.1], [[1.0, 0.2], [0.2, 0.8]])
    H = fam.polynomial({(0, 0): 1, (2, 0): 1, (0, 2): 1})
    out = star_with_multiplier(H, sample(g, spec), hb, order)
    z = spec.points()
    q, p = z[..., 0], z[..., 1]
    sgn = 1 if order == "hf" else -1
    lap = g.derivative((2, 0))(z) + g.derivative((0, 2))(z)
    ref = (1 + q**2 + p**2) * g(z) + sgn * 1j * hb * (q * g.derivative((0, 1))(z) - p * g.derivative((1, 0))(z)) \
        - hb**2 / 4 * lap
    assert rel(out.samples, ref) <= 1e-8


def test_star_with_multiplier_order_validation():
    with pytest.raises(ValidationError):
        star_with_multiplier(fam.constant(1.0, 2), sample(G, SPEC), 1.0, "xy")


@pytest.mark.slow
def test_multiplier_experiment_polynomial():
    h = fam.polynomial({(0, 0): 1, (2, 0): 1, (0, 2): 1})
    rep = multiplier_experiment(h, fam.gaussian([0, 0], np.eye(2)), StarConfig(1.0), L_values=(8.0, 12.0))
    assert rep["success"]
    d = report_to_dict(rep)
    assert [r["L"] for r in d["runs"]] == [8.0, 12.0]
    assert "result" not in d["runs"][0]["orders"]["hf"]
