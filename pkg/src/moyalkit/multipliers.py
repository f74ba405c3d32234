"""Approximate identities, convolutors and multiplier experiments.

Dual elements are represented by functions of at most weight-bounded
growth acting by integration. Convolutions with them are lattice sums in
which the growing factor is evaluated on the doubled difference lattice
from its closed form when one is available, so nothing is lost at the box
edge.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from ._lattice import bilinear_phase_sum, trim_support
from .errors import (
    IntegrandGrowth,
    NegativeValues,
    NotNormalized,
    NumericalGuardError,
    OffLattice,
    OuterBoundaryLeak,
    SpecMismatch,
    UnsupportedFamily,
    ValidationError,
)
from .families import Family, PolyExp, family_from_dict
from .gridfn import (
    GridFunction,
    GridSpec,
    NormData,
    boundary_ratio,
    fit_class_constants,
    sample,
)
from .sequences import make_sequence
from .starprod import J, StarConfig, symplectic_fourier, twisted_convolution

GROWTH_THRESHOLD = 1e-8
OUTER_THRESHOLD = 1e-8


def _extended_points(spec, factor=2):
    """Lattice points ``j h`` for ``j = -factor N/2 .. factor N/2 - 1`` per axis."""
    axes = [(np.arange(factor * n) - factor * n // 2) * h for n, h in zip(spec.N, spec.h)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _difference_points(spec):
    """All differences of grid points: ``2N - 1`` lattice points per axis."""
    axes = [(np.arange(2 * n - 1) - (n - 1)) * h for n, h in zip(spec.N, spec.h)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


# ---------------------------------------------------------------------------
# approximate identities


@dataclass
class ApproxIdentity:
    """Member ``e_n(z) = n^{2d} e_1(n z)`` of a dilation family.

    ``raw_mass`` is the grid integral before renormalization; it departs
    from 1 once ``e_n`` becomes narrower than the grid can resolve.
    """

    e1: GridFunction
    n: int
    e_n: GridFunction
    raw_mass: float


def make_approx_identity(e1, n, tol=1e-6):
    """Dilate and rescale ``e1``; the result has unit grid integral."""
    if n < 1 or int(n) != n:
        raise ValidationError("n must be a positive integer")
    s = e1.samples
    top = np.max(np.abs(s))
    if np.min(s.real) < -1e-14 * top or np.max(np.abs(s.imag)) > 1e-14 * top:
        raise NegativeValues("e1 must be real and nonnegative")
    mass = e1.integral().real
    if abs(mass - 1) > tol:
        raise NotNormalized(f"grid integral of e1 is {mass:.12g}, expected 1")
    spec = e1.spec
    d = spec.d
    # exponent 2d on phase space R^{2d}, i.e. n^{grid dimension}
    scale = float(n) ** d
    pts = spec.points()
    if e1.source is not None:
        vals = scale * e1.source(n * pts)
    else:
        interp = RegularGridInterpolator(spec.axes(), s.real, bounds_error=False, fill_value=0.0)
        vals = scale * interp((n * pts).reshape(-1, d)).reshape(spec.shape)
    raw = float(np.sum(vals.real) * spec.cell)
    e_n = e1.with_samples(vals.real / raw, f"e_{n}[{e1.meta}]")
    return ApproxIdentity(e1, int(n), e_n, raw)


def approx_identity_errors(e1, g, ns, hbar, order="left"):
    """``sup |e_n *_hbar g - g|`` (or ``g *_hbar e_n`` for ``order="right"``)."""
    out = []
    for n in ns:
        e = make_approx_identity(e1, n).e_n
        r = twisted_convolution(e, g, hbar) if order == "left" else twisted_convolution(g, e, hbar)
        out.append(float(np.max(np.abs(r.samples - g.samples))))
    return np.array(out)


# ---------------------------------------------------------------------------
# twisted translations


def _lattice_shift(xi, spec):
    s = np.asarray(xi, dtype=float) / np.asarray(spec.h)
    k = np.rint(s)
    if np.any(np.abs(s - k) > 1e-9):
        raise OffLattice(f"shift {list(xi)} is not a multiple of the grid spacing {spec.h}")
    return tuple(int(v) for v in k)


def _shift_samples(a, k):
    out = np.zeros_like(a)
    src = []
    dst = []
    for n, s in zip(a.shape, k):
        if abs(s) >= n:
            return out
        if s >= 0:
            src.append(slice(0, n - s))
            dst.append(slice(s, n))
        else:
            src.append(slice(-s, n))
            dst.append(slice(0, n + s))
    out[tuple(dst)] = a[tuple(src)]
    return out


def twisted_translate(g, xi, hbar, sign=+1):
    """``exp(+-(i hbar/2) xi.J z) g(z - xi)`` for a lattice vector ``xi``."""
    if g.spec.d != 2:
        raise SpecMismatch("twisted translations act on phase space")
    k = _lattice_shift(xi, g.spec)
    xi = np.asarray(k) * np.asarray(g.spec.h)
    pts = g.spec.points()
    phase = np.exp(sign * 0.5j * hbar * (pts @ (J.T @ xi)))
    vals = phase * _shift_samples(g.samples, k)
    return g.with_samples(vals, f"tau_{list(xi)}[{g.meta}]")


# ---------------------------------------------------------------------------
# dual elements


@dataclass
class DualElement:
    """Functional ``f -> ∫ u f`` given by a function of bounded growth.

    ``growth_class`` optionally records the ``(a, A)`` pair for which the
    E-norm of ``u`` was certified.
    """

    representation: GridFunction
    growth_class: dict = field(default_factory=dict)

    @property
    def family(self):
        return self.representation.source

    @classmethod
    def from_family(cls, family, spec, **growth):
        if not isinstance(family, Family):
            family = family_from_dict(family)
        return cls(sample(family, spec), dict(growth))

    def pair(self, f):
        """``∫ u f`` over the grid."""
        return complex(np.sum(self.representation.samples * f.samples) * f.spec.cell)


def _conv_box(u_vals, u_start, f_vals, f_start, spec):
    """``sum_m u(m) f(k - m) h^d`` for ``k`` on the grid box."""
    full = fftconvolve(u_vals, f_vals, mode="full")
    box = tuple(-(n // 2) for n in spec.N)
    sl = tuple(slice(b - us - fs, b - us - fs + n)
               for b, us, fs, n in zip(box, u_start, f_start, spec.N))
    return full[sl] * spec.cell


def convolve_dual(u, f):
    """``(u * f)(x) = ∫ u(y) f(x - y) dy``.

    With a closed-form ``u`` the factor is evaluated on the doubled box, so
    the result is free of edge truncation wherever ``f`` has decayed within
    one box width. Raises :class:`IntegrandGrowth` when the growth of ``u``
    on that doubled box is not beaten by the decay of ``f``.
    """
    rep = u.representation
    spec = f.spec
    if rep.spec != spec:
        raise SpecMismatch("dual element and function live on different grids")
    if u.family is not None:
        vals = u.family(_extended_points(spec))
        start = tuple(-n for n in spec.N)
        truncated = False
    else:
        vals = rep.samples
        start = tuple(-(n // 2) for n in spec.N)
        truncated = True
    fa = np.abs(f.samples)
    edge_u = np.max(np.abs(vals[_edge(vals.shape)]))
    edge_f = np.max(fa[_edge(fa.shape)])
    core = np.max(np.abs(rep.samples)) * fa.max()
    growth = float(edge_u * edge_f / core) if core > 0 else 0.0
    if not np.isfinite(growth) or growth > GROWTH_THRESHOLD:
        raise IntegrandGrowth(
            "growth of the dual element is not dominated by the decay of f",
            quantity=growth, threshold=GROWTH_THRESHOLD,
        )
    f_start = tuple(-(n // 2) for n in spec.N)
    out = _conv_box(vals, start, f.samples, f_start, spec)
    meta = f"({rep.meta}) conv ({f.meta})" + (" [u truncated to box]" if truncated else "")
    return GridFunction(spec, out, meta)


def _edge(shape):
    mask = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[ax] = 0
        mask[tuple(idx)] = True
        idx[ax] = -1
        mask[tuple(idx)] = True
    return mask


@dataclass
class ExtensionResult:
    value: complex
    direct_pairing: complex
    outer_boundary_ratio: float

    def to_dict(self):
        return {"value": self.value, "direct_pairing": self.direct_pairing,
                "outer_boundary_ratio": self.outer_boundary_ratio}


def extend_functional(u, f0, h, tol=1e-6):
    """``<u~, h> = ∫ (u * h_xi)(xi) dxi`` with ``h_xi(x) = h(xi - x) f0(x)``.

    The inner integral equals ``∫ u(y) h(y) f0(xi - y) dy``, a convolution
    of ``u h`` with ``f0``; the outer integral runs over the grid box and
    requires the inner values to have decayed at its edge.
    """
    spec = h.spec
    if f0.spec != spec or u.representation.spec != spec:
        raise SpecMismatch("u, f0 and h must share a grid")
    mass = f0.integral()
    if abs(mass - 1) > tol:
        raise NotNormalized(f"grid integral of f0 is {mass:.12g}, expected 1")
    uh = u.representation.samples * h.samples
    start = tuple(-(n // 2) for n in spec.N)
    inner = _conv_box(uh, start, f0.samples, start, spec)
    ratio = boundary_ratio(inner)
    if ratio > OUTER_THRESHOLD:
        raise OuterBoundaryLeak(
            "outer integrand of the extension has not decayed at the box edge",
            quantity=ratio, threshold=OUTER_THRESHOLD,
        )
    value = complex(inner.sum() * spec.cell)
    direct = complex(uh.sum() * spec.cell)
    return ExtensionResult(value, direct, ratio)


def riemann_sequence(h, f0, n):
    """``s_n(x) = sum_{|alpha| <= n^2} h(x) f0(alpha/n - x) / n^d``.

    ``|alpha|`` is the max-norm, so the index set is a cube and for a
    separable ``f0`` (a Gaussian with diagonal quadratic form) the sum
    factorizes into one-dimensional sums per axis, which is how it is
    evaluated. ``f0`` is a closed-form family.
    """
    if not isinstance(f0, PolyExp) or not f0.is_gaussian():
        raise UnsupportedFamily("riemann_sequence needs a Gaussian f0")
    A = f0.A
    if np.max(np.abs(A - np.diag(np.diag(A)))) > 0:
        raise UnsupportedFamily("riemann_sequence needs a separable f0")
    if not np.all(np.diag(A).real > 0):
        raise UnsupportedFamily("riemann_sequence needs a decaying f0")
    spec = h.spec
    d = spec.d
    g = f0.as_gaussian()
    alpha = np.arange(-n * n, n * n + 1) / n
    total = np.exp(g.c) * np.ones(spec.shape, dtype=complex)
    for i in range(d):
        x = spec.axis(i)
        t = alpha[:, None] - x[None, :]
        s = np.exp(-A[i, i] * t**2 + g.b[i] * t).sum(axis=0) / n
        shape = [1] * d
        shape[i] = -1
        total = total * s.reshape(shape)
    return h.with_samples(h.samples * total, f"s_{n}[{h.meta}]")


# ---------------------------------------------------------------------------
# star products with a growing factor


def star_with_multiplier(h_family, f, hbar, order="hf", trim=1e-15):
    """``h *_hbar f`` (``order="hf"``) or ``f *_hbar h`` (``order="fh"``).

    Uses the factorization through symplectic Fourier transforms so that
    only the decaying factor ``f`` is transformed:
    ``h * f = (pi hbar)^-1 h *_{4/hbar} (F̄_J f)`` and
    ``f * h = (pi hbar)^-1 (F_J f) *_{4/hbar} h``. The growing factor is
    evaluated from its closed form on the difference lattice, so no window
    is involved.
    """
    spec = f.spec
    if order == "hf":
        u = symplectic_fourier(f, hbar, -1).samples
        P = -(2.0 / hbar) * J
    elif order == "fh":
        u = symplectic_fourier(f, hbar, +1).samples
        P = (2.0 / hbar) * J
    else:
        raise ValidationError("order must be 'hf' or 'fh'")
    start = tuple(-(n // 2) for n in spec.N)
    u, u0 = trim_support(u, start, trim)
    hv = h_family(_difference_points(spec))
    v0 = tuple(-(n - 1) for n in spec.N)
    vals = bilinear_phase_sum(u, u0, hv, v0, start, spec.shape, spec.h, P) / (np.pi * hbar)
    name = (h_family.spec or {}).get("family", "h")
    meta = f"{name} * ({f.meta})" if order == "hf" else f"({f.meta}) * {name}"
    return GridFunction(spec, vals, meta)


def _windowed_star(h_family, f, hbar, W, order):
    from .starprod import moyal

    spec = f.spec
    pts = spec.points()
    hw = h_family(pts) * np.exp(-np.sum(pts**2, axis=-1) / W**2)
    hg = GridFunction(spec, hw, f"window({W:g})")
    cfg = StarConfig(hbar, backend="fourier")
    return moyal(hg, f, cfg) if order == "hf" else moyal(f, hg, cfg)


def resolved_grid_size(L, hbar, reach=None):
    """Smallest power of two ``N`` resolving the multiplier integrand on ``[-L, L]``.

    The integrand oscillates with frequency up to about ``4L/hbar``; the
    grid band ``pi N / L`` must exceed that by a margin for the decaying
    factor's own spectrum.
    """
    reach = 12.0 if reach is None else reach
    need = L * (4 * L / hbar + reach) / np.pi
    N = 32
    while N < need:
        N *= 2
    return N


def decay_profile(F):
    """``|F|`` along the two coordinate axes through the origin."""
    spec = F.spec
    c0, c1 = spec.N[0] // 2, spec.N[1] // 2
    return {
        "q": spec.axis(0), "abs_along_q": np.abs(F.samples[:, c1]),
        "p": spec.axis(1), "abs_along_p": np.abs(F.samples[c0, :]),
    }


def multiplier_experiment(h, f, cfg=None, L_values=(8.0, 12.0, 16.0), a=None, b=None,
                          M=2, windows=(6.0, 7.0), N_values=None):
    """Star products of a candidate multiplier with a rapidly decaying function.

    For every box half-width ``L`` both ``h * f`` and ``f * h`` are formed
    on a grid fine enough to resolve the integrand, and class constants are
    fitted to the result with ``target_C = 10 max |result|``. Two fits are
    recorded: ``certified`` rejects constants whose weighted supremum sits
    on the box edge; ``raw`` accepts them and tracks how the best ``A``
    moves with the box, which is the witness for non-decaying products.

    Window sensitivity: the same product through the Fourier backend with
    ``h`` multiplied by ``exp(-|x|^2/W^2)`` for ``W = L/w`` and ``w`` in
    ``windows``; the report gives the deviation from the unwindowed result
    or the guard that tripped.

    Parameters
    ----------
    h, f : Family or dict
        Closed-form candidate multiplier and decaying partner on R^2.
    """
    cfg = cfg or StarConfig()
    if not isinstance(h, Family):
        h = family_from_dict(h)
    if not isinstance(f, Family):
        f = family_from_dict(f)
    a = a or make_sequence("gevrey", 0.5, 1024)
    b = b or a
    runs = []
    for i, L in enumerate(L_values):
        N = N_values[i] if N_values is not None else resolved_grid_size(L, cfg.hbar)
        spec = GridSpec.make(2, N, L)
        fg = sample(f, spec)
        entry = {"L": float(L), "N": int(N), "orders": {}}
        for order in ("hf", "fh"):
            R = star_with_multiplier(h, fg, cfg.hbar, order)
            target = 10 * float(np.max(np.abs(R.samples)))
            data = NormData(R, M)
            cert = fit_class_constants(R, a, b, M, target, require_interior=True, data=data)
            raw = fit_class_constants(R, a, b, M, target, require_interior=False, data=data)
            sens = []
            for w in windows:
                W = L / w
                try:
                    Rw = _windowed_star(h, fg, cfg.hbar, W, order)
                    dev = float(np.max(np.abs(Rw.samples - R.samples)) / max(target / 10, 1e-300))
                    sens.append({"W": W, "relative_deviation": dev})
                except NumericalGuardError as err:
                    sens.append({"W": W, "guard": err.to_dict()})
            entry["orders"][order] = {
                "result": R,
                "sup": target / 10,
                "decays": R.decays,
                "certified": cert,
                "raw": raw,
                "window_sensitivity": sens,
                "profile": decay_profile(R),
            }
        runs.append(entry)
    success = all(r["orders"][o]["certified"].found for r in runs for o in ("hf", "fh"))
    trend = {}
    for o in ("hf", "fh"):
        As = [r["orders"][o]["raw"].A for r in runs]
        trend[o] = {"A": As, "strictly_increasing": bool(
            all(x is not None for x in As) and all(x < y for x, y in zip(As, As[1:])))}
    return {"success": success, "runs": runs, "raw_A_trend": trend,
            "config": cfg.to_dict(), "M": M, "target_C_rule": "10 * max|result|"}


def report_to_dict(rep):
    """Strip grid data from a multiplier report for JSON output."""
    out = {k: v for k, v in rep.items() if k != "runs"}
    out["runs"] = []
    for r in rep["runs"]:
        rr = {"L": r["L"], "N": r["N"], "orders": {}}
        for o, e in r["orders"].items():
            rr["orders"][o] = {
                "sup": e["sup"], "decays": e["decays"],
                "certified": e["certified"].to_dict(), "raw": e["raw"].to_dict(),
                "window_sensitivity": e["window_sensitivity"],
            }
        out["runs"].append(rr)
    return out
