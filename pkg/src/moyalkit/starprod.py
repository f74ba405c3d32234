"""Weyl-Moyal product, twisted and deformed convolutions.

Conventions (phase space R^2, ``x = (q, p)``, ``J = [[0, 1], [-1, 0]]``)::

    (f * g)(x)      = (pi hbar)^-2 ∬ f(x - J x') g(x - x'') exp((2i/hbar) x'.x'') dx' dx''
    (u *_th v)(z)   = ∫ u(z') v(z - z') exp((i th/2) z.J z') dz'
    (u *_{h,S} v)(z)= ∫ u(z') v(z - z') exp(-(i h/2) z'.(J + S)(z - z')) dz'
    F(f * g)        = (2 pi)^-1 F f *_hbar F g

All four reduce to lattice sums handled by :mod:`moyalkit._lattice`; see
``docs/conventions.md`` for the derivations.
"""

from dataclasses import dataclass, field

import numpy as np

from ._lattice import bilinear_phase_sum
from .errors import SpecMismatch, ValidationError
from .gaussian import symplectic_matrix
from .gridfn import GridFunction, GridSpec, fourier, fourier_at

BACKENDS = ("direct_quadrature", "fourier")
J = symplectic_matrix(1)


@dataclass(frozen=True)
class StarConfig:
    """Deformation parameter, ordering matrix and backend choice."""

    hbar: float = 1.0
    S: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    backend: str = "fourier"

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.shape != (2, 2):
            raise ValidationError("S must be a 2x2 matrix")
        if np.max(np.abs(S - S.T)) > 1e-12:
            raise ValidationError("S must be symmetric")
        if not self.hbar >= 0:
            raise ValidationError("hbar must be nonnegative")
        if self.backend not in BACKENDS:
            raise ValidationError(f"backend must be one of {BACKENDS}")
        object.__setattr__(self, "S", S)

    @property
    def J(self):
        return J

    def to_dict(self):
        return {"hbar": self.hbar, "S": self.S.tolist(), "backend": self.backend}


def _check_pair(u, v):
    if u.spec != v.spec:
        raise SpecMismatch(f"grids differ: {u.spec} vs {v.spec}")
    if u.spec.d != 2:
        raise SpecMismatch("phase-space operations need a two-dimensional grid")


def _box(spec):
    n = spec.N
    return (-(n[0] // 2), -(n[1] // 2))


def _lattice_sum(u, v, P, spec):
    start = _box(spec)
    return bilinear_phase_sum(u, start, v, start, start, spec.shape, spec.h, P)


def twisted_convolution(u, v, theta):
    """``(u *_theta v)(z) = ∫ u(z') v(z - z') exp((i theta/2) z.J z') dz'``."""
    _check_pair(u, v)
    u.require_decay("twisted_convolution")
    v.require_decay("twisted_convolution")
    vals = _lattice_sum(u.samples, v.samples, 0.5 * theta * J, u.spec)
    return u.with_samples(vals, f"({u.meta}) *_{theta:g} ({v.meta})")


def deformed_convolution(u, v, cfg):
    """``∫ u(z') v(z - z') exp(-(i hbar/2) z'.(J + S)(z - z')) dz'``.

    Since ``z'.J z' = 0`` the phase splits as
    ``exp((i hbar/2) z'.S z') * exp((i hbar/2) z.(J - S) z')``; the first
    factor is absorbed into ``u``.
    """
    _check_pair(u, v)
    u.require_decay("deformed_convolution")
    v.require_decay("deformed_convolution")
    hb, S = cfg.hbar, cfg.S
    pts = u.spec.points()
    pre = np.exp(0.5j * hb * np.einsum("...i,ij,...j->...", pts, S, pts))
    vals = _lattice_sum(u.samples * pre, v.samples, 0.5 * hb * (J - S), u.spec)
    return u.with_samples(vals, f"({u.meta}) *_(hbar,S) ({v.meta})")


def _band(zeta, h):
    band = np.pi / h
    a = np.abs(zeta)
    return np.where(a < band, 1.0, np.where(a == band, 0.5, 0.0))


def _moyal_direct(f, g, hbar):
    """Trapezoidal rule for the defining double integral.

    With ``y = x - J x'`` and ``z = x - x''`` the product becomes
    ``(pi hbar)^-2 ∫ f(y) G(x - y) exp((2i/hbar) x.J y) dy`` where
    ``G(w) = ∫ g(z) exp(-(2i/hbar) w.J z) dz``. Both integrals are sampled on
    the grid; ``G`` is needed at all differences of grid points, an extended
    lattice of ``2N - 1`` points per axis, and is evaluated there by explicit
    sums restricted to the band ``|2w/hbar| < pi/h``.
    """
    spec = f.spec
    hq, hp = spec.h
    nq, np_ = spec.N
    q, p = spec.axis(0), spec.axis(1)
    wq = (np.arange(2 * nq - 1) - (nq - 1)) * hq
    wp = (np.arange(2 * np_ - 1) - (np_ - 1)) * hp
    # w.J z = w_q z_p - w_p z_q; frequencies 2w/hbar beyond the grid band
    # would alias, so G is the transform of the band-limited interpolant
    E1 = np.exp(-2j / hbar * np.outer(wq, p)) * _band(2 * wq / hbar, hp)[:, None]
    E2 = np.exp(2j / hbar * np.outer(wp, q)) * _band(2 * wp / hbar, hq)[:, None]
    G = (E1 @ g.samples.T @ E2.T) * (hq * hp)
    start = _box(spec)
    vals = bilinear_phase_sum(
        f.samples, start, G, (-(nq - 1), -(np_ - 1)), start, spec.shape, spec.h, (2 / hbar) * J
    )
    return vals / (np.pi * hbar) ** 2


def _star_fourier(f, g, conv):
    F, G = fourier(f), fourier(g)
    H = conv(F, G)
    H = H.with_samples(H.samples / (2 * np.pi))
    return fourier(H, "inverse")


def moyal(f, g, cfg=None):
    """Weyl-Moyal product ``f *_hbar g``; ``hbar = 0`` is the pointwise product."""
    cfg = cfg or StarConfig()
    _check_pair(f, g)
    meta = f"({f.meta}) * ({g.meta})"
    if cfg.hbar == 0:
        return f.with_samples(f.samples * g.samples, meta)
    f.require_decay("moyal")
    g.require_decay("moyal")
    if cfg.backend == "direct_quadrature":
        vals = _moyal_direct(f, g, cfg.hbar)
    else:
        vals = _star_fourier(f, g, lambda u, v: twisted_convolution(u, v, cfg.hbar)).samples
    return f.with_samples(vals, meta)


def star_S(f, g, cfg):
    """The ``S``-ordered product through the deformed convolution of transforms."""
    _check_pair(f, g)
    meta = f"({f.meta}) *_S ({g.meta})"
    if cfg.hbar == 0:
        return f.with_samples(f.samples * g.samples, meta)
    vals = _star_fourier(f, g, lambda u, v: deformed_convolution(u, v, cfg)).samples
    return f.with_samples(vals, meta)


def symplectic_fourier(f, hbar, sign=+1):
    """``(pi hbar)^-1 ∫ f(x) exp(-+(2i/hbar) x.J y) dx`` on the grid of ``f``.

    ``sign=+1`` gives ``F_J`` (minus in the exponent) and ``sign=-1`` its
    conjugate ``F̄_J``. Computed as ``(2/hbar) f̂((2/hbar) J y)`` with the
    standard transform evaluated at the substituted frequencies; note that
    ``J y = (y_p, -y_q)`` swaps the axes.
    """
    if hbar <= 0:
        raise ValidationError("hbar must be positive")
    if f.spec.d != 2:
        raise SpecMismatch("symplectic transform needs a two-dimensional grid")
    yq, yp = f.spec.axis(0), f.spec.axis(1)
    s = 2.0 / hbar * sign
    vals = fourier_at(f, [s * yp, -s * yq]).T * (2.0 / hbar)
    tag = "F_J" if sign > 0 else "conj F_J"
    return f.with_samples(vals, f"{tag}[{f.meta}]")


def moyal_via_symplectic(f, g, hbar, side="left"):
    """Star product from a symplectic transform and a twisted convolution.

    ``side="left"``: ``(pi hbar)^-1 (F_J f) *_{4/hbar} g``;
    ``side="right"``: ``(pi hbar)^-1 f *_{4/hbar} (F̄_J g)``.
    """
    if side == "left":
        out = twisted_convolution(symplectic_fourier(f, hbar, +1), g, 4.0 / hbar)
    else:
        out = twisted_convolution(f, symplectic_fourier(g, hbar, -1), 4.0 / hbar)
    return out.with_samples(out.samples / (np.pi * hbar), f"({f.meta}) * ({g.meta}) [{side}]")


def pointwise_deviation(f, g, cfg):
    """``sup |f *_hbar g - f g|``; used for the semiclassical check."""
    return float(np.max(np.abs(moyal(f, g, cfg).samples - f.samples * g.samples)))


__all__ = [
    "StarConfig", "GridFunction", "GridSpec", "twisted_convolution", "deformed_convolution",
    "moyal", "star_S", "symplectic_fourier", "moyal_via_symplectic", "pointwise_deviation",
]
