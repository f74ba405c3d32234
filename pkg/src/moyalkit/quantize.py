"""Weyl and S-ordered quantization on the Hermite basis.

Phase space is ``R^2`` with ``x = (q, p)``; operators act on functions of
``q``. The Weyl kernel of a symbol ``f`` is::

    K(q, q') = (2 pi hbar)^-1 ∫ f((q + q')/2, p) exp(i p (q - q')/hbar) dp

and ``Op_S(f)`` is the Weyl operator of the transformed symbol
``F^-1[f^ exp(i hbar/4 zeta.S zeta)]``. With this sign the map is a
homomorphism for :func:`moyalkit.starprod.star_S`; see
``docs/conventions.md``.

Kernels are sampled on the ``q`` axis of the symbol's grid. The midpoints
``(q + q')/2`` fall on the half lattice; they are evaluated in closed form
when the symbol carries its family, otherwise by band-limited (Fourier)
interpolation along ``q``. The ``p`` integral is a Gauss-Legendre rule over
the box ``|p| <= L_p`` for closed forms, and the transform of the
band-limited interpolant for plain samples.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import SpecMismatch, ValidationError
from .families import PolyExp, Sum, hermite_functions
from .gridfn import GridFunction, GridSpec, fourier, sample
from .starprod import StarConfig

MAX_BASIS = 64


@dataclass(frozen=True)
class OperatorMatrix:
    """``entries[m, n] = <psi_m, Op_S(f) psi_n>`` on ``hbar``-scaled Hermite functions."""

    entries: np.ndarray = field(repr=False)
    hbar: float
    S: np.ndarray = field(repr=False)
    symbol_meta: str = ""

    @property
    def K(self):
        return self.entries.shape[0]

    def hermiticity_defect(self):
        E = self.entries
        return float(np.max(np.abs(E - E.conj().T)))

    def block(self, k):
        return self.entries[:k, :k]

    def __matmul__(self, other):
        return OperatorMatrix(self.entries @ other.entries, self.hbar, self.S,
                              f"({self.symbol_meta})({other.symbol_meta})")

    def spectrum(self):
        """Eigenvalues sorted by real part (``eigvalsh`` when Hermitian)."""
        if self.hermiticity_defect() <= 1e-8 * max(1.0, np.abs(self.entries).max()):
            return np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T)).astype(complex)
        ev = np.linalg.eigvals(self.entries)
        return ev[np.argsort(ev.real, kind="stable")]

    def to_dict(self):
        ev = self.spectrum()
        return {"K": self.K, "hbar": self.hbar, "S": np.asarray(self.S).tolist(),
                "symbol": self.symbol_meta,
                "hermiticity_defect": self.hermiticity_defect(),
                "trace": [float(np.trace(self.entries).real), float(np.trace(self.entries).imag)],
                "eigenvalues_re": ev.real.tolist(), "eigenvalues_im": ev.imag.tolist()}


def _phase_space(f):
    if f.spec.d != 2:
        raise SpecMismatch("symbols live on a two-dimensional (q, p) grid")


# ---------------------------------------------------------------------------
# symbol transformation


def _poly_only(fam):
    """True if ``fam`` is a polynomial (no exponential part)."""
    if isinstance(fam, PolyExp):
        return not np.any(fam.A) and not np.any(fam.b) and fam.c == 0
    if isinstance(fam, Sum):
        return all(_poly_only(t) for t in fam.terms)
    return False


def _degree(fam):
    if isinstance(fam, PolyExp):
        return max((sum(e) for e in fam.poly), default=0)
    return max(_degree(t) for t in fam.terms)


def _ordering_series(fam, coef, S):
    """``exp(coef * sum_ij S_ij d_i d_j) fam`` for a polynomial family.

    The series terminates because each term lowers the degree by two.
    """
    terms, weights = [fam], [1.0]
    cur, fact = fam, 1.0
    for k in range(1, _degree(fam) // 2 + 1):
        cur = Sum([cur.partial(i).partial(j) for i in range(2) for j in range(2)],
                  [S[i, j] for i in range(2) for j in range(2)])
        fact *= k
        terms.append(cur)
        weights.append(coef**k / fact)
    return Sum(terms, weights)


def transform_symbol(f, cfg):
    """The Weyl symbol of ``Op_S(f)``: ``F^-1[f^ exp(i hbar/4 zeta.S zeta)]``.

    Decaying symbols go through the grid transform. Polynomials use the
    equivalent differential operator ``exp(-(i hbar/4) d.S d)``, which
    terminates. Anything else with ``S != 0`` must decay at the box edge.
    """
    _phase_space(f)
    S = np.asarray(cfg.S, dtype=float)
    if not np.any(S) or cfg.hbar == 0:
        return f
    if f.source is not None and _poly_only(f.source):
        fam = _ordering_series(f.source, -0.25j * cfg.hbar, S)
        return sample(fam, f.spec, f"T_S[{f.meta}]")
    f.require_decay("transform_symbol")
    F = fourier(f)
    zeta = F.spec.points()
    F = F.with_samples(F.samples * np.exp(0.25j * cfg.hbar * np.einsum("...i,ij,...j->...", zeta, S, zeta)))
    out = fourier(F, "inverse")
    return GridFunction(f.spec, out.samples, f"T_S[{f.meta}]")


# ---------------------------------------------------------------------------
# kernels


def _gauss_legendre(Lp, hp, ymax, hbar):
    # kernel phase frequency ymax/hbar plus the symbol's own band pi/hp
    n = int(np.ceil(Lp * (ymax / hbar + np.pi / hp))) + 64
    x, w = np.polynomial.legendre.leggauss(n)
    return Lp * x, Lp * w


def _midpoint_table(f, hbar):
    """``T[l, s] = ∫ f(m_s, p) exp(i p y_l/hbar) dp`` on ``y_l = l h``, ``m_s = s h/2``.

    ``l`` runs over ``-(N-1)..N-1`` and ``s`` over ``-N..N-1``.
    """
    spec = f.spec
    N, hq = spec.N[0], spec.h[0]
    y = (np.arange(2 * N - 1) - (N - 1)) * hq
    m = (np.arange(2 * N) - N) * (hq / 2)
    if f.source is not None:
        pw, ww = _gauss_legendre(spec.L[1], spec.h[1], np.abs(y).max(), hbar)
        Q, P = np.meshgrid(m, pw, indexing="ij")
        vals = f.source(np.stack([Q, P], axis=-1))
        E = np.exp(1j / hbar * np.outer(y, pw)) * ww
        return E @ vals.T, "closed_form"
    f.require_decay("weyl_kernel")
    # band-limited interpolation onto the half lattice along q
    vals = signal.resample(f.samples, 2 * N, axis=0)
    p, hp = spec.axis(1), spec.h[1]
    band = np.pi * hbar / hp
    mask = np.where(np.abs(y) < band, 1.0, np.where(np.abs(y) == band, 0.5, 0.0))
    E = np.exp(1j / hbar * np.outer(y, p)) * (hp * mask[:, None])
    return E @ vals.T, "band_limited"


@dataclass(frozen=True)
class WeylKernel:
    """``K[i, j] = K(q_i, q_j)`` on the ``q`` axis of ``spec``."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)
    hbar: float
    method: str

    @property
    def q(self):
        return self.spec.axis(0)

    @property
    def hq(self):
        return self.spec.h[0]


def weyl_kernel(f, hbar):
    """Integral kernel of the Weyl operator with symbol ``f``."""
    _phase_space(f)
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    T, method = _midpoint_table(f, hbar)
    N = f.spec.N[0]
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    K = T[i - j + N - 1, i + j] / (2 * np.pi * hbar)
    return WeylKernel(f.spec, K, float(hbar), method)


def hermite_basis(spec, K, hbar):
    """``psi_0..psi_{K-1}`` on the ``q`` axis of ``spec``, shape ``(K, N)``."""
    if not 1 <= K <= MAX_BASIS:
        raise ValidationError(f"basis size must be between 1 and {MAX_BASIS}")
    return hermite_functions(K, spec.axis(0), hbar)


def op_matrix(f, cfg=None, K=16):
    """Matrix of ``Op_S(f)`` on the first ``K`` Hermite functions."""
    cfg = cfg or StarConfig()
    kern = weyl_kernel(transform_symbol(f, cfg), cfg.hbar)
    psi = hermite_basis(f.spec, K, cfg.hbar)
    entries = psi.conj() @ kern.values @ psi.T * kern.hq**2
    return OperatorMatrix(entries, cfg.hbar, cfg.S, f.meta)


def apply_op(f, psi, cfg=None):
    """``(Op_S(f) psi)(q) = ∫ K(q, q') psi(q') dq'`` on the ``q`` axis of ``f``."""
    cfg = cfg or StarConfig()
    if psi.spec.d != 1 or psi.spec.N[0] != f.spec.N[0] or psi.spec.L[0] != f.spec.L[0]:
        raise SpecMismatch("wavefunction grid must match the q axis of the symbol grid")
    psi.require_decay("apply_op")
    kern = weyl_kernel(transform_symbol(f, cfg), cfg.hbar)
    vals = kern.values @ psi.samples * kern.hq
    return psi.with_samples(vals, f"Op[{f.meta}]({psi.meta})")


# ---------------------------------------------------------------------------
# Wigner transform


def _half_lattice(psi):
    """Samples at ``s h/2`` for ``s = -N..N-1``."""
    N, h = psi.spec.N[0], psi.spec.h[0]
    if psi.source is not None:
        return psi.source((np.arange(2 * N) - N) * (h / 2))
    return signal.resample(psi.samples, 2 * N)


def wigner(psi, phi, hbar=1.0, spec=None):
    """Cross-Wigner function ``(pi hbar)^-1 ∫ conj(psi(q+y)) phi(q-y) exp(2ipy/hbar) dy``.

    Evaluated on ``spec`` (default: the ``q`` grid of ``psi`` in both
    directions). The ``y`` integral uses the half lattice ``y = l h/2`` so
    that ``q +- y`` stay on it.
    """
    if psi.spec != phi.spec or psi.spec.d != 1:
        raise SpecMismatch("wavefunctions must share a one-dimensional grid")
    psi.require_decay("wigner")
    phi.require_decay("wigner")
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    N, h = psi.spec.N[0], psi.spec.h[0]
    spec = spec or GridSpec.make(2, N, psi.spec.L[0])
    if spec.N[0] != N or spec.L[0] != psi.spec.L[0]:
        raise SpecMismatch("phase-space q axis must match the wavefunction grid")
    a = _half_lattice(psi).conj()
    b = _half_lattice(phi)
    # q_i = i h sits at half-lattice index 2i; y_l = l h/2 for |l| < 2N
    i = np.arange(N) - N // 2
    l = np.arange(-2 * N + 1, 2 * N)
    plus = 2 * i[:, None] + l[None, :] + N
    minus = 2 * i[:, None] - l[None, :] + N
    ok = (plus >= 0) & (plus < 2 * N) & (minus >= 0) & (minus < 2 * N)
    g = np.where(ok, a[np.clip(plus, 0, 2 * N - 1)] * b[np.clip(minus, 0, 2 * N - 1)], 0.0)
    y = l * (h / 2)
    E = np.exp(2j / hbar * np.outer(y, spec.axis(1))) * (h / 2)
    W = g @ E / (np.pi * hbar)
    return GridFunction(spec, W, f"W[{psi.meta}, {phi.meta}]")


__all__ = [
    "OperatorMatrix", "WeylKernel", "transform_symbol", "weyl_kernel", "hermite_basis",
    "op_matrix", "apply_op", "wigner",
]
