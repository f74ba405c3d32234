"""Functions sampled on centered uniform grids, transforms and norms.

A grid with ``N`` points and half-width ``L`` per axis has spacing
``h = 2L/N`` and points ``j h`` for ``j = -N/2 .. N/2 - 1``. With this
centering the discrete Fourier sum needs no phase correction beyond an
``fftshift``: the dual grid has spacing ``pi/L``, half-width ``pi N/(2L)``,
and ``x_j . zeta_k = 2 pi j k / N``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from ._lattice import fft_workers
from .errors import (
    BoundaryLeak,
    OrderTooHigh,
    SpecMismatch,
    TruncationError,
    ValidationError,
)
from .families import Family, multi_indices
from .sequences import log_weight

LEAK_THRESHOLD = 1e-10
M_CAP = 8
NOISE_FLOOR = 1e-12
ROUNDOFF = 1e-13
EDGE_BAND = 2


@dataclass(frozen=True)
class GridSpec:
    """Centered uniform box.

    Attributes
    ----------
    d : int
        Dimension, 1 or 2.
    N : tuple of int
        Samples per axis, a power of two between 32 and 512.
    L : tuple of float
        Half-width per axis.
    """

    d: int
    N: tuple
    L: tuple

    @classmethod
    def make(cls, d, N, L):
        N = tuple(int(n) for n in np.broadcast_to(N, (d,)))
        L = tuple(float(v) for v in np.broadcast_to(L, (d,)))
        spec = cls(int(d), N, L)
        spec.validate()
        return spec

    def validate(self):
        if self.d not in (1, 2):
            raise ValidationError("only d = 1 or d = 2 is supported")
        for n in self.N:
            if n < 32 or n > 512 or n & (n - 1):
                raise ValidationError(f"N = {n} must be a power of two in [32, 512]")
        if any(not v > 0 for v in self.L):
            raise ValidationError("L must be positive")

    @property
    def shape(self):
        return self.N

    @property
    def h(self):
        return tuple(2 * L / N for L, N in zip(self.L, self.N))

    @property
    def cell(self):
        """Volume of one grid cell."""
        return float(np.prod(self.h))

    def axis(self, i):
        n = self.N[i]
        return (np.arange(n) - n // 2) * self.h[i]

    def axes(self):
        return [self.axis(i) for i in range(self.d)]

    def points(self):
        """Array of shape ``N + (d,)`` with the grid points."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def maxnorm(self):
        """``max_j |x_j|`` at every grid point."""
        return np.max(np.abs(self.points()), axis=-1)

    def dual(self):
        """Frequency grid of the discrete Fourier transform."""
        return GridSpec(self.d, self.N, tuple(np.pi * N / (2 * L) for L, N in zip(self.L, self.N)))

    def to_dict(self):
        return {"d": self.d, "N": list(self.N), "L": list(self.L)}


def _boundary_mask(shape):
    mask = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[ax] = 0
        mask[tuple(idx)] = True
        idx[ax] = -1
        mask[tuple(idx)] = True
    return mask


def boundary_ratio(samples):
    """``max |f|`` on the outermost layer over ``max |f|`` overall."""
    a = np.abs(samples)
    top = a.max()
    if top == 0:
        return 0.0
    return float(a[_boundary_mask(a.shape)].max() / top)


@dataclass(frozen=True)
class GridFunction:
    """Complex samples on a :class:`GridSpec`.

    ``source`` optionally keeps the closed-form family the samples came
    from; it lets derivatives of non-decaying functions be taken exactly.
    """

    spec: GridSpec
    samples: np.ndarray = field(repr=False)
    meta: str = ""
    source: Family | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != self.spec.shape:
            raise SpecMismatch(f"samples of shape {s.shape} do not fit grid {self.spec.shape}")
        if not np.all(np.isfinite(s)):
            raise ValidationError("samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def boundary_ratio(self):
        return boundary_ratio(self.samples)

    @property
    def decays(self):
        return self.boundary_ratio <= LEAK_THRESHOLD

    def require_decay(self, what="transform"):
        r = self.boundary_ratio
        if r > LEAK_THRESHOLD:
            raise BoundaryLeak(
                f"{what}: boundary ratio {r:.3e} of '{self.meta}' exceeds {LEAK_THRESHOLD:g}",
                quantity=r, threshold=LEAK_THRESHOLD,
            )

    def sup(self):
        return float(np.max(np.abs(self.samples)))

    def integral(self):
        """Trapezoidal (equivalently rectangle) rule over the box."""
        return complex(self.samples.sum() * self.spec.cell)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.spec.cell))

    def inner(self, other):
        """``int conj(self) other``."""
        _same_spec(self, other)
        return complex(np.vdot(self.samples, other.samples) * self.spec.cell)

    def with_samples(self, samples, meta=None, source=None):
        return GridFunction(self.spec, samples, self.meta if meta is None else meta, source)

    def conj(self):
        src = None
        return self.with_samples(self.samples.conj(), f"conj({self.meta})", src)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            _same_spec(self, other)
            src = self.source * other.source if self.source and other.source else None
            return self.with_samples(self.samples * other.samples, f"({self.meta})*({other.meta})", src)
        return self.with_samples(self.samples * other, f"{other}*({self.meta})")

    __rmul__ = __mul__

    def __add__(self, other):
        _same_spec(self, other)
        src = self.source + other.source if self.source and other.source else None
        return self.with_samples(self.samples + other.samples, f"({self.meta})+({other.meta})", src)

    def __sub__(self, other):
        _same_spec(self, other)
        return self.with_samples(self.samples - other.samples, f"({self.meta})-({other.meta})")


def _same_spec(f, g):
    if f.spec != g.spec:
        raise SpecMismatch(f"grids differ: {f.spec} vs {g.spec}")


def sample(family, spec, meta=None):
    """Sample a closed-form family on the grid."""
    if not isinstance(family, Family):
        from .families import family_from_dict

        family = family_from_dict(family)
    if family.dim != spec.d:
        raise SpecMismatch(f"family has dimension {family.dim}, grid has {spec.d}")
    pts = spec.points()
    vals = family(pts)
    if meta is None:
        meta = (family.spec or {}).get("family", type(family).__name__)
    return GridFunction(spec, vals, meta, family)


# ---------------------------------------------------------------------------
# Fourier transform


def _fft_centered(a, inverse=False):
    axes = tuple(range(a.ndim))
    w = fft_workers()
    a = sfft.ifftshift(a, axes=axes)
    a = sfft.ifftn(a, axes=axes, workers=w) if inverse else sfft.fftn(a, axes=axes, workers=w)
    return sfft.fftshift(a, axes=axes)


def fourier_samples(samples, spec, inverse=False):
    """Raw transform of a sample array; no decay check.

    Forward: ``(2 pi)^{-d/2} h^d sum_j f_j exp(-i x_j . zeta_k)``. ``spec``
    is the grid of the input samples in both directions.
    """
    d = spec.d
    if inverse:
        return _fft_centered(samples, inverse=True) * (np.prod(spec.N) * spec.cell / (2 * np.pi) ** (d / 2))
    return _fft_centered(samples) * (spec.cell / (2 * np.pi) ** (d / 2))


def fourier(f, direction="forward"):
    """Unitary Fourier transform ``(2 pi)^{-d/2} int exp(-i x.zeta) f dx``.

    ``direction="inverse"`` takes samples on a frequency grid back to the
    space grid. Raises :class:`BoundaryLeak` unless ``f`` decays at the
    edge of its box.
    """
    if direction not in ("forward", "inverse"):
        raise ValidationError("direction must be 'forward' or 'inverse'")
    f.require_decay("fourier")
    inverse = direction == "inverse"
    # the dual of the dual grid is the original grid
    out_spec = f.spec.dual()
    vals = fourier_samples(f.samples, f.spec, inverse)
    tag = "F^-1" if inverse else "F"
    return GridFunction(out_spec, vals, f"{tag}[{f.meta}]")


def dft_matrix(x, zeta, sign=-1):
    """``exp(sign * i * zeta_a * x_j)`` as an array indexed ``[a, j]``."""
    return np.exp(sign * 1j * np.outer(zeta, x))


def fourier_at(f, zetas):
    """Transform of a 1-D or 2-D grid function at arbitrary frequency axes.

    ``zetas`` is one frequency array per axis; the output is on their
    tensor grid. The value is the exact transform of the band-limited
    (sinc) interpolant of the samples: the grid sum inside the band
    ``|zeta| < pi/h`` and zero beyond it, where a plain grid sum would
    repeat periodically.
    """
    f.require_decay("fourier_at")
    spec = f.spec
    mats = []
    for i, z in enumerate(zetas):
        z = np.asarray(z, dtype=float)
        band = np.pi / spec.h[i]
        weight = np.where(np.abs(z) < band, 1.0, np.where(np.abs(z) == band, 0.5, 0.0))
        mats.append(dft_matrix(spec.axis(i), z) * weight[:, None])
    pref = spec.cell / (2 * np.pi) ** (spec.d / 2)
    if spec.d == 1:
        return pref * (mats[0] @ f.samples)
    return pref * (mats[0] @ f.samples @ mats[1].T)


# ---------------------------------------------------------------------------
# derivatives


def _spectral_derivative(samples, spec, beta):
    dual = spec.dual()
    F = fourier_samples(samples, spec)
    for i, k in enumerate(beta):
        if k == 0:
            continue
        z = dual.axis(i)
        factor = (1j * z) ** k
        if k % 2:
            factor[0] = 0.0  # Nyquist mode has no symmetric partner
        shape = [1] * spec.d
        shape[i] = -1
        F = F * factor.reshape(shape)
    return fourier_samples(F, dual, inverse=True)


def derivative(f, beta, M_cap=M_CAP, exact_source=False):
    """Partial derivative ``d^beta f`` by spectral differentiation.

    Raises :class:`BoundaryLeak` unless ``f`` decays at the box edge. With
    ``exact_source=True`` a non-decaying ``f`` that carries its closed form
    is differentiated exactly instead.
    """
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    if len(beta) != f.spec.d or min(beta) < 0:
        raise ValidationError(f"multi-index {beta} does not match dimension {f.spec.d}")
    if sum(beta) > M_cap:
        raise OrderTooHigh(f"|beta| = {sum(beta)} exceeds the cap {M_cap}")
    if sum(beta) == 0:
        return f
    src = f.source.derivative(beta) if f.source is not None else None
    if f.decays:
        vals = _spectral_derivative(f.samples, f.spec, beta)
    elif exact_source and src is not None:
        vals = src(f.spec.points())
    else:
        f.require_decay("derivative")
    return f.with_samples(vals, f"d{list(beta)}[{f.meta}]", src)


FD_ORDER = 8


@lru_cache(maxsize=None)
def _fd_weights(offsets, k):
    """Stencil weights ``w`` with ``sum_j w_j g(x + o_j h) ~ h^k g^(k)(x)``."""
    o = np.asarray(offsets, dtype=float)
    V = np.vander(o, increasing=True).T
    rhs = np.zeros(len(o))
    rhs[k] = math.factorial(k)
    return np.linalg.solve(V, rhs)


def _fd_axis(a, h, axis, k, order=FD_ORDER):
    """``k``-th derivative along ``axis`` by finite differences.

    Stencils of ``order + k`` points, centered in the interior and shifted
    inward near the ends, so the truncation order is about ``order``
    everywhere.
    """
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    npts = min(n, order + k + (order + k + 1) % 2)
    out = np.empty_like(a)
    for i in range(n):
        s = min(max(i - npts // 2, 0), n - npts)
        w = _fd_weights(tuple(range(s - i, s - i + npts)), k)
        out[i] = np.tensordot(w, a[s:s + npts], axes=(0, 0))
    return np.moveaxis(out / h**k, 0, axis)


def _spectral_axis(a, h, axis, k):
    """``k``-th derivative along one axis by the discrete Fourier transform."""
    n = a.shape[axis]
    z = (np.arange(n) - n // 2) * (2 * np.pi / (n * h))
    factor = (1j * z) ** k
    if k % 2:
        factor[0] = 0.0  # Nyquist mode has no symmetric partner
    shape = [1] * a.ndim
    shape[axis] = -1
    w = fft_workers()
    F = sfft.fftshift(sfft.fft(sfft.ifftshift(a, axes=axis), axis=axis, workers=w), axes=axis)
    F = F * factor.reshape(shape)
    return sfft.fftshift(sfft.ifft(sfft.ifftshift(F, axes=axis), axis=axis, workers=w), axes=axis)


def axis_decay(samples):
    """Per axis, whether the samples decay on the two faces across it."""
    a = np.abs(samples)
    top = a.max()
    out = []
    for ax in range(a.ndim):
        faces = np.maximum(np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
        out.append(bool(top == 0 or faces <= LEAK_THRESHOLD * top))
    return out


def derivative_table(f, M):
    """``{beta: |d^beta f|}`` for ``|beta| <= M`` and the method used.

    A non-decaying function with a closed-form source is differentiated
    exactly (``closed_form``). Otherwise each axis is handled on its own:
    spectrally when the samples decay across that axis, by high-order
    finite differences when they do not. The method string names the
    choice per axis.
    """
    if M > M_CAP:
        raise OrderTooHigh(f"M = {M} exceeds the cap {M_CAP}")
    betas = multi_indices(f.spec.d, M)
    table = {}
    if f.source is not None and not f.decays:
        pts = f.spec.points()
        for beta in betas:
            table[beta] = np.abs(f.source.derivative(beta)(pts))
        return table, "closed_form"
    spectral = axis_decay(f.samples)
    cache = {(0,) * f.spec.d: f.samples}
    for beta in betas:
        # build from the entry with one fewer derivative along the last used axis
        i = max(j for j in range(f.spec.d) if beta[j]) if sum(beta) else None
        if i is None:
            continue
        prev = list(beta)
        prev[i] -= 1
        base = cache[tuple(prev)]
        h = f.spec.h[i]
        cache[beta] = _spectral_axis(base, h, i, 1) if spectral[i] else _fd_axis(base, h, i, 1)
    for beta in betas:
        table[beta] = np.abs(cache[beta])
    if all(spectral):
        method = "spectral"
    elif not any(spectral):
        method = "finite_difference"
    else:
        method = "mixed(" + ",".join("spectral" if s else "finite_difference" for s in spectral) + ")"
    return table, method


# ---------------------------------------------------------------------------
# norms


@dataclass
class NormReport:
    """Truncated norm estimate.

    The value is a lower bound of the true supremum: it only sees grid
    points inside the box and derivative orders up to ``M``.
    """

    kind: str
    A: float
    B: float
    M: int
    log_value: float
    truncation: dict

    @property
    def infinite(self):
        return bool(np.isinf(self.log_value) and self.log_value > 0)

    @property
    def value(self):
        if self.log_value == -np.inf:
            return 0.0
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_value))

    def to_dict(self):
        return {"kind": self.kind, "A": self.A, "B": self.B, "M": self.M,
                "value": self.value, "log_value": self.log_value,
                "infinite": self.infinite, "truncation": self.truncation}


def _edge_band(shape, width):
    """Mask of the outermost ``width`` layers of the box."""
    mask = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[ax] = slice(0, width)
        mask[tuple(idx)] = True
        idx[ax] = slice(shape[ax] - width, None)
        mask[tuple(idx)] = True
    return mask


def _log_abs(x):
    with np.errstate(divide="ignore"):
        return np.log(np.where(x > 1e-300, x, 0.0))


class NormData:
    """Derivative table and coordinates shared across norm evaluations.

    Parameters
    ----------
    f : GridFunction
    M : int
        Largest derivative order.
    noise_floor : float
        Values of ``|d^beta f|`` below ``noise_floor * max |d^beta f|`` are
        treated as zero when multiplied by the weight. Round-off of a
        computed product sits near ``1e-16`` relative and the weight at the
        box edge can exceed ``1e40``; without a floor the estimate would
        measure the round-off. A derivative of order ``k`` taken from
        samples also amplifies round-off by up to ``zeta_max^k`` (the
        Nyquist frequency), so the floor is at least
        ``ROUNDOFF * max|f| * prod zeta_max_i^beta_i``. Samples of a closed
        form are used as they are.
    """

    def __init__(self, f, M, noise_floor=NOISE_FLOOR):
        self.f = f
        self.M = M
        table, self.method = derivative_table(f, M)
        self.betas = list(table)
        self.order = np.array([sum(b) for b in self.betas])
        self.noise_floor = 0.0 if self.method == "closed_form" else float(noise_floor)
        rows = []
        peak = float(np.max(np.abs(f.samples)))
        nyq = np.pi / np.asarray(f.spec.h)
        for b in self.betas:
            t = table[b]
            if self.noise_floor:
                amp = ROUNDOFF * peak * float(np.prod(nyq ** np.asarray(b)))
                t = np.where(t >= max(self.noise_floor * t.max(), amp), t, 0.0)
            rows.append(_log_abs(t))
        self.logabs = np.stack(rows)
        self.r = f.spec.maxnorm()
        self.edge = _edge_band(f.spec.shape, EDGE_BAND)

    def truncation(self):
        return {"L": list(self.f.spec.L), "N": list(self.f.spec.N), "M": self.M,
                "derivative_method": self.method, "noise_floor": self.noise_floor,
                "estimator": "lower bound (grid and order truncated)"}

    def peak_logs(self, a, A, inverse=False):
        """``max_x (log|d^beta f| +- log w_a(|x|/A))`` per beta.

        Returns the peaks over the whole box and over its outermost layer.
        """
        logw, _ = log_weight(a, self.r / A)
        if inverse:
            if a.kind == "constant_one":
                inside = self.r <= A
                vals = np.where(inside[None], self.logabs, -np.inf)
            else:
                vals = self.logabs - logw[None]
        else:
            with np.errstate(invalid="ignore"):
                vals = self.logabs + logw[None]
            # infinite weight times an exact zero contributes nothing
            vals = np.where(np.isnan(vals), -np.inf, vals)
        n = len(self.betas)
        return vals.reshape(n, -1).max(axis=1), vals[:, self.edge].reshape(n, -1).max(axis=1)

    def combine(self, peaks, b, B):
        return float(np.max(peaks - self.order * np.log(B) - b.log_values[self.order]))

    def evaluate(self, peaks, b, B):
        """Log norm value and whether the box edge attains it."""
        total, edge = peaks
        v = self.combine(total, b, B)
        ve = self.combine(edge, b, B)
        dominated = bool(np.isfinite(v) and ve >= v - 1e-9 * max(1.0, abs(v)))
        return v, dominated


def _check_AB(A, B, M):
    if not (A > 0 and B > 0):
        raise ValidationError("A and B must be positive")
    if M > M_CAP or M < 0:
        raise OrderTooHigh(f"M = {M} outside [0, {M_CAP}]")


def gs_norm(f, a, b, A, B, M):
    """``max_{|beta| <= M, x} w_a(|x|/A) |d^beta f(x)| / (B^|beta| b_|beta|)``.

    ``|x|`` is the max-norm. For ``a`` of kind ``constant_one`` the weight
    is infinite beyond ``|x| = A`` and any nonzero value there makes the
    norm infinite.
    """
    _check_AB(A, B, M)
    data = NormData(f, M)
    value, edge = data.evaluate(data.peak_logs(a, A), b, B)
    trunc = data.truncation()
    trunc["edge_attained"] = edge
    return NormReport("S_norm_weighted", float(A), float(B), M, value, trunc)


def e_norm(h, a, b, A, B, M):
    """``max_{|beta| <= M, x} |d^beta h(x)| / (w_a(|x|/A) B^|beta| b_|beta|)``.

    For ``a`` of kind ``constant_one`` the supremum runs over ``|x| <= A``.
    """
    _check_AB(A, B, M)
    data = NormData(h, M)
    value, edge = data.evaluate(data.peak_logs(a, A, inverse=True), b, B)
    trunc = data.truncation()
    trunc["edge_attained"] = edge
    return NormReport("E_norm", float(A), float(B), M, value, trunc)


def s_norm(f, a, b, A, B, M, alpha_max=8):
    """``max |x^alpha d^beta f| / (A^|alpha| B^|beta| a_|alpha| b_|beta|)``.

    The multi-index form of the norm, truncated at ``|alpha| <= alpha_max``
    and ``|beta| <= M``; always bounded by :func:`gs_norm`.
    """
    _check_AB(A, B, M)
    data = NormData(f, M)
    pts = f.spec.points()
    d = f.spec.d
    best = -np.inf
    for alpha in multi_indices(d, alpha_max):
        k = sum(alpha)
        with np.errstate(divide="ignore"):
            lx = sum(al * np.log(np.abs(pts[..., i])) for i, al in enumerate(alpha) if al)
            lx = lx if k else 0.0
        with np.errstate(invalid="ignore"):
            vals = np.nan_to_num(data.logabs + lx, nan=-np.inf)
        peaks = vals.reshape(len(data.betas), -1).max(axis=1)
        best = max(best, data.combine(peaks, b, B) - k * np.log(A) - a.log_values[k])
    trunc = data.truncation()
    trunc["alpha_max"] = alpha_max
    return NormReport("S_norm", float(A), float(B), M, float(best), trunc)


def default_constant_grid():
    """Geometric grid ``2^{j/4}`` covering ``[2^-6, 2^6]``."""
    return 2.0 ** (np.arange(-24, 25) / 4)


@dataclass
class ClassFit:
    """Result of :func:`fit_class_constants`.

    ``edge_attained`` tells whether the accepted norm value is reached on
    the outermost grid layer; with ``require_interior=False`` this marks a
    fit that only reflects the box size.
    """

    found: bool
    A: float | None
    B: float | None
    value: float | None
    target_C: float
    skipped_A: list
    truncation: dict
    edge_attained: bool = False

    def to_dict(self):
        return {"found": self.found, "A": self.A, "B": self.B, "value": self.value,
                "target_C": self.target_C, "skipped_A": self.skipped_A,
                "edge_attained": self.edge_attained, "truncation": self.truncation}


def fit_class_constants(f, a, b, M, target_C, A_grid=None, B_grid=None,
                        require_interior=True, data=None):
    """Smallest ``(A, B)``, ordered by ``A`` then ``B``, with norm at most ``target_C``.

    On a finite box any bounded function passes once ``A`` is large enough,
    because the weight is only probed up to ``|x| = L``. With
    ``require_interior`` a grid point is accepted only when the weighted
    supremum is attained strictly inside the box, so that functions without
    decay (where the supremum sits on the edge) fail as they should.

    Grid points of ``A`` whose weight evaluation would be truncated are
    skipped and listed in ``skipped_A``. A prebuilt :class:`NormData` for
    ``(f, M)`` may be passed as ``data`` to share derivatives between fits.
    """
    A_grid = default_constant_grid() if A_grid is None else np.asarray(A_grid, float)
    B_grid = default_constant_grid() if B_grid is None else np.asarray(B_grid, float)
    data = data if data is not None else NormData(f, M)
    logC = np.log(target_C)
    if np.all(np.isneginf(data.logabs)):
        # the zero function has norm 0 for every choice of constants
        return ClassFit(True, float(A_grid[0]), float(B_grid[0]), 0.0, float(target_C), [],
                        data.truncation())
    skipped = []
    for A in A_grid:
        try:
            peaks = data.peak_logs(a, A)
        except TruncationError:
            skipped.append(float(A))
            continue
        for B in B_grid:
            v, edge = data.evaluate(peaks, b, B)
            if v <= logC and not (require_interior and edge):
                return ClassFit(True, float(A), float(B), float(np.exp(v)), float(target_C),
                                skipped, data.truncation(), edge)
    return ClassFit(False, None, None, None, float(target_C), skipped, data.truncation())
