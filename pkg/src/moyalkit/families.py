"""Closed-form test functions on R^d.

Every family can be evaluated at arbitrary points and differentiated
exactly, which the grid code uses for sampling, for derivatives of functions
that do not decay at the box edge, and for off-grid evaluation (midpoints,
dilations). The building block is :class:`PolyExp`, a polynomial times
``exp(-x.A x + b.x + c)`` with complex ``A``; Gaussians, chirps and
polynomials are all of this form and the class is closed under products and
derivatives. Hermite functions carry their own ladder-operator derivative.
"""

import itertools

import numpy as np

from .errors import UnsupportedFamily
from .gaussian import Gaussian


class Family:
    """Base class: a function on R^d with exact partial derivatives."""

    dim = 1
    spec = None

    def __call__(self, points):
        raise NotImplementedError

    def partial(self, axis):
        raise NotImplementedError

    def derivative(self, beta):
        f = self
        for axis, order in enumerate(beta):
            for _ in range(int(order)):
                f = f.partial(axis)
        return f

    def __add__(self, other):
        return Sum([self, other])

    def __mul__(self, other):
        if np.isscalar(other):
            return Sum([self], [complex(other)])
        return Product(self, other)

    __rmul__ = __mul__

    def to_dict(self):
        if self.spec is None:
            raise UnsupportedFamily(f"{type(self).__name__} has no serial form")
        return self.spec


def _as_points(points, dim):
    x = np.asarray(points, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}")
    return x


class PolyExp(Family):
    """``sum_e c_e x^e * exp(-x.A x + b.x + c)``.

    Parameters
    ----------
    poly : dict
        Maps exponent tuples (length ``dim``) to complex coefficients.
    A, b, c : array_like
        Complex quadratic, linear and constant parts of the exponent.
    """

    def __init__(self, poly, A, b=None, c=0.0, spec=None):
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        self.A = 0.5 * (A + A.T)
        self.dim = self.A.shape[0]
        self.b = np.zeros(self.dim, complex) if b is None else np.asarray(b, complex).reshape(self.dim)
        self.c = complex(c)
        self.poly = {tuple(int(v) for v in k): complex(v) for k, v in poly.items() if v != 0}
        self.spec = spec

    @classmethod
    def from_gaussian(cls, g, spec=None):
        return cls({(0,) * g.dim: 1.0}, g.A, g.b, g.c, spec)

    def __call__(self, points):
        x = _as_points(points, self.dim)
        expo = -np.einsum("...i,ij,...j->...", x, self.A, x) + x @ self.b + self.c
        P = np.zeros(x.shape[:-1], dtype=complex)
        for e, coef in self.poly.items():
            term = np.full(x.shape[:-1], coef, dtype=complex)
            for i, k in enumerate(e):
                if k:
                    term = term * x[..., i] ** k
            P = P + term
        return P * np.exp(expo)

    def partial(self, axis):
        # d/dx_axis of P e^phi = (dP + P dphi) e^phi,  dphi = -2 (A x)_axis + b_axis
        out = {}

        def add(e, v):
            out[e] = out.get(e, 0) + v

        grad = -2 * self.A[axis]
        for e, coef in self.poly.items():
            if e[axis]:
                de = list(e)
                de[axis] -= 1
                add(tuple(de), coef * e[axis])
            add(e, coef * self.b[axis])
            for j in range(self.dim):
                if grad[j] != 0:
                    ej = list(e)
                    ej[j] += 1
                    add(tuple(ej), coef * grad[j])
        return PolyExp(out, self.A, self.b, self.c)

    def times(self, other):
        poly = {}
        for e1, c1 in self.poly.items():
            for e2, c2 in other.poly.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                poly[e] = poly.get(e, 0) + c1 * c2
        return PolyExp(poly, self.A + other.A, self.b + other.b, self.c + other.c)

    def __mul__(self, other):
        if isinstance(other, PolyExp):
            return self.times(other)
        return super().__mul__(other)

    def is_gaussian(self):
        return list(self.poly) == [(0,) * self.dim]

    def as_gaussian(self):
        """The exponential part as a :class:`Gaussian` (polynomial must be constant)."""
        if not self.is_gaussian():
            raise UnsupportedFamily("polynomial prefactor is not constant")
        coef = self.poly[(0,) * self.dim]
        return Gaussian(self.A, self.b, self.c + np.log(coef))


def _hermite_1d(k, q, hbar):
    """L2-normalized Hermite functions ``psi_0..psi_k`` at ``q`` (rows)."""
    q = np.asarray(q, dtype=float)
    xi = q / np.sqrt(hbar)
    out = np.empty((k + 1,) + q.shape)
    out[0] = (np.pi * hbar) ** -0.25 * np.exp(-0.5 * xi**2)
    if k >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, k):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_functions(K, q, hbar=1.0):
    """Array of shape (K, len(q)) with ``psi_0..psi_{K-1}`` on ``q``."""
    return _hermite_1d(K - 1, q, hbar)


class Hermite(Family):
    """``coef * prod_i psi_{k_i}(x_i)`` with ``hbar``-scaled Hermite functions."""

    def __init__(self, ks, hbar=1.0, coef=1.0, spec=None):
        self.ks = tuple(int(k) for k in np.atleast_1d(ks))
        self.dim = len(self.ks)
        self.hbar = float(hbar)
        self.coef = complex(coef)
        self.spec = spec

    def __call__(self, points):
        x = _as_points(points, self.dim)
        out = np.full(x.shape[:-1], self.coef, dtype=complex)
        for i, k in enumerate(self.ks):
            if k < 0:
                return np.zeros(x.shape[:-1], dtype=complex)
            out = out * _hermite_1d(k, x[..., i], self.hbar)[k]
        return out

    def partial(self, axis):
        # psi_k' = (sqrt(k) psi_{k-1} - sqrt(k+1) psi_{k+1}) / sqrt(2 hbar)
        k = self.ks[axis]
        s = 1 / np.sqrt(2 * self.hbar)
        lo = list(self.ks)
        hi = list(self.ks)
        lo[axis] -= 1
        hi[axis] += 1
        terms = [Hermite(hi, self.hbar, -self.coef * s * np.sqrt(k + 1))]
        if k > 0:
            terms.append(Hermite(lo, self.hbar, self.coef * s * np.sqrt(k)))
        return Sum(terms)


class Sum(Family):
    """Linear combination of families."""

    def __init__(self, terms, weights=None, spec=None):
        self.terms = list(terms)
        self.weights = [1.0] * len(self.terms) if weights is None else [complex(w) for w in weights]
        self.dim = self.terms[0].dim
        self.spec = spec

    def __call__(self, points):
        out = 0
        for w, t in zip(self.weights, self.terms):
            out = out + w * t(points)
        return out

    def partial(self, axis):
        return Sum([t.partial(axis) for t in self.terms], self.weights)


class Product(Family):
    """Pointwise product of two families."""

    def __init__(self, f, g, spec=None):
        self.f, self.g = f, g
        self.dim = f.dim
        self.spec = spec

    def __call__(self, points):
        return self.f(points) * self.g(points)

    def partial(self, axis):
        return Sum([Product(self.f.partial(axis), self.g), Product(self.f, self.g.partial(axis))])


# ---------------------------------------------------------------------------
# constructors


def gaussian(center, inv_cov, amplitude=1.0):
    """``amplitude * exp(-(x - center).inv_cov (x - center))``.

    ``inv_cov`` may be complex symmetric with positive definite real part.
    Complex entries serialize as ``[re, im]`` pairs.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    inv_cov = np.atleast_2d(_coef_array(inv_cov))
    if inv_cov.shape == (1, 1) and center.size > 1:
        inv_cov = inv_cov[0, 0] * np.eye(center.size)
    if not np.any(inv_cov.imag):
        inv_cov = inv_cov.real
    amp = complex(amplitude)
    spec = {"family": "gaussian", "center": center.tolist(),
            "inv_cov": inv_cov.tolist() if inv_cov.dtype.kind == "f"
            else [[[v.real, v.imag] for v in row] for row in inv_cov],
            "amplitude": amp.real if amp.imag == 0 else [amp.real, amp.imag]}
    return PolyExp.from_gaussian(Gaussian.centered(center, inv_cov, amplitude), spec)


def chirp(Q):
    """``exp(i x.Q x)`` for real symmetric ``Q``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if np.max(np.abs(Q - Q.T)) > 1e-12:
        raise UnsupportedFamily("chirp matrix must be symmetric")
    spec = {"family": "chirp", "Q": Q.tolist()}
    return PolyExp({(0,) * Q.shape[0]: 1.0}, -1j * Q, spec=spec)


def polynomial(coeffs, dim=None):
    """Polynomial from ``{exponents: coefficient}``.

    A flat list ``[c0, c1, ...]`` is accepted for ``dim == 1``. Serialized
    form: ``[[exponents, coefficient], ...]``.
    """
    if isinstance(coeffs, dict):
        poly = {tuple(np.atleast_1d(k).tolist()): v for k, v in coeffs.items()}
    elif len(coeffs) and isinstance(coeffs[0], (list, tuple)) and len(coeffs[0]) == 2 \
            and isinstance(coeffs[0][0], (list, tuple)):
        poly = {tuple(e): c for e, c in coeffs}
    else:
        poly = {(k,): c for k, c in enumerate(coeffs)}
    dim = dim or len(next(iter(poly)))
    poly = {tuple(int(v) for v in k): complex(c) for k, c in poly.items()}
    spec = {"family": "polynomial",
            "coeffs": [[list(k), [c.real, c.imag] if c.imag else c.real] for k, c in sorted(poly.items())]}
    return PolyExp(poly, np.zeros((dim, dim)), spec=spec)


def constant(value=1.0, dim=1):
    return polynomial({(0,) * dim: value}, dim)


def hermite(k, hbar=1.0):
    """Tensor-product Hermite function; ``k`` an int (d = 1) or tuple."""
    ks = tuple(int(v) for v in np.atleast_1d(k))
    return Hermite(ks, hbar, spec={"family": "hermite", "k": list(ks), "hbar": float(hbar)})


def oscillator_symbol():
    """``(q^2 + p^2) / 2`` on phase space."""
    return polynomial({(2, 0): 0.5, (0, 2): 0.5})


def _coef(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return v


def _coef_array(a):
    """Array from nested lists whose leaves are numbers or ``[re, im]`` pairs."""
    arr = np.asarray(a)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


def family_from_dict(spec):
    """Rebuild a family from its serialized form."""
    name = spec.get("family")
    if name == "gaussian":
        return gaussian(spec["center"], spec["inv_cov"], _coef(spec.get("amplitude", 1.0)))
    if name == "chirp":
        return chirp(spec["Q"])
    if name == "polynomial":
        coeffs = spec["coeffs"]
        if coeffs and isinstance(coeffs[0], (list, tuple)):
            coeffs = [[e, _coef(c)] for e, c in coeffs]
        return polynomial(coeffs, spec.get("dim"))
    if name == "hermite":
        return hermite(spec["k"], spec.get("hbar", 1.0))
    if name in ("sum", "product"):
        parts = [family_from_dict(t) for t in spec["terms"]]
        if name == "sum":
            weights = [_coef(w) for w in spec.get("weights", [1.0] * len(parts))]
            f = Sum(parts, weights)
        else:
            f = parts[0]
            for g in parts[1:]:
                f = Product(f, g)
        f.spec = spec
        return f
    raise UnsupportedFamily(f"unknown family {name!r}")


def multi_indices(dim, M):
    """All multi-indices with ``|beta| <= M`` in graded order."""
    out = []
    for total in range(M + 1):
        for beta in itertools.product(range(total + 1), repeat=dim):
            if sum(beta) == total:
                out.append(beta)
    return out


