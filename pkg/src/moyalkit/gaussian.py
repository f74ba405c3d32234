"""Closed-form calculus of complex Gaussians.

A :class:`Gaussian` is ``exp(-x.A x + b.x + c)`` on R^n with a complex
symmetric matrix ``A``. Star products, twisted and deformed convolutions and
Fourier transforms of such functions are again of this form and are computed
here by exact Gaussian integration. Nothing in this module touches a grid, so
it serves as an independent reference for the quadrature code paths.
"""

from dataclasses import dataclass

import numpy as np


def symplectic_matrix(d=1):
    """Standard symplectic matrix ``[[0, I], [-I, 0]]`` on R^{2d}."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def gaussian_integral(M, v):
    """Return ``log`` of the integral of ``exp(-y.M y / 2 + v.y)`` over R^m.

    ``M`` must be complex symmetric with positive definite real part; the
    square root of the determinant is taken eigenvalue by eigenvalue with the
    principal branch, which is the analytic continuation from real ``M``.
    """
    M = np.asarray(M, dtype=complex)
    v = np.asarray(v, dtype=complex)
    m = M.shape[0]
    eig = np.linalg.eigvals(M)
    log_det_sqrt = 0.5 * np.sum(np.log(eig))
    sol = np.linalg.solve(M, v)
    return 0.5 * m * np.log(2 * np.pi) - log_det_sqrt + 0.5 * v @ sol


def _sym(A):
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class Gaussian:
    """``exp(-x.A x + b.x + c)`` with complex ``A`` (n x n), ``b`` (n), ``c``."""

    A: np.ndarray
    b: np.ndarray
    c: complex = 0.0

    @classmethod
    def make(cls, A, b=None, c=0.0):
        A = _sym(np.atleast_2d(np.asarray(A, dtype=complex)))
        n = A.shape[0]
        b = np.zeros(n, dtype=complex) if b is None else np.asarray(b, dtype=complex)
        return cls(A, b, complex(c))

    @classmethod
    def centered(cls, center, inv_cov, amplitude=1.0):
        """``amplitude * exp(-(x - center).inv_cov (x - center))``."""
        P = _sym(np.atleast_2d(np.asarray(inv_cov, dtype=complex)))
        x0 = np.asarray(center, dtype=complex)
        b = 2 * P @ x0
        c = -x0 @ P @ x0 + np.log(complex(amplitude))
        return cls(P, b, c)

    @property
    def dim(self):
        return self.A.shape[0]

    def __call__(self, points):
        """Evaluate at ``points`` of shape (..., n)."""
        x = np.asarray(points, dtype=float)
        quad = np.einsum("...i,ij,...j->...", x, self.A, x)
        return np.exp(-quad + x @ self.b + self.c)

    def scale(self, factor):
        return Gaussian(self.A, self.b, self.c + np.log(complex(factor)))

    def conj(self):
        return Gaussian(self.A.conj(), self.b.conj(), np.conj(self.c))

    def __mul__(self, other):
        return Gaussian(self.A + other.A, self.b + other.b, self.c + other.c)

    def integral(self):
        """Integral over R^n."""
        return np.exp(gaussian_integral(2 * self.A, self.b) + self.c)

    def fourier(self):
        """Unitary transform ``(2 pi)^{-n/2} int exp(-i x.z) f(x) dx``."""
        n = self.dim
        Ainv = np.linalg.inv(self.A)
        # exponent: 1/4 (b - i z).Ainv (b - i z) + c
        A_new = 0.25 * Ainv
        b_new = -0.5j * Ainv @ self.b
        log_pref = -0.5 * n * np.log(2 * np.pi) + gaussian_integral(
            2 * self.A, np.zeros(n)
        )
        c_new = self.c + 0.25 * self.b @ Ainv @ self.b + log_pref
        return Gaussian(_sym(A_new), b_new, c_new)

    def _convolution_like(self, other, Phase, Cross, pref=0.0):
        """Integral over z of ``self(z) other(w - z) exp(i z.Phase z + i w.Cross z)``.

        Returns the result as a Gaussian in ``w``.
        """
        A, a, alpha = self.A, self.b, self.c
        B, b, beta = other.A, other.b, other.c
        M = 2 * (A + B) - 2j * _sym(Phase)
        # linear coefficient of z: C w + v0
        C = 2 * B + 1j * Cross.T
        v0 = a - b
        Minv = np.linalg.inv(M)
        n = self.dim
        A_new = B - 0.5 * C.T @ Minv @ C
        b_new = b + C.T @ Minv @ v0
        c_new = (
            alpha
            + beta
            + 0.5 * v0 @ Minv @ v0
            + gaussian_integral(M, np.zeros(n))
            + pref
        )
        return Gaussian(_sym(A_new), b_new, c_new)

    def twisted(self, other, theta):
        """``int u(z) v(w - z) exp((i theta/2) w.J z) dz``."""
        J = symplectic_matrix(self.dim // 2)
        return self._convolution_like(other, np.zeros_like(J), 0.5 * theta * J)

    def deformed(self, other, hbar, S):
        """``int u(z) v(w - z) exp(-(i hbar/2) z.(J+S)(w - z)) dz``."""
        J = symplectic_matrix(self.dim // 2)
        S = np.asarray(S, dtype=float)
        # -(hbar/2) [z.(J+S) w - z.S z]  (z.J z = 0)
        Phase = 0.5 * hbar * S
        Cross = -0.5 * hbar * (J + S).T
        return self._convolution_like(other, Phase, Cross)

    def convolve(self, other):
        n = self.dim
        return self._convolution_like(other, np.zeros((n, n)), np.zeros((n, n)))

    def star(self, other, hbar, S=None):
        """The S-ordered star product by direct Gaussian integration.

        ``(pi hbar)^{-2d} int f(x - (J+S) x') g(x - x'') exp((2i/hbar) x'.x'')``
        over ``(x', x'')``; ``S = None`` gives the Weyl-Moyal product.
        """
        n = self.dim
        d = n // 2
        J = symplectic_matrix(d)
        T = J if S is None else J + np.asarray(S, dtype=float)
        A, a, alpha = self.A, self.b, self.c
        B, b, beta = other.A, other.b, other.c
        eye = np.eye(n)
        M = 2 * np.block(
            [[T.T @ A @ T, -(1j / hbar) * eye], [-(1j / hbar) * eye, B]]
        )
        C = np.vstack([2 * T.T @ A, 2 * B])
        v0 = np.concatenate([-T.T @ a, -b])
        Minv = np.linalg.inv(M)
        A_new = A + B - 0.5 * C.T @ Minv @ C
        b_new = a + b + C.T @ Minv @ v0
        c_new = (
            alpha
            + beta
            + 0.5 * v0 @ Minv @ v0
            + gaussian_integral(M, np.zeros(2 * n))
            - 2 * d * np.log(np.pi * hbar)
        )
        return Gaussian(_sym(A_new), b_new, c_new)


def ground_state_wigner(hbar=1.0):
    """``(pi hbar)^{-1} exp(-(q^2 + p^2)/hbar)``."""
    return Gaussian.centered([0.0, 0.0], np.eye(2) / hbar, 1.0 / (np.pi * hbar))
