"""Defining sequences, their growth constants and the associated weight.

A defining sequence ``a_0, ..., a_{N_max}`` is stored through its logarithms
so that Gevrey sequences ``n^{alpha n}`` stay representable far beyond the
range of double precision. The weight ``w_a(t) = sup_n t^n / a_n`` is
evaluated in the same domain.

Because admissible sequences are logarithmically convex, the ratios
``m_n = a_n / a_{n-1}`` are nondecreasing and the maximizing index of
``t^n / a_n`` is the number of ratios strictly below ``t``. That turns the
supremum into a binary search and makes ties resolve to the smallest index.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConditionViolation,
    NoFeasibleConstant,
    TruncationError,
    ValidationError,
)
from .report import Check

KINDS = ("gevrey", "constant_one", "explicit")
REL_TOL = 1e-12


def _tol(x):
    return REL_TOL * max(1.0, float(np.max(np.abs(x))))


@dataclass(frozen=True)
class DefiningSequence:
    """Positive sequence together with its fitted growth constants.

    Attributes
    ----------
    kind : {"gevrey", "constant_one", "explicit"}
    alpha : float or None
        Gevrey order; ``None`` unless ``kind == "gevrey"``.
    log_values : ndarray
        ``ln a_n`` for ``n = 0..N_max``.
    H, K : float
        Constants with ``a_{k+n} <= K H^{k+n} a_k a_n``.
    """

    kind: str
    alpha: float | None
    log_values: np.ndarray = field(repr=False)
    H: float = 1.0
    K: float = 1.0

    @property
    def N_max(self):
        return len(self.log_values) - 1

    @property
    def values(self):
        """``a_n`` as floats; overflows to ``inf`` for very large entries."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    @property
    def log_ratios(self):
        """``ln(a_n / a_{n-1})`` for ``n = 1..N_max``."""
        return np.diff(self.log_values)

    def log_a(self, n):
        return float(self.log_values[n])

    def to_dict(self):
        out = {
            "kind": self.kind,
            "alpha": self.alpha,
            "N_max": self.N_max,
            "H": self.H,
            "K": self.K,
        }
        if self.kind == "explicit":
            out["values"] = self.values.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        kind = data["kind"]
        param = data.get("values") if kind == "explicit" else data.get("alpha")
        seq = make_sequence(kind, param, int(data.get("N_max", 64)), fit=False)
        if "H" in data and "K" in data:
            return replace(seq, H=float(data["H"]), K=float(data["K"]))
        return replace(seq, **dict(zip(("H", "K"), fit_growth_constants(seq))))


def _gevrey_logs(alpha, N_max):
    n = np.arange(N_max + 1, dtype=float)
    out = np.zeros(N_max + 1)
    out[1:] = alpha * n[1:] * np.log(n[1:])
    return out


def check_conditions(log_values):
    """Raise :class:`ConditionViolation` unless the basic conditions hold.

    Checks normalization and monotonicity, logarithmic convexity and
    the super-multiplicativity ``a_k a_n <= a_{k+n}``.
    """
    la = np.asarray(log_values, dtype=float)
    tol = _tol(la)
    if abs(la[0]) > tol:
        raise ConditionViolation("monotone", 0, "a_0 must equal 1")
    bad = np.nonzero(np.diff(la) < -tol)[0]
    if bad.size:
        raise ConditionViolation("monotone", int(bad[0]) + 1)
    conv = la[:-2] + la[2:] - 2 * la[1:-1]
    bad = np.nonzero(conv < -tol)[0]
    if bad.size:
        raise ConditionViolation("log_convex", int(bad[0]) + 1)
    n = len(la) - 1
    for k in range(1, n // 2 + 1):
        m = np.arange(k, n - k + 1)
        gap = la[k + m] - la[k] - la[m]
        bad = np.nonzero(gap < -tol)[0]
        if bad.size:
            raise ConditionViolation(
                "super_multiplicative", int(k + m[bad[0]]),
                f"a_{k} a_{int(m[bad[0]])} exceeds a_{int(k + m[bad[0]])}",
            )


def make_sequence(kind, param=None, N_max=64, fit=True):
    """Build a defining sequence.

    Parameters
    ----------
    kind : {"gevrey", "constant_one", "explicit"}
    param : float or sequence of float
        Gevrey order ``alpha`` or the explicit list ``a_0..a_{N_max}``.
    N_max : int
        Largest index; ignored for explicit lists, whose length decides.
    fit : bool
        Fit ``(H, K)`` right away.
    """
    if kind == "gevrey":
        alpha = float(param)
        if alpha < 0:
            raise ValidationError("Gevrey order must be nonnegative")
        if N_max < 32:
            raise ValidationError("N_max must be at least 32")
        la = _gevrey_logs(alpha, N_max)
    elif kind == "constant_one":
        if N_max < 32:
            raise ValidationError("N_max must be at least 32")
        alpha = None
        la = np.zeros(N_max + 1)
    elif kind == "explicit":
        alpha = None
        vals = np.asarray(param, dtype=float)
        if vals.ndim != 1 or len(vals) < 33:
            raise ValidationError("explicit sequences need at least 33 entries (N_max >= 32)")
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            raise ValidationError("explicit sequences must be positive and finite")
        la = np.log(vals)
    else:
        raise ValidationError(f"unknown sequence kind {kind!r}")
    check_conditions(la)
    seq = DefiningSequence(kind, alpha, la)
    if fit:
        H, K = fit_growth_constants(seq)
        seq = replace(seq, H=H, K=K)
    return seq


def _growth_excess(la):
    """``D_s = ln a_s - min_k (ln a_k + ln a_{s-k})`` for each ``s``."""
    n = len(la) - 1
    D = np.zeros(n + 1)
    for s in range(n + 1):
        k = np.arange(s + 1)
        D[s] = la[s] - np.min(la[k] + la[s - k])
    return D


def h_search_grid(seq):
    """Candidate growth bases for :func:`fit_growth_constants`."""
    if seq.kind == "gevrey":
        j = np.arange(17)
        return 2.0**seq.alpha * np.exp(seq.alpha * j / 8)
    if seq.kind == "constant_one":
        return np.ones(1)
    return 1.25 ** np.arange(33)


def fit_growth_constants(seq, K_cap=1e6):
    """Smallest ``K`` over the ``H`` grid such that the growth bound holds.

    Ties in ``K`` go to the smallest ``H``. A grid point counts as feasible
    only when its ``K`` does not exceed ``K_cap``; a finite list always admits
    some huge ``K``, so the cap is what separates sequences that keep
    geometric growth control from those that lose it.

    Returns
    -------
    H, K : float
    """
    D = _growth_excess(seq.log_values)
    s = np.arange(len(D))
    best = None
    tol = _tol(seq.log_values)
    for H in h_search_grid(seq):
        logK = float(np.max(D - s * np.log(H)))
        logK = 0.0 if logK <= tol else logK
        if best is None or logK < best[1] - 1e-14:
            best = (float(H), logK)
    H, logK = best
    if logK > np.log(K_cap):
        raise NoFeasibleConstant(
            f"growth constant exp({logK:.3g}) exceeds cap {K_cap:g} for every H on the grid"
        )
    return H, float(np.exp(logK))


@dataclass(frozen=True)
class WeightEvaluation:
    """Value of the weight at one argument.

    ``infinite`` is the explicit marker used for ``constant_one`` beyond 1;
    ``value`` is then ``inf`` and ``log_value`` too, and neither should be
    used in arithmetic.
    """

    t: float
    log_value: float
    argmax_n: int
    infinite: bool = False

    @property
    def value(self):
        if self.infinite:
            return np.inf
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_value))


def log_weight(seq, t, check=True):
    """Vectorized ``ln w_a(t)`` and the maximizing index.

    Parameters
    ----------
    seq : DefiningSequence
    t : array_like
        Nonnegative arguments.
    check : bool
        Raise :class:`TruncationError` when the maximizer reaches ``N_max``.

    Returns
    -------
    logw : ndarray
        ``+inf`` where the weight is infinite (``constant_one`` and ``t > 1``).
    argmax : ndarray of int
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValidationError("weight arguments must be nonnegative")
    if seq.kind == "constant_one":
        logw = np.where(t > 1, np.inf, 0.0)
        return logw, np.zeros(t.shape, dtype=int)
    with np.errstate(divide="ignore"):
        logt = np.log(t)
    n = np.searchsorted(seq.log_ratios, logt, side="left")
    logw = np.where(n > 0, n * np.where(t > 0, logt, 0.0) - seq.log_values[n], 0.0)
    if check and np.any(n >= seq.N_max):
        bad = float(np.max(t[n >= seq.N_max]))
        raise TruncationError(
            f"weight argmax reached N_max={seq.N_max} at t={bad:.6g}",
            quantity=bad,
            threshold=float(np.exp(seq.log_ratios[-1])),
        )
    return logw, n


def weight(seq, t):
    """Evaluate ``w_a(t) = max_n t^n / a_n`` at a single ``t``."""
    logw, n = log_weight(seq, np.asarray([t], dtype=float))
    inf = bool(np.isinf(logw[0]))
    return WeightEvaluation(float(t), float(logw[0]), int(n[0]), inf)


def weight_bruteforce(seq, t):
    """Direct scan over ``n`` of ``n ln t - ln a_n``; used as a reference."""
    la = seq.log_values
    n = np.arange(len(la))
    if t == 0:
        return 0.0, 0
    terms = n * np.log(t) - la
    k = int(np.argmax(terms))
    return float(terms[k]), k


def max_weight_argument(seq):
    """Largest ``t`` for which the weight is not truncated."""
    if seq.kind == "constant_one":
        return np.inf
    return float(np.exp(seq.log_ratios[-1]))


def _le_report(name, lhs, rhs):
    """Check ``lhs <= rhs`` elementwise in the log domain."""
    lhs = np.asarray(lhs, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float).ravel()
    both_inf = np.isinf(lhs) & np.isinf(rhs) & (lhs > 0) & (rhs > 0)
    with np.errstate(invalid="ignore"):
        margin = np.where(both_inf, 0.0, rhs - lhs)
    tol = REL_TOL * np.maximum(1.0, np.abs(np.where(np.isfinite(rhs), rhs, 0.0)))
    bad = margin < -tol
    worst = float(np.min(margin)) if margin.size else np.inf
    return Check(
        name, bool(not bad.any()), value=worst, threshold=0.0, margin=worst,
        details={"violations": int(bad.sum()), "instances": int(margin.size)},
    )


def check_weight_inequalities(seq, t_samples, A_grid=(0.5, 1.0, 2.0), n_max=8):
    """Check the standard inequalities of the weight on sampled arguments.

    Families, all evaluated with ``w = w_a`` in the log domain:

    ``scaled_subadditive``
        ``w((t1 + t2) / (A1 + A2)) <= w(t1 / A1) w(t2 / A2)``.
    ``midpoint``
        ``w((t1 + t2) / 2) <= w(t1) w(t2)``.
    ``squaring``
        ``w(t)^2 <= K w(H t)`` with the fitted ``(H, K)``.
    ``polynomial_shift``
        ``t^n w(t) <= K a_n w(H t)`` for ``n <= n_max``.

    Returns
    -------
    dict
        ``{"passed": bool, "checks": [Check, ...]}``; the worst margin of
        each family is its log-domain slack.
    """
    t = np.asarray(t_samples, dtype=float)
    A = np.asarray(A_grid, dtype=float)

    def lw(x):
        return log_weight(seq, x)[0]

    t1, t2 = np.meshgrid(t, t, indexing="ij")
    t1, t2 = t1[..., None, None], t2[..., None, None]
    A1, A2 = A[:, None], A[None, :]
    checks = [
        _le_report("scaled_subadditive", lw((t1 + t2) / (A1 + A2)), lw(t1 / A1) + lw(t2 / A2)),
        _le_report("midpoint", lw((t1 + t2) / 2), lw(t1) + lw(t2)),
        _le_report("squaring", 2 * lw(t), np.log(seq.K) + lw(seq.H * t)),
    ]
    n = np.arange(n_max + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logtn = np.where(n == 0, 0.0, n * np.log(t)[None, :])
    lhs = logtn + lw(t)[None, :]
    rhs = np.log(seq.K) + seq.log_values[: n_max + 1][:, None] + lw(seq.H * t)[None, :]
    checks.append(_le_report("polynomial_shift", lhs, rhs))
    return {"passed": all(c.passed for c in checks), "checks": checks}


def parse_sequence(text, N_max=64):
    """Sequence from ``gevrey:<alpha>``, ``constant_one`` or ``explicit:<a_0,a_1,...>``."""
    kind, _, arg = str(text).partition(":")
    try:
        if kind == "gevrey":
            return make_sequence("gevrey", float(arg), N_max)
        if kind == "constant_one":
            return make_sequence("constant_one", None, N_max)
        if kind == "explicit":
            return make_sequence("explicit", [float(v) for v in arg.split(",")], N_max)
    except ValueError as err:
        raise ValidationError(f"cannot parse sequence {text!r}: {err}") from err
    raise ValidationError(f"unknown sequence {text!r}; use gevrey:<alpha>, constant_one or explicit:<list>")


def is_nontrivial_sampled(seq):
    """Sampled surrogate for ``a_n^{1/n} -> infinity``.

    Compares ``a_N^{1/N}`` with ``a_{N/2}^{2/N}`` at ``N = N_max``.
    """
    N = seq.N_max
    return bool(seq.log_values[N] / N > seq.log_values[N // 2] / (N // 2))


@dataclass(frozen=True)
class SubordinationResult:
    """Outcome of the subordination scan ``b_n <= C L^n a_n``."""

    ok: bool
    C: float | None
    L: float | None
    head_C: float
    head_L: float
    reason: str = ""

    def to_dict(self):
        return {
            "ok": self.ok, "C": self.C, "L": self.L,
            "head_C": self.head_C, "head_L": self.head_L, "reason": self.reason,
        }


def check_subordination(b_seq, a_seq, C_cap=1e6):
    """Look for ``(C, L)`` with ``b_n <= C L^n a_n`` for all ``n <= N_max``.

    On a finite index range any geometric factor eventually wins, so a plain
    scan would accept every pair once ``L`` is large. The constants are
    therefore fitted on the head ``n <= N_max / 2`` (smallest ``C``, then
    smallest ``L``, from the grid ``L = 1.25^j``) and must then hold on the
    whole range. A pair whose ratio ``b_n / a_n`` outgrows every geometric
    sequence fails this tail check.
    """
    if b_seq.N_max != a_seq.N_max:
        raise ValidationError("sequences must share N_max")
    N = a_seq.N_max
    r = b_seq.log_values - a_seq.log_values
    n = np.arange(N + 1)
    head = n <= N // 2
    best = None
    tol = _tol(r)
    for L in 1.25 ** np.arange(33):
        logC = float(np.max(r[head] - n[head] * np.log(L)))
        logC = 0.0 if logC <= tol else logC
        if best is None or logC < best[1] - 1e-14:
            best = (float(L), logC)
    L, logC = best
    C = float(np.exp(logC))
    if logC > np.log(C_cap):
        return SubordinationResult(False, None, None, C, L, "no head fit below cap")
    tail = r - n * np.log(L) - logC
    if np.any(tail > tol):
        first = int(np.nonzero(tail > tol)[0][0])
        return SubordinationResult(False, None, None, C, L, f"tail fails at n={first}")
    return SubordinationResult(True, C, L, C, L)
