"""Property-suite runner.

Each suite returns a list of :class:`moyalkit.report.Check`. Reference
values come from closed forms (:mod:`moyalkit.gaussian`, Hermite
eigenrelations, direct scans), never from the code path under test.
"""

from dataclasses import dataclass, field

import numpy as np

from . import families as fam
from .gaussian import Gaussian, ground_state_wigner
from .gridfn import GridSpec, derivative, fourier, gs_norm, sample
from .multipliers import (
    DualElement,
    approx_identity_errors,
    extend_functional,
    multiplier_experiment,
    riemann_sequence,
    twisted_translate,
)
from .quantize import apply_op, op_matrix, wigner
from .report import Check
from .sequences import (
    check_conditions,
    check_subordination,
    check_weight_inequalities,
    log_weight,
    make_sequence,
    parse_sequence,
    weight_bruteforce,
)
from .starprod import (
    StarConfig,
    moyal,
    moyal_via_symplectic,
    pointwise_deviation,
    star_S,
    twisted_convolution,
)

SUITES = ("sequences", "gridfn", "starprod", "multipliers", "quantize")
S_DEFAULT = np.array([[0.0, 0.3], [0.3, 0.0]])

DEFAULT_TOLERANCES = {
    "roundtrip": 1e-10,
    "self_dual": 1e-8,
    "parseval": 1e-8,
    "derivative": 1e-7,
    "integral_identity": 1e-6,
    "backend_agreement": 1e-5,
    "associativity": 1e-6,
    "semiclassical_ratio": 0.1,
    "idempotency": 1e-6,
    "symplectic_identity": 1e-5,
    "approx_identity": 1e-2,
    "translation": 1e-7,
    "extension": 1e-6,
    "riemann": 1e-3,
    "oscillator": 1e-4,
    "homomorphism": 1e-4,
    "s_path": 1e-8,
    "hermitian": 1e-8,
    "trace": 1e-2,
    "wigner": 1e-6,
}


@dataclass
class RunConfig:
    """Grid, deformation and tolerance settings shared by all suites."""

    N: int = 128
    L: float = 12.0
    hbar: float = 1.0
    S: np.ndarray = field(default_factory=lambda: S_DEFAULT.copy())
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    a: str = "gevrey:0.5"
    b: str = "gevrey:0.5"
    N_max: int = 1024

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        for k, v in self.tolerances.items():
            if k not in DEFAULT_TOLERANCES:
                raise ValueError(f"unknown tolerance {k!r}")
            if not v > 0:
                raise ValueError(f"tolerance {k!r} must be positive")

    def sequences(self):
        return parse_sequence(self.a, self.N_max), parse_sequence(self.b, self.N_max)

    def tol(self, key):
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    @property
    def spec(self):
        return GridSpec.make(2, self.N, self.L)

    def to_dict(self):
        return {"N": self.N, "L": self.L, "hbar": self.hbar, "S": self.S.tolist(),
                "seed": self.seed, "a": self.a, "b": self.b, "N_max": self.N_max,
                "tolerances": {**DEFAULT_TOLERANCES, **self.tolerances}}


def random_gaussians(rng, count, L, dim=2):
    """Seeded Gaussians with centers in ``|c| <= L/4`` and unit amplitude.

    Inverse covariances are rotated diagonals with eigenvalues in
    ``[0.5, 1.5]``.
    """
    out = []
    for _ in range(count):
        c = rng.uniform(-L / 4, L / 4, dim)
        lam = rng.uniform(0.5, 1.5, dim)
        if dim == 2:
            t = rng.uniform(0, np.pi)
            R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
            P = R @ np.diag(lam) @ R.T
        else:
            P = np.diag(lam)
        out.append(fam.gaussian(c, P))
    return out


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _oracle(f):
    return f.as_gaussian()


def _closed(G, spec):
    pts = spec.points()
    return G(pts)


# ---------------------------------------------------------------------------
# sequences


def suite_sequences(cfg):
    checks = []
    worst = []
    for alpha in (0.5, 1.0):
        seq = make_sequence("gevrey", alpha, 64)
        check_conditions(seq.log_values)
        la = seq.log_values
        N = seq.N_max
        k, n = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
        ok = k + n <= N
        kn = np.where(ok, k + n, 0)
        # a_{k+n} <= K H^{k+n} a_k a_n on every admissible pair
        slack = np.log(seq.K) + kn * np.log(seq.H) + la[k] + la[n] - la[kn]
        worst.append(float(np.min(slack[ok])))
    checks.append(Check("sequences.growth_fit", bool(min(worst) >= -1e-9), min(worst), 0.0, min(worst)))

    ts = [0.0, 0.1, 1.0, 5.0, 20.0]
    fails = []
    for alpha, N in ((1.0, 64), (0.5, 1024)):
        rep = check_weight_inequalities(make_sequence("gevrey", alpha, N), ts)
        fails += [c for c in rep["checks"] if not c.passed]
    checks.append(Check("sequences.weight_inequalities", not fails, float(len(fails)), 0.0,
                        float(-len(fails)), {"failed": [c.name for c in fails]}))

    seq = make_sequence("gevrey", 1.0, 64)
    tgrid = np.linspace(0, 20, 256)
    lw, _ = log_weight(seq, tgrid)
    brute = np.array([weight_bruteforce(seq, t)[0] for t in tgrid])
    checks.append(Check.upper_bound("sequences.weight_bruteforce", np.max(np.abs(lw - brute)), 1e-12))
    checks.append(Check("sequences.weight_monotone", bool(np.all(np.diff(lw) >= 0) and lw[0] == 0),
                        float(np.min(np.diff(lw))), 0.0, float(np.min(np.diff(lw)))))

    g1, g2 = make_sequence("gevrey", 1.0, 64), make_sequence("gevrey", 0.5, 64)
    one = make_sequence("constant_one", None, 64)
    sub = [check_subordination(one, g1), check_subordination(g1, g1), check_subordination(g1, g2)]
    ok = sub[0].ok and (sub[0].C, sub[0].L) == (1.0, 1.0) and sub[1].ok and (sub[1].C, sub[1].L) == (1.0, 1.0) \
        and not sub[2].ok
    checks.append(Check("sequences.subordination", bool(ok), details={"results": [s.to_dict() for s in sub]}))
    return checks


# ---------------------------------------------------------------------------
# gridfn


def suite_gridfn(cfg):
    checks = []
    spec = cfg.spec
    G = Gaussian.centered([0.0, 0.0], 0.5 * np.eye(2))
    f = sample(fam.gaussian([0.0, 0.0], 0.5 * np.eye(2)), spec)
    F = fourier(f)
    back = fourier(F, "inverse")
    rt = _rel(back.samples, f.samples)
    sd = _rel(F.samples, _closed(G.fourier(), F.spec))
    checks.append(Check.upper_bound("gridfn.roundtrip", rt, cfg.tol("roundtrip")))
    checks.append(Check.upper_bound("gridfn.gaussian_self_dual", sd, cfg.tol("self_dual")))
    checks.append(Check.upper_bound("gridfn.parseval", abs(F.l2_norm() / f.l2_norm() - 1), cfg.tol("parseval")))

    s1 = GridSpec.make(1, 128, 10.0)
    x = s1.axis(0)
    d = derivative(sample(fam.gaussian([0.0], [[1.0]]), s1), (1,))
    checks.append(Check.upper_bound("gridfn.derivative", np.max(np.abs(d.samples + 2 * x * np.exp(-x**2))),
                                    cfg.tol("derivative")))

    a, b = cfg.sequences()
    g = sample(fam.gaussian([0.0], [[1.0]]), s1)
    vals = [gs_norm(g, a, b, A, 4.0, 4).value for A in (1.0, 2.0, 4.0)]
    checks.append(Check("gridfn.gs_norm_monotone_A", bool(vals[0] >= vals[1] >= vals[2]),
                        details={"values": vals}))
    return checks


# ---------------------------------------------------------------------------
# starprod


def suite_starprod(cfg):
    checks = []
    spec, hb = cfg.spec, cfg.hbar
    rng = np.random.default_rng(cfg.seed)
    pairs = [tuple(random_gaussians(rng, 2, cfg.L)) for _ in range(5)]

    worst_int, worst_agree = 0.0, 0.0
    for f, g in pairs:
        fs, gs = sample(f, spec), sample(g, spec)
        exact = (_oracle(f) * _oracle(g)).integral()
        res = {}
        for backend in ("fourier", "direct_quadrature"):
            res[backend] = moyal(fs, gs, StarConfig(hb, backend=backend))
            err = abs(res[backend].integral() - exact) / abs(exact)
            worst_int = max(worst_int, err)
        worst_agree = max(worst_agree, _rel(res["direct_quadrature"].samples, res["fourier"].samples))
    checks.append(Check.upper_bound("starprod.integral_identity", worst_int, cfg.tol("integral_identity")))
    checks.append(Check.upper_bound("starprod.backend_agreement", worst_agree, cfg.tol("backend_agreement")))

    f, g, h = (sample(q, spec) for q in random_gaussians(rng, 3, cfg.L))
    worst = 0.0
    for S in (np.zeros((2, 2)), cfg.S):
        c = StarConfig(hb, S)
        lhs = star_S(star_S(f, g, c), h, c)
        rhs = star_S(f, star_S(g, h, c), c)
        worst = max(worst, _rel(lhs.samples, rhs.samples))
    checks.append(Check.upper_bound("starprod.associativity", worst, cfg.tol("associativity")))

    f, g = sample(fam.gaussian([0.5, 0.0], np.eye(2)), spec), sample(fam.gaussian([0.0, -0.5], np.eye(2)), spec)
    d1 = pointwise_deviation(f, g, StarConfig(0.1))
    d2 = pointwise_deviation(f, g, StarConfig(0.2))
    ratio = d1 / d2
    checks.append(Check("starprod.semiclassical_ratio", bool(abs(ratio - 0.5) <= cfg.tol("semiclassical_ratio")),
                        ratio, cfg.tol("semiclassical_ratio"), cfg.tol("semiclassical_ratio") - abs(ratio - 0.5)))

    W0 = ground_state_wigner(hb)
    c_oracle = np.exp(W0.star(W0, hb).c - W0.c).real
    w = sample(fam.PolyExp.from_gaussian(W0), spec)
    ww = moyal(w, w, StarConfig(hb))
    c_num = float(np.vdot(w.samples, ww.samples).real / np.vdot(w.samples, w.samples).real)
    err = max(abs(c_num - c_oracle) / c_oracle, _rel(ww.samples, c_oracle * w.samples))
    checks.append(Check.upper_bound("starprod.idempotency", err, cfg.tol("idempotency"),
                                    c_oracle=c_oracle, c_numeric=c_num))

    f, g = (sample(q, spec) for q in random_gaussians(rng, 2, cfg.L))
    ref = moyal(f, g, StarConfig(hb))
    worst = max(_rel(moyal_via_symplectic(f, g, hb, side).samples, ref.samples) for side in ("left", "right"))
    checks.append(Check.upper_bound("starprod.symplectic_identity", worst, cfg.tol("symplectic_identity")))
    return checks


# ---------------------------------------------------------------------------
# multipliers


def suite_multipliers(cfg, experiments=True):
    checks = []
    spec, hb = cfg.spec, cfg.hbar
    s1 = 2.0
    e1 = sample(fam.gaussian([0, 0], np.eye(2) / s1**2, 1 / (np.pi * s1**2)), spec)
    g = sample(fam.gaussian([0.5, -0.3], [[1, 0.2], [0.2, 0.7]]), spec)
    ok, worst_end = True, 0.0
    for order in ("left", "right"):
        err = approx_identity_errors(e1, g, range(1, 33), hb, order)
        ok &= bool(np.all(np.diff(err) < 0))
        worst_end = max(worst_end, err[-1] / g.sup())
    tol = cfg.tol("approx_identity")
    checks.append(Check("multipliers.approx_identity", bool(ok and worst_end <= tol), worst_end, tol,
                        tol - worst_end, {"monotone": ok}))

    v = sample(fam.gaussian([0.2, 0.1], [[0.8, 0], [0, 1.1]]), spec)
    h = spec.h
    worst = 0.0
    for k in ((3, 0), (0, -5), (2, 7), (-8, 2)):
        xi = (k[0] * h[0], k[1] * h[1])
        lhs = twisted_convolution(v, twisted_translate(g, xi, hb), hb)
        rhs = twisted_translate(twisted_convolution(v, g, hb), xi, hb)
        worst = max(worst, _rel(lhs.samples, rhs.samples))
    checks.append(Check.upper_bound("multipliers.twisted_translation", worst, cfg.tol("translation")))

    f0a = sample(fam.gaussian([0, 0], np.eye(2), 1 / np.pi), spec)
    f0b = sample(fam.gaussian([0, 0], np.eye(2) / 0.49, 1 / (np.pi * 0.49)), spec)
    cases = [
        (fam.polynomial({(0, 0): 1, (2, 0): 1, (0, 2): 1}), fam.gaussian([0.3, 0], np.eye(2))),
        (fam.gaussian([0, 0.4], [[1, 0.3], [0.3, 1]]), fam.constant(1.0, 2)),
        (fam.chirp([[0.5, 0], [0, 0.25]]), fam.gaussian([0.0, -0.5], [[0.7, 0], [0, 1.3]])),
    ]
    w_pair, w_indep = 0.0, 0.0
    for uf, hf in cases:
        U, H = DualElement.from_family(uf, spec), sample(hf, spec)
        ra, rb = extend_functional(U, f0a, H), extend_functional(U, f0b, H)
        w_pair = max(w_pair, abs(ra.value - ra.direct_pairing) / abs(ra.direct_pairing))
        w_indep = max(w_indep, abs(ra.value - rb.value) / abs(ra.value))
    checks.append(Check.upper_bound("multipliers.extension_pairing", w_pair, cfg.tol("extension")))
    checks.append(Check.upper_bound("multipliers.extension_f0_independence", w_indep, cfg.tol("extension")))

    s = 0.08
    f0 = fam.gaussian([0, 0], np.eye(2) / s**2, 1 / (np.pi * s**2))
    H = sample(fam.gaussian([0.3, -0.2], [[0.5, 0.1], [0.1, 0.6]]), spec)
    errs = [float(np.max(np.abs(riemann_sequence(H, f0, n).samples - H.samples))) for n in (8, 16, 32)]
    tol = cfg.tol("riemann")
    dec = errs[0] > errs[1] > errs[2]
    checks.append(Check("multipliers.riemann", bool(dec and errs[2] <= tol), errs[2], tol, tol - errs[2],
                        {"errors": errs}))

    if experiments:
        f = fam.gaussian([0, 0], np.eye(2))
        a, b = cfg.sequences()
        poly = multiplier_experiment(fam.polynomial({(0, 0): 1, (2, 0): 1, (0, 2): 1}), f, StarConfig(hb), a=a, b=b)
        chirp = multiplier_experiment(fam.chirp(np.array([[0, 1], [1, 0]]) / hb), f, StarConfig(hb), a=a, b=b)
        trend = all(chirp["raw_A_trend"][o]["strictly_increasing"] for o in ("hf", "fh"))
        checks.append(Check("multipliers.polynomial_admits_constants", bool(poly["success"]),
                            details={"raw_A": poly["raw_A_trend"]}))
        checks.append(Check("multipliers.chirp_degrades", bool(trend and not chirp["success"]),
                            details={"raw_A": chirp["raw_A_trend"], "certified_anywhere": chirp["success"]}))
    return checks


# ---------------------------------------------------------------------------
# quantize


def suite_quantize(cfg):
    checks = []
    spec, hb = cfg.spec, cfg.hbar
    s1 = GridSpec.make(1, cfg.N, cfg.L)
    weyl = StarConfig(hb)
    Hm = op_matrix(sample(fam.oscillator_symbol(), spec), weyl, 16)
    err = np.max(np.abs(Hm.block(11) - np.diag(hb * (np.arange(11) + 0.5))))
    checks.append(Check.upper_bound("quantize.oscillator_spectrum", err, cfg.tol("oscillator")))

    rng = np.random.default_rng(cfg.seed + 1)
    f, g = (sample(q, spec) for q in random_gaussians(rng, 2, 1.0))
    c = StarConfig(hb, cfg.S)
    A, B = op_matrix(f, c, 16), op_matrix(g, c, 16)
    C = op_matrix(star_S(f, g, c), c, 16)
    prod = (A @ B).block(8)
    scale = max(np.max(np.abs(A.block(8))) * np.max(np.abs(B.block(8))), np.max(np.abs(prod)))
    err = np.max(np.abs(C.block(8) - prod)) / scale
    checks.append(Check.upper_bound("quantize.homomorphism", err, cfg.tol("homomorphism"), scale=scale))

    # closed-form transformed symbol of a Gaussian, quantized through the quadrature kernel
    G = _oracle(f.source)
    P = G.A.real
    M = np.linalg.inv(P) - 1j * hb * cfg.S
    center = np.linalg.solve(2 * P, G.b.real)
    Ts = fam.gaussian(center, np.linalg.inv(M), 1 / np.sqrt(np.linalg.det(P) * np.linalg.det(M)))
    T = op_matrix(sample(Ts, spec), weyl, 16)
    checks.append(Check.upper_bound("quantize.s_path_independence", np.max(np.abs(T.entries - A.entries)),
                                    cfg.tol("s_path")))

    checks.append(Check.upper_bound("quantize.hermitian", op_matrix(f, weyl, 16).hermiticity_defect(),
                                    cfg.tol("hermitian")))
    M32 = op_matrix(f, weyl, 32)
    tr = np.trace(M32.entries)
    exact = _oracle(f.source).integral() / (2 * np.pi * hb)
    checks.append(Check.upper_bound("quantize.trace", abs(tr - exact) / abs(exact), cfg.tol("trace")))

    h0 = sample(fam.hermite(0, hb), s1)
    W = wigner(h0, h0, hb, spec)
    ex = _closed(ground_state_wigner(hb), spec)
    checks.append(Check.upper_bound("quantize.wigner_ground_state", np.max(np.abs(W.samples - ex)),
                                    cfg.tol("wigner")))
    h1 = sample(fam.hermite(1, hb), s1)
    proj = sample(fam.gaussian([0, 0], np.eye(2) / hb, 2.0), spec)
    checks.append(Check.upper_bound("quantize.projector", np.max(np.abs(apply_op(proj, h1, weyl).samples)), 1e-3))
    return checks


RUNNERS = {
    "sequences": suite_sequences,
    "gridfn": suite_gridfn,
    "starprod": suite_starprod,
    "multipliers": suite_multipliers,
    "quantize": suite_quantize,
}


def run_suites(names, cfg):
    """Run the named suites (``"all"`` for every suite); returns a report dict."""
    if names in ("all", ["all"]):
        names = list(SUITES)
    if isinstance(names, str):
        names = [names]
    out = {}
    for name in names:
        if name not in RUNNERS:
            raise ValueError(f"unknown suite {name!r}")
        checks = RUNNERS[name](cfg)
        out[name] = {"checks": checks, "passed": all(c.passed for c in checks)}
    return {"config": cfg.to_dict(), "suites": out, "passed": all(s["passed"] for s in out.values())}
