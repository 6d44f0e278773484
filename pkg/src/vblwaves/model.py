"""Viscous balance laws ``u_t + f(u)_x = u_xx + g(u)`` and their structural hypotheses.

A model is a pair of exact expression trees.  Derivatives ``f'..f''''`` and
``g'..g'''`` are built once, symbolically, and cached on the (immutable)
:class:`ModelSpec`.

The hypothesis checker certifies, as far as floating point allows:

* A1/A2 regularity (denominators bounded away from zero),
* A2 Fisher-KPP sign structure of ``g`` (interval arithmetic on subdivided
  intervals),
* A3 existence of the balance point ``u_* < 0`` with ``int_{u_*}^1 g = 0``,
* A4 genericity of the Hopf point,
* A5/A6 non-degeneracy and saddle conditions of the homoclinic loop.

Every verdict carries the distance of the tested quantity from its
threshold (``margin``) and a numerical error bound; whenever the margin is
below ten times the error bound the verdict is ``"undetermined"``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.integrate import quad_vec

from . import expr as ex
from .errors import DomainError, NotFound, ParseError, QuadratureFailure

U_MAX = 50.0
TIE_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class ModelSpec:
    name: str
    f: ex.Expr
    g: ex.Expr
    df: tuple = field(init=False, repr=False)
    dg: tuple = field(init=False, repr=False)

    def __post_init__(self):
        df = [self.f]
        for _ in range(4):
            df.append(df[-1].diff())
        dg = [self.g]
        for _ in range(3):
            dg.append(dg[-1].diff())
        object.__setattr__(self, "df", tuple(df))
        object.__setattr__(self, "dg", tuple(dg))

    def eval(self, which: str, order: int, u):
        """Evaluate the ``order``-th derivative of ``f`` or ``g`` at ``u``."""
        if which == "f":
            table = self.df
        elif which == "g":
            table = self.dg
        else:
            raise ValueError(f"which must be 'f' or 'g', got {which!r}")
        if not 0 <= order < len(table):
            raise ValueError(f"derivative order {order} unavailable for {which} (max {len(table) - 1})")
        return table[order].evaluate(u)

    # shorthands used all over the numerics
    def fp(self, u):
        return self.df[1].evaluate(u)

    def fpp(self, u):
        return self.df[2].evaluate(u)

    def gfun(self, u):
        return self.g.evaluate(u)

    def gp(self, u):
        return self.dg[1].evaluate(u)

    def to_json(self):
        return {"name": self.name, "f": self.f.to_prefix(), "g": self.g.to_prefix()}


def eval(model: ModelSpec, which: str, order: int, u):  # noqa: A001 - operation name
    return model.eval(which, order, u)


# ------------------------------------------------------------- built-ins

def _builtin(name):
    u = ex.U
    if name == "burgers-fisher":
        return ModelSpec(name, 0.5 * u**2, u - u**2)
    if name == "logistic-buckley-leverett":
        return ModelSpec(name, u**2 / (u**2 + 0.5 * (1 - u) ** 2), u - u**2)
    if name == "modified-burgers-fisher":
        return ModelSpec(name, 0.25 * u**4 - (1 / 3) * u**3, u - u**4)
    raise KeyError(name)


BUILTINS = ("burgers-fisher", "logistic-buckley-leverett", "modified-burgers-fisher")


def builtin(name: str) -> ModelSpec:
    try:
        return _builtin(name)
    except KeyError:
        raise KeyError(f"unknown built-in model {name!r}; choose from {', '.join(BUILTINS)}") from None


def model_from_json(obj, source="model") -> ModelSpec:
    if not isinstance(obj, dict):
        raise ParseError("model must be a JSON object with keys name, f, g", path=source)
    missing = [k for k in ("f", "g") if k not in obj]
    if missing:
        raise ParseError(f"missing key(s) {missing}", path=source)
    name = obj.get("name", "custom")
    if not isinstance(name, str):
        raise ParseError("name must be a string", path=f"{source}.name")
    return ModelSpec(name, ex.from_prefix(obj["f"], "f"), ex.from_prefix(obj["g"], "g"))


def load_model(ref: str) -> ModelSpec:
    """Resolve a built-in name or a path to a JSON model file."""
    if ref in BUILTINS:
        return builtin(ref)
    path = Path(ref)
    if not path.exists():
        raise ParseError(f"{ref!r} is neither a built-in model nor an existing file")
    text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return model_from_json(obj, source=str(path))


# ------------------------------------------------------------ quadrature

@lru_cache(maxsize=8)
def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def integrate_g(model: ModelSpec, a, b, n=40):
    """Composite Gauss-Legendre value of ``int_a^b g`` (broadcast over arrays).

    Returns ``(value, error)``; the error is the difference between the
    ``n`` and ``n/2`` point rules.  Both are exact for polynomial ``g`` of
    degree below ``n``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    span = b - a
    panels = max(1, int(np.ceil(np.max(np.abs(span)))))
    vals = []
    for m in (n, n // 2):
        s, w = _gauss(m)
        total = 0.0
        for p in range(panels):
            lo = a[..., None] + span[..., None] * (p / panels)
            width = span[..., None] / panels
            total = total + np.sum(w * model.gfun(lo + width * s), axis=-1) * (span / panels)
        vals.append(total)
    return vals[0], np.abs(vals[0] - vals[1])


def big_g(model: ModelSpec, u, ustar=None):
    """``G(u) = int_u^1 g(s) ds`` with anchoring that avoids cancellation near ``u_*``.

    For ``u`` close to ``u_*`` the identity ``G(u_*) = 0`` is used, so that
    ``G(u) = -int_{u_*}^u g``; elsewhere the integral is taken from ``u``
    to 1 directly.
    """
    u = np.asarray(u, dtype=float)
    if ustar is None:
        return integrate_g(model, u, np.ones_like(u))
    near = u < 0.5 * ustar
    val, err = integrate_g(model, u, np.ones_like(u))
    if np.any(near):
        v2, e2 = integrate_g(model, np.full_like(u, ustar), u)
        val = np.where(near, -v2, val)
        err = np.where(near, e2, err)
    return val, err


def _g_scale(model, lo, hi):
    xs = np.linspace(lo, hi, 201)
    return max(1.0, float(np.max(np.abs(model.gfun(xs)))))


def find_ustar(model: ModelSpec, u_max: float = U_MAX) -> float:
    """Balance point ``u_* < 0`` of the reaction, ``int_{u_*}^1 g = 0``.

    A sign change of ``G`` is bracketed on ``[-u_max, 0)``, bisected to
    width ``1e-13`` and polished by two Newton steps (``G' = -g``).
    """
    def G(x):
        return float(big_g(model, x)[0])

    grid = -np.geomspace(1e-3, u_max, 400)
    prev_x, prev_v = 0.0, G(0.0)
    if not prev_v > 0:
        raise NotFound("int_0^1 g <= 0; no balance point on the negative axis")
    lo = hi = None
    for x in grid:
        v = G(x)
        if v < 0:
            lo, hi = x, prev_x
            break
        prev_x, prev_v = x, v
    if lo is None:
        raise NotFound(f"no sign change of int_u^1 g on [-{u_max}, 0)")
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if G(mid) < 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(2):
        dg = -float(model.gfun(x))
        if dg != 0:
            step = G(x) / dg
            if abs(step) < 1e-10:
                x -= step
    scale = _g_scale(model, x, 1.0)
    if abs(G(x)) > 1e-12 * scale:
        raise NotFound(f"balance residual {G(x):.3e} exceeds tolerance")
    return float(x)


def gamma(model: ModelSpec, u, ustar=None):
    """``sqrt(2 int_u^1 g)``, defined on ``[u_*, 1]``."""
    if ustar is None:
        ustar = find_ustar(model)
    uu = np.asarray(u, dtype=float)
    slack = 1e-14 * (1 - ustar)
    if np.any(uu < ustar - slack) or np.any(uu > 1 + slack):
        raise DomainError(f"gamma defined on [u_*, 1] = [{ustar}, 1]")
    val, _ = big_g(model, np.clip(uu, ustar, 1.0), ustar)
    out = np.sqrt(2 * np.maximum(val, 0.0))
    return float(out) if np.ndim(u) == 0 else out


@dataclass
class LoopIntegrals:
    """The four gamma-weighted integrals over ``[u_*, 1]`` and their error estimates."""

    ustar: float
    gamma: float
    fp_gamma: float
    arc: float
    fp_arc: float
    errors: np.ndarray


def loop_integrals(model: ModelSpec, ustar=None) -> LoopIntegrals:
    r"""Integrate ``gamma``, ``f' gamma``, ``sqrt(1+gamma'^2)``, ``f' sqrt(1+gamma'^2)``.

    With ``u = u_* + t^2`` the square-root behaviour of ``gamma`` at
    ``u_*`` (where ``gamma'`` is unbounded) becomes smooth in ``t``.  The
    integrand is written through ``h = gamma / t`` which stays bounded
    away from zero at ``t = 0``.  Adaptive Gauss-Kronrod (15 point).
    """
    if ustar is None:
        ustar = find_ustar(model)
    T = math.sqrt(1.0 - ustar)

    def integrand(t):
        u = ustar + t * t
        G, _ = big_g(model, np.array([u]), ustar)
        G = max(float(G[0]), 0.0)
        if t == 0.0:
            h = math.sqrt(max(-2.0 * float(model.gfun(ustar)), 0.0))
        else:
            h = math.sqrt(2.0 * G) / t
        gu = float(model.gfun(u))
        fpu = float(model.fp(u))
        two_t_gamma = 2.0 * t * t * h
        if h == 0.0:
            arc = 2.0 * t
        else:
            arc = math.sqrt(4.0 * t * t + (2.0 * gu / h) ** 2)
        return np.array([two_t_gamma, fpu * two_t_gamma, arc, fpu * arc])

    res, err = quad_vec(integrand, 0.0, T, epsabs=1e-14, epsrel=1e-13,
                        quadrature="gk15", norm="max", limit=2000)
    # quad_vec reports a single (max-norm) bound; apply it to every component
    errs = np.full(4, float(err))
    return LoopIntegrals(ustar, res[0], res[1], res[2], res[3], errs)


def melnikov_speed(model: ModelSpec, ustar=None, return_error=False):
    """Speed ``c_1 = int f' gamma / int gamma`` selecting the homoclinic loop."""
    li = loop_integrals(model, ustar)
    c1 = li.fp_gamma / li.gamma
    rel = li.errors[1] / max(abs(li.fp_gamma), 1e-300) + li.errors[0] / li.gamma
    if abs(li.fp_gamma) < 1e-14:
        rel = li.errors[1] / li.gamma + li.errors[0] / li.gamma
    if rel > 1e-8:
        raise QuadratureFailure(f"Melnikov quadrature relative error {rel:.2e} > 1e-8")
    return (c1, rel * max(abs(c1), 1e-300)) if return_error else c1


# --------------------------------------------------------- certification

@dataclass
class Verdict:
    name: str
    status: str
    margin: float
    error_bound: float
    detail: str = ""
    checks: list = field(default_factory=list)

    def to_dict(self):
        d = {"status": self.status, "margin": _num(self.margin),
             "error_bound": _num(self.error_bound), "detail": self.detail}
        if self.checks:
            d["checks"] = [c.to_dict() | {"name": c.name} for c in self.checks]
        return d


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _decide(ok, margin, err, name, detail=""):
    if not math.isfinite(margin) and ok:
        return Verdict(name, "holds", margin, err, detail)
    if margin < TIE_FACTOR * err:
        return Verdict(name, "undetermined", margin, err, detail)
    return Verdict(name, "holds" if ok else "fails", margin, err, detail)


def _combine(name, checks, detail=""):
    statuses = [c.status for c in checks]
    if "fails" in statuses:
        status = "fails"
    elif "undetermined" in statuses:
        status = "undetermined"
    else:
        status = "holds"
    margin = min((c.margin for c in checks), default=math.inf)
    err = max((c.error_bound for c in checks), default=0.0)
    return Verdict(name, status, margin, err, detail, list(checks))


def prove_sign(e: ex.Expr, a: float, b: float, sign: int, name: str, max_pieces=20000):
    """Certify ``sign * e > 0`` on ``[a, b]`` by interval subdivision."""
    stack = [(a, b)]
    pieces = 0
    margin = math.inf
    pad = 0.0
    while stack:
        lo, hi = stack.pop()
        pieces += 1
        try:
            enc = e.enclose(ex.Interval(lo, hi))
            bound = enc.lo if sign > 0 else -enc.hi
        except DomainError:
            bound = -math.inf
        if bound > 0:
            margin = min(margin, bound)
            pad = max(pad, 4 * np.spacing(max(abs(enc.lo), abs(enc.hi))))
            continue
        mid = 0.5 * (lo + hi)
        try:
            vm = float(e.evaluate(mid))
        except DomainError:
            vm = math.nan
        if math.isfinite(vm) and sign * vm <= 0:
            return Verdict(name, "fails", 0.0, 0.0, f"witness u={mid!r}, value={vm!r}")
        if pieces >= max_pieces or hi - lo < 1e-12 * max(1.0, abs(b - a)):
            return Verdict(name, "undetermined", 0.0, 0.0,
                           f"could not separate from zero near u={mid!r}")
        stack.append((mid, hi))
        stack.append((lo, mid))
    return Verdict(name, "holds", margin, pad, f"proved on [{a}, {b}] with {pieces} pieces")


def _sign_change_root(den, roots, scale):
    # a strict sign change proves a real zero, whatever the root finder's noise
    for r in roots[np.abs(roots.imag) < 1e-8 * scale].real:
        d = 1e-6 * max(1.0, abs(r))
        a, b = float(den.evaluate(r - d)), float(den.evaluate(r + d))
        if a * b < 0:
            return float(r)
    return None


def _denominator_checks(e: ex.Expr, label: str, u_max: float):
    checks = []
    for i, den in enumerate(e.denominators()):
        nm = f"{label} denominator {i}"
        if den.is_polynomial():
            roots = den.to_polynomial().roots()
            scale = max(1.0, float(np.max(np.abs(roots)))) if len(roots) else 1.0
            if len(roots) == 0:
                checks.append(Verdict(nm, "holds", math.inf, 0.0, "constant denominator"))
                continue
            im = float(np.min(np.abs(roots.imag)))
            witness = _sign_change_root(den, roots, scale)
            if witness is not None:
                checks.append(Verdict(nm, "fails", 0.0, 0.0, f"sign change across u={witness!r}"))
                continue
            checks.append(_decide(im > 0, im, 1e-10 * scale, nm,
                                  "no real root (global)" if im > 0 else "real root"))
        else:
            lo_ok = prove_sign(den, -u_max, 2.0, +1, nm)
            if lo_ok.status != "holds":
                lo_ok = prove_sign(den, -u_max, 2.0, -1, nm)
            lo_ok.detail = "nonvanishing on working interval: " + lo_ok.detail
            checks.append(lo_ok)
    return checks


@dataclass
class HypothesisReport:
    model: str
    verdicts: dict
    ustar: float = None
    a0bar: float = None
    c0: float = None
    c1: float = None
    c1_error: float = None
    a5: tuple = None
    a6: tuple = None
    u_max: float = U_MAX
    notes: list = field(default_factory=list)

    @property
    def status(self):
        st = [v.status for v in self.verdicts.values()]
        if "fails" in st:
            return "fails"
        if "undetermined" in st:
            return "undetermined"
        return "holds"

    def to_dict(self):
        return {
            "model": self.model,
            "status": self.status,
            "hypotheses": {k: v.to_dict() for k, v in self.verdicts.items()},
            "witness": {
                "u_star": _num(self.ustar), "a0_bar": _num(self.a0bar),
                "c0": _num(self.c0), "c1": _num(self.c1), "c1_error": _num(self.c1_error),
                "A5": None if self.a5 is None else {"left": _num(self.a5[0]), "right": _num(self.a5[1])},
                "A6": None if self.a6 is None else {"left": _num(self.a6[0]), "right": _num(self.a6[1])},
            },
            "u_max": self.u_max,
            "notes": self.notes,
        }


def a0_bar(model: ModelSpec):
    gp0 = float(model.gp(0.0))
    if gp0 <= 0:
        raise DomainError("genericity constant needs g'(0) > 0")
    return float(model.eval("f", 3, 0.0)) - float(model.fpp(0.0)) * float(model.eval("g", 2, 0.0)) / math.sqrt(gp0)


def check_hypotheses(model: ModelSpec, u_max: float = U_MAX) -> HypothesisReport:
    V = {}
    notes = [f"sign conditions on (-inf, 0) checked on [-{u_max}, 0) plus behaviour at -inf"]

    V["A1"] = _combine("A1", _denominator_checks(model.f, "f", u_max) or
                       [Verdict("f polynomial", "holds", math.inf, 0.0, "polynomial")],
                       "f is C^4 wherever its denominators do not vanish")

    g, gp = model.g, model.dg[1]
    scale = _g_scale(model, -2.0, 2.0)
    checks = _denominator_checks(g, "g", u_max)
    eps = 1e-15 * scale
    for pt in (0.0, 1.0):
        val = abs(float(g.evaluate(pt)))
        # equality: no distance-to-threshold, so the margin is not informative
        checks.append(Verdict(f"g({pt:g}) = 0", "holds" if val <= 1e3 * eps else "fails",
                              math.inf if val <= 1e3 * eps else 0.0, eps, f"|g({pt:g})| = {val!r}"))
    gp0, gp1 = float(gp.evaluate(0.0)), float(gp.evaluate(1.0))
    checks.append(_decide(gp0 > 0, abs(gp0), eps, "g'(0) > 0", repr(gp0)))
    checks.append(_decide(gp1 < 0, abs(gp1), eps, "g'(1) < 0", repr(gp1)))
    # near the zeros use monotonicity: g(0) = g(1) = 0 and g' has a fixed sign
    d = 0.1
    while d > 1e-6:
        c0v = prove_sign(gp, -d, d, +1, "g' > 0 near 0")
        c1v = prove_sign(gp, 1 - d, 1 + d, -1, "g' < 0 near 1")
        if c0v.status == "holds" and c1v.status == "holds":
            break
        d /= 2
    checks += [c0v, c1v]
    checks.append(prove_sign(g, d, 1 - d, +1, "g > 0 on (0,1)"))
    checks.append(prove_sign(g, -u_max, -d, -1, f"g < 0 on [-{u_max}, 0)"))
    if g.is_polynomial():
        p = g.to_polynomial().trim()
        lead = p.coef[-1] * (-1) ** p.degree()
        real_far = [r.real for r in p.roots() if abs(r.imag) <= 1e-9 * max(1, abs(r)) and r.real < -u_max]
        ok = lead < 0 and not real_far
        checks.append(Verdict("g < 0 beyond -U_max", "holds" if ok else "fails", abs(lead), 0.0,
                              f"leading coefficient sign at -inf {np.sign(lead):+.0f}, "
                              f"real roots below -U_max: {real_far}"))
    else:
        checks.append(Verdict("g < 0 beyond -U_max", "undetermined", 0.0, 0.0,
                              "non-polynomial g: undetermined beyond -U_max"))
    V["A2"] = _combine("A2", checks, "Fisher-KPP structure of g")

    rep = HypothesisReport(model.name, V, u_max=u_max, notes=notes)
    rep.c0 = float(model.fp(0.0))

    try:
        ustar = find_ustar(model, u_max)
        V["A3"] = Verdict("A3", "holds", abs(ustar), 1e-13, f"u_* = {ustar!r}")
        rep.ustar = ustar
    except NotFound as exc:
        V["A3"] = Verdict("A3", "fails", 0.0, 0.0, str(exc))
        ustar = None

    try:
        a0 = a0_bar(model)
        err = 1e-14 * (1 + abs(float(model.eval("f", 3, 0.0))) +
                       abs(float(model.fpp(0.0)) * float(model.eval("g", 2, 0.0))))
        V["A4"] = _decide(a0 != 0, abs(a0), err, "A4", f"a0_bar = {a0!r}")
        rep.a0bar = a0
    except DomainError as exc:
        V["A4"] = Verdict("A4", "fails", 0.0, 0.0, str(exc))

    if V["A1"].status == "fails":
        for k in ("A5", "A6"):
            V[k] = Verdict(k, "undetermined", 0.0, 0.0, "loop integrals need f regular (A1)")
    elif ustar is not None:
        li = loop_integrals(model, ustar)
        e = li.errors
        left5, right5 = li.gamma * li.fp_arc, li.arc * li.fp_gamma
        err5 = (abs(li.gamma) * e[3] + abs(li.fp_arc) * e[0] + abs(li.arc) * e[1] + abs(li.fp_gamma) * e[2]
                + 1e-14 * (abs(left5) + abs(right5)))
        V["A5"] = _decide(left5 != right5, abs(left5 - right5), err5, "A5")
        fp1 = float(model.fp(1.0))
        left6, right6 = fp1 * li.gamma, li.fp_gamma
        err6 = abs(fp1) * e[0] + e[1] + 1e-14 * (abs(left6) + abs(right6))
        V["A6"] = _decide(left6 != right6, abs(left6 - right6), err6, "A6")
        rep.a5, rep.a6 = (left5, right5), (left6, right6)
        rep.c1 = li.fp_gamma / li.gamma
        rep.c1_error = (e[1] + abs(rep.c1) * e[0]) / li.gamma
    else:
        for k in ("A5", "A6"):
            V[k] = Verdict(k, "undetermined", 0.0, 0.0, "needs u_* from A3")
    return rep
