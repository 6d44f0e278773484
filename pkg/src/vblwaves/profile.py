"""Periodic traveling waves and the traveling pulse of a viscous balance law.

Profiles ``u = phi(x - c t)`` solve the planar system

    phi' = v,    v' = (f'(phi) - c) v - g(phi).

Periodic orbits are located by Newton's method on the Poincare return map
of the section ``{v = 0, phi < 0}`` crossed with ``v`` going from negative to
positive (the minimum of the profile); this also fixes the translation
gauge, ``x = 0`` at the minimum.  Sampled profiles are then polished by a
Fourier collocation Newton solve so that they are steady states of the
pseudo-spectral evolution to round-off.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from . import fourier
from .errors import (BlowUp, DegenerateOrbit, NoConvergence, NoHomoclinic, PeriodOverflow,
                     ResolutionExceeded, StiffnessFailure)
from .model import ModelSpec, a0_bar, find_ustar, melnikov_speed

RTOL = 1e-12
ATOL = 1e-14
BLOWUP = 1e6
TAIL_TOL = 1e-12
M_START = 32
M_CAP = 4096
EPS0 = 0.05
EPS1 = 0.05


@dataclass
class WaveProfile:
    x: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    L: float
    c: float
    epsilon: float
    family: str
    model: str = ""
    residual: float = float("nan")
    tail: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def M(self):
        return len(self.phi)

    @property
    def amplitude(self):
        return 0.5 * float(self.phi.max() - self.phi.min())

    def d2phi(self):
        return fourier.derivative(self.phi, self.L, 2)

    def evaluate(self, x):
        return fourier.evaluate(self.phi, self.L, x), fourier.evaluate(self.dphi, self.L, x)

    def metadata(self):
        return {
            "kind": "wave", "model": self.model, "family": self.family,
            "c": self.c, "L": self.L, "epsilon": self.epsilon, "M": self.M,
            "amplitude": self.amplitude, "sup_dphi": float(np.abs(self.dphi).max()),
            "residual": self.residual, "tail": self.tail, **self.meta,
        }

    def save(self, stem):
        stem = Path(stem)
        csv = stem.with_suffix(".csv")
        write_columns(csv, ["x", "phi", "dphi"], [self.x, self.phi, self.dphi])
        meta = self.metadata() | {"csv": csv.name}
        stem.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
        return stem.with_suffix(".json"), csv

    @classmethod
    def load(cls, path):
        path = Path(path)
        meta = json.loads(path.read_text())
        if meta.get("kind") != "wave":
            raise ValueError(f"{path} does not describe a periodic wave")
        cols = read_columns(path.parent / meta["csv"])
        extra = {k: v for k, v in meta.items() if k not in
                 ("kind", "model", "family", "c", "L", "epsilon", "M", "amplitude",
                  "sup_dphi", "residual", "tail", "csv")}
        return cls(cols["x"], cols["phi"], cols["dphi"], meta["L"], meta["c"], meta["epsilon"],
                   meta["family"], meta.get("model", ""), meta.get("residual", float("nan")),
                   meta.get("tail", float("nan")), extra)


def write_columns(path, names, cols):
    data = np.column_stack(cols)
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")


def read_columns(path):
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {n: data[:, i] for i, n in enumerate(names)}


# ------------------------------------------------------------ integration

def _rhs(model, c):
    fp, g = model.df[1].evaluate, model.g.evaluate

    def rhs(x, y):
        return [y[1], (fp(y[0]) - c) * y[1] - g(y[0])]
    return rhs


def _rhs_stm(model, c):
    fp, fpp = model.df[1].evaluate, model.df[2].evaluate
    g, gp = model.g.evaluate, model.dg[1].evaluate

    def rhs(x, y):
        p, v = y[0], y[1]
        a = fp(p) - c
        j21 = fpp(p) * v - gp(p)
        return [v, a * v - g(p),
                y[4], y[5],
                j21 * y[2] + a * y[4], j21 * y[3] + a * y[5]]
    return rhs


def _blowup_event(x, y):
    return BLOWUP - math.hypot(y[0], y[1])


_blowup_event.terminal = True


def integrate_phase_plane(model: ModelSpec, c: float, initial, t_span, dense: bool = True,
                          events=(), rtol=RTOL, atol=ATOL, stm=False):
    """Adaptive DOP853 (8th order, embedded error control) trajectory of the profile system."""
    y0 = list(initial)
    rhs = _rhs(model, c)
    if stm:
        y0 = y0 + [1.0, 0.0, 0.0, 1.0]
        rhs = _rhs_stm(model, c)
    sol = solve_ivp(rhs, t_span, y0, method="DOP853", dense_output=dense,
                    events=[_blowup_event, *events], rtol=rtol, atol=atol)
    if sol.status == -1:
        raise StiffnessFailure(sol.message)
    if sol.t_events[0].size:
        raise BlowUp(f"|(phi, v)| exceeded {BLOWUP:g} at x = {sol.t_events[0][0]:.6g}")
    return sol


def _v_event(direction):
    def ev(x, y):
        return y[1]
    ev.terminal = True
    ev.direction = direction
    return ev


def return_map(model, c, phi0, x_max=1e4, stm=True):
    """Next crossing of the section starting from ``(phi0, 0)``.

    Returns ``(phi1, period, dP)`` where ``dP`` is the derivative of the
    return map.  On the section ``v = 0`` the time correction drops out, so
    ``dP`` is the (1,1) entry of the monodromy matrix.
    """
    first = integrate_phase_plane(model, c, [phi0, 0.0], (0.0, x_max), dense=False,
                                  events=[_v_event(-1)], stm=stm)
    if not first.t_events[1].size:
        raise NoConvergence(f"orbit from phi0={phi0!r} never reached its maximum")
    x1 = first.t_events[1][0]
    y1 = first.y_events[1][0].copy()
    y1[1] = 0.0
    if stm:
        # continue with the accumulated monodromy matrix
        sol = solve_ivp(_rhs_stm(model, c), (x1, x1 + x_max), list(y1), method="DOP853",
                        events=[_blowup_event, _v_event(+1)], rtol=RTOL, atol=ATOL)
        if sol.status == -1:
            raise StiffnessFailure(sol.message)
        if sol.t_events[0].size:
            raise BlowUp("trajectory escaped before returning to the section")
        second = sol
    else:
        second = integrate_phase_plane(model, c, y1, (x1, x1 + x_max), dense=False,
                                       events=[_v_event(+1)])
    if not second.t_events[1].size:
        raise NoConvergence(f"orbit from phi0={phi0!r} did not return to the section")
    y2 = second.y_events[1][0]
    dP = y2[2] if stm else float("nan")
    return float(y2[0]), float(second.t_events[1][0]), float(dP), float(y1[0])


def _safe_map(model, c, phi0, x_max):
    try:
        p1, L, _, _ = return_map(model, c, phi0, x_max, stm=False)
        return p1 - phi0, L
    except (BlowUp, NoConvergence, StiffnessFailure):
        return float("nan"), float("nan")


def scan_section(model, c, phis, x_max=2e3):
    """Displacement ``P(phi0) - phi0`` along a list of section points (nan if no return)."""
    return np.array([_safe_map(model, c, p, x_max)[0] for p in phis])


def _bracketed_seed(model, c, phis, x_max=2e3):
    """First sign change of the displacement along ``phis``, refined by Brent."""
    d = scan_section(model, c, phis, x_max)
    for i in range(len(phis) - 1):
        a, b = d[i], d[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            return brentq(lambda p: _safe_map(model, c, p, x_max)[0], phis[i], phis[i + 1],
                          xtol=1e-9)
    raise NoConvergence(f"no closed orbit bracketed on the section at c={c!r}")


def _project_seed(model, c, seed, x_max):
    phi, v = float(seed[0]), float(seed[1])
    if v == 0.0 and phi < 0.0:
        return phi
    # flow forward to the section
    sol = integrate_phase_plane(model, c, [phi, v], (0.0, x_max), dense=False,
                                events=[_v_event(+1)])
    if not sol.t_events[1].size:
        raise NoConvergence("seed trajectory never reached the section")
    return float(sol.y_events[1][0][0])


def find_periodic_orbit(model: ModelSpec, c: float, seed, epsilon: float = float("nan"),
                        family: str = "hopf", tol: float = 1e-11, max_iter: int = 50,
                        x_max: float = 1e4, M=None) -> WaveProfile:
    """Closed orbit through the section near ``seed = (phi, phi')``."""
    phi0 = _project_seed(model, c, seed, x_max)
    for it in range(max_iter):
        try:
            p1, L, dP, pmax = return_map(model, c, phi0, x_max)
        except (BlowUp, StiffnessFailure) as exc:
            raise NoConvergence(f"return map failed at phi0={phi0!r}: {exc}") from None
        if pmax - phi0 < 1e-7 * max(1.0, abs(phi0)):
            raise DegenerateOrbit(f"orbit collapsed to an equilibrium (amplitude {pmax - phi0:.2e})")
        r = p1 - phi0
        if abs(r) <= tol:
            break
        if abs(dP - 1.0) < 1e-12:
            raise DegenerateOrbit("return-map Jacobian is singular")
        step = r / (dP - 1.0)
        # stay on the negative half of the section
        while phi0 - step >= 0.0:
            step *= 0.5
        phi0 -= step
    else:
        raise NoConvergence(f"Newton on the return map did not converge in {max_iter} steps "
                            f"(last residual {r:.2e})")
    if pmax - phi0 < 1e-6:
        raise DegenerateOrbit("orbit amplitude below 1e-6; no hyperbolic limit cycle")
    if abs(dP - 1.0) < 1e-6:
        # weak focus: the map is tangent to the identity and Newton creeps toward the equilibrium
        raise DegenerateOrbit(f"return-map multiplier {dP!r} is 1 to 1e-6; orbit not hyperbolic")
    sol = integrate_phase_plane(model, c, [phi0, 0.0], (0.0, L), dense=True)
    wave = _sample_and_polish(model, c, sol.sol, L, M)
    wave.epsilon, wave.family, wave.model = epsilon, family, model.name
    wave.meta["newton_iterations"] = it
    wave.meta["return_residual"] = abs(r)
    wave.meta["multiplier"] = dP
    return wave


# --------------------------------------------------------- resampling

def resample_uniform(trajectory, L: float, M: int):
    """``M`` uniform samples of ``(phi, phi')`` on ``[0, L)`` from dense output."""
    x = np.arange(M) * (L / M)
    y = trajectory(x)
    return x, y[0], y[1]


def polish(model: ModelSpec, c: float, phi, L: float, max_iter: int = 12):
    """Fourier collocation Newton solve of the profile equation with unknown period.

    Unknowns are the samples and ``L``; the extra equation pins ``phi'(0) = 0``.
    """
    M = len(phi)
    D1, D2 = fourier.diff_matrices(M)
    phi = np.array(phi, dtype=float)
    fp, fpp = model.df[1].evaluate, model.df[2].evaluate
    g, gp = model.g.evaluate, model.dg[1].evaluate
    last = math.inf
    for _ in range(max_iter):
        s = 2 * np.pi / L
        d1, d2 = D1 @ phi, D2 @ phi
        a = c - fp(phi)
        R = np.empty(M + 1)
        R[:M] = s * s * d2 + a * s * d1 + g(phi)
        R[M] = d1[0]
        J = np.zeros((M + 1, M + 1))
        J[:M, :M] = s * s * D2 + (a * s)[:, None] * D1
        J[np.arange(M), np.arange(M)] += -fpp(phi) * s * d1 + gp(phi)
        J[:M, M] = (-2.0 * s * s * d2 - a * s * d1) / L
        J[M, :M] = D1[0]
        delta = np.linalg.solve(J, -R)
        phi = phi + delta[:M]
        L = L + delta[M]
        size = np.abs(delta).max()
        if size < 1e-15 * max(1.0, np.abs(phi).max()) or size >= last:
            break
        last = size
    s = 2 * np.pi / L
    d1, d2 = D1 @ phi, D2 @ phi
    res = s * s * d2 + (c - fp(phi)) * s * d1 + g(phi)
    return phi, L, float(np.abs(res).max()), s * d1, s * s * d2


def _sample_and_polish(model, c, traj, L, M=None) -> WaveProfile:
    M = M or M_START
    while True:
        if M > M_CAP:
            raise ResolutionExceeded(f"Fourier tail above {TAIL_TOL:g} at M = {M_CAP}")
        _, phi, _ = resample_uniform(traj, L, M)
        phi, Lp, res, dphi, d2 = polish(model, c, phi, L)
        tail = fourier.tail_ratio(phi)
        if tail < TAIL_TOL:
            break
        M *= 2
    x = np.arange(M) * (Lp / M)
    if res > 1e-8 * (1 + np.abs(d2).max()):
        raise NoConvergence(f"collocation residual {res:.2e} too large")
    turns = int(np.count_nonzero(np.diff(np.sign(dphi[np.abs(dphi) > 1e-3 * np.abs(dphi).max()]))))
    if turns > 2:
        raise DegenerateOrbit(f"profile has {turns} turning points per period; not fundamental")
    return WaveProfile(x, phi, dphi, float(Lp), float(c), float("nan"), "", residual=res,
                       tail=tail, meta={"L_shooting": float(L)})


# ---------------------------------------------------------------- Hopf family

def hopf_side(model):
    return 1.0 if a0_bar(model) > 0 else -1.0


def continue_hopf_family(model: ModelSpec, epsilons, eps0: float = EPS0, M=None):
    """Small-amplitude waves at ``c = f'(0) + sign(a0_bar) * eps`` for increasing ``eps``."""
    eps = sorted(float(e) for e in epsilons)
    for e in eps:
        if not 0.0 < e < eps0:
            raise ValueError(f"epsilon must lie in (0, {eps0}); got {e}")
    c0 = float(model.fp(0.0))
    side = hopf_side(model)
    ustar = find_ustar(model)
    waves = []
    for e in eps:
        c = c0 + side * e
        if len(waves) == 0:
            # the cycle amplitude scales like sqrt(eps); scan a generous range
            phis = -np.geomspace(1e-3, 0.9 * abs(ustar), 60)
            seed = _bracketed_seed(model, c, phis)
        elif len(waves) == 1:
            seed = waves[-1].phi.min() * math.sqrt(e / waves[-1].epsilon)
        else:
            # secant predictor in (sqrt(eps), phi_min)
            (e1, p1), (e2, p2) = [(w.epsilon, w.phi.min()) for w in waves[-2:]]
            t1, t2, t = math.sqrt(e1), math.sqrt(e2), math.sqrt(e)
            seed = p2 + (p2 - p1) * (t - t2) / (t2 - t1)
        try:
            w = find_periodic_orbit(model, c, (seed, 0.0), e, "hopf", M=M)
        except (NoConvergence, DegenerateOrbit):
            phis = -np.geomspace(1e-3, 0.9 * abs(ustar), 60)
            w = find_periodic_orbit(model, c, (_bracketed_seed(model, c, phis), 0.0), e, "hopf", M=M)
        w.meta["c0"] = c0
        waves.append(w)
    return waves


# ----------------------------------------------------------------- pulse

@dataclass
class PulseSolution:
    """Homoclinic loop to the saddle ``(1, 0)``, centred at its minimum ``x = 0``."""

    c: float
    c1: float
    kappa: float
    kappa_fit: float
    mu_u: float
    mu_s: float
    x_left: float
    x_right: float
    miss: float
    model: str = ""
    offset: float = 1e-8
    branches: tuple = ()
    fit: dict = field(default_factory=dict)

    def evaluate(self, x):
        """``(phi, phi')`` at ``x``; exponential saddle tails beyond the integrated branches."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        phi = np.empty_like(x)
        dphi = np.empty_like(x)
        left_sol, right_sol = self.branches
        m = x < -self.x_left
        amp = -self.offset * np.exp(self.mu_u * (x[m] + self.x_left))
        phi[m], dphi[m] = 1.0 + amp, amp * self.mu_u
        m = (x >= -self.x_left) & (x <= 0.0)
        if m.any():
            phi[m], dphi[m] = left_sol(x[m] + self.x_left)
        m = (x > 0.0) & (x <= self.x_right)
        if m.any():
            phi[m], dphi[m] = right_sol(x[m] - self.x_right)
        m = x > self.x_right
        amp = -self.offset * np.exp(self.mu_s * (x[m] - self.x_right))
        phi[m], dphi[m] = 1.0 + amp, amp * self.mu_s
        return phi, dphi

    def samples(self, X: float, n: int):
        x = np.linspace(-X, X, n)
        phi, dphi = self.evaluate(x)
        return x, phi, dphi

    def metadata(self):
        return {"kind": "pulse", "model": self.model, "c": self.c, "c1_melnikov": self.c1,
                "kappa": self.kappa, "kappa_fit": self.kappa_fit, "mu_u": self.mu_u,
                "mu_s": self.mu_s, "miss": self.miss, "x_left": self.x_left,
                "x_right": self.x_right, "fit": self.fit}

    def save(self, stem, X=None, n=4001):
        stem = Path(stem)
        X = X or 25.0 / self.kappa
        x, phi, dphi = self.samples(X, n)
        csv = stem.with_suffix(".csv")
        write_columns(csv, ["x", "phi", "dphi"], [x, phi, dphi])
        stem.with_suffix(".json").write_text(json.dumps(self.metadata() | {"csv": csv.name, "X": X},
                                                        indent=2) + "\n")
        return stem.with_suffix(".json"), csv


def saddle_eigenvalues(model, c):
    a = float(model.fp(1.0)) - c
    gp1 = float(model.gp(1.0))
    disc = math.sqrt(a * a - 4.0 * gp1)
    return 0.5 * (a + disc), 0.5 * (a - disc)


def _manifold_branches(model, c, offset, x_max):
    mu_u, mu_s = saddle_eigenvalues(model, c)
    ev = _v_event(0)
    try:
        su = integrate_phase_plane(model, c, [1.0 - offset, -offset * mu_u], (0.0, x_max),
                                   events=[ev])
        ss = integrate_phase_plane(model, c, [1.0 - offset, -offset * mu_s], (0.0, -x_max),
                                   events=[ev])
    except (BlowUp, StiffnessFailure):
        return None
    if not (su.t_events[1].size and ss.t_events[1].size):
        return None
    return su, ss


def _miss(model, c, offset, x_max):
    br = _manifold_branches(model, c, offset, x_max)
    if br is None:
        return float("nan")
    su, ss = br
    return float(su.y_events[1][0][0] - ss.y_events[1][0][0])


def _tail_rate(x, y):
    mask = (y < np.log(1e-3)) & (y > np.log(3e-8))
    if mask.sum() < 5:
        return float("nan")
    return float(np.polyfit(x[mask], y[mask], 1)[0])


def compute_pulse(model: ModelSpec, offset: float = 1e-8, search_width: float = 0.5) -> PulseSolution:
    """Shoot from the saddle ``(1, 0)`` along its unstable manifold and adjust ``c``.

    The matching condition compares the minima reached by the unstable
    manifold (forward) and by the stable manifold (backward).  The speed is
    bracketed by a scan around the Melnikov speed and refined by Brent's
    (secant-based) method.
    """
    c1 = melnikov_speed(model)
    x_max = 400.0
    step = 0.01 * max(1.0, abs(c1))
    m0 = _miss(model, c1, offset, x_max)
    bracket = None
    if m0 == 0.0:
        bracket = (c1, c1)
    k = 1
    while bracket is None and k * step <= search_width:
        for sgn in (1.0, -1.0):
            a, b = c1 + sgn * (k - 1) * step, c1 + sgn * k * step
            va = m0 if k == 1 else _miss(model, a, offset, x_max)
            vb = _miss(model, b, offset, x_max)
            if np.isfinite(va) and np.isfinite(vb) and va * vb <= 0:
                bracket = (min(a, b), max(a, b))
                break
        k += 1
    if bracket is None:
        raise NoHomoclinic(f"matching condition never changes sign within {search_width} of c1={c1:.6f}")
    c = bracket[0] if bracket[0] == bracket[1] else brentq(lambda s: _miss(model, s, offset, x_max), *bracket, xtol=1e-14, rtol=1e-15, maxiter=200)
    su, ss = _manifold_branches(model, c, offset, x_max)
    miss = float(su.y_events[1][0][0] - ss.y_events[1][0][0])
    mu_u, mu_s = saddle_eigenvalues(model, c)
    x_left = float(su.t_events[1][0])
    x_right = float(-ss.t_events[1][0])

    # tail regression on the integrated (not extrapolated) parts of the loop
    xl = np.linspace(0.0, x_left, 2000)
    yl = su.sol(xl)
    rate_l = _tail_rate(xl - x_left, np.log(np.abs(yl[0] - 1) + np.abs(yl[1])))
    xr = np.linspace(-x_right, 0.0, 2000)
    yr = ss.sol(xr)
    rate_r = _tail_rate(xr + x_right, np.log(np.abs(yr[0] - 1) + np.abs(yr[1])))
    kappa = min(abs(mu_s), mu_u)
    kappa_fit = min(abs(rate_l), abs(rate_r))
    return PulseSolution(
        c=float(c), c1=float(c1), kappa=kappa, kappa_fit=kappa_fit, mu_u=mu_u, mu_s=mu_s,
        x_left=x_left, x_right=x_right, miss=miss, model=model.name, offset=offset,
        branches=(su.sol, ss.sol),
        fit={"left_rate": rate_l, "right_rate": rate_r, "phi_min": float(su.y_events[1][0][0])},
    )


# -------------------------------------------------------- large-period family

def large_period_side(model, pulse):
    """``+1`` when the pulse outruns the characteristic speed at the saddle, else ``-1``."""
    return 1.0 if pulse.c > float(model.fp(1.0)) else -1.0


def _loop_seed(model, c, pulse, n=120, x_max=1e3):
    """Outermost closed orbit inside the loop: the first ``+ -> -`` change of the displacement
    scanning inward from just outside the pulse minimum."""
    pmin = pulse.fit["phi_min"]
    phis = pmin + np.linspace(-0.05, 0.1, n) * abs(pmin)
    d = scan_section(model, c, phis, x_max)
    for i in range(n - 1):
        if np.isfinite(d[i]) and np.isfinite(d[i + 1]) and d[i] > 0 > d[i + 1]:
            return brentq(lambda q: _safe_map(model, c, q, x_max)[0], phis[i], phis[i + 1],
                          xtol=1e-10)
    raise NoConvergence(f"no closed orbit found inside the homoclinic loop at c={c!r}")


def continue_large_period_family(model: ModelSpec, epsilons, pulse: PulseSolution = None,
                                 eps1: float = EPS1, L_max: float = 400.0, M=None):
    """Periodic waves inside the homoclinic loop at ``c = c_pulse + side * eps``.

    ``eps`` is walked downward and each orbit seeds Newton for the next one.
    """
    eps = sorted((float(e) for e in epsilons), reverse=True)
    for e in eps:
        if not 0.0 < e <= eps1:
            raise ValueError(f"epsilon must lie in (0, {eps1}]; got {e}")
    pulse = pulse or compute_pulse(model)
    side = large_period_side(model, pulse)
    waves = []
    for e in eps:
        c = pulse.c + side * e
        w = None
        if waves:
            try:
                w = find_periodic_orbit(model, c, (waves[-1].phi.min(), 0.0), e, "large-period", M=M)
            except (NoConvergence, DegenerateOrbit):
                w = None
            # must stay on the branch hugging the loop
            if w is not None and w.L < waves[-1].L:
                w = None
        if w is None:
            w = find_periodic_orbit(model, c, (_loop_seed(model, c, pulse), 0.0), e,
                                    "large-period", M=M)
        if w.L > L_max:
            raise PeriodOverflow(f"period {w.L:.1f} exceeds budget {L_max}")
        w.meta["c_pulse"] = pulse.c
        w.meta["side"] = side
        waves.append(w)
    return waves


def align_to_pulse(wave: WaveProfile, pulse: PulseSolution):
    """Sup-distance over ``[-L/2, L/2]`` between wave and pulse after the best shift."""
    x = np.linspace(-0.5 * wave.L, 0.5 * wave.L, 801)
    p0, dp0 = pulse.evaluate(x)

    def dist(s):
        p, dp = wave.evaluate(x + s)
        return float(np.max(np.abs(p0 - p) + np.abs(dp0 - dp)))

    h = wave.L / 200
    grid = np.linspace(-10 * h, 10 * h, 41)
    vals = [dist(s) for s in grid]
    i = int(np.argmin(vals))
    res = minimize_scalar(dist, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, 40)]),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.fun), float(res.x)


def large_period_diagnostics(waves, pulse):
    eps = np.array([w.epsilon for w in waves])
    L = np.array([w.L for w in waves])
    order = np.argsort(-eps)
    eps, L = eps[order], L[order]
    slope, intercept = np.polyfit(np.abs(np.log(eps)), L, 1) if len(eps) > 1 else (float("nan"),) * 2
    dists = [align_to_pulse(w, pulse)[0] for w in (waves[i] for i in order)]
    return {
        "epsilon": eps.tolist(), "L": L.tolist(),
        "monotone": bool(np.all(np.diff(L) > 0)),
        "log_fit_slope": float(slope), "log_fit_intercept": float(intercept),
        "sup_distance": dists,
        "sup_distance_scaled": [d * math.exp(0.5 * pulse.kappa * Li) for d, Li in zip(dists, L)],
    }
