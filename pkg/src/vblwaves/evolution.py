"""Pseudo-spectral evolution in the co-moving frame and orbital distances.

In the frame moving with speed ``c`` the equation reads

    u_t = u_xx + F(u, u_x),    F = g(u) - f'(u) u_x + c u_x,

on an ``L``-periodic domain.  Time stepping is ETDRK4 (Cox and Matthews)
with the phi-functions evaluated by contour averaging (Kassam and
Trefethen), so the heat part is integrated exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import fourier
from .errors import NonFinite, WindowTooShort
from .model import ModelSpec

N_CONTOUR = 32


def dealias_mask(M: int) -> np.ndarray:
    """2/3 rule: keep ``|k| < M/3``."""
    return np.abs(fourier.wavenumbers(M)) < M / 3.0


@dataclass(frozen=True)
class SpectralState:
    """Normalised Fourier coefficients of a real field at time ``t``."""

    coeffs: np.ndarray
    L: float
    t: float = 0.0

    @classmethod
    def from_samples(cls, u, L, t=0.0):
        u = np.asarray(u, dtype=float)
        c = fourier.coefficients(u) * dealias_mask(len(u))
        return cls(c, float(L), float(t))

    @property
    def M(self):
        return len(self.coeffs)

    def samples(self):
        return np.real(fourier.samples(self.coeffs))

    def norm(self, s=0.0):
        return float(np.sqrt(self.L * np.sum(fourier.sobolev_weights(self.M, s) * np.abs(self.coeffs) ** 2)))


class ETDRK4:
    """Precomputed ETDRK4 coefficients for the symbol ``-(2 pi k / L)^2``."""

    def __init__(self, M: int, L: float, dt: float):
        self.M, self.L, self.dt = M, L, dt
        k = fourier.wavenumbers(M)
        lin = -(2 * np.pi * k / L) ** 2
        self.lin = lin
        self.E = np.exp(dt * lin)
        self.E2 = np.exp(0.5 * dt * lin)
        r = np.exp(1j * np.pi * (np.arange(1, N_CONTOUR + 1) - 0.5) / N_CONTOUR)
        z = dt * lin[:, None] + r[None, :]
        self.Q = dt * np.real(np.mean((np.exp(z / 2) - 1) / z, axis=1))
        self.f1 = dt * np.real(np.mean((-4 - z + np.exp(z) * (4 - 3 * z + z * z)) / z**3, axis=1))
        self.f2 = dt * np.real(np.mean((2 + z + np.exp(z) * (z - 2)) / z**3, axis=1))
        self.f3 = dt * np.real(np.mean((-4 - 3 * z - z * z + np.exp(z) * (4 - z)) / z**3, axis=1))
        self.mask = dealias_mask(M)
        self.ik = 2j * np.pi * k / L
        if M % 2 == 0:
            self.ik[M // 2] = 0.0


def nonlinearity(model: ModelSpec, c: float, coeffs, scheme: ETDRK4):
    """Dealiased Fourier coefficients of ``g(u) + (c - f'(u)) u_x``."""
    M = scheme.M
    u = np.real(np.fft.ifft(coeffs * M))
    ux = np.real(np.fft.ifft(scheme.ik * coeffs * M))
    F = model.gfun(u) + (c - model.fp(u)) * ux
    return np.fft.fft(F) / M * scheme.mask


def step_etd(model: ModelSpec, state: SpectralState, c: float, dt: float, scheme: ETDRK4 = None):
    """One ETDRK4 step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if scheme is None or scheme.dt != dt or scheme.M != state.M or scheme.L != state.L:
        scheme = ETDRK4(state.M, state.L, dt)
    v = state.coeffs
    # overflow is detected below and reported as NonFinite
    with np.errstate(over="ignore", invalid="ignore"):
        Nv = nonlinearity(model, c, v, scheme)
        a = scheme.E2 * v + scheme.Q * Nv
        Na = nonlinearity(model, c, a, scheme)
        b = scheme.E2 * v + scheme.Q * Na
        Nb = nonlinearity(model, c, b, scheme)
        cc = scheme.E2 * a + scheme.Q * (2 * Nb - Nv)
        Nc = nonlinearity(model, c, cc, scheme)
        new = scheme.E * v + scheme.f1 * Nv + 2 * scheme.f2 * (Na + Nb) + scheme.f3 * Nc
        new = new * scheme.mask
    if not np.all(np.isfinite(new)):
        raise NonFinite(f"non-finite Fourier coefficient at t = {state.t + dt:.6g}")
    return SpectralState(new, state.L, state.t + dt)


# ----------------------------------------------------------- orbital distance

def _weights(M, s):
    return fourier.sobolev_weights(M, s)


def orbital_distance(u, wave, s: float = 2.0, n_grid: int = None, L: float = None):
    """``inf_r || u - phi(. + r) ||_s`` and the minimising shift ``r`` in ``[0, L)``.

    ``wave`` may be a WaveProfile or raw samples (then ``L`` is required).
    """
    if hasattr(wave, "phi"):
        phi, L = wave.phi, wave.L
    else:
        phi = np.asarray(wave, dtype=float)
    u = np.asarray(u, dtype=float)
    M = max(len(u), len(phi))
    if len(u) != M:
        u = fourier.resize(u, M)
    if len(phi) != M:
        phi = fourier.resize(phi, M)
    uh, ph = fourier.coefficients(u), fourier.coefficients(phi)
    if M % 2 == 0:
        # split the Nyquist term symmetrically so shifts act on a real interpolant
        k = np.append(fourier.wavenumbers(M), M // 2)
        k[M // 2] = -M // 2
        uh = np.append(uh, 0.5 * uh[M // 2])
        uh[M // 2] *= 0.5
        ph = np.append(ph, 0.5 * ph[M // 2])
        ph[M // 2] *= 0.5
    else:
        k = fourier.wavenumbers(M)
    w = (1.0 + k * k) ** s
    base = L * np.sum(w * (np.abs(uh) ** 2 + np.abs(ph) ** 2))
    cross = L * w * np.conj(uh) * ph
    kk = 2 * np.pi * k / L

    def objective(r):
        return float(base - 2.0 * np.real(np.sum(cross * np.exp(1j * kk * r))))

    # coarse grid through one FFT of the cross-correlation
    P = n_grid or max(8 * M, 256)
    grid = np.zeros(P, dtype=complex)
    np.add.at(grid, k.astype(int) % P, cross)
    corr = np.real(np.fft.ifft(grid) * P)
    vals = base - 2.0 * corr
    j = int(np.argmin(vals))
    h = L / P
    res = minimize_scalar(objective, bounds=((j - 1) * h, (j + 1) * h), method="bounded",
                          options={"xatol": 1e-10 * L})
    r = float(res.x)
    # Newton polish on the derivative of the objective
    for _ in range(3):
        d1 = float(2.0 * np.real(np.sum(cross * (-1j * kk) * np.exp(1j * kk * r))))
        d2 = float(2.0 * np.real(np.sum(cross * (kk * kk) * np.exp(1j * kk * r))))
        if d2 <= 0:
            break
        step = d1 / d2
        if abs(step) > h:
            break
        r -= step
    r = r % L
    # recompute directly rather than from the expanded square (no cancellation)
    diff = uh - ph * np.exp(1j * kk * r)
    d = math.sqrt(L * float(np.sum(w * np.abs(diff) ** 2)))
    return d, r


# ------------------------------------------------------------------ traces

@dataclass
class EvolutionTrace:
    t: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    h2: list = field(default_factory=list)
    distance: list = field(default_factory=list)
    shift: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    blowup: bool = False
    message: str = ""
    L: float = float("nan")

    def record(self, state, wave, s=2.0, snapshot=False):
        u = state.samples()
        self.t.append(state.t)
        self.l2.append(state.norm(0.0))
        self.h2.append(state.norm(2.0))
        if wave is not None:
            d, r = orbital_distance(u, wave, s)
        else:
            d, r = float("nan"), float("nan")
        self.distance.append(d)
        self.shift.append(r)
        if snapshot:
            self.snapshots.append((state.t, u))

    def arrays(self):
        return {k: np.array(getattr(self, k)) for k in ("t", "l2", "h2", "distance", "shift")}

    def save_csv(self, path):
        a = self.arrays()
        np.savetxt(path, np.column_stack([a["t"], a["l2"], a["h2"], a["distance"], a["shift"]]),
                   delimiter=",", header="t,l2_norm,h2_norm,orbital_distance,argmin_shift",
                   comments="", fmt="%.17g")
        return Path(path)

    def save_snapshots(self, path):
        with open(path, "w") as fh:
            fh.write("t,x,u\n")
            for t, u in self.snapshots:
                x = np.arange(len(u)) * (self.L / len(u))
                for xi, ui in zip(x, u):
                    fh.write(f"{t:.17g},{xi:.17g},{ui:.17g}\n")
        return Path(path)


def default_dt(L, M):
    return L * L / (4.0 * M * M)


def evolve(model: ModelSpec, u0, c: float, T: float, dt: float = None, record_every: int = 1,
           L: float = None, wave=None, snapshot_every: int = 0, stop=None) -> EvolutionTrace:
    """Integrate from samples ``u0`` to time ``T``.

    A non-finite state ends the run early; the partial trace has ``blowup`` set.
    ``stop(trace)`` may end the run early as well (returns True to stop).
    """
    if L is None:
        L = wave.L
    M = len(u0)
    dt = dt or default_dt(L, M)
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    dt = T / n
    state = SpectralState.from_samples(u0, L)
    scheme = ETDRK4(M, L, dt)
    trace = EvolutionTrace(L=L)
    trace.record(state, wave, snapshot=snapshot_every > 0)
    for i in range(1, n + 1):
        try:
            state = step_etd(model, state, c, dt, scheme)
        except NonFinite as exc:
            trace.blowup, trace.message = True, str(exc)
            break
        if i % record_every == 0 or i == n:
            trace.record(state, wave, snapshot=bool(snapshot_every) and i % snapshot_every == 0)
            if stop is not None and stop(trace):
                break
    trace.final = state
    return trace


# ------------------------------------------------------------ experiment

def evolution_grid(wave, factor: int = 2, floor: int = 64):
    """Grid size whose unmasked band holds the whole resolved spectrum of the wave."""
    return max(floor, factor * wave.M)


def prepare_wave(model: ModelSpec, wave, M: int):
    """Resample a wave to ``M`` points and re-polish it so it is steady on that grid."""
    from .profile import WaveProfile, polish

    phi = fourier.resize(wave.phi, M)
    phi, L, res, dphi, _ = polish(model, wave.c, phi, wave.L)
    x = np.arange(M) * (L / M)
    return WaveProfile(x, phi, dphi, L, wave.c, wave.epsilon, wave.family, wave.model,
                       residual=res, tail=fourier.tail_ratio(phi), meta=dict(wave.meta))


def eigenfunction_samples(cert, M):
    psi = np.real(cert.psi(M))
    return psi / fourier.sobolev_norm(psi, cert.L, 2.0)


def fit_growth(t, d, lo, hi):
    """Least-squares slope of ``log d`` over the first passage through ``[lo, hi]``."""
    t, d = np.asarray(t), np.asarray(d)
    above = np.nonzero(d > hi)[0]
    end = above[0] if above.size else len(d)
    idx = np.nonzero(d[:end] >= lo)[0]
    if idx.size < 5:
        raise WindowTooShort(f"only {idx.size} samples in the fit window [{lo:.2e}, {hi:.2e}]")
    idx = np.arange(idx[0], end)
    lt = np.log(d[idx])
    if lt.max() - lt.min() < math.log(10.0):
        raise WindowTooShort("growth window spans less than one decade")
    slope, icpt = np.polyfit(t[idx], lt, 1)
    resid = float(np.sqrt(np.mean((lt - (slope * t[idx] + icpt)) ** 2)))
    return float(slope), resid, (float(t[idx[0]]), float(t[idx[-1]]))


def escape_time(t, d, d0):
    t, d = np.asarray(t), np.asarray(d)
    idx = np.nonzero(d >= d0)[0]
    if not idx.size or idx[0] == 0:
        return float("nan")
    i = idx[0]
    a, b = math.log(d[i - 1]), math.log(d[i])
    return float(t[i - 1] + (t[i] - t[i - 1]) * (math.log(d0) - a) / (b - a))


def instability_experiment(model: ModelSpec, wave, certificate, deltas=(1e-6, 5e-7), T: float = None,
                           M: int = None, dt: float = None, record_every: int = 4,
                           control: bool = True):
    """Evolve ``phi + delta Psi`` and compare the observed growth with ``Re lambda``."""
    M = M or evolution_grid(wave)
    w = prepare_wave(model, wave, M)
    psi = eigenfunction_samples(certificate, M)
    lam = certificate.lam.real
    amp = w.amplitude
    d0 = 0.1 * amp
    deltas = [float(x) for x in deltas]
    positive = [x for x in deltas if x > 0]
    if T is None:
        T = 1.2 * math.log(d0 / min(positive)) / lam + 2.0 if positive else 10.0
    runs = []
    for delta in deltas:
        u0 = w.phi + delta * psi
        # stop shortly after escape: the nonlinear regime is not needed
        tr = evolve(model, u0, w.c, T, dt, record_every, wave=w,
                    stop=lambda tr: tr.distance[-1] > 2 * d0)
        entry = {"delta": delta, "trace": tr, "blowup": tr.blowup}
        if delta > 0:
            rho, resid, win = fit_growth(tr.t, tr.distance, 10 * delta, 0.01 * amp)
            entry |= {"rho": rho, "fit_residual": resid, "window": win,
                      "escape_time": escape_time(tr.t, tr.distance, d0)}
        else:
            entry |= {"max_distance": float(np.max(tr.distance))}
        runs.append(entry)
    if control and 0.0 not in deltas:
        tr = evolve(model, w.phi.copy(), w.c, T, dt, record_every, wave=w)
        runs.append({"delta": 0.0, "trace": tr, "blowup": tr.blowup,
                     "max_distance": float(np.max(tr.distance))})
    report = {"re_lambda": lam, "amplitude": amp, "d0": d0, "T": T, "M": M, "runs": runs}
    pos = [r for r in runs if r["delta"] > 0]
    pos.sort(key=lambda r: -r["delta"])
    report["ratios"] = [r["rho"] / lam for r in pos]
    if len(pos) >= 2 and pos[1]["delta"] == 0.5 * pos[0]["delta"]:
        dt_star = pos[1]["escape_time"] - pos[0]["escape_time"]
        report["escape_shift"] = dt_star
        report["escape_shift_predicted"] = math.log(2.0) / lam
    return report


def report_json(report):
    out = {k: v for k, v in report.items() if k != "runs"}
    out["runs"] = [{k: v for k, v in r.items() if k != "trace"} for r in report["runs"]]
    out["rho_fit"] = [r.get("rho") for r in out["runs"] if r["delta"] > 0]
    out["escape_times"] = [r.get("escape_time") for r in out["runs"] if r["delta"] > 0]
    return json.loads(json.dumps(out, default=float))
