"""Bloch spectra of periodic waves (Hill's method) and point spectrum of the pulse.

The linearization of the equation in the co-moving frame about a profile
``phi`` is

    L w = w'' + a1(x) w' + a0(x) w,
    a1 = c - f'(phi),   a0 = g'(phi) - f''(phi) phi'.

For an ``L``-periodic wave the Bloch operators ``L_theta`` act on functions
``w = exp(i theta x / L) p(x)`` with ``p`` periodic; in the Fourier basis
of ``p`` they become bi-infinite matrices that are truncated to ``|k| <= N``.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import toeplitz
from scipy.optimize import linear_sum_assignment

from . import fourier
from .errors import BoundaryContamination, NotUnstable, ResolutionExceeded
from .model import ModelSpec

CONV_TOL = 1e-7
RESIDUAL_TOL = 1e-7


def threads():
    try:
        return max(1, int(os.environ.get("VBL_THREADS", "1")))
    except ValueError:
        return 1


def coefficient_samples(model: ModelSpec, phi, dphi, c):
    a1 = c - model.fp(phi)
    a0 = model.gp(phi) - model.fpp(phi) * dphi
    return np.asarray(a1, dtype=float), np.asarray(a0, dtype=float)


def default_N(wave, floor: int = 48, rel: float = 1e-13):
    """Truncation reaching the point where the profile's Fourier coefficients drop below ``rel``."""
    a = np.abs(fourier.coefficients(wave.phi))[: wave.M // 2]
    big = np.nonzero(a > rel * a.max())[0]
    return int(max(floor, big[-1] + 1 if big.size else 0))


@dataclass
class BlochMatrix:
    H: np.ndarray
    theta: float
    N: int
    L: float

    @property
    def modes(self):
        return np.arange(-self.N, self.N + 1)


def _conv_matrix(coeffs_fft, N):
    """Toeplitz matrix ``C[k, j] = a_hat(k - j)`` for ``|k|, |j| <= N`` (needs ``M > 4N``)."""
    idx = np.arange(0, 2 * N + 1)
    return toeplitz(coeffs_fft[idx], coeffs_fft[-idx])


def _coeffs(model, wave, N):
    # enough samples that the coefficient products are resolved up to |k| = 2N
    Mc = max(wave.M, 4 * N + 2)
    if Mc % 2:
        Mc += 1
    phi = fourier.resize(wave.phi, Mc)
    dphi = fourier.resize(wave.dphi, Mc)
    a1, a0 = coefficient_samples(model, phi, dphi, wave.c)
    c1, c0 = fourier.coefficients(a1), fourier.coefficients(a0)
    # drop the ambiguous Nyquist mode; it is below the resolution of the wave
    c1[Mc // 2] = 0.0
    c0[Mc // 2] = 0.0
    return c1, c0


def assemble_bloch(model: ModelSpec, wave, theta: float, N: int) -> BlochMatrix:
    """Truncated Hill matrix of ``L_theta`` on modes ``-N..N``."""
    c1, c0 = _coeffs(model, wave, N)
    A1 = _conv_matrix(c1, N)
    A0 = _conv_matrix(c0, N)
    k = np.arange(-N, N + 1)
    q = (2 * np.pi * k + theta) / wave.L
    H = A1 * (1j * q)[None, :] + A0
    H[np.diag_indices_from(H)] -= q * q
    return BlochMatrix(H, float(theta), int(N), float(wave.L))


def _match(ref, other):
    """Distance from each entry of ``ref`` to its partner in ``other`` (optimal assignment)."""
    cost = np.abs(ref[:, None] - other[None, :])
    r, col = linear_sum_assignment(cost)
    out = np.full(len(ref), np.inf)
    out[r] = cost[r, col]
    return out


def eigen(model: ModelSpec, wave, theta: float, N: int, vectors: bool = False):
    """Eigenvalues of the truncated Bloch matrix with convergence flags.

    An eigenvalue at truncation ``N`` is flagged converged when its partner
    at ``2N`` lies within ``1e-7``.
    """
    B = assemble_bloch(model, wave, theta, N)
    if vectors:
        lam, V = sla.eig(B.H)
    else:
        lam, V = sla.eigvals(B.H), None
    lam2 = sla.eigvals(assemble_bloch(model, wave, theta, 2 * N).H)
    # only compare against the top of the refined spectrum
    order = np.argsort(-lam2.real)
    moved = _match(lam, lam2[order[: 2 * len(lam)]])
    conv = moved <= CONV_TOL
    idx = np.argsort(-lam.real)
    lam, conv, moved = lam[idx], conv[idx], moved[idx]
    if V is not None:
        V = V[:, idx]
    return lam, conv, moved, V, B


@dataclass
class BlochSpectrum:
    theta: np.ndarray
    lam: np.ndarray
    converged: np.ndarray
    branch: np.ndarray
    N: int
    L: float
    c: float
    meta: dict = field(default_factory=dict)

    def rows(self):
        for i, t in enumerate(self.theta):
            for j in range(self.lam.shape[1]):
                yield t, self.lam[i, j], bool(self.converged[i, j]), int(self.branch[i, j])

    def save_csv(self, path, converged_only=False):
        with open(path, "w") as fh:
            fh.write("theta,re_lambda,im_lambda,converged_flag,branch_id\n")
            for t, l, ok, b in self.rows():
                if converged_only and not ok:
                    continue
                fh.write(f"{t:.17g},{l.real:.17g},{l.imag:.17g},{int(ok)},{b}\n")
        return Path(path)

    def inside(self, center, radius):
        """Per-theta count of converged eigenvalues strictly inside the circle."""
        hit = (np.abs(self.lam - center) < radius) & self.converged
        return hit.sum(axis=1)


def _track(lams):
    """Assign branch ids across consecutive theta values (extrapolated nearest neighbour)."""
    n_t, n = lams.shape
    ids = np.zeros((n_t, n), dtype=int)
    ids[0] = np.arange(n)
    ordered = lams.copy()
    for i in range(1, n_t):
        pred = ordered[i - 1] if i == 1 else 2 * ordered[i - 1] - ordered[i - 2]
        cost = np.abs(pred[:, None] - lams[i][None, :])
        r, col = linear_sum_assignment(cost)
        ordered[i, r] = lams[i, col]
        ids[i, col] = r
    return ids


def sweep_theta(model: ModelSpec, wave, thetas, N: int = None, keep: int = 40) -> BlochSpectrum:
    """Spectra over a theta grid; the ``keep`` right-most eigenvalues per theta are stored."""
    N = N or default_N(wave)
    thetas = np.asarray(thetas, dtype=float)

    def one(t):
        lam, conv, _, _, _ = eigen(model, wave, t, N)
        return lam[:keep], conv[:keep]

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        res = list(pool.map(one, thetas))
    lam = np.array([r[0] for r in res])
    conv = np.array([r[1] for r in res])
    return BlochSpectrum(thetas, lam, conv, _track(lam), N, wave.L, wave.c)


def theta_grid(n):
    """``n`` equispaced values in ``(-pi, pi]``."""
    return -np.pi + 2 * np.pi * (np.arange(n) + 1) / n


# ------------------------------------------------------------ certification

@dataclass
class InstabilityCertificate:
    lam: complex
    psi_hat: np.ndarray
    residual: float
    N: int
    L: float
    c: float
    moved: float
    model: str = ""

    @property
    def real(self):
        return self.lam.imag == 0.0

    def psi(self, M):
        """Samples of ``Psi`` on ``M`` uniform points."""
        return _synth(self.psi_hat, self.N, M)

    def to_dict(self):
        return {"kind": "instability-certificate", "model": self.model,
                "re_lambda": self.lam.real, "im_lambda": self.lam.imag, "real": self.real,
                "residual": self.residual, "N": self.N, "L": self.L, "c": self.c,
                "refinement_change": self.moved}

    def save(self, stem):
        stem = Path(stem)
        csv = stem.with_name(stem.name + "_psi").with_suffix(".csv")
        k = np.arange(-self.N, self.N + 1)
        with open(csv, "w") as fh:
            fh.write("k,re_psi_hat,im_psi_hat\n")
            for kk, v in zip(k, self.psi_hat):
                fh.write(f"{kk},{v.real:.17g},{v.imag:.17g}\n")
        stem.with_suffix(".json").write_text(json.dumps(self.to_dict() | {"psi_csv": csv.name},
                                                        indent=2) + "\n")
        return stem.with_suffix(".json"), csv


def _synth(coef, N, M):
    """Samples of ``sum_k coef_k e^{2 pi i k x / L}`` on ``M`` points (aliased modes add up)."""
    full = np.zeros(M, dtype=complex)
    k = np.arange(-N, N + 1)
    np.add.at(full, k % M, coef)
    return np.fft.ifft(full) * M


def h2_norm(coef, L, theta=0.0):
    """``||.||_2`` on integer (Bloch-shifted) wavenumbers, matching ``fourier.sobolev_norm``."""
    N = len(coef) // 2
    k = np.arange(-N, N + 1) + theta / (2 * np.pi)
    return float(np.sqrt(L * np.sum((1 + k * k) ** 2 * np.abs(coef) ** 2)))


def _inverse_iteration(H, lam, v, steps=3):
    n = len(H)
    shift = lam + 1e-10 * (1 + abs(lam))
    lu = sla.lu_factor(H - shift * np.eye(n))
    for _ in range(steps):
        v = sla.lu_solve(lu, v)
        v /= np.linalg.norm(v)
    return v


def collocation_residual(model, wave, lam, coef, N, theta=0.0):
    """Max-norm of ``(L_theta - lam) Psi`` sampled on a grid fine enough for the products."""
    M = max(wave.M, 4 * N + 2)
    M += M % 2
    phi = fourier.resize(wave.phi, M)
    dphi = fourier.resize(wave.dphi, M)
    a1, a0 = coefficient_samples(model, phi, dphi, wave.c)
    k = np.arange(-N, N + 1)
    q = (2 * np.pi * k + theta) / wave.L
    p = _synth(coef, N, M)
    p1 = _synth(1j * q * coef, N, M)
    p2 = _synth(-q * q * coef, N, M)
    return float(np.abs(p2 + a1 * p1 + (a0 - lam) * p).max())


def certify_instability(model: ModelSpec, wave, N: int = None) -> InstabilityCertificate:
    """Right-most resolved eigenvalue of ``L_0`` with a residual-checked eigenfunction."""
    N = N or default_N(wave)
    try:
        return _certify(model, wave, N)
    except NotUnstable:
        # one refinement of the truncation before giving up
        return _certify(model, wave, 2 * N)


def _certify(model, wave, N):
    lam, conv, moved, V, B = eigen(model, wave, 0.0, N, vectors=True)
    cand = [i for i in range(len(lam)) if conv[i] and lam[i].real > 0]
    if not cand:
        raise NotUnstable("no converged eigenvalue with positive real part at theta = 0")
    i = max(cand, key=lambda j: lam[j].real)
    lam0 = complex(lam[i])
    if abs(lam0.imag) <= 10 * CONV_TOL * max(1.0, abs(lam0)):
        lam0 = complex(lam0.real, 0.0)
    v = _inverse_iteration(B.H, lam0, V[:, i].copy())
    if lam0.imag == 0.0:
        # rotate to a real eigenfunction, phase set by the largest sample
        M = 2 * N + 2
        psi = _synth(v, N, M)
        psi = np.real(psi * np.exp(-1j * np.angle(psi[np.argmax(np.abs(psi))])))
        v = (np.fft.fft(psi) / M)[np.arange(-N, N + 1) % M]
    v = v / h2_norm(v, wave.L)
    # Rayleigh-type refinement of the eigenvalue from the polished vector
    Hv = B.H @ v
    lam_r = complex(np.vdot(v, Hv) / np.vdot(v, v))
    if lam0.imag == 0.0:
        lam_r = complex(lam_r.real, 0.0)
    res = collocation_residual(model, wave, lam_r, v, N)
    if res > RESIDUAL_TOL or lam_r.real < 10 * res:
        raise NotUnstable(f"eigenpair not certified: residual {res:.2e}, Re lambda {lam_r.real:.3e}")
    return InstabilityCertificate(lam_r, v, res, N, wave.L, wave.c, float(moved[i]), wave.model)


def translation_mode(model: ModelSpec, wave, N: int = None):
    """Eigenvalue of ``L_0`` closest to 0 and the correlation of its eigenfunction with ``phi'``."""
    N = N or default_N(wave)
    lam, conv, _, V, _ = eigen(model, wave, 0.0, N, vectors=True)
    i = int(np.argmin(np.abs(lam)))
    M = max(wave.M, 2 * N + 2)
    psi = _synth(V[:, i], N, M)
    dphi = fourier.resize(wave.dphi, M)
    corr = abs(np.vdot(psi, dphi)) / (np.linalg.norm(psi) * np.linalg.norm(dphi))
    return complex(lam[i]), float(corr), bool(conv[i])


# ---------------------------------------------------------------- pulse


def _fd_operator(a1, a0, h):
    """Fourth-order central differences with Dirichlet ends (second order next to the ends)."""
    n = len(a1)
    d2 = [np.full(n, -30.0), np.full(n - 1, 16.0), np.full(n - 1, 16.0),
          np.full(n - 2, -1.0), np.full(n - 2, -1.0)]
    D2 = sp.diags(d2, [0, 1, -1, 2, -2], format="lil") / (12 * h * h)
    D1 = sp.diags([np.full(n - 1, 8.0), np.full(n - 1, -8.0), np.full(n - 2, -1.0),
                   np.full(n - 2, 1.0)], [1, -1, 2, -2], format="lil") / (12 * h)
    for r in (0, n - 1):
        D2[r, :] = 0
        D1[r, :] = 0
        D2[r, r] = -2.0 / (h * h)
        if r + 1 < n:
            D2[r, r + 1] = 1.0 / (h * h)
            D1[r, r + 1] = 0.5 / h
        if r - 1 >= 0:
            D2[r, r - 1] = 1.0 / (h * h)
            D1[r, r - 1] = -0.5 / h
    return (D2.tocsr() + sp.diags(a1) @ D1.tocsr() + sp.diags(a0)).tocsc()


def _pulse_operator(model, pulse, X, M):
    x = np.linspace(-X, X, M + 2)[1:-1]
    h = x[1] - x[0]
    phi, dphi = pulse.evaluate(x)
    a1, a0 = coefficient_samples(model, phi, dphi, pulse.c)
    return x, _fd_operator(a1, a0, h)


def _sign_changes(v, rel=1e-6):
    v = np.real(v)
    keep = v[np.abs(v) > rel * np.abs(v).max()]
    return int(np.count_nonzero(np.diff(np.sign(keep))))


def _refined(model, pulse, X, M, guess):
    _, A = _pulse_operator(model, pulse, X, M)
    val, vec = spla.eigs(A, k=1, sigma=guess)
    return complex(val[0]), vec[:, 0]


@dataclass
class PulseSpectrum:
    lam0: float
    point: np.ndarray
    sign_changes: int
    simple: bool
    translation: complex
    translation_sign_changes: int
    radius: float
    gap: float
    X: float
    M: int
    estimates: dict
    x: np.ndarray = None
    eigenfunction: np.ndarray = None

    def to_dict(self):
        return {"kind": "pulse-spectrum", "lambda0": self.lam0,
                "point_spectrum": [[z.real, z.imag] for z in self.point],
                "sign_changes": self.sign_changes, "simple": self.simple,
                "translation": [self.translation.real, self.translation.imag],
                "translation_sign_changes": self.translation_sign_changes,
                "circle_radius": self.radius, "gap": self.gap, "X": self.X, "M": self.M,
                "estimates": self.estimates}


def pulse_spectrum(model: ModelSpec, pulse, X: float = None, h: float = 0.1,
                   M: int = None, tol: float = 1e-4) -> PulseSpectrum:
    """Point eigenvalues of the pulse linearization right of the essential spectrum."""
    X = max(X or 0.0, 20.0 / pulse.kappa)
    M = M or int(round(2 * X / h))
    if M > 20000:
        raise ResolutionExceeded(f"pulse grid of {M} points requested")
    x, A = _pulse_operator(model, pulse, X, M)
    lam_all, vecs = sla.eig(A.toarray())
    edge = float(model.gp(1.0))
    keep = lam_all.real > edge + 1e-3
    point = lam_all[keep]
    pvec = vecs[:, keep]
    order = np.argsort(-point.real)
    point, pvec = point[order], pvec[:, order]
    if not len(point) or point[0].real <= 0:
        raise NotUnstable("pulse linearization has no positive point eigenvalue")
    lam_base = point[0]
    simple = bool(np.sum(np.abs(point - lam_base) < 1e-6) == 1)

    # refinement in M with Richardson extrapolation for a fourth-order scheme
    l1, v1 = _refined(model, pulse, X, M, lam_base.real)
    l2, v2 = _refined(model, pulse, X, 2 * M + 1, l1.real)
    lam_R = l2 + (l2 - l1) / 15.0
    # boundary test at the same spacing
    l3, _ = _refined(model, pulse, 1.5 * X, int(round(1.5 * (M + 1))) - 1, l1.real)
    moved = abs(l3 - l1)
    if moved > tol:
        raise BoundaryContamination(f"lambda0 moved by {moved:.2e} under X -> 1.5 X")
    lam0 = float(lam_R.real)

    i0 = int(np.argmin(np.abs(point)))
    translation = complex(point[i0])
    others = np.delete(point, 0)
    gap = float(np.min(np.abs(others - lam_base))) if len(others) else float("inf")
    radius = min(lam0 / 2.0, gap / 2.0)
    return PulseSpectrum(
        lam0=lam0, point=point, sign_changes=_sign_changes(v1), simple=simple,
        translation=translation, translation_sign_changes=_sign_changes(pvec[:, i0]),
        radius=radius, gap=gap, X=X, M=M,
        estimates={"base": lam_base.real, "M": l1.real, "2M": l2.real, "richardson": lam0,
                   "X15": l3.real, "boundary_change": moved, "richardson_change": abs(lam_R - l2)},
        x=x, eigenfunction=np.real(v1),
    )


def theta_loop(model: ModelSpec, wave, pspec: PulseSpectrum, n_theta: int = 32, N: int = None):
    """Per-theta count of converged Bloch eigenvalues inside the circle around ``lambda0``."""
    spec = sweep_theta(model, wave, theta_grid(n_theta), N)
    counts = spec.inside(pspec.lam0, pspec.radius)
    return counts, spec
