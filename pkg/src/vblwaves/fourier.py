"""Small helpers for L-periodic grids and trigonometric interpolation."""
from __future__ import annotations

import numpy as np


def wavenumbers(M: int) -> np.ndarray:
    """Integer wavenumbers in FFT order."""
    return np.fft.fftfreq(M, d=1.0 / M)


def coefficients(u) -> np.ndarray:
    """Normalised Fourier coefficients ``u_hat(k) = (1/M) sum_j u_j e^{-2 pi i jk/M}``."""
    u = np.asarray(u)
    return np.fft.fft(u) / u.shape[-1]


def samples(coeffs) -> np.ndarray:
    return np.fft.ifft(coeffs * coeffs.shape[-1])


def derivative(u, L: float, order: int = 1) -> np.ndarray:
    """Spectral derivative of real periodic samples."""
    M = len(u)
    k = wavenumbers(M)
    if order % 2 == 1 and M % 2 == 0:
        k = k.copy()
        k[M // 2] = 0.0
    sym = (2j * np.pi * k / L) ** order
    return np.real(np.fft.ifft(sym * np.fft.fft(u)))


def diff_matrices(M: int):
    """Dense first and second derivative matrices for period ``2 pi``."""
    eye = np.eye(M)
    k = wavenumbers(M)
    k1 = k.copy()
    if M % 2 == 0:
        k1[M // 2] = 0.0
    F = np.fft.fft(eye, axis=0)
    D1 = np.real(np.fft.ifft(1j * k1[:, None] * F, axis=0))
    D2 = np.real(np.fft.ifft(-(k**2)[:, None] * F, axis=0))
    return D1, D2


def resize(u, M_new: int) -> np.ndarray:
    """Trigonometric interpolation of real periodic samples onto ``M_new`` points."""
    u = np.asarray(u, dtype=float)
    M = len(u)
    if M_new == M:
        return u.copy()
    U = np.fft.rfft(u)
    out = np.zeros(M_new // 2 + 1, dtype=complex)
    n = min(len(U), len(out))
    out[:n] = U[:n]
    # a shared Nyquist mode must be split/merged to stay real and consistent
    if M % 2 == 0 and M_new > M:
        out[M // 2] *= 0.5
    if M_new % 2 == 0 and M_new < M:
        out[M_new // 2] = out[M_new // 2].real * 2.0 if M_new // 2 < len(U) else out[M_new // 2]
    return np.fft.irfft(out, n=M_new) * (M_new / M)


def evaluate(u, L: float, x) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``u`` at arbitrary points ``x``."""
    u = np.asarray(u, dtype=float)
    M = len(u)
    c = coefficients(u)
    k = wavenumbers(M)
    if M % 2 == 0:
        # symmetric split of the Nyquist term keeps the interpolant real
        c = c.copy()
        nyq = c[M // 2]
        c = np.append(c, 0.5 * nyq)
        c[M // 2] = 0.5 * nyq
        k = np.append(k, M // 2)
        k[M // 2] = -M // 2
    x = np.asarray(x, dtype=float)
    phase = np.exp(2j * np.pi * np.multiply.outer(x, k) / L)
    return np.real(phase @ c)


def shift(u, L: float, r: float) -> np.ndarray:
    """Samples of ``u(. + r)`` via a single multiplication in Fourier space."""
    M = len(u)
    k = wavenumbers(M)
    U = np.fft.fft(u)
    mult = np.exp(2j * np.pi * k * r / L)
    if M % 2 == 0:
        mult[M // 2] = np.cos(np.pi * M * r / L)
    return np.real(np.fft.ifft(U * mult))


def sobolev_weights(M: int, s: float) -> np.ndarray:
    k = wavenumbers(M)
    return (1.0 + k**2) ** s


def sobolev_norm(u, L: float, s: float = 0.0) -> float:
    """``||u||_s^2 = L sum_k (1 + k^2)^s |u_hat(k)|^2`` on the integer wavenumbers."""
    c = coefficients(u)
    return float(np.sqrt(L * np.sum(sobolev_weights(len(c), s) * np.abs(c) ** 2)))


def tail_ratio(u, fraction: float = 1.0 / 3.0) -> float:
    """Largest coefficient with ``|k| > fraction * M`` relative to the largest overall."""
    c = np.abs(coefficients(u))
    k = np.abs(wavenumbers(len(c)))
    top = c.max()
    if top == 0:
        return 0.0
    mask = k > fraction * len(c)
    return float(c[mask].max() / top) if np.any(mask) else 0.0
