import json

import numpy as np
import pytest
import scipy.linalg as sla

from vblwaves import fourier, spectrum
from vblwaves.errors import NotUnstable
from vblwaves.expr import U
from vblwaves.model import ModelSpec
from vblwaves.profile import WaveProfile


def constant_wave(a0, a1, L, M=16, level=0.0):
    """A flat 'wave' whose linearization has constant coefficients ``a0``, ``a1``."""
    p = 0.3
    model = ModelSpec("const", p * U, a0 * U)
    x = np.arange(M) * L / M
    w = WaveProfile(x, np.full(M, level), np.zeros(M), L, a1 + p, 0.0, "hopf")
    return model, w


def symbol(a0, a1, L, theta, N):
    q = (2 * np.pi * np.arange(-N, N + 1) + theta) / L
    return -q * q + 1j * a1 * q + a0


def test_hill_matrix_matches_symbol(rng):
    for _ in range(10):
        a0, a1 = rng.uniform(-2, 2, 2)
        L = rng.uniform(1, 20)
        theta = rng.uniform(-np.pi, np.pi)
        model, w = constant_wave(a0, a1, L)
        B = spectrum.assemble_bloch(model, w, theta, 12)
        # constant coefficients give a diagonal matrix
        assert np.abs(B.H - np.diag(np.diag(B.H))).max() < 1e-13
        ref = symbol(a0, a1, L, theta, 12)
        assert np.allclose(np.diag(B.H), ref, atol=1e-12 * np.abs(ref).max())


def collocation_spectrum(model, w, theta):
    """Independent route: physical-space collocation of the Bloch operator."""
    M = w.M
    D1, D2 = fourier.diff_matrices(M)
    s = 2 * np.pi / w.L
    D1 = s * D1 + 1j * theta / w.L * np.eye(M)
    D2c = s * s * D2 + 2j * theta / w.L * s * fourier.diff_matrices(M)[0] - (theta / w.L) ** 2 * np.eye(M)
    a1, a0 = spectrum.coefficient_samples(model, w.phi, w.dphi, w.c)
    return sla.eigvals(D2c + a1[:, None] * D1 + np.diag(a0))


@pytest.mark.parametrize("theta", [0.0, 0.7, -2.1, np.pi])
def test_hill_against_collocation(bf, bf_hopf, theta):
    w = bf_hopf[0.01]
    lam, conv, _, _, _ = spectrum.eigen(bf, w, theta, 24)
    ref = collocation_spectrum(bf, w, theta)
    top = lam[conv][:8]
    for z in top:
        assert np.min(np.abs(ref - z)) < 1e-8 * (1 + abs(z))


def test_theta_conjugate_symmetry(bf, bf_hopf):
    w = bf_hopf[0.005]
    a, conv_a, _, _, _ = spectrum.eigen(bf, w, 1.1, 48)
    b, conv_b, _, _, _ = spectrum.eigen(bf, w, -1.1, 48)
    a, b = a[conv_a], np.conj(b[conv_b])
    assert len(a) == len(b) > 10
    assert np.max(spectrum._match(a, b)) < 1e-9


def test_translation_zero_mode(bf, bf_hopf):
    for w in bf_hopf.values():
        lam, corr, conv = spectrum.translation_mode(bf, w)
        assert abs(lam) < 1e-7 and corr > 0.999 and conv


def test_convergence_flags(bf, bf_hopf):
    w = bf_hopf[0.02]
    lam, conv, moved, _, _ = spectrum.eigen(bf, w, 0.0, 48)
    assert np.all(moved[conv] <= spectrum.CONV_TOL)
    # the right-most part of the spectrum is resolved, the truncation tail is not
    assert conv[:20].all()
    assert not conv[-5:].any()


def test_certificate(bf, bf_hopf, bf_cert, tmp_path):
    cert = bf_cert
    assert cert.real and cert.lam.real > 0
    assert cert.residual <= spectrum.RESIDUAL_TOL
    assert cert.lam.real >= 10 * cert.residual
    assert spectrum.h2_norm(cert.psi_hat, cert.L) == pytest.approx(1.0, rel=1e-12)
    psi = cert.psi(4 * cert.N)
    assert np.abs(psi.imag).max() < 1e-12 * np.abs(psi.real).max()
    # independent check of the residual on a finer grid
    w = bf_hopf[0.005]
    r = spectrum.collocation_residual(bf, w, cert.lam, cert.psi_hat, cert.N)
    assert r < 1e-7
    js, csv = cert.save(tmp_path / "cert")
    d = json.loads(js.read_text())
    assert d["re_lambda"] == cert.lam.real
    assert csv.read_text().splitlines()[0] == "k,re_psi_hat,im_psi_hat"


def test_certified_rates_approach_g_prime(bf, bf_hopf):
    lams = [spectrum.certify_instability(bf, bf_hopf[e]).lam.real for e in (0.02, 0.01, 0.005)]
    gaps = [abs(l - 1.0) for l in lams]
    assert gaps[0] > gaps[1] > gaps[2]


def test_stable_constant_state_is_not_certified():
    # u = 1 for a Fisher-type reaction: symbol real part -q^2 - 1 < 0
    model = ModelSpec("stable", 0.5 * U**2, U - U**2)
    M, L = 16, 5.0
    w = WaveProfile(np.arange(M) * L / M, np.ones(M), np.zeros(M), L, 0.2, 0.0, "hopf")
    with pytest.raises(NotUnstable):
        spectrum.certify_instability(model, w, N=8)


def test_sweep_csv_and_tracking(bf, bf_hopf, tmp_path):
    w = bf_hopf[0.02]
    spec = spectrum.sweep_theta(bf, w, spectrum.theta_grid(8), N=32, keep=10)
    assert spec.lam.shape == (8, 10)
    assert spectrum.theta_grid(8)[-1] == pytest.approx(np.pi)
    for row in spec.branch:
        assert sorted(row) == list(range(10))
    path = spec.save_csv(tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "theta,re_lambda,im_lambda,converged_flag,branch_id"
    assert len(lines) == 81
    t, re, im, flag, b = lines[1].split(",")
    assert flag in ("0", "1") and int(b) >= 0


# ------------------------------------------------------------------ pulse

def test_pulse_point_spectrum(bl_pulse_spectrum):
    ps = bl_pulse_spectrum
    assert ps.lam0 > 0 and ps.simple and ps.sign_changes == 0
    assert ps.lam0 == pytest.approx(1.24854, abs=1e-4)
    assert ps.estimates["boundary_change"] < 1e-4
    assert ps.estimates["richardson_change"] < 1e-4
    # the translation eigenvalue of the truncated problem
    assert abs(ps.translation) < 1e-2 and ps.translation_sign_changes == 1
    assert 0 < ps.radius <= ps.lam0 / 2


def test_pulse_spectrum_against_finer_spacing(bl, bl_pulse, bl_pulse_spectrum):
    fine = spectrum.pulse_spectrum(bl, bl_pulse, h=0.05)
    assert fine.lam0 == pytest.approx(bl_pulse_spectrum.lam0, abs=1e-4)


def test_theta_loop_has_one_eigenvalue_inside(bl, bl_large, bl_pulse_spectrum):
    for eps, w in bl_large.items():
        counts, spec = spectrum.theta_loop(bl, w, bl_pulse_spectrum, 32)
        assert np.all(counts == 1), (eps, counts)
