"""Command line entry point: ``vbl <subcommand> ...``.

Exit codes
    0  success (hypotheses hold, wave built, instability certified / confirmed)
    1  model parse error
    2  a hypothesis fails (``check``) or a rerun does not reproduce its outputs
    3  a hypothesis is undetermined
    4  solver failure
    5  no certified unstable eigenvalue
    6  growth window too short
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import evolution, io, plotting, profile, spectrum
from .errors import NotUnstable, ParseError, VBLError, WindowTooShort
from .model import check_hypotheses, load_model

EXIT_OK, EXIT_PARSE, EXIT_FAILS, EXIT_UNDETERMINED = 0, 1, 2, 3
EXIT_SOLVER, EXIT_NOT_UNSTABLE, EXIT_WINDOW = 4, 5, 6

FIG1_EPS = 0.005
# the loop-born family of the logistic Buckley-Leverett model only exists for small eps
FIG2_EPS = 0.002


def _out(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _tag(x):
    return f"{x:.6g}".replace("-", "m").replace(".", "p")


def _print(obj):
    print(json.dumps(obj, indent=2, default=float))


# ------------------------------------------------------------------ commands

def cmd_check(args):
    model = load_model(args.model)
    rep = check_hypotheses(model, args.u_max)
    _print(rep.to_dict())
    return {"holds": EXIT_OK, "fails": EXIT_FAILS, "undetermined": EXIT_UNDETERMINED}[rep.status]


def cmd_wave(args, argv):
    model = load_model(args.model)
    out = _out(args.out)
    written = []
    if args.family == "pulse":
        pulse = profile.compute_pulse(model)
        written += pulse.save(out / "pulse")
        print(f"pulse: c = {pulse.c:.12g} (Melnikov {pulse.c1:.12g}), kappa = {pulse.kappa:.8g}")
    else:
        eps = args.epsilon or [FIG1_EPS if args.family == "hopf" else FIG2_EPS]
        if args.family == "hopf":
            waves = profile.continue_hopf_family(model, eps, M=args.M)
        else:
            waves = profile.continue_large_period_family(model, eps, M=args.M)
        for w in waves:
            written += w.save(out / f"wave_{args.family}_eps{_tag(w.epsilon)}")
            print(f"{args.family} eps = {w.epsilon:g}: L = {w.L:.12g}, c = {w.c:.12g}, "
                  f"amplitude = {w.amplitude:.8g}, M = {w.M}")
    io.write_manifest(out, argv, "wave", args.model,
                      {"family": args.family, "epsilon": args.epsilon, "M": args.M}, written)
    return EXIT_OK


def cmd_spectrum(args, argv):
    model = load_model(args.model)
    wave = profile.WaveProfile.load(args.wave)
    out = _out(args.out)
    N = args.N or spectrum.default_N(wave)
    spec = spectrum.sweep_theta(model, wave, spectrum.theta_grid(args.theta_grid), N)
    written = [spec.save_csv(out / "spectrum.csv")]
    params = {"theta_grid": args.theta_grid, "N": N}
    try:
        cert = spectrum.certify_instability(model, wave, N)
    except NotUnstable as exc:
        print(f"not certified: {exc}", file=sys.stderr)
        io.write_manifest(out, argv, "spectrum", args.model, params, written)
        return EXIT_NOT_UNSTABLE
    written += cert.save(out / "certificate")
    io.write_manifest(out, argv, "spectrum", args.model, params, written)
    print(f"certified lambda = {cert.lam.real:.12g}{cert.lam.imag:+.3g}i, residual = {cert.residual:.2e}")
    return EXIT_OK


def cmd_evolve(args, argv):
    model = load_model(args.model)
    wave = profile.WaveProfile.load(args.wave)
    out = _out(args.out)
    deltas = args.delta or [1e-6]
    positive = [d for d in deltas if d > 0]
    params = {"delta": deltas, "T": args.T, "dt": args.dt, "M": args.M}
    written = []
    if positive:
        cert = spectrum.certify_instability(model, wave)
        # independent delta runs go to the worker pool, output is written afterwards
        def one(d):
            return evolution.instability_experiment(model, wave, cert, [d], T=args.T, M=args.M,
                                                    dt=args.dt, control=False)
        try:
            with ThreadPoolExecutor(max_workers=spectrum.threads()) as pool:
                reports = list(pool.map(one, positive))
        except WindowTooShort as exc:
            print(f"window too short: {exc}", file=sys.stderr)
            return EXIT_WINDOW
        runs = [r["runs"][0] for r in reports]
        report = dict(reports[0], runs=runs)
        report["ratios"] = [r["rho"] / report["re_lambda"] for r in runs]
        pos = sorted(runs, key=lambda r: -r["delta"])
        if len(pos) >= 2 and pos[1]["delta"] == 0.5 * pos[0]["delta"]:
            report["escape_shift"] = pos[1]["escape_time"] - pos[0]["escape_time"]
            report["escape_shift_predicted"] = float(np.log(2.0) / report["re_lambda"])
    else:
        M = args.M or evolution.evolution_grid(wave)
        w = evolution.prepare_wave(model, wave, M)
        T = args.T or 10.0
        tr = evolution.evolve(model, w.phi.copy(), w.c, T, args.dt, 4, wave=w)
        report = {"re_lambda": None, "T": T, "M": M,
                  "runs": [{"delta": 0.0, "trace": tr, "blowup": tr.blowup,
                            "max_distance": float(np.max(tr.distance))}]}
    for r in report["runs"]:
        written.append(r["trace"].save_csv(out / f"trace_delta{_tag(r['delta'])}.csv"))
    js = evolution.report_json(report)
    (out / "experiment.json").write_text(json.dumps(js, indent=2) + "\n")
    written.append(out / "experiment.json")
    io.write_manifest(out, argv, "evolve", args.model, params, written)
    for r in js["runs"]:
        if r["delta"] > 0:
            print(f"delta = {r['delta']:g}: rho = {r['rho']:.8g}, rho/Re(lambda) = "
                  f"{r['rho'] / js['re_lambda']:.6f}, escape time = {r['escape_time']:.6g}")
        else:
            print(f"control: max orbital distance = {r['max_distance']:.3e}")
    return EXIT_OK


def _neighbour_orbits(model, c, wave, n=6, length=60.0):
    orbits = []
    for s in np.linspace(0.3, 1.6, n):
        try:
            sol = profile.integrate_phase_plane(model, c, [s * wave.phi.min(), 0.0], (0.0, length))
        except VBLError:
            continue
        x = np.linspace(0.0, sol.t[-1], 3000)
        y = sol.sol(x)
        keep = (np.abs(y[0]) < 1.5) & (np.abs(y[1]) < 1.5)
        orbits.append((y[0][keep], y[1][keep]))
    return orbits


def cmd_fig1(args, argv):
    model = load_model("burgers-fisher")
    out = _out(args.out)
    w = profile.continue_hopf_family(model, [args.epsilon])[0]
    xs = np.linspace(0.0, w.L, 801)
    p, dp = w.evaluate(xs)
    profile.write_columns(out / "fig1_profile.csv", ["x", "phi", "dphi"], [xs, p, dp])
    neigh = _neighbour_orbits(model, w.c, w)
    with open(out / "fig1_neighbours.csv", "w") as fh:
        fh.write("orbit,phi,dphi\n")
        for i, (a, b) in enumerate(neigh):
            for u, v in zip(a, b):
                fh.write(f"{i},{u:.17g},{v:.17g}\n")
    written = [out / "fig1_profile.csv", out / "fig1_neighbours.csv"]
    written += w.save(out / "fig1_wave")
    if not args.no_plot:
        written.append(plotting.hopf_figure(out / "fig1.png", neigh, (p, dp), xs, p, w.c))
    io.write_manifest(out, argv, "reproduce-fig1", "burgers-fisher", {"epsilon": args.epsilon}, written)
    print(f"c = {w.c:g}, L = {w.L:.10g}, amplitude = {w.amplitude:.6g}")
    return EXIT_OK


def cmd_fig2(args, argv):
    model = load_model("logistic-buckley-leverett")
    out = _out(args.out)
    pulse = profile.compute_pulse(model)
    w = profile.continue_large_period_family(model, [args.epsilon], pulse)[0]
    _, shift = profile.align_to_pulse(w, pulse)
    xs = np.linspace(-0.5 * w.L, 0.5 * w.L, 1201)
    p, dp = w.evaluate(xs + shift)
    X = max(0.5 * w.L, 12.0 / pulse.kappa)
    xp = np.linspace(-X, X, 2001)
    pp, dpp = pulse.evaluate(xp)
    profile.write_columns(out / "fig2_wave.csv", ["x", "phi", "dphi"], [xs, p, dp])
    profile.write_columns(out / "fig2_pulse.csv", ["x", "phi", "dphi"], [xp, pp, dpp])
    written = [out / "fig2_wave.csv", out / "fig2_pulse.csv"]
    written += w.save(out / "fig2_large_period")
    written += pulse.save(out / "fig2_pulse_solution")
    if not args.no_plot:
        written.append(plotting.homoclinic_figure(out / "fig2.png", (pp, dpp), (p, dp), xs, p,
                                                  xp, pp, pulse.c, w.c))
    io.write_manifest(out, argv, "reproduce-fig2", "logistic-buckley-leverett",
                      {"epsilon": args.epsilon}, written)
    print(f"pulse c = {pulse.c:.10g} (Melnikov {pulse.c1:.10g}); wave c = {w.c:.10g}, "
          f"L = {w.L:.10g}, |log eps| = {abs(np.log(args.epsilon)):.4g}")
    return EXIT_OK


def cmd_rerun(args, argv):
    manifest = io.read_manifest(args.manifest)
    out = Path(args.manifest).resolve().parent
    here = os.getcwd()
    os.chdir(manifest.get("cwd", here))
    try:
        code = main(manifest["argv"])
    finally:
        os.chdir(here)
    if code != EXIT_OK:
        return code
    bad = io.compare_outputs(manifest, out)
    if bad:
        print("outputs differ: " + ", ".join(bad), file=sys.stderr)
        return EXIT_FAILS
    print(f"reproduced {sum(n.endswith('.csv') for n in manifest['outputs'])} CSV file(s)")
    return EXIT_OK


# ------------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(prog="vbl", description="Periodic waves of viscous balance laws")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check the structural hypotheses of a model")
    p.add_argument("model", help="built-in name or JSON model file")
    p.add_argument("--u-max", type=float, default=50.0)

    p = sub.add_parser("wave", help="compute periodic waves or the pulse")
    p.add_argument("model")
    p.add_argument("--family", choices=["hopf", "large-period", "pulse"], default="hopf")
    p.add_argument("--epsilon", type=float, nargs="+")
    p.add_argument("--M", type=int)
    p.add_argument("--out", default="out")

    p = sub.add_parser("spectrum", help="Bloch spectrum and instability certificate")
    p.add_argument("model")
    p.add_argument("wave", help="wave JSON written by 'wave'")
    p.add_argument("--theta-grid", type=int, default=32)
    p.add_argument("--N", type=int)
    p.add_argument("--out", default="out")

    p = sub.add_parser("evolve", help="perturb a wave and measure orbital growth")
    p.add_argument("model")
    p.add_argument("wave")
    p.add_argument("--delta", type=float, nargs="+")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--out", default="out")

    p = sub.add_parser("reproduce-fig1", help="small-amplitude Burgers-Fisher wave")
    p.add_argument("--epsilon", type=float, default=FIG1_EPS)
    p.add_argument("--out", default="fig1")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("reproduce-fig2", help="large-period Buckley-Leverett wave and pulse")
    p.add_argument("--epsilon", type=float, default=FIG2_EPS)
    p.add_argument("--out", default="fig2")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("rerun", help="re-execute a manifest and compare CSV hashes")
    p.add_argument("manifest")
    return ap


COMMANDS = {"wave": cmd_wave, "spectrum": cmd_spectrum, "evolve": cmd_evolve,
            "reproduce-fig1": cmd_fig1, "reproduce-fig2": cmd_fig2, "rerun": cmd_rerun}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args)
        return COMMANDS[args.command](args, argv)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NotUnstable as exc:
        print(f"not unstable: {exc}", file=sys.stderr)
        return EXIT_NOT_UNSTABLE
    except WindowTooShort as exc:
        print(f"window too short: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (VBLError, ValueError, KeyError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
