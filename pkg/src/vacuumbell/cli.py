"""Command-line driver.

    vacuumbell state --which eq9 --alpha2 1
    vacuumbell curves fig4 --alpha2 3 --alpha2 10 --out-dir out/
    vacuumbell chsh --trials 200000 --seed 7 --json
    vacuumbell stations --mode relative-phase --alpha2 10 --trials 50000 --log trials.csv
    vacuumbell compile --n 2 --phi 0.3 --alpha2 1 --m 1
    vacuumbell verify --quick

Options may also come from ``--config file.json``: top-level keys apply to every
command, a nested object under the command name applies to that command only.
Command-line flags override the file.  Exit codes: 0 success, 1 invalid
configuration, 2 runtime failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3

# single table of physical and numerical defaults
DEFAULTS = {
    "alpha2": 1.0,
    "tail_bound": 1e-13,
    "omega_tau_c": 0.0,
    "omega_tau_d": 0.0,
    "fig3_min": 0.1,
    "fig3_max": 30.0,
    "fig3_points": 60,
    "fig4_points": 181,
    "fig4_alpha2": [3.0, 10.0],
    "settings": [0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4],
    "mode": "phase",
    "seed": 0,
    "sigma_step": 0.0,
    "resync_period": 1_000_000_000,
    "shards": 1,
    "out_dir": ".",
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vacuumbell", description="Single-photon Bell test simulator")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("state", help="dump one of the experiment's states")
    _common(p)
    p.add_argument("--which", choices=["eq3", "eq4", "eq8", "eq9", "eq10"])
    p.add_argument("--alpha2", type=float)
    p.add_argument("--omega-tau-c", type=float)
    p.add_argument("--omega-tau-d", type=float)
    p.add_argument("--tail-bound", type=float)

    p = sub.add_parser("curves", help="write convergence curves as CSV")
    _common(p)
    p.add_argument("figure", choices=["fig3", "fig4", "all"])
    p.add_argument("--alpha2", type=float, action="append", help="fig4 coherent excitation (repeatable)")
    p.add_argument("--out-dir")
    p.add_argument("--fig3-min", type=float)
    p.add_argument("--fig3-max", type=float)
    p.add_argument("--fig3-points", type=int)
    p.add_argument("--fig4-points", type=int)

    for name, helptext in (("chsh", "closed-form and simulated CHSH values"),
                           ("stations", "two-station Monte Carlo with drifting references")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--mode", choices=["phase", "relative-phase"])
        p.add_argument("--alpha2", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--sigma-step", type=float)
        p.add_argument("--resync-period", type=int)
        p.add_argument("--shards", type=int)
        p.add_argument("--settings", type=float, nargs=4, metavar=("A", "A_PRIME", "B", "B_PRIME"))
        p.add_argument("--tail-bound", type=float)
        if name == "stations":
            p.add_argument("--log", help="trial log CSV path")
            p.add_argument("--out", help="summary JSON path")

    p = sub.add_parser("compile", help="print the compiled photon-counting unitary")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--m", type=int)

    p = sub.add_parser("verify", help="run the self-test suites")
    _common(p)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", action="append", help="run only the named suite (repeatable)")
    p.add_argument("--inject-eq12-sign-bug", action="store_true",
                   help="evaluate closed-form marginals with exp(+alpha^2); normalization must fail")
    return parser


def _load_config(path, command) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    flat = {k.replace("-", "_"): v for k, v in data.items() if not isinstance(v, dict)}
    section = data.get(command, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {command!r} must be an object")
    flat.update({k.replace("-", "_"): v for k, v in section.items()})
    return flat


def resolve(argv=None) -> argparse.Namespace:
    """Parse flags, layer them over config file values and defaults, then validate."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise ConfigError("a command is required: " + ", ".join(
            ["state", "curves", "chsh", "stations", "compile", "verify"]))
    conf = _load_config(args.config, args.command) if getattr(args, "config", None) else {}
    if args.command == "curves":
        a2 = args.alpha2 if args.alpha2 is not None else conf.get("alpha2", DEFAULTS["fig4_alpha2"])
        args.alpha2 = list(a2) if isinstance(a2, (list, tuple)) else [a2]
    for key, value in vars(args).items():
        if value is None:
            if key in conf:
                setattr(args, key, conf[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])
    _validate(args)
    return args


def _validate(args):
    problems = []
    cmd = args.command
    if getattr(args, "alpha2", None) is not None:
        vals = args.alpha2 if isinstance(args.alpha2, list) else [args.alpha2]
        if any(not isinstance(v, (int, float)) or v < 0 or not math.isfinite(v) for v in vals):
            problems.append("alpha2 must be finite and >= 0")
    if getattr(args, "tail_bound", None) is not None and not 0 < args.tail_bound < 1:
        problems.append("tail-bound must lie in (0, 1)")
    if cmd == "state" and args.which is None:
        problems.append("state: --which is required")
    if cmd in ("chsh", "stations"):
        if args.trials is not None and args.trials < 1:
            problems.append("trials must be >= 1")
        if cmd == "stations" and args.trials is None:
            problems.append("stations: --trials is required")
        if args.sigma_step < 0:
            problems.append("sigma-step must be >= 0")
        if args.resync_period < 1:
            problems.append("resync-period must be >= 1")
        if args.mode == "relative-phase" and not args.alpha2 > 0:
            problems.append("relative-phase mode needs alpha2 > 0")
        if len(args.settings) != 4:
            problems.append("settings need four angles")
    if cmd == "curves":
        if not 0 < args.fig3_min < args.fig3_max:
            problems.append("need 0 < fig3-min < fig3-max")
        if args.fig3_points < 2 or args.fig4_points < 2:
            problems.append("curve grids need at least 2 points")
        if not os.path.isdir(args.out_dir):
            problems.append(f"output directory {args.out_dir!r} does not exist")
    if cmd == "compile":
        if args.n is None or args.m is None:
            problems.append("compile: --n and --m are required")
        elif not 0 < args.m <= args.n:
            problems.append("compile: need 0 < m <= n")
        if args.alpha2 is not None and not args.alpha2 > 0:
            problems.append("compile: alpha2 must be > 0")
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text, end="" if text.endswith("\n") else "\n")


# --- commands -------------------------------------------------------------

def cmd_state(args):
    from . import states
    w = args.which
    if w == "eq3":
        st = states.single_photon_split()
    elif w == "eq4":
        st = states.propagated_split(args.omega_tau_c, args.omega_tau_d)
    elif w == "eq8":
        st = states.photon_plus_reference(args.alpha2, args.tail_bound)
    elif w == "eq9":
        st = states.after_pbs(args.alpha2, args.tail_bound)
    else:
        st = states.propagated_after_pbs(args.alpha2, args.omega_tau_c, args.omega_tau_d, args.tail_bound)
    payload = {"modes": list(st.spec.names), "cutoffs": list(st.spec.cutoffs),
               "truncation_loss": st.loss, "norm2": st.norm2(),
               "amplitudes": [[list(o), a.real, a.imag] for o, a in sorted(st.items())]}
    _emit(args, payload, st.dump())


def cmd_curves(args):
    from . import theory
    summary = {}
    lines = []
    if args.figure in ("fig3", "all"):
        grid = np.geomspace(args.fig3_min, args.fig3_max, args.fig3_points)
        pts = theory.fig3_curves(grid)
        path = os.path.join(args.out_dir, "fig3.csv")
        theory.write_fig3_csv(path, pts)
        summary["fig3"] = {"path": path, "rows": len(pts),
                           "lower_first": pts[0].lower, "lower_last": pts[-1].lower,
                           "upper_first": pts[0].upper, "upper_last": pts[-1].upper}
        lines.append(f"fig3: {len(pts)} rows -> {path}; lower {pts[0].lower:.6g} -> {pts[-1].lower:.6g}, "
                     f"upper {pts[0].upper:.6g} -> {pts[-1].upper:.6g}")
    if args.figure in ("fig4", "all"):
        grid = np.linspace(-np.pi, np.pi, args.fig4_points)
        summary["fig4"] = []
        for a2 in args.alpha2:
            if not a2 > 0:
                raise ConfigError("fig4 needs alpha2 > 0")
            curve = theory.fig4_curve(a2, grid)
            path = os.path.join(args.out_dir, f"fig4_alpha2_{a2:g}.csv")
            theory.write_fig4_csv(path, curve)
            peak = max(p.y for p in curve["joint"])
            gap = max(abs(j.y - i.y) for j, i in zip(curve["joint"], curve["ideal"]))
            summary["fig4"].append({"alpha2": a2, "path": path, "rows": len(grid), "peak": peak,
                                    "max_gap_to_ideal": gap})
            lines.append(f"fig4 alpha2={a2:g}: peak {peak:.6g} (ideal 0.5), max gap {gap:.3g} -> {path}")
    _emit(args, summary, "\n".join(lines))


def _settings(args):
    from .bell import ChshSettings
    return ChshSettings(*args.settings)


def cmd_chsh(args):
    from . import bell, theory
    cs = _settings(args)
    alpha2 = args.alpha2 if args.mode == "relative-phase" else None
    model = bell.build_model(args.mode, alpha2, args.tail_bound)
    out = {"mode": args.mode, "settings": list(args.settings),
           "S_closed_form": bell.chsh_value(cs, theory.correlation_E),
           "S_exact_model": bell.expected_chsh(model, cs),
           "lhv_max": bell.lhv_max(cs), "tsirelson": bell.TSIRELSON}
    lines = [f"S (E = -cos) = {out['S_closed_form']:.9f}",
             f"S (exact {args.mode} model) = {out['S_exact_model']:.9f}",
             f"LHV bound = {out['lhv_max']:g}"]
    if args.trials:
        drift = bell.DriftModel(args.sigma_step, args.resync_period, args.seed)
        r = bell.run_stations(args.mode, cs, alpha2, args.trials, drift, shards=args.shards,
                              tail_bound=args.tail_bound, model=model)
        out.update({"trials": r.trials, "seed": args.seed, "S_mc": r.S, "S_mc_err": r.S_err,
                    "inconclusive_fraction": r.inconclusive_fraction, "violation": r.violation})
        if r.S is None:
            lines.append("Monte Carlo: S unavailable (a setting pair had no conclusive trials)")
        else:
            lines.append(f"Monte Carlo S = {r.S:.4f} +/- {r.S_err:.4f} over {r.trials} trials (seed {args.seed})")
        lines.append(f"inconclusive fraction = {r.inconclusive_fraction:.3g}")
        lines.append("violation" if r.violation else "no violation")
    _emit(args, out, "\n".join(lines))


def cmd_stations(args):
    from . import bell
    cs = _settings(args)
    drift = bell.DriftModel(args.sigma_step, args.resync_period, args.seed)
    alpha2 = args.alpha2 if args.mode == "relative-phase" else None
    r = bell.run_stations(args.mode, cs, alpha2, args.trials, drift, shards=args.shards,
                          record=bool(args.log), tail_bound=args.tail_bound)
    if args.log:
        bell.write_trial_log(args.log, r.records)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(r.to_json() + "\n")
    d = r.to_dict()
    text = "\n".join(f"{k} = {v}" for k, v in d.items())
    _emit(args, d, text)


def cmd_compile(args):
    from .fock import dump_matrix
    from .measure import compile_measurement
    u = compile_measurement(args.n, args.phi, math.sqrt(args.alpha2), args.m)
    payload = {"n": args.n, "phi": args.phi, "alpha2": args.alpha2, "m": args.m,
               "real": u.real.tolist(), "imag": u.imag.tolist()}
    _emit(args, payload, dump_matrix(u))


def cmd_verify(args):
    from . import verify
    results = verify.run_all(quick=args.quick, printed_sign=args.inject_eq12_sign_bug,
                             only=set(args.only) if args.only else None)
    ok = all(r.passed for r in results)
    payload = {"passed": ok, "suites": [r.as_dict() for r in results]}
    text = "\n".join(r.line() for r in results) + f"\n{'ALL PASS' if ok else 'VERIFICATION FAILED'}"
    _emit(args, payload, text)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"state": cmd_state, "curves": cmd_curves, "chsh": cmd_chsh, "stations": cmd_stations,
            "compile": cmd_compile, "verify": cmd_verify}


def main(argv=None) -> int:
    try:
        args = resolve(argv)
    except ConfigError as exc:
        print(f"vacuumbell: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"vacuumbell: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"vacuumbell: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
