"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""
import argparse
import os
import sys

import numpy as np

from . import io
from .eigenmatrix import EigenmatrixConfig
from .errors import RecoveryError
from .noise_estimation import default_search_range, evaluate_candidate, grid_search
from .pipeline import EXAMPLES, example_measure, oracle_samples, run_recovery, spectrum_samples
from .spectra import SimulationConfig, sample_additive_model, simulate
from .transforms import ADDITIVE, MULTIPLICATIVE, ContourConfig, NoiseParameter

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

MODELS = {"additive": ADDITIVE, "multiplicative": MULTIPLICATIVE}


class UsageError(Exception):
    """Invalid input; the message names the offending field."""


def _range(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    if not hi > lo:
        raise argparse.ArgumentTypeError("range must satisfy a < b")
    return lo, hi


def _grid(text):
    k = int(text)
    if k < 3:
        raise argparse.ArgumentTypeError("grid needs at least 3 points")
    return k


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit simulation seed")
    common.add_argument("--out", help="output file (directory for reproduce)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--nz", type=int, default=64, help="contour points (even)")
    solver.add_argument("--margin", type=float, default=0.5, help="relative ellipse margin")
    solver.add_argument("--aspect", type=float, default=0.5, help="ellipse axis ratio")
    solver.add_argument("--nc", type=int, default=None, help="Chebyshev nodes (default 4*nz)")
    solver.add_argument("--nl", type=int, default=None, help="Krylov depth")
    solver.add_argument("--norm-cap", type=float, default=10.0, help="bound on ||M||_2")

    parser = argparse.ArgumentParser(
        prog="freedeconv", description="Sparse free deconvolution of eigenvalue spectra.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="draw a deformed random matrix")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--measure", required=True, help="JSON file with atoms and weights")
    p.add_argument("--N", type=int, required=True, help="matrix size")
    p.add_argument("--noise", type=float, required=True, help="sigma or q")
    p.add_argument("--rotate", action="store_true", help="randomly rotate the signal matrix")

    p = sub.add_parser("recover", parents=[common, solver], help="deconvolve a spectrum")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--n", type=int, required=True, help="number of atoms")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--noise", type=float, help="known sigma or q")
    mode.add_argument("--estimate", action="store_true", help="estimate the noise level")
    p.add_argument("--range", type=_range, default=None, help="search range 'a,b'")
    p.add_argument("--grid", type=_grid, default=30, help="coarse grid size")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")

    p = sub.add_parser("landscape", parents=[common, solver],
                       help="log singular values against the noise level")
    p.add_argument("--model", choices=MODELS, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spectrum")
    src.add_argument("--oracle", metavar="MEASURE", help="use large-N samples of this measure")
    p.add_argument("--true-noise", type=float, help="noise level for --oracle")
    p.add_argument("--n", type=int, required=True, help="number of atoms")
    p.add_argument("--range", type=_range, default=None)
    p.add_argument("--grid", type=_grid, default=30)

    p = sub.add_parser("reproduce", parents=[common, solver], help="run a benchmark example")
    p.add_argument("example", help="one of " + ", ".join(sorted(EXAMPLES)))

    p = sub.add_parser("replay", parents=[common], help="re-run the job recorded in a report")
    p.add_argument("report")
    return parser


def _say(args, text):
    if not args.quiet:
        print(text, file=sys.stderr)


def _emit(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_spectrum(path):
    try:
        return io.read_spectrum(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"spectrum: {exc}")


def _load_measure(path, kind):
    try:
        measure = io.read_measure(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"measure: {exc}")
    if kind == MULTIPLICATIVE and np.any(measure.atoms <= 0):
        raise UsageError("measure: the multiplicative model needs positive atoms")
    return measure


def _noise(kind, value, field="noise"):
    try:
        return NoiseParameter(kind, value)
    except ValueError as exc:
        raise UsageError(f"{field}: {exc}")


def _solver(args):
    """Validated contour and eigenmatrix keyword arguments from the flags."""
    try:
        contour = ContourConfig(args.nz, args.margin, args.aspect)
    except ValueError as exc:
        raise UsageError(f"contour: {exc}")
    if args.nc is not None and args.nc < 2:
        raise UsageError("nc: must be at least 2")
    if args.nl is not None and args.nl < 1:
        raise UsageError("nl: must be at least 1")
    if not args.norm_cap > 1:
        raise UsageError("norm-cap: must exceed 1")
    return {"contour": contour, "n_c": args.nc, "n_l": args.nl, "norm_cap": args.norm_cap}


def _job_kwargs(echo):
    """Keyword arguments of ``run_recovery`` recorded in a config echo."""
    eig = echo["eigenmatrix"]
    search = echo.get("search") or {}
    return {
        "kind": MODELS[echo["model"]],
        "n": int(echo["n"]),
        "noise": echo.get("noise"),
        "contour": ContourConfig(**echo["contour"]),
        "n_c": eig["n_c"],
        "n_l": eig["n_l"],
        "norm_cap": eig["norm_cap"],
        "svd_floor": eig["svd_floor"],
        "search_range": None if search.get("range") is None else tuple(search["range"]),
        "n_grid": search.get("grid", 30),
    }


def _summary(report):
    m = report.recovered_measure
    text = ("atoms=[" + ", ".join(f"{x:.4f}" for x in m.atoms) + "] weights=["
            + ", ".join(f"{w:.4f}" for w in m.weights) + "]")
    if report.noise is not None:
        text = (f"estimate={report.noise.estimate:.6g} "
                f"(grid {report.noise.initial_guess:.6g}) " + text)
    return text


def cmd_simulate(args):
    kind = MODELS[args.model]
    measure = _load_measure(args.measure, kind)
    if not args.out:
        raise UsageError("out: an output file is required")
    exact = kind == ADDITIVE and args.noise == 0
    # sigma = 0 returns the signal spectrum; the placeholder level is unused
    noise = _noise(kind, 1.0 if exact else args.noise)
    try:
        config = SimulationConfig(args.N, args.seed, measure, noise, args.rotate)
        spectrum = sample_additive_model(config, 0.0) if exact else simulate(config)
    except ValueError as exc:
        raise UsageError(f"N: {exc}")
    io.write_spectrum(args.out, spectrum)
    line = f"model={args.model} N={config.N} seed={config.seed} noise={args.noise!r}"
    if kind == MULTIPLICATIVE:
        line += f" T={config.sample_count} realized_q={config.realized_noise!r}"
    if not args.quiet:
        print(line)
    return EXIT_OK


def _check_order(n, n_z, n_l):
    if n < 1:
        raise UsageError("n: must be positive")
    n_l = EigenmatrixConfig((0.0, 1.0), n_l=n_l).resolve_n_l(n, n_z)
    if n + 1 > min(n_z, n_l + 1):
        raise UsageError(f"n: n + 1 = {n + 1} exceeds min(nz, nl + 1) = {min(n_z, n_l + 1)}")


def cmd_recover(args):
    if args.noise is not None and not args.noise >= 0:
        raise UsageError("noise: must be non-negative")
    if args.noise is not None and args.range is not None:
        raise UsageError("range: only valid with --estimate")
    solver = _solver(args)
    _check_order(args.n, args.nz, args.nl)
    spectrum = _load_spectrum(args.spectrum)
    path = os.path.abspath(args.spectrum)
    header = {"command": "recover", "spectrum": path, "spectrum_sha256": io.file_digest(path)}
    try:
        report = run_recovery(spectrum, MODELS[args.model], args.n, noise=args.noise,
                              search_range=args.range, n_grid=args.grid, echo=header, **solver)
    except ValueError as exc:
        raise UsageError(str(exc))
    _emit(args.out, io.dumps(report.to_dict(include_wall_time=args.timing)))
    _say(args, _summary(report))
    return EXIT_OK


def compute_landscape(kind, samples, n, config, search_range=None, n_grid=30):
    """Loss landscape over ``search_range`` without refinement."""
    if search_range is None:
        search_range = default_search_range(kind, config.interval)
    _, landscape = grid_search(
        lambda t: evaluate_candidate(t, kind, samples, n, config), search_range, n_grid)
    return landscape


def cmd_landscape(args):
    kind = MODELS[args.model]
    solver = _solver(args)
    _check_order(args.n, args.nz, args.nl)
    if args.spectrum:
        samples, interval = spectrum_samples(_load_spectrum(args.spectrum), solver["contour"])
    else:
        if args.true_noise is None:
            raise UsageError("true-noise: required with --oracle")
        noise = _noise(kind, args.true_noise, "true-noise")
        samples, interval = oracle_samples(_load_measure(args.oracle, kind), noise,
                                           solver["contour"])
    config = EigenmatrixConfig(interval, n_c=solver["n_c"], n_l=solver["n_l"],
                               norm_cap=solver["norm_cap"])
    landscape = compute_landscape(kind, samples, args.n, config, args.range, args.grid)
    if args.out:
        io.write_landscape(args.out, landscape)
    else:
        header, rows = io.landscape_rows(landscape)
        sys.stdout.write("\n".join(",".join(r) for r in [header] + rows) + "\n")
    return EXIT_OK


def _reproduce(example, seed, job):
    """Simulate a benchmark example and recover it; ``job`` holds solver settings."""
    ex = EXAMPLES[example]
    measure = example_measure(example)
    config = SimulationConfig(ex["N"], seed, measure, NoiseParameter(ex["kind"], ex["noise"]))
    spectrum = simulate(config)
    header = {
        "command": "reproduce",
        "example": example,
        "seed": int(seed),
        "N": ex["N"],
        "sigma" if ex["kind"] == ADDITIVE else "q": ex["noise"],
        "true_noise": ex["noise"],
        "realized_noise": config.realized_noise,
        "measure": measure.to_dict(),
    }
    report = run_recovery(spectrum, ex["kind"], measure.n, noise=None, echo=header, **job)
    return spectrum, report


def cmd_reproduce(args):
    if args.example not in EXAMPLES:
        raise UsageError(f"example: unknown id {args.example!r}, expected one of "
                         + ", ".join(sorted(EXAMPLES)))
    spectrum, report = _reproduce(args.example, args.seed, _solver(args))
    out = args.out or f"reproduce-{args.example}"
    os.makedirs(out, exist_ok=True)
    io.write_spectrum(os.path.join(out, "spectrum.txt"), spectrum)
    io.write_json(os.path.join(out, "report.json"), report.to_dict())
    io.write_landscape(os.path.join(out, "landscape.csv"), report.noise.landscape)
    io.write_histogram(os.path.join(out, "histogram.csv"), spectrum)
    _say(args, f"{args.example} seed={args.seed}: " + _summary(report))
    _say(args, f"wrote {out}")
    return EXIT_OK


def cmd_replay(args):
    try:
        echo = io.read_json(args.report)["config_echo"]
        command = echo["command"]
        job = _job_kwargs(echo)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"report: {exc}")
    if command == "reproduce":
        for key in ("kind", "n", "noise"):
            job.pop(key)
        _, report = _reproduce(echo["example"], echo["seed"], job)
    elif command == "recover":
        spectrum = _load_spectrum(echo["spectrum"])
        if io.file_digest(echo["spectrum"]) != echo["spectrum_sha256"]:
            raise UsageError("spectrum: file changed since the report was written")
        header = {k: echo[k] for k in ("command", "spectrum", "spectrum_sha256")}
        report = run_recovery(spectrum, echo=header, **job)
    else:
        raise UsageError(f"report: unknown command {command!r}")
    _emit(args.out, io.dumps(report.to_dict()))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "recover": cmd_recover,
    "landscape": cmd_landscape,
    "reproduce": cmd_reproduce,
    "replay": cmd_replay,
}


def main(argv=None):
    """Run the CLI and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RecoveryError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
