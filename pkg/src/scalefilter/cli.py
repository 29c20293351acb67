"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data or format error,
3 solver did not converge (only with ``fit --strict``).

Images may be given as ``.pgm`` files or as real field files; everything
the tool writes is a field file unless noted. Image pair directories hold
``input_NNN.field`` / ``output_NNN.field``; statistics directories hold
``header.txt``, ``aa.field`` and ``ab.field``.
"""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys

import numpy as np

from . import estimator, gridfield, harness, synthlab
from .spectral import circ_convolve

log = logging.getLogger("scalefilter")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_image(path) -> np.ndarray:
    if str(path).lower().endswith((".pgm", ".pnm")):
        return gridfield.load_pgm(path)
    return gridfield.load_field(path, kind="real")


def read_pairs(directory):
    inputs = sorted(glob.glob(os.path.join(directory, "input_*.field")))
    if not inputs:
        raise FileNotFoundError(f"no input_*.field files in {directory}")
    pairs = []
    for path in inputs:
        out = os.path.join(directory, os.path.basename(path).replace("input_", "output_", 1))
        pairs.append((gridfield.load_field(path, kind="real"), gridfield.load_field(out, kind="real")))
    return pairs


def write_pairs(pairs, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for i, (alpha, beta) in enumerate(pairs):
        gridfield.save_field(alpha, os.path.join(directory, f"input_{i:03d}.field"))
        gridfield.save_field(beta, os.path.join(directory, f"output_{i:03d}.field"))


def _snr(text: str) -> float:
    return float(text)


def _solver_options(args) -> estimator.SolverOptions:
    return estimator.SolverOptions(
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        epsilon_ridge=args.epsilon_ridge,
    )


# --------------------------------------------------------------------------
# subcommands


def cmd_synth_kernel(args) -> int:
    spec = synthlab.ZeroSumKernelSpec(args.height, args.width, args.r_pos, args.r_in, args.r_out)
    kernel = synthlab.make_zero_sum_kernel(spec)
    gridfield.ensure_parent(args.output)
    gridfield.save_field(kernel, args.output)
    n_pos = int(np.sum(kernel > 0))
    n_neg = int(np.sum(kernel < 0))
    print(f"kernel {args.height}x{args.width}: {n_pos} positive pixels at {kernel.max():.17g}, "
          f"{n_neg} negative at -1")
    if args.preview:
        gridfield.save_pgm(kernel, args.preview, 2 * kernel.min(), 2 * kernel.max())
    return EXIT_OK


def cmd_make_dataset(args) -> int:
    kernel = gridfield.load_field(args.kernel, kind="real")
    h, w = kernel.shape
    if args.inputs:
        paths = sorted(glob.glob(os.path.join(args.inputs, "*.pgm")) +
                       glob.glob(os.path.join(args.inputs, "*.field")))
        if not paths:
            raise FileNotFoundError(f"no .pgm or .field images in {args.inputs}")
        inputs = [read_image(p) for p in paths]
    else:
        inputs = [
            synthlab.make_texture(h, w, harness.derive_seed(args.seed, 1, i), args.correlation_length)
            for i in range(args.textures)
        ]
    pairs = synthlab.make_dataset(inputs, kernel, synthlab.NoiseSpec(args.snr, args.seed))
    write_pairs(pairs, args.output)
    print(f"wrote {len(pairs)} pairs to {args.output}")
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.pairs:
        pairs = read_pairs(args.pairs)
    elif args.input and args.output_image:
        pairs = [(read_image(args.input), read_image(args.output_image))]
    else:
        raise UsageError("give --pairs DIR or both --input and --target")

    header = os.path.join(args.output, "header.txt")
    if args.append and os.path.exists(header):
        stats = estimator.load_statistics(args.output)
    else:
        stats = estimator.SufficientStatistics.empty(*pairs[0][0].shape)
    for alpha, beta in pairs:
        stats = estimator.accumulate(stats, alpha, beta)
    estimator.save_statistics(stats, args.output)
    print(f"statistics over {stats.n_pairs} pairs ({stats.height}x{stats.width}) in {args.output}")
    return EXIT_OK


def cmd_fit(args) -> int:
    stats = estimator.load_statistics(args.stats)
    est = estimator.fit(stats, args.lam, _solver_options(args))
    gridfield.ensure_parent(args.output)
    gridfield.save_field(est.kernel, args.output)
    print(f"lambda = {est.lam:.17g}")
    print(f"pairs = {stats.n_pairs}")
    print(f"iterations = {est.iterations}")
    print(f"final_residual = {est.final_residual:.3g}")
    print(f"converged = {str(est.converged).lower()}")
    if est.lam > 0 and stats.n_pairs > 1:
        print(f"note: the data term is summed over pairs, so the effective weight "
              f"per pair is lambda / {stats.n_pairs}")
    if args.preview:
        lo, hi = (args.clip if args.clip else (est.kernel.min(), est.kernel.max()))
        if not lo < hi:
            lo, hi = lo - 1.0, hi + 1.0
        if args.crop:
            shown = gridfield.center_crop(est.kernel, args.crop, args.crop)
        else:
            shown = np.fft.fftshift(est.kernel)
        frac = gridfield.save_pgm(shown, args.preview, lo, hi)
        print(f"clipped_fraction = {frac:.6g}")
    if args.strict and not est.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_predict(args) -> int:
    kernel = gridfield.load_field(args.kernel, kind="real")
    image = read_image(args.image)
    pred = circ_convolve(image, kernel)
    gridfield.ensure_parent(args.output)
    gridfield.save_field(pred, args.output)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    kernel = gridfield.load_field(args.kernel, kind="real")
    errors = [harness.mse(circ_convolve(a, kernel), b) for a, b in read_pairs(args.pairs)]
    for i, e in enumerate(errors):
        print(f"pair {i}: mse = {e:.17g}")
    print(f"mean mse = {np.mean(errors):.17g}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = harness.load_config(args.config)
    records = harness.run_experiment(config)
    gridfield.ensure_parent(args.output)
    harness.emit_csv(records, args.output)
    print(f"wrote {len(records)} records to {args.output}")
    zero_present = 0.0 in config.lambda_list and any(lam > 0 for lam in config.lambda_list)
    if zero_present and config.repetitions >= 2:
        for snr in config.snr_db_list:
            for ts in config.train_sizes:
                best, ratio, tt = harness.compare_to_unregularized(records, snr, ts)
                print(f"snr {snr:g} dB, train size {ts}: best lambda {best:g}, "
                      f"error ratio {ratio:.3g}, paired t p = {tt.pvalue:.3g}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scalefilter", description="Learn convolution kernels from image pairs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth-kernel", help="write a zero-sum disk/annulus kernel")
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--r-pos", type=float, default=2.0)
    p.add_argument("--r-in", type=float, default=2.0)
    p.add_argument("--r-out", type=float, default=5.0)
    p.add_argument("--preview", help="also write a PGM preview")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth_kernel)

    p = sub.add_parser("make-dataset", help="blur and corrupt images into training pairs")
    p.add_argument("--kernel", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--inputs", help="directory of .pgm/.field input images")
    src.add_argument("--textures", type=int, help="generate this many textures")
    p.add_argument("--correlation-length", type=float, default=2.0)
    p.add_argument("--snr", type=_snr, default=float("inf"), help="dB; 'inf' for no noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="pair directory")
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("stats", help="accumulate sufficient statistics")
    p.add_argument("--pairs", help="pair directory")
    p.add_argument("--input", help="single input image")
    p.add_argument("--target", dest="output_image", help="single output image")
    p.add_argument("--append", action="store_true", help="add to existing statistics")
    p.add_argument("-o", "--output", required=True, help="statistics directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fit", help="solve for a kernel")
    p.add_argument("--stats", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--max-iterations", type=int, default=100_000)
    p.add_argument("--epsilon-ridge", type=float, default=None)
    p.add_argument("--strict", action="store_true", help="exit 3 if not converged")
    p.add_argument("--preview", help="also write a centered PGM preview")
    p.add_argument("--clip", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--crop", type=int, help="crop the preview to CROP x CROP")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a kernel to an image")
    p.add_argument("--kernel", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="mean squared error of a kernel on pairs")
    p.add_argument("--kernel", required=True)
    p.add_argument("--pairs", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run a sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", required=True, help="CSV path")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"scalefilter: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, estimator.DivergenceError) as exc:
        print(f"scalefilter: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
