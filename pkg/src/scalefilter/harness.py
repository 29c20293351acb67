"""Sweeps over noise level, regularization weight and training-set size.

One run draws a pool of synthetic textures, blurs them with a zero-sum
kernel, adds noise per (SNR, repetition), and for every training-set size
fits one kernel per ``lam`` from a random training subset. Each fit is
scored on the held-out images.

Results go to CSV with this fixed column order (see :data:`CSV_COLUMNS`):

    snr_db, lambda, train_size, repetition, test_mse, log10_mse, clean_mse,
    noise_floor, train_image_ids, solver_iterations, final_residual,
    converged, clipped_fraction, failed

``test_mse`` is scored against the noisy held-out outputs, ``clean_mse``
against their noiseless versions. ``train_image_ids`` is a space separated
list. Floats are written with 17 significant digits so they parse back
exactly.

Experiment config files are flat ``key = value`` lines; ``#`` starts a
comment and lists are comma separated. Recognized keys and defaults are
those of :class:`ExperimentConfig` (``height``/``width`` for the image size,
``snr_db``, ``lambdas``, ``train_sizes`` for the lists, ``kernel_r_pos``,
``kernel_r_in``, ``kernel_r_out`` for the kernel, ``tolerance``,
``max_iterations``, ``epsilon_ridge`` for the solver).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from . import estimator
from .estimator import SolverOptions, SufficientStatistics
from .gridfield import clipped_fraction
from .synthlab import (
    NoiseSpec,
    ZeroSumKernelSpec,
    make_dataset,
    make_texture,
    make_zero_sum_kernel,
    rng_for,
    snr_to_sigma,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "TTestResult",
    "mse",
    "noise_floor",
    "derive_seed",
    "run_experiment",
    "paired_t_test",
    "mean_errors",
    "best_lambda",
    "compare_to_unregularized",
    "emit_csv",
    "read_csv",
    "load_config",
    "parse_config",
    "CSV_COLUMNS",
    "format_config",
]

log = logging.getLogger(__name__)

STANDARD_SNR_DB = (65.8, 25.8, -14.2)
DEFAULT_LAMBDAS = (0.0,) + tuple(10.0 ** np.arange(-5, 8, 2))


def mse(predicted, target) -> float:
    """Per-pixel mean squared difference."""
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {target.shape}")
    return float(np.mean((predicted - target) ** 2))


def noise_floor(snr_db: float, clean_test_outputs) -> float:
    """Expected squared error of the true kernel: mean noise variance over images."""
    outputs = list(clean_test_outputs)
    if not outputs:
        raise ValueError("no test outputs")
    return float(np.mean([snr_to_sigma(c, snr_db) ** 2 for c in outputs]))


def derive_seed(base_seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a cell of the sweep."""
    seq = np.random.SeedSequence([base_seed, *keys])
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    image_size: tuple = (128, 128)
    n_images: int = 8
    snr_db_list: list = field(default_factory=lambda: list(STANDARD_SNR_DB))
    lambda_list: list = field(default_factory=lambda: list(DEFAULT_LAMBDAS))
    train_sizes: list = field(default_factory=lambda: [1, 2, 4])
    repetitions: int = 10
    base_seed: int = 0
    kernel_spec: ZeroSumKernelSpec | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    correlation_length: float = 2.0

    def __post_init__(self):
        self.image_size = tuple(int(n) for n in self.image_size)
        if self.kernel_spec is None:
            self.kernel_spec = ZeroSumKernelSpec(*self.image_size, 2.0, 2.0, 5.0)
        self.validate()

    def validate(self):
        if len(self.image_size) != 2 or min(self.image_size) < 1:
            raise ValueError(f"bad image size {self.image_size}")
        if (self.kernel_spec.height, self.kernel_spec.width) != self.image_size:
            raise ValueError("kernel dimensions must match the image size")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not self.train_sizes or not self.lambda_list or not self.snr_db_list:
            raise ValueError("snr, lambda and train-size lists must be non-empty")
        for ts in self.train_sizes:
            if not 1 <= ts < self.n_images:
                raise ValueError(f"train size {ts} leaves no test images out of {self.n_images}")
        for lam in self.lambda_list:
            if not lam >= 0:
                raise ValueError(f"lambda must be nonnegative, got {lam}")


@dataclass
class ExperimentRecord:
    snr_db: float
    lam: float
    train_size: int
    repetition: int
    test_mse: float
    log10_mse: float
    clean_mse: float
    noise_floor: float
    train_image_ids: list
    solver_iterations: int
    final_residual: float
    converged: bool
    clipped_fraction: float
    failed: bool = False


CSV_COLUMNS = (
    "snr_db",
    "lambda",
    "train_size",
    "repetition",
    "test_mse",
    "log10_mse",
    "clean_mse",
    "noise_floor",
    "train_image_ids",
    "solver_iterations",
    "final_residual",
    "converged",
    "clipped_fraction",
    "failed",
)


def _predict(a_hat: np.ndarray, u_hat: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(a_hat * u_hat).real


def run_experiment(config: ExperimentConfig, inputs=None) -> list:
    """Run the full sweep; returns records ordered by (snr, train size, repetition, lambda).

    ``inputs`` replaces the generated texture pool when given.
    """
    config.validate()
    h, w = config.image_size
    if inputs is None:
        inputs = [
            make_texture(h, w, derive_seed(config.base_seed, 1, i), config.correlation_length)
            for i in range(config.n_images)
        ]
    inputs = [np.asarray(a, dtype=np.float64) for a in inputs]
    if len(inputs) != config.n_images:
        raise ValueError(f"expected {config.n_images} input images, got {len(inputs)}")
    kernel = make_zero_sum_kernel(config.kernel_spec)
    clip_lo, clip_hi = 2.0 * kernel.min(), 2.0 * kernel.max()
    a_hats = [np.fft.fft2(a) for a in inputs]
    clean = [_predict(a_hat, np.fft.fft2(kernel)) for a_hat in a_hats]

    records = []
    for si, snr in enumerate(config.snr_db_list):
        for rep in range(config.repetitions):
            noise_seed = derive_seed(config.base_seed, 2, si, rep)
            pairs = make_dataset(inputs, kernel, NoiseSpec(snr, noise_seed))
            outputs = [b for _, b in pairs]
            for ti, ts in enumerate(config.train_sizes):
                perm = rng_for(derive_seed(config.base_seed, 3, si, ti, rep)).permutation(config.n_images)
                train = sorted(int(i) for i in perm[:ts])
                test = sorted(int(i) for i in perm[ts:])
                stats = SufficientStatistics.empty(h, w)
                for i in train:
                    stats = estimator.accumulate(stats, inputs[i], outputs[i])
                floor = noise_floor(snr, [clean[i] for i in test])
                log.info("snr=%g train_size=%d rep=%d train=%s", snr, ts, rep, train)
                for li, lam in enumerate(config.lambda_list):
                    records.append((
                        (si, ti, rep, li),
                        _score(stats, lam, config.solver, a_hats, outputs, clean, test,
                               (clip_lo, clip_hi), snr, ts, rep, train, floor),
                    ))
    # configured key order, independent of loop order
    records.sort(key=lambda item: item[0])
    return [rec for _, rec in records]


def _score(stats, lam, opts, a_hats, outputs, clean, test, clip, snr, ts, rep, train, floor):
    try:
        est = estimator.fit(stats, lam, opts)
    except estimator.DivergenceError as exc:
        log.error("fit failed (snr=%g, lam=%g, train_size=%d, rep=%d): %s", snr, lam, ts, rep, exc)
        nan = float("nan")
        return ExperimentRecord(snr, lam, ts, rep, nan, nan, nan, floor, train, 0, nan,
                                False, nan, failed=True)
    preds = [_predict(a_hats[i], est.spectrum) for i in test]
    test_mse = float(np.mean([mse(p, outputs[i]) for p, i in zip(preds, test)]))
    clean_mse = float(np.mean([mse(p, clean[i]) for p, i in zip(preds, test)]))
    log10 = math.log10(test_mse) if test_mse > 0 else float("-inf")
    return ExperimentRecord(
        snr, lam, ts, rep, test_mse, log10, clean_mse, floor, train,
        est.iterations, est.final_residual, est.converged,
        clipped_fraction(est.kernel, *clip),
    )


# --------------------------------------------------------------------------
# statistics over records


class TTestResult(NamedTuple):
    statistic: float
    pvalue: float
    degenerate: bool = False


def paired_t_test(errors_a, errors_b) -> TTestResult:
    """Two-sided paired t-test on ``errors_a - errors_b``.

    Zero-variance differences give ``degenerate=True``; then ``p`` is 1 when
    the differences are all zero and 0 otherwise.
    """
    a = np.asarray(errors_a, dtype=np.float64)
    b = np.asarray(errors_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1D and of equal length")
    n = a.size
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = a - b
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0:
        if mean == 0:
            return TTestResult(0.0, 1.0, True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, True)
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p = special.betainc(df / 2.0, 0.5, df / (df + t * t))
    return TTestResult(float(t), float(p), False)


def mean_errors(records, snr_db, train_size, column: str = "test_mse") -> dict:
    """Mean of ``column`` over repetitions, keyed by lambda."""
    groups = {}
    for r in records:
        if r.snr_db == snr_db and r.train_size == train_size and not r.failed:
            groups.setdefault(r.lam, []).append(getattr(r, column))
    return {lam: float(np.mean(v)) for lam, v in groups.items()}


def best_lambda(records, snr_db, train_size) -> float:
    """Positive lambda with the lowest mean test error."""
    means = {lam: m for lam, m in mean_errors(records, snr_db, train_size).items() if lam > 0}
    if not means:
        raise ValueError("no positive lambda in the records")
    return min(means, key=means.get)


def compare_to_unregularized(records, snr_db, train_size):
    """Best positive lambda against ``lam = 0``.

    Returns ``(best_lam, ratio, ttest)`` where ``ratio`` is the mean test
    error at ``lam = 0`` divided by that at ``best_lam`` and the t-test is
    paired over repetitions on log10 errors.
    """
    best = best_lambda(records, snr_db, train_size)
    means = mean_errors(records, snr_db, train_size)
    if 0.0 not in means:
        raise ValueError("records hold no lam = 0 fits")

    def by_rep(lam):
        return {r.repetition: r.log10_mse for r in records
                if r.snr_db == snr_db and r.train_size == train_size and r.lam == lam and not r.failed}

    zero, reg = by_rep(0.0), by_rep(best)
    reps = sorted(set(zero) & set(reg))
    ttest = paired_t_test([zero[k] for k in reps], [reg[k] for k in reps])
    return best, means[0.0] / means[best], ttest


# --------------------------------------------------------------------------
# CSV


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                _fmt(r.snr_db), _fmt(r.lam), _fmt(r.train_size), _fmt(r.repetition),
                _fmt(r.test_mse), _fmt(r.log10_mse), _fmt(r.clean_mse), _fmt(r.noise_floor),
                " ".join(str(i) for i in r.train_image_ids),
                _fmt(r.solver_iterations), _fmt(r.final_residual), _fmt(r.converged),
                _fmt(r.clipped_fraction), _fmt(r.failed),
            ])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        records = []
        for row in reader:
            v = dict(zip(CSV_COLUMNS, row))
            records.append(ExperimentRecord(
                snr_db=float(v["snr_db"]),
                lam=float(v["lambda"]),
                train_size=int(v["train_size"]),
                repetition=int(v["repetition"]),
                test_mse=float(v["test_mse"]),
                log10_mse=float(v["log10_mse"]),
                clean_mse=float(v["clean_mse"]),
                noise_floor=float(v["noise_floor"]),
                train_image_ids=[int(i) for i in v["train_image_ids"].split()],
                solver_iterations=int(v["solver_iterations"]),
                final_residual=float(v["final_residual"]),
                converged=v["converged"] == "true",
                clipped_fraction=float(v["clipped_fraction"]),
                failed=v["failed"] == "true",
            ))
    return records


# --------------------------------------------------------------------------
# config files

_LIST_KEYS = {"snr_db": float, "lambdas": float, "train_sizes": int}
_SCALAR_KEYS = {
    "height": int, "width": int, "n_images": int, "repetitions": int, "base_seed": int,
    "correlation_length": float, "kernel_r_pos": float, "kernel_r_in": float,
    "kernel_r_out": float, "tolerance": float, "max_iterations": int, "epsilon_ridge": float,
}


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        try:
            if key in _LIST_KEYS:
                values[key] = [_LIST_KEYS[key](item.strip()) for item in value.split(",")]
            elif key in _SCALAR_KEYS:
                values[key] = _SCALAR_KEYS[key](value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc

    defaults = ExperimentConfig()
    h = values.get("height", defaults.image_size[0])
    w = values.get("width", defaults.image_size[1])
    kernel_spec = ZeroSumKernelSpec(
        h, w,
        values.get("kernel_r_pos", defaults.kernel_spec.r_pos),
        values.get("kernel_r_in", defaults.kernel_spec.r_in),
        values.get("kernel_r_out", defaults.kernel_spec.r_out),
    )
    solver = SolverOptions(
        tolerance=values.get("tolerance", defaults.solver.tolerance),
        max_iterations=values.get("max_iterations", defaults.solver.max_iterations),
        epsilon_ridge=values.get("epsilon_ridge"),
    )
    return ExperimentConfig(
        image_size=(h, w),
        n_images=values.get("n_images", defaults.n_images),
        snr_db_list=values.get("snr_db", defaults.snr_db_list),
        lambda_list=values.get("lambdas", defaults.lambda_list),
        train_sizes=values.get("train_sizes", defaults.train_sizes),
        repetitions=values.get("repetitions", defaults.repetitions),
        base_seed=values.get("base_seed", defaults.base_seed),
        kernel_spec=kernel_spec,
        solver=solver,
        correlation_length=values.get("correlation_length", defaults.correlation_length),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(config: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`."""
    ks = config.kernel_spec
    lines = [
        f"height = {config.image_size[0]}",
        f"width = {config.image_size[1]}",
        f"n_images = {config.n_images}",
        "snr_db = " + ", ".join(_fmt(s) for s in config.snr_db_list),
        "lambdas = " + ", ".join(_fmt(lam) for lam in config.lambda_list),
        "train_sizes = " + ", ".join(str(t) for t in config.train_sizes),
        f"repetitions = {config.repetitions}",
        f"base_seed = {config.base_seed}",
        f"correlation_length = {_fmt(config.correlation_length)}",
        f"kernel_r_pos = {_fmt(ks.r_pos)}",
        f"kernel_r_in = {_fmt(ks.r_in)}",
        f"kernel_r_out = {_fmt(ks.r_out)}",
        f"tolerance = {_fmt(config.solver.tolerance)}",
        f"max_iterations = {config.solver.max_iterations}",
    ]
    if config.solver.epsilon_ridge is not None:
        lines.append(f"epsilon_ridge = {_fmt(config.solver.epsilon_ridge)}")
    return "\n".join(lines) + "\n"
