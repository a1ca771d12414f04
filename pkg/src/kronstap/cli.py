"""Command line driver.

Subcommands: simulate, estimate, filter, detect, bench. Exit status is
0 on success, 1 for usage problems, 2 for malformed or mismatched data,
and 3 when the estimator hit its iteration cap without converging.
The thread pool size comes from --threads, falling back to the
KRONSTAP_THREADS environment variable, and never changes numerical
output.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import bench as bench_mod
from . import formats
from .errors import ConfigError, DataError, KronStapError
from .filters import build_filter, detection_image, make_doppler_grid, \
    make_spatial_grid
from .layout import cube_to_snapshots
from .lrkron import lr_kron_estimate, sample_covariance
from .multipass import change_detect, pass_images, stack_passes
from .parallel import WorkerPool, chunk_spans
from .simulate import PhaseHistory, gen_clutter, gen_multipass, inject_target

USAGE_ERROR = 1
DATA_ERROR = 2
NO_CONVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_ERROR)


def _add_common(parser):
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: KRONSTAP_THREADS or 1)")


def build_parser():
    parser = _Parser(prog="kronstap",
                     description="Kronecker-structured STAP toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a clutter cube")
    p_sim.add_argument("--config", required=True, help="scene config file")
    p_sim.add_argument("--output", required=True, help="output .kph file")
    p_sim.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="fit the Kronecker covariance")
    p_est.add_argument("--input", required=True, help="input .kph file")
    p_est.add_argument("--output", required=True, help="output estimate file")
    p_est.add_argument("--ra", type=int, required=True, help="spatial rank")
    p_est.add_argument("--rb", type=int, required=True, help="temporal rank")
    p_est.add_argument("--eps", type=float, default=1e-4,
                       help="residual stall tolerance")
    p_est.add_argument("--max-iter", type=int, default=100)
    _add_common(p_est)
    p_est.set_defaults(func=cmd_estimate)

    p_fil = sub.add_parser("filter", help="apply a clutter filter to a cube")
    p_fil.add_argument("--input", required=True)
    p_fil.add_argument("--estimate", required=True)
    p_fil.add_argument("--output", required=True)
    p_fil.add_argument("--kind", choices=("kron", "classical"), default="kron")
    p_fil.add_argument("--no-temporal-projection", action="store_true",
                       help="spatial-only cancelation")
    _add_common(p_fil)
    p_fil.set_defaults(func=cmd_filter)

    p_det = sub.add_parser("detect", help="form a detection or change map")
    p_det.add_argument("--input", required=True)
    p_det.add_argument("--estimate", required=True)
    p_det.add_argument("--output", required=True, help="output CSV path")
    p_det.add_argument("--kind", choices=("kron", "classical"), default="kron")
    p_det.add_argument("--grid-doppler", type=int, default=64)
    p_det.add_argument("--grid-spatial", type=int, default=16)
    p_det.add_argument("--multipass", action="store_true",
                       help="two-pass change map instead of a detection map")
    p_det.add_argument("--signed", action="store_true",
                       help="keep the sign of the change map")
    p_det.add_argument("--no-temporal-projection", action="store_true")
    p_det.add_argument("--pgm", default=None, help="also write a PGM image")
    _add_common(p_det)
    p_det.set_defaults(func=cmd_detect)

    p_ben = sub.add_parser("bench", help="time the estimator over a sweep")
    p_ben.add_argument("--output", required=True, help="output CSV path")
    p_ben.add_argument("--sweep", default=None,
                       help="sweep file with 'row = p q threads eps' lines")
    p_ben.add_argument("--default-sweep", action="store_true",
                       help="run the built-in grid")
    p_ben.add_argument("--trials", type=int, default=10)
    p_ben.add_argument("--n", type=int, default=5, dest="n_train",
                       help="training snapshots per trial")
    p_ben.add_argument("--seed", type=int, default=0)
    _add_common(p_ben)
    p_ben.set_defaults(func=cmd_bench)
    return parser


def cmd_simulate(args, pool):
    job = formats.load_scene_config(args.config)
    scene = job.scene
    if args.seed is not None:
        scene = replace(scene, seed=args.seed)
    if job.n_passes == 1:
        history = gen_clutter(scene, pool=pool)
    else:
        history = gen_multipass(scene, job.n_passes,
                                change_fraction=job.change_fraction,
                                shared_calibration=job.shared_calibration,
                                unit_gains=job.unit_pass_gains,
                                gain_spread=job.pass_gain_spread,
                                pool=pool)
    for bin_index, doppler, amplitude in job.targets:
        history = inject_target(history, bin_index, doppler, amplitude,
                                kappa=scene.kappa)
    formats.write_phase_history(args.output, history)
    print(f"wrote {args.output}: {history.n_passes} pass(es), "
          f"{history.n_bins} bins of {history.p}x{history.q}, "
          f"{len(history.truth)} target(s)")
    return 0


def _load_snapshots(history):
    """Snapshots for estimation; multipass cubes are stacked first."""
    if history.n_passes == 1:
        return cube_to_snapshots(history.data[0]), history.p, history.q
    stacked = stack_passes(history)
    snapshots = np.ascontiguousarray(stacked.data).reshape(stacked.n_bins, -1)
    return snapshots, stacked.stacked_channels, stacked.q


def cmd_estimate(args, pool):
    history = formats.read_phase_history(args.input)
    snapshots, sdim, q = _load_snapshots(history)
    scm = sample_covariance(snapshots, sdim, q, pool=pool)
    est = lr_kron_estimate(scm, args.ra, args.rb, tol=args.eps,
                           max_iter=args.max_iter, pool=pool)
    formats.write_estimate(args.output, est)
    formats.write_residuals_csv(args.output + ".residuals.csv", est.residuals)
    state = "converged" if est.converged else "hit max-iter"
    print(f"wrote {args.output}: {est.iterations} iteration(s), "
          f"final residual {est.residuals[-1]:.3e}, {state}")
    return 0 if est.converged else NO_CONVERGENCE


def _projection_filter_for(history, est, kind, drop_temporal):
    sdim = est.spatial.shape[0]
    stacked = sdim == history.n_passes * history.p and history.n_passes > 1
    if not stacked and sdim != history.p:
        raise DataError(
            f"estimate spatial dim {sdim} matches neither p={history.p} "
            f"nor stacked {history.n_passes * history.p}"
        )
    if est.temporal.shape[0] != history.q:
        raise DataError(
            f"estimate temporal dim {est.temporal.shape[0]} "
            f"does not match q={history.q}"
        )
    filt = build_filter(kind, estimate=est, drop_temporal=drop_temporal)
    return filt, stacked


def cmd_filter(args, pool):
    history = formats.read_phase_history(args.input)
    est = formats.read_estimate(args.estimate)
    filt, stacked = _projection_filter_for(history, est, args.kind,
                                           args.no_temporal_projection)
    out = np.empty_like(history.data)
    if stacked:
        st = stack_passes(history)
        k = history.n_passes

        def run(m0, m1):
            for m in range(m0, m1):
                filtered = filt.apply_matrix(st.data[m])
                out[:, m] = filtered.reshape(k, history.p, history.q)

        pool.run(run, chunk_spans(history.n_bins))
    else:
        def run(m0, m1):
            for m in range(m0, m1):
                for k in range(history.n_passes):
                    out[k, m] = filt.apply_matrix(history.data[k, m])

        pool.run(run, chunk_spans(history.n_bins))
    formats.write_phase_history(
        args.output,
        PhaseHistory(history.p, history.q, history.n_passes, out,
                     list(history.truth)),
    )
    print(f"wrote {args.output}: filtered with {args.kind}")
    return 0


def cmd_detect(args, pool):
    history = formats.read_phase_history(args.input)
    est = formats.read_estimate(args.estimate)
    dopplers = make_doppler_grid(args.grid_doppler)
    if args.multipass:
        if history.n_passes != 2:
            raise DataError(
                f"change detection needs exactly 2 passes, got {history.n_passes}"
            )
        filt, stacked = _projection_filter_for(history, est, args.kind,
                                               args.no_temporal_projection)
        if not stacked:
            raise DataError("change detection needs a stacked estimate")
        st = stack_passes(history)
        images = pass_images(filt, st, dopplers, args.grid_spatial, pool=pool)
        image = change_detect(images[0], images[1], signed=args.signed)
        label = "change map"
    else:
        if history.n_passes != 1:
            raise DataError("multipass input needs --multipass")
        filt, _ = _projection_filter_for(history, est, args.kind,
                                         args.no_temporal_projection)
        grid = make_spatial_grid(history.p, args.grid_spatial)
        image = detection_image(filt, history.data[0], dopplers, grid,
                                pool=pool)
        label = "detection map"
    formats.write_detection_csv(args.output, image)
    if args.pgm is not None:
        formats.write_pgm(args.pgm, np.abs(image.values))
    peak = float(np.max(np.abs(image.values))) if image.values.size else 0.0
    print(f"wrote {args.output}: {label}, peak magnitude {peak:.4e}")
    return 0


def _load_sweep(path):
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh.read().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(lineno, f"expected 'row = p q threads eps', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            if key.strip() != "row":
                raise ConfigError(lineno, f"unknown key {key.strip()!r}")
            parts = value.split()
            if len(parts) != 4:
                raise ConfigError(lineno, "row takes exactly: p q threads eps")
            try:
                rows.append((int(parts[0]), int(parts[1]), int(parts[2]),
                             float(parts[3])))
            except ValueError:
                raise ConfigError(lineno, f"bad row fields {value.strip()!r}") from None
    if not rows:
        raise DataError("sweep file lists no rows")
    return rows


def cmd_bench(args, pool):
    if args.default_sweep == (args.sweep is not None):
        raise DataError("pass exactly one of --sweep or --default-sweep")
    sweep = bench_mod.default_sweep() if args.default_sweep \
        else _load_sweep(args.sweep)

    def progress(trial, trials):
        print(f"completed trial {trial + 1}/{trials} across {len(sweep)} rows")

    rows = bench_mod.run_bench(sweep, trials=args.trials, n=args.n_train,
                               seed=args.seed, progress=progress)
    formats.write_bench_csv(args.output, rows)
    for p, q, threads, eps in sweep:
        mean = bench_mod.mean_seconds(rows, p, q, threads, eps)
        print(f"p={p} q={q} threads={threads} eps={eps:g}: "
              f"mean {mean:.4f} s over {args.trials} trial(s)")
    print(f"wrote {args.output}")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads
    if threads is None:
        env = os.environ.get("KRONSTAP_THREADS", "1")
        try:
            threads = int(env)
        except ValueError:
            sys.stderr.write(f"kronstap: bad KRONSTAP_THREADS value {env!r}\n")
            return USAGE_ERROR
    if threads < 1:
        sys.stderr.write(f"kronstap: thread count must be >= 1, got {threads}\n")
        return USAGE_ERROR
    try:
        with WorkerPool(threads) as pool:
            return args.func(args, pool)
    except KronStapError as exc:
        sys.stderr.write(f"kronstap: error: {exc}\n")
        return DATA_ERROR
    except OSError as exc:
        sys.stderr.write(f"kronstap: error: {exc}\n")
        return DATA_ERROR


def entry():
    sys.exit(main(sys.argv[1:]))
