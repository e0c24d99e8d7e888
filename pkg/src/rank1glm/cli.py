"""Command line interface: ``rank1glm`` with subcommands simulate, fit,
validate and encode.

Exit codes: 0 success, 2 format error, 3 numerical failure,
4 insufficient data.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .design import read_events, write_events
from .encoding import EncodingDataset, encoding_benchmark, write_scatter_csv
from .exceptions import (
    FormatError,
    InsufficientDataError,
    NumericalFailureError,
)
from .hrf import canonical_basis, fir_basis
from .io import (
    read_bold,
    read_matrix_csv,
    write_bold,
    write_matrix_csv,
)
from .pipeline import Dataset, Session, cross_session_validate, fit_dataset
from .rank_one import SolverOptions
from .simulate import SimSpec, gen_session


def _parse_spec_file(path):
    """Flat ``key = value`` file with keys matching SimSpec fields."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise FormatError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in SimSpec.__dataclass_fields__:
            raise FormatError(f"{path}: line {lineno}: unknown key '{key}'")
        values[key] = _coerce_spec_value(key, raw, path, lineno)
    return SimSpec(**values)


def _coerce_spec_value(key, raw, path, lineno):
    field = SimSpec.__dataclass_fields__[key]
    try:
        if key == "isi_range":
            lo, hi = (float(x) for x in raw.split(","))
            return (lo, hi)
        if key == "true_hrf":
            return raw
        if key == "asynchronous":
            return raw.lower() in ("1", "true", "yes")
        if field.type in ("int", int):
            return int(raw)
        return float(raw)
    except ValueError:
        raise FormatError(
            f"{path}: line {lineno}: cannot parse '{raw}' for key '{key}'"
        ) from None


def _make_basis(arg, tr, hrf_duration):
    kind, _, param = arg.partition(":")
    if kind == "fir":
        return fir_basis(int(param or 0))
    if kind == "canonical":
        r = int(math.ceil(hrf_duration / tr))
        return canonical_basis(r, tr, int(param or "0"))
    raise ValueError(f"unknown basis '{arg}' (expected fir:<r> or canonical:<derivs>)")


def _solver_options(args):
    return SolverOptions(
        max_iter=args.max_iter, tol=args.tol,
        history=args.lbfgs_history, hrf_penalty=args.hrf_penalty,
    )


def _add_solver_flags(parser):
    parser.add_argument("--max-iter", type=int, default=500)
    parser.add_argument("--tol", type=float, default=1e-8)
    parser.add_argument("--lbfgs-history", type=int, default=10)
    parser.add_argument("--hrf-penalty", type=float, default=0.0)


def _add_basis_flags(parser):
    parser.add_argument("--basis", required=True,
                        help="fir:<r> or canonical:<derivatives>")
    parser.add_argument("--hrf-duration", type=float, default=24.0,
                        help="HRF support in seconds for the canonical basis")
    parser.add_argument("--dump-basis", metavar="CSV",
                        help="write the sampled basis (r rows, t columns)")


def _load_sessions(bold_paths, events_paths, confounds_paths=None):
    if len(bold_paths) != len(events_paths):
        raise ValueError("--bold and --events must list one file per session")
    sessions = []
    for i, (bpath, epath) in enumerate(zip(bold_paths, events_paths)):
        bold = read_bold(bpath)
        events = read_events(epath, session_id=f"s{i}")
        if confounds_paths:
            conf = read_matrix_csv(confounds_paths[i])
        else:
            conf = np.zeros((bold.shape[0], 0))
        sessions.append(Session(events=events, bold=bold, confounds=conf))
    p = max(s.events.p for s in sessions)
    sessions = [
        Session(
            events=type(s.events)(
                onsets=s.events.onsets, conditions=s.events.conditions,
                p=p, session_id=s.events.session_id,
            ),
            bold=s.bold, confounds=s.confounds,
        )
        for s in sessions
    ]
    return sessions


def _cmd_simulate(args):
    spec = _parse_spec_file(args.spec)
    os.makedirs(args.out, exist_ok=True)
    truth_h = None
    betas = None
    for s in range(spec.sessions):
        events, bold, truth = gen_session(spec, s)
        write_events(os.path.join(args.out, f"events_s{s}.tsv"), events)
        write_bold(os.path.join(args.out, f"bold_s{s}.npy"), bold)
        write_matrix_csv(
            os.path.join(args.out, f"confounds_s{s}.csv"), truth["confounds"]
        )
        truth_h = truth["h"]
        betas = truth["beta"]
    write_matrix_csv(os.path.join(args.out, "truth_hrf.csv"),
                     truth_h.reshape(-1, 1))
    write_matrix_csv(os.path.join(args.out, "truth_beta.csv"), betas)
    with open(os.path.join(args.out, "truth.txt"), "w", encoding="utf-8") as fh:
        for key in ("n", "tr", "p", "rho", "sigma", "seed", "sessions",
                    "voxels", "repeats", "drift_order"):
            fh.write(f"{key} = {getattr(spec, key)}\n")
        fh.write(f"true_hrf = {spec.true_hrf}\n")
        fh.write(f"rng = {truth['rng']}\n")
    print(f"wrote {spec.sessions} session(s) to {args.out}")
    return 0


def _cmd_fit(args):
    sessions = _load_sessions(args.bold, args.events, args.confounds)
    dataset = Dataset(sessions=sessions, tr=args.tr)
    basis = _make_basis(args.basis, args.tr, args.hrf_duration)
    if args.dump_basis:
        write_matrix_csv(args.dump_basis, basis.samples)
    fits = fit_dataset(
        dataset, basis, _solver_options(args),
        oversample=args.oversample, whiten_noise=(args.whiten == "ar1"),
    )
    os.makedirs(args.out, exist_ok=True)
    H = np.column_stack([f.h for f in fits])
    B = np.column_stack([f.beta for f in fits])
    write_matrix_csv(os.path.join(args.out, "hrf.csv"), H)
    write_matrix_csv(os.path.join(args.out, "beta.csv"), B)
    with open(os.path.join(args.out, "diagnostics.csv"), "w") as fh:
        fh.write("voxel,objective,grad_norm,iterations,converged,degenerate\n")
        for i, f in enumerate(fits):
            fh.write(
                f"{i},{f.objective!r},{f.grad_norm!r},{f.iterations},"
                f"{int(f.converged)},{int(f.degenerate)}\n"
            )
    print(f"fit {len(fits)} voxel(s); outputs in {args.out}")
    return 0


def _read_truth_tr(data_dir):
    path = os.path.join(data_dir, "truth.txt")
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            key, _, raw = line.partition("=")
            if key.strip() == "tr":
                return float(raw)
    return None


def _cmd_validate(args):
    import glob

    events_paths = sorted(glob.glob(os.path.join(args.data, "events_s*.tsv")))
    bold_paths = sorted(glob.glob(os.path.join(args.data, "bold_s*.npy")))
    conf_paths = sorted(glob.glob(os.path.join(args.data, "confounds_s*.csv")))
    if not events_paths or len(events_paths) != len(bold_paths):
        raise FormatError(
            f"{args.data}: expected matching events_s*.tsv and bold_s*.npy"
        )
    tr = args.tr if args.tr is not None else _read_truth_tr(args.data)
    if tr is None:
        raise ValueError("--tr is required (no truth.txt in the data directory)")
    sessions = _load_sessions(bold_paths, events_paths, conf_paths or None)
    dataset = Dataset(sessions=sessions, tr=tr)
    basis = _make_basis(args.basis, tr, args.hrf_duration)
    if args.dump_basis:
        write_matrix_csv(args.dump_basis, basis.samples)
    report = cross_session_validate(
        dataset, basis, _solver_options(args),
        whiten_loglik=(args.whiten == "ar1"), top_k=args.top_k,
        oversample=args.oversample,
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "loglik_pairs.csv"), "w") as fh:
        fh.write("voxel,loglik_canonical,loglik_rank1\n")
        for i in range(report.loglik_rank1.shape[0]):
            fh.write(
                f"{i},{report.loglik_canonical[i]!r},{report.loglik_rank1[i]!r}\n"
            )
    with open(os.path.join(args.out, "tests.txt"), "w") as fh:
        fh.write(
            f"paired_t statistic = {report.t_test.statistic!r}\n"
            f"paired_t p_value = {report.t_test.p_value!r}\n"
            f"wilcoxon statistic = {report.wilcoxon.statistic!r}\n"
            f"wilcoxon p_value (rank1 > canonical) = {report.wilcoxon.p_value!r}\n"
            f"mean peak advance vs canonical (s) = {report.mean_peak_shift!r}\n"
        )
    write_matrix_csv(
        os.path.join(args.out, "mean_hrf.csv"),
        np.column_stack([report.mean_hrf, report.sd_hrf]),
    )
    print(
        f"validated {report.loglik_rank1.shape[0]} voxel(s); "
        f"wilcoxon p = {report.wilcoxon.p_value:.3g}"
    )
    return 0


def _read_features(path):
    if str(path).endswith(".npy"):
        return read_bold(path)
    return read_matrix_csv(path)


def _cmd_encode(args):
    features = _read_features(args.features)
    betas_c = _read_features(args.betas_canonical)
    betas_r = _read_features(args.betas_rank1)
    with open(args.folds, "r", encoding="utf-8") as fh:
        fold_ids = np.array(
            [int(line) for line in fh.read().split() if line.strip()]
        )
    ds_c = EncodingDataset(features=features, activations=betas_c,
                           fold_ids=fold_ids)
    ds_r = EncodingDataset(features=features, activations=betas_r,
                           fold_ids=fold_ids)
    result = encoding_benchmark(ds_c, ds_r, lam=args.ridge_lambda,
                                top_k=args.top_k)
    write_scatter_csv(args.out, result)
    if result.test is None:
        print(f"encoding comparison: {result.note}")
    else:
        print(
            f"encoding comparison: wilcoxon p = {result.test.p_value:.3g} "
            f"(rank1 > canonical, {result.test.n_effective} voxels)"
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rank1glm",
        description="Joint HRF and activation estimation by rank-one regression",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    p_sim.add_argument("--spec", required=True, help="flat key = value spec file")
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit the rank-one model per voxel")
    p_fit.add_argument("--bold", nargs="+", required=True)
    p_fit.add_argument("--events", nargs="+", required=True)
    p_fit.add_argument("--confounds", nargs="+")
    p_fit.add_argument("--tr", type=float, required=True)
    p_fit.add_argument("--oversample", type=int, default=1)
    p_fit.add_argument("--whiten", choices=("none", "ar1"), default="none")
    p_fit.add_argument("--out", required=True)
    _add_basis_flags(p_fit)
    _add_solver_flags(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_val = sub.add_parser("validate", help="cross-session likelihood comparison")
    p_val.add_argument("--data", required=True)
    p_val.add_argument("--tr", type=float)
    p_val.add_argument("--oversample", type=int, default=1)
    p_val.add_argument("--whiten", choices=("none", "ar1"), default="none")
    p_val.add_argument("--top-k", type=int, default=100)
    p_val.add_argument("--out", required=True)
    _add_basis_flags(p_val)
    _add_solver_flags(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_enc = sub.add_parser("encode", help="ridge encoding benchmark")
    p_enc.add_argument("--features", required=True)
    p_enc.add_argument("--betas-canonical", required=True)
    p_enc.add_argument("--betas-rank1", required=True)
    p_enc.add_argument("--folds", required=True)
    p_enc.add_argument("--ridge-lambda", type=float, default=None)
    p_enc.add_argument("--top-k", type=int, default=100)
    p_enc.add_argument("--out", required=True)
    p_enc.set_defaults(func=_cmd_encode)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
