"""Command-line surface: model validation, structural checks, minimization,
simulation, covariance tables, and one-command benchmark reproduction.

Exit codes: 0 pass, 1 semantic failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import benchmarks
from .algebra import parse_word, words_up_to
from .deterministic import find_isomorphism, sub_markov_table
from .errors import ConvergenceError, NoiseDegeneracyError
from .models import (
    AsLpvSsa,
    SchedulingSpec,
    aslpv_to_dict,
    load_model,
    load_scheduling,
    validate_aslpv,
)
from .simulation import (
    DEFAULT_BURN_IN,
    compare_outputs,
    empirical_psi,
    load_trajectory_csv,
    noise_base_covariance,
    save_trajectory_csv,
    simulate_system,
)
from .stochastic import (
    check_minimal_innovation,
    innovation_triple,
    is_stably_invertable,
    minimize_algorithm1,
    minimize_algorithm2,
    psi_y_model_table,
)

REPORT_SCHEMA_VERSION = 1
SEED_ENV_VAR = "LPVSSA_SEED"


def _default_seed() -> int:
    try:
        return int(os.environ.get(SEED_ENV_VAR, "0"))
    except ValueError:
        return 0


def _emit(args, payload: dict, lines) -> None:
    if getattr(args, "json", False):
        payload = {"schema_version": REPORT_SCHEMA_VERSION, **payload}
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _fmt(M: np.ndarray) -> str:
    return np.array2string(np.asarray(M), precision=6, suppress_small=True)


def _load_model_file(path):
    """(model, embedded scheduling or None); parse problems exit 2, semantic 1."""
    try:
        return load_model(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: cannot parse model file {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)
    except ValueError as exc:
        print(f"error: inconsistent model in {path}: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _load_scheduling_file(path) -> SchedulingSpec:
    try:
        return load_scheduling(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: cannot parse scheduling file {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)
    except ValueError as exc:
        print(f"error: invalid scheduling spec in {path}: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _resolve_scheduling(args, embedded) -> SchedulingSpec:
    if getattr(args, "scheduling", None):
        return _load_scheduling_file(args.scheduling)
    if embedded is not None:
        return embedded
    print(
        "error: no scheduling information (pass a scheduling file or embed p in the model)",
        file=sys.stderr,
    )
    raise SystemExit(2)


# -- validate ----------------------------------------------------------------


def cmd_validate(args) -> int:
    S, embedded = _load_model_file(args.model)
    spec = _resolve_scheduling(args, embedded)
    report = validate_aslpv(S, spec)
    lines = [
        f"dims_ok: {report.dims_ok}",
        f"stable: {report.stable} (spectral radius {report.spectral_radius:.6f})",
        f"q_psd: {report.q_psd}",
    ]
    lines += [f"note: {m}" for m in report.messages]
    lines.append("ok" if report.ok else "FAILED")
    _emit(args, {"command": "validate", **report.to_dict()}, lines)
    return 0 if report.ok else 1


# -- check -------------------------------------------------------------------


def cmd_check(args) -> int:
    S, embedded = _load_model_file(args.model)
    spec = _resolve_scheduling(args, embedded)
    want_minimal = args.minimal
    want_innov = args.innovation
    want_inv = args.stably_invertable
    if not (want_minimal or want_innov or want_inv):
        want_minimal = want_innov = want_inv = True
    if not S.has_identity_f():
        print("error: requested checks require F = I (identity)", file=sys.stderr)
        return 1
    check = check_minimal_innovation(S, spec)
    payload = {"command": "check", **check.to_dict()}
    lines = []
    results = []
    if want_minimal:
        lines.append(
            f"minimal: {check.minimality.minimal} "
            f"(reach rank {check.minimality.reach_rank}, obs rank {check.minimality.obs_rank})"
        )
        results.append(check.minimality.minimal)
    if want_inv:
        lines.append(
            f"stably_invertable: {check.invertability.stably_invertable} "
            f"(radius {check.invertability.radius:.6f})"
        )
        results.append(check.invertability.stably_invertable)
    if want_innov:
        lines.append(
            f"innovation_form_sufficient: {check.innovation_form_sufficient} "
            "(sufficient condition via stable invertability)"
        )
        results.append(check.innovation_form_sufficient)
    _emit(args, payload, lines)
    return 0 if all(results) else 1


# -- minimize ----------------------------------------------------------------


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def cmd_minimize(args) -> int:
    S, embedded = _load_model_file(args.model)
    spec = _resolve_scheduling(args, embedded)
    try:
        if args.algorithm == "assoc":
            result = minimize_algorithm1(S, spec)
            provenance = {
                "input_sha256": _file_sha256(args.model),
                "algorithm": "assoc",
                "moment_iterations": result.moments.iterations,
                "moment_residual": result.moments.residual,
                "innovation_iterations": result.innovation.iterations,
                "innovation_residual": result.innovation.residual,
                "n_min": result.n_min,
            }
        else:
            result = minimize_algorithm2(S, spec, recompute_noise=args.recompute_noise)
            provenance = {
                "input_sha256": _file_sha256(args.model),
                "algorithm": "stable-inv",
                "noise": result.noise,
                "n_min": result.n_min,
            }
    except (ValueError, ConvergenceError, NoiseDegeneracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_model = aslpv_to_dict(result.system, p=spec.p, provenance=provenance)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(out_model, fh, indent=2)
            fh.write("\n")
    lines = [f"n_min: {result.n_min}"]
    for i, (A, K) in enumerate(zip(result.system.A, result.system.K)):
        lines.append(f"A[{i + 1}]:\n{_fmt(A)}")
        lines.append(f"K[{i + 1}]:\n{_fmt(K)}")
    lines.append(f"C:\n{_fmt(result.system.C)}")
    lines.append(f"provenance: {json.dumps(provenance)}")
    if args.out:
        lines.append(f"written: {args.out}")
    _emit(
        args,
        {"command": "minimize", "model": out_model, "out": args.out},
        lines,
    )
    return 0


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    S, embedded = _load_model_file(args.model)
    spec = _resolve_scheduling(args, embedded)
    if spec.family is None:
        print(
            "error: the scheduling spec has no generator family to sample from; "
            "pass a scheduling file with one",
            file=sys.stderr,
        )
        return 2
    try:
        traj = simulate_system(
            S,
            spec,
            T=args.T,
            scheduling_seed=args.seed,
            noise_seed=args.noise_seed,
            burn_in=args.burn_in,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sidecar = save_trajectory_csv(traj, args.out)
    lines = [
        f"samples: {traj.length}",
        f"scheduling seed: {traj.seed}, noise seed: {traj.noise_seed}",
        f"written: {args.out} (+ {sidecar})",
    ]
    _emit(
        args,
        {
            "command": "simulate",
            "T": traj.length,
            "seed": traj.seed,
            "noise_seed": traj.noise_seed,
            "out": os.fspath(args.out),
            "sidecar": sidecar,
        },
        lines,
    )
    return 0


# -- psi ---------------------------------------------------------------------


def _parse_words_arg(text: str, pdim: int):
    words = []
    for token in text.split(","):
        token = token.strip()
        if token in ("", "e", "eps"):
            words.append(())
        else:
            words.append(parse_word(token, pdim))
    return words


def cmd_psi(args) -> int:
    if not args.model and not args.trajectory:
        print("error: pass --model and/or --trajectory", file=sys.stderr)
        return 2
    S = embedded = None
    if args.model:
        S, embedded = _load_model_file(args.model)
    traj = None
    if args.trajectory:
        try:
            traj = load_trajectory_csv(args.trajectory)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            print(f"error: cannot read trajectory {args.trajectory}: {exc}", file=sys.stderr)
            return 2
    spec = None
    if args.scheduling:
        spec = _load_scheduling_file(args.scheduling)
    elif traj is not None and traj.spec is not None:
        spec = traj.spec
    elif embedded is not None:
        spec = embedded
    if spec is None:
        print("error: no scheduling information available", file=sys.stderr)
        return 2
    try:
        if args.words:
            words = _parse_words_arg(args.words, spec.pdim)
        else:
            words = words_up_to(spec.pdim, args.max_len)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    model_table = None
    if S is not None:
        max_len = max((len(w) for w in words), default=0)
        model_table = psi_y_model_table(S, spec, max_len)
    empirical = empirical_psi(traj, spec, words) if traj is not None else None

    rows = []
    lines = []
    worst_z = 0.0
    for w in words:
        name = "".join(str(s) for s in w) or "eps"
        row = {"word": name}
        parts = [f"w={name}"]
        if model_table is not None:
            row["model"] = model_table[w].tolist()
            parts.append(f"model={_fmt(model_table[w])}")
        if empirical is not None:
            est = empirical[w]
            row["empirical"] = est.value.tolist()
            row["stderr"] = est.stderr.tolist()
            parts.append(f"empirical={_fmt(est.value)} (se {_fmt(est.stderr)})")
        if model_table is not None and empirical is not None and len(w) > 0:
            est = empirical[w]
            denom = np.where(est.stderr > 0, est.stderr, np.inf)
            z = float(np.max(np.abs((est.value - model_table[w]) / denom)))
            row["max_abs_z"] = z
            parts.append(f"max|z|={z:.3f}")
            worst_z = max(worst_z, z)
        rows.append(row)
        lines.append("  ".join(parts))
    payload = {"command": "psi", "words": rows}
    if model_table is not None and empirical is not None:
        payload["worst_z"] = worst_z
        lines.append(f"worst max|z| over nonempty words: {worst_z:.3f}")
    _emit(args, payload, lines)
    if args.z_threshold is not None and worst_z > args.z_threshold:
        return 1
    return 0


# -- reproduce ---------------------------------------------------------------


def _iso_check(triple_a, triple_b, tol):
    try:
        return find_isomorphism(triple_a, triple_b, tol=tol)
    except ValueError:
        return None


def _reproduce_checks(example: int, T: int, seed: int, noise_seed: int):
    S, spec = benchmarks.load_benchmark(example)
    spec_alt = benchmarks.alt_scheduling()
    checks = []

    def add(name, passed, detail):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    t0 = time.perf_counter()
    if example in (1, 2):
        if example == 2:
            inv = is_stably_invertable(S, spec)
            add(
                "not-stably-invertable",
                not inv.stably_invertable,
                f"radius {inv.radius:.4f} (expected >= 1)",
            )
        result = minimize_algorithm1(S, spec)
        expected_n = 2
        add("dimension-reduction", result.n_min == expected_n,
            f"n_min {result.n_min} from n {S.n}")
        T_iso = _iso_check(
            innovation_triple(result.system), benchmarks.reference_triple(example), 5e-3
        )
        add(
            "matches-reference-reduction",
            T_iso is not None,
            "isomorphic to the 4-decimal reference within 5e-3"
            if T_iso is not None
            else "no isomorphism to the reference reduction found",
        )
        # covariance preservation of the reduction
        table_in = psi_y_model_table(S, spec, 6)
        table_out = psi_y_model_table(result.system, spec, 6)
        dpsi = max(
            float(np.max(np.abs(table_in[w] - table_out[w]))) for w in table_in
        )
        add("covariance-preserved", dpsi <= 1e-6, f"max |dPsi| {dpsi:.2e} over |w| <= 6")
        elapsed = time.perf_counter() - t0
        add("runtime", elapsed < 10.0, f"{elapsed:.2f} s for the algebraic stage")
        if example == 2:
            T_io = _iso_check(innovation_triple(S), innovation_triple(result.system), 1e-6)
            add(
                "input-output-not-isomorphic",
                T_io is None,
                "pair correctly reported non-isomorphic"
                if T_io is None
                else "unexpected isomorphism found",
            )
        # scheduling swap: divergence vs the benchmark-3 noise floor, with the
        # noise law pinned to the one the models were built under
        S3, _ = benchmarks.load_benchmark(3)
        r3 = minimize_algorithm1(S3, spec)
        baseline = compare_outputs(
            S3, r3.system, spec_alt, scheduling_seed=seed, noise_seed=noise_seed, T=T,
            noise_base=noise_base_covariance(S3, spec),
        )
        swapped = compare_outputs(
            S, result.system, spec_alt, scheduling_seed=seed, noise_seed=noise_seed, T=T,
            noise_base=noise_base_covariance(S, spec),
        )
        add(
            "diverges-under-swapped-scheduling",
            swapped.mse_diff > 10.0 * baseline.mse_diff,
            f"mse {swapped.mse_diff:.3e} vs 10x noise floor {10 * baseline.mse_diff:.3e}",
        )
    else:
        check = check_minimal_innovation(S, spec)
        add(
            "minimal-innovation",
            check.minimal_innovation,
            f"minimal {check.minimality.minimal}, radius {check.invertability.radius:.4f}",
        )
        result = minimize_algorithm1(S, spec)
        T_self = _iso_check(innovation_triple(S), innovation_triple(result.system), 1e-6)
        add(
            "output-isomorphic-to-input",
            T_self is not None,
            "isomorphism residual below 1e-6" if T_self is not None else "no isomorphism",
        )
        T_ref = _iso_check(innovation_triple(S), benchmarks.reference_triple(3), 5e-3)
        if T_ref is None:
            add("recovers-reference-basis", False, "no isomorphism to the reference")
        else:
            dT = float(np.max(np.abs(T_ref - benchmarks.REFERENCE_BASIS_3)))
            add("recovers-reference-basis", dT <= 5e-3, f"max |dT| {dT:.2e}")
        for label, sched in (("original", spec), ("swapped", spec_alt)):
            stats = compare_outputs(
                S, result.system, sched, scheduling_seed=seed, noise_seed=noise_seed, T=T,
                noise_base=noise_base_covariance(S, spec),
            )
            add(
                f"noise-floor-under-{label}-scheduling",
                stats.ratio < 1e-10,
                f"relative mse {stats.ratio:.3e}",
            )
    return checks


def cmd_reproduce(args) -> int:
    checks = _reproduce_checks(args.example, args.T, args.seed, args.noise_seed)
    ok = all(c["passed"] for c in checks)
    lines = [
        f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['detail']}" for c in checks
    ]
    lines.append(f"reproduce {args.example}: {'PASS' if ok else 'FAIL'}")
    _emit(
        args,
        {"command": "reproduce", "example": args.example, "ok": ok, "checks": checks},
        lines,
    )
    return 0 if ok else 1


# -- parser ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpvssa",
        description="Stochastic LPV state-space realization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scheduling_positional=True):
        if scheduling_positional:
            p.add_argument("scheduling", nargs="?", help="scheduling spec JSON")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("validate", help="structural and stability checks")
    p.add_argument("model", help="model JSON")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="minimality / innovation-form checks")
    p.add_argument("model")
    common(p)
    p.add_argument("--minimal", action="store_true")
    p.add_argument("--innovation", action="store_true")
    p.add_argument("--stably-invertable", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("minimize", help="reduce to a minimal innovation form")
    p.add_argument("model")
    common(p)
    p.add_argument(
        "--algorithm",
        choices=("assoc", "stable-inv"),
        default="assoc",
        help="assoc: covariance-realization route; stable-inv: direct route for stably invertable models",
    )
    p.add_argument("--out", help="write the minimized model JSON here")
    p.add_argument(
        "--recompute-noise",
        action="store_true",
        help="recompute the output noise moments instead of inheriting them (stable-inv)",
    )
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("simulate", help="simulate and export a trajectory CSV")
    p.add_argument("model")
    common(p)
    p.add_argument("--T", type=_positive_int, required=True, help="retained samples")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--noise-seed", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("psi", help="model and/or empirical covariance tables")
    p.add_argument("--model")
    p.add_argument("--trajectory", help="trajectory CSV from the simulate command")
    p.add_argument("--scheduling", help="scheduling spec JSON")
    p.add_argument("--words", help="comma-separated words, e.g. 'eps,1,12'")
    p.add_argument("--max-len", type=int, default=2)
    p.add_argument(
        "--z-threshold",
        type=float,
        default=None,
        help="exit 1 when any |z| exceeds this in comparison mode",
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_psi)

    p = sub.add_parser("reproduce", help="re-run a bundled benchmark scenario")
    p.add_argument("example", type=int, choices=(1, 2, 3))
    p.add_argument("--T", type=_positive_int, default=100000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--noise-seed", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if getattr(args, "noise_seed", None) is None and hasattr(args, "noise_seed"):
        args.noise_seed = args.seed + 1 if hasattr(args, "seed") else _default_seed()
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    except (ConvergenceError, NoiseDegeneracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
