"""Command line front end: fit, plan, certify, extract, check-signaling, simulate.

Exit codes: 0 success or pass, 2 statistical abort, 1 error.
Every option can also be supplied through --config, a JSON object whose keys
are option names (dashes or underscores), either flat or grouped under the
subcommand name. Command-line values take precedence.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from bellrand import io
from bellrand.core import BellFunction, CountTable, JointDistribution, ValidationError
from bellrand.entropy import accumulate, log_v_thresh_upper
from bellrand.extractor import ExtractorSpec, RSHStream
from bellrand.pbr import NoViolationError, extremal_settings, optimize_bell_function
from bellrand.polytope import ml_nonsignaling_fit, project_nonsignaling
from bellrand.sim import simulate
from bellrand.soundness import ProtocolParams, error_split
from bellrand.stats import choose_threshold, signaling_tests

log = logging.getLogger("bellrand")

EXIT_OK, EXIT_ERROR, EXIT_ABORT = 0, 1, 2
DEFAULT_TRAIN = 5_000_000
CHUNK = 1 << 22


class CLIError(Exception):
    pass


# ---- helpers ----------------------------------------------------------------

def _is_trial_file(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(8) == io.MAGIC


def _load_counts(path, skip: int = 0, count: int | None = None) -> CountTable:
    if _is_trial_file(path):
        total = io.trial_count(path)
        if count is not None and skip + count > total:
            raise CLIError(f"requested {skip + count} trials but {path} holds {total}")
        tally = np.zeros(16, dtype=np.int64)
        for chunk in io.iter_trials(path, skip, count, CHUNK):
            tally += np.bincount(chunk, minlength=16)[:16]
        from bellrand.core import CELL_TO_CODE

        return CountTable(tally[CELL_TO_CODE].reshape(4, 4))
    obj = io.read_table(path)
    if not isinstance(obj, CountTable):
        raise CLIError(f"{path} is neither a trial file nor a count table")
    return obj


def _load_distribution(path) -> tuple[JointDistribution, bool]:
    obj, meta = io.read_table(path, with_meta=True)
    if not isinstance(obj, JointDistribution):
        raise CLIError(f"{path} does not hold a distribution")
    if obj.non_signaling:
        return obj, False
    return project_nonsignaling(obj.p), True


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 22), b""):
            h.update(block)
    return h.hexdigest()


def _bell_from_params(params: dict) -> BellFunction:
    return BellFunction(np.array(params["t_values"]), params["m"], params["alpha"])


def _spec_from_params(params: dict) -> ExtractorSpec:
    ext = params["extractor"]
    spec = ExtractorSpec(ext["q"], ext["t"], ext["w"], ext["eps_1bit"])
    if spec.spec_hash() != params["extractor_sha256"]:
        raise CLIError("extractor description does not match its recorded hash")
    return spec


# ---- subcommands --------------------------------------------------------------

def cmd_fit(args) -> int:
    if _is_trial_file(args.input):
        if args.train < 1:
            raise CLIError("--train must be at least 1")
        counts = _load_counts(args.input, 0, args.train)
        train = args.train
    else:
        counts = _load_counts(args.input)
        train = counts.total
    Q = ml_nonsignaling_fit(counts)
    io.write_table(args.output, Q, provenance=f"non-signaling ML fit of {Path(args.input).name}",
                   train=train)
    log.info("fit %d training trials -> %s", train, args.output)
    return EXIT_OK


def cmd_plan(args) -> int:
    Q, projected = _load_distribution(args.input)
    if projected:
        log.info("input distribution projected onto the non-signaling set")
    if args.n < 1:
        raise CLIError("--n must be at least 1")
    eps_p, kappa, eps_ext = error_split(args.eps_fin)
    res = optimize_bell_function(Q, args.alpha)
    if not res.violation:
        raise NoViolationError("the distribution shows no Bell violation to exploit")
    T = res.bell
    if args.v_thresh is not None:
        if not args.v_thresh >= 1:
            raise CLIError("--v-thresh must be at least 1")
        log_v = math.log(args.v_thresh)
    else:
        # Worst case over the settings distributions allowed by alpha.
        log_v = min(choose_threshold(Q, T, args.n, args.z, settings=s.q) for s in extremal_settings(args.alpha))
    upper = log_v_thresh_upper(args.n, eps_p, T.m)
    if not 0 <= log_v <= upper:
        raise CLIError(f"ln v_thresh = {log_v:.6g} outside the admissible range [0, {upper:.6g}]")
    pp = ProtocolParams.derive(args.n, log_v, T.m, eps_p, kappa, eps_ext, args.t)
    spec = ExtractorSpec(pp.q, pp.t, pp.w, pp.eps_1bit)
    if spec.d != pp.d:
        raise CLIError("extractor seed length disagrees with the parameter calculus")
    eps_fin, ideal = pp.final_errors
    params = dict(pp.to_dict())
    params.update(
        train=args.train,
        alpha=T.alpha,
        m=T.m,
        t_values=T.t_values.tolist(),
        eps_fin=eps_fin,
        ideal_distance=ideal,
        z=args.z,
        v_thresh_override=args.v_thresh is not None,
        extractor=spec.to_dict(),
        extractor_sha256=spec.spec_hash(),
        distribution_sha256=_file_sha256(args.input),
    )
    digest = io.write_params(args.output, params)
    log.info("planned t=%d bits, d=%d seed bits, params sha256 %s", pp.t, pp.d, digest)
    print(f"t={pp.t} d={pp.d} ln_v_thresh={log_v!r} m={T.m!r} -log2_delta={pp.neg_log2_delta!r}")
    return EXIT_OK


def cmd_certify(args) -> int:
    params, digest = io.read_params(args.params)
    T = _bell_from_params(params)
    total = io.trial_count(args.trials)
    skip, n = params["train"], params["n"]
    if skip + n > total:
        raise CLIError(f"{args.trials} holds {total} trials; the plan needs {skip} + {n}")
    run = accumulate(io.iter_trials(args.trials, skip, n, CHUNK), T, params["log_v_thresh"],
                     adaptive=args.adaptive)
    cert = {
        "format": "bellrand-certificate/1",
        "params_sha256": digest,
        "trials_sha256": _file_sha256(args.trials),
        "adaptive": bool(args.adaptive),
        "n": run.n,
        "log_v": run.log_v,
        "log_v_thresh": run.log_v_thresh,
        "crossing_index": run.crossing_index,
        "frozen": run.frozen,
        "marginal": run.marginal,
        "passed": run.passed,
    }
    io.write_json(args.output, cert)
    print(f"{'PASS' if run.passed else 'ABORT'} ln_v={run.log_v!r} ln_v_thresh={run.log_v_thresh!r}")
    return EXIT_OK if run.passed else EXIT_ABORT


def _ab_bits(codes: np.ndarray) -> np.ndarray:
    """Trial i contributes (a_i, b_i) at bit positions (2i, 2i+1)."""
    out = np.empty(2 * codes.size, dtype=np.uint8)
    out[0::2] = (codes >> 1) & 1
    out[1::2] = codes & 1
    return out


def cmd_extract(args) -> int:
    params, digest = io.read_params(args.params)
    cert = io.read_json(args.certificate)
    if cert.get("params_sha256") != digest:
        raise CLIError("certificate was issued for a different parameter record")
    if cert.get("trials_sha256") != _file_sha256(args.trials):
        raise CLIError("certificate was issued for a different trial file")
    if not cert.get("passed"):
        print("ABORT: the certificate records an aborted run; nothing is extracted")
        return EXIT_ABORT
    spec = _spec_from_params(params)
    seed = io.read_bits(args.seed)
    if seed.size != spec.d:
        raise CLIError(f"seed has {seed.size} bits, expected d={spec.d}")
    skip, n = params["train"], params["n"]
    # With the adaptive strategy, outcomes after the crossing trial are relabeled to 00.
    cut = cert["crossing_index"] if cert.get("adaptive") and cert.get("frozen") else n
    stream = RSHStream(spec, seed)
    done = 0
    for chunk in io.iter_trials(args.trials, skip, n, CHUNK):
        codes = chunk.copy()
        lo = max(0, cut - done)
        if lo < codes.size:
            codes[lo:] = 0
        stream.feed(_ab_bits(codes))
        done += chunk.size
    bits = stream.finish()
    io.write_bits(args.output, bits, spec_sha256=spec.spec_hash())
    audit = {
        "format": "bellrand-audit/1",
        "params_sha256": digest,
        "certificate_sha256": _file_sha256(args.certificate),
        "seed_sha256": _file_sha256(args.seed),
        "spec_sha256": spec.spec_hash(),
        "output_sha256": _file_sha256(args.output),
        "bits": int(bits.size),
        "eps_fin": params["eps_fin"],
        "relabel_from_trial": cut + 1 if cut < n else None,
    }
    io.write_json(str(args.output) + ".audit.json", audit)
    print(f"extracted {bits.size} bits -> {args.output}")
    return EXIT_OK


def cmd_check_signaling(args) -> int:
    counts = _load_counts(args.input, args.skip, None) if _is_trial_file(args.input) else _load_counts(args.input)
    lines = ["test  z  p_value"]
    for i, r in enumerate(signaling_tests(counts), 1):
        lines.append(f"{i}  {r.label}  z={r.z:.4f}  p={r.p_value:.4g}")
    report = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(report)
    print(report, end="")
    return EXIT_OK


def cmd_simulate(args) -> int:
    Q, _ = _load_distribution(args.input)
    n = io.write_trials(args.output, simulate(Q, None, args.n, args.seed))
    log.info("wrote %d simulated trials (seed %d) -> %s", n, args.seed, args.output)
    return EXIT_OK


# ---- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellrand", description="Device-independent randomness from Bell-test trials.")
    p.add_argument("--config", help="JSON file supplying option defaults")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fit", help="non-signaling ML fit of the training trials")
    s.add_argument("input", help="trial file or count table")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--train", type=int, default=DEFAULT_TRAIN, help="number of leading training trials")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("plan", help="freeze the protocol parameters")
    s.add_argument("input", help="distribution table")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--n", type=int, required=True, help="number of protocol trials after training")
    s.add_argument("--train", type=int, default=DEFAULT_TRAIN, help="trials skipped before the protocol trials")
    s.add_argument("--eps-fin", type=float, required=True)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--z", type=float, default=1.645, help="normal quantile of the threshold rule")
    s.add_argument("--v-thresh", type=float, default=None, help="manual threshold overriding the rule")
    s.add_argument("--t", type=int, default=None, help="output bits (default: the maximum admissible)")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("certify", help="accumulate the Bell statistic and decide pass or abort")
    s.add_argument("trials")
    s.add_argument("params")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--adaptive", action="store_true", help="stop counting once the threshold is crossed")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("extract", help="extract the planned output bits after a pass")
    s.add_argument("trials")
    s.add_argument("params")
    s.add_argument("seed", help="seed bit file")
    s.add_argument("--certificate", required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("check-signaling", help="two-proportion tests of the non-signaling equalities")
    s.add_argument("input", help="trial file or count table")
    s.add_argument("--skip", type=int, default=0, help="leading trials to ignore")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_check_signaling)

    s = sub.add_parser("simulate", help="write a synthetic i.i.d. trial file (not a randomness source)")
    s.add_argument("input", help="distribution table")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_simulate)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = io.read_json(known.config)
        if not isinstance(cfg, dict):
            raise CLIError(f"{known.config}: config must be a JSON object")
        flat = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
        subs = parser._subparsers._group_actions[0].choices
        used = set()
        for name, subparser in subs.items():
            opts = {a.dest for a in subparser._actions if a.option_strings}
            values = {k: v for k, v in flat.items() if k in opts}
            values.update({k.replace("-", "_"): v for k, v in cfg.get(name, {}).items()})
            bad = set(values) - opts
            if bad:
                raise CLIError(f"unknown config keys for {name}: {sorted(bad)}")
            used |= set(values)
            for action in subparser._actions:
                if action.dest in values:
                    action.required = False
            subparser.set_defaults(**values)
        stray = set(flat) - used - {"config"}
        if stray:
            raise CLIError(f"unknown config keys: {sorted(stray)}")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("BELLRAND_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "plan" and not 0 < args.eps_fin < 1:
            raise CLIError("--eps-fin must lie in (0, 1)")
        return args.func(args)
    except (CLIError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
