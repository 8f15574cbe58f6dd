"""Command-line interface.

Subcommands: strips, pushforward, clt, corr, diffusion, simulate,
acceptance.  Numeric flags accept scientific notation (1e6).  A config
file of `key = value` lines (keys mirror long flag names) can seed any
flag; explicit flags win.  Exit codes: 0 success, 1 usage error,
2 precondition failure (the violated condition is named on stderr).

Every run with --out writes the data files plus a manifest.json carrying
the resolved configuration, timestamps, and sha256 digests of each data
file.  Data files contain no timestamps, so re-running a manifest's
command with --threads 1 reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import StdmapLabError
from .core_maps import MapParams, trajectory
from .geometry import critical_intervals
from .standard_pairs import iterate_decomposition, root_pair
from .statistics import (
    ExperimentConfig,
    correlation,
    clt_experiment,
    diffusion_experiment,
    make_observable,
)

DEFAULT_THREADS = max(1, os.cpu_count() or 1)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _num(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _intnum(text: str) -> int:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if abs(val - round(val)) > 1e-9:
        raise argparse.ArgumentTypeError(f"expected an integer: {text!r}")
    return int(round(val))


def _numlist(text: str):
    return [float(tok) for tok in text.split(",") if tok]


def load_config_file(path: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, val = line.split("=", 1)
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise ValueError(f"malformed config line: {raw.rstrip()}")
                key, val = parts
            out[key.strip().replace("-", "_")] = val.strip()
    return out


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

class RunWriter:
    """Collects output files and emits the manifest at the end."""

    def __init__(self, out_dir, subcommand, config):
        self.out_dir = out_dir
        self.subcommand = subcommand
        self.config = config
        self.start = time.time()
        self.files = {}
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

    def write_text(self, name: str, text: str):
        if self.out_dir is None:
            return None
        path = os.path.join(self.out_dir, name)
        data = text.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def write_json(self, name: str, payload: dict):
        return self.write_text(name, json.dumps(payload, sort_keys=True, indent=2) + "\n")

    def finish(self, summary: dict):
        print(json.dumps(summary, sort_keys=True, indent=2))
        if self.out_dir is None:
            return
        manifest = {
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.config.get("seed"),
            "version": __version__,
            "started_at": self.start,
            "finished_at": time.time(),
            "outputs": self.files,
        }
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")


def _config_echo(args, keys):
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


def _samples_csv(values) -> str:
    lines = ["value"]
    lines.extend(repr(float(v)) for v in values)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommand runners
# ---------------------------------------------------------------------------

def _run_strips(args) -> int:
    rows = ["L,eta,x_lo_1,x_hi_1,x_lo_2,x_hi_2,total_measure"]
    for L in args.L:
        for eta in args.eta:
            st = critical_intervals(L, eta)
            (a1, b1), (a2, b2) = st.intervals
            rows.append(",".join(repr(v) for v in (L, eta, a1, b1, a2, b2, st.measure)))
    text = "\n".join(rows) + "\n"
    writer = RunWriter(args.out, "strips", _config_echo(args, ("L", "eta")))
    writer.write_text("strips.csv", text)
    if args.out is None:
        print(text, end="")
        return 0
    writer.finish({"rows": len(rows) - 1})
    return 0


def _run_pushforward(args) -> int:
    seed_pair = root_pair(args.y0, args.L)
    ledger = iterate_decomposition(
        seed_pair, args.n, mode=args.mode, a0=args.a0, cap=args.cap,
        samples=args.samples, batches=args.batches, seed=args.seed,
    )
    writer = RunWriter(args.out, "pushforward", _config_echo(
        args, ("L", "n", "a0", "mode", "samples", "batches", "seed", "cap", "y0")))
    csv_text = ledger.to_csv()
    writer.write_text("ledger.csv", csv_text)
    if args.dump_curves and args.out:
        writer.write_json("curves.json", _inventory_json(ledger))
    summary = {
        "mode": ledger.mode,
        "L": ledger.L,
        "steps": len(ledger.rows),
        "m_E_final": ledger.rows[-1].m_E,
        "max_conservation_defect": ledger.max_conservation_defect(),
    }
    if args.out is None:
        print(csv_text, end="")
    writer.finish(summary)
    return 0


def _inventory_json(ledger) -> dict:
    rows = [
        {"step": r.step, "m_L": r.m_L, "m_I": r.m_I, "m_J": r.m_J,
         "m_E": r.m_E, "curves_alive": r.curves_alive}
        for r in ledger.rows
    ]
    return {"mode": ledger.mode, "rows": rows}


def _observable_arg(args, name):
    return make_observable(getattr(args, name))


def _run_clt(args) -> int:
    cfg = ExperimentConfig(L=args.L, N=args.N, M=args.M, seed=args.seed,
                           phi=_observable_arg(args, "phi"), threads=args.threads)
    summary, values = clt_experiment(cfg)
    writer = RunWriter(args.out, "clt", _config_echo(
        args, ("L", "N", "M", "seed", "phi", "threads")))
    payload = summary.to_dict()
    writer.write_json("summary.json", payload)
    if args.dump_samples and args.out:
        writer.write_text("samples.csv", _samples_csv(values))
    writer.finish(payload)
    return 0


def _run_corr(args) -> int:
    result = correlation(
        _observable_arg(args, "phi"), _observable_arg(args, "psi"),
        args.n, args.L, method=args.method, M=args.M, seed=args.seed,
        threads=args.threads, x_strata=args.x_strata, y_grid=args.y_grid,
    )
    writer = RunWriter(args.out, "corr", _config_echo(
        args, ("L", "n", "method", "M", "phi", "psi", "seed", "threads")))
    payload = result.to_dict()
    writer.write_json("summary.json", payload)
    writer.finish(payload)
    return 0


def _run_diffusion(args) -> int:
    cfg = ExperimentConfig(epsilon=args.epsilon, alpha=args.alpha, N=args.N,
                           M=args.M, seed=args.seed, interval=(args.a, args.b),
                           threads=args.threads)
    summary, values = diffusion_experiment(cfg)
    writer = RunWriter(args.out, "diffusion", _config_echo(
        args, ("epsilon", "alpha", "N", "M", "seed", "a", "b", "threads")))
    payload = summary.to_dict()
    writer.write_json("summary.json", payload)
    if args.dump_samples and args.out:
        writer.write_text("samples.csv", _samples_csv(values))
    writer.finish(payload)
    return 0


def _run_simulate(args) -> int:
    if args.map == "G":
        if args.epsilon is None or args.alpha is None:
            raise StdmapLabError("simulate --map G needs --epsilon and --alpha")
        params = MapParams.from_epsilon(args.epsilon, args.alpha)
        orbit = trajectory((args.x0, args.z0), params, args.n, "slowfast")
        header = "step,x,z"
    else:
        L = args.L
        if L is None and args.epsilon is not None and args.alpha is not None:
            L = MapParams.from_epsilon(args.epsilon, args.alpha).L
        if L is None:
            raise StdmapLabError("simulate needs --L or (--epsilon, --alpha)")
        orbit = trajectory((args.x0, args.y0), L, args.n, args.map)
        header = "step,x,y"
    rows = [header]
    for i, p in enumerate(orbit):
        rows.append(f"{i},{p[0]!r},{p[1]!r}")
    text = "\n".join(rows) + "\n"
    writer = RunWriter(args.out, "simulate", _config_echo(
        args, ("map", "L", "epsilon", "alpha", "x0", "y0", "z0", "n")))
    writer.write_text("trajectory.csv", text)
    if args.out is None:
        print(text, end="")
        return 0
    writer.finish({"points": len(orbit)})
    return 0


def _run_acceptance(args) -> int:
    from . import acceptance

    ids = acceptance.all_ids() if args.id is None else [args.id]
    ok = True
    for cid in ids:
        passed, detail = acceptance.run_criterion(cid)
        ok = ok and passed
        status = "PASS" if passed else "FAIL"
        print(f"[{status}] criterion {cid}: {detail}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="stdmap-lab",
                     description="standard-map laboratory experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=_intnum, default=0)
        p.add_argument("--threads", type=_intnum,
                       default=int(os.environ.get("STDMAP_LAB_THREADS", DEFAULT_THREADS)))

    p = sub.add_parser("strips", help="critical strip endpoints and measures")
    common(p)
    p.add_argument("--L", type=_numlist, required=True, help="comma-separated values")
    p.add_argument("--eta", type=_numlist, required=True)
    p.set_defaults(run=_run_strips)

    p = sub.add_parser("pushforward", help="iterated pushforward decomposition")
    common(p)
    p.add_argument("--L", type=_num, required=True)
    p.add_argument("--n", type=_intnum, required=True)
    p.add_argument("--a0", type=_num, default=1.0 / 16.0)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="sampled")
    p.add_argument("--samples", type=_intnum, default=100)
    p.add_argument("--batches", type=_intnum, default=10)
    p.add_argument("--cap", type=_intnum, default=10 ** 7)
    p.add_argument("--y0", type=_num, default=0.0)
    p.add_argument("--dump-curves", action="store_true")
    p.set_defaults(run=_run_pushforward)

    p = sub.add_parser("clt", help="central limit theorem experiment")
    common(p)
    p.add_argument("--L", type=_num, required=True)
    p.add_argument("--N", type=_intnum, default=None)
    p.add_argument("--M", type=_intnum, default=10 ** 5)
    p.add_argument("--phi", default="sin")
    p.add_argument("--dump-samples", action="store_true")
    p.set_defaults(run=_run_clt)

    p = sub.add_parser("corr", help="correlation decay experiment")
    common(p)
    p.add_argument("--L", type=_num, required=True)
    p.add_argument("--n", type=_intnum, default=1)
    p.add_argument("--method", choices=("montecarlo", "ygrid"), default="montecarlo")
    p.add_argument("--M", type=_intnum, default=10 ** 6)
    p.add_argument("--phi", default="sin")
    p.add_argument("--psi", default="sin")
    p.add_argument("--x-strata", dest="x_strata", type=_intnum, default=4096)
    p.add_argument("--y-grid", dest="y_grid", type=_intnum, default=64)
    p.set_defaults(run=_run_corr)

    p = sub.add_parser("diffusion", help="slow-variable diffusion experiment")
    common(p)
    p.add_argument("--epsilon", type=_num, required=True)
    p.add_argument("--alpha", type=_num, required=True)
    p.add_argument("--N", type=_intnum, default=None)
    p.add_argument("--M", type=_intnum, default=10 ** 5)
    p.add_argument("--a", type=_num, default=0.0)
    p.add_argument("--b", type=_num, default=1.0)
    p.add_argument("--dump-samples", action="store_true")
    p.set_defaults(run=_run_diffusion)

    p = sub.add_parser("simulate", help="raw trajectory dump")
    common(p)
    p.add_argument("--map", choices=("F", "hatF", "lifted", "G"), default="hatF")
    p.add_argument("--L", type=_num, default=None)
    p.add_argument("--epsilon", type=_num, default=None)
    p.add_argument("--alpha", type=_num, default=None)
    p.add_argument("--x0", type=_num, default=0.1)
    p.add_argument("--y0", type=_num, default=0.0)
    p.add_argument("--z0", type=_num, default=0.0)
    p.add_argument("--n", type=_intnum, default=100)
    p.set_defaults(run=_run_simulate)

    p = sub.add_parser("acceptance", help="run acceptance criteria")
    common(p)
    p.add_argument("--id", default=None, help="criterion id (1..12, 4a, 4b); all if omitted")
    p.set_defaults(run=_run_acceptance)

    return parser


def _apply_config_file(parser, argv):
    probe = _Parser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config:
        overrides = load_config_file(known.config)
        for action in parser._subparsers._group_actions[0].choices.values():
            valid = {a.dest for a in action._actions}
            action.set_defaults(**{k: _coerce(v) for k, v in overrides.items()
                                   if k in valid})


def _coerce(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        val = float(text)
        return int(val) if val == int(val) and "e" not in low and "." not in text else val
    except ValueError:
        return text


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
    except OSError as exc:
        sys.stderr.write(f"stdmap-lab: cannot read config: {exc}\n")
        return 1
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except StdmapLabError as exc:
        sys.stderr.write(f"stdmap-lab: precondition failed: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
