"""Command-line front end.

Every command writes a CSV table preceded by ``#`` metadata lines (version, command,
seed, trials, timestamp and a re-run line).  Re-running the printed command reproduces
the file byte for byte except for the timestamp line.

Exit statuses: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import math
import secrets
import shlex
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .bounds import TheoryParams, c0_and_error, exterior_gap_limit, noise_thresholds, random_thresholds
from .errors import RKReconError
from .experiments import (
    C_ALPHA,
    ExperimentSpec,
    aggregate,
    campaign_space,
    noise_sweep,
    prepare_trial,
    reconstruct_trial,
    remark34_demo,
    run_campaign,
)
from .kernel_space import QuadratureSpec, concentration_ratio, estimate_schur, make_space
from .reconstruct import rae_series
from .sampling import coverage_bound, empirical_coverage

COMMANDS = ("space-info", "table1", "table2", "noise-sweep", "coverage", "bounds", "remark34", "reconstruct-one")
TABLE1_HEADER = ["L", "alpha", "n", "mean_rae", "trials"]
TABLE2_HEADER = ["L", "alpha", "N_rule", "success_rate_pct", "trials"]


class UsageError(Exception):
    pass


@dataclass
class Table:
    header: list[str]
    rows: list[list] = field(default_factory=list)


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        return self.params.get(key, default)

    def rerun_argv(self) -> list[str]:
        """Arguments reproducing this run (the output path is left out)."""
        argv = [self.command]
        for key, value in sorted(self.params.items()):
            if key in ("output", "threads", "seed_drawn") or value is None:
                continue
            flag = "--" + key.replace("_", "-")
            if isinstance(value, (list, tuple)):
                argv += [flag, ",".join(_fmt_arg(v) for v in value)]
            else:
                argv += [flag, _fmt_arg(value)]
        return argv


def _fmt_arg(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def fmt(x) -> str:
    """Six significant digits for reals; integers, booleans and strings verbatim."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


# -- argument parsing ----------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def n_from_rule(rule: str, L: float) -> int:
    """``"8L"`` means ``8 L`` samples; a bare integer is taken literally."""
    r = rule.strip()
    try:
        if r.endswith("L"):
            return int(round(float(r[:-1] or 1) * L))
        return int(r)
    except ValueError:
        raise UsageError(f"--N-rule: cannot read {rule!r} (use e.g. 8L or 400)") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rkrecon", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rkrecon {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, text):
        return sub.add_parser(name, help=text, description=text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    def common(sp, trials=50, iters=None, seed=True):
        sp.add_argument("--output", "-o", default=None, help="CSV path; stdout when omitted")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="master seed; drawn from entropy and recorded when omitted")
        if trials is not None:
            sp.add_argument("--trials", type=int, default=trials, help="trials per cell")
        if iters is not None:
            sp.add_argument("--iters", type=int, default=iters, help="iterations of the reconstruction")
        sp.add_argument("--step", type=float, default=0.01, help="Simpson panel width")
        sp.add_argument("--pad", type=float, default=10.0, help="quadrature window padding around the basis centres")
        sp.add_argument("--threads", type=int, default=None, help="worker threads; RKS_THREADS when omitted (0 = one per CPU)")

    L_help = "comma-separated half-widths L of [-L, L]"
    a_help = f"comma-separated decay exponents, each one of {sorted(C_ALPHA)}"

    sp = add("space-info", "Gram decay and Schur-norm estimates of a space")
    sp.add_argument("--kind", choices=("gaussian", "hat"), default="gaussian", help="generator")
    sp.add_argument("--L", type=_float_list, default=[50.0], help=L_help)
    sp.add_argument("--delta", type=float, default=0.25, help="offset reported for the modulus of continuity")
    common(sp, trials=None)

    sp = add("table1", "deterministic sampling: mean RAE by iteration")
    sp.add_argument("--L", type=_float_list, default=[50.0, 70.0, 90.0, 110.0], help=L_help)
    sp.add_argument("--alpha", type=_float_list, default=sorted(C_ALPHA), help=a_help)
    common(sp, iters=3)

    sp = add("table2", "random sampling: success rate")
    sp.add_argument("--L", type=_float_list, default=[50.0, 70.0, 90.0, 110.0], help=L_help)
    sp.add_argument("--alpha", type=_float_list, default=sorted(C_ALPHA), help=a_help)
    sp.add_argument("--N-rule", dest="N_rule", type=_str_list, default=["8L", "12L"],
                    help="comma-separated sample counts, as multiples of L (8L) or literal integers")
    common(sp, trials=100, iters=6)

    sp = add("noise-sweep", "noisy random sampling: mean RAE against N")
    sp.add_argument("--L", type=_float_list, default=[50.0], help=L_help)
    sp.add_argument("--alpha", type=_float_list, default=[0.0], help=a_help)
    sp.add_argument("--N", type=_int_list, default=[500, 1000, 2000, 5000], help="increasing sample counts")
    sp.add_argument("--noise-amp", dest="noise_amp", type=float, default=None,
                    help="half-width of the uniform noise; L^min(1/2-alpha,0)/2 when omitted")
    common(sp, iters=6)

    sp = add("coverage", "empirical d_H exceedance against the tail bound")
    sp.add_argument("--L", type=_float_list, default=[10.0], help=L_help)
    sp.add_argument("--N", type=_int_list, default=[200, 400, 800], help="comma-separated sample counts")
    sp.add_argument("--delta1", type=_float_list, default=[0.1, 0.2], help="comma-separated spacings in (0, 1]")
    common(sp, trials=500)

    sp = add("bounds", "evaluate the closed-form constants")
    sp.add_argument("--L", type=_float_list, default=[50.0], help=L_help)
    sp.add_argument("--k-norm", dest="k_norm", type=float, required=True, help="kernel norm estimate (see space-info)")
    sp.add_argument("--eps", type=float, default=0.1, help="concentration level")
    sp.add_argument("--tau", type=float, default=0.1, help="failure probability")
    sp.add_argument("--theta", type=float, default=1.0, help="Hölder exponent")
    sp.add_argument("--N", type=_int_list, default=[400], help="comma-separated sample counts")
    sp.add_argument("--d-h", dest="d_h", type=float, default=None, help="Hausdorff distance for the deterministic constants")
    sp.add_argument("--output", "-o", default=None, help="CSV path; stdout when omitted")

    sp = add("remark34", "non-identifiability from interior samples (hat space)")
    sp.add_argument("--R", type=int, default=10, help="half-width of the sampled interval")
    sp.add_argument("--delta", type=_float_list, default=[0.1, 0.5], help="comma-separated perturbation sizes in (0, 1)")
    common(sp, trials=None, iters=3, seed=False)

    sp = add("reconstruct-one", "a single trial, RAE per iteration")
    sp.add_argument("--L", type=float, default=50.0, help="half-width L of [-L, L]")
    sp.add_argument("--alpha", type=float, default=0.0, help=a_help.replace("comma-separated decay exponents, each", "decay exponent,"))
    sp.add_argument("--sampling", choices=("deterministic", "random", "random_noisy"), default="deterministic", help="sampling scheme")
    sp.add_argument("--N", type=int, default=None, help="sample count for random schemes")
    sp.add_argument("--noise-amp", dest="noise_amp", type=float, default=None,
                    help="half-width of the uniform noise; L^min(1/2-alpha,0)/2 when omitted")
    common(sp, trials=None, iters=6)
    return p


def _validate(cmd: str, a: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    if "trials" in a and a["trials"] is not None:
        need(a["trials"] >= 1, f"--trials must be at least 1, got {a['trials']}")
    if "iters" in a:
        need(a["iters"] >= 0, f"--iters must be non-negative, got {a['iters']}")
    if "step" in a:
        need(0 < a["step"] <= 0.1, f"--step must lie in (0, 0.1], got {a['step']}")
        need(a["pad"] > 0, f"--pad must be positive, got {a['pad']}")
    if a.get("threads") is not None:
        need(a["threads"] >= 0, f"--threads must be non-negative, got {a['threads']}")
    Ls = a.get("L")
    if Ls is not None:
        Ls = Ls if isinstance(Ls, list) else [Ls]
        need(len(Ls) > 0, "--L needs at least one value")
        need(all(L >= 1 for L in Ls), f"--L values must be at least 1, got {Ls}")
    alphas = a.get("alpha")
    if alphas is not None and cmd in ("table1", "table2", "noise-sweep", "reconstruct-one"):
        alphas = alphas if isinstance(alphas, list) else [alphas]
        need(len(alphas) > 0, "--alpha needs at least one value")
        for al in alphas:
            need(any(math.isclose(al, c, abs_tol=1e-9) for c in C_ALPHA), f"--alpha {al} not in {sorted(C_ALPHA)}")
    if cmd == "table2":
        need(len(a["N_rule"]) > 0, "--N-rule needs at least one entry")
        for L in Ls:
            for r in a["N_rule"]:
                need(n_from_rule(r, L) >= 2, f"--N-rule {r} gives fewer than 2 samples")
    if cmd in ("noise-sweep", "coverage", "bounds"):
        need(len(a["N"]) > 0 and all(n >= 1 for n in a["N"]), f"--N values must be positive, got {a['N']}")
    if cmd == "noise-sweep":
        need(a["N"] == sorted(set(a["N"])), "--N must be strictly increasing")
    if cmd == "coverage":
        need(all(0 < d <= 1 for d in a["delta1"]), f"--delta1 values must lie in (0, 1], got {a['delta1']}")
    if cmd == "bounds":
        need(a["k_norm"] > 0, "--k-norm must be positive")
        need(0 < a["eps"] < 1, "--eps must lie in (0, 1)")
        need(0 < a["tau"] < 1, "--tau must lie in (0, 1)")
        need(0 < a["theta"] <= 1, "--theta must lie in (0, 1]")
        need(a["d_h"] is None or a["d_h"] > 0, "--d-h must be positive")
    if cmd == "remark34":
        need(a["R"] >= 2, f"--R must be at least 2, got {a['R']}")
        need(all(0 < d < 1 for d in a["delta"]), f"--delta values must lie in (0, 1), got {a['delta']}")
    if cmd == "reconstruct-one" and a["sampling"] != "deterministic":
        need(a["N"] is not None and a["N"] >= 2, f"--sampling {a['sampling']} needs --N >= 2")
    if a.get("noise_amp") is not None:
        need(a["noise_amp"] >= 0, "--noise-amp must be non-negative")


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse and validate; usage problems exit with status 2 naming the flag."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k != "command"}
    try:
        _validate(ns.command, params)
    except UsageError as exc:
        parser.error(str(exc))
    if "seed" in params and params["seed"] is None:
        params["seed"] = secrets.randbits(63)
        params["seed_drawn"] = True
    return RunConfig(ns.command, params)


# -- commands ------------------------------------------------------------------------


def _quad(cfg: RunConfig) -> QuadratureSpec:
    return QuadratureSpec(step=cfg["step"], window_pad=cfg["pad"])


def _cells(cfg: RunConfig):
    return sorted((L, al) for L in cfg["L"] for al in cfg["alpha"])


def cmd_space_info(cfg: RunConfig) -> Table:
    t = Table(["kind", "L", "index_lo", "index_hi", "size", "decay_rate", "schur_norm", "holder_term", "combined"])
    rng = np.random.default_rng(cfg["seed"])
    for L in sorted(cfg["L"]):
        space = campaign_space(L, rng, kind=cfg["kind"], quadrature=_quad(cfg))
        est = estimate_schur(space, delta=cfg["delta"])
        t.rows.append([cfg["kind"], L, space.index_lo, space.index_hi, space.size, space.decay_rate,
                       est.schur_norm, est.combined - est.schur_norm, est.combined])
    return t


def cmd_table1(cfg: RunConfig) -> Table:
    t = Table(list(TABLE1_HEADER))
    for L, al in _cells(cfg):
        spec = ExperimentSpec(L=L, alpha=al, n_iters=cfg["iters"], trials=cfg["trials"],
                              sampling="deterministic", master_seed=cfg["seed"], quadrature=_quad(cfg))
        res = run_campaign(spec, cfg.get("threads"))
        for n in range(cfg["iters"] + 1):
            t.rows.append([L, al, n, aggregate(res, "mean_rae", n), cfg["trials"]])
    return t


def cmd_table2(cfg: RunConfig) -> Table:
    t = Table(list(TABLE2_HEADER))
    for L, al in _cells(cfg):
        for rule in cfg["N_rule"]:
            spec = ExperimentSpec(L=L, alpha=al, n_iters=cfg["iters"], trials=cfg["trials"], sampling="random",
                                  N=n_from_rule(rule, L), master_seed=cfg["seed"], quadrature=_quad(cfg))
            res = run_campaign(spec, cfg.get("threads"))
            t.rows.append([L, al, rule, aggregate(res, "success_rate"), cfg["trials"]])
    return t


def cmd_noise_sweep(cfg: RunConfig) -> Table:
    t = Table(["L", "alpha", "N", "noise_amp", "mean_rae", "trials"])
    for L, al in _cells(cfg):
        for pt in noise_sweep(L, al, cfg["N"], cfg["trials"], cfg["seed"], cfg["noise_amp"], cfg["iters"], cfg.get("threads")):
            t.rows.append([L, al, pt.N, pt.noise_amp, pt.mean_rae, pt.trials])
    return t


def cmd_coverage(cfg: RunConfig) -> Table:
    t = Table(["L", "N", "delta1", "empirical", "bound_raw", "bound_clamped", "trials"])
    rng = np.random.default_rng(cfg["seed"])
    for L in sorted(cfg["L"]):
        params = TheoryParams.interval(L)
        for N in sorted(cfg["N"]):
            for d1 in sorted(cfg["delta1"]):
                emp = empirical_coverage(L, N, d1, cfg["trials"], rng)
                b = coverage_bound(params, d1, N)
                t.rows.append([L, N, d1, emp, b.raw, b.clamped, cfg["trials"]])
    return t


def cmd_bounds(cfg: RunConfig) -> Table:
    t = Table(["L", "N", "quantity", "value"])
    for L in sorted(cfg["L"]):
        for N in sorted(cfg["N"]):
            params = TheoryParams.interval(L, k_norm=cfg["k_norm"], eps=cfg["eps"], tau=cfg["tau"], theta=cfg["theta"], N=N)
            th = random_thresholds(params)
            rows = [("tau_of_N", th.tau_of_N), ("tau_of_N_clamped", th.tau_of_N_clamped),
                    ("N0", th.N0), ("N1", th.N1), ("exterior_gap_limit", exterior_gap_limit(params))]
            nt = noise_thresholds(params)
            rows += [("noise_delta1", nt.delta1_tilde), ("noise_N_min", nt.N_min)]
            if cfg["d_h"] is not None:
                try:
                    c0 = c0_and_error(params, cfg["d_h"])
                    rows += [("C0", c0.c0), ("det_error_factor", c0.det_error_factor)]
                except RKReconError:
                    rows += [("C0", "infeasible"), ("det_error_factor", "infeasible")]
            t.rows += [[L, N, q, v] for q, v in rows]
    return t


def cmd_remark34(cfg: RunConfig) -> Table:
    t = Table(["R", "delta", "max_pair_error", "lower_bound", "identical", "eps_measured"])
    R = cfg["R"]
    space = make_space("hat", -R - 5, R + 7, quadrature=_quad(cfg))
    for d in sorted(cfg["delta"]):
        r = remark34_demo(space, R, d, n_iters=cfg["iters"])
        t.rows.append([R, d, r.max_pair_error, r.lower_bound, r.identical, r.eps_measured])
    return t


def cmd_reconstruct_one(cfg: RunConfig) -> Table:
    t = Table(["n", "rae", "concentration", "eps_target"])
    spec = ExperimentSpec(L=cfg["L"], alpha=cfg["alpha"], n_iters=cfg["iters"], trials=1, sampling=cfg["sampling"],
                          N=cfg["N"], noise_amp=cfg["noise_amp"], master_seed=cfg["seed"], quadrature=_quad(cfg))
    setup = prepare_trial(spec, 0)
    errors = rae_series(setup.space, reconstruct_trial(setup, spec), setup.signal)
    conc = concentration_ratio(setup.space, setup.signal, spec.L)
    for n, e in enumerate(errors):
        t.rows.append([n, e, conc, spec.eps_target])
    return t


HANDLERS = {
    "space-info": cmd_space_info,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "noise-sweep": cmd_noise_sweep,
    "coverage": cmd_coverage,
    "bounds": cmd_bounds,
    "remark34": cmd_remark34,
    "reconstruct-one": cmd_reconstruct_one,
}


# -- output --------------------------------------------------------------------------


def metadata_lines(cfg: RunConfig, timestamp: str | None = None) -> list[str]:
    ts = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    lines = [f"# rkrecon version: {__version__}", f"# command: {cfg.command}"]
    if "seed" in cfg.params:
        origin = " (drawn from entropy)" if cfg.get("seed_drawn") else ""
        lines.append(f"# seed: {cfg['seed']}{origin}")
    if cfg.get("trials") is not None:
        lines.append(f"# trials: {cfg['trials']}")
    lines.append(f"# timestamp: {ts}")
    lines.append("# rerun: rkrecon " + shlex.join(cfg.rerun_argv()))
    return lines


def render_csv(table: Table, meta: Sequence[str]) -> str:
    buf = io.StringIO()
    for line in meta:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def emit_csv(table: Table, path: str | None, meta: Sequence[str] = ()) -> None:
    """Write to ``path`` (UTF-8) or stdout; ``OSError`` propagates to the caller."""
    text = render_csv(table, meta)
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    cfg = parse_args(argv)
    try:
        table = HANDLERS[cfg.command](cfg)
        emit_csv(table, cfg.get("output"), metadata_lines(cfg))
    except OSError as exc:
        target = cfg.get("output") or "stdout"
        print(f"rkrecon: cannot write {target}: {exc}", file=sys.stderr)
        return 1
    except (RKReconError, ValueError, ArithmeticError) as exc:
        print(f"rkrecon: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
