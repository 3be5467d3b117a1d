"""Command-line front end: ``solve``, ``verify`` and ``dump-kernel``."""

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import reference
from .extrapolation import fit_truncations, heuristic_step, power_law_fit, HeuristicStep
from .kernel import assemble
from .solver import TruncationSolver
from .verify import run_suites

__all__ = ["CapacitanceEstimate", "RunConfig", "run", "format_rows", "resolve_threads", "main", "COLUMNS"]

THREADS_ENV = "LOVECAP_THREADS"
COLUMNS = (
    "kappa",
    "N",
    "f0_raw",
    "c_extrapolated",
    "method",
    "alpha",
    "beta",
    "delta_c",
    "kirchhoff",
    "ignatowsky",
    "excess_geometric",
)
MODES = ("raw", "power", "heuristic")


@dataclass(frozen=True)
class RunConfig:
    kappas: tuple
    truncs: tuple  # one per kappa
    mode: str = "raw"
    threads: int = 1

    @classmethod
    def build(cls, kappas, truncs, mode="raw", threads=1):
        kappas = tuple(float(k) for k in kappas)
        truncs = tuple(int(n) for n in truncs)
        if not kappas:
            raise ValueError("no kappa given")
        if any(not k > 0 for k in kappas):
            raise ValueError(f"kappa values must be positive: {kappas}")
        if len(truncs) == 1:
            truncs = truncs * len(kappas)
        if len(truncs) != len(kappas):
            raise ValueError(f"give one N or one N per kappa ({len(kappas)} kappas, {len(truncs)} N)")
        if any(n < 0 for n in truncs):
            raise ValueError("N must be >= 0")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if mode == "heuristic":
            if len(kappas) < 2:
                raise ValueError("heuristic mode needs at least two kappa values")
            if any(b >= a for a, b in zip(kappas, kappas[1:])):
                raise ValueError("heuristic mode needs strictly decreasing kappa values")
        if int(threads) < 1:
            raise ValueError("thread count must be >= 1")
        return cls(kappas, truncs, mode, int(threads))


@dataclass(frozen=True)
class CapacitanceEstimate:
    kappa: float
    trunc: int
    f0_raw: float | None = None
    c_extrapolated: float | None = None
    method: str = "raw"
    alpha: float | None = None
    beta: float | None = None
    delta_c: float | None = None
    c_kirchhoff: float | None = None
    c_ignatowsky: float | None = None
    excess_geometric: float | None = None
    error: str | None = None

    @classmethod
    def make(cls, kappa, trunc, f0, method, c_ext=None, **extra):
        best = f0 if c_ext is None else c_ext
        return cls(
            kappa,
            trunc,
            f0,
            c_ext,
            method,
            c_kirchhoff=reference.kirchhoff(kappa),
            c_ignatowsky=reference.ignatowsky(kappa),
            excess_geometric=reference.excess_over_geometric(best, kappa),
            **extra,
        )

    @classmethod
    def failed(cls, kappa, trunc, err):
        return cls(kappa, trunc, method="error", error=f"{type(err).__name__}: {err}")

    def values(self):
        return (
            self.kappa,
            self.trunc,
            self.f0_raw,
            self.c_extrapolated,
            self.method,
            self.alpha,
            self.beta,
            self.delta_c,
            self.c_kirchhoff,
            self.c_ignatowsky,
            self.excess_geometric,
        )


_ERRORS = (ValueError, RuntimeError, ArithmeticError)


def _solve_one(kappa, trunc, mode):
    """Everything that can run independently per kappa.  Returns (estimate, solver, fit)."""
    solver = TruncationSolver(assemble(kappa, trunc))
    f0 = solver.f0(trunc)
    if mode == "raw":
        return CapacitanceEstimate.make(kappa, trunc, f0, "raw"), solver, None
    fit = power_law_fit(kappa, [(n, solver.f0(n)) for n in fit_truncations(trunc)])
    est = CapacitanceEstimate.make(kappa, trunc, f0, "power", fit.c_hat, alpha=fit.alpha, beta=fit.beta)
    return est, solver, fit


def run(config: RunConfig):
    """One estimate per kappa, in the order of ``config.kappas``."""
    pairs = list(zip(config.kappas, config.truncs))
    per_kappa_mode = "raw" if config.mode == "raw" else "power"

    def job(i):
        kappa, trunc = pairs[i]
        # the chain only needs raw solves past the seed
        mode = "raw" if config.mode == "heuristic" and i > 0 else per_kappa_mode
        try:
            return _solve_one(kappa, trunc, mode)
        except _ERRORS as err:
            return CapacitanceEstimate.failed(kappa, trunc, err), None, None

    # warning filters are process-global, so record around the whole pool
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(job, range(len(pairs))))
    notes = sorted({str(w.message) for w in caught})
    if config.mode != "heuristic":
        rows = [est for est, _, _ in outcomes]
        return rows, notes + _bound_notes(rows)

    seed_est, seed_solver, seed_fit = outcomes[0]
    rows = [seed_est]
    if seed_fit is None:
        reason = "seed fit failed"
        rows += [CapacitanceEstimate.failed(k, n, RuntimeError(reason)) for k, n in pairs[1:]]
        return rows, notes
    rows[0] = CapacitanceEstimate.make(
        seed_est.kappa,
        seed_est.trunc,
        seed_est.f0_raw,
        "heuristic-seed",
        seed_fit.c_hat,
        alpha=seed_fit.alpha,
        beta=seed_fit.beta,
    )
    if seed_fit.trunc * seed_fit.kappa < 1:
        notes.append(
            f"seed fit at N*kappa = {seed_fit.trunc * seed_fit.kappa:.3g} < 1; expect the"
            " power-law seed to overshoot by roughly a third of its extrapolation"
        )
    prev = HeuristicStep(seed_fit.kappa, seed_fit.trunc, seed_fit.f0, seed_fit.c_hat)
    prev_solver = seed_solver
    broken = None
    for (kappa, trunc), (est, solver, _) in zip(pairs[1:], outcomes[1:]):
        if broken is None and solver is None:
            broken = f"chain broken at kappa={kappa!r}"
            rows.append(est)
            continue
        if broken is not None:
            rows.append(CapacitanceEstimate.failed(kappa, trunc, RuntimeError(broken)))
            continue
        try:
            step = heuristic_step(prev, prev_solver, kappa, trunc, est.f0_raw)
        except _ERRORS as err:
            broken = f"chain broken at kappa={kappa!r}"
            rows.append(CapacitanceEstimate.failed(kappa, trunc, err))
            continue
        rows.append(
            CapacitanceEstimate.make(kappa, trunc, est.f0_raw, "heuristic", step.c_tilde, delta_c=step.delta_c)
        )
        prev, prev_solver = step, solver
    return rows, notes + _bound_notes(rows)


def _bound_notes(rows):
    """Flag extrapolated values at kappa <= 0.01 that fall below the Ignatowsky bound."""
    out = []
    for r in rows:
        if r.c_extrapolated is not None and r.kappa <= 0.01 and r.c_extrapolated <= r.c_ignatowsky:
            out.append(
                f"kappa={r.kappa!r}: extrapolated {r.c_extrapolated:.10g} is not above the lower bound"
                f" {r.c_ignatowsky:.10g}; N={r.trunc} is not converged"
            )
    return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        return float(format(v, ".10g"))
    return v


def format_rows(rows, fmt="csv"):
    """Render estimates as CSV (exact header) or JSON; 10 significant digits."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_cell(v) for v in r.values()])
        return buf.getvalue()
    if fmt == "json":
        recs = []
        for r in rows:
            rec = {c: _json_value(v) for c, v in zip(COLUMNS, r.values())}
            if r.error is not None:
                rec["error"] = r.error
            recs.append(rec)
        return json.dumps(recs, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _split_list(tokens, conv):
    out = []
    for tok in tokens:
        out.extend(conv(p) for p in tok.split(",") if p.strip())
    return out


def resolve_threads(flag=None, environ=None):
    """Thread count: the flag if given, else $LOVECAP_THREADS, else 1."""
    if flag is not None:
        return int(flag)
    raw = (os.environ if environ is None else environ).get(THREADS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _cmd_solve(args):
    try:
        cfg = RunConfig.build(
            _split_list(args.kappa, float),
            _split_list(args.trunc, int),
            args.mode,
            resolve_threads(args.threads),
        )
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    rows, notes = run(cfg)
    for msg in dict.fromkeys(notes):
        print(f"note: {msg}", file=sys.stderr)
    text = format_rows(rows, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if r.error is not None]
    for r in failed:
        print(f"error: kappa={r.kappa!r}, N={r.trunc}: {r.error}", file=sys.stderr)
    return 1 if failed else 0


def _cmd_verify(args):
    ok = True
    for res in run_suites(args.level, seed=args.seed):
        print(res.line(), flush=True)
        ok &= res.passed
    print("verify: " + ("all suites passed" if ok else "FAILED"))
    return 0 if ok else 1


def _cmd_dump(args):
    try:
        mat = assemble(args.kappa, args.trunc)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    mat.dump(args.out)
    print(f"wrote {args.out}: kappa={args.kappa!r}, N={args.trunc}, {len(mat.packed)} entries")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="lovecap", description="Circular-disk capacitor via the Love equation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="normalized capacitance for one or more separations")
    s.add_argument("--kappa", nargs="+", required=True, help="separations d/a (space or comma separated)")
    s.add_argument("--trunc", nargs="+", required=True, help="truncation N, once or once per kappa")
    s.add_argument("--mode", choices=MODES, default="raw")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--out", help="output file (default stdout)")
    s.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    s.set_defaults(func=_cmd_solve)

    v = sub.add_parser("verify", help="compare closed forms against quadrature oracles")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    v.add_argument("--seed", type=int, default=0, help="seed for the random integral draws")
    v.set_defaults(func=_cmd_verify)

    d = sub.add_parser("dump-kernel", help="write the packed kernel matrix to a binary file")
    d.add_argument("--kappa", type=float, required=True)
    d.add_argument("--trunc", type=int, required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=_cmd_dump)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
