"""Command-line entry point.

Exit codes: 0 everything checked out, 1 a mathematical mismatch (a possible
counterexample), 2 an operational problem (missing cache, I/O, bad input).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import coeffs as co
from . import fence, genfun, monodromy, numeric
from .cache import CacheCorruptionError, CacheError, CoeffCache, default_cache_path, format_record

log = logging.getLogger("dp3")

EXIT_OK, EXIT_MISMATCH, EXIT_OPERATIONAL = 0, 1, 2

STRETCH_RANGE = (793, 800)
# rough wall-clock model for the engine on one core, fitted to m <= 300 runs
_COST_REF_M, _COST_REF_S, _COST_EXP = 300, 14.0, 4.2


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """'RE,IM' (or a single real number) to complex."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}")


def parse_sign(text: str) -> int:
    if text in ("+1", "1", "+"):
        return 1
    if text in ("-1", "-"):
        return -1
    raise argparse.ArgumentTypeError(f"expected +1 or -1, got {text!r}")


@dataclass
class RunConfig:
    command: str
    max_m: int | None
    cache: Path
    out: Path | None
    c1: complex
    kappa: int
    eps: int
    b: float
    tau0: float
    tau_end: float
    tol: float
    order: int
    which: int | None
    threads: int | None
    stretch: bool
    alpha: float
    column: int

    @property
    def eps_b(self) -> float:
        return self.eps * self.b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cache", type=Path, default=None,
                        help="coefficient cache file (default: $DP3_CACHE_DIR/coeffs.txt)")
    common.add_argument("--max-m", type=int, default=None)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--threads", type=int, default=None, help="parallelism hint")
    common.add_argument("--c1", type=parse_complex, default=0j, metavar="RE,IM",
                        help="c1 (tilde variables for monodromy/solve); use --c1=-3,-2 for a leading minus")
    common.add_argument("--kappa", type=parse_sign, default=1)
    common.add_argument("--eps", type=parse_sign, default=None)
    common.add_argument("--b", type=float, default=None)
    common.add_argument("--eps-b", type=float, default=None)
    common.add_argument("--tau0", type=float, default=1e-3)
    common.add_argument("--tau-end", type=float, default=10.0)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--order", type=int, default=40)
    common.add_argument("--which", type=int, choices=(1, 2), default=None)
    common.add_argument("--stretch", action="store_true")
    common.add_argument("--alpha", type=float, default=1.04)
    common.add_argument("--column", type=int, choices=(0, 1), default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dp3", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [
        ("coeffs", "extend the coefficient cache to --max-m"),
        ("dump", "print cached coefficient records"),
        ("verify", "parity, degree, column and fence suites over the cached range"),
        ("fence", "2-adic content against the fence formulas (JSON report)"),
        ("genfun", "generating-function column against the recurrence (CSV)"),
        ("bound", "ratio of the convergence estimate at --max-m"),
        ("monodromy", "monodromy point, residuals and nu+1 for --c1 (JSON)"),
        ("roots", "roots of the exponent equations (CSV)"),
        ("solve", "integrate the equation from the series (CSV + manifest)"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return p


def make_config(args: argparse.Namespace) -> RunConfig:
    eps, b, eps_b = args.eps, args.b, args.eps_b
    if eps_b is not None and eps_b <= 0:
        raise UsageError("--eps-b must be positive")
    if eps is None:
        eps = 1 if b is None else (1 if b > 0 else -1)
    if b is None:
        b = eps * (eps_b if eps_b is not None else 0.5)
    elif eps_b is not None and not math.isclose(eps * b, eps_b, rel_tol=1e-15):
        raise UsageError("--eps-b contradicts --eps and --b")
    if not eps * b > 0:
        raise UsageError(f"need eps*b > 0, got eps={eps}, b={b}")
    if args.command in ("coeffs",) and (args.max_m is None or args.max_m < 2):
        raise UsageError("--max-m >= 2 is required")
    if args.max_m is not None and args.max_m < 2:
        raise UsageError("--max-m must be at least 2")
    cache = args.cache if args.cache is not None else default_cache_path()
    return RunConfig(args.command, args.max_m, Path(cache), args.out, args.c1, args.kappa, eps, b,
                     args.tau0, args.tau_end, args.tol, args.order, args.which, args.threads,
                     args.stretch, args.alpha, args.column)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text if text.endswith("\n") else text + "\n")


def _open_existing(cfg: RunConfig) -> CoeffCache:
    if not cfg.cache.exists():
        raise CacheError(f"no coefficient cache at {cfg.cache}; run 'dp3 coeffs' first")
    return CoeffCache.open(cfg.cache, create=False)


def estimate_seconds(m_from: int, m_to: int) -> float:
    """Very rough cost of extending the cache from m_from to m_to."""
    f = lambda m: _COST_REF_S * (max(m, 0) / _COST_REF_M) ** _COST_EXP
    return max(f(m_to) - f(m_from), 0.0)


# ---------------------------------------------------------------------------
# commands


def cmd_coeffs(cfg: RunConfig) -> int:
    cache = CoeffCache.open(cfg.cache)
    have = cache.max_m
    if have >= cfg.max_m:
        print(f"cache hit: {cfg.cache} holds m <= {have}, nothing to compute")
        return EXIT_OK
    print(f"extending {cfg.cache} from m={have} to m={cfg.max_m} "
          f"(rough estimate {estimate_seconds(have, cfg.max_m):.0f} s)", flush=True)
    t0 = time.perf_counter()

    def progress(m, dt, form):
        print(f"m={m} {dt:.3f}s total={time.perf_counter() - t0:.1f}s", flush=True)

    co.compute_cm(cfg.max_m, cache, validate="tail", progress=progress, threads=cfg.threads)
    print(f"done: m <= {cache.max_m} in {time.perf_counter() - t0:.2f} s")
    return EXIT_OK


def cmd_dump(cfg: RunConfig) -> int:
    cache = _open_existing(cfg)
    upto = cache.max_m if cfg.max_m is None else min(cfg.max_m, cache.max_m)
    _emit("\n".join(format_record(m, cache.forms[m]) for m in range(upto + 1)), cfg.out)
    return EXIT_OK


def _fence_range(cfg: RunConfig, cache: CoeffCache) -> tuple[int, int]:
    if cfg.stretch:
        return STRETCH_RANGE
    hi = cache.max_m if cfg.max_m is None else cfg.max_m
    return 2, hi


def cmd_fence(cfg: RunConfig) -> int:
    cache = _open_existing(cfg)
    lo, hi = _fence_range(cfg, cache)
    if hi > cache.max_m:
        eta = estimate_seconds(cache.max_m, hi)
        raise CacheError(f"cache holds m <= {cache.max_m}; run 'dp3 coeffs --max-m {hi}' first "
                         f"(rough estimate {eta / 3600:.1f} h)")
    report = fence.verify_fence((lo, hi), cache)
    _emit(report.to_json(), cfg.out)
    for e in report.mismatches:
        print(f"fence mismatch at m={e.m}: computed {e.computed}, predicted {e.predicted} ({e.rule})",
              file=sys.stderr)
    for e in report.unexpected_shape_violations:
        print(f"content of c_{e.m} is not a power of two (odd part {e.odd_content})", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_MISMATCH


def cmd_verify(cfg: RunConfig) -> int:
    cache = _open_existing(cfg)
    hi = cache.max_m if cfg.max_m is None else min(cfg.max_m, cache.max_m)
    failures = []
    t0 = time.perf_counter()
    try:
        co.revalidate(cache, hi)
    except CacheCorruptionError as exc:
        print(f"cache entry c_{exc.index} does not satisfy the recurrence", file=sys.stderr)
        return EXIT_MISMATCH
    summary = {"range": [2, hi]}
    bad = [m for m in range(2, hi + 1) if not co.check_parity(m, cache)]
    summary["parity"] = not bad
    failures += [f"parity fails at m={m}" for m in bad]
    bad = [m for m in range(2, hi + 1) if not co.check_degree(m, cache)]
    summary["degree"] = not bad
    failures += [f"degree fails at m={m}" for m in bad]
    for j in (0, 1):
        rep = genfun.check_column(j, cache.truncated(hi), hi + 1)
        summary[f"column{j}"] = rep.ok
        failures += [f"column {j} differs at m={m}" for m, _, _ in rep.mismatches]
    frep = fence.verify_fence((2, hi), cache)
    summary["fence"] = frep.ok
    failures += [f"fence differs at m={e.m}" for e in frep.mismatches]
    failures += [f"content of c_{e.m} has odd part {e.odd_content}" for e in frep.unexpected_shape_violations]
    if cfg.stretch:
        if cache.max_m < STRETCH_RANGE[1]:
            raise CacheError(f"stretch check needs the cache to m={STRETCH_RANGE[1]}")
        srep = fence.verify_fence(STRETCH_RANGE, cache)
        summary["fence_stretch"] = srep.ok
        failures += [f"fence differs at m={e.m}" for e in srep.mismatches]
    summary["elapsed_seconds"] = round(time.perf_counter() - t0, 3)
    summary["failures"] = failures
    _emit(json.dumps(summary, indent=1), cfg.out)
    for f in failures:
        print(f, file=sys.stderr)
    return EXIT_MISMATCH if failures else EXIT_OK


def cmd_genfun(cfg: RunConfig) -> int:
    cache = _open_existing(cfg)
    hi = cache.max_m if cfg.max_m is None else min(cfg.max_m, cache.max_m)
    rep = genfun.check_column(cfg.column, cache.truncated(hi), hi + 1)
    _emit(rep.to_csv(), cfg.out)
    return EXIT_OK if rep.ok else EXIT_MISMATCH


def cmd_bound(cfg: RunConfig) -> int:
    m = 8 if cfg.max_m is None else cfg.max_m
    C2 = 12.0
    value = co.bound_Rm(m, cfg.alpha, C2)
    _emit(json.dumps({"m": m, "alpha": cfg.alpha, "C2": C2, "R": value, "closes": value <= 1}), cfg.out)
    return EXIT_OK


def cmd_monodromy(cfg: RunConfig) -> int:
    pt = monodromy.monodromy_point(cfg.c1, cfg.eps_b, cfg.kappa)
    doc = {"point": pt.to_dict(),
           "manifold_residuals": monodromy.manifold_residuals(pt),
           "relations": monodromy.relation_residuals(pt)}
    try:
        nu = monodromy.nu_plus_one(pt)
        doc["nu_plus_one"] = [nu.real, nu.imag]
    except ValueError as exc:
        doc["nu_plus_one"] = None
        doc["note"] = str(exc)
    if cfg.kappa == 1:
        img = monodromy.backlund_map(pt)
        doc["backlund_image"] = img.to_dict()
        doc["backlund_image_residuals"] = monodromy.manifold_residuals(img)
    _emit(json.dumps(doc, indent=1), cfg.out)
    worst = max(doc["manifold_residuals"] + list(doc["relations"].values()))
    return EXIT_OK if worst < 1e-11 else EXIT_MISMATCH


def cmd_roots(cfg: RunConfig) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["which", "re", "im", "residual"])
    for which in ((cfg.which,) if cfg.which else (1, 2)):
        for r in monodromy.find_varrho_roots(which):
            if cfg.stretch or r.admissible:  # --stretch lists the whole search rectangle
                w.writerow([which, repr(r.value.real), repr(r.value.imag), f"{r.residual:.3e}"])
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    params = numeric.SolutionParams(cfg.kappa, cfg.eps, cfg.b, cfg.c1)
    traj = numeric.integrate(params, cfg.tau0, cfg.tau_end, cfg.tol, seed_order=cfg.order)
    if cfg.out is None:
        sys.stdout.write(numeric.format_csv(traj))
    else:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        numeric.emit_csv(traj, cfg.out)
        numeric.write_manifest([(traj, cfg.out)], cfg.out.with_suffix(".json"))
    for p in traj.poles:
        print(f"pole near tau in [{p.lo:.6g}, {p.hi:.6g}] ({p.indication}); trajectory stops there",
              file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "coeffs": cmd_coeffs, "dump": cmd_dump, "verify": cmd_verify, "fence": cmd_fence,
    "genfun": cmd_genfun, "bound": cmd_bound, "monodromy": cmd_monodromy, "roots": cmd_roots,
    "solve": cmd_solve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2 already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"dp3 {args.command}: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL
    except CacheCorruptionError as exc:
        print(f"dp3 {args.command}: cache entry c_{exc.index} does not satisfy the recurrence",
              file=sys.stderr)
        return EXIT_MISMATCH
    except numeric.RouteMismatchError as exc:
        print(f"dp3 {args.command}: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (CacheError, OSError, ValueError, KeyError, numeric.IntegrationError) as exc:
        print(f"dp3 {args.command}: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL


if __name__ == "__main__":
    sys.exit(main())
