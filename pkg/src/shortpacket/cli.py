"""Command-line front end.

Every subcommand writes the same CSV schema, preceded by ``# key = value``
metadata lines echoing the resolved configuration (the ``out`` path and the
thread count are not part of it). Feeding those lines back as a config file
reproduces the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from . import __version__, montecarlo, preamble, superimposed
from .model import PreambleDesign, Scenario, SuperimposedDesign, db_to_linear
from .optimize import (
    ALPHA_GRID,
    NumericalError,
    OptimizationResult,
    PragmaticSchedule,
    golden_section,
    optimize,
    optimize_preamble_delta,
    optimize_superimposed_delta,
    pragmatic_sweep,
    preamble_lengths,
)
from .zc import best_sequence

COLUMNS = (
    "structure,snr_db,n,bits,recovery,np,alpha,delta,p_fa,p_fa1,p_fa2,p_md,eps_d,"
    "per_analytic,per_mc,ci_low,ci_high,trials,seed"
).split(",")
CONFIG_KEYS = ("structure", "n", "bits", "recovery", "snr_db", "np", "alpha", "delta", "trials", "seed", "out")
STRUCTURES = ("preamble", "superimposed")
DEFAULT_SEED = 20180101
DEFAULT_TRIALS = 100_000
OPTIMIZE = "optimize"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    pass


Param = Union[str, float]  # a number or OPTIMIZE


@dataclass(frozen=True)
class RunConfig:
    structure: str
    n: int
    bits: int
    recovery: int
    snr_db: tuple[float, ...]
    snr_text: str
    overhead: Param
    delta: Param
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    out: str = "-"

    def scenario(self, snr_db: float) -> Scenario:
        return Scenario.from_db(self.n, self.bits, snr_db, self.recovery)

    @property
    def overhead_key(self) -> str:
        return "np" if self.structure == "preamble" else "alpha"

    def metadata(self) -> dict[str, str]:
        return {
            "structure": self.structure,
            "n": str(self.n),
            "bits": str(self.bits),
            "recovery": str(self.recovery),
            "snr_db": self.snr_text,
            self.overhead_key: _fmt_param(self.overhead),
            "delta": _fmt_param(self.delta),
            "trials": str(self.trials),
            "seed": str(self.seed),
        }


def _fmt_param(v: Param) -> str:
    if v == OPTIMIZE:
        return OPTIMIZE
    return str(int(v)) if isinstance(v, int) else repr(float(v))


# --- parsing -----------------------------------------------------------------------------


def parse_snr(text: str) -> tuple[float, ...]:
    """``"0,2,4"`` or inclusive ``"start:step:stop"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, step, stop = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError(f"snr_db: bad range {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 10) for i in range(count))
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"snr_db: cannot parse {text!r}") from None
    if not values:
        raise ConfigError("snr_db: empty list")
    return values


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment line."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def read_metadata(path: str | Path) -> dict[str, str]:
    """The ``# key = value`` block at the top of a CSV written by this tool."""
    meta = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.startswith("# "):
            break
        key, value = (s.strip() for s in raw[2:].split("=", 1))
        meta[key] = value
    return meta


def _int(raw: dict, key: str, minimum: int) -> int:
    if key not in raw or raw[key] in (None, ""):
        raise ConfigError(f"missing required parameter: {key}")
    try:
        value = int(str(raw[key]))
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw[key]!r}") from None
    if value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _param(raw: dict, key: str, cast) -> Param:
    value = str(raw.get(key, OPTIMIZE)).strip()
    if value == OPTIMIZE:
        return OPTIMIZE
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number or 'optimize', got {value!r}") from None


def parse_config(flags: Optional[dict] = None, config_file: Optional[str] = None, *, command: str = "analyze") -> RunConfig:
    """Merge a config file with flag overrides (flags win) and validate."""
    raw: dict = dict(read_config_file(config_file)) if config_file else {}
    raw.update({k: v for k, v in (flags or {}).items() if v is not None})

    if command == "pragmatic":
        raw.setdefault("structure", "preamble")
    structure = raw.get("structure")
    if structure is None:
        raise ConfigError("missing required parameter: structure")
    if structure not in STRUCTURES:
        raise ConfigError(f"structure: expected one of {STRUCTURES}, got {structure!r}")
    if command == "pragmatic" and structure != "preamble":
        raise ConfigError("structure: pragmatic sweep is defined for the preamble structure only")
    if command == "pragmatic":
        for key in ("np", "delta"):
            if str(raw.get(key, OPTIMIZE)).strip() != OPTIMIZE:
                raise ConfigError(f"{key}: pragmatic sweep optimises it per anchor; leave it unset")

    n = _int(raw, "n", 2)
    bits = _int(raw, "bits", 1)
    recovery = _int(raw, "recovery", 1)
    if "snr_db" not in raw:
        raise ConfigError("missing required parameter: snr_db")
    snr_text = str(raw["snr_db"]).strip()
    snr = parse_snr(snr_text)

    if structure == "preamble":
        if raw.get("alpha") not in (None, ""):
            raise ConfigError("alpha: only applies to the superimposed structure")
        overhead = _param(raw, "np", int)
        if overhead != OPTIMIZE and (overhead < 1 or overhead % 2 == 0 or overhead >= n):
            raise ConfigError(f"np: must be odd and in [1, n-1], got {overhead}")
    else:
        if n % 2 == 0:
            raise ConfigError(f"n: superimposed requires odd n (Zadoff-Chu sequence spans the packet), got {n}")
        if raw.get("np") not in (None, ""):
            raise ConfigError("np: only applies to the preamble structure")
        overhead = _param(raw, "alpha", float)
        if overhead != OPTIMIZE and not 0.0 < overhead < 1.0:
            raise ConfigError(f"alpha: must lie in (0, 1), got {overhead}")
    delta = _param(raw, "delta", float)
    if delta != OPTIMIZE and not math.isfinite(delta):
        raise ConfigError("delta: must be finite")

    trials = _int(raw, "trials", 1) if "trials" in raw else DEFAULT_TRIALS
    seed = _int(raw, "seed", 0) if "seed" in raw else DEFAULT_SEED
    if seed >= 2**64:
        raise ConfigError("seed: must fit in 64 bits")
    return RunConfig(
        structure=structure,
        n=n,
        bits=bits,
        recovery=recovery,
        snr_db=snr,
        snr_text=snr_text,
        overhead=overhead,
        delta=delta,
        trials=trials,
        seed=seed,
        out=str(raw.get("out", "-")),
    )


# --- evaluation --------------------------------------------------------------------------


def _evaluate(structure: str, scenario: Scenario, overhead, delta) -> OptimizationResult:
    """Design for one fixed overhead value, threshold fixed or optimised."""
    if structure == "preamble":
        if delta == OPTIMIZE:
            return optimize_preamble_delta(scenario, int(overhead))
        design = PreambleDesign(int(overhead), float(delta), best_sequence(int(overhead)))
        bd = preamble.per_upper_bound(design, scenario)
    else:
        if delta == OPTIMIZE:
            return optimize_superimposed_delta(scenario, float(overhead))
        design = SuperimposedDesign.for_scenario(scenario, float(overhead), float(delta))
        bd = superimposed.per_approximation(design, scenario)
    return OptimizationResult(design, bd.per, bd, 1)


def _overhead_grid(cfg: RunConfig) -> list:
    if cfg.overhead != OPTIMIZE:
        return [cfg.overhead]
    if cfg.structure == "preamble":
        return list(preamble_lengths(cfg.n))
    return [float(a) for a in ALPHA_GRID]


def resolve_design(cfg: RunConfig, snr_db: float) -> OptimizationResult:
    """Design used by ``optimize`` and ``simulate`` at one SNR."""
    sc = cfg.scenario(snr_db)
    if cfg.overhead != OPTIMIZE:
        return _evaluate(cfg.structure, sc, cfg.overhead, cfg.delta)
    if cfg.delta == OPTIMIZE:
        return optimize(sc, cfg.structure)
    curve = [_evaluate(cfg.structure, sc, o, cfg.delta) for o in _overhead_grid(cfg)]
    best = min(curve, key=lambda r: (r.per, r.design.overhead))
    if cfg.structure == "superimposed":
        i = curve.index(best)
        lo = float(ALPHA_GRID[max(i - 1, 0)])
        hi = float(ALPHA_GRID[min(i + 1, len(ALPHA_GRID) - 1)])
        a, per, _ = golden_section(lambda a: _evaluate("superimposed", sc, a, cfg.delta).per, lo, hi, 1e-7)
        if per < best.per:
            best = _evaluate("superimposed", sc, a, cfg.delta)
    return best


def _row(structure: str, snr_db: float, cfg: RunConfig, res: OptimizationResult, mc=None) -> dict:
    d, bd = res.design, res.breakdown
    row = {
        "structure": structure,
        "snr_db": snr_db,
        "n": cfg.n,
        "bits": cfg.bits,
        "recovery": cfg.recovery,
        "np": d.n_p if isinstance(d, PreambleDesign) else None,
        "alpha": d.alpha if isinstance(d, SuperimposedDesign) else None,
        "delta": d.delta,
        "p_fa": bd.p_fa,
        "p_fa1": bd.p_fa1,
        "p_fa2": bd.p_fa2,
        "p_md": bd.p_md,
        "eps_d": bd.eps_d,
        "per_analytic": bd.per,
        "per_mc": None,
        "ci_low": None,
        "ci_high": None,
        "trials": None,
        "seed": None,
    }
    if mc is not None:
        row.update(per_mc=mc.per_hat, ci_low=mc.ci_low, ci_high=mc.ci_high, trials=mc.trials, seed=mc.seed)
    return row


def _map(fn, items, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_analyze(cfg: RunConfig, threads: int = 1) -> list[dict]:
    points = [(s, o) for s in cfg.snr_db for o in _overhead_grid(cfg)]
    results = _map(lambda so: _evaluate(cfg.structure, cfg.scenario(so[0]), so[1], cfg.delta), points, threads)
    return [_row(cfg.structure, s, cfg, r) for (s, _), r in zip(points, results)]


def cmd_optimize(cfg: RunConfig, threads: int = 1) -> list[dict]:
    results = _map(lambda s: resolve_design(cfg, s), cfg.snr_db, threads)
    return [_row(cfg.structure, s, cfg, r) for s, r in zip(cfg.snr_db, results)]


def cmd_simulate(cfg: RunConfig, threads: int = 1) -> list[dict]:
    rows = []
    for s in cfg.snr_db:
        res = resolve_design(cfg, s)
        est = montecarlo.estimate_per(cfg.structure, cfg.scenario(s), res.design, cfg.trials, cfg.seed, workers=threads)
        rows.append(_row(cfg.structure, s, cfg, res, est))
    return rows


def cmd_pragmatic(cfg: RunConfig, threads: int = 1, *, interval_db: float = 1.0, freeze_delta: bool = False) -> list[dict]:
    """Ideal optimum (structure ``preamble``) next to the one-codebook-per-interval scheme (``pragmatic``)."""
    base = cfg.scenario(cfg.snr_db[0])
    schedule = PragmaticSchedule.build(base, cfg.snr_db, interval_db, freeze_delta)
    prag = pragmatic_sweep(base, cfg.snr_db, schedule)
    ideal = _map(lambda s: resolve_design(cfg, s), cfg.snr_db, threads)
    rows = [_row("preamble", s, cfg, r) for s, r in zip(cfg.snr_db, ideal)]
    rows += [_row("pragmatic", pt.snr_db, cfg, pt.result) for pt in prag]
    return rows


COMMANDS = {
    "analyze": cmd_analyze,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "pragmatic": cmd_pragmatic,
}


# --- output ------------------------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sort_key(row: dict):
    over = row["np"] if row["np"] is not None else row["alpha"]
    return (row["structure"], row["snr_db"], over if over is not None else -1.0)


def render_csv(rows: Sequence[dict], metadata: dict[str, str]) -> str:
    buf = io.StringIO()
    for k, v in metadata.items():
        buf.write(f"# {k} = {v}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in sorted(rows, key=_sort_key):
        writer.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def run(command: str, cfg: RunConfig, threads: int = 1, **options) -> str:
    rows = COMMANDS[command](cfg, threads, **options)
    meta = {"command": command, "version": __version__}
    if command == "simulate":
        meta["rng"] = montecarlo.RNG_NAME
    if command == "pragmatic":
        meta["interval_db"] = repr(float(options.get("interval_db", 1.0)))
        meta["freeze_delta"] = str(bool(options.get("freeze_delta", False))).lower()
    meta.update(cfg.metadata())
    return render_csv(rows, meta)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shortpacket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "error breakdown on the (SNR, overhead) grid",
        "optimize": "optimum overhead and threshold per SNR",
        "simulate": "Monte Carlo PER at the resolved design",
        "pragmatic": "fixed-codebook-per-interval preamble scheme next to the ideal optimum",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--structure", choices=STRUCTURES)
        p.add_argument("--n", help="channel uses per packet")
        p.add_argument("--bits", help="payload bits")
        p.add_argument("--recovery", help="recovery time after a false alarm, channel uses")
        p.add_argument("--snr-db", dest="snr_db", help="comma list or start:step:stop (dB)")
        p.add_argument("--np", help="preamble length or 'optimize' (default)")
        p.add_argument("--alpha", help="detection power fraction or 'optimize' (default)")
        p.add_argument("--delta", help="detection threshold or 'optimize' (default)")
        p.add_argument("--trials", help=f"Monte Carlo trials (default {DEFAULT_TRIALS})")
        p.add_argument("--seed", help=f"64-bit seed (default {DEFAULT_SEED})")
        p.add_argument("--out", help="output CSV path, '-' for stdout (default)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; does not affect output")
        if name == "pragmatic":
            p.add_argument("--interval-db", type=float, default=1.0, help="SNR width served by one codebook")
            p.add_argument("--freeze-delta", action="store_true", help="keep the anchor threshold across the interval")
    return parser


def _join_negative_snr(argv: Sequence[str]) -> list[str]:
    # argparse reads "-2,-1" as an option; glue it to its flag instead
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--snr-db":
            nxt = next(it, None)
            if nxt is not None and nxt[:1] == "-" and nxt[1:2].isdigit():
                out.append(f"--snr-db={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_join_negative_snr(argv))
    flags = {k: getattr(args, k) for k in CONFIG_KEYS}
    options = {}
    if args.command == "pragmatic":
        options = {"interval_db": args.interval_db, "freeze_delta": args.freeze_delta}
    try:
        cfg = parse_config(flags, args.config, command=args.command)
        text = run(args.command, cfg, max(1, args.threads), **options)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text, encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
