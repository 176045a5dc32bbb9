"""Command-line front end.

Subcommands::

    stcm simulate  [--config FILE] [flags]   Monte Carlo BER sweep -> CSV
    stcm analyze   [--config FILE] [flags]   union-bound curve -> CSV, plus trade-off table
    stcm table     --M 4 --Q 2 | --eta 5     trade-off table only
    stcm preset    NAME | --list             run a figure preset

A config file holds flat ``key = value`` lines (``#`` starts a comment).
Keys are the :class:`ExperimentSpec` field names; command-line flags
override the file. The default worker count comes from ``STCM_WORKERS``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .analysis import TradeoffRow, abep_bound, tradeoff_table, tradeoff_table_at_rate
from .codec import Scheme, SchemeConfig
from .core import ConfigurationError
from .sim import BerRecord, StopRule, default_workers, run_sweep

__all__ = [
    "CSV_HEADER",
    "ExperimentSpec",
    "PRESETS",
    "expand_preset",
    "format_table",
    "load_config",
    "main",
    "read_csv",
    "run_analysis",
    "run_experiment",
    "write_csv",
]

log = logging.getLogger("stcm")

CSV_HEADER = ("scheme", "M", "Q", "R", "snr_db", "bits", "errors", "ber", "theory_abep", "seed")


@dataclass(frozen=True)
class ExperimentSpec:
    """One BER curve: a scheme configuration, an SNR grid and a stop rule."""

    scheme: str = "stcm1"
    M: int = 0
    Q: int = 1
    R: int = 1
    T: int = 0
    kind: str | None = None
    snr_start: float = 0.0
    snr_stop: float = 20.0
    snr_step: float = 2.0
    min_errors: int = 200
    max_bits: int = 10**8
    stop_ber: float | None = None
    seed: int = 0
    output: str | None = None
    theory: bool = False
    preset: str | None = None

    def config(self) -> SchemeConfig:
        try:
            scheme = Scheme(self.scheme)
        except ValueError:
            names = ", ".join(s.value for s in Scheme)
            raise ConfigurationError(f"scheme: unknown scheme {self.scheme!r} (choose from {names})") from None
        return SchemeConfig(scheme, M=self.M, Q=self.Q, R=self.R, T=self.T, kind=self.kind)

    def snr_points(self) -> list[float]:
        if not all(math.isfinite(v) for v in (self.snr_start, self.snr_stop, self.snr_step)):
            raise ConfigurationError("snr_start: SNR range values must be finite")
        if self.snr_step <= 0:
            raise ConfigurationError(f"snr_step: must be > 0, got {self.snr_step}")
        if self.snr_start > self.snr_stop:
            raise ConfigurationError(
                f"snr_stop: empty SNR range ({self.snr_start} > {self.snr_stop})"
            )
        n = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [round(self.snr_start + i * self.snr_step, 10) for i in range(n)]

    def stop_rule(self) -> StopRule:
        if self.min_errors < 1:
            raise ConfigurationError(f"min_errors: must be >= 1, got {self.min_errors}")
        if self.max_bits < 1:
            raise ConfigurationError(f"max_bits: must be >= 1, got {self.max_bits}")
        return StopRule(self.min_errors, self.max_bits)

    def validate(self) -> "ExperimentSpec":
        self.config()
        self.snr_points()
        self.stop_rule()
        return self


# --- config parsing --------------------------------------------------------

_FIELDS = {f.name: f for f in fields(ExperimentSpec)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw) -> object:
    if name not in _FIELDS:
        raise ConfigurationError(f"{name}: unknown configuration key")
    if raw is None:
        return None
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    default = _FIELDS[name].default
    try:
        if name in ("kind", "output", "preset", "stop_ber") and text.lower() in ("", "none"):
            return None
        if isinstance(default, bool):
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(float(text)) if "e" in text.lower() else int(text)
        if isinstance(default, float) or name == "stop_ber":
            return float(text)
    except ValueError:
        raise ConfigurationError(f"{name}: cannot parse {raw!r}") from None
    return text


def load_config(path: str | Path) -> dict:
    """Read a flat ``key = value`` file into a dict of typed values."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def spec_from_mapping(values: dict) -> ExperimentSpec:
    return ExperimentSpec(**{k: _coerce(k, v) for k, v in values.items()})


def dump_spec(spec: ExperimentSpec) -> str:
    """Render a spec in the config-file format (``load_config`` reads it back)."""
    return "".join(f"{k} = {'' if v is None else v}\n" for k, v in asdict(spec).items())


# --- presets ----------------------------------------------------------------

def _fig1() -> tuple[ExperimentSpec, ...]:
    specs = []
    for eta in (2, 4, 6, 8, 10):
        specs.append(ExperimentSpec("simo", Q=1 << eta, R=8, snr_start=0, snr_stop=30, theory=True))
        specs.append(ExperimentSpec("mbm-simo", M=eta, Q=1, R=8, snr_start=-10, snr_stop=10, theory=True))
    return tuple(specs)


def _fig2() -> tuple[ExperimentSpec, ...]:
    specs = []
    for R in (1, 2, 4, 8):
        specs.append(ExperimentSpec("simo", Q=256, R=R, snr_start=0, snr_stop=40))
        specs.append(ExperimentSpec("mbm-simo", M=8, Q=1, R=R, snr_start=-10, snr_stop=40))
    return tuple(specs)


def _fig4() -> tuple[ExperimentSpec, ...]:
    return tuple(
        ExperimentSpec(s, M=4, Q=q, R=R, snr_start=0, snr_stop=30, theory=True)
        for R in (2, 4)
        for s, q in (("stcm1", 2), ("stcm2", 8), ("stcm3", 2))
    )


def _rate_matched(eta: int) -> tuple[ExperimentSpec, ...]:
    q = 1 << (eta - 4)
    rows = (("stcm1", 4, q), ("stcm2", 4, 1 << (eta - 2)), ("stcm3", 4, q),
            ("alamouti", 0, 1 << eta), ("mbm-simo", 4, q))
    return tuple(
        ExperimentSpec(s, M=M, Q=Q, R=R, snr_start=0, snr_stop=30)
        for R in (2, 4)
        for s, M, Q in rows
    )


# figure curves end once a point reaches this BER
PRESET_BER_FLOOR = 1e-6

PRESETS = {
    "fig1": _fig1,
    "fig2": _fig2,
    "fig4": _fig4,
    "fig5": lambda: _rate_matched(5),
    "fig6": lambda: _rate_matched(6),
}


def expand_preset(name: str) -> tuple[ExperimentSpec, ...]:
    """Specs for a named figure preset, tagged with the preset name."""
    try:
        build = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"preset: unknown preset {name!r} (choose from {', '.join(PRESETS)})"
        ) from None
    return tuple(replace(s, preset=name, stop_ber=PRESET_BER_FLOOR) for s in build())


# --- CSV ---------------------------------------------------------------------

def _real(x: float | None) -> str:
    return "" if x is None else format(x, ".17g")


def _rows(spec: ExperimentSpec, cfg: SchemeConfig, records: Iterable[BerRecord]):
    for r in records:
        yield (
            cfg.scheme.value, cfg.M, cfg.Q, cfg.R, _real(r.snr_db),
            r.bits, r.errors, _real(r.ber), _real(r.theory), spec.seed,
        )


def write_csv(out: TextIO, blocks, header: bool = True) -> None:
    """Write ``(spec, cfg, records)`` blocks as CSV with LF line endings."""
    w = csv.writer(out, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for spec, cfg, records in blocks:
        w.writerows(_rows(spec, cfg, records))


def read_csv(source: str | Path | TextIO) -> list[dict]:
    """Parse a CSV written by :func:`write_csv` back into typed rows."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_csv(fh)
    rows = []
    for raw in csv.DictReader(source):
        rows.append({
            "scheme": raw["scheme"],
            "M": int(raw["M"]),
            "Q": int(raw["Q"]),
            "R": int(raw["R"]),
            "snr_db": float(raw["snr_db"]),
            "bits": int(raw["bits"]) if raw["bits"] else None,
            "errors": int(raw["errors"]) if raw["errors"] else None,
            "ber": float(raw["ber"]) if raw["ber"] else None,
            "theory_abep": float(raw["theory_abep"]) if raw["theory_abep"] else None,
            "seed": int(raw["seed"]),
        })
    return rows


class _Output:
    """Context manager yielding the CSV stream (stdout when path is None or '-')."""

    def __init__(self, path: str | None):
        self.path = path
        self.fh = None

    def __enter__(self) -> TextIO:
        if self.path in (None, "-"):
            return sys.stdout
        self.fh = open(self.path, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


# --- runners -----------------------------------------------------------------

def simulate_specs(
    specs: Sequence[ExperimentSpec], workers: int | None = None, method: str = "auto"
) -> list[tuple[ExperimentSpec, SchemeConfig, list[BerRecord]]]:
    for s in specs:
        s.validate()
    blocks = []
    for s in specs:
        cfg = s.config()
        log.info("simulating %s", cfg.label())
        records = run_sweep(
            cfg, s.snr_points(), s.stop_rule(), s.seed, workers=workers,
            method=method, theory=s.theory, stop_below=s.stop_ber,
        )
        blocks.append((s, cfg, records))
    return blocks


def run_experiment(
    spec: ExperimentSpec | Sequence[ExperimentSpec],
    workers: int | None = None,
    method: str = "auto",
) -> int:
    """Simulate one spec (or a preset's list) and write the CSV; returns the exit status."""
    specs = [spec] if isinstance(spec, ExperimentSpec) else list(spec)
    blocks = simulate_specs(specs, workers, method)
    buf = io.StringIO()
    write_csv(buf, blocks)
    with _Output(specs[0].output) as out:
        out.write(buf.getvalue())
    return 0


def theory_records(spec: ExperimentSpec) -> list[BerRecord]:
    cfg = spec.config()
    return [
        BerRecord(snr, 0, 0, theory=float(abep_bound(cfg, cfg.noise_power(snr))))
        for snr in spec.snr_points()
    ]


def format_table(rows: Sequence[TradeoffRow]) -> str:
    """Fixed-width text rendering of a trade-off table."""
    head = ("Scheme", "Q", "eta (bpcu)", "D_min", "ML complexity", "formula")
    body = [
        (
            r.scheme,
            "-" if r.Q is None else str(r.Q),
            "-" if r.eta is None else format(r.eta, "g"),
            str(r.d_min),
            "-" if r.complexity is None else str(r.complexity),
            r.formula,
        )
        for r in rows
    ]
    widths = [max(len(c[i]) for c in [head, *body]) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip() for cells in [head, *body]]
    return "\n".join(lines) + "\n"


def run_analysis(spec: ExperimentSpec, table_out: TextIO | None = None) -> int:
    """Theory-only curve as CSV plus the trade-off table at the experiment's (M, Q, T)."""
    spec.validate()
    cfg = spec.config()
    records = theory_records(spec)
    buf = io.StringIO()
    # bits/errors/ber stay empty: there is no Monte Carlo in this mode
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow((cfg.scheme.value, cfg.M, cfg.Q, cfg.R, _real(r.snr_db), "", "", "", _real(r.theory), spec.seed))
    with _Output(spec.output) as out:
        out.write(buf.getvalue())
    if table_out is None:
        table_out = sys.stderr if spec.output in (None, "-") else sys.stdout
    # STBC-SM rows need a transmit-antenna count; the experiment's T applies only when given
    M, Q, T = max(cfg.M, 1), max(cfg.Q, 2), spec.T or 4
    table_out.write(f"Trade-off at M={M}, Q={Q}, T={T}\n")
    table_out.write(format_table(tradeoff_table(M, Q, T)))
    table_out.write(f"\nRate-matched at eta={cfg.eta:g} bpcu, M={M}\n")
    table_out.write(format_table(tradeoff_table_at_rate(cfg.eta, M, T)))
    return 0


# --- argument parsing ----------------------------------------------------------

def _spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", help="key = value configuration file")
    p.add_argument("--scheme", help="simo, ssk, mbm-simo, mbm-mimo, alamouti, stcm1, stcm2, stcm3")
    p.add_argument("--M", "-M", type=int, dest="M", help="RF mirrors per antenna")
    p.add_argument("--Q", "-Q", type=int, dest="Q", help="constellation order")
    p.add_argument("--R", "-R", type=int, dest="R", help="receive antennas")
    p.add_argument("--T", "-T", type=int, dest="T", help="transmit antennas (SSK)")
    p.add_argument("--kind", help="psk or qam")
    p.add_argument("--snr-start", type=float, dest="snr_start")
    p.add_argument("--snr-stop", type=float, dest="snr_stop")
    p.add_argument("--snr-step", type=float, dest="snr_step")
    p.add_argument("--min-errors", type=int, dest="min_errors")
    p.add_argument("--max-bits", type=float, dest="max_bits")
    p.add_argument("--stop-ber", type=float, dest="stop_ber", help="end the sweep once BER falls to this level")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")
    p.add_argument("--theory", action=argparse.BooleanOptionalAction, default=None)


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", "-j", type=int, help="worker processes (default: $STCM_WORKERS or 1)")
    p.add_argument("--method", choices=("auto", "bruteforce", "conditional"), default="auto")


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    values = load_config(args.config) if args.config else {}
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = int(v) if name == "max_bits" else v
    return spec_from_mapping(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stcm", description="STCM link-level simulation and analysis")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo BER sweep")
    _spec_flags(p)
    _run_flags(p)

    p = sub.add_parser("analyze", help="union-bound curve and trade-off table")
    _spec_flags(p)

    p = sub.add_parser("table", help="trade-off table")
    p.add_argument("--M", "-M", type=int, dest="M", default=4)
    p.add_argument("--Q", "-Q", type=int, dest="Q", default=2)
    p.add_argument("--T", "-T", type=int, dest="T", default=4)
    p.add_argument("--eta", type=float, help="choose Q per scheme to match this rate")

    p = sub.add_parser("preset", help="run a figure preset")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true", help="list presets and exit")
    p.add_argument("--dry-run", action="store_true", help="print the expanded specs instead of running")
    p.add_argument("--output", "-o")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-bits", type=float, dest="max_bits")
    _run_flags(p)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "simulate":
            workers = default_workers() if args.workers is None else args.workers
            return run_experiment(_spec_from_args(args), workers, args.method)
        if args.command == "analyze":
            return run_analysis(_spec_from_args(args))
        if args.command == "table":
            rows = (
                tradeoff_table_at_rate(args.eta, args.M, args.T)
                if args.eta is not None
                else tradeoff_table(args.M, args.Q, args.T)
            )
            sys.stdout.write(format_table(rows))
            return 0
        # preset
        if args.list:
            for name, build in PRESETS.items():
                print(f"{name}\t{len(build())} curves")
            return 0
        if not args.name:
            raise ConfigurationError("preset: a preset name is required (or --list)")
        overrides = {k: v for k in ("output", "seed") if (v := getattr(args, k)) is not None}
        if args.max_bits is not None:
            overrides["max_bits"] = int(args.max_bits)
        specs = [replace(s, **overrides) for s in expand_preset(args.name)]
        if args.dry_run:
            sys.stdout.write("\n".join(dump_spec(s) for s in specs))
            return 0
        workers = default_workers() if args.workers is None else args.workers
        return run_experiment(specs, workers, args.method)
    except ConfigurationError as exc:
        print(f"stcm: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"stcm: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
