"""Grid sweeps, verification runs and flat-file emission.

Rows are evaluated independently (optionally in worker processes) and
always emitted in (n_r, snr) order.  Every number in a row depends only on
the configuration and the seed, so output files are byte-identical for any
worker count.
"""

from __future__ import annotations

import json
import logging
import math
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .asymptotics import asymptotic_capacity
from .channel import LN2, AntennaConfig, DiscreteInput, verify_log_output_moment
from .discrete import OptimizerOptions, kt_check, optimize_discrete_input
from .errors import DomainError, MissingColumn, NcRayleighError
from .reference import coherent_capacity_mc, sengupta_capacity
from .supremum import (
    OptimalOutputDensity,
    capacity_beta_positive,
    capacity_of_zeta,
    capacity_supremum,
    capacity_via_entropies,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "NCRAYLEIGH_WORKERS"

METHODS = ("sup", "beta_pos", "asym", "coherent", "sengupta", "discrete", "verify")

COLUMNS = (
    "snr_db", "p_linear", "n_r", "n_t", "zeta_s", "beta", "c_sup_nats", "c_beta_pos_nats",
    "c_asym_nats", "c_coherent_nats", "c_coherent_stderr", "c_sengupta_nats", "c_discrete_nats",
    "kt_violation", "constraint_residual_max",
)

METHOD_COLUMNS = {
    "sup": ("zeta_s", "beta", "c_sup_nats"),
    "beta_pos": ("c_beta_pos_nats",),
    "asym": ("c_asym_nats",),
    "coherent": ("c_coherent_nats", "c_coherent_stderr"),
    "sengupta": ("c_sengupta_nats",),
    "discrete": ("c_discrete_nats", "kt_violation"),
    "verify": ("constraint_residual_max",),
}

# columns measured in nats; converted when emitting in bits
CAPACITY_COLUMNS = frozenset(
    ("c_sup_nats", "c_beta_pos_nats", "c_asym_nats", "c_coherent_nats", "c_coherent_stderr",
     "c_sengupta_nats", "c_discrete_nats")
)

RESIDUAL_LIMIT = 1e-7


def snr_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def snr_grid(start: float, stop: float, step: float) -> List[float]:
    """start, start + step, ... up to stop, computed by index to avoid drift."""
    if not step > 0.0:
        raise DomainError(f"SNR step must be positive, got {step!r}")
    if start > stop:
        raise DomainError(f"SNR start {start!r} exceeds stop {stop!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(n)]


@dataclass(frozen=True)
class SweepConfig:
    nr_list: Tuple[int, ...]
    snr_db_grid: Tuple[float, float, float]
    methods: FrozenSet[str] = frozenset({"sup"})
    nt: int = 1
    samples: int = 100_000
    seed: int = 0
    output_path: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        object.__setattr__(self, "nr_list", tuple(int(n) for n in self.nr_list))
        object.__setattr__(self, "methods", frozenset(self.methods))
        object.__setattr__(self, "snr_db_grid", tuple(float(v) for v in self.snr_db_grid))
        if not self.nr_list:
            raise DomainError("nr_list must be non-empty")
        if any(n < 1 for n in self.nr_list):
            raise DomainError(f"receive-antenna counts must be positive, got {self.nr_list}")
        if self.nt < 1:
            raise DomainError(f"nt must be positive, got {self.nt}")
        unknown = self.methods - set(METHODS)
        if unknown or not self.methods:
            raise DomainError(f"unknown or empty methods: {sorted(unknown)}; choose from {METHODS}")
        if self.samples < 1:
            raise DomainError("samples must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.format not in ("csv", "json"):
            raise DomainError(f"format must be csv or json, got {self.format!r}")
        snr_grid(*self.snr_db_grid)

    def snr_points(self) -> List[float]:
        return snr_grid(*self.snr_db_grid)

    def grid(self) -> List[Tuple[int, float]]:
        return [(n_r, snr) for n_r in sorted(set(self.nr_list)) for snr in self.snr_points()]


@dataclass
class SweepRow:
    snr_db: float
    p_linear: float
    n_r: int
    n_t: int
    zeta_s: Optional[float] = None
    beta: Optional[float] = None
    c_sup_nats: Optional[float] = None
    c_beta_pos_nats: Optional[float] = None
    c_asym_nats: Optional[float] = None
    c_coherent_nats: Optional[float] = None
    c_coherent_stderr: Optional[float] = None
    c_sengupta_nats: Optional[float] = None
    c_discrete_nats: Optional[float] = None
    kt_violation: Optional[float] = None
    constraint_residual_max: Optional[float] = None
    # per-method failures; not part of the flat-file schema
    errors: Dict[str, str] = field(default_factory=dict, compare=False)

    def value(self, column: str, units: str = "nats"):
        v = getattr(self, column)
        if v is not None and units == "bits" and column in CAPACITY_COLUMNS:
            v = v / LN2
        return v

    def as_dict(self, units: str = "nats") -> Dict[str, float]:
        """Present columns only, in schema order."""
        out = {}
        for c in COLUMNS:
            v = self.value(c, units)
            if v is not None:
                out[c] = v
        return out


# ---------------------------------------------------------------- verification

@dataclass(frozen=True)
class VerifyReport:
    n_r: int
    snr_db: float
    zeta: float
    residuals: Dict[str, float]

    @property
    def worst(self) -> float:
        return max(self.residuals.values())

    @property
    def ok(self) -> bool:
        return self.worst <= RESIDUAL_LIMIT


def random_inputs(count: int, p: float, seed: int, key: Sequence[int]) -> List[DiscreteInput]:
    """Reproducible random discrete inputs with up to 4 mass points."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))
    span = 3.0 * math.sqrt(p + 1.0)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, 5))
        x = np.unique(rng.uniform(0.0, span, size=n))
        out.append(DiscreteInput.normalized(x, rng.dirichlet(np.ones(x.size))))
    return out


def verify_point(n_r: int, snr_db: float, *, zeta_scale: float = 1.0, n_random: int = 5,
                 seed: int = 0) -> VerifyReport:
    """Residuals of the output-law constraints and entropy identities at one grid point.

    ``normalization`` and ``log_moment`` are absolute, ``power`` is relative
    to the target second moment.  ``bridge`` compares the entropy-difference
    capacity with the closed form; ``input_log_moment`` is the worst E[ln Y]
    identity residual over ``n_random`` random discrete inputs.
    """
    p = snr_to_linear(snr_db)
    zeta = capacity_supremum(n_r, p).zeta_or_alpha * zeta_scale
    dens = OptimalOutputDensity(zeta, n_r, p)
    norm, power, logm = dens.constraint_residuals(beta=0.0)
    bridge = abs(capacity_via_entropies(zeta, n_r, p) - capacity_of_zeta(zeta, n_r))
    key = (n_r, int(round(snr_db * 1000.0)) & 0xFFFFFFFF)
    moment = max((verify_log_output_moment(inp, n_r) for inp in random_inputs(n_random, p, seed, key)),
                 default=0.0)
    residuals = {
        "normalization": norm,
        "power": power / dens.power,
        "log_moment": logm,
        "bridge": bridge,
        "input_log_moment": moment,
    }
    return VerifyReport(n_r, snr_db, zeta, residuals)


# ---------------------------------------------------------------- evaluation

def _attempt(row: SweepRow, method: str, fn: Callable[[], None]) -> None:
    try:
        fn()
    except (NcRayleighError, ArithmeticError, ValueError) as exc:
        row.errors[method] = f"{type(exc).__name__}: {exc}"


def evaluate_row(n_r: int, snr_db: float, config: SweepConfig) -> SweepRow:
    p = snr_to_linear(snr_db)
    row = SweepRow(snr_db=snr_db, p_linear=p, n_r=n_r, n_t=config.nt)
    methods = config.methods

    if "sup" in methods:
        def sup():
            res = capacity_supremum(n_r, p)
            row.zeta_s, row.beta, row.c_sup_nats = res.zeta_or_alpha, res.beta, res.nats
        _attempt(row, "sup", sup)
    if "beta_pos" in methods:
        # no solution on this branch is an expected outcome, left as an empty cell
        def beta_pos():
            row.c_beta_pos_nats = capacity_beta_positive(n_r, p).nats
        _attempt(row, "beta_pos", beta_pos)
    if "asym" in methods:
        def asym():
            row.c_asym_nats = asymptotic_capacity(n_r, p)
        _attempt(row, "asym", asym)
    if "coherent" in methods:
        def coherent():
            est = coherent_capacity_mc(AntennaConfig(n_r, config.nt), p, config.samples, config.seed)
            row.c_coherent_nats, row.c_coherent_stderr = est.mean, est.stderr
        _attempt(row, "coherent", coherent)
    if "sengupta" in methods:
        def sengupta():
            row.c_sengupta_nats = sengupta_capacity(AntennaConfig(n_r, config.nt), p).nats
        _attempt(row, "sengupta", sengupta)
    if "discrete" in methods:
        def discrete():
            inp, res = optimize_discrete_input(n_r, p, OptimizerOptions(seed=config.seed))
            row.c_discrete_nats = res.nats
            row.kt_violation = kt_check(inp, n_r, p, res.nats).violation
        _attempt(row, "discrete", discrete)
    if "verify" in methods:
        def verify():
            row.constraint_residual_max = verify_point(n_r, snr_db, seed=config.seed).worst
        _attempt(row, "verify", verify)

    for method, msg in row.errors.items():
        log.info("n_r=%d snr_db=%g %s: %s", n_r, snr_db, method, msg)
    return row


def _evaluate_job(job):
    return evaluate_row(*job)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise DomainError(f"{WORKERS_ENV} must be positive, got {n}")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def run_sweep(config: SweepConfig, workers: Optional[int] = None) -> List[SweepRow]:
    """Evaluate every (n_r, snr) point; rows come back in grid order."""
    jobs = [(n_r, snr, config) for n_r, snr in config.grid()]
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise DomainError(f"workers must be positive, got {workers}")
    workers = min(workers, len(jobs))
    if workers == 1:
        return [_evaluate_job(job) for job in jobs]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(_evaluate_job, jobs))


# ---------------------------------------------------------------- emission

def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".8e")


def _open_for_write(path) -> TextIO:
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write output: {exc.strerror}", str(path)) from exc


def _write_text(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    fh = _open_for_write(path)
    try:
        with fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write output: {exc.strerror}", str(path)) from exc


def csv_text(rows: Sequence[SweepRow], units: str = "nats") -> str:
    lines = [",".join(COLUMNS)]
    for row in rows:
        lines.append(",".join(format_value(row.value(c, units)) for c in COLUMNS))
    return "\n".join(lines) + "\n"


def json_text(rows: Sequence[SweepRow], units: str = "nats") -> str:
    objs = [json.dumps(row.as_dict(units)) for row in rows]
    return "[\n" + ",\n".join(objs) + "\n]\n"


def _check_units(units: str) -> None:
    if units not in ("nats", "bits"):
        raise DomainError(f"units must be nats or bits, got {units!r}")


def emit_csv(rows: Sequence[SweepRow], path, units: str = "nats") -> None:
    """Fixed-schema CSV: every column always present, absent values empty."""
    if not rows:
        raise DomainError("no rows to emit")
    _check_units(units)
    _write_text(csv_text(rows, units), path)


def emit_json(rows: Sequence[SweepRow], path, units: str = "nats") -> None:
    """A JSON array with one object per row; absent values are omitted."""
    if not rows:
        raise DomainError("no rows to emit")
    _check_units(units)
    _write_text(json_text(rows, units), path)


def read_csv(path) -> List[SweepRow]:
    """Parse a file written by ``emit_csv`` (values in the units it was written in)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    header = lines[0].split(",")
    if tuple(header) != COLUMNS:
        raise DomainError(f"{path}: unexpected header {header}")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        kwargs = {}
        for name, cell in zip(COLUMNS, cells):
            if cell == "":
                continue
            kwargs[name] = int(cell) if name in ("n_r", "n_t") else float(cell)
        rows.append(SweepRow(**kwargs))
    return rows


# ---------------------------------------------------------------- plot scripts

FIGURES = {
    "fig4": {
        "required": ("c_sup_nats",),
        "optional": (),
        "title": "Capacity supremum versus SNR",
    },
    "fig6": {
        "required": ("c_sup_nats", "c_sengupta_nats"),
        "optional": ("c_asym_nats",),
        "title": "Capacity supremum and large-array reference",
    },
    "fig7": {
        "required": ("c_sup_nats", "c_beta_pos_nats", "c_discrete_nats"),
        "optional": (),
        "title": "Capacity supremum, beta > 0 branch and discrete input",
    },
}

_LABELS = {
    "c_sup_nats": "supremum",
    "c_beta_pos_nats": "beta > 0",
    "c_asym_nats": "asymptotic",
    "c_sengupta_nats": "large array",
    "c_discrete_nats": "discrete input",
    "c_coherent_nats": "coherent",
}

_STYLES = {
    "c_sup_nats": "-",
    "c_beta_pos_nats": "--",
    "c_asym_nats": ":",
    "c_sengupta_nats": "-.",
    "c_discrete_nats": "o-",
}

_PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""{title}.

Generated from a capacity sweep; data are inlined below.  Run with
matplotlib installed to write {png}.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

UNITS = {units!r}
# (label, linestyle, n_r, snr_db values, capacities)
CURVES = [
{curves}
]

fig, ax = plt.subplots(figsize=(6.4, 4.8))
for label, style, n_r, snr, cap in CURVES:
    ax.plot(snr, cap, style, label=f"{{label}}, n_r={{n_r}}", markersize=3)
ax.set_xlabel("SNR (dB)")
ax.set_ylabel(f"capacity ({{UNITS}})")
ax.set_title({title!r})
ax.grid(True, alpha=0.3)
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''


def figure_curves(rows: Sequence[SweepRow], figure: str, units: str = "nats"):
    """(label, style, n_r, snr list, value list) for every curve of a figure."""
    if figure not in FIGURES:
        raise DomainError(f"unknown figure {figure!r}; choose from {sorted(FIGURES)}")
    spec = FIGURES[figure]
    for col in spec["required"]:
        if not any(getattr(r, col) is not None for r in rows):
            raise MissingColumn(f"{figure} needs column {col!r}; sweep was run without that method")
    columns = list(spec["required"]) + [c for c in spec["optional"] if any(getattr(r, c) is not None for r in rows)]
    curves = []
    for col in columns:
        for n_r in sorted({r.n_r for r in rows}):
            pts = [(r.snr_db, r.value(col, units)) for r in rows if r.n_r == n_r and getattr(r, col) is not None]
            pts.sort()
            if pts:
                curves.append((_LABELS[col], _STYLES[col], n_r, [s for s, _ in pts], [v for _, v in pts]))
    return curves


def plot_script_text(rows: Sequence[SweepRow], figure: str, png: str, units: str = "nats") -> str:
    _check_units(units)
    curves = figure_curves(rows, figure, units)
    body = ",\n".join(
        "    ({!r}, {!r}, {}, [{}], [{}])".format(
            label, style, n_r, ", ".join(repr(float(s)) for s in snr), ", ".join(repr(float(v)) for v in cap)
        )
        for label, style, n_r, snr, cap in curves
    )
    return _PLOT_TEMPLATE.format(title=FIGURES[figure]["title"], png=png, units=units, curves=body)


def emit_plot_script(rows: Sequence[SweepRow], path, figure: str, units: str = "nats") -> None:
    """Write a standalone matplotlib script with the sweep data inlined."""
    if not rows:
        raise DomainError("no rows to plot")
    png = Path(str(path)).with_suffix(".png").name if path not in (None, "-") else f"{figure}.png"
    _write_text(plot_script_text(rows, figure, png, units), path)


def figure_methods(figure: str) -> FrozenSet[str]:
    """Sweep methods that populate a figure's columns."""
    cols = set(FIGURES[figure]["required"]) | set(FIGURES[figure]["optional"])
    return frozenset(m for m, mc in METHOD_COLUMNS.items() if cols & set(mc))
