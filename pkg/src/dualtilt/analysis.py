"""Steady-state post-processing: cosine fits, propeller-pair tables, run diffs."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .actuation import N_PROPELLERS
from .errors import GridMismatch, IllConditioned, InsufficientData

FIT_RATE = 0.8
MAX_CONDITION = 1e12

# (label, first actuator-state column, display scale, unit)
VARIABLES = (
    ("alpha", 0, 180.0 / np.pi, "deg"),
    ("beta", N_PROPELLERS, 180.0 / np.pi, "deg"),
    ("omega", 2 * N_PROPELLERS, 1.0, "rad/s"),
)
PAIRS = tuple((i, i + 3) for i in range(3))


@dataclass(frozen=True)
class CosineFit:
    """x(t) ~ amplitude * cos(frequency * t + phase) + offset.

    The amplitude is signed: the phase is folded into (-pi/2, pi/2], so two
    signals in antiphase get amplitudes of opposite sign.
    """

    amplitude: float
    offset: float
    phase: float
    frequency: float
    residual_rms: float


def cosine_fit(t, x, omega_fit=FIT_RATE):
    """Least-squares fit of x on {cos(w t), sin(w t), 1} with w fixed."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.shape != x.shape or t.ndim != 1:
        raise ValueError("t and x must be 1-D arrays of equal length")
    if len(t) < 3:
        raise InsufficientData(f"need at least 3 samples, got {len(t)}")
    if omega_fit <= 0:
        raise ValueError("fit frequency must be positive")
    period = 2 * np.pi / omega_fit
    if t.max() - t.min() < period * (1 - 1e-9):
        raise InsufficientData(
            f"samples span {t.max() - t.min():.4g} s, less than one period ({period:.4g} s)")

    X = np.column_stack([np.cos(omega_fit * t), np.sin(omega_fit * t), np.ones_like(t)])
    cond = np.linalg.cond(X.T @ X)
    if not cond < MAX_CONDITION:
        raise IllConditioned(f"normal matrix condition number {cond:.3g} exceeds {MAX_CONDITION:g}")
    (a, b, c), *_ = np.linalg.lstsq(X, x, rcond=None)
    residual = x - X @ np.array([a, b, c])

    # a cos + b sin = R cos(w t + phi) with phi = atan2(-b, a)
    amplitude, phase = float(np.hypot(a, b)), float(np.arctan2(-b, a))
    if not -np.pi / 2 < phase <= np.pi / 2:
        amplitude = -amplitude
        phase = phase - np.pi if phase > 0 else phase + np.pi
    return CosineFit(amplitude, float(c), phase, float(omega_fit),
                     float(np.sqrt(np.mean(residual**2))))


@dataclass(frozen=True)
class PairRow:
    """Fits of one variable for an opposite-propeller pair (i, i+3), 1-based."""

    variable: str
    pair: tuple
    unit: str
    fits: dict          # run name -> (CosineFit, CosineFit) in display units


@dataclass
class TableReport:
    runs: list
    rows: list
    window_start: float
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {(r.variable, r.pair): r for r in self.rows}

    def fits(self, run, variable):
        """Six fits of ``variable`` for ``run``, ordered by propeller index."""
        out = [None] * N_PROPELLERS
        for k, (i, j) in enumerate(PAIRS):
            a, b = self._index[(variable, (i + 1, j + 1))].fits[run]
            out[i], out[j] = a, b
        return out

    def amplitudes(self, run, variable):
        return np.array([f.amplitude for f in self.fits(run, variable)])

    def offsets(self, run, variable):
        return np.array([f.offset for f in self.fits(run, variable)])

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["run", "variable", "i", "j", "unit",
                         "amplitude_i", "amplitude_j", "offset_i", "offset_j"])
        for run in self.runs:
            for row in self.rows:
                a, b = row.fits[run]
                writer.writerow([run, row.variable, *row.pair, row.unit,
                                 repr(a.amplitude), repr(b.amplitude),
                                 repr(a.offset), repr(b.offset)])
        return buf.getvalue()

    def to_text(self, digits=4):
        """Aligned text with one column per run: amplitude pair over offset pair."""
        def pair(u, v):
            return f"[{u:.{digits}f}, {v:.{digits}f}]"

        header = ["pair"] + list(self.runs)
        lines = []
        for row in self.rows:
            label = f"[{row.variable}{row.pair[0]}, {row.variable}{row.pair[1]}] {row.unit}"
            amp = [pair(*(f.amplitude for f in row.fits[r])) for r in self.runs]
            off = [pair(*(f.offset for f in row.fits[r])) for r in self.runs]
            lines.append([label] + amp)
            lines.append(["  offset"] + off)
        widths = [max(len(line[c]) for line in [header] + lines) for c in range(len(header))]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        out = [f"steady-state window t >= {self.window_start:g} s (amplitude, then offset)",
               fmt.format(*header)]
        out += [fmt.format(*line) for line in lines]
        return "\n".join(out) + "\n"


def table_report(records, window_start=10.0, omega_fit=FIT_RATE, tilt_midpoint=None):
    """Fit every alpha, beta and omega series of each record on t >= window_start.

    Tilt amplitudes and offsets are reported in degrees, with offsets taken
    relative to ``tilt_midpoint`` (12 values in rad, default zero); spin
    rates in rad/s. Run names must be unique.
    """
    records = list(records)
    names = [r.name for r in records]
    if len(set(names)) != len(names):
        raise ValueError(f"run names must be unique, got {names}")
    mid = np.zeros(3 * N_PROPELLERS)
    if tilt_midpoint is not None:
        mid[:2 * N_PROPELLERS] = np.asarray(tilt_midpoint, dtype=float)

    fitted = {}
    for rec in records:
        if len(rec.t) == 0 or rec.t[-1] <= window_start:
            raise InsufficientData(f"run '{rec.name}' ends before t = {window_start:g} s")
        mask = rec.t >= window_start
        for label, first, scale, _ in VARIABLES:
            for i in range(N_PROPELLERS):
                col = first + i
                series = (rec.actuators[mask, col] - mid[col]) * scale
                fitted[(rec.name, label, i)] = cosine_fit(rec.t[mask], series, omega_fit)

    rows = []
    for label, _, _, unit in VARIABLES:
        for i, j in PAIRS:
            fits = {n: (fitted[(n, label, i)], fitted[(n, label, j)]) for n in names}
            rows.append(PairRow(label, (i + 1, j + 1), unit, fits))
    return TableReport(names, rows, window_start)


def objective_series(record):
    """(t, J) per grid point."""
    return np.asarray(record.t).copy(), np.asarray(record.objective).copy()


def window_mean(t, values, start, stop=None):
    t = np.asarray(t)
    mask = t >= start
    if stop is not None:
        mask &= t <= stop
    if not mask.any():
        raise InsufficientData(f"no samples in [{start}, {stop}]")
    return float(np.mean(np.asarray(values)[mask]))


@dataclass
class ComparisonReport:
    """Column-wise differences between two runs on the same grid."""

    max_abs: dict
    rms: dict
    wrench_step_max: np.ndarray     # max over the 6 wrench components, per step

    @property
    def wrench_max(self):
        return float(self.wrench_step_max.max()) if len(self.wrench_step_max) else 0.0

    def to_text(self):
        width = max(len(c) for c in self.max_abs)
        lines = [f"wrench max |difference|: {self.wrench_max:.6e}",
                 f"{'column':<{width}}  {'max_abs':>14}  {'rms':>14}"]
        for col in self.max_abs:
            lines.append(f"{col:<{width}}  {self.max_abs[col]:14.6e}  {self.rms[col]:14.6e}")
        return "\n".join(lines) + "\n"


def compare_runs(a, b, grid_tol=1e-9):
    """Per-column max-abs and RMS differences of two records.

    Columns that are NaN in both records (not stored in CSV) are skipped.
    """
    from .records import record_columns

    if len(a.t) != len(b.t) or not np.allclose(a.t, b.t, rtol=0.0, atol=grid_tol):
        raise GridMismatch(f"time grids differ ({len(a.t)} vs {len(b.t)} samples)")
    cols_a, cols_b = record_columns(a), record_columns(b)
    max_abs, rms = {}, {}
    for name, va in cols_a.items():
        if name == "t":
            continue
        va = np.asarray(va, dtype=float)
        vb = np.asarray(cols_b[name], dtype=float)
        if np.all(np.isnan(va)) and np.all(np.isnan(vb)):
            continue
        d = np.abs(va - vb)
        max_abs[name] = float(d.max()) if len(d) else 0.0
        rms[name] = float(np.sqrt(np.mean(d**2))) if len(d) else 0.0
    step = np.abs(np.asarray(a.u_v) - np.asarray(b.u_v)).max(axis=1) if len(a.t) else np.zeros(0)
    return ComparisonReport(max_abs, rms, step)
