"""Aggregation of per-sequence profiles into reports, tables, and figures.

A stream of sequences yields one ``PsiProfile`` each; this module turns
those into summary statistics, a combined chi-square per window size
(degrees of freedom scale with the number of sequences), the share of
individually significant sequences, and a trimming ladder that re-tests
the combined statistic after removing the largest contributors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from marketrng.chi2 import ChiSquareAssessment, assess, chi2_critical
from marketrng.serial import PsiProfile

DEFAULT_TRIM_FRACTIONS = (0.01, 0.02, 0.03, 0.04, 0.05)


class TrimResult(NamedTuple):
    statistic: float
    dof: int
    dropped: int
    assessment: ChiSquareAssessment
    dropped_ids: tuple[str, ...]


@dataclass(frozen=True)
class TrimStep:
    fraction: float
    dropped: int
    statistic: float
    dof: int
    p_value: float
    critical_value: float
    significant: bool

    def to_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "dropped": self.dropped,
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "critical_value": self.critical_value,
            "significant": self.significant,
        }


@dataclass
class StreamReport:
    """Aggregated statistics of one firm- or year-separated experiment."""

    kind: str
    alpha: float
    sequence_ids: list[str]
    nus: list[int]
    d2_nus: list[int]
    psi_summary: dict[int, dict[str, float]]
    d2_summary: dict[int, dict[str, float]]
    per_sequence_d2: np.ndarray
    combined: dict[int, ChiSquareAssessment]
    significant_fraction: dict[int, float]
    trim_fractions: tuple[float, ...]
    trim_mode: str
    trim_ladder: dict[int, list[TrimStep]]
    extras: dict = field(default_factory=dict)

    @property
    def n_sequences(self) -> int:
        return len(self.sequence_ids)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "n_sequences": self.n_sequences,
            "sequence_ids": list(self.sequence_ids),
            "nus": list(self.nus),
            "d2_nus": list(self.d2_nus),
            "psi_summary": {str(nu): dict(v) for nu, v in self.psi_summary.items()},
            "d2_summary": {str(nu): dict(v) for nu, v in self.d2_summary.items()},
            "per_sequence_d2": self.per_sequence_d2.tolist(),
            "combined": {str(nu): a.to_dict() for nu, a in self.combined.items()},
            "significant_fraction": {
                str(nu): f for nu, f in self.significant_fraction.items()
            },
            "trim_fractions": list(self.trim_fractions),
            "trim_mode": self.trim_mode,
            "trim_ladder": {
                str(nu): [step.to_dict() for step in steps]
                for nu, steps in self.trim_ladder.items()
            },
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StreamReport":
        return cls(
            kind=data["kind"],
            alpha=data["alpha"],
            sequence_ids=list(data["sequence_ids"]),
            nus=[int(nu) for nu in data["nus"]],
            d2_nus=[int(nu) for nu in data["d2_nus"]],
            psi_summary={int(nu): dict(v) for nu, v in data["psi_summary"].items()},
            d2_summary={int(nu): dict(v) for nu, v in data["d2_summary"].items()},
            per_sequence_d2=np.array(data["per_sequence_d2"], dtype=float),
            combined={
                int(nu): ChiSquareAssessment(**v) for nu, v in data["combined"].items()
            },
            significant_fraction={
                int(nu): float(f) for nu, f in data["significant_fraction"].items()
            },
            trim_fractions=tuple(data["trim_fractions"]),
            trim_mode=data["trim_mode"],
            trim_ladder={
                int(nu): [TrimStep(**step) for step in steps]
                for nu, steps in data["trim_ladder"].items()
            },
            extras=dict(data.get("extras", {})),
        )


def trim_top_contributors(
    values,
    trim_fraction: float,
    xi: int,
    alpha: float = 0.05,
    ids: Sequence[str] | None = None,
) -> TrimResult:
    """Drop the floor(p*|A|) largest values and re-assess the sum.

    Ties at the cut are broken by ascending sequence id.  Degrees of
    freedom shrink to (|A| - dropped) * xi.
    """
    if not 0.0 <= trim_fraction < 1.0:
        raise ValueError(f"trim fraction must lie in [0, 1), got {trim_fraction}")
    arr = np.asarray(values, dtype=float)
    n = arr.size
    if n == 0:
        raise ValueError("no values to trim")
    id_arr = np.array([str(i) for i in ids] if ids is not None else np.arange(n).astype(str))
    if id_arr.size != n:
        raise ValueError("ids must match values in length")
    k = int(np.floor(trim_fraction * n))
    # lexsort: primary key last -> values descending, ties by id ascending
    order = np.lexsort((id_arr, -arr))
    keep = order[k:]
    statistic = float(arr[keep].sum())
    dof = (n - k) * int(xi)
    return TrimResult(
        statistic=statistic,
        dof=dof,
        dropped=k,
        assessment=assess(statistic, dof, alpha),
        dropped_ids=tuple(id_arr[order[:k]].tolist()),
    )


def summarize_stream(
    profiles: Sequence[PsiProfile],
    alpha: float = 0.05,
    trim_fractions: Sequence[float] = DEFAULT_TRIM_FRACTIONS,
    sequence_ids: Sequence[str] | None = None,
    kind: str = "firm_separated",
    trim_mode: str = "per_nu",
) -> StreamReport:
    """Summaries, combined chi-square, significance shares, and trim ladder.

    The combined statistic for window size nu sums the second differences
    over all sequences and is assessed at |A| * 2**(nu-2) degrees of
    freedom.  ``trim_mode="per_nu"`` ranks contributors independently per
    window size; ``"joint"`` drops the same sequences everywhere, ranked
    by their total contribution across window sizes.
    """
    if not profiles:
        raise ValueError("need at least one profile")
    max_nu = profiles[0].max_nu
    if any(p.max_nu != max_nu for p in profiles):
        raise ValueError("profiles must share max_nu")
    if max_nu < 3:
        raise ValueError("profiles must reach at least nu = 3")
    if trim_mode not in ("per_nu", "joint"):
        raise ValueError(f"unknown trim_mode {trim_mode!r}")
    n = len(profiles)
    ids = [str(i) for i in sequence_ids] if sequence_ids is not None else [
        str(i) for i in range(n)
    ]
    if len(ids) != n:
        raise ValueError("sequence_ids must match profiles in length")

    nus = list(range(1, max_nu + 1))
    d2_nus = list(range(3, max_nu + 1))
    psi_matrix = np.array([[p.psi[nu] for nu in nus] for p in profiles])
    d2_matrix = np.array([[p.d2[nu] for nu in d2_nus] for p in profiles])

    def _summary(matrix: np.ndarray, labels: list[int]) -> dict[int, dict[str, float]]:
        return {
            nu: {
                "mean": float(matrix[:, j].mean()),
                "sd": float(matrix[:, j].std(ddof=0)),
                "max": float(matrix[:, j].max()),
            }
            for j, nu in enumerate(labels)
        }

    combined: dict[int, ChiSquareAssessment] = {}
    significant_fraction: dict[int, float] = {}
    ladder: dict[int, list[TrimStep]] = {}

    joint_order_ids: tuple[str, ...] | None = None
    if trim_mode == "joint":
        totals = d2_matrix.sum(axis=1)
        order = np.lexsort((np.array(ids), -totals))
        joint_order_ids = tuple(np.array(ids)[order].tolist())

    for j, nu in enumerate(d2_nus):
        xi = 2 ** (nu - 2)
        column = d2_matrix[:, j]
        combined[nu] = assess(float(column.sum()), n * xi, alpha)
        crit = chi2_critical(alpha, xi)
        significant_fraction[nu] = float((column > crit).mean())
        steps = []
        for p in trim_fractions:
            if trim_mode == "per_nu":
                result = trim_top_contributors(column, p, xi, alpha, ids)
            else:
                k = int(np.floor(p * n))
                drop = set(joint_order_ids[:k])
                keep_mask = np.array([i not in drop for i in ids])
                stat = float(column[keep_mask].sum())
                dof = (n - k) * xi
                result = TrimResult(stat, dof, k, assess(stat, dof, alpha), tuple(sorted(drop)))
            steps.append(
                TrimStep(
                    fraction=float(p),
                    dropped=result.dropped,
                    statistic=result.statistic,
                    dof=result.dof,
                    p_value=result.assessment.p_value,
                    critical_value=result.assessment.critical_value,
                    significant=result.assessment.significant,
                )
            )
        ladder[nu] = steps

    return StreamReport(
        kind=kind,
        alpha=float(alpha),
        sequence_ids=ids,
        nus=nus,
        d2_nus=d2_nus,
        psi_summary=_summary(psi_matrix, nus),
        d2_summary=_summary(d2_matrix, d2_nus),
        per_sequence_d2=d2_matrix,
        combined=combined,
        significant_fraction=significant_fraction,
        trim_fractions=tuple(float(p) for p in trim_fractions),
        trim_mode=trim_mode,
        trim_ladder=ladder,
    )


@dataclass(frozen=True)
class RecurrenceMatrix:
    """Pairwise absolute differences of a scalar trajectory."""

    values: np.ndarray
    axis_label: str = "returns"

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("recurrence matrix must be square")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def recurrence_matrix(series, axis_label: str = "returns") -> RecurrenceMatrix:
    """Distance matrix values[n, m] = |v_n - v_m|."""
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("need a one-dimensional series of length >= 2")
    return RecurrenceMatrix(
        values=np.abs(arr[:, None] - arr[None, :]), axis_label=axis_label
    )


def kde_curve(samples, grid, length: float | None = None) -> np.ndarray:
    """Gaussian kernel density with Silverman bandwidth on a fixed grid.

    Samples are centred on their mean and, when ``length`` is given,
    divided by it first (so that sums from arrays of different sizes stay
    comparable on one axis).  Bandwidth is
    0.9 * min(sd, IQR / 1.34) * n**(-1/5), falling back to the standard
    deviation when the interquartile range collapses to zero.
    """
    samples = np.asarray(samples, dtype=float)
    grid = np.asarray(grid, dtype=float)
    n = samples.size
    if n < 2:
        raise ValueError("need at least two samples")
    x = samples / float(length) if length else samples.astype(float)
    x = x - x.mean()
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise ValueError("samples have zero spread")
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr_scale = (q75 - q25) / 1.34
    width = min(sd, iqr_scale) if iqr_scale > 0.0 else sd
    h = 0.9 * width * n ** (-0.2)
    z = (grid[:, None] - x[None, :]) / h
    return np.exp(-0.5 * z**2).mean(axis=1) / (h * np.sqrt(2.0 * np.pi))


def default_kde_grid(samples, points: int = 512, span: float = 4.0, length: float | None = None) -> np.ndarray:
    """Evenly spaced grid over mean +- span * sd in transformed units."""
    x = np.asarray(samples, dtype=float)
    if length:
        x = x / float(length)
    x = x - x.mean()
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise ValueError("samples have zero spread")
    return np.linspace(-span * sd, span * sd, points)


def _fmt(nu: int, value: float) -> str:
    # Window size 1 values are near machine zero for balanced inputs and
    # only readable in scientific notation; everything else gets 2 dp.
    return f"{value:.2e}" if nu == 1 else f"{value:.2f}"


def _null_mark(value: float, nu: int, alpha: float) -> str:
    # '*' plays the role of the bold convention: it marks results that do
    # NOT discard the null hypothesis of uniform randomness.
    return "*" if value <= chi2_critical(alpha, 2 ** (nu - 2)) else ""


def emit_tables(report: StreamReport, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Write the summary, second-difference, and trim-ladder tables.

    CSV tables carry a ``mark_<nu>`` column holding ``*`` wherever the
    value fails significance at the report's alpha (the null of uniform
    randomness is retained).  Markdown tables show the same values with
    one label column plus one column per window size.
    """
    if fmt not in ("csv", "markdown"):
        raise ValueError(f"unknown table format {fmt!r}")
    out = Path(out_dir) / "tables"
    out.mkdir(parents=True, exist_ok=True)
    ext = "csv" if fmt == "csv" else "md"
    paths = []

    psi_rows = [
        (label, [report.psi_summary[nu][key] for nu in report.nus])
        for label, key in (("mean", "mean"), ("sd", "sd"), ("max", "max"))
    ]
    paths.append(
        _write_table(
            out / f"psi_summary.{ext}",
            fmt,
            ["statistic"] + [f"nu_{nu}" for nu in report.nus],
            [(label, [_fmt(nu, v) for nu, v in zip(report.nus, values)]) for label, values in psi_rows],
        )
    )

    d2_rows: list[tuple[str, list[str]]] = []
    for label, key in (("mean", "mean"), ("sd", "sd"), ("max", "max")):
        d2_rows.append((label, [f"{report.d2_summary[nu][key]:.2f}" for nu in report.d2_nus]))
    d2_rows.append(
        (
            "combined_chi2",
            [
                f"{report.combined[nu].statistic:.2f}"
                + ("" if report.combined[nu].significant else "*" if fmt == "csv" else "")
                for nu in report.d2_nus
            ],
        )
    )
    d2_rows.append(("combined_dof", [str(report.combined[nu].dof) for nu in report.d2_nus]))
    d2_rows.append(
        ("significant_fraction", [f"{report.significant_fraction[nu]:.2f}" for nu in report.d2_nus])
    )
    if report.kind == "year_separated":
        for i, seq_id in enumerate(report.sequence_ids):
            values = report.per_sequence_d2[i]
            d2_rows.append(
                (
                    seq_id,
                    [
                        f"{v:.2f}" + (_null_mark(v, nu, report.alpha) if fmt == "csv" else "")
                        for nu, v in zip(report.d2_nus, values)
                    ],
                )
            )
    paths.append(
        _write_table(
            out / f"d2_summary.{ext}",
            fmt,
            ["statistic"] + [f"nu_{nu}" for nu in report.d2_nus],
            d2_rows,
        )
    )

    ladder_rows = []
    for step_idx, p in enumerate(report.trim_fractions):
        cells = []
        dropped = None
        for nu in report.d2_nus:
            step = report.trim_ladder[nu][step_idx]
            dropped = step.dropped
            cells.append(f"{step.statistic:.2f}" + ("" if step.significant else "*" if fmt == "csv" else ""))
        ladder_rows.append((f"trim_{p:.2f}_drop_{dropped}", cells))
    paths.append(
        _write_table(
            out / f"trim_ladder.{ext}",
            fmt,
            ["trim"] + [f"nu_{nu}" for nu in report.d2_nus],
            ladder_rows,
        )
    )
    return paths


def _write_table(
    path: Path, fmt: str, header: list[str], rows: list[tuple[str, list[str]]]
) -> Path:
    lines = []
    if fmt == "csv":
        lines.append(",".join(header))
        for label, cells in rows:
            lines.append(",".join([label] + list(cells)))
    else:
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        for label, cells in rows:
            lines.append("| " + " | ".join([label] + list(cells)) + " |")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_report_json(
    report: StreamReport, path: str | Path, config: dict | None = None
) -> Path:
    """Serialize the full report (plus the run configuration) to JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"report": report.to_dict()}
    if config is not None:
        payload["config"] = config
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path


def read_report_json(path: str | Path) -> tuple[StreamReport, dict | None]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return StreamReport.from_dict(payload["report"]), payload.get("config")


def write_recurrence(matrix: RecurrenceMatrix, base_path: str | Path) -> list[Path]:
    """Dump a recurrence matrix as CSV and as an 8-bit binary graymap."""
    base = Path(base_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.with_suffix(".csv")
    lines = [",".join(f"{v:.6g}" for v in row) for row in matrix.values]
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    pgm_path = base.with_suffix(".pgm")
    peak = float(matrix.values.max())
    scaled = (
        np.zeros_like(matrix.values, dtype=np.uint8)
        if peak == 0.0
        else np.round(matrix.values * (255.0 / peak)).astype(np.uint8)
    )
    n = scaled.shape[0]
    with pgm_path.open("wb") as handle:
        handle.write(f"P5\n{n} {n}\n255\n".encode("ascii"))
        handle.write(scaled.tobytes())
    return [csv_path, pgm_path]


def write_kde(grid, density, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["x,density"] + [f"{x:.8g},{d:.8g}" for x, d in zip(grid, density)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
