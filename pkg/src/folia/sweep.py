"""Parallel classification sweep over a grid of direction slopes.

The driver fans independent classify jobs out to a process pool and
gathers results in input order, so the emitted report is a pure function
of the grid and the depth: worker count changes wall time, never bytes.
Timing is kept out of the result's document for the same reason.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from multiprocessing import Pool

from .disco import two_branch_family
from .rauzy import ClassificationReport, classify

# JSON report keys per outcome; also the exhaustive list of outcomes.
OUTCOME_KEYS = {
    "morse-smale": "morseSmale",
    "saddle-connection": "saddleConnection",
    "undetermined": "undetermined",
}


def parse_grid(text: str) -> tuple[Fraction, Fraction, int]:
    """Parse "a/b:c/d:n" into (lo, hi, n); raises ValueError when malformed."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected a/b:c/d:n, got {text!r}")
    try:
        lo, hi = Fraction(parts[0]), Fraction(parts[1])
        count = int(parts[2])
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"expected a/b:c/d:n, got {text!r}: {exc}") from None
    if count < 1:
        raise ValueError(f"grid needs at least one step, got n={count}")
    if lo >= hi:
        raise ValueError(f"grid endpoints must increase, got {lo} >= {hi}")
    return lo, hi, count


def grid_slopes(lo: Fraction, hi: Fraction, count: int) -> tuple[Fraction, ...]:
    """count + 1 evenly spaced slopes from lo to hi inclusive.

    Fraction keeps every slope in lowest terms, so the grid is exactly
    the rational points lo + k*(hi - lo)/count.
    """
    step = (Fraction(hi) - Fraction(lo)) / count
    return tuple(Fraction(lo) + k * step for k in range(count + 1))


def classify_slope(job: tuple[Fraction, int]) -> ClassificationReport:
    """One sweep job; module-level so process pools can ship it."""
    slope, depth = job
    return classify(two_branch_family(slope), depth)


@dataclass(frozen=True)
class SweepResult:
    grid: tuple[Fraction, Fraction, int]
    depth: int
    slopes: tuple[Fraction, ...]
    reports: tuple[ClassificationReport, ...]
    elapsed: float

    @property
    def counts(self) -> dict[str, int]:
        out = {key: 0 for key in OUTCOME_KEYS.values()}
        for report in self.reports:
            out[OUTCOME_KEYS[report.outcome]] += 1
        return out


def sweep_disco(
    lo: Fraction, hi: Fraction, count: int, depth: int, jobs: int = 1
) -> SweepResult:
    slopes = grid_slopes(lo, hi, count)
    work = [(s, depth) for s in slopes]
    started = time.monotonic()
    if jobs <= 1:
        reports = [classify_slope(job) for job in work]
    else:
        # chunked map keeps per-task IPC overhead bounded on big grids
        with Pool(processes=jobs) as pool:
            reports = pool.map(
                classify_slope, work, chunksize=max(1, len(work) // (4 * jobs))
            )
    elapsed = time.monotonic() - started
    return SweepResult(
        grid=(Fraction(lo), Fraction(hi), count),
        depth=depth,
        slopes=slopes,
        reports=tuple(reports),
        elapsed=elapsed,
    )


def sweep_to_doc(result: SweepResult) -> dict:
    """Wire form of a sweep; elapsed time deliberately excluded so equal
    sweeps emit equal bytes."""
    from .io_json import classification_to_doc
    from .rational import format_rat

    lo, hi, count = result.grid
    return {
        "grid": {"from": format_rat(lo), "to": format_rat(hi), "count": count},
        "depth": result.depth,
        "counts": result.counts,
        "results": [
            {"slope": format_rat(slope), "report": classification_to_doc(report)}
            for slope, report in zip(result.slopes, result.reports)
        ],
    }
