"""Self-check suites: structural facts the solvers are supposed to guarantee.

Each suite re-derives a property from scratch and reports a signed margin
(positive = pass, with room to spare), so a regression shows up as a negative
margin rather than a silent drift.  The `verify` CLI subcommand is a thin
wrapper over `run_suite`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec, Quantizer
from .optimize import GridConfig, optimize_input_cutting_plane
from .special import convexity_witness, hq_of_sqrt, second_derivative_scan
from .tables import table_i_mutual_information, table_i_upper_bound

# Reference stationary point of the 4-bin channel at 5 dB, used as a spot
# check that the optimizer lands where the duality certificate says it must.
_KKT_SNR_DB = 5.0
_KKT_SUPPORT = (-2.86, -0.52, 0.52, 2.86)
_KKT_GAMMA = 0.1530

_SANDWICH_DB = (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0)

_CARDINALITY_CASES = tuple(
    (bins, db)
    for bins in (2, 4)
    for db in (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
)
_FAST_GRID = GridConfig(10.0, 501)


@dataclass(frozen=True)
class CheckResult:
    """One verified property: signed margin > 0 means pass with room."""

    name: str
    passed: bool
    margin: float
    detail: str = ""


def convexity_checks(cache=None) -> list[CheckResult]:
    """Convexity of the binary entropy of the Gaussian tail, h(Q(sqrt(y))).

    A central-difference scan covers (0, 2]; past 2 the closed-form witness
    expression being positive certifies the second derivative's sign.
    """
    out = []

    grid = np.linspace(0.002, 2.0, 500)
    scan = second_derivative_scan(hq_of_sqrt, grid)
    margin = float(np.min(scan))
    at = float(grid[int(np.argmin(scan))])
    out.append(
        CheckResult(
            name="second difference positive on (0, 2]",
            passed=margin > 0.0,
            margin=margin,
            detail=f"min {margin:.6g} at y={at:.4f}",
        )
    )

    w2 = float(convexity_witness(2.0))
    dev = abs(w2 - 1.133)
    out.append(
        CheckResult(
            name="witness value at y=2",
            passed=dev <= 5e-3,
            margin=5e-3 - dev,
            detail=f"witness(2) = {w2:.6f}, expected 1.133 +/- 0.005",
        )
    )

    tail = np.linspace(2.0, 60.0, 300)
    wmin = float(np.min(convexity_witness(tail)))
    out.append(
        CheckResult(
            name="witness positive on [2, 60]",
            passed=wmin > 0.0,
            margin=wmin,
            detail=f"min witness {wmin:.6g}",
        )
    )
    return out


def kkt_checks(cache=None) -> list[CheckResult]:
    """Optimality conditions at the 4-bin, 5 dB spot check."""
    result = table_i_mutual_information(_KKT_SNR_DB, cache)
    out = []

    support = np.sort(np.asarray(result.dist.locations))
    expected = np.asarray(_KKT_SUPPORT)
    if support.size == expected.size:
        err = float(np.max(np.abs(support - expected)))
        detail = "support " + ", ".join(f"{x:.4f}" for x in support)
    else:
        err = float("inf")
        detail = f"support has {support.size} points, expected {expected.size}"
    out.append(
        CheckResult(
            name="support matches reference points",
            passed=err <= 0.05,
            margin=0.05 - err,
            detail=detail,
        )
    )

    gdev = abs(result.gamma - _KKT_GAMMA)
    out.append(
        CheckResult(
            name="power multiplier near reference",
            passed=gdev <= 0.02,
            margin=0.02 - gdev,
            detail=f"gamma = {result.gamma:.6f}, expected {_KKT_GAMMA} +/- 0.02",
        )
    )

    viol = result.kkt_max_violation
    out.append(
        CheckResult(
            name="stationarity residual small",
            passed=viol <= 5e-3,
            margin=5e-3 - viol,
            detail=f"max residual {viol:.3e}",
        )
    )
    return out


def sandwich_checks(cache=None) -> list[CheckResult]:
    """Duality bound dominates the achieved rate at every probed SNR."""
    out = []
    for db in _SANDWICH_DB:
        mi = table_i_mutual_information(db, cache).capacity
        ub = table_i_upper_bound(db, cache)
        gap = ub - mi
        out.append(
            CheckResult(
                name=f"bound >= rate at {db:g} dB",
                passed=gap >= -1e-9,
                margin=gap,
                detail=f"rate {mi:.6f}, bound {ub:.6f}",
            )
        )
    return out


def cardinality_checks(cache=None) -> list[CheckResult]:
    """Optimal support needs at most one more point than output levels."""
    out = []
    for bins, db in _CARDINALITY_CASES:
        if bins == 2:
            quant = Quantizer((0.0,))
        else:
            quant = Quantizer((-2.0, 0.0, 2.0))
        spec = ChannelSpec.from_snr_db(db, quant)
        result = optimize_input_cutting_plane(spec, grid=_FAST_GRID)
        size = int(np.asarray(result.dist.locations).size)
        out.append(
            CheckResult(
                name=f"support size at K={bins}, {db:g} dB",
                passed=size <= bins + 1,
                margin=float(bins + 1 - size),
                detail=f"{size} points for {bins} output levels",
            )
        )
    return out


SUITES = {
    "convexity": convexity_checks,
    "kkt": kkt_checks,
    "sandwich": sandwich_checks,
    "cardinality": cardinality_checks,
}


def run_suite(name: str, cache=None) -> list[CheckResult]:
    """Run one named suite, or all of them in a fixed order."""
    if name == "all":
        out = []
        for suite in SUITES.values():
            out.extend(suite(cache))
        return out
    try:
        suite = SUITES[name]
    except KeyError:
        raise ValueError(
            f"unknown suite {name!r}; expected one of {sorted(SUITES) + ['all']}"
        ) from None
    return suite(cache)


def all_passed(records) -> bool:
    return all(r.passed for r in records)
