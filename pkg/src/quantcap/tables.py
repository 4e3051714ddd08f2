"""Builders for the five benchmark comparison tables and capacity curves.

Every builder computes its cells from scratch (reference values are attached
for deviation reporting only) and accepts a shared cache dict so that
overlapping tables — the cross-precision grid, the efficiency inversions,
and the SNR ladders behind them — reuse each other's optimizer runs.
"""

from __future__ import annotations

import numpy as np

from .bounds import best_symmetric_bound
from .channel import ChannelSpec, Quantizer
from .optimize import onebit_capacity, optimize_input_cutting_plane
from .quantopt import (
    CapacityCurve,
    benchmark_mutual_information,
    optimize_quantizer_2bit,
    optimize_quantizer_3bit_iterative,
    snr_for_spectral_efficiency,
    unquantized_capacity,
)
from .reference import REFERENCE_TABLES
from .report import ReportTable

TABLE_I_QUANTIZER = Quantizer((-2.0, 0.0, 2.0))

# SNR ladders behind the efficiency inversions; integer-dB cells are shared
# with the cross-precision grid through the cache
_LADDER_DB = tuple(float(d) for d in range(-8, 21))
_FINE_DB = tuple(np.arange(-10.0, 20.0 + 1e-9, 0.1).round(4))


def _snr(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _cached(cache, key, compute):
    if cache is None:
        return compute()
    if key not in cache:
        cache[key] = compute()
    return cache[key]


def two_bit_cell(snr_db: float, cache=None):
    """Joint-optimal symmetric 2-bit result at one SNR (cached)."""
    return _cached(
        cache, ("2bit", round(snr_db, 6)), lambda: optimize_quantizer_2bit(_snr(snr_db))
    )


def three_bit_cell(snr_db: float, cache=None):
    """Iteratively optimized 3-bit result at one SNR (cached)."""
    return _cached(
        cache,
        ("3bit", round(snr_db, 6)),
        lambda: optimize_quantizer_3bit_iterative(_snr(snr_db)),
    )


def table_i_mutual_information(snr_db: float, cache=None):
    def compute():
        spec = ChannelSpec.from_snr_db(snr_db, TABLE_I_QUANTIZER)
        return optimize_input_cutting_plane(spec)

    return _cached(cache, ("t1mi", round(snr_db, 6)), compute)


def table_i_upper_bound(snr_db: float, cache=None):
    def compute():
        spec = ChannelSpec.from_snr_db(snr_db, TABLE_I_QUANTIZER)
        bound, _ = best_symmetric_bound(spec)
        return bound

    return _cached(cache, ("t1ub", round(snr_db, 6)), compute)


def build_table_i(cache=None) -> ReportTable:
    ref = REFERENCE_TABLES["I"]
    cols = ref.columns
    ub = tuple(table_i_upper_bound(db, cache) for db in cols)
    mi = tuple(table_i_mutual_information(db, cache).capacity for db in cols)
    return ReportTable(
        name="I",
        column_label=ref.column_label,
        columns=cols,
        computed=(("Upper bound", ub), ("Mutual information", mi)),
        reference=ref.rows,
    )


def build_table_ii(cache=None) -> ReportTable:
    ref = REFERENCE_TABLES["II"]
    cols = ref.columns
    onebit = tuple(onebit_capacity(_snr(db)) for db in cols)
    opt = tuple(two_bit_cell(db, cache).capacity_result.capacity for db in cols)
    bench = tuple(benchmark_mutual_information(4, _snr(db)) for db in cols)
    return ReportTable(
        name="II",
        column_label=ref.column_label,
        columns=cols,
        computed=(
            ("1-bit", onebit),
            ("2-bit optimal", opt),
            ("2-bit benchmark", bench),
        ),
        reference=ref.rows,
    )


def build_table_iii(cache=None) -> ReportTable:
    ref = REFERENCE_TABLES["III"]
    cols = ref.columns
    opt = tuple(three_bit_cell(db, cache).capacity_result.capacity for db in cols)
    bench = tuple(benchmark_mutual_information(8, _snr(db)) for db in cols)
    return ReportTable(
        name="III",
        column_label=ref.column_label,
        columns=cols,
        computed=(("3-bit optimal", opt), ("3-bit benchmark", bench)),
        reference=ref.rows,
    )


def build_table_iv(cache=None) -> ReportTable:
    ref = REFERENCE_TABLES["IV"]
    cols = ref.columns
    rows = (
        ("1-bit", tuple(onebit_capacity(_snr(db)) for db in cols)),
        ("2-bit", tuple(two_bit_cell(db, cache).capacity_result.capacity for db in cols)),
        ("3-bit", tuple(three_bit_cell(db, cache).capacity_result.capacity for db in cols)),
        ("Unquantized", tuple(unquantized_capacity(_snr(db)) for db in cols)),
    )
    return ReportTable(
        name="IV",
        column_label=ref.column_label,
        columns=cols,
        computed=rows,
        reference=ref.rows,
    )


def capacity_curve(precision, cache=None) -> CapacityCurve:
    """Capacity-vs-SNR curve for a precision: 1, 2, 3 bits or "inf".

    Closed-form precisions use a 0.1-dB ladder; the optimizing precisions use
    a 1-dB ladder, which keeps interpolation error well under the 0.01-dB
    inversion accuracy (the curves bend slowly in dB).
    """

    def compute():
        if precision == 1:
            return CapacityCurve(
                _FINE_DB,
                tuple(onebit_capacity(_snr(d)) for d in _FINE_DB),
                supremum=1.0,
            )
        if precision == 2:
            caps = tuple(
                two_bit_cell(d, cache).capacity_result.capacity for d in _LADDER_DB
            )
            return CapacityCurve(_LADDER_DB, caps, supremum=2.0)
        if precision == 3:
            caps = tuple(
                three_bit_cell(d, cache).capacity_result.capacity for d in _LADDER_DB
            )
            return CapacityCurve(_LADDER_DB, caps, supremum=3.0)
        if precision == "inf":
            return CapacityCurve(
                _FINE_DB, tuple(unquantized_capacity(_snr(d)) for d in _FINE_DB)
            )
        raise ValueError(f"precision must be 1, 2, 3 or 'inf', got {precision!r}")

    return _cached(cache, ("curve", precision), compute)


def build_table_v(cache=None) -> ReportTable:
    ref = REFERENCE_TABLES["V"]
    targets = ref.columns
    rows = []
    for label, precision in (
        ("1-bit", 1),
        ("2-bit", 2),
        ("3-bit", 3),
        ("Unquantized", "inf"),
    ):
        curve = capacity_curve(precision, cache)
        rows.append(
            (label, tuple(snr_for_spectral_efficiency(t, curve) for t in targets))
        )
    return ReportTable(
        name="V",
        column_label=ref.column_label,
        columns=targets,
        computed=tuple(rows),
        reference=ref.rows,
    )


_BUILDERS = {
    "I": build_table_i,
    "II": build_table_ii,
    "III": build_table_iii,
    "IV": build_table_iv,
    "V": build_table_v,
}


def build_table(name: str, cache=None) -> ReportTable:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(
            f"unknown table {name!r}; expected one of {sorted(_BUILDERS)}"
        ) from None
    return builder(cache)


def sweep_cell(precision, snr_db: float) -> float:
    """One (precision, SNR) capacity cell; top-level so worker pools can pickle it."""
    if precision == 1:
        return onebit_capacity(_snr(snr_db))
    if precision == 2:
        return optimize_quantizer_2bit(_snr(snr_db)).capacity_result.capacity
    if precision == 3:
        return optimize_quantizer_3bit_iterative(_snr(snr_db)).capacity_result.capacity
    if precision == "inf":
        return unquantized_capacity(_snr(snr_db))
    raise ValueError(f"precision must be 1, 2, 3 or 'inf', got {precision!r}")


def _sweep_cell_star(args) -> float:
    return sweep_cell(*args)


def run_sweep(precisions, snr_dbs, jobs: int = 1):
    """Capacity cells for every (precision, SNR) pair, in input order.

    With jobs > 1 the independent cells go through a process pool; result
    order is preserved either way.
    """
    pairs = [(p, db) for p in precisions for db in snr_dbs]
    if jobs <= 1 or len(pairs) <= 1:
        caps = [sweep_cell(p, db) for p, db in pairs]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            caps = list(pool.map(_sweep_cell_star, pairs))
    return [(p, db, cap) for (p, db), cap in zip(pairs, caps)]
