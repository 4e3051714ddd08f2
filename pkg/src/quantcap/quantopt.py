"""Joint quantizer/input optimization and the uniform-PAM benchmark.

Three layers:

* the benchmark scheme (equiprobable equispaced PAM with mid-point
  thresholds), whose mutual information, symbol error rate, and Fano floor
  have closed or near-closed forms;
* brute-force search over the single free threshold of a symmetric 2-bit
  quantizer, and an alternating input/threshold ascent for 3-bit;
* the unquantized baseline and inversion of capacity-vs-SNR curves at a
  target spectral efficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import xlogy

from .channel import (
    ChannelSpec,
    InputDistribution,
    Quantizer,
    bin_probability_matrix,
    mutual_information,
)
from .optimize import (
    CapacityResult,
    GridConfig,
    optimize_input_cutting_plane,
)
from .special import LN2, binary_entropy, gaussian_q

_SCAN_GRID = GridConfig(10.0, 501)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _check_k(k):
    if k not in (2, 4, 8):
        raise ValueError(f"bin count must be one of 2, 4, 8, got {k!r}")


def _check_snr(snr):
    if not math.isfinite(snr) or snr <= 0.0:
        raise ValueError(f"snr must be finite and > 0, got {snr!r}")


@dataclass(frozen=True)
class BenchmarkScheme:
    """Equiprobable K-PAM input with mid-point hard-decision thresholds.

    The constellation is +/-d, +/-3d, ..., +/-(K-1)d with d = sqrt(3P/(K^2-1)),
    which makes E[X^2] = P exactly; the thresholds sit halfway between
    neighboring points, i.e. at 0, +/-2d, ..., +/-(K-2)d.  Quantizing with
    those thresholds is the same operation as ML symbol detection, so the
    scheme's mutual information *is* its hard-decision rate.
    """

    bins: int
    snr: float
    noise_variance: float
    input: InputDistribution
    quantizer: Quantizer

    @classmethod
    def build(cls, bins: int, snr: float, noise_variance: float = 1.0) -> "BenchmarkScheme":
        _check_k(bins)
        _check_snr(snr)
        power = snr * noise_variance
        d = math.sqrt(3.0 * power / (bins * bins - 1))
        locations = np.array([(2 * j - bins - 1) * d for j in range(1, bins + 1)])
        masses = np.full(bins, 1.0 / bins)
        thresholds = tuple((2 * j - bins) * d for j in range(1, bins))
        return cls(
            bins=bins,
            snr=snr,
            noise_variance=noise_variance,
            input=InputDistribution(locations, masses),
            quantizer=Quantizer(thresholds),
        )

    @property
    def spec(self) -> ChannelSpec:
        return ChannelSpec(
            self.noise_variance, self.snr * self.noise_variance, self.quantizer
        )


def benchmark_mutual_information(bins: int, snr: float, noise_variance: float = 1.0) -> float:
    """Mutual information in bits of the K-PAM benchmark pair."""
    scheme = BenchmarkScheme.build(bins, snr, noise_variance)
    return mutual_information(scheme.input, scheme.spec)


def benchmark_error_probability(bins: int, snr: float) -> float:
    """Symbol error rate of ML hard decisions on the benchmark scheme.

    Every interior point has two decision boundaries at distance d, the two
    edge points one, giving 2 (K-1)/K Q(d/sigma) with d/sigma =
    sqrt(3 snr/(K^2-1)).
    """
    if bins < 2:
        raise ValueError(f"bin count must be >= 2, got {bins!r}")
    _check_snr(snr)
    return 2.0 * (bins - 1) / bins * gaussian_q(math.sqrt(3.0 * snr / (bins * bins - 1)))


def benchmark_fano_lower_bound(bins: int, snr: float) -> float:
    """Fano floor on the benchmark's hard-decision rate, clamped at zero.

    log2 K - h(Pe) - Pe log2(K-1).  Never exceeds the benchmark mutual
    information; for K = 2 the hard-decision channel is a binary symmetric
    channel with equiprobable inputs, so the floor meets it exactly.
    """
    pe = benchmark_error_probability(bins, snr)
    value = math.log2(bins) - binary_entropy(pe) - pe * math.log2(bins - 1)
    return max(value, 0.0)


@dataclass(frozen=True)
class JointResult:
    """A quantizer choice together with its optimized-input capacity.

    `trace` records the capacity after each outer round of the iterative
    method; `curve` keeps the scanned (threshold, capacity) pairs of the
    brute-force method.
    """

    quantizer: Quantizer
    capacity_result: CapacityResult
    method: str
    trace: tuple = ()
    curve: tuple | None = None

    def __post_init__(self):
        if self.method not in ("brute_force", "iterative"):
            raise ValueError(f"unknown method tag {self.method!r}")
        if self.method == "iterative":
            # The alternation is monotone in exact arithmetic; the recorded
            # capacities carry inner-solver noise of order 1e-6 at the final
            # (sub-eps) round, so the structural check allows that much.
            for prev, nxt in zip(self.trace, self.trace[1:]):
                if nxt < prev - 1e-6:
                    raise ValueError(
                        f"iterative trace decreased: {prev!r} -> {nxt!r}"
                    )

    def to_text(self) -> str:
        lines = [f"threshold {t:.16e}" for t in self.quantizer.thresholds]
        lines.append(f"method {self.method}")
        return "\n".join(lines) + "\n" + self.capacity_result.to_text()


def _golden_max(f, lo, hi, xtol):
    """Golden-section maximization of a unimodal scalar function."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > xtol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def optimize_quantizer_2bit(
    snr: float,
    q_grid=None,
    *,
    noise_variance: float = 1.0,
    scan_points: int = 200,
    tol: float = 1e-4,
    final_grid=None,
) -> JointResult:
    """Best symmetric 2-bit quantizer {-q, 0, q} by threshold scan.

    Scans q over (0, 4 sqrt(P)] (or the provided grid), solving the inner
    input problem at each point with the previous support as seed, then
    refines around the winner by golden section to 1e-3 sqrt(P).  The
    capacity varies slowly in q, so a coarse scan plus local refinement is
    reliable; the returned curve is the scanned (q, capacity) data.  Ties
    break toward the smaller threshold.
    """
    _check_snr(snr)
    power = snr * noise_variance
    root_p = math.sqrt(power)
    if q_grid is None:
        qs = np.linspace(0.0, 4.0 * root_p, scan_points + 1)[1:]
    else:
        qs = np.asarray(q_grid, dtype=float)
        if qs.ndim != 1 or qs.size < 2 or np.any(qs <= 0.0) or np.any(np.diff(qs) <= 0.0):
            raise ValueError("q_grid must be positive and strictly ascending")

    seed = None
    best_seed = None
    best_cap = -math.inf
    caps = np.empty(qs.size)
    for i, q in enumerate(qs):
        spec = ChannelSpec(noise_variance, power, Quantizer((-q, 0.0, q)))
        res = optimize_input_cutting_plane(
            spec, grid=_SCAN_GRID, tol=tol, initial_support=seed
        )
        caps[i] = res.capacity
        seed = res.dist.locations
        if res.capacity > best_cap:
            best_cap = res.capacity
            best_seed = seed

    best = int(np.argmax(caps > np.max(caps) - 1e-12))  # first of the tied best
    lo = qs[best - 1] if best > 0 else 0.5 * qs[0]
    hi = qs[best + 1] if best + 1 < qs.size else qs[-1]

    def capacity_at(q):
        spec = ChannelSpec(noise_variance, power, Quantizer((-q, 0.0, q)))
        return optimize_input_cutting_plane(
            spec, grid=_SCAN_GRID, tol=tol, initial_support=best_seed
        ).capacity

    q_star, cap_star = _golden_max(capacity_at, lo, hi, 1e-3 * root_p)
    if caps[best] >= cap_star:
        q_star = float(qs[best])

    spec = ChannelSpec(noise_variance, power, Quantizer((-q_star, 0.0, q_star)))
    final = optimize_input_cutting_plane(
        spec, grid=final_grid, tol=tol, initial_support=best_seed
    )
    return JointResult(
        quantizer=spec.quantizer,
        capacity_result=final,
        method="brute_force",
        trace=(final.capacity,),
        curve=tuple(zip(qs.tolist(), caps.tolist())),
    )


def _threshold_ascent(dist: InputDistribution, halves, sigma, start_step, floor_step):
    """Coordinate ascent of MI over the positive half-thresholds.

    The input is fixed, so each candidate costs one small transition-matrix
    rebuild on the support points.  Candidates that break the strict ordering
    0 < q1 < ... are discarded; the step shrinks when no coordinate improves.
    """
    locs = np.asarray(dist.locations)
    masses = np.asarray(dist.masses)

    def mi_of(h):
        if h[0] <= 0.0 or np.any(np.diff(h) <= 0.0):
            return -math.inf
        thr = np.concatenate([-h[::-1], [0.0], h])
        w = bin_probability_matrix(locs, thr, sigma)
        r = masses @ w
        negent = xlogy(w, w).sum(axis=1) / LN2
        return float(masses @ (negent - w @ np.log2(np.maximum(r, 1e-300))))

    h = np.asarray(halves, dtype=float).copy()
    best = mi_of(h)
    step = start_step
    while step >= floor_step:
        improved = False
        for i in range(h.size):
            for delta in (step, -step):
                cand = h.copy()
                cand[i] += delta
                val = mi_of(cand)
                if val > best:
                    h, best = cand, val
                    improved = True
        if not improved:
            step *= 0.5
    return h


def optimize_quantizer_3bit_iterative(
    snr: float,
    init: Quantizer | None = None,
    eps: float = 1e-4,
    *,
    noise_variance: float = 1.0,
    max_outer: int = 50,
    tol: float = 1e-4,
    final_grid=None,
) -> JointResult:
    """Alternating input/threshold optimization for symmetric 3-bit quantizers.

    Starting from the benchmark quantizer (or a supplied symmetric 7-threshold
    one), repeats: optimize the input at the current quantizer, then
    coordinate-ascend the three positive thresholds at the fixed input with a
    step shrinking from 0.1 sigma to 1e-4 sigma.  Stops when one round gains
    less than `eps` bits.  Each input solve is seeded with the previous
    support, which keeps the capacity trace nondecreasing.
    """
    _check_snr(snr)
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps!r}")
    sigma = math.sqrt(noise_variance)
    power = snr * noise_variance
    if init is None:
        init = BenchmarkScheme.build(8, snr, noise_variance).quantizer
    thr = np.asarray(init.thresholds)
    if thr.size != 7 or not init.is_symmetric() or abs(thr[3]) > 1e-12:
        raise ValueError(
            "init must be a symmetric 7-threshold quantizer {0, +/-q1, +/-q2, +/-q3}"
        )
    halves = thr[4:].copy()

    trace = []
    seed = None
    quant = init
    for _ in range(max_outer):
        spec = ChannelSpec(noise_variance, power, quant)
        res = optimize_input_cutting_plane(
            spec, grid=_SCAN_GRID, tol=tol, initial_support=seed
        )
        trace.append(res.capacity)
        seed = res.dist.locations
        if len(trace) >= 2 and trace[-1] - trace[-2] < eps:
            break
        halves = _threshold_ascent(
            res.dist, halves, sigma, start_step=0.1 * sigma, floor_step=1e-4 * sigma
        )
        quant = Quantizer(tuple(np.concatenate([-halves[::-1], [0.0], halves])))

    spec = ChannelSpec(noise_variance, power, quant)
    final = optimize_input_cutting_plane(
        spec, grid=final_grid, tol=tol, initial_support=seed
    )
    return JointResult(
        quantizer=quant,
        capacity_result=final,
        method="iterative",
        trace=tuple(trace),
    )


def unquantized_capacity(snr: float) -> float:
    """Real-AWGN capacity 0.5 log2(1 + snr) bits per channel use."""
    if not math.isfinite(snr) or snr < 0.0:
        raise ValueError(f"snr must be finite and >= 0, got {snr!r}")
    return 0.5 * math.log2(1.0 + snr)


@dataclass(frozen=True)
class CapacityCurve:
    """Monotone capacity-vs-SNR curve, interpolated in dB.

    Built from a ladder of (snr_db, bits) samples; evaluation uses a
    monotonicity-preserving cubic (PCHIP), so inversion can run a root
    finder safely.  `supremum` is the known high-SNR ceiling (log2 of the
    bin count for a quantized channel); targets at or above it are
    infeasible even when rounding makes sampled values touch the ceiling.
    """

    snr_db: tuple
    bits: tuple
    supremum: float | None = None
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        db = np.asarray(self.snr_db, dtype=float)
        val = np.asarray(self.bits, dtype=float)
        if db.size < 2 or db.shape != val.shape:
            raise ValueError("need matching ladders of at least 2 points")
        if np.any(np.diff(db) <= 0.0):
            raise ValueError("snr_db ladder must be strictly ascending")
        if np.any(np.diff(val) < -1e-9):
            raise ValueError("capacity ladder must be nondecreasing")
        if self.supremum is not None and np.max(val) > self.supremum + 1e-9:
            raise ValueError("ladder exceeds the declared supremum")
        object.__setattr__(self, "snr_db", tuple(db.tolist()))
        object.__setattr__(self, "bits", tuple(val.tolist()))
        object.__setattr__(self, "_interp", PchipInterpolator(db, val))

    @property
    def snr_db_range(self):
        return self.snr_db[0], self.snr_db[-1]

    def __call__(self, snr_db: float) -> float:
        lo, hi = self.snr_db_range
        return float(self._interp(min(max(snr_db, lo), hi)))


def snr_for_spectral_efficiency(target_bits: float, capacity_curve) -> float | None:
    """SNR in dB at which the curve reaches the target rate, or None.

    Accepts any callable of snr_db; a `snr_db_range` attribute, when present,
    bounds the search (default [-40, 60] dB), and a `supremum` attribute
    declares a rate ceiling the curve approaches but never attains.  Returns
    None when the target is unreachable -- the blank cells of a fixed-rate
    comparison -- rather than raising.  Accuracy 0.01 dB.
    """
    if not math.isfinite(target_bits) or target_bits <= 0.0:
        raise ValueError(f"target_bits must be finite and > 0, got {target_bits!r}")
    ceiling = getattr(capacity_curve, "supremum", None)
    if ceiling is not None and target_bits >= ceiling - 1e-9:
        return None
    lo, hi = getattr(capacity_curve, "snr_db_range", (-40.0, 60.0))
    top = float(capacity_curve(hi))
    if target_bits > top:
        return None
    bottom = float(capacity_curve(lo))
    if target_bits <= bottom:
        return float(lo)
    root = brentq(
        lambda db: float(capacity_curve(db)) - target_bits, lo, hi, xtol=0.005
    )
    return float(root)
