"""Duality upper bounds on capacity from a fixed output distribution.

For any output pmf R and any gamma >= 0,

    capacity <= sup_x [ D(W(.|x) || R) + gamma * (P - x^2) ],

so minimizing the right-hand side over gamma >= 0 gives a valid upper
bound for each candidate R.  On a fixed x-grid the objective is a maximum
of finitely many affine functions of gamma — piecewise-linear and convex —
and the minimum is found exactly by locating the breakpoint where the
active slope changes sign.  Searching over a family of symmetric output
pmfs then tightens the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .channel import ChannelSpec, OutputPmf, bin_probability_matrix, _kl_rows_bits
from .special import LN2

_ACTIVE_RTOL = 1e-12


class EnvelopeMinimum(NamedTuple):
    gamma: float
    value: float
    argmax_index: int


def minimize_max_affine(intercepts, slopes, max_rounds=500) -> EnvelopeMinimum:
    """Exact minimum over gamma >= 0 of max_i(intercepts[i] + slopes[i]*gamma).

    The upper envelope of affine functions is convex; its minimizer over the
    half-line is either gamma = 0 or the breakpoint where the active slope
    turns nonnegative.  The breakpoint is located by bisecting on the sign
    of the active slopes and closed exactly by intersecting the two active
    lines, verified against the whole family.
    """
    d = np.asarray(intercepts, dtype=float)
    s = np.asarray(slopes, dtype=float)
    if d.ndim != 1 or d.size == 0 or d.shape != s.shape:
        raise ValueError("intercepts and slopes must be equal-length 1-d arrays")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(s))):
        raise ValueError("intercepts and slopes must be finite")

    def probe(g):
        vals = d + s * g
        m = float(np.max(vals))
        atol = _ACTIVE_RTOL * max(1.0, abs(m)) + 1e-300
        active = vals >= m - atol
        return m, active

    m0, act0 = probe(0.0)
    if float(np.max(s[act0])) >= 0.0:
        return EnvelopeMinimum(0.0, m0, int(np.argmax(d)))
    if float(np.max(s)) <= 0.0:
        raise ValueError(
            "envelope is nonincreasing for all gamma; minimum not attained"
        )

    # expand hi until the envelope stops decreasing there
    lo, hi = 0.0, 1.0
    idx0 = np.flatnonzero(act0)
    line_lo = int(idx0[np.argmax(s[idx0])])  # steepest active line at lo
    line_hi = None
    for _ in range(200):
        m_hi, act_hi = probe(hi)
        idx = np.flatnonzero(act_hi)
        smax = float(np.max(s[idx]))
        smin = float(np.min(s[idx]))
        if smax < 0.0:  # still strictly decreasing at hi
            lo = hi
            line_lo = int(idx[np.argmax(s[idx])])
            hi *= 4.0
            continue
        if smin <= 0.0:  # zero sits in the subgradient: hi is the minimizer
            return EnvelopeMinimum(hi, m_hi, int(np.argmax(d + s * hi)))
        line_hi = int(idx[np.argmin(s[idx])])
        break
    if line_hi is None:
        raise ValueError("failed to bracket the envelope minimum")

    for _ in range(max_rounds):
        sa, sb = s[line_lo], s[line_hi]
        da, db = d[line_lo], d[line_hi]
        if sb <= sa:
            break  # degenerate; fall through to the probe result below
        g_x = (da - db) / (sb - sa)
        g_x = min(max(g_x, lo), hi)
        m_x, act_x = probe(g_x)
        pair_val = da + sa * g_x
        atol = _ACTIVE_RTOL * max(1.0, abs(m_x))
        if m_x <= pair_val + atol:
            return EnvelopeMinimum(float(g_x), m_x, int(np.argmax(d + s * g_x)))
        # a third line is strictly above the candidate pair at g_x
        idx = np.flatnonzero(act_x)
        smax = float(np.max(s[idx]))
        smin = float(np.min(s[idx]))
        if smin <= 0.0 <= smax:
            return EnvelopeMinimum(float(g_x), m_x, int(np.argmax(d + s * g_x)))
        if smax < 0.0:
            lo = g_x
            line_lo = int(idx[np.argmax(s[idx])])
        else:
            hi = g_x
            line_hi = int(idx[np.argmin(s[idx])])
    m_f, _ = probe(lo)
    return EnvelopeMinimum(float(lo), m_f, int(np.argmax(d + s * lo)))


def default_bound_grid(spec: ChannelSpec, point_count: int = 4001):
    """Default x-grid for bound evaluation: thresholds padded by 5 sigma.

    Beyond the outermost thresholds the divergence profile saturates (the
    conditional law stops changing in any bin that matters), so 5 sigma of
    padding captures the supremum to well below the bound tolerances used
    here.
    """
    thr = spec.quantizer.thresholds
    lo = thr[0] - 5.0 * spec.sigma
    hi = thr[-1] + 5.0 * spec.sigma
    return np.linspace(lo, hi, point_count)


@dataclass(frozen=True)
class BoundProblem:
    """A bound evaluation instance: channel, candidate output pmf, x-grid."""

    spec: ChannelSpec
    output: OutputPmf
    x_grid: np.ndarray

    def __post_init__(self):
        if self.output.bins != self.spec.quantizer.bins:
            raise ValueError("output pmf size must match the quantizer bin count")
        if np.any(self.output.probs <= 0.0):
            raise ValueError("output pmf must be strictly positive in every bin")
        g = np.asarray(self.x_grid, dtype=float)
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0.0):
            raise ValueError("x_grid must be a strictly ascending 1-d array")
        g = g.copy()
        g.flags.writeable = False
        object.__setattr__(self, "x_grid", g)

    @classmethod
    def for_spec(cls, spec, output, point_count=4001):
        return cls(spec, output, default_bound_grid(spec, point_count))


def divergence_to_output(x, output: OutputPmf, spec: ChannelSpec):
    """KL divergence in bits from W(.|x) to an arbitrary positive output pmf."""
    if np.any(output.probs <= 0.0):
        raise ValueError("output pmf must be strictly positive")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"divergence_to_output: non-finite input {x!r}")
    w = bin_probability_matrix(arr, spec.quantizer.thresholds, spec.sigma)
    rows = _kl_rows_bits(w, output.probs)
    if arr.ndim == 0:
        return float(rows[0])
    return rows


class BoundResult(NamedTuple):
    bound: float
    gamma: float
    x_star: float


def upper_bound_for_output(problem: BoundProblem) -> BoundResult:
    """Tightest duality bound available from the problem's output pmf.

    Minimizes max_x [ d(x -> R) + gamma (P - x^2) ] exactly over gamma >= 0
    (the inner max taken over the problem grid).
    """
    xs = problem.x_grid
    d = divergence_to_output(xs, problem.output, problem.spec)
    slopes = problem.spec.power_constraint - xs**2
    env = minimize_max_affine(d, slopes)
    return BoundResult(env.value, env.gamma, float(xs[env.argmax_index]))


def _symmetric_half_grid(spec: ChannelSpec, point_count: int):
    hi = spec.quantizer.thresholds[-1] + 5.0 * spec.sigma
    return np.linspace(0.0, hi, point_count)


def _certified_symmetric_bound(spec: ChannelSpec, out: OutputPmf) -> float:
    """Continuum-valid duality value for a fixed symmetric output pmf.

    Any gamma >= 0 certifies a bound as long as the inner sup over x is
    airtight, so the envelope minimum only picks gamma; the sup is then
    re-taken over continuous x by polishing every near-maximal grid peak.
    At gamma = 0 the inner sup includes the saturation limit -log2(R_edge)
    approached as |x| grows, which no finite grid reaches.
    """
    xs = _symmetric_half_grid(spec, 4001)
    d = divergence_to_output(xs, out, spec)
    power = spec.power_constraint
    env = minimize_max_affine(d, power - xs**2)
    gamma = env.gamma

    prof = d + gamma * (power - xs**2)
    best = float(np.max(prof))
    last = xs.size - 1

    def negated(x):
        return -(
            divergence_to_output(float(x), out, spec) + gamma * (power - x * x)
        )

    for i in range(xs.size):
        if prof[i] < best - 1e-6:
            continue
        if (i > 0 and prof[i] < prof[i - 1]) or (i < last and prof[i] < prof[i + 1]):
            continue
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, last)]
        res = minimize_scalar(
            negated, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
        )
        best = max(best, float(-res.fun))

    if gamma == 0.0:
        tail = float(-np.log2(min(out.probs[0], out.probs[-1])))
        best = max(best, tail)
    return best


def _bound_from_profile(d, slopes):
    return minimize_max_affine(d, slopes)


def best_symmetric_bound(spec: ChannelSpec, resolution: int = 2000):
    """Best duality bound over symmetric output pmfs for a symmetric quantizer.

    Returns (bound, output_pmf).  K=2 has a single symmetric output; K=4 is a
    one-parameter sweep refined by golden section; K=8 walks a coarse grid
    over the three free parameters and polishes the winner with Nelder-Mead.
    For symmetric outputs the divergence profile is even in x, so the grids
    only cover [0, max threshold + 5 sigma].  The returned value re-takes
    the inner sup over continuous x for the winning pmf, so it stays a true
    bound rather than a grid maximum.
    """
    quant = spec.quantizer
    if not quant.is_symmetric():
        raise ValueError("best_symmetric_bound requires a symmetric quantizer")
    k = quant.bins
    power = spec.power_constraint

    if k == 2:
        out = OutputPmf(np.array([0.5, 0.5]))
        return _certified_symmetric_bound(spec, out), out

    xs = _symmetric_half_grid(spec, 4001 if k == 4 else 2001)
    w = bin_probability_matrix(xs, quant.thresholds, spec.sigma)
    from scipy.special import xlogy

    negent = xlogy(w, w).sum(axis=1) / LN2
    slopes = power - xs**2
    half = k // 2
    paired = np.empty((xs.size, half))
    for i in range(half):
        paired[:, i] = w[:, i] + w[:, k - 1 - i]

    def bound_for_half(h):
        # h: probabilities of bins 1..K/2 (outermost first), summing to 1/2
        d = negent - paired @ np.log2(h)
        return minimize_max_affine(d, slopes).value

    if k == 4:
        alphas = np.linspace(0.001, 0.499, resolution)
        vals = np.empty(resolution)
        for i, a in enumerate(alphas):
            vals[i] = bound_for_half(np.array([0.5 - a, a]))
        best = int(np.argmin(vals))
        lo = alphas[max(best - 1, 0)]
        hi = alphas[min(best + 1, resolution - 1)]
        res = minimize_scalar(
            lambda a: bound_for_half(np.array([0.5 - a, a])),
            bracket=(lo, alphas[best], hi),
            method="golden",
            options={"xtol": 1e-6},
        )
        alpha = float(res.x)
        bound = float(res.fun)
        if vals[best] < bound:  # golden never worse than the grid winner
            alpha, bound = float(alphas[best]), float(vals[best])
        out = OutputPmf(np.array([0.5 - alpha, alpha, alpha, 0.5 - alpha]))
        return _certified_symmetric_bound(spec, out), out

    if k == 8:
        per_axis = max(10, min(50, resolution // 40)) if resolution != 2000 else 50
        axis = (np.arange(per_axis) + 0.5) * (0.5 / per_axis)
        coarse_xs = _symmetric_half_grid(spec, 501)
        w_c = bin_probability_matrix(coarse_xs, quant.thresholds, spec.sigma)
        negent_c = xlogy(w_c, w_c).sum(axis=1) / LN2
        slopes_c = power - coarse_xs**2
        paired_c = np.empty((coarse_xs.size, half))
        for i in range(half):
            paired_c[:, i] = w_c[:, i] + w_c[:, k - 1 - i]
        best_val, best_h = math.inf, None
        floor = 1e-3
        for h1 in axis:
            for h2 in axis:
                rem = 0.5 - h1 - h2
                if rem <= floor:
                    continue
                for h3 in axis:
                    h4 = rem - h3
                    if h3 >= rem or h4 <= floor:
                        continue
                    h = np.array([h1, h2, h3, h4])
                    d = negent_c - paired_c @ np.log2(h)
                    val = minimize_max_affine(d, slopes_c).value
                    if val < best_val:
                        best_val, best_h = val, h

        def objective(v):
            h1, h2, h3 = v
            h4 = 0.5 - h1 - h2 - h3
            if min(h1, h2, h3, h4) <= 1e-6:
                return 1e6
            return bound_for_half(np.array([h1, h2, h3, h4]))

        res = minimize(
            objective,
            best_h[:3],
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 600},
        )
        v = res.x if res.fun <= objective(best_h[:3]) else best_h[:3]
        h1, h2, h3 = v
        h4 = 0.5 - h1 - h2 - h3
        h = np.array([h1, h2, h3, h4])
        out = OutputPmf(np.concatenate([h, h[::-1]]))
        return _certified_symmetric_bound(spec, out), out

    raise ValueError(f"symmetric-output search supports K in {{2, 4, 8}}, got K={k}")
