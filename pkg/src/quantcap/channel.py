"""Channel model: AWGN with a K-bin scalar quantizer at the output.

The channel is Y = quantize(X + N) with N ~ Normal(0, noise_variance) and a
quantizer described by its K-1 ascending thresholds.  Everything downstream
(optimizers, bounds, reports) works through the types and quantities here:
transition probabilities, output pmf, mutual information, the divergence
profile d(x; F), and the KKT residual that certifies optimality.

All information quantities are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .special import LN2, gaussian_q

#: tolerance for "masses sum to one" checks
PROB_ATOL = 1e-10
#: relative slack allowed on the average-power constraint
POWER_RTOL = 1e-9
#: canonical cleanup: support points closer than this * sqrt(P) are merged
MERGE_SCALE = 1e-6
#: canonical cleanup: masses below this are dropped and the rest renormalized
PRUNE_TOL = 1e-7


class OutputBinZeroError(ArithmeticError):
    """An output bin has zero probability under the input distribution,
    yet some input still reaches that bin; the divergence is +infinity."""


def _require_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name}: non-finite value {v!r}")


@dataclass(frozen=True)
class Quantizer:
    """Scalar quantizer given by strictly ascending finite thresholds.

    K-1 thresholds partition the line into K bins (q_{i-1}, q_i], with the
    outermost bins unbounded.
    """

    thresholds: tuple[float, ...]

    def __post_init__(self):
        thr = tuple(float(t) for t in self.thresholds)
        if len(thr) < 1:
            raise ValueError("Quantizer needs at least one threshold (K >= 2)")
        _require_finite("Quantizer", *thr)
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise ValueError(f"thresholds must be strictly ascending, got {thr}")
        object.__setattr__(self, "thresholds", thr)

    @property
    def bins(self) -> int:
        """Number of output levels K."""
        return len(self.thresholds) + 1

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True when the threshold set is closed under negation."""
        t = np.asarray(self.thresholds)
        scale = max(1.0, float(np.max(np.abs(t))))
        return bool(np.all(np.abs(t + t[::-1]) <= tol * scale))

    @classmethod
    def symmetric_with_zero(cls, half_thresholds) -> "Quantizer":
        """Mirror the given positive thresholds around an explicit 0 threshold.

        symmetric_with_zero([]) is the one-bit quantizer {0};
        symmetric_with_zero([q]) gives {-q, 0, q} (two-bit), and so on.
        """
        half = sorted(float(q) for q in half_thresholds)
        if any(q <= 0.0 for q in half):
            raise ValueError("half_thresholds must be strictly positive")
        return cls(tuple(-q for q in reversed(half)) + (0.0,) + tuple(half))

    def to_text(self) -> str:
        """One threshold per line, full precision."""
        return "\n".join(f"{t:.16e}" for t in self.thresholds) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Quantizer":
        vals = [float(line) for line in text.split("\n") if line.strip()]
        return cls(tuple(vals))


@dataclass(frozen=True)
class ChannelSpec:
    """Channel instance: noise variance, average-power budget, quantizer."""

    noise_variance: float
    power_constraint: float
    quantizer: Quantizer

    def __post_init__(self):
        _require_finite("ChannelSpec", self.noise_variance, self.power_constraint)
        if self.noise_variance <= 0.0:
            raise ValueError(f"noise_variance must be > 0, got {self.noise_variance}")
        if self.power_constraint <= 0.0:
            raise ValueError(f"power_constraint must be > 0, got {self.power_constraint}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.noise_variance)

    @property
    def snr(self) -> float:
        return self.power_constraint / self.noise_variance

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)

    @classmethod
    def from_snr_db(cls, snr_db, quantizer, noise_variance=1.0) -> "ChannelSpec":
        power = noise_variance * 10.0 ** (snr_db / 10.0)
        return cls(noise_variance, power, quantizer)


@dataclass(frozen=True)
class InputDistribution:
    """Finite input distribution: ascending support locations with masses."""

    locations: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.locations, dtype=float)
        p = np.asarray(self.masses, dtype=float)
        if x.ndim != 1 or p.ndim != 1 or x.size != p.size or x.size == 0:
            raise ValueError("locations and masses must be 1-d arrays of equal size")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise ValueError("locations and masses must be finite")
        if np.any(p <= 0.0):
            raise ValueError("all masses must be strictly positive")
        if abs(float(p.sum()) - 1.0) > PROB_ATOL:
            raise ValueError(f"masses must sum to 1 (got {p.sum()!r})")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("locations must be strictly ascending")
        x = x.copy()
        p = p.copy()
        x.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "masses", p)

    @classmethod
    def from_points(cls, locations, masses, merge_tol=0.0, prune_tol=0.0):
        """Sort, merge near-duplicate locations, prune tiny masses, renormalize.

        Merging is chained: consecutive points with gaps <= merge_tol collapse
        into one mass-weighted centroid.  Pruning drops masses < prune_tol and
        renormalizes the remainder; everything vanishing is an error.
        """
        x = np.asarray(locations, dtype=float)
        p = np.asarray(masses, dtype=float)
        order = np.argsort(x, kind="stable")
        x, p = x[order], p[order]
        keep = p > 0.0
        x, p = x[keep], p[keep]
        if x.size == 0:
            raise ValueError("no support points with positive mass")
        if merge_tol >= 0.0 and x.size > 1:
            new_group = np.diff(x) > merge_tol
            group = np.concatenate(([0], np.cumsum(new_group)))
            n_groups = group[-1] + 1
            pm = np.bincount(group, weights=p, minlength=n_groups)
            xm = np.bincount(group, weights=p * x, minlength=n_groups) / pm
            x, p = xm, pm
        if prune_tol > 0.0:
            keep = p >= prune_tol
            if not np.any(keep):
                raise ValueError("pruning removed all support points")
            x, p = x[keep], p[keep]
        p = p / p.sum()
        return cls(x, p)

    @classmethod
    def point_masses(cls, pairs):
        xs = [x for x, _ in pairs]
        ps = [p for _, p in pairs]
        return cls(np.asarray(xs, float), np.asarray(ps, float))

    @classmethod
    def binary_antipodal(cls, amplitude):
        """Equiprobable mass points at +/- amplitude."""
        a = float(amplitude)
        if a <= 0.0:
            raise ValueError("amplitude must be positive")
        return cls(np.array([-a, a]), np.array([0.5, 0.5]))

    @property
    def support_size(self) -> int:
        return int(self.locations.size)

    def average_power(self) -> float:
        return float(np.dot(self.masses, self.locations**2))

    def is_power_feasible(self, spec: ChannelSpec) -> bool:
        return self.average_power() <= spec.power_constraint * (1.0 + POWER_RTOL)

    def mirrored(self) -> "InputDistribution":
        return InputDistribution(-self.locations[::-1], self.masses[::-1].copy())

    def symmetrized(self) -> "InputDistribution":
        """Equal mixture of the distribution and its mirror image.

        For a symmetric quantizer this never reduces mutual information
        (concavity of I in the input law plus the channel's symmetry).
        """
        x = np.concatenate([self.locations, -self.locations])
        p = np.concatenate([self.masses, self.masses]) * 0.5
        scale = max(1.0, float(np.max(np.abs(x))))
        return InputDistribution.from_points(x, p, merge_tol=1e-12 * scale)

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        x, p = self.locations, self.masses
        scale = max(1.0, float(np.max(np.abs(x))))
        return bool(
            np.all(np.abs(x + x[::-1]) <= tol * scale)
            and np.all(np.abs(p - p[::-1]) <= tol)
        )

    def to_text(self) -> str:
        """One support point per line: location and mass, full precision."""
        return "\n".join(
            f"{x:.16e} {p:.16e}" for x, p in zip(self.locations, self.masses)
        ) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "InputDistribution":
        xs, ps = [], []
        for line in text.split("\n"):
            line = line.strip()
            if not line:
                continue
            sx, sp = line.split()
            xs.append(float(sx))
            ps.append(float(sp))
        return cls(np.asarray(xs), np.asarray(ps))


@dataclass(frozen=True)
class OutputPmf:
    """Probability mass function over the K quantizer bins."""

    probs: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.probs, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise ValueError("OutputPmf needs a 1-d vector of length >= 2")
        if not np.all(np.isfinite(r)) or np.any(r < 0.0):
            raise ValueError("OutputPmf entries must be finite and >= 0")
        if abs(float(r.sum()) - 1.0) > PROB_ATOL:
            raise ValueError(f"OutputPmf must sum to 1 (got {r.sum()!r})")
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "probs", r)

    @property
    def bins(self) -> int:
        return int(self.probs.size)

    def is_palindromic(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.probs - self.probs[::-1]) <= tol))


def bin_probability_matrix(x, thresholds, sigma):
    """Row-stochastic matrix of P(bin | input) for an array of inputs.

    Row i is the conditional law of the quantized output given input x[i].
    Each interior bin probability is computed as a difference of Gaussian
    tails taken on whichever side keeps both operands in the same tail, so
    nothing cancels catastrophically far from the thresholds.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    thr = np.asarray(thresholds, dtype=float)
    z = (thr[None, :] - x[:, None]) / sigma  # ascending along axis 1
    tail = gaussian_q(z)  # Q(z)
    comp = gaussian_q(-z)  # 1 - Q(z), accurate when z << 0
    n, km1 = z.shape
    out = np.empty((n, km1 + 1))
    out[:, 0] = comp[:, 0]
    out[:, -1] = tail[:, -1]
    for i in range(1, km1):
        a = z[:, i - 1]
        b = z[:, i]
        col = np.empty(n)
        pos = a >= 0.0
        neg = b <= 0.0
        mid = ~(pos | neg)
        col[pos] = tail[pos, i - 1] - tail[pos, i]
        col[neg] = comp[neg, i] - comp[neg, i - 1]
        col[mid] = 1.0 - comp[mid, i - 1] - tail[mid, i]
        out[:, i] = col
    np.clip(out, 0.0, 1.0, out=out)
    return out


def transition_probs(x, spec: ChannelSpec):
    """Conditional output pmf W(.|x) as a length-K vector (or rows per x)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"transition_probs: non-finite input {x!r}")
    rows = bin_probability_matrix(arr, spec.quantizer.thresholds, spec.sigma)
    if arr.ndim == 0:
        return rows[0]
    return rows


@dataclass(frozen=True)
class TransitionMatrix:
    """Transition rows for a whole input grid (grid[i] -> probs[i, :])."""

    grid: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.probs, dtype=float)
        if g.ndim != 1 or w.ndim != 2 or w.shape[0] != g.size:
            raise ValueError("grid must be 1-d and probs must have one row per grid point")
        if np.any(np.diff(g) <= 0.0):
            raise ValueError("grid must be strictly ascending")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > PROB_ATOL):
            raise ValueError("every transition row must sum to 1")
        g = g.copy()
        w = w.copy()
        g.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "probs", w)

    @classmethod
    def build(cls, grid, spec: ChannelSpec) -> "TransitionMatrix":
        g = np.asarray(grid, dtype=float)
        return cls(g, bin_probability_matrix(g, spec.quantizer.thresholds, spec.sigma))


def output_pmf(dist: InputDistribution, spec: ChannelSpec) -> OutputPmf:
    """Marginal output pmf induced by the input distribution."""
    w = bin_probability_matrix(dist.locations, spec.quantizer.thresholds, spec.sigma)
    return OutputPmf(dist.masses @ w)


def _kl_rows_bits(w, r):
    """Row-wise KL divergence sum_i w_i log2(w_i / r_i); w rows, r a vector.

    Zero w entries contribute zero.  A positive w against a zero r is a
    signaled error (the divergence is infinite).
    """
    r = np.asarray(r, dtype=float)
    hit_zero = (r <= 0.0) & np.any(w > 0.0, axis=0)
    if np.any(hit_zero):
        bins = np.nonzero(hit_zero)[0].tolist()
        raise OutputBinZeroError(
            f"output bins {bins} have zero probability but are reachable"
        )
    safe_r = np.where(r > 0.0, r, 1.0)
    rows = (_sp.xlogy(w, w) - _sp.xlogy(w, safe_r[None, :])).sum(axis=1) / LN2
    return np.maximum(rows, 0.0)  # KL >= 0; tiny negatives are rounding


def mutual_information(dist: InputDistribution, spec: ChannelSpec) -> float:
    """Mutual information in bits between the input and the quantized output."""
    w = bin_probability_matrix(dist.locations, spec.quantizer.thresholds, spec.sigma)
    r = dist.masses @ w
    rows = _kl_rows_bits(w, r)
    return float(np.dot(dist.masses, rows))


def divergence(x, dist: InputDistribution, spec: ChannelSpec):
    """Divergence profile d(x; F): KL distance from W(.|x) to the output pmf.

    Accepts a scalar or an array of input locations.  Requires every output
    bin to have positive probability under dist (otherwise the profile is
    infinite somewhere and the call raises OutputBinZeroError).
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"divergence: non-finite input {x!r}")
    w_sup = bin_probability_matrix(dist.locations, spec.quantizer.thresholds, spec.sigma)
    r = dist.masses @ w_sup
    if np.any(r <= 0.0):
        bins = np.nonzero(r <= 0.0)[0].tolist()
        raise OutputBinZeroError(f"output bins {bins} have zero probability")
    w = bin_probability_matrix(arr, spec.quantizer.thresholds, spec.sigma)
    rows = _kl_rows_bits(w, r)
    if arr.ndim == 0:
        return float(rows[0])
    return rows


def kkt_residual(dist, gamma, spec, grid):
    """Optimality-certificate residuals for a candidate (dist, gamma) pair.

    The optimality condition requires d(x;F) + gamma*(P - x^2) <= I(F) for
    all x with equality on the support.  Returns (max_violation, support_gap):
    the worst excess over the grid and the worst absolute slack on support.
    """
    if gamma < 0.0 or not math.isfinite(gamma):
        raise ValueError(f"gamma must be finite and >= 0, got {gamma!r}")
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    power = spec.power_constraint
    mi = mutual_information(dist, spec)
    g_grid = divergence(xs, dist, spec) + gamma * (power - xs**2)
    max_violation = float(np.max(g_grid) - mi)
    g_sup = divergence(dist.locations, dist, spec) + gamma * (
        power - dist.locations**2
    )
    support_gap = float(np.max(np.abs(g_sup - mi)))
    return max_violation, support_gap
