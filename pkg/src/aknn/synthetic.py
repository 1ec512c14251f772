"""Analytic ground-truth distributions on [0, 1].

Piecewise-constant marginal density and piecewise-constant conditional label
bias share one breakpoint grid, so ball masses, ball biases, optimal risk,
the probability radius, and the pointwise advantage all have closed forms
(or grid suprema with exactly-placed critical radii). These oracles anchor
every statistical test in the suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import LabeledDataset

BINARY_ALPHABET = (1, -1)


@dataclass(frozen=True)
class AdvantageEstimate:
    """Grid supremum of mass * bias^2 over sign-consistent ball radii.

    For a positive value, ``value == witness_p * witness_gamma**2`` where the
    witnesses are the ball mass and (signed) ball bias at the maximizing
    radius, which is also recorded.
    """

    value: float
    witness_p: Optional[float] = None
    witness_gamma: Optional[float] = None
    witness_radius: Optional[float] = None


class PiecewiseDistribution:
    """Distribution over [0,1] x {+1,-1} with piecewise-constant density and bias.

    ``breakpoints`` has one more entry than ``density``/``eta``; piece i spans
    [breakpoints[i], breakpoints[i+1]). The density must integrate to 1 and
    the bias must stay within [-1, 1].
    """

    def __init__(self, breakpoints, density, eta):
        b = np.asarray(breakpoints, dtype=np.float64)
        d = np.asarray(density, dtype=np.float64)
        e = np.asarray(eta, dtype=np.float64)
        if b.ndim != 1 or len(b) < 2:
            raise ValueError("need at least two breakpoints")
        if len(d) != len(b) - 1 or len(e) != len(b) - 1:
            raise ValueError("density and eta need one value per piece")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(d < 0):
            raise ValueError("density must be nonnegative")
        if np.any(np.abs(e) > 1):
            raise ValueError("bias must lie in [-1, 1]")
        total = float(np.sum(d * np.diff(b)))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density integrates to {total}, not 1")
        self.breakpoints = b
        self.density = d
        self.eta = e
        widths = np.diff(b)
        self._cum_mass = np.concatenate(([0.0], np.cumsum(d * widths)))
        self._cum_eta_mass = np.concatenate(([0.0], np.cumsum(e * d * widths)))

    # ---- pointwise lookups -------------------------------------------------

    def _piece(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, len(self.density) - 1)

    def density_at(self, x):
        return self.density[self._piece(x)]

    def eta_at(self, x):
        return self.eta[self._piece(x)]

    def bayes_label(self, x):
        """Optimal-classifier output: sign of the pointwise bias (+1 on ties)."""
        return np.where(np.asarray(self.eta_at(x)) >= 0, 1, -1)

    # ---- closed-form integrals ---------------------------------------------

    def _mass_upto(self, t):
        t = np.clip(t, 0.0, 1.0)
        i = self._piece(t)
        return self._cum_mass[i] + self.density[i] * (t - self.breakpoints[i])

    def _eta_mass_upto(self, t):
        t = np.clip(t, 0.0, 1.0)
        i = self._piece(t)
        return self._cum_eta_mass[i] + self.eta[i] * self.density[i] * (t - self.breakpoints[i])

    def interval_mass(self, lo, hi):
        return np.maximum(self._mass_upto(hi) - self._mass_upto(lo), 0.0)

    def interval_eta_mass(self, lo, hi):
        return self._eta_mass_upto(hi) - self._eta_mass_upto(lo)

    def ball_mass(self, x: float, r: float):
        """Probability mass of the closed ball [x-r, x+r] clipped to [0, 1]."""
        if np.any(np.asarray(r) < 0):
            raise ValueError("radius must be nonnegative")
        return self.interval_mass(np.maximum(0.0, x - np.asarray(r)), np.minimum(1.0, x + np.asarray(r)))

    def ball_bias(self, x: float, r: float) -> float:
        """Mean label over the ball; undefined (raises) on mass-zero balls."""
        mass = self.ball_mass(x, r)
        if np.any(np.asarray(mass) == 0.0):
            raise ValueError("ball has zero mass; bias undefined")
        num = self.interval_eta_mass(np.maximum(0.0, x - np.asarray(r)), np.minimum(1.0, x + np.asarray(r)))
        return num / mass

    def bayes_risk(self) -> float:
        widths = np.diff(self.breakpoints)
        return float(np.sum(0.5 * (1.0 - np.abs(self.eta)) * self.density * widths))

    # ---- probability radius -------------------------------------------------

    def probability_radius(self, x: float, p: float, tol: float = 1e-12) -> float:
        """Smallest radius whose ball holds mass >= p, by monotone bisection.

        The returned endpoint keeps mass >= p (the bracket's feasible side).
        """
        if not 0.0 < p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        lo, hi = 0.0, max(x, 1.0 - x)
        if self.ball_mass(x, hi) < p:  # only possible via rounding at p == 1
            return hi
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.ball_mass(x, mid) >= p:
                hi = mid
            else:
                lo = mid
        return hi

    # ---- radius grids --------------------------------------------------------

    def _radius_grid(self, x: float, grid_size: int) -> np.ndarray:
        """Uniform grid over (0, R], augmented with every radius at which the
        ball boundary crosses a breakpoint. Between such critical radii both
        mass and bias are rational in r, and mass*bias^2 is piecewise convex,
        so suprema sit on this grid exactly for these instances."""
        if grid_size < 100:
            raise ValueError("grid_size must be at least 100")
        r_max = max(x, 1.0 - x)
        uniform = r_max * np.arange(1, grid_size + 1) / grid_size
        critical = np.abs(self.breakpoints - x)
        grid = np.unique(np.concatenate([uniform, critical]))
        return grid[(grid > 0.0) & (grid <= r_max)]

    # ---- advantage ------------------------------------------------------------

    def advantage(self, x: float, grid_size: int = 10_000) -> AdvantageEstimate:
        """Largest mass * bias^2 over the prefix of radii where the ball bias
        keeps the sign of the pointwise bias; zero when that bias is zero."""
        eta_x = float(self.eta_at(x))
        if eta_x == 0.0:
            return AdvantageEstimate(0.0)
        s = 1.0 if eta_x > 0 else -1.0
        radii = self._radius_grid(x, grid_size)
        lo = np.maximum(0.0, x - radii)
        hi = np.minimum(1.0, x + radii)
        mass = self.interval_mass(lo, hi)
        eta_mass = self.interval_eta_mass(lo, hi)
        valid = (mass > 0.0) & (s * eta_mass > 0.0)
        if not valid[0]:
            return AdvantageEstimate(0.0)
        stop = int(np.argmin(valid)) if not valid.all() else len(valid)
        values = np.zeros(stop)
        np.divide(eta_mass[:stop] ** 2, mass[:stop], out=values)
        i = int(np.argmax(values))
        gamma = s * eta_mass[i] / mass[i]
        return AdvantageEstimate(float(values[i]), float(mass[i]), float(gamma), float(radii[i]))

    def knn_likely_set_member(self, x: float, n: int, k: int, grid_size: int = 10_000) -> bool:
        """Whether every ball up to the mass-(k/n) radius keeps bias of the
        pointwise sign with magnitude at least 1/sqrt(k). Mass-zero balls are
        vacuous; a zero pointwise bias disqualifies outright."""
        if not 1 <= k <= n:
            raise ValueError("need 1 <= k <= n")
        eta_x = float(self.eta_at(x))
        if eta_x == 0.0:
            return False
        s = 1.0 if eta_x > 0 else -1.0
        r_p = self.probability_radius(x, k / n)
        radii = self._radius_grid(x, grid_size)
        radii = np.concatenate([radii[radii <= r_p], [r_p]])
        lo = np.maximum(0.0, x - radii)
        hi = np.minimum(1.0, x + radii)
        mass = self.interval_mass(lo, hi)
        eta_mass = self.interval_eta_mass(lo, hi)
        live = mass > 0.0
        threshold = 1.0 / math.sqrt(k)
        return bool(np.all(s * eta_mass[live] >= threshold * mass[live]))

    # ---- sampling ---------------------------------------------------------------

    def sample_positions(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draw of n positions (closed form per piece)."""
        u = rng.random(n)
        idx = np.searchsorted(self._cum_mass, u, side="right") - 1
        idx = np.clip(idx, 0, len(self.density) - 1)
        dens = self.density[idx]
        # zero-density pieces carry no mass, so u never lands strictly inside one
        offset = np.where(dens > 0, (u - self._cum_mass[idx]) / np.where(dens > 0, dens, 1.0), 0.0)
        return self.breakpoints[idx] + offset

    def sample(self, n: int, seed: int = 0) -> LabeledDataset:
        """n labeled draws: positions by inverse CDF, labels +1 with probability
        (1 + bias)/2. The alphabet is fixed to (+1, -1) so the positive class
        is always first."""
        if n < 1:
            raise ValueError("n must be positive")
        rng = np.random.default_rng(seed)
        xs = self.sample_positions(n, rng)
        p_pos = 0.5 * (1.0 + self.eta_at(xs))
        ys = np.where(rng.random(n) < p_pos, 0, 1)  # indices into (+1, -1)
        return LabeledDataset(xs.reshape(-1, 1), ys, BINARY_ALPHABET)


def sample_product(
    dists: list,
    n: int,
    seed: int = 0,
    bias_coordinate: int = 0,
) -> LabeledDataset:
    """Multidimensional draws from a product of 1-d marginals.

    Coordinates are independent; labels follow the bias of one designated
    coordinate. Ball-geometry oracles (advantage, probability radius) stay
    1-d only; this exists so classifiers can be exercised in D > 1.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not dists:
        raise ValueError("need at least one marginal")
    if not 0 <= bias_coordinate < len(dists):
        raise ValueError("bias_coordinate out of range")
    rng = np.random.default_rng(seed)
    columns = [dist.sample_positions(n, rng) for dist in dists]
    features = np.column_stack(columns)
    anchor = dists[bias_coordinate]
    p_pos = 0.5 * (1.0 + anchor.eta_at(features[:, bias_coordinate]))
    ys = np.where(rng.random(n) < p_pos, 0, 1)
    return LabeledDataset(features, ys, BINARY_ALPHABET)


def step_distribution(noise: float = 0.0, boundary: float = 0.5) -> PiecewiseDistribution:
    """Uniform density with a two-sided bias step: +1 left of the boundary,
    -1 right of it, attenuated to +-(1 - 2*noise) under label flip noise."""
    if not 0.0 < boundary < 1.0:
        raise ValueError("boundary must lie strictly inside (0, 1)")
    if not 0.0 <= noise <= 0.5:
        raise ValueError("noise must lie in [0, 0.5]")
    level = 1.0 - 2.0 * noise
    return PiecewiseDistribution([0.0, boundary, 1.0], [1.0, 1.0], [level, -level])


def format_distribution(dist: PiecewiseDistribution) -> str:
    """One line per piece: left breakpoint, density, bias. The final right
    endpoint is always 1 and is omitted."""
    lines = ["# piecewise distribution: <left-breakpoint> <density> <eta>"]
    for b, d, e in zip(dist.breakpoints[:-1], dist.density, dist.eta):
        lines.append(f"{float(b)!r} {float(d)!r} {float(e)!r}")
    return "\n".join(lines) + "\n"


def parse_distribution(text: str) -> PiecewiseDistribution:
    """Inverse of :func:`format_distribution`; '#' starts a comment line."""
    breaks, dens, etas = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        b, d, e = (float(p) for p in parts)
        breaks.append(b)
        dens.append(d)
        etas.append(e)
    if not breaks:
        raise ValueError("no pieces in distribution text")
    return PiecewiseDistribution(breaks + [1.0], dens, etas)
