"""Geometry, exponent fitting and finite-size extrapolation.

Distances on periodic lattices are measured as chord lengths
ch(x) = (N/pi) sin(pi x / N). Rates are organized over the generalized
cross-ratio eta and fitted as rate ~ eta^(alpha/2) by weighted least
squares in log-log space.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .measures import SubregionSet


class AnalysisError(ValueError):
    pass


def chord_length(x, num_sites: float):
    """Chord distance on the ring: (N/pi) sin(pi x / N)."""
    return num_sites / math.pi * np.sin(np.asarray(x, dtype=float) * math.pi / num_sites)


def _arc_bounds(region: Sequence[int], num_sites: int) -> tuple[int, int]:
    """(left endpoint, width) of a contiguous arc on the ring."""
    sites = sorted(region)
    w = len(sites)
    if sites[-1] - sites[0] + 1 == w:
        return sites[0], w
    # wrapped arc: locate the unique gap
    gaps = [i for i in range(w) if (sites[(i + 1) % w] - sites[i]) % num_sites != 1]
    if len(gaps) != 1:
        raise AnalysisError(f"region is not a contiguous arc: {sites}")
    return sites[(gaps[0] + 1) % w], w


def eta_1d(subs: SubregionSet) -> float:
    """Generalized cross-ratio of k arcs on the ring.

    eta = (prod_i ch(w_i))^(2/k) / (prod_{i<j} ch(x_ij) ch(y_ij))^(2/(k(k-1)))
    with x_ij (y_ij) the left- (right-) endpoint separations, all as chords.
    """
    n = subs.num_sites
    bounds = [_arc_bounds(r, n) for r in subs.regions]
    k = subs.k
    log_w = sum(math.log(chord_length(w, n)) for _, w in bounds)
    log_xy = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            for off_i, off_j in ((0, 0), (bounds[i][1], bounds[j][1])):
                d = (bounds[j][0] + off_j - bounds[i][0] - off_i) % n
                c = chord_length(d, n)
                if c <= 0:
                    raise AnalysisError("coincident interval endpoints: eta undefined")
                log_xy += math.log(c)
    return math.exp(2.0 / k * log_w - 2.0 / (k * (k - 1)) * log_xy)


def eta_2d(radius_sq: float, x: int, y: int, side: int) -> float:
    """Torus cross-ratio: ch(2r)^2 / (ch(x)^2 + ch(y)^2), per-axis chords."""
    c2r = chord_length(2.0 * math.sqrt(radius_sq), side)
    cx = chord_length(x, side)
    cy = chord_length(y, side)
    return float(c2r ** 2 / (cx ** 2 + cy ** 2))


@dataclass(frozen=True)
class EtaPoint:
    eta: float
    rate: float
    stderr: float
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class FitResult:
    alpha: float
    alpha_err: float
    prefactor: float
    window: tuple[float, float]
    chi2_per_dof: float
    n_points: int


def _wls_loglog(log_x: np.ndarray, log_y: np.ndarray,
                sigma_log: Optional[np.ndarray]):
    """Weighted straight-line fit; returns slope, slope_err, intercept, chi2/dof."""
    n = log_x.size
    if sigma_log is None:
        w = np.ones(n)
    else:
        w = 1.0 / sigma_log ** 2
    s = w.sum()
    sx = (w * log_x).sum()
    sy = (w * log_y).sum()
    sxx = (w * log_x * log_x).sum()
    sxy = (w * log_x * log_y).sum()
    delta = s * sxx - sx * sx
    if delta <= 0:
        raise AnalysisError("degenerate abscissas in fit")
    slope = (s * sxy - sx * sy) / delta
    intercept = (sxx * sy - sx * sxy) / delta
    resid = log_y - (slope * log_x + intercept)
    chi2 = float((w * resid ** 2).sum())
    dof = max(n - 2, 1)
    if sigma_log is None:
        slope_err = math.sqrt(chi2 / dof * s / delta)
    else:
        slope_err = math.sqrt(s / delta)
    return slope, slope_err, intercept, chi2 / dof


def fit_power_law(points: Sequence[EtaPoint],
                  window: tuple[float, float]) -> FitResult:
    """Fit rate ~ eta^(alpha/2) over the window; alpha = 2 * log-log slope.

    Zero-rate points are excluded; fewer than 3 usable points is an error.
    Points are weighted by inverse log-space variance (stderr/rate) when all
    carry a positive stderr, otherwise the fit is unweighted.
    """
    in_window = [p for p in points if window[0] <= p.eta <= window[1]]
    usable = [p for p in in_window if p.rate > 0]
    if len(usable) < len(in_window):
        warnings.warn(f"excluded {len(in_window) - len(usable)} zero-rate "
                      "points from power-law fit", stacklevel=2)
    if len(usable) < 3:
        raise AnalysisError(f"need at least 3 usable points in window {window}, "
                            f"got {len(usable)}")
    log_x = np.array([math.log(p.eta) for p in usable])
    log_y = np.array([math.log(p.rate) for p in usable])
    if all(p.stderr > 0 for p in usable):
        sigma = np.array([p.stderr / p.rate for p in usable])
    else:
        sigma = None
    slope, slope_err, intercept, chi2_dof = _wls_loglog(log_x, log_y, sigma)
    return FitResult(alpha=2.0 * slope, alpha_err=2.0 * slope_err,
                     prefactor=math.exp(intercept), window=tuple(window),
                     chi2_per_dof=chi2_dof, n_points=len(usable))


def fit_distance_decay(points: Sequence[tuple[float, float, float]],
                       window: tuple[float, float]) -> FitResult:
    """Fit rate ~ x^(-gamma) over distances (for pair-connection laws)."""
    usable = [(x, r, e) for x, r, e in points if window[0] <= x <= window[1] and r > 0]
    if len(usable) < 3:
        raise AnalysisError("need at least 3 usable points")
    log_x = np.array([math.log(x) for x, _, _ in usable])
    log_y = np.array([math.log(r) for _, r, _ in usable])
    if all(e > 0 for _, _, e in usable):
        sigma = np.array([e / r for _, r, e in usable])
    else:
        sigma = None
    slope, slope_err, intercept, chi2_dof = _wls_loglog(log_x, log_y, sigma)
    return FitResult(alpha=-slope, alpha_err=slope_err,
                     prefactor=math.exp(intercept), window=tuple(window),
                     chi2_per_dof=chi2_dof, n_points=len(usable))


def angle_average(rate_grid: np.ndarray, omega: float, eta: float,
                  radius_sq: float, side: int, num_angles: int = 64
                  ) -> tuple[float, float]:
    """Average the displacement-grid rates over angle at fixed eta.

    ``rate_grid[x, y]`` holds the measured rate at lattice displacement
    (x, y) (NaN where unmeasured). For each angle the chord-metric point is
    inverted to lattice coordinates and the four surrounding grid rates are
    interpolated bilinearly. The returned error combines, in quadrature,
    the standard deviation over angles with the shot-noise estimate
    sum_ij w_ij sqrt(rate_ij / omega) (fluctuations assumed positively
    correlated, so shot errors average rather than shrink).
    """
    if rate_grid.shape[0] < 2 or rate_grid.shape[1] < 2:
        raise AnalysisError("rate grid too small to interpolate")
    c2r = chord_length(2.0 * math.sqrt(radius_sq), side)
    rho = c2r / math.sqrt(eta)
    chord_max = side / math.pi
    xmax = rate_grid.shape[0] - 1
    ymax = rate_grid.shape[1] - 1
    values = []
    shots = []
    for j in range(num_angles):
        theta = 2.0 * math.pi * j / num_angles
        cx = rho * abs(math.cos(theta))
        cy = rho * abs(math.sin(theta))
        if cx > chord_max or cy > chord_max:
            continue
        x = side / math.pi * math.asin(cx * math.pi / side)
        y = side / math.pi * math.asin(cy * math.pi / side)
        if x > xmax or y > ymax:
            continue
        x0 = min(int(math.floor(x)), xmax - 1) if xmax > 0 else 0
        y0 = min(int(math.floor(y)), ymax - 1) if ymax > 0 else 0
        fx, fy = x - x0, y - y0
        corners = ((x0, y0, (1 - fx) * (1 - fy)), (x0 + 1, y0, fx * (1 - fy)),
                   (x0, y0 + 1, (1 - fx) * fy), (x0 + 1, y0 + 1, fx * fy))
        val = 0.0
        shot = 0.0
        ok = True
        for cx0, cy0, wgt in corners:
            r = rate_grid[cx0, cy0]
            if math.isnan(r):
                ok = False
                break
            val += wgt * r
            shot += wgt * math.sqrt(max(r, 0.0) / omega)
        if ok:
            values.append(val)
            shots.append(shot)
    if not values:
        raise AnalysisError(f"eta={eta} lies outside the measured annulus")
    v = np.asarray(values)
    angular = float(v.std())
    shot_err = float(np.mean(shots))
    return float(v.mean()), math.hypot(angular, shot_err)


@dataclass(frozen=True)
class FssEstimate:
    alpha: float
    spread: float
    used_radii: tuple[float, ...]
    degraded: bool
    per_radius: tuple[tuple[float, float], ...]   # (radius, alpha)


def fss_extrapolate(per_radius_fits: Sequence[tuple[float, FitResult]]) -> FssEstimate:
    """Average the exponent over the five largest subregion radii."""
    if not per_radius_fits:
        raise AnalysisError("no per-radius fits")
    ordered = sorted(per_radius_fits, key=lambda rf: rf[0])
    degraded = len(ordered) < 5
    used = ordered[-5:]
    alphas = np.array([f.alpha for _, f in used])
    return FssEstimate(alpha=float(alphas.mean()), spread=float(alphas.std()),
                       used_radii=tuple(r for r, _ in used), degraded=degraded,
                       per_radius=tuple((r, f.alpha) for r, f in ordered))


def predicted_exponent_1d(k: int) -> float:
    """Critical-percolation (CFT) prediction for the k-party decay exponent."""
    return 2.0 * k


def predicted_mi_exponent_1d(k: int) -> float:
    """Predicted k-party mutual-information exponent at the 1D critical point."""
    return k / 3.0


def check_exponent_relations(gme_fits: dict[int, FitResult],
                             mi_fits: Optional[dict[int, FitResult]] = None) -> dict:
    """Classical dominance, monotonicity and subadditivity at 2-sigma.

    A relation fails only when the inequality is violated by more than the
    combined 2-sigma of the fitted errors; saturation counts as a pass.
    """
    mi_fits = mi_fits or {}
    checks = []

    def add(relation, parties, margin, sigma):
        checks.append({
            "relation": relation,
            "parties": list(parties),
            "margin": margin,
            "tolerance": 2.0 * sigma,
            "passed": bool(margin >= -2.0 * sigma),
        })

    for k in sorted(set(gme_fits) & set(mi_fits)):
        g, m = gme_fits[k], mi_fits[k]
        add("classical_dominance", (k,), g.alpha - m.alpha,
            math.hypot(g.alpha_err, m.alpha_err))
    ks = sorted(gme_fits)
    for a, b in zip(ks, ks[1:]):
        add("monotonicity", (a, b), gme_fits[b].alpha - gme_fits[a].alpha,
            math.hypot(gme_fits[a].alpha_err, gme_fits[b].alpha_err))
    for i, k in enumerate(ks):
        for ell in ks[i:]:
            if k + ell in gme_fits:
                fk, fl, fkl = gme_fits[k], gme_fits[ell], gme_fits[k + ell]
                sigma = math.sqrt(fk.alpha_err ** 2 + fl.alpha_err ** 2
                                  + fkl.alpha_err ** 2)
                add("subadditivity", (k, ell, k + ell),
                    fk.alpha + fl.alpha - fkl.alpha, sigma)
    return {"checks": checks, "all_pass": all(c["passed"] for c in checks)}
