"""Numerical Mellin transform pair, resonance-expansion synthesis, and the
Fredholm-threshold arithmetic.

The transform is the Fourier transform in x = log(tau), so all quadrature runs
on a log-uniform grid where the trapezoid rule is spectrally accurate for
smooth pulses.  Expansions shift the inversion contour down and collect
residues at the poles of the spectral family; Jordan structure appears as
log(tau) powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .resonances import DiscretizedOperator, resolvent_apply, solve_resonances


class ContourDivergence(Exception):
    """The weighted integrand fails the tail test on the requested contour."""


class PoleOnContour(Exception):
    """A resonance sits on the shifted contour; choose a different weight."""


class DegenerateFit(Exception):
    """Too few samples in the fitting window."""


@dataclass
class TemporalSamples:
    tau_grid: np.ndarray
    values: np.ndarray          # shape (n_tau,) or (n_tau, n_space)

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.values = np.asarray(self.values)
        if np.any(self.tau_grid <= 0):
            raise ValueError("tau grid must be positive")
        x = np.log(self.tau_grid)
        dx = np.diff(x)
        if len(dx) and (dx.max() - dx.min()) > 1e-12 * max(1.0, abs(dx.mean())):
            raise ValueError("tau grid must be log-uniform")
        if dx.size and dx[0] >= 0:
            raise ValueError("tau grid must be strictly decreasing toward 0")

    @property
    def logtau(self):
        return np.log(self.tau_grid)


def default_tau_grid(n: int = 1024, tau_min: float = 1e-6,
                     tau_max: float = 1.0) -> np.ndarray:
    return np.geomspace(tau_max, tau_min, n)


@dataclass(frozen=True)
class ExpansionTerm:
    sigma_j: complex
    kappa: int
    a: np.ndarray               # coefficient; scalar stored as shape ()

    def evaluate(self, tau):
        tau = np.asarray(tau, dtype=float)
        x = np.log(tau)
        profile = np.exp(1j * self.sigma_j * x) * x ** self.kappa
        if np.ndim(self.a) == 0:
            return profile * complex(self.a)
        return np.outer(profile, self.a)


def evaluate_terms(terms: Iterable[ExpansionTerm], tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    out = None
    for t in terms:
        v = t.evaluate(tau)
        out = v if out is None else out + v
    return out


def mellin_transform(u: TemporalSamples, alpha: float,
                     sigma_re: np.ndarray, tail_tol: float = 1e-6) -> np.ndarray:
    """Quadrature of int tau^(-i sigma) u dtau/tau on the contour Im sigma = -alpha.

    Trapezoid in x = log tau; raises ContourDivergence when the weighted
    integrand has not decayed at the grid ends.
    """
    x = u.logtau
    w = np.exp(-alpha * x)      # |tau^(-i sigma)| on the contour, tail test only
    vals = u.values if u.values.ndim > 1 else u.values[:, None]
    weighted = w[:, None] * vals
    scale = np.max(np.abs(weighted))
    if scale > 0:
        ends = max(np.max(np.abs(weighted[0])), np.max(np.abs(weighted[-1])))
        if ends > tail_tol * scale and ends > tail_tol:
            raise ContourDivergence("weighted samples do not decay at the grid ends")
    sig = np.asarray(sigma_re, dtype=float) - 1j * alpha
    # integrate along increasing x; the complex sigma carries the weight
    order = np.argsort(x)
    xs = x[order]
    ph = np.exp(-1j * np.outer(sig, xs))
    f = vals[order]
    dx = xs[1] - xs[0]
    wts = np.full(len(xs), dx)
    wts[0] = wts[-1] = dx / 2
    out = ph @ (f * wts[:, None])
    return out[:, 0] if u.values.ndim == 1 else out


def inverse_mellin(v: np.ndarray, alpha: float, sigma_re: np.ndarray,
                   tau_grid: np.ndarray) -> TemporalSamples:
    """(2 pi)^-1 int tau^(i sigma) v dsigma along Im sigma = -alpha."""
    sig = np.asarray(sigma_re, dtype=float) - 1j * alpha
    v = np.asarray(v)
    vv = v if v.ndim > 1 else v[:, None]
    x = np.log(np.asarray(tau_grid, dtype=float))
    ph = np.exp(1j * np.outer(x, sig))
    ds = sigma_re[1] - sigma_re[0]
    wts = np.full(len(sig), ds)
    wts[0] = wts[-1] = ds / 2
    out = ph @ (vv * wts[:, None]) / (2.0 * math.pi)
    return TemporalSamples(tau_grid, out[:, 0] if v.ndim == 1 else out)


# ---------------------------------------------------------------------------
# residues and expansion
# ---------------------------------------------------------------------------

def laurent_coefficients(solve: Callable, pole: complex, n_orders: int = 3,
                         radius: float = 1e-2, nodes: int = 64) -> list:
    """c_{-m}, m = 1..n_orders, of sigma -> solve(sigma) at an isolated pole.

    Trapezoid on a circle (spectrally accurate); solve returns a vector.
    """
    th = 2.0 * math.pi * np.arange(nodes) / nodes
    zs = pole + radius * np.exp(1j * th)
    vals = np.array([np.atleast_1d(solve(z)) for z in zs])
    out = []
    for m in range(1, n_orders + 1):
        fac = (radius * np.exp(1j * th)) ** m
        out.append((fac[:, None] * vals).mean(axis=0))
    return out


def expand_family(solve: Callable, poles: Iterable[complex], ell_target: float,
                  tau_grid: Optional[np.ndarray] = None,
                  sigma_max: float = 40.0, n_sigma: int = 4096,
                  radius: float = 1e-2, nodes: int = 64,
                  jordan_tol: float = 1e-8, pole_margin: float = 1e-6):
    """Terms and remainder of the inverse transform shifted to Im sigma = -ell.

    `solve` maps sigma to the spatial vector of the transformed solution; poles
    with Im sigma > -ell_target contribute tau^(i sigma_j) log(tau)^kappa terms
    whose coefficients are Laurent data (a_{j,kappa} = i^kappa/kappa! c_{-kappa-1});
    the remainder is the inverse transform along the shifted contour.
    """
    if tau_grid is None:
        tau_grid = default_tau_grid()
    terms = []
    for pj in poles:
        if abs(pj.imag + ell_target) < pole_margin:
            raise PoleOnContour(f"pole {pj} sits on Im sigma = {-ell_target}")
        if pj.imag <= -ell_target:
            continue
        cs = laurent_coefficients(solve, pj, 3, radius, nodes)
        scale = max(np.max(np.abs(c)) for c in cs)
        if scale == 0:
            continue
        order = max((m for m in range(1, 4)
                     if np.max(np.abs(cs[m - 1])) > jordan_tol * scale), default=0)
        for kappa in range(order):
            # contour shift picks up -i times the residue of tau^{i sigma} u^
            coef = -1j * cs[kappa] * (1j) ** kappa / math.factorial(kappa)
            a = coef[0] if coef.size == 1 else coef
            terms.append(ExpansionTerm(pj, kappa, np.asarray(a)))
    sig_re = np.linspace(-sigma_max, sigma_max, n_sigma)
    vals = np.array([np.atleast_1d(solve(s - 1j * ell_target)) for s in sig_re])
    remainder = inverse_mellin(vals if vals.shape[1] > 1 else vals[:, 0],
                               ell_target, sig_re, tau_grid)
    return terms, remainder


def resonance_expand(f0: np.ndarray, op: DiscretizedOperator, ell_target: float,
                     phi_hat: Optional[Callable] = None,
                     region=(-8.0, 8.0, None, 0.5), **kwargs):
    """Expansion of the driven solution of the discretized family.

    f0 is the spatial forcing profile; phi_hat the Mellin transform of the
    temporal pulse (default: a log-Gaussian pulse centered at tau = e^-3).
    Pole locations come from the resonance solver; the transformed solution is
    sigma -> R(sigma)(phi_hat(sigma) f0).
    """
    if phi_hat is None:
        phi_hat = log_gaussian_pulse_hat()
    f0 = np.asarray(f0, dtype=complex)
    def solve(sigma):
        return resolvent_apply(op, sigma, phi_hat(sigma) * f0,
                               with_absorber=False)
    y0 = region[2] if region[2] is not None else -ell_target - 0.8
    rl = solve_resonances(op, region=(region[0], region[1], y0, region[3]))
    poles = [e.sigma for e in rl.converged(1e-6)]
    return expand_family(solve, poles, ell_target, **kwargs)


def log_gaussian_pulse_hat(x0: float = -3.0, width: float = 0.5) -> Callable:
    """Closed-form Mellin transform of exp(-(log tau - x0)^2 / (2 w^2))."""
    def hat(sigma):
        return width * math.sqrt(2.0 * math.pi) \
            * np.exp(-1j * sigma * x0) * np.exp(-sigma * sigma * width * width / 2.0)
    return hat


def log_gaussian_pulse(tau, x0: float = -3.0, width: float = 0.5):
    x = np.log(np.asarray(tau, dtype=float))
    return np.exp(-(x - x0) ** 2 / (2.0 * width * width))


# ---------------------------------------------------------------------------
# decay fitting and thresholds
# ---------------------------------------------------------------------------

def fit_decay(u: TemporalSamples, window=(1e-5, 1e-1)):
    """(rate, log_power, residual) from a least-squares fit of log ||u||.

    Model: log||u|| = rate * log(tau) + kappa * log(-log tau) + const; the
    log-log regressor is kept only when it clearly improves the fit.
    """
    tau = u.tau_grid
    mask = (tau >= window[0]) & (tau <= window[1])
    if np.count_nonzero(mask) < 8:
        raise DegenerateFit("need at least 8 samples in the window")
    x = np.log(tau[mask])
    vals = u.values[mask]
    mag = np.abs(vals) if vals.ndim == 1 else np.linalg.norm(vals, axis=1)
    good = mag > 0
    if np.count_nonzero(good) < 8:
        raise DegenerateFit("window is dominated by exact zeros")
    x, y = x[good], np.log(mag[good])
    A1 = np.vstack([x, np.ones_like(x)]).T
    c1, res1 = np.linalg.lstsq(A1, y, rcond=None)[:2]
    A2 = np.vstack([x, np.log(-x), np.ones_like(x)]).T
    c2, res2 = np.linalg.lstsq(A2, y, rcond=None)[:2]
    r1 = float(res1[0]) if len(res1) else 0.0
    r2 = float(res2[0]) if len(res2) else 0.0
    if r2 < 0.5 * r1 and abs(c2[1]) > 0.5:
        return float(c2[0]), int(round(c2[1])), r2
    return float(c1[0]), 0, r1


@dataclass(frozen=True)
class ThresholdReport:
    regime: str                 # propagate-away | propagate-toward | boundary
    Cs_member: bool
    beta_used: float
    threshold_s: float


def threshold(s: float, k: float, beta_data, im_sigma: float,
              tol: float = 1e-12) -> ThresholdReport:
    """Radial-point propagation regime and Fredholm half-plane membership.

    beta_data may be a HorizonData (the max/min selection between the two
    horizon constants applies, keyed on s >= 1/2) or a plain number.
    """
    if hasattr(beta_data, "beta_plus"):
        betas = [beta_data.beta_plus]
        if beta_data.beta_minus is not None:
            betas.append(beta_data.beta_minus)
        beta = max(betas) if s >= 0.5 else min(betas)
    else:
        beta = float(beta_data)
    s_star = (k - 1.0 - beta * im_sigma) / 2.0
    if abs(s - s_star) <= tol:
        regime = "boundary"
    elif s > s_star:
        regime = "propagate-away"
    else:
        regime = "propagate-toward"
    member = im_sigma > (k - 1.0 - 2.0 * s) / beta
    return ThresholdReport(regime, bool(member), beta, s_star)


# ---------------------------------------------------------------------------
# single correction pass for dilation-breaking perturbations
# ---------------------------------------------------------------------------

def correction_pass(op: DiscretizedOperator, P1: np.ndarray, f0: np.ndarray,
                    ell_target: float, phi_hat: Optional[Callable] = None,
                    **kwargs):
    """One iteration of the non-dilation-invariant expansion.

    For a family N(P) + tau P1, the zeroth solution u0 solves the normal family;
    multiplication by tau shifts the Mellin argument by i, so the correction
    forcing transforms to -P1 u0_hat(sigma + i) and its expansion extends the
    index set by the integer-shifted poles.  Only the first pass is performed.
    """
    if phi_hat is None:
        phi_hat = log_gaussian_pulse_hat()
    f0 = np.asarray(f0, dtype=complex)
    def solve0(sigma):
        return resolvent_apply(op, sigma, phi_hat(sigma) * f0, with_absorber=False)
    def solve1(sigma):
        shifted = solve0(sigma + 1j)
        return resolvent_apply(op, sigma, -(P1 @ shifted), with_absorber=False)
    rl = solve_resonances(op, region=(-8.0, 8.0, -ell_target - 1.5, 0.5))
    poles = [e.sigma for e in rl.converged(1e-6)]
    terms0, rem0 = expand_family(solve0, poles, ell_target, **kwargs)
    shifted_poles = poles + [p - 1j for p in poles]
    terms1, rem1 = expand_family(solve1, shifted_poles, ell_target, **kwargs)
    rem = TemporalSamples(rem0.tau_grid, rem0.values + rem1.values)
    return terms0 + terms1, rem


def save_time_series(u: TemporalSamples, path) -> None:
    """CSV dump: tau, Re u, Im u (one block of columns per spatial index)."""
    import csv
    vals = u.values if u.values.ndim > 1 else u.values[:, None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["tau"]
        for j in range(vals.shape[1]):
            head += [f"re_u{j}", f"im_u{j}"]
        w.writerow(head)
        for i, tau in enumerate(u.tau_grid):
            row = [f"{tau:.17g}"]
            for j in range(vals.shape[1]):
                row += [f"{vals[i, j].real:.17g}", f"{vals[i, j].imag:.17g}"]
            w.writerow(row)


def load_time_series(path) -> TemporalSamples:
    import csv
    taus, rows = [], []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        for row in rd:
            taus.append(float(row[0]))
            vals = [complex(float(row[k]), float(row[k + 1]))
                    for k in range(1, len(row), 2)]
            rows.append(vals)
    arr = np.array(rows)
    return TemporalSamples(np.array(taus), arr[:, 0] if arr.shape[1] == 1 else arr)
