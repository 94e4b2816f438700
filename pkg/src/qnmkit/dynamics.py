"""Bicharacteristic integration, radial-set rates, trapped-set location and
hyperbolicity checks on the fiber-compactified phase space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .spacetime import SpacetimeParams, NoHorizons, mu_tilde, horizon_roots, domain
from .symbols import (PhasePoint, CompactPhasePoint, kds_classical_symbol,
                      kds_angular_part, hamilton_field, ds_reduced_field,
                      ds_reduced_compact_field, ds_symbol_polar)


class StepFailure(Exception):
    """Integration tolerance unreachable; usually a near-singular chart."""


class NoRoot(Exception):
    """No trapped-set radius in the bracket; parameters outside the proven regime."""


class MultipleRoots(Exception):
    """More than one sign change of the trapping function; report, do not guess."""


class DegenerateLinearization(Exception):
    """Second derivative of the trapping function is not positive."""


@dataclass
class Bicharacteristic:
    samples: list                    # (flow parameter, CompactPhasePoint or PhasePoint)
    conserved_ledger: dict           # arrays: p, zeta, ptilde_scaled
    integrator_stats: tuple          # (steps, rejected steps, tolerance)
    exit_reason: str = "time"        # "time" | "domain" | "axis"

    def drift(self, key: str) -> float:
        vals = np.asarray(self.conserved_ledger[key])
        vals = vals[np.isfinite(vals)]
        if len(vals) == 0:
            return float("nan")
        ref = max(1.0, abs(vals[0]))
        return float(np.max(np.abs(vals - vals[0])) / ref)


@dataclass
class RadialSetReport:
    horizon_sign: int
    is_sink_or_source: str
    beta0_measured: float
    rho0_rate: float
    beta0_expected: float
    n_trajectories: int

    @property
    def beta0_rel_err(self) -> float:
        return abs(self.beta0_measured - self.beta0_expected) / self.beta0_expected


@dataclass(frozen=True)
class TrappedSetPoint:
    r_c: float
    zeta: float
    z: float
    xi_c: float
    f_residual: float


@dataclass(frozen=True)
class LinearizationSpectrum:
    eigenvalues: tuple
    matrix: np.ndarray


# ---------------------------------------------------------------------------
# flow integration
# ---------------------------------------------------------------------------

_AXIS_MARGIN = 1e-3


def _kds_affine_rhs(params, horizon_sign):
    def rhs(s, y):
        pt = PhasePoint(*y)
        return hamilton_field("kds_classical", params, pt, horizon_sign)
    return rhs

def _kds_compact_rhs(params, horizon_sign, sign_xi):
    def rhs(s, y):
        cpt = CompactPhasePoint((y[0], y[1], y[2]), max(y[3], 0.0), y[4], y[5], sign_xi)
        return hamilton_field("kds_classical", params, cpt, horizon_sign)
    return rhs


_NU_TO_COMPACT = 0.40    # |xi| = 2.5: leave the affine chart
_NU_TO_AFFINE = 0.55     # overlap band for the reverse handoff


def _events_kds(params, chart):
    r_lo, r_hi = domain(params)
    def exit_lo(s, y):
        return y[0] - r_lo
    def exit_hi(s, y):
        return r_hi - y[0]
    def axis(s, y):
        return min(y[1], math.pi - y[1]) - _AXIS_MARGIN
    if chart == "affine":
        def handoff(s, y):
            return 1.0 / max(abs(y[3]), 1e-300) - _NU_TO_COMPACT
        handoff.direction = -1.0
    else:
        def handoff(s, y):
            return y[3] - _NU_TO_AFFINE
        handoff.direction = +1.0
    for ev in (exit_lo, exit_hi, axis, handoff):
        ev.terminal = True
    return [exit_lo, exit_hi, axis, handoff]


def integrate_flow(symbol_id: str, params: SpacetimeParams, start, T: float,
                   tol: float = 1e-10, horizon_sign: int = +1,
                   chart: str = "auto", direction: float = +1.0,
                   n_samples: int = 200, z: float = 0.0,
                   h_ang: float = 0.0) -> Bicharacteristic:
    """Adaptive embedded Runge-Kutta integration of the (rescaled) Hamilton flow.

    For the Kerr family `start` is a PhasePoint or CompactPhasePoint; the
    compact chart integrates the rescaled field nu^(k-1) H_p.  `direction=-1`
    integrates the time-reversed field.  Leaving the r-domain terminates the
    trajectory normally with exit_reason="domain".
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")

    if symbol_id == "ds_reduced":
        return _integrate_ds_reduced(params, start, T, tol, direction, n_samples,
                                     z=z, h_ang=h_ang)

    if symbol_id != "kds_classical":
        raise ValueError(f"unsupported symbol id {symbol_id!r}")

    if chart == "auto":
        if isinstance(start, CompactPhasePoint):
            chart = "compact" if start.nu < 0.5 else "affine"
        else:
            chart = "compact" if abs(start.xi) > 2.0 else "affine"

    samples, p_led, z_led, pt_led, pts_led = [], [], [], [], []
    nsteps = nfev = 0
    reason = "time"
    s_done = 0.0
    if chart == "compact":
        cpt = start if isinstance(start, CompactPhasePoint) else start.compactify()
        state = [cpt.base[0], cpt.base[1], cpt.base[2], cpt.nu, cpt.eta_hat,
                 cpt.zeta_hat]
        sign_xi = cpt.sign_xi
    else:
        pt = start.affine() if isinstance(start, CompactPhasePoint) else start
        state = [pt.r, pt.theta, pt.phi, pt.xi, pt.eta, pt.zeta]
        sign_xi = 1 if pt.xi >= 0 else -1

    for _segment in range(64):
        rhs = (_kds_compact_rhs(params, horizon_sign, sign_xi)
               if chart == "compact" else _kds_affine_rhs(params, horizon_sign))
        f = rhs if direction > 0 else (lambda s, y: -np.asarray(rhs(s, y)))
        sol = solve_ivp(f, (0.0, T - s_done), state, method="DOP853", rtol=tol,
                        atol=tol * 1e-2, dense_output=True,
                        events=_events_kds(params, chart))
        if sol.status < 0:
            raise StepFailure(sol.message)
        seg_len = sol.t[-1]
        k_samp = max(4, int(n_samples * seg_len / max(T, 1e-30)))
        ss = np.linspace(0.0, seg_len, k_samp)
        Y = sol.sol(ss)
        for k, s in enumerate(ss):
            y = Y[:, k]
            sg = direction * (s_done + s)
            if chart == "compact":
                nu = max(y[3], 0.0)
                cpt = CompactPhasePoint((y[0], y[1], y[2]), nu, y[4], y[5], sign_xi)
                samples.append((float(sg), cpt))
                scaled = PhasePoint(y[0], y[1], y[2], float(sign_xi), y[4], y[5])
                p_hat = kds_classical_symbol(params, 0.0, scaled, horizon_sign)
                ptil_hat = kds_angular_part(params, scaled)
                # actual conserved quantities where the affine chart is usable;
                # nu^2 ptilde always stays finite, up to fiber infinity.  The
                # 1/nu^2 reconstruction amplifies absolute integrator noise, so
                # it is only trusted on the outer half of the compact chart.
                ok = nu > 1e-1
                p_led.append(p_hat / nu ** 2 if ok else float("nan"))
                z_led.append(y[5] / nu if ok else float("nan"))
                pt_led.append(ptil_hat / nu ** 2 if ok else float("nan"))
                pts_led.append(ptil_hat)
            else:
                pt = PhasePoint(*y)
                samples.append((float(sg),
                                pt.compactify() if abs(pt.xi) > 1e-8 else pt))
                ptil = kds_angular_part(params, pt)
                p_led.append(kds_classical_symbol(params, 0.0, pt, horizon_sign))
                z_led.append(pt.zeta)
                pt_led.append(ptil)
                pts_led.append(ptil / pt.xi ** 2 if abs(pt.xi) > 1e-8
                               else float("nan"))
        nsteps += len(sol.t) - 1
        nfev += sol.nfev
        s_done += seg_len
        if sol.status == 0:
            reason = "time"
            break
        t_ev = sol.t_events
        if len(t_ev[0]) or len(t_ev[1]):
            reason = "domain"
            break
        if len(t_ev[2]):
            reason = "axis"
            break
        # chart handoff in the overlap band
        y = sol.y[:, -1]
        if chart == "affine":
            pt = PhasePoint(*y)
            c = pt.compactify()
            state = [c.base[0], c.base[1], c.base[2], c.nu, c.eta_hat, c.zeta_hat]
            sign_xi = c.sign_xi
            chart = "compact"
        else:
            c = CompactPhasePoint((y[0], y[1], y[2]), y[3], y[4], y[5], sign_xi)
            pt = c.affine()
            state = [pt.r, pt.theta, pt.phi, pt.xi, pt.eta, pt.zeta]
            chart = "affine"
    rejected = max(0, round((nfev - 1) / 12) - nsteps)
    ledger = {"p": np.array(p_led), "zeta": np.array(z_led),
              "ptilde": np.array(pt_led), "ptilde_scaled": np.array(pts_led)}
    return Bicharacteristic(samples, ledger, (nsteps, rejected, tol), reason)


def _integrate_ds_reduced(params, start, T, tol, direction, n_samples, z, h_ang):
    """Reduced static-patch flow; start = (mu, xi) affine or (mu, nu, eta_hat, sign_xi)."""
    if len(start) == 2:
        rhs0 = lambda s, y: ds_reduced_field(y[0], y[1], h_ang, z)
        y0 = list(start)
        compact = False
    else:
        mu0, nu0, ehat0, sxi = start
        rhs0 = lambda s, y: ds_reduced_compact_field(y[0], y[1], y[2], sxi, z)
        y0 = [mu0, nu0, ehat0]
        compact = True
    f = rhs0 if direction > 0 else (lambda s, y: -np.asarray(rhs0(s, y)))
    def exit_ev(s, y):
        return 0.98 - abs(y[0] - 0.3)   # keep mu in (-0.68, 1.28)
    exit_ev.terminal = True
    sol = solve_ivp(f, (0.0, T), y0, method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True, events=[exit_ev])
    if sol.status < 0:
        raise StepFailure(sol.message)
    ss = np.linspace(0.0, sol.t[-1], n_samples)
    Y = sol.sol(ss)
    samples, p_led = [], []
    for k, s in enumerate(ss):
        y = Y[:, k]
        samples.append((float(s * direction), tuple(y)))
        if compact:
            p_led.append(-4.0 * (1 - y[0]) * y[0] - y[2] ** 2 / (1 - y[0]))
        else:
            p_led.append(ds_symbol_polar(4, y[0], y[1], h_ang ** 2, z).real)
    nsteps = len(sol.t) - 1
    ledger = {"p": np.array(p_led), "zeta": np.zeros(len(ss)),
              "ptilde": np.array(p_led), "ptilde_scaled": np.array(p_led)}
    return Bicharacteristic(samples, ledger,
                            (nsteps, max(0, round((sol.nfev - 1) / 12) - nsteps), tol),
                            "domain" if sol.status == 1 else "time")


def _fit_log_rate(s, vals, tail: float = 0.5):
    """Slope of log(vals) vs s over the final `tail` fraction of the samples."""
    s = np.asarray(s)
    vals = np.asarray(vals)
    keep = (vals > 0) & np.isfinite(vals)
    s, vals = s[keep], vals[keep]
    k = max(4, int(len(s) * tail))
    s, vals = s[-k:], np.log(vals[-k:])
    A = np.vstack([s, np.ones_like(s)]).T
    slope, _ = np.linalg.lstsq(A, vals, rcond=None)[0]
    return slope


def classify_radial(params: SpacetimeParams, horizon_sign: int = +1,
                    n_traj: int = 20, eps: float = 1e-3, T: float = 4.0,
                    tol: float = 1e-11, seed: int = 0,
                    reversed_branch: bool = False) -> RadialSetReport:
    """Measure the attraction rate at the radial set from a bundle of trajectories.

    Launches n_traj trajectories from an eps-shell around the sink L_+ over the
    requested horizon, fits the exponential decay of rho~ = nu and of the
    quadratic defining function rho_0, and compares with the surface-gravity
    constant (or 4 in the static-patch normalization).
    """
    rng = np.random.default_rng(seed)
    if params.model == "deSitter":
        sxi = +1 if not reversed_branch else -1
        expected = 4.0
        rates, rho0_rates = [], []
        for _ in range(max(n_traj, 20)):
            start = (eps * rng.uniform(-1, 1), eps * rng.uniform(0.5, 1),
                     eps * rng.uniform(-1, 1), sxi)
            direction = +1.0 if not reversed_branch else -1.0
            bc = _integrate_ds_reduced(params, start, T, tol, direction, 400,
                                       z=0.0, h_ang=0.0)
            s = np.array([t for t, _ in bc.samples])
            nu = np.array([abs(y[1]) for _, y in bc.samples])
            rho0 = np.array([y[2] ** 2 + (4 * (1 - y[0]) * y[0] + y[2] ** 2 /
                                          (1 - y[0])) ** 2 for _, y in bc.samples])
            rates.append(-_fit_log_rate(np.abs(s), nu))
            rho0_rates.append(-_fit_log_rate(np.abs(s), rho0))
        kind = "sink" if not reversed_branch else "source"
        return RadialSetReport(horizon_sign, kind, float(np.mean(rates)),
                               float(np.mean(rho0_rates)), expected, n_traj)

    hd = horizon_roots(params)
    r_h = hd.r_plus if horizon_sign > 0 else hd.r_minus
    if r_h is None:
        raise NoHorizons("requested horizon does not exist")
    gam = hd.gamma_plus if horizon_sign > 0 else hd.gamma_minus
    sxi = -horizon_sign if not reversed_branch else horizon_sign
    rates, rho0_rates = [], []
    gamma = params.gamma
    for _ in range(max(n_traj, 20)):
        theta = rng.uniform(0.6, math.pi - 0.6)
        cpt = CompactPhasePoint(
            (r_h + eps * rng.uniform(-1, 1), theta, 0.0),
            eps * rng.uniform(0.5, 1.0),
            eps * rng.uniform(-1, 1), eps * rng.uniform(-1, 1), sxi)
        bc = integrate_flow("kds_classical", params, cpt, T, tol=tol,
                            horizon_sign=horizon_sign, chart="compact")
        s = np.array([abs(t) for t, _ in bc.samples])
        nu = np.array([p.nu for _, p in bc.samples])
        rho0 = []
        for _, p in bc.samples:
            kap = 1.0 + gamma * math.cos(p.base[1]) ** 2
            st2 = math.sin(p.base[1]) ** 2
            ptil_hat = kap * p.eta_hat ** 2 + (1 + gamma) ** 2 * p.zeta_hat ** 2 / (kap * st2)
            scaled = PhasePoint(p.base[0], p.base[1], p.base[2], float(p.sign_xi),
                                p.eta_hat, p.zeta_hat)
            p_hat = kds_classical_symbol(params, 0.0, scaled, horizon_sign)
            rho0.append(ptil_hat + p_hat ** 2)
        rates.append(-_fit_log_rate(s, nu))
        rho0_rates.append(-_fit_log_rate(s, np.array(rho0)))
    kind = "sink" if not reversed_branch else "source"
    meas = float(np.mean(rates))
    if reversed_branch:
        meas = -meas  # growth along the forward flow at the source
    return RadialSetReport(horizon_sign, kind, meas,
                           float(np.mean(rho0_rates)), gam, n_traj)


# ---------------------------------------------------------------------------
# trapped set
# ---------------------------------------------------------------------------

def trapping_function(params: SpacetimeParams, r, zeta: float, z: float):
    """f(r) = W mu~' - 4 r mu~ z with W = (r^2+alpha^2) z - alpha zeta."""
    mt, dmt, _ = mu_tilde(params, r)
    W = (np.asarray(r) ** 2 + params.alpha ** 2) * z - params.alpha * zeta
    return W * dmt - 4.0 * np.asarray(r) * mt * z


def find_trapped_set(params: SpacetimeParams, zeta: float = 0.0,
                     z: float = 1.0, grid_size: int = 2048) -> TrappedSetPoint:
    """Solve f(r) = 0 on (r_-, r_+) by bracketed root-finding.

    Uniqueness is asserted by counting sign changes on a fine grid; a missing
    root raises NoRoot and several raise MultipleRoots.
    """
    if z == 0:
        raise ValueError("z must be nonzero")
    hd = horizon_roots(params)
    if hd.r_minus is None:
        raise NoRoot("no inner horizon; the static patch has no trapping")
    a, b = hd.r_minus * (1 + 1e-9), hd.r_plus * (1 - 1e-9)
    rr = np.linspace(a, b, grid_size)
    W = (rr ** 2 + params.alpha ** 2) * z - params.alpha * zeta
    if np.any(W == 0) or (W[0] < 0) != (W[-1] < 0):
        raise ValueError("(r^2+alpha^2) z - alpha zeta changes sign on the bracket")
    fv = trapping_function(params, rr, zeta, z)
    flips = np.nonzero(np.sign(fv[:-1]) * np.sign(fv[1:]) < 0)[0]
    if len(flips) == 0:
        raise NoRoot("no sign change of the trapping function in (r_-, r_+)")
    if len(flips) > 1:
        raise MultipleRoots(f"{len(flips)} sign changes found")
    i = flips[0]
    r_c = brentq(lambda r: trapping_function(params, r, zeta, z),
                 rr[i], rr[i + 1], xtol=1e-15, rtol=8.9e-16)
    mt = mu_tilde(params, r_c)[0]
    Wc = (r_c ** 2 + params.alpha ** 2) * z - params.alpha * zeta
    xi_c = -(1.0 + params.gamma) * Wc / mt
    return TrappedSetPoint(float(r_c), zeta, z, float(xi_c),
                           abs(float(trapping_function(params, r_c, zeta, z))))


def _Fpp(params: SpacetimeParams, tsp: TrappedSetPoint) -> float:
    """Second derivative of F = W^2/mu~ at the critical radius."""
    r, z, zeta = tsp.r_c, tsp.z, tsp.zeta
    mt, dmt, d2mt = mu_tilde(params, r)
    W = (r * r + params.alpha ** 2) * z - params.alpha * zeta
    fprime = W * d2mt - 4.0 * mt * z - 2.0 * r * z * dmt
    return -W * fprime / mt ** 2


def trapping_linearization(params: SpacetimeParams,
                           tsp: TrappedSetPoint) -> LinearizationSpectrum:
    """2x2 linearization of the reduced flow at the trapped radius.

    In the variables (r - r_c, mu~ xi + (1+gamma) W) the matrix is
    [[0, -mu~ (1+gamma)^2 F''], [-2, 0]] with eigenvalues
    +-sqrt(2 mu~ (1+gamma)^2 F''); hyperbolic saddle when F'' > 0.
    """
    mt = mu_tilde(params, tsp.r_c)[0]
    gp1 = 1.0 + params.gamma
    Fpp = _Fpp(params, tsp)
    if Fpp <= 0:
        raise DegenerateLinearization(f"F'' = {Fpp} <= 0 at the trapped radius")
    M = np.array([[0.0, -mt * gp1 ** 2 * Fpp], [-2.0, 0.0]])
    lam = math.sqrt(2.0 * mt * gp1 ** 2 * Fpp)
    return LinearizationSpectrum((lam, -lam), M)


def kds_reduced_semiclassical_field(params: SpacetimeParams, r, xi,
                                    zeta: float, z: float):
    """Autonomous (r, xi) subsystem of the semiclassical flow at fixed (zeta, z)."""
    mt, dmt, _ = mu_tilde(params, r)
    gp1 = 1.0 + params.gamma
    W = (r * r + params.alpha ** 2) * z - params.alpha * zeta
    dr = -2.0 * (mt * xi + gp1 * W)
    dxi = dmt * xi ** 2 + 4.0 * r * gp1 * z * xi
    return np.array([dr, dxi])


def trapping_linearization_fd(params: SpacetimeParams, tsp: TrappedSetPoint,
                              h: float = 1e-6):
    """Eigenvalues of the finite-difference Jacobian of the integrated reduced flow."""
    x0 = np.array([tsp.r_c, tsp.xi_c])
    J = np.zeros((2, 2))
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = h * max(1.0, abs(x0[j]))
        fp = kds_reduced_semiclassical_field(params, *(x0 + dx), tsp.zeta, tsp.z)
        fm = kds_reduced_semiclassical_field(params, *(x0 - dx), tsp.zeta, tsp.z)
        J[:, j] = (fp - fm) / (2 * dx[j])
    return np.linalg.eigvals(J)


# ---------------------------------------------------------------------------
# escape-function scans
# ---------------------------------------------------------------------------

@dataclass
class EscapeScanReport:
    n_checked: int
    n_violations: int
    worst: Optional[tuple]
    min_abs_Hr_beyond: float        # min |H r| on the char set in mu~ <= 0
    details: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def escape_scan(params: SpacetimeParams, zeta_over_z, z: float = 1.0,
                n_r: int = 50, n_theta: int = 20,
                excl_frac: float = 1e-2) -> EscapeScanReport:
    """Verify the convexity structure of r along the semiclassical flow.

    (a) on the characteristic set over mu~ <= 0 the r-derivative along the flow
    has no zeros; (b) in mu~ > 0 each zero away from the trapped radius has
    d^2r/ds^2 with the sign of r - r_c.  zeta_over_z is an iterable of zeta/z
    ratios to scan.
    """
    hd = horizon_roots(params)
    gp1 = 1.0 + params.gamma
    r_lo, r_hi = domain(params)
    n_checked = n_viol = 0
    worst = None
    min_Hr = np.inf
    details = []
    excl = excl_frac * (hd.r_plus - hd.r_minus)
    for ratio in np.atleast_1d(zeta_over_z):
        zeta = ratio * z
        try:
            r_c = find_trapped_set(params, zeta, z).r_c
        except (NoRoot, MultipleRoots, ValueError):
            r_c = None
        for r in np.linspace(r_lo * 1.001, r_hi * 0.999, n_r):
            mt, dmt, _ = mu_tilde(params, r)
            W = (r * r + params.alpha ** 2) * z - params.alpha * zeta
            if mt <= 0:
                # (a): on-shell |H r| must be bounded away from zero
                for theta in np.linspace(0.3, math.pi - 0.3, n_theta):
                    kap = 1.0 + params.gamma * math.cos(theta) ** 2
                    st2 = math.sin(theta) ** 2
                    ang = gp1 ** 2 * (zeta - params.alpha * st2 * z) ** 2 / (kap * st2)
                    # solve p = 0 for xi with eta = 0 (eta only deepens p):
                    # -mt xi^2 - 2 gp1 W xi - ang = 0
                    if abs(mt) < 1e-14:
                        if W == 0:
                            continue
                        xis = [-ang / (2.0 * gp1 * W)]
                    else:
                        aa, bb, cc = -mt, -2.0 * gp1 * W, -ang
                        disc = bb * bb - 4 * aa * cc
                        if disc < 0:
                            continue
                        xis = [(-bb + sgn * math.sqrt(disc)) / (2 * aa)
                               for sgn in (+1, -1)]
                    for xi in xis:
                        Hr = -2.0 * (mt * xi + gp1 * W)
                        n_checked += 1
                        min_Hr = min(min_Hr, abs(Hr))
                        if abs(Hr) < 1e-12:
                            n_viol += 1
                            worst = ("beyond", r, theta, xi)
            else:
                # (b): the on-shell zero of H r sits at xi* = -gp1 W / mt
                xi_star = -gp1 * W / mt
                ptil_req = mt * xi_star ** 2
                found = False
                for theta in np.linspace(0.3, math.pi - 0.3, n_theta):
                    kap = 1.0 + params.gamma * math.cos(theta) ** 2
                    st2 = math.sin(theta) ** 2
                    ang = gp1 ** 2 * (zeta - params.alpha * st2 * z) ** 2 / (kap * st2)
                    if ptil_req >= ang:
                        found = True
                        break
                if not found:
                    continue
                if r_c is None or abs(r - r_c) <= excl:
                    continue
                mtt, dmtt, _ = mu_tilde(params, r)
                H2r = -2.0 * mt * (dmtt * xi_star ** 2 + 4.0 * r * gp1 * z * xi_star)
                n_checked += 1
                if H2r * (r - r_c) <= 0:
                    n_viol += 1
                    worst = ("interior", r, H2r, r - r_c)
                    details.append(worst)
    return EscapeScanReport(n_checked, n_viol, worst, float(min_Hr), details)


def ah_convexity_scan(n_mu: int = 60, n_xi: int = 20, z: float = 1.0,
                      n: int = 4) -> EscapeScanReport:
    """Static-patch convexity: H mu = 0 and p = 0 and 0 < mu < 1 imply H^2 mu < 0."""
    n_checked = n_viol = 0
    worst = None
    for mu in np.linspace(0.02, 0.98, n_mu):
        r2 = 1.0 - mu
        xi = z / (2.0 * mu)           # H mu = 4 r^2 (-2 mu xi + z) = 0
        eta_sq = r2 * (r2 * z * z / mu + z * z)
        p = ds_symbol_polar(n, mu, xi, eta_sq, z)
        assert abs(p) < 1e-9 * max(1.0, xi * xi)
        dp_dmu = -4.0 * (1 - 2 * mu) * xi ** 2 - 4.0 * z * xi - eta_sq / r2 ** 2
        H2mu = 8.0 * r2 * mu * dp_dmu
        n_checked += 1
        if not H2mu < 0:
            n_viol += 1
            worst = ("ah", mu, H2mu)
    return EscapeScanReport(n_checked, n_viol, worst, np.inf)


def mild_trap_function_check(F: Callable, params: SpacetimeParams,
                             zeta: float = 0.0, z: float = 1.0,
                             n_r: int = 120, n_xi: int = 120,
                             band: tuple = (1.05, 1.95),
                             zero_tol: float = 5e-3):
    """Grid check of the trapping-order condition H F = 0 => H^2 F < 0.

    F is a callable of (r, xi) on the reduced phase plane; the check runs over
    on-shell grid points whose F-value lies in the open band (1, 2).  Returns
    (flag, worst_point) where flag is False when a near-zero of H F has
    H^2 F >= 0.
    """
    hd = horizon_roots(params)
    gp1 = 1.0 + params.gamma
    rs = np.linspace(hd.r_minus * 1.02, hd.r_plus * 0.98, n_r)
    def HF(r, xi):
        v = kds_reduced_semiclassical_field(params, r, xi, zeta, z)
        h = 1e-6 * max(1.0, abs(r), abs(xi))
        Fr = (F(r + h, xi) - F(r - h, xi)) / (2 * h)
        Fx = (F(r, xi + h) - F(r, xi - h)) / (2 * h)
        return Fr * v[0] + Fx * v[1]
    worst = None
    ok = True
    scale = 0.0
    pts = []
    for r in rs:
        mt = mu_tilde(params, r)[0]
        if mt <= 0:
            continue
        W = (r * r + params.alpha ** 2) * z - params.alpha * zeta
        xi_c = -gp1 * W / mt
        for xi in np.linspace(xi_c - 3.0, xi_c + 3.0, n_xi):
            # on the characteristic set the angular part absorbs
            # -mt xi^2 - 2 gp1 W xi when nonnegative
            if -mt * xi ** 2 - 2 * gp1 * W * xi < 0:
                continue
            val = F(r, xi)
            if not band[0] <= val <= band[1]:
                continue
            hf = HF(r, xi)
            pts.append((r, xi, hf))
            scale = max(scale, abs(hf))
    for r, xi, hf in pts:
        if abs(hf) < zero_tol * max(scale, 1e-30):
            h = 1e-5 * max(1.0, abs(r), abs(xi))
            v = kds_reduced_semiclassical_field(params, r, xi, zeta, z)
            nv = np.linalg.norm(v)
            if nv == 0:
                continue
            u = v / nv
            hf_p = HF(r + h * u[0], xi + h * u[1])
            hf_m = HF(r - h * u[0], xi - h * u[1])
            h2f = (hf_p - hf_m) / (2 * h) * nv
            if h2f >= 0:
                ok = False
                if worst is None or h2f > worst[2]:
                    worst = (r, xi, h2f)
    return ok, worst
