"""Complex absorbing symbols, the branch-cut root, and the elliptic extension
of the semiclassical symbol beyond the physical region."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .spacetime import SpacetimeParams, mu_tilde


class BranchCut(Exception):
    """Root argument hit the cut; the spectral parameter left the holomorphy domain."""


# --- smooth cutoffs built from chi0(s) = exp(-1/s) --------------------------

def chi0(s):
    """exp(-1/s) for s > 0, zero otherwise; satisfies s^2 chi0' = chi0 exactly."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return out if out.ndim else float(out)


def dchi0(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0))
                       / np.where(s > 0, s, 1.0) ** 2, 0.0)
    return out if out.ndim else float(out)


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a, b = chi0(t), chi0(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def smooth_step_d(t):
    t = np.asarray(t, dtype=float)
    a, b = chi0(t), chi0(1.0 - t)
    da, db = dchi0(t), -dchi0(1.0 - t)
    den = (a + b) ** 2
    with np.errstate(invalid="ignore"):
        out = np.where(den > 0, (da * b - a * db) / np.where(den > 0, den, 1.0), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AbsorbingSpec:
    """Cutoff and branch data for the absorbing symbol.

    The absorption window chi is supported in (mu1, mu0) with plateau value
    digamma_scale on [mu1p, mu0p]; the partition chi1 + chi2 = 1 blends across
    the same inner interval (chi1 = 1 above mu0p, chi2 = 1 below mu1p).
    """

    mu0: float = -0.10          # upper edge of the absorption window
    mu1: float = -0.55          # lower edge
    mu0p: float = -0.20         # plateau upper edge / chi1 saturation
    mu1p: float = -0.45         # plateau lower edge / chi2 saturation
    j: int = 1
    C: float = 5.0
    digamma_scale: float = 1.0

    def __post_init__(self):
        if not (self.mu1 < self.mu1p < self.mu0p < self.mu0):
            raise ValueError("breakpoints must satisfy mu1 < mu1p < mu0p < mu0")
        if self.j < 1 or self.C < 0:
            raise ValueError("need j >= 1 and C >= 0")

    def chi(self, mu):
        up = smooth_step((np.asarray(mu) - self.mu1) / (self.mu1p - self.mu1))
        dn = smooth_step((self.mu0 - np.asarray(mu)) / (self.mu0 - self.mu0p))
        return self.digamma_scale * up * dn

    def dchi(self, mu):
        mu = np.asarray(mu, dtype=float)
        w1, w2 = self.mu1p - self.mu1, self.mu0 - self.mu0p
        up = smooth_step((mu - self.mu1) / w1)
        dn = smooth_step((self.mu0 - mu) / w2)
        dup = smooth_step_d((mu - self.mu1) / w1) / w1
        ddn = -smooth_step_d((self.mu0 - mu) / w2) / w2
        return self.digamma_scale * (dup * dn + up * ddn)

    def chi1(self, mu):
        return smooth_step((np.asarray(mu) - self.mu1p) / (self.mu0p - self.mu1p))

    def chi2(self, mu):
        return 1.0 - self.chi1(mu)

    def sqrt_chi_pair(self, mu):
        """sqrt(-chi chi') where chi decays; the bump is built so this is smooth."""
        val = -self.chi(mu) * self.dchi(mu)
        return np.sqrt(np.maximum(val, 0.0))


def f_z(varpi_norm, z, j: int = 1, C: float = 0.0):
    """Principal 2j-th root of |varpi|^2j + z^2j + C^2j with Re f_z >= 0.

    Raises BranchCut when the argument lands on (-inf, 0], signalling z outside
    the slit holomorphy domain for this (j, C).
    """
    w = np.asarray(varpi_norm, dtype=float) ** (2 * j) + np.asarray(z) ** (2 * j) \
        + C ** (2 * j)
    w = np.asarray(w, dtype=complex)
    on_cut = (w.real <= 0) & (np.abs(w.imag) <= 1e-300 * np.maximum(1, np.abs(w.real)))
    if np.any(on_cut):
        raise BranchCut("argument of the 2j-th root hit (-inf, 0]")
    out = w ** (1.0 / (2 * j))
    return complex(out) if out.ndim == 0 else out


def p_hat(varpi_norm, z, j: int = 1):
    """The elliptic stand-in (|varpi|^2j + z^2j)^(1/j) = f_z^2 (C = 0)."""
    return f_z(varpi_norm, z, j, 0.0) ** 2


# --- metric pairings --------------------------------------------------------

def pairing_ds(mu, xi, z):
    """<varpi + z dtau/tau, dtau/tau>_G for the static-patch model: 2 r^2 xi + z."""
    return 2.0 * (1.0 - np.asarray(mu)) * np.asarray(xi) + z


def pairing_kds(params: SpacetimeParams, r, theta, xi, zeta, z, c,
                horizon_sign: int = +1):
    """Half the z-derivative of the full symbol, i.e. the metric pairing with dtau/tau."""
    s = 1.0 if horizon_sign > 0 else -1.0
    gamma = params.gamma
    gp1 = 1.0 + gamma
    a = params.alpha
    mt = mu_tilde(params, r)[0]
    kappa = 1.0 + gamma * math.cos(theta) ** 2
    st2 = math.sin(theta) ** 2
    cv = float(c(r)) if callable(c) else float(c)
    X = xi + s * cv * z
    R2 = r * r + a * a
    return (-mt * X * s * cv - s * gp1 * R2 * (X + z * s * cv)
            + s * gp1 * a * s * cv * zeta + gp1 ** 2 * a * (zeta - a * st2 * z) / kappa)


def timelike_norm_ds():
    """<dtau/tau, dtau/tau>_G = 1 for the static-patch model."""
    return 1.0


# --- absorbing symbol and extension -----------------------------------------

def q_semiclassical(model: str, params: Optional[SpacetimeParams], mu, xi, z,
                    spec: AbsorbingSpec, eta_sq=0.0, kds_point=None, c=0.0):
    """q_{h,z} = -chi f_z <varpi + z dtau/tau, dtau/tau>_G.

    For the static-patch model mu, xi are the horizon-chart coordinates and
    |varpi| uses the flat fiber norm sqrt(xi^2 + eta_sq).  For the rotating
    family pass kds_point = (r, theta, xi, eta, zeta) and the shift function c;
    chi is then evaluated in mu~.
    """
    if model in ("deSitter", "minkowski"):
        norm = np.sqrt(np.asarray(xi, dtype=float) ** 2 + np.asarray(eta_sq))
        f = f_z(norm, z, spec.j, spec.C)
        return -spec.chi(mu) * f * pairing_ds(mu, xi, z)
    if model in ("KerrDeSitter", "dSSchwarzschild"):
        r, theta, xi_, eta, zeta = kds_point
        mt = mu_tilde(params, r)[0]
        norm = math.sqrt(xi_ ** 2 + eta ** 2 + zeta ** 2)
        f = f_z(norm, z, spec.j, spec.C)
        return -spec.chi(mt) * f * pairing_kds(params, r, theta, xi_, zeta, z, c)
    raise ValueError(f"unknown model {model!r}")


def extend_p(model: str, params: Optional[SpacetimeParams], mu, xi, z,
             spec: AbsorbingSpec, eta_sq=0.0, n: int = 4):
    """chi1 p - chi2 p_hat: the symbol continued ellipticly below the physical region."""
    from .symbols import ds_symbol_polar
    if model not in ("deSitter", "minkowski"):
        raise ValueError("extension is implemented for the radial models")
    p = ds_symbol_polar(n, float(mu), float(xi), float(eta_sq), z)
    norm = math.sqrt(float(xi) ** 2 + float(eta_sq))
    return spec.chi1(mu) * p - spec.chi2(mu) * p_hat(norm, z, spec.j)


@dataclass
class EllipticityReport:
    region_id: str
    min_abs: float
    sign_violations: int
    n_points: int
    details: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.min_abs > 0 and self.sign_violations == 0


def ellipticity_scan(model: str, params: Optional[SpacetimeParams],
                     spec: AbsorbingSpec, z_set: Iterable[complex],
                     mu_range=(-0.6, 1.0), n_mu: int = 64, n_xi: int = 64,
                     xi_max: float = 6.0, n_eta: int = 8) -> EllipticityReport:
    """Scan |p~ - i q| over the collar/extension region and the q sign contract.

    For each real z the sign of q must be constant on each half of the
    characteristic set (determined by the pairing sign); for Im z > 0 the
    interior symbol must obey min |p_{h,z}| > (Im z)^2.
    """
    mus = np.linspace(mu_range[0], mu_range[1] - 1e-9, n_mu)
    xis = np.linspace(-xi_max, xi_max, n_xi)
    etas = np.linspace(0.0, xi_max, n_eta) ** 2
    min_abs_collar = np.inf
    min_int = np.inf
    viol = 0
    npts = 0
    for z in np.atleast_1d(z_set):
        for mu in mus:
            ch, c2 = spec.chi(mu), spec.chi2(mu)
            in_collar = (ch > 1e-12) or (c2 > 1e-12)
            for xi in xis:
                for e2 in etas:
                    npts += 1
                    q = q_semiclassical(model, params, mu, xi, z, spec, e2)
                    pt = extend_p(model, params, mu, xi, z, spec, e2)
                    if in_collar:
                        min_abs_collar = min(min_abs_collar, abs(pt - 1j * q))
                    if z.imag == 0 and z.real != 0:
                        pair = pairing_ds(mu, xi, z.real)
                        # contract: -+ q >= 0 on Sigma_+-, i.e. q * pair <= 0
                        if q.real * pair > 1e-12:
                            viol += 1
                    if z.imag >= 0.5 and mu > spec.mu0 / 2:
                        from .symbols import ds_symbol_polar
                        pval = ds_symbol_polar(4, float(mu), float(xi), float(e2), z)
                        min_int = min(min_int, abs(pval))
    det = [("interior_min_abs", float(min_int))]
    return EllipticityReport("collar+interior", float(min_abs_collar), viol,
                             npts, det)


def choose_digamma(model: str, spec: AbsorbingSpec, z: complex,
                   mu_grid=None, xi_max: float = 6.0, margin: float = 2.0,
                   max_doublings: int = 40) -> float:
    """Doubling search for the plateau height making the seam term dominated.

    Ensures 2 |chi2| |Im f_z| |<beta, dtau/tau>| < (F/2) (Im z)^2 <dtau/tau, dtau/tau>^2
    with the requested margin on the scan grid (static-patch pairing).
    """
    if z.imag <= 0:
        raise ValueError("the seam condition is about Im z > 0")
    if mu_grid is None:
        mu_grid = np.linspace(spec.mu1, spec.mu0, 256)
    xis = np.linspace(-xi_max, xi_max, 129)
    F = max(spec.digamma_scale, 1e-6)
    tt = timelike_norm_ds()
    for _ in range(max_doublings):
        ok = True
        for mu in mu_grid:
            c2 = spec.chi2(mu)
            if c2 < 1e-14:
                continue
            for xi in xis:
                f = f_z(abs(xi), z, spec.j, spec.C)
                beta_pair = pairing_ds(mu, xi, z.real)
                lhs = 2.0 * c2 * abs(f.imag) * abs(beta_pair)
                rhs = 0.5 * F * (z.imag ** 2) * tt ** 2
                if margin * lhs >= rhs:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return F
        F *= 2.0
    raise RuntimeError("doubling search for the plateau height did not terminate")


def load_absorbing_spec(path) -> AbsorbingSpec:
    """Read an absorbing-spec file (flat key=value text)."""
    kv = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed spec line: {line!r}")
            k, v = (t.strip() for t in line.split("=", 1))
            kv[k] = v
    known = {"mu0", "mu1", "mu0p", "mu1p", "j", "C", "digamma_scale"}
    unknown = set(kv) - known
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    args = {k: (int(v) if k == "j" else float(v)) for k, v in kv.items()}
    return AbsorbingSpec(**args)


def report_to_json(rep: EllipticityReport) -> str:
    import json
    return json.dumps({"region_id": rep.region_id, "min_abs": rep.min_abs,
                       "sign_violations": rep.sign_violations,
                       "n_points": rep.n_points,
                       "details": [list(d) for d in rep.details]},
                      indent=2, sort_keys=True)
