"""Special functions for the radial problem.

Conventions (fixed here, used everywhere else):

* Riccati-Bessel regular solution  j^_l(x) = x j_l(x) = sqrt(pi x/2) J_{l+1/2}(x),
  asymptotically sin(x - l pi/2).
* Irregular partner  g^_l(x) = -x y_l(x) = -sqrt(pi x/2) Y_{l+1/2}(x),
  asymptotically cos(x - l pi/2), so that Wronskian j^' g^ - j^ g^' = 1.
* Riccati-Hankel combinations  h+- = g^ +- i j^  (free case) and, for Coulomb,
  h+- = G +- i F; h+- ~ e^{+-i theta} asymptotically.
* Coulomb waves F_{l eta}, G_{l eta} carry the standard (Dirac-delta compatible)
  normalization  F ~ sin(rho - eta log 2 rho - l pi/2 + sigma_l)  and satisfy
  F' G - F G' = 1 (derivatives w.r.t. rho).
* Modified Riccati-Bessel pair  i_nu(x) = sqrt(pi x/2) I_nu(x)  (regular,
  i_{1/2} = sinh) and  k_nu(x) = sqrt(2 x/pi) K_nu(x)  (decaying, k_{1/2} = e^{-x}).

Real l >= -1/2 is supported throughout; integer l only enables fast paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special as sp

from .errors import DomainError, NonConvergenceError

_MP_DPS = 25


@dataclass(frozen=True)
class CoulombParams:
    """Angular momentum and Sommerfeld parameter of a Coulomb wave."""

    ell: float
    eta: float

    def __post_init__(self):
        if self.ell < -0.5:
            raise DomainError(f"ell must be >= -1/2, got {self.ell}")

    @classmethod
    def from_potential(cls, ell: float, Vc: float, k: float) -> "CoulombParams":
        if k <= 0:
            raise DomainError(f"k must be > 0, got {k}")
        return cls(ell=ell, eta=Vc / (2.0 * k))


@dataclass(frozen=True)
class WaveValues:
    """Regular/irregular pair with derivatives w.r.t. the dimensionless argument."""

    f: float
    fp: float
    g: float
    gp: float

    @property
    def wronskian(self) -> float:
        return self.fp * self.g - self.f * self.gp


# ---------------------------------------------------------------------------
# Riccati-Bessel
# ---------------------------------------------------------------------------

def riccati_jl(ell: float, x):
    """Vectorized regular Riccati-Bessel value and derivative.

    Returns (j^_l(x), j^'_l(x)) as arrays broadcast against ``x``. Valid for
    real ell >= -1/2, x > 0 (x = 0 allowed, handled as limit).
    """
    if ell < -0.5:
        raise DomainError(f"ell must be >= -1/2, got {ell}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be >= 0")
    if ell == 0.0:
        return np.sin(x), np.cos(x)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    out_f = np.zeros_like(xs)
    out_fp = np.zeros_like(xs)
    pos = xs > 0
    xp = xs[pos]
    fac = np.sqrt(0.5 * np.pi * xp)
    f = fac * sp.jv(ell + 0.5, xp)
    fm1 = fac * sp.jv(ell - 0.5, xp)
    out_f[pos] = f
    out_fp[pos] = fm1 - (ell / xp) * f
    # x = 0 limit: regular value 0; slope 1 only at ell = 0 (handled above)
    if scalar:
        return out_f[0], out_fp[0]
    return out_f, out_fp


def riccati_gl(ell: float, x):
    """Vectorized irregular Riccati-Bessel partner g^_l = -x y_l and derivative."""
    if ell < -0.5:
        raise DomainError(f"ell must be >= -1/2, got {ell}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("irregular partner requires x > 0")
    if ell == 0.0:
        return np.cos(x), -np.sin(x)
    fac = np.sqrt(0.5 * np.pi * x)
    g = -fac * sp.yv(ell + 0.5, x)
    gm1 = -fac * sp.yv(ell - 0.5, x)
    return g, gm1 - (ell / x) * g


def riccati_bessel(ell: float, x: float) -> WaveValues:
    """Regular and irregular Riccati-Bessel values at a point.

    ``x = 0`` is handled as a limit for the regular pair; the irregular pair is
    only finite there for ell = 0.
    """
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0.0:
        if ell == 0.0:
            return WaveValues(f=0.0, fp=1.0, g=1.0, gp=-0.0)
        return WaveValues(f=0.0, fp=0.0, g=math.inf, gp=-math.inf)
    f, fp = riccati_jl(ell, x)
    g, gp = riccati_gl(ell, x)
    return WaveValues(f=float(f), fp=float(fp), g=float(g), gp=float(gp))


def bessel_zeros(ell: float, R: float, count: int) -> np.ndarray:
    """First ``count`` positive momenta kappa with j^_l(kappa R) = 0, increasing.

    The entry at index m (0-based) yields j^_l(kappa r) with exactly m interior
    nodes on (0, R).
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    if R <= 0:
        raise DomainError("R must be > 0")
    if ell < -0.5:
        raise DomainError(f"ell must be >= -1/2, got {ell}")
    nu = ell + 0.5
    # Zeros of J_nu: spacing decreases to pi from above; scan with step pi/8
    # starting just above 0 (j^_l > 0 for small x).
    step = np.pi / 8.0
    zeros = []
    x_lo = 1e-9 if ell <= 0 else min(0.5, 0.1 * (ell + 1))
    s_lo = np.sign(sp.jv(nu, x_lo))
    x = x_lo
    # Upper bound estimate for the count-th zero plus margin.
    x_hi_est = (count + 0.75 * nu + 2.0) * np.pi + 2.0 * nu ** (1.0 / 3.0) + 10.0
    grid = np.arange(x_lo, x_hi_est, step)
    vals = sp.jv(nu, grid)
    signs = np.sign(vals)
    # walk sign changes
    idx = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    brackets = [(grid[i], grid[i + 1]) for i in idx]
    while len(brackets) < count:
        # extend the scan
        g2 = np.arange(grid[-1], grid[-1] + 50 * np.pi, step)
        v2 = sp.jv(nu, g2)
        s2 = np.sign(v2)
        idx2 = np.nonzero(s2[:-1] * s2[1:] < 0)[0]
        brackets += [(g2[i], g2[i + 1]) for i in idx2]
        grid = g2
    lo = np.array([b[0] for b in brackets[:count]])
    hi = np.array([b[1] for b in brackets[:count]])
    flo = sp.jv(nu, lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = sp.jv(nu, mid)
        left = flo * fm <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
        if np.max(hi - lo) < 1e-15 * np.max(hi):
            break
    zeros = 0.5 * (lo + hi)
    return zeros / R


# ---------------------------------------------------------------------------
# Coulomb waves
# ---------------------------------------------------------------------------

def coulomb_norm_log(ell: float, eta: float) -> float:
    """log of the origin constant C_l(eta) with F ~ C_l(eta) rho^{l+1} as rho->0.

    C_l(eta) = 2^l e^{-pi eta/2} |Gamma(l+1+i eta)| / Gamma(2l+2).
    """
    lg = sp.loggamma(complex(ell + 1.0, eta))
    return (
        ell * math.log(2.0)
        - 0.5 * math.pi * eta
        + lg.real
        - sp.loggamma(2.0 * ell + 2.0).real
    )


@lru_cache(maxsize=200_000)
def _coulomb_pair(ell: float, eta: float, rho: float) -> tuple[float, float]:
    """(F_{l eta}(rho), G_{l eta}(rho)) via arbitrary precision."""
    with mpmath.workdps(_MP_DPS):
        f = mpmath.coulombf(ell, eta, rho)
        g = mpmath.coulombg(ell, eta, rho)
    f, g = float(f), float(g)
    if not (math.isfinite(f) and math.isfinite(g)):
        raise NonConvergenceError(
            f"Coulomb evaluation overflowed at ell={ell}, eta={eta}, rho={rho}",
            achieved=None,
        )
    return f, g


def coulomb_wave(params: CoulombParams, rho: float) -> WaveValues:
    """Coulomb F, G and rho-derivatives with standard normalization.

    Derivatives come from the three-term ladder
    u'_l = S_{l+1} u_l - R_{l+1} u_{l+1},  R_lam = sqrt(1 + (eta/lam)^2),
    S_lam = lam/rho + eta/lam, valid for both F and G.
    """
    if rho <= 0:
        raise DomainError(f"rho must be > 0, got {rho}")
    ell, eta = params.ell, params.eta
    if eta == 0.0:
        return riccati_bessel(ell, rho)
    f0, g0 = _coulomb_pair(ell, eta, rho)
    f1, g1 = _coulomb_pair(ell + 1.0, eta, rho)
    lam = ell + 1.0
    R = math.sqrt(1.0 + (eta / lam) ** 2)
    S = lam / rho + eta / lam
    vals = WaveValues(f=f0, fp=S * f0 - R * f1, g=g0, gp=S * g0 - R * g1)
    w = vals.wronskian
    if abs(w - 1.0) > 1e-7:
        raise NonConvergenceError(
            f"Coulomb Wronskian defect {abs(w - 1.0):.3e} at "
            f"ell={ell}, eta={eta}, rho={rho}",
            achieved=abs(w - 1.0),
        )
    return vals


def coulomb_hankel(params: CoulombParams, rho: float):
    """Outgoing/incoming combinations h+- = G +- iF and their derivatives."""
    v = coulomb_wave(params, rho)
    hp = complex(v.g, v.f)
    hm = complex(v.g, -v.f)
    hpp = complex(v.gp, v.fp)
    hmp = complex(v.gp, -v.fp)
    return hp, hm, hpp, hmp


def coulomb_fg_points(ell: float, eta: float, rho):
    """F and G at an array of rho points (scalar backend; free fast path).

    Returns (F, G) arrays. Used by asymptotic matching, where only a handful of
    radii per momentum are needed.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if eta == 0.0:
        f, _ = riccati_jl(ell, rho)
        g, _ = riccati_gl(ell, rho)
        return f, g
    f = np.empty_like(rho)
    g = np.empty_like(rho)
    for i, p in enumerate(rho):
        f[i], g[i] = _coulomb_pair(ell, eta, float(p))
    return f, g


# ---------------------------------------------------------------------------
# Modified Riccati-Bessel and digamma
# ---------------------------------------------------------------------------

def modified_riccati(order: float, x: float) -> tuple[float, float]:
    """(i_nu(x), k_nu(x)): regular-at-0 and decaying-at-infinity pair.

    i_nu(x) = sqrt(pi x/2) I_nu(x), k_nu(x) = sqrt(2 x/pi) K_nu(x); at
    nu = 1/2 these are sinh(x) and e^{-x}.
    """
    if x <= 0:
        raise DomainError(f"x must be > 0, got {x}")
    iv = sp.iv(order, x)
    kv = sp.kv(order, x)
    if not (np.isfinite(iv) and np.isfinite(kv)):
        raise OverflowError(
            f"modified Riccati-Bessel overflow at order={order}, x={x}; rescale"
        )
    return float(np.sqrt(0.5 * np.pi * x) * iv), float(np.sqrt(2.0 * x / np.pi) * kv)


def digamma(x: float) -> float:
    """Psi(x) = Gamma'(x)/Gamma(x) for x > 0, 1e-12 relative."""
    if x <= 0:
        raise DomainError(f"digamma requires x > 0, got {x}")
    return float(sp.digamma(x))
