"""Semiclassical and large-argument laws for the radial problem.

Everything here is an *approximation with a measurable error order*: WKB
forms valid at large momentum, eigenmomentum and normalization expansions of
the box spectrum, low-momentum behavior on both Coulomb tail signs, and
bound-state scaling for attractive tails. Each study returns a FitReport so
that the claimed order (a log-log slope) is checked, not assumed.
"""

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .errors import (
    DomainError,
    InsufficientLevelsError,
    NonConvergenceError,
    TurningPointError,
)
from .potential import (
    PotentialSpec,
    eval_local,
    integrated_potential_grid,
)
from .specfun import (
    bessel_zeros,
    coulomb_fg_points,
    digamma,
    riccati_jl,
)
from . import solver as sv

_SQRT_2_PI = math.sqrt(2.0 / math.pi)


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitReport:
    """Log-log slope fit of a defect sequence against a predicted exponent."""

    name: str
    abscissa: np.ndarray
    defects: np.ndarray
    slope: float
    predicted: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.predicted) <= self.tolerance


def loglog_slope(x, y) -> float:
    """Least-squares slope of log|y| against log x."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.size < 2:
        raise DomainError("slope fit needs at least 2 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit requires positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _fit(name, x, y, predicted, tolerance) -> FitReport:
    return FitReport(
        name=name,
        abscissa=np.asarray(x, dtype=float),
        defects=np.asarray(y, dtype=float),
        slope=loglog_slope(x, y),
        predicted=predicted,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# WKB frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WkbFrame:
    """Local momentum lambda(r) and accumulated phase Lambda(r).

    variant "bessel" uses the full local potential, variant "coulomb" the
    origin-subtracted one (v minus its Coulomb part), which keeps lambda
    finite at r = 0 for potentials singular there.
    """

    lam: Callable
    Lam: Callable
    variant: str


def _variant_v(spec: PotentialSpec, r: np.ndarray, variant: str) -> np.ndarray:
    v = eval_local(spec, r)
    if variant == "coulomb":
        v = v - spec.origin[0] / r
    elif spec.origin[0] != 0.0:
        raise DomainError(
            "bessel-variant WKB requires a potential finite at the origin; "
            "use variant='coulomb'"
        )
    return v


def k_min(spec: PotentialSpec, variant: str = "bessel") -> float:
    """Smallest momentum for which the WKB local momentum stays real.

    Defined as sqrt(2 max v+) + 1 where v+ is the positive part of the
    (variant-subtracted) potential, sampled densely on (0, R0] plus the tail.
    """
    r = np.linspace(spec.R0 / 4000.0, spec.R0, 4000)
    v = eval_local(spec, r)
    if variant == "coulomb":
        v = v - spec.origin[0] / r
    elif spec.origin[0] != 0.0:
        raise DomainError("bessel-variant k_min undefined for singular origins")
    vmax = max(float(np.max(v)), max(0.0, spec.Vc) / spec.R0, 0.0)
    return math.sqrt(2.0 * vmax) + 1.0


def build_frame(
    spec: PotentialSpec, k: float, r_max: float, variant: str = "bessel", n: int = 20001
) -> WkbFrame:
    """Tabulate lambda and Lambda on [0, r_max] for momentum k."""
    if r_max <= 0:
        raise DomainError("r_max must be positive")
    x = np.linspace(0.0, r_max, n)
    vals = np.empty_like(x)
    vals[1:] = _variant_v(spec, x[1:], variant)
    vals[0] = 2 * vals[1] - vals[2]  # v (subtracted) is finite at 0+
    arg = k * k - vals
    if np.any(arg <= 0.0):
        j = int(np.argmax(arg <= 0.0))
        raise TurningPointError(
            f"k^2 - v changes sign near r = {x[j]:.4g}; k = {k} is below the "
            f"guard k_min = {k_min(spec, variant):.4g}"
        )
    lam_tab = np.sqrt(arg)
    Lam_tab = np.concatenate(([0.0], cumulative_simpson(lam_tab, x=x)))

    def lam(r):
        return np.interp(r, x, lam_tab)

    def Lam(r):
        return np.interp(r, x, Lam_tab)

    return WkbFrame(lam=lam, Lam=Lam, variant=variant)


def wkb_bessel(spec: PotentialSpec, k: float, r, C_k: float = _SQRT_2_PI):
    """Two-term large-k form C [j^_l(kr) - (V(r)/2k) j^'_l(kr)].

    V is the primitive of the potential. Requires the potential finite at the
    origin and k above the turning-point guard.
    """
    r = np.asarray(r, dtype=float)
    if spec.origin[0] != 0.0:
        raise DomainError("two-term Bessel form requires v finite at the origin")
    if k <= k_min(spec):
        raise TurningPointError(
            f"k = {k} <= k_min = {k_min(spec):.4g}: lambda would turn imaginary"
        )
    V = integrated_potential_grid(spec, np.atleast_1d(r))
    j, jp = riccati_jl(spec.ell, k * np.atleast_1d(r))
    out = C_k * (j - V / (2.0 * k) * jp)
    return out if r.ndim else float(out[0])


def wkb_phase_form(
    spec: PotentialSpec,
    k: float,
    r,
    variant: str = "bessel",
    C_k: float = _SQRT_2_PI,
):
    """Phase-integral form C j^_l(Lambda(r)), or C F(Lambda0(r)) for the
    Coulomb variant; the joint large-k, large-r expansion."""
    r = np.asarray(r, dtype=float)
    rs = np.atleast_1d(r)
    frame = build_frame(spec, k, float(np.max(rs)) * (1 + 1e-12) + 1e-9, variant)
    L = frame.Lam(rs)
    if variant == "coulomb":
        eta = spec.Vc / (2.0 * k)
        F, _ = coulomb_fg_points(spec.ell, eta, np.maximum(L, 1e-12))
        out = C_k * F
    else:
        j, _ = riccati_jl(spec.ell, L)
        out = C_k * j
    return out if r.ndim else float(out[0])


def wkb_defect_study(
    spec: PotentialSpec,
    k_values: Sequence[float],
    R: float,
    form: str = "two_term",
    variant: str = "bessel",
    n_probe: int = 400,
    phase_tol: float = 1e-9,
) -> FitReport:
    """Relative sup-defect of a WKB form against the integrated solution.

    The overall constant of the solver solution is fixed by least squares
    (the expansions leave C_k to caller convention), after which the sup of
    |u - C model| over [0, R] should decay as k^-2.
    """
    defects = []
    for k in k_values:
        grid = sv.grid_for_phase(spec, R, k, phase_tol=phase_tol)
        u = sv.integrate_regular(spec, k * k, grid).samples
        idx = np.unique(
            np.linspace(1, grid.points.size - 1, n_probe).round().astype(int)
        )
        r = grid.points[idx]
        if form == "two_term":
            model = wkb_bessel(spec, k, r, C_k=1.0)
        elif form == "phase":
            model = wkb_phase_form(spec, k, r, variant=variant, C_k=1.0)
        else:
            raise DomainError(f"unknown WKB form {form!r}")
        us = u[idx]
        denom = float(np.dot(model, model))
        if denom == 0.0:
            raise DomainError("WKB model vanished identically on the probe set")
        C = float(np.dot(us, model)) / denom
        defects.append(
            float(np.max(np.abs(us - C * model))) / float(np.max(np.abs(C * model)))
        )
    return _fit(f"wkb_{form}_defect", k_values, defects, -2.0, 0.25)


# ---------------------------------------------------------------------------
# Eigenmomentum and normalization expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenmomentumPrediction:
    k: float
    kappa_free: float


def eigenmomentum_expansion(
    m: int, R: float, spec: PotentialSpec
) -> EigenmomentumPrediction:
    """Large-m prediction of the m-th box momentum.

    Leading term (m + l/2) pi / R with a 1/m correction built from the
    potential primitive at R; potentials with a Coulomb singularity at the
    origin pick up an extra digamma - log(2kR) term and are solved
    self-consistently. kappa_free is the matching Bessel-zero prediction.
    """
    ell = spec.ell
    a = -ell * (ell + 1.0)
    lead = (m + ell / 2.0) * math.pi / R
    kappa = lead + a / (2.0 * R * m * math.pi)
    V_R = float(integrated_potential_grid(spec, np.array([R]))[0])
    if spec.origin[0] == 0.0:
        corr = (a + R * V_R) / (2.0 * R * m * math.pi)
        k = lead + corr
    else:
        Vc = spec.origin[0]
        psi = digamma(ell + 1.0)
        k = lead
        # the phase condition puts the log term on the momentum side with a
        # minus sign: Lambda0(R) + Vc [Psi - log(2kR)]/(2k) hits a Bessel zero
        for _ in range(60):
            corr = (a + R * V_R - R * Vc * (psi - math.log(2.0 * k * R))) / (
                2.0 * k * R * R
            )
            k_new = lead + corr
            if abs(k_new - k) < 1e-15 * k:
                k = k_new
                break
            k = k_new
    if abs(corr) >= lead / 2.0:
        raise DomainError(f"m = {m} too small: correction exceeds half the leading term")
    return EigenmomentumPrediction(k=float(k), kappa_free=float(kappa))


def _states_by_expansion_index(spectrum: sv.BoxSpectrum) -> dict:
    # the integer m of the expansions counts zeros including the one at R,
    # so the m-th state has m - 1 interior nodes
    return {s.nodes + 1: s for s in spectrum.scattering}


def _riccati_j_pair(ell: float, x: float) -> tuple[float, float]:
    """(j^_{l+1}, j^_{l-1}) via the derivative recurrences; valid at l = 0."""
    j, jp = riccati_jl(ell, x)
    jm1 = jp + (ell / x) * j
    jp1, _ = riccati_jl(ell + 1.0, x)
    return float(jp1), float(jm1)


def eigenmomentum_defect_study(
    spec: PotentialSpec,
    R: float,
    m_values: Sequence[int],
    phase_tol: float = 1e-9,
    window: int = 6,
) -> FitReport:
    """Remainder |k_m(solver) - prediction| against m; envelope slope -2.

    States are paired to the prediction by counting zeros (interior nodes
    plus the one at R). The pointwise remainder carries an oscillatory
    factor, so each reported defect is the sup over ``window`` consecutive
    indices starting at m, which measures the decay of the envelope.
    """
    m_values = sorted(int(m) for m in m_values)
    k_max = (m_values[-1] + window + spec.ell / 2.0 + 1.5) * math.pi / R
    spectrum = sv.find_box_eigenmomenta(
        spec, R, k_max, phase_tol=phase_tol, keep_waves=False
    )
    by_index = _states_by_expansion_index(spectrum)
    defects = []
    for m in m_values:
        block = []
        for mm in range(m, m + window):
            if mm not in by_index:
                raise DomainError(f"no box state with index {mm} below k_max")
            pred = eigenmomentum_expansion(mm, R, spec).k
            block.append(abs(by_index[mm].momentum - pred))
        defects.append(max(block))
    return _fit("eigenmomentum_remainder", m_values, defects, -2.0, 0.15)


def norm_constant_study(
    spec: PotentialSpec,
    R: float,
    m_values: Sequence[int],
    phase_tol: float = 1e-9,
) -> tuple[FitReport, FitReport]:
    """Defect of the box normalization constants from sqrt(2/pi).

    C_{k_m} is extracted from the analytical value of the leading
    normalization integral, 2/(R dk) = C^2 [j^_l(kR)^2 - j^_{l+1} j^_{l-1}],
    and B_{kappa_m} from the exact Fourier-Bessel relation. Both defects fit
    slope -2 in m.
    """
    m_values = sorted(int(m) for m in m_values)
    k_max = (m_values[-1] + spec.ell / 2.0 + 1.5) * math.pi / R
    spectrum = sv.find_box_eigenmomenta(
        spec, R, k_max, phase_tol=phase_tol, keep_waves=False
    )
    by_index = _states_by_expansion_index(spectrum)
    momenta = {n: s.momentum for n, s in by_index.items()}
    c_defects = []
    for m in m_values:
        if m not in momenta:
            raise DomainError(f"no box state with index {m} below k_max")
        k = momenta[m]
        k_prev = momenta.get(m - 1, 0.0)
        j0, _ = riccati_jl(spec.ell, k * R)
        jp1, jm1 = _riccati_j_pair(spec.ell, k * R)
        bracket = j0 * j0 - jp1 * jm1
        C = math.sqrt(2.0 / (R * (k - k_prev) * bracket))
        c_defects.append(abs(C - _SQRT_2_PI))
    zeros = bessel_zeros(spec.ell, R, m_values[-1] + 1)
    kappas = np.concatenate(([0.0], zeros))
    b_defects = []
    for m in m_values:
        kap = kappas[m]
        dk = kap - kappas[m - 1]
        jp1, jm1 = _riccati_j_pair(spec.ell, kap * R)
        B = math.sqrt(-2.0 / (R * dk * jp1 * jm1))
        b_defects.append(abs(B - _SQRT_2_PI))
    return (
        _fit("C_km_defect", m_values, c_defects, -2.0, 0.2),
        _fit("B_kappam_defect", m_values, b_defects, -2.0, 0.2),
    )


# ---------------------------------------------------------------------------
# Large-R spacing and Dirac normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpacingNormReport:
    R_values: np.ndarray
    spacing_defects: np.ndarray  # R * |dk - pi/R| near k_fixed
    norm_defects: np.ndarray  # |N_k - 1| for the state nearest k_fixed
    spacing_fit: FitReport
    norm_fit: FitReport


def spacing_and_norm_large_R(
    spec: PotentialSpec,
    k_fixed: float,
    R_sequence: Sequence[float],
    phase_tol: float = 1e-8,
) -> SpacingNormReport:
    """Verify dk -> pi/R faster than 1/R and N_k -> 1 along growing boxes."""
    R_sequence = list(R_sequence)
    sp_def, nm_def = [], []
    for R in R_sequence:
        win = 3.0 * math.pi / R
        spectrum = sv.find_box_eigenmomenta(
            spec, R, k_fixed + 2.0 * win, phase_tol=phase_tol
        )
        ks = spectrum.momenta
        lo = np.searchsorted(ks, k_fixed - win)
        hi = np.searchsorted(ks, k_fixed + win)
        if hi - lo < 2:
            raise DomainError(f"too few eigenmomenta near k = {k_fixed} at R = {R}")
        dks = np.diff(ks[lo:hi])
        sp_def.append(R * float(np.max(np.abs(dks - math.pi / R))))
        i_near = lo + int(np.argmin(np.abs(ks[lo:hi] - k_fixed)))
        N, _, _, _ = sv.match_asymptotics(spectrum.scattering[i_near], spec)
        nm_def.append(abs(N - 1.0))
    return SpacingNormReport(
        R_values=np.asarray(R_sequence, dtype=float),
        spacing_defects=np.asarray(sp_def),
        norm_defects=np.asarray(nm_def),
        spacing_fit=_fit("R_weighted_spacing_defect", R_sequence, sp_def, -1.0, 1.5),
        norm_fit=_fit("dirac_norm_defect", R_sequence, nm_def, -1.0, 1.5),
    )


# ---------------------------------------------------------------------------
# Low momentum, attractive tail
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowKBoundReport:
    R_values: np.ndarray
    max_norm_sq: np.ndarray  # per-R max of N_k^2 over k_m < k_eps
    running_max: np.ndarray  # cumulative max: the operational bound estimate
    stable: bool  # last doubling left the running max within rel_tol
    rel_spread: float


def attractive_low_k_bound(
    spec: PotentialSpec,
    R_sequence: Sequence[float],
    k_eps: float,
    rel_tol: float = 0.2,
    phase_tol: float = 1e-8,
) -> LowKBoundReport:
    """Uniform bound on N_k^2 below k_eps for attractive tails.

    The bound is checked operationally through the running max of N^2 over
    all eigenmomenta below k_eps as the box is enlarged. The per-R max
    itself oscillates (the lowest state's normalization depends on where it
    lands relative to the spectral gap), so stability is judged on the
    running max over the last doubling.
    """
    if spec.Vc > 0:
        raise DomainError("attractive-tail bound requires Vc <= 0")
    maxima = []
    for R in R_sequence:
        k_ref = max(k_eps, math.sqrt(max(0.0, -spec.v_floor)) + 1.0)
        grid = sv.grid_for_phase(spec, R, k_ref, phase_tol=phase_tol)
        spectrum = sv.find_box_eigenmomenta(spec, R, k_eps, grid=grid)
        if not spectrum.scattering:
            raise DomainError(f"no eigenmomenta below k_eps = {k_eps} at R = {R}")
        n2 = [
            sv.match_asymptotics(s, spec)[0] ** 2 for s in spectrum.scattering
        ]
        maxima.append(max(n2))
    maxima = np.asarray(maxima)
    running = np.maximum.accumulate(maxima)
    if running.size < 2:
        raise DomainError("need at least two box radii to judge stability")
    spread = float(running[-1] / running[-2] - 1.0)
    return LowKBoundReport(
        R_values=np.asarray(list(R_sequence), dtype=float),
        max_norm_sq=maxima,
        running_max=running,
        stable=spread <= rel_tol,
        rel_spread=spread,
    )


# ---------------------------------------------------------------------------
# Low momentum, repulsive tail
# ---------------------------------------------------------------------------

def repulsive_turning_point(spec: PotentialSpec, k: float) -> float:
    """Outer classical turning point of the Coulomb + centrifugal tail."""
    if k <= 0:
        raise DomainError("k must be positive")
    cent = spec.ell * (spec.ell + 1.0)
    if spec.Vc == 0.0 and cent == 0.0:
        raise TurningPointError("no turning point for a free tail (Vc = 0, l = 0)")
    return (spec.Vc + math.sqrt(spec.Vc**2 + 4.0 * cent * k * k)) / (2.0 * k * k)


def _log_tail_amplitude(spec: PotentialSpec, k: float, r_match_factor: float = 1.3):
    """log of sqrt(A^2+B^2)/sqrt(2/pi) for the series-normalized solution.

    Matches u = A F + B G at two radii beyond the repulsive turning point and
    returns (log_amplitude, u at the grid, grid). Carried through logs so the
    Gamow-suppressed interior (factor e^{-pi eta}) never underflows.
    """
    r_t = repulsive_turning_point(spec, k)
    r1 = max(r_t * r_match_factor, spec.R0 * 1.5)
    r2 = r1 + math.pi / (2.0 * k)
    R = r2 + 2.0 * math.pi / k
    grid = sv.grid_for_phase(spec, R, k, phase_tol=1e-6)
    u = sv.integrate_regular(spec, k * k, grid).samples
    j1 = int(np.searchsorted(grid.points, r1))
    j2 = int(np.searchsorted(grid.points, r2))
    eta = spec.Vc / (2.0 * k)
    F, G = coulomb_fg_points(
        spec.ell, eta, k * np.array([grid.points[j1], grid.points[j2]])
    )
    det = F[0] * G[1] - F[1] * G[0]
    if det == 0.0:
        raise NonConvergenceError("collinear tail pair in low-k matching", achieved=0.0)
    A = (u[j1] * G[1] - u[j2] * G[0]) / det
    B = (F[0] * u[j2] - F[1] * u[j1]) / det
    return math.log(math.hypot(A, B) / _SQRT_2_PI), u, grid


def repulsive_low_k_suppression(
    spec: PotentialSpec,
    k_values: Sequence[float],
    r_probe: float | None = None,
) -> FitReport:
    """Interior amplitude of Dirac-normalized states as k -> 0.

    Measures D(k) = u~(k, r_probe)/u0(r_probe) with u0 the zero-energy regular
    solution. For Vc > 0 the ratio D / (eta^{-1/2} e^{-pi eta}) must
    stabilize (Gamow suppression, slope ~ 0 in k); for Vc = 0, l > 0 the
    amplitude follows the centrifugal power law D ~ k^{l+1}.
    """
    cent = spec.ell * (spec.ell + 1.0)
    if spec.Vc < 0 or (spec.Vc == 0.0 and cent == 0.0):
        raise DomainError("suppression study requires a repulsive tail")
    if r_probe is None:
        r_probe = 0.7 * spec.R0
    if not 0 < r_probe < spec.R0:
        raise DomainError("r_probe must lie inside (0, R0)")
    k_int = math.sqrt(max(0.0, -spec.v_floor)) + 1.0
    grid0 = sv.grid_for_phase(spec, 1.5 * spec.R0, k_int, phase_tol=1e-9)
    u0 = sv.integrate_regular(spec, 0.0, grid0)
    log_u0 = math.log(abs(u0(r_probe)))
    vals = []
    for k in k_values:
        log_N, u, grid = _log_tail_amplitude(spec, k)
        jp = int(round(r_probe / grid.spacing))
        log_D = math.log(abs(u[jp])) - log_N - log_u0
        if spec.Vc > 0:
            eta = spec.Vc / (2.0 * k)
            log_gamow = -0.5 * math.log(eta) - math.pi * eta
            vals.append(math.exp(log_D - log_gamow))
        else:
            vals.append(math.exp(log_D))
    predicted = 0.0 if spec.Vc > 0 else spec.ell + 1.0
    tolerance = 0.1 if spec.Vc > 0 else 0.05
    return _fit("low_k_interior_amplitude", k_values, vals, predicted, tolerance)


# ---------------------------------------------------------------------------
# Bound-state scaling (attractive Coulomb tail)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundScalingReport:
    kappa_fit: FitReport
    amplitude_fit: FitReport
    quantum_defect: float  # fitted mu in kappa_n ~ c/(n + mu)


def _fit_quantum_defect(n_arr: np.ndarray, kappas: np.ndarray) -> float:
    """Pick mu minimizing the residual of a log-log line in (n + mu)."""
    best_mu, best_res = 0.0, math.inf
    for mu in np.arange(0.0, 3.0 + 1e-9, 0.01):
        lx = np.log(n_arr + mu) if np.all(n_arr + mu > 0) else None
        if lx is None:
            continue
        coef, res, *_ = np.polyfit(lx, np.log(kappas), 1, full=True)
        r = float(res[0]) if len(res) else 0.0
        if r < best_res:
            best_res, best_mu = r, float(mu)
    return best_mu


def bound_scaling_study(
    spec: PotentialSpec,
    R_schedule: Sequence[float],
    n_window: tuple[int, int] = (4, 12),
    r_fixed: float = 1.0,
) -> BoundScalingReport:
    """Scaling of high-lying bound states under an attractive Coulomb tail.

    kappa_n is extrapolated over the box schedule (box momenta approach the
    open-interval ones from below), then fitted as c/(n + mu) with the
    quantum defect mu free; amplitudes at a fixed radius follow n^{-3/2}.
    """
    if spec.Vc >= 0:
        raise DomainError("bound scaling requires an attractive Coulomb tail")
    R_schedule = sorted(R_schedule)
    per_R = {R: sv.find_box_bound_states(spec, R) for R in R_schedule}
    n_lo, n_hi = n_window
    biggest = per_R[R_schedule[-1]]
    if len(biggest) < max(6, n_hi + 1):
        raise InsufficientLevelsError(
            f"found {len(biggest)} bound states at R = {R_schedule[-1]}, "
            f"need {max(6, n_hi + 1)}"
        )
    ns = np.arange(n_lo, n_hi + 1, dtype=float)
    kappas = []
    for n in range(n_lo, n_hi + 1):
        Rs = [R for R in R_schedule if len(per_R[R]) > n]
        if len(Rs) >= 3:
            rep = sv.open_limit_extrapolate(
                spec, lambda _s, R, n=n: per_R[R][n].momentum, Rs[-3:]
            )
            kappas.append(rep.value)
        else:
            kappas.append(per_R[Rs[-1]][n].momentum)
    kappas = np.asarray(kappas)
    mu = _fit_quantum_defect(ns, kappas)
    kappa_fit = FitReport(
        name="kappa_n_scaling",
        abscissa=ns + mu,
        defects=kappas,
        slope=loglog_slope(ns + mu, kappas),
        predicted=-1.0,
        tolerance=0.05,
    )
    amps = np.array([abs(biggest[n].wave(r_fixed)) for n in range(n_lo, n_hi + 1)])
    amplitude_fit = FitReport(
        name="u_n_amplitude_scaling",
        abscissa=ns + mu,
        defects=amps,
        slope=loglog_slope(ns + mu, amps),
        predicted=-1.5,
        tolerance=0.1,
    )
    return BoundScalingReport(
        kappa_fit=kappa_fit, amplitude_fit=amplitude_fit, quantum_defect=mu
    )


# ---------------------------------------------------------------------------
# Norm equivalent (oscillatory integral -> half integral)
# ---------------------------------------------------------------------------

def norm_equivalent_ratio(
    spec: PotentialSpec | None,
    state_kind: str,
    r_f_sequence: Sequence[float],
    k: float | None = None,
    kappa: float | None = None,
    delta: float = 0.0,
    r_d: float | None = None,
    n_quad: int = 40001,
) -> FitReport:
    """Ratio of the oscillatory norm integral to its averaged half value.

    Integrates lambda^{-1} sin^2(Lambda + delta) from r_d to growing r_f and
    divides by half of the lambda^{-1} integral; the ratio tends to 1.
    Supported kinds: "synthetic" (lambda = 1), "scattering" (attractive tail
    at small k) and "bound" (large-n state; r_f clamped at half the turning
    point to stay clear of the divergence there).
    """
    r_f_sequence = sorted(float(r) for r in r_f_sequence)
    if state_kind == "synthetic":
        r_d = 0.0 if r_d is None else r_d

        def lam_of(r):
            return np.ones_like(r)

    elif state_kind == "scattering":
        if spec is None or k is None:
            raise DomainError("scattering kind needs spec and k")
        if spec.Vc > 0:
            raise DomainError("scattering norm equivalent is for attractive tails")
        cent = spec.ell * (spec.ell + 1.0)
        if r_d is None:
            r_neg = cent / abs(spec.Vc) if spec.Vc < 0 else spec.R0
            r_d = 1.5 * max(spec.R0, r_neg)

        def lam_of(r):
            return np.sqrt(k * k + abs(spec.Vc) / r - cent / r**2)

    elif state_kind == "bound":
        if spec is None or kappa is None:
            raise DomainError("bound kind needs spec and kappa")
        if spec.Vc >= 0:
            raise DomainError("bound norm equivalent needs an attractive tail")
        cent = spec.ell * (spec.ell + 1.0)
        disc = spec.Vc**2 - 4.0 * cent * kappa * kappa
        if disc <= 0:
            raise TurningPointError("no classically allowed region at this kappa")
        r_t = (abs(spec.Vc) + math.sqrt(disc)) / (2.0 * kappa * kappa)
        r_e = r_t / 2.0
        r_f_sequence = sorted(set(min(r, r_e) for r in r_f_sequence))
        if len(r_f_sequence) < 2:
            raise DomainError(
                f"need at least two distinct r_f below r_e = {r_e:.4g}"
            )
        if r_d is None:
            r_neg = cent / abs(spec.Vc)
            r_d = 1.5 * max(spec.R0, r_neg)

        def lam_of(r):
            return np.sqrt(abs(spec.Vc) / r - cent / r**2 - kappa * kappa)

    else:
        raise DomainError(f"unknown state kind {state_kind!r}")

    r_max = r_f_sequence[-1]
    if r_max <= r_d:
        raise DomainError("r_f sequence must extend beyond r_d")
    x = np.linspace(r_d, r_max, n_quad)
    lam = lam_of(x) if state_kind != "synthetic" else np.ones_like(x)
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise TurningPointError("lambda not strictly positive on [r_d, r_f]")
    Lam = np.concatenate(([0.0], cumulative_simpson(lam, x=x)))
    inv = 1.0 / lam
    osc = inv * np.sin(Lam + delta) ** 2
    cum_osc = np.concatenate(([0.0], cumulative_simpson(osc, x=x)))
    cum_half = 0.5 * np.concatenate(([0.0], cumulative_simpson(inv, x=x)))
    ratios = []
    for rf in r_f_sequence:
        j = int(np.searchsorted(x, rf))
        j = min(max(j, 2), n_quad - 1)
        ratios.append(cum_osc[j] / cum_half[j])
    defects = np.abs(np.asarray(ratios) - 1.0)
    return FitReport(
        name=f"norm_equivalent_{state_kind}",
        abscissa=np.asarray(r_f_sequence),
        defects=defects,
        slope=loglog_slope(r_f_sequence, np.maximum(defects, 1e-16)),
        predicted=-0.5,
        tolerance=1.5,
    )
