"""Regular solutions of the radial equation, box spectra, and matching.

The radial problem on [0, R] with box boundary conditions u(0) = u(R) = 0 is
solved by a fixed-step fourth-order (Numerov) propagator started from a
Frobenius series at the origin (u ~ r^{l+1}, leading coefficient 1). For a
non-local kernel the equation on [0, R0] becomes a dense linear system
(Numerov collocation with Simpson kernel weights), continued as a pure ODE
beyond R0 where the kernel vanishes.

Scattering eigenmomenta come from a sign-change scan of u(k, R) refined by
vectorized bisection; bound states from node-count bisection in kappa with a
two-sided (outward/inward) log-scaled shooting assembly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from . import _numerov
from .errors import (
    DomainError,
    MatchingError,
    MissedRootError,
    ResolutionError,
    ZeroNormError,
)
from .potential import PotentialSpec, eval_local, eval_nonlocal
from .specfun import bessel_zeros, coulomb_fg_points, riccati_jl


# ---------------------------------------------------------------------------
# Grids and radial functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid r_0 = 0 ... r_{n_points-1} = R with an even interval count."""

    R: float
    n_points: int

    def __post_init__(self):
        if self.R <= 0:
            raise DomainError(f"R must be > 0, got {self.R}")
        if self.n_points < 17:
            raise DomainError("n_points must be >= 17")
        if (self.n_points - 1) % 2 != 0:
            raise DomainError("n_points - 1 (interval count) must be even")

    @property
    def spacing(self) -> float:
        return self.R / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.R, self.n_points)


@dataclass(frozen=True)
class RadialFunction:
    """Sampled radial function with linear interpolation between nodes."""

    grid: RadialGrid
    samples: np.ndarray
    k2: float

    def __post_init__(self):
        if len(self.samples) != self.grid.n_points:
            raise DomainError("samples/grid length mismatch")
        if self.samples[0] != 0.0:
            raise DomainError("regularity requires samples[0] = 0")

    def __call__(self, r):
        return np.interp(r, self.grid.points, self.samples)


def grid_for_phase(
    spec: PotentialSpec,
    R: float,
    k_max: float,
    phase_tol: Optional[float] = 1e-8,
    points_per_wavelength: int = 16,
    n_max: int = 400_000,
) -> RadialGrid:
    """Uniform grid resolving the local wavelength at k_max.

    The step is min(wavelength/points_per_wavelength, phase-accuracy step)
    where the accumulated fourth-order phase error estimate (k h)^4 k R / 240
    stays below ``phase_tol``. ``phase_tol=None`` keeps only the wavelength
    criterion (bulk spectrum scans where errors cancel pairwise).
    """
    v0 = spec.origin[0]
    k_loc = math.sqrt(
        max(k_max, 0.0) ** 2 + max(0.0, -spec.v_floor) + 4.0 * abs(v0) + 1.0
    )
    h = 2.0 * math.pi / (points_per_wavelength * k_loc)
    if phase_tol is not None:
        h = min(h, (240.0 * phase_tol / (max(k_max, 1.0) ** 5 * R)) ** 0.25)
    n = int(math.ceil(R / h))
    n = max(n + n % 2, 64)
    if n > n_max:
        n = n_max - n_max % 2
    return RadialGrid(R=R, n_points=n + 1)


# ---------------------------------------------------------------------------
# Propagation internals
# ---------------------------------------------------------------------------

_SERIES_TERMS = 30
_HEAD_MAX = 400


@dataclass(frozen=True)
class _Context:
    spec: PotentialSpec
    grid: RadialGrid
    W: np.ndarray
    h: float
    n: int


def _context(spec: PotentialSpec, grid: RadialGrid) -> _Context:
    r = grid.points
    W = np.zeros(grid.n_points)
    cen = spec.ell * (spec.ell + 1.0)
    W[1:] = eval_local(spec, r[1:]) + cen / r[1:] ** 2
    return _Context(spec=spec, grid=grid, W=W, h=grid.spacing, n=grid.n_points - 1)


def _series_coeffs(spec: PotentialSpec, k2s: np.ndarray, J: int = _SERIES_TERMS):
    v0, v1, v2 = spec.origin
    nk = len(k2s)
    a = np.zeros((J + 1, nk))
    a[0] = 1.0
    two_lp1 = 2.0 * spec.ell + 1.0
    for j in range(1, J + 1):
        acc = v0 * a[j - 1]
        if j >= 2:
            acc = acc + (v1 - k2s) * a[j - 2]
        if j >= 3:
            acc = acc + v2 * a[j - 3]
        a[j] = acc / (j * (two_lp1 + j))
    return a


def _choose_j_start(spec: PotentialSpec, h: float, k2s: np.ndarray, n: int) -> int:
    # keep the head free of nodes (local phase < 2) and inside the series
    # validity radius; keep enough points that the origin-region truncation
    # error of the propagator stays negligible relative to r^{l+1}
    v0 = spec.origin[0]
    k_big = math.sqrt(
        max(float(np.max(k2s)), 0.0) + max(0.0, -spec.v_floor) + 4.0 * abs(v0) + 1.0
    )
    r_s = 2.0 / k_big
    if np.isfinite(spec.series_rmax):
        r_s = min(r_s, spec.series_rmax)
    j = int(round(r_s / h))
    return max(2, min(j, _HEAD_MAX, n // 4))


def _series_head(
    spec: PotentialSpec, h: float, j_start: int, k2s: np.ndarray
) -> np.ndarray:
    """Series samples u_j for j = 0..j_start+1, shape (nk, j_start+2)."""
    a = _series_coeffs(spec, k2s)
    r = np.arange(j_start + 2) * h
    s = np.zeros((len(r), len(k2s)))
    for j in range(a.shape[0] - 1, -1, -1):
        s = s * r[:, None] + a[j][None, :]
    head = np.power(r, spec.ell + 1.0)[:, None] * s
    return np.ascontiguousarray(head.T)


def _check_resolution(ctx: _Context, k2s: np.ndarray):
    kmax2 = float(np.max(k2s))
    if kmax2 > 0:
        kmax = math.sqrt(kmax2)
        if ctx.h > 2.0 * math.pi / (16.0 * kmax):
            raise ResolutionError(
                f"grid spacing {ctx.h:.3e} under-resolves wavelength at k={kmax:.3g}"
            )


def _scan(ctx: _Context, k2s: np.ndarray):
    j_start = _choose_j_start(ctx.spec, ctx.h, k2s, ctx.n)
    head = _series_head(ctx.spec, ctx.h, j_start, k2s)
    return _numerov.propagate_scan(ctx.W, ctx.h, k2s, head, j_start)


@dataclass(frozen=True)
class BatchResult:
    """Per-momentum reductions of a vectorized propagation pass."""

    k2: np.ndarray
    u_eval: np.ndarray
    uR: np.ndarray
    nodes: np.ndarray
    norm: np.ndarray
    proj: np.ndarray
    u_store: np.ndarray
    stride: int


def propagate_batch(
    spec: PotentialSpec,
    grid: RadialGrid,
    k2s,
    eval_idx=None,
    fvals=None,
    stride: int = 0,
    _j_start: Optional[int] = None,
) -> BatchResult:
    """Propagate many momenta at once, accumulating Simpson norms on the fly.

    ``eval_idx`` (sorted grid indices) requests point values; ``fvals``
    (samples of a weight function on the full grid) requests the projection
    integral of f u per momentum; ``stride`` requests decimated storage.
    Local potentials only (non-local solves are per-momentum dense systems).
    """
    if spec.has_nonlocal:
        raise DomainError("propagate_batch is the local-potential fast path")
    k2s = np.atleast_1d(np.asarray(k2s, dtype=float))
    ctx = _context(spec, grid)
    _check_resolution(ctx, k2s)
    j_start = _j_start if _j_start is not None else _choose_j_start(
        spec, ctx.h, k2s, ctx.n
    )
    head = _series_head(spec, ctx.h, j_start, k2s)
    ei = (
        np.asarray(eval_idx, dtype=np.int64)
        if eval_idx is not None
        else np.empty(0, dtype=np.int64)
    )
    fv = np.asarray(fvals, dtype=float) if fvals is not None else np.empty(0)
    u_eval, uR, nodes, norm, proj, u_store = _numerov.propagate_many(
        ctx.W, ctx.h, k2s, head, j_start, ei, fv, stride
    )
    return BatchResult(
        k2=k2s,
        u_eval=u_eval,
        uR=uR,
        nodes=nodes,
        norm=norm,
        proj=proj,
        u_store=u_store,
        stride=stride,
    )


# ---------------------------------------------------------------------------
# Regular solution
# ---------------------------------------------------------------------------

def integrate_regular(spec: PotentialSpec, k2: float, grid: RadialGrid) -> RadialFunction:
    """Regular solution with u ~ r^{l+1} (leading coefficient 1) near 0.

    For a non-local spec the solution on [0, R0] solves the collocated
    integro-differential linear system directly, then continues as a local
    ODE beyond R0.
    """
    if spec.has_nonlocal:
        samples = _integrate_nonlocal(spec, float(k2), grid)
        return RadialFunction(grid=grid, samples=samples, k2=float(k2))
    # the minimal series head keeps the local and non-local code paths on
    # identical pinned values, so a zero kernel reproduces this path exactly
    res = propagate_batch(spec, grid, [k2], stride=1, _j_start=2)
    return RadialFunction(grid=grid, samples=res.u_store[0], k2=float(k2))


def _integrate_nonlocal(spec: PotentialSpec, k2: float, grid: RadialGrid) -> np.ndarray:
    ctx = _context(spec, grid)
    h, n = ctx.h, ctx.n
    if k2 > 0:
        _check_resolution(ctx, np.array([k2]))
    j0 = int(round(spec.R0 / h))
    j0 -= j0 % 2
    if j0 < 8:
        raise ResolutionError("fewer than 8 grid intervals inside R0")
    if j0 + 1 >= n:
        raise DomainError("grid must extend beyond R0")
    k2a = np.array([k2])
    # the pinned series ignores the kernel (w ~ r^{l+1} there), so pin the
    # smallest possible head; the neglected source contributes O(r^3) relative
    j_start = 2
    head = _series_head(spec, h, j_start, k2a)[0]
    if j_start + 1 >= j0:
        raise ResolutionError("series head overlaps the whole kernel support")

    r = grid.points
    T = h * h * (ctx.W - k2) / 12.0
    # Simpson weights on [0, r_j0]
    om = np.zeros(j0 + 1)
    om[0] = om[j0] = h / 3.0
    om[1:j0:2] = 4.0 * h / 3.0
    om[2:j0:2] = 2.0 * h / 3.0
    Wk = eval_nonlocal(spec, r[: j0 + 2, None], r[None, : j0 + 1])

    m = j0 + 1  # unknowns u_1 .. u_{j0+1}
    A = np.zeros((m, m))
    b = np.zeros(m)
    # pinned series rows for j = 1 .. j_start+1
    for j in range(1, j_start + 2):
        A[j - 1, j - 1] = 1.0
        b[j - 1] = head[j]
    c = h * h / 12.0
    for j in range(j_start + 1, j0 + 1):
        row = j
        if j - 1 >= 1:
            A[row, j - 2] += 1.0 - T[j - 1]
        A[row, j - 1] += -(2.0 + 10.0 * T[j])
        A[row, j] += 1.0 - T[j + 1]
        ker = om * (Wk[j + 1] + 10.0 * Wk[j] + Wk[j - 1])
        A[row, :j0] -= c * ker[1:]
    try:
        u_in = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularKernelSystem(str(exc)) from None
    u_head = np.concatenate(([0.0], u_in))  # u_0 .. u_{j0+1}
    # local continuation beyond the kernel support
    ei = np.empty(0, dtype=np.int64)
    fv = np.empty(0)
    _, _, _, _, _, u_store = _numerov.propagate_many(
        ctx.W, h, k2a, u_head[None, :], j0, ei, fv, 1
    )
    return u_store[0]


class SingularKernelSystem(DomainError):
    """Collocation matrix of the non-local solve is numerically singular."""


def count_nodes(wave: RadialFunction) -> int:
    """Strict interior sign changes, endpoint zeros excluded."""
    s = np.sign(wave.samples[1:-1])
    s = s[s != 0]
    if len(s) < 2:
        return 0
    return int(np.sum(s[:-1] != s[1:]))


# ---------------------------------------------------------------------------
# Box spectrum types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxState:
    """One box eigenstate (kind 'scattering' with energy k^2, or 'bound', -k^2)."""

    momentum: float
    wave: Optional[RadialFunction]
    nodes: int
    norm_constant: float
    kind: str
    phase_shift: Optional[float] = None
    N_k: Optional[float] = None
    S_plus: Optional[complex] = None
    S_minus: Optional[complex] = None


@dataclass(frozen=True)
class BoxSpectrum:
    spec: PotentialSpec
    R: float
    bound: tuple
    scattering: tuple
    k_cutoff: float

    @property
    def momenta(self) -> np.ndarray:
        return np.array([s.momentum for s in self.scattering])


# ---------------------------------------------------------------------------
# Scattering spectrum
# ---------------------------------------------------------------------------

def _scan_and_bisect(ctx: _Context, k_max: float, scan_step: float, iters: int = 48):
    ks = np.arange(scan_step, k_max + 0.5 * scan_step, scan_step)
    ks = ks[ks <= k_max]
    if len(ks) < 2:
        raise DomainError("k_max too small for the scan step")
    uR, _ = _scan(ctx, ks**2)
    sgn = np.sign(uR)
    flip = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    lo, hi = ks[flip], ks[flip + 1]
    flo = uR[flip]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm, _ = _scan(ctx, mid**2)
        left = flo * fm <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
    _, nodes_lo = _scan(ctx, lo**2)
    return 0.5 * (lo + hi), nodes_lo


def _is_structurally_free(spec: PotentialSpec) -> bool:
    if spec.Vc != 0.0 or spec.has_nonlocal:
        return False
    probe = eval_local(spec, np.linspace(0.0, max(spec.R0, 1.0), 17)[1:])
    return bool(np.all(probe == 0.0))


def _free_box_spectrum(
    spec: PotentialSpec, R: float, k_max: float, keep_waves: bool
) -> BoxSpectrum:
    count = int(math.ceil(k_max * R / math.pi + 0.5 * spec.ell + 2.0))
    zeros = bessel_zeros(spec.ell, R, count)
    roots = zeros[zeros <= k_max]
    spacings = np.diff(roots, prepend=0.0)
    states = []
    n_pts = 4096
    r = np.linspace(0.0, R, n_pts + 1)
    for i, k in enumerate(roots):
        # exact box normalization: integral of j^2 over [0, R] at a zero
        # of j^ is (R/2) j^'(kR)^2
        jp_wall = float(riccati_jl(spec.ell, np.array([k * R]))[1][0])
        scale = math.sqrt(2.0 / (R * spacings[i])) / abs(jp_wall)
        wave = None
        if keep_waves:
            samples = riccati_jl(spec.ell, k * r)[0] * scale
            samples[0] = 0.0
            wave = RadialFunction(
                grid=RadialGrid(R=R, n_points=n_pts + 1),
                samples=samples,
                k2=float(k) ** 2,
            )
        states.append(
            BoxState(
                momentum=float(k),
                wave=wave,
                nodes=i,
                norm_constant=float(scale),
                kind="scattering",
            )
        )
    return BoxSpectrum(
        spec=spec, R=R, bound=(), scattering=tuple(states), k_cutoff=float(k_max)
    )


def find_box_eigenmomenta(
    spec: PotentialSpec,
    R: float,
    k_max: float,
    *,
    grid: Optional[RadialGrid] = None,
    phase_tol: Optional[float] = 1e-8,
    keep_waves: bool = True,
    wave_stride: Optional[int] = None,
    scan_points_per_spacing: int = 6,
) -> BoxSpectrum:
    """All scattering eigenmomenta in (0, k_max] with u(k, R) = 0.

    Roots are bracketed on a scan finer than the asymptotic spacing pi/R and
    refined by bisection to relative 1e-10; joint node counts are verified
    consecutive (a failure triggers one half-step rescan, then a missed-root
    error). States come back box-normalized: integral of u^2 = 1/(k_m -
    k_{m-1}) with k_0 = 0.

    For a structurally free potential the momenta are Riccati-Bessel zeros
    in closed form and the propagated roots carry only discretization
    noise, so with no caller-supplied grid the exact spectrum is returned
    directly. Passing an explicit grid always requests the discretized
    spectrum (kernel subtraction relies on pairing two spectra solved on
    one shared grid).
    """
    if R <= spec.R0:
        raise DomainError("R must exceed R0")
    if grid is None and _is_structurally_free(spec):
        return _free_box_spectrum(spec, R, k_max, keep_waves)
    if grid is None:
        grid = grid_for_phase(spec, R, k_max, phase_tol)
    ctx = _context(spec, grid)
    _check_resolution(ctx, np.array([k_max**2]))
    step = math.pi / (scan_points_per_spacing * R)
    roots, nodes = _scan_and_bisect(ctx, k_max, step)
    if len(roots) > 1 and np.any(np.diff(nodes) != 1):
        roots, nodes = _scan_and_bisect(ctx, k_max, step / 2.0)
        if len(roots) > 1 and np.any(np.diff(nodes) != 1):
            bad = int(np.nonzero(np.diff(nodes) != 1)[0][0])
            raise MissedRootError(
                f"non-consecutive node counts {nodes[bad]} -> {nodes[bad + 1]} "
                f"near k = {roots[bad]:.6g}"
            )
    n = ctx.n
    stride = 0
    if keep_waves:
        stride = wave_stride if wave_stride is not None else max(1, n // 2000)
        while n % stride != 0 or (n // stride) % 2 != 0:
            stride -= 1
    res = propagate_batch(spec, grid, roots**2, stride=stride)
    spacings = np.diff(roots, prepend=0.0)
    scales = 1.0 / np.sqrt(res.norm * spacings)
    states = []
    for i, k in enumerate(roots):
        wave = None
        if keep_waves:
            sub = RadialGrid(R=R, n_points=n // stride + 1)
            wave = RadialFunction(
                grid=sub, samples=res.u_store[i] * scales[i], k2=float(k) ** 2
            )
        states.append(
            BoxState(
                momentum=float(k),
                wave=wave,
                nodes=int(nodes[i]),
                norm_constant=float(scales[i]),
                kind="scattering",
            )
        )
    return BoxSpectrum(
        spec=spec, R=R, bound=(), scattering=tuple(states), k_cutoff=float(k_max)
    )


# ---------------------------------------------------------------------------
# Bound states
# ---------------------------------------------------------------------------

def bound_momentum_bracket(spec: PotentialSpec) -> float:
    """Upper bound for bound-state kappa from the depth of the potential."""
    return math.sqrt(max(0.0, -spec.v_floor)) + abs(spec.origin[0]) + 1.0


def find_box_bound_states(
    spec: PotentialSpec,
    R: float,
    *,
    grid: Optional[RadialGrid] = None,
    phase_tol: Optional[float] = 1e-8,
    n_max: int = 2_000_000,
) -> list:
    """All kappa > 0 with u(-kappa^2, R) = 0, ordered by node count from 0.

    Node-count bisection: the interior node count of the regular solution at
    energy -kappa^2 is a decreasing step function of kappa dropping by one at
    every eigenvalue, so each kappa_n is the boundary between counts n+1 and
    n. Waves are assembled by two-sided shooting glued at the outward
    amplitude maximum and normalized to 1.
    """
    if R <= spec.R0:
        raise DomainError("R must exceed R0")
    kap_max = bound_momentum_bracket(spec)
    if grid is None:
        k_int = math.sqrt(max(0.0, -spec.v_floor) + 4.0 * abs(spec.origin[0])) + 1.0
        grid = grid_for_phase(spec, R, k_int, phase_tol, n_max=n_max)
    ctx = _context(spec, grid)
    kap_lo = 1e-4
    _, nodes0 = _scan(ctx, np.array([-(kap_lo**2)]))
    n_b = int(nodes0[0])
    if n_b == 0:
        return []
    targets = np.arange(n_b)
    lo = np.full(n_b, kap_lo)
    hi = np.full(n_b, kap_max)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        _, g = _scan(ctx, -(mid**2))
        upper = g >= targets + 1
        lo = np.where(upper, mid, lo)
        hi = np.where(upper, hi, mid)
    kappas = 0.5 * (lo + hi)
    j_start = _choose_j_start(spec, ctx.h, -(kappas**2), ctx.n)
    states = []
    for t in range(n_b):
        kap = float(kappas[t])
        k2 = -(kap**2)
        head = _series_head(spec, ctx.h, j_start, np.array([k2]))[0]
        u_out, cl_out, _ = _numerov.propagate_outward_log(
            ctx.W, ctx.h, k2, head, j_start
        )
        with np.errstate(divide="ignore"):
            lm = np.where(u_out != 0.0, np.log(np.abs(u_out)), -np.inf) + cl_out
        # glue at the outer edge of the classically allowed region; beyond it
        # the outward branch is contaminated by the growing solution
        allowed = np.nonzero(ctx.W[1 : ctx.n] <= k2)[0]
        if len(allowed):
            j_c = int(allowed[-1]) + 1
        else:
            j_c = int(np.argmax(lm[: ctx.n]))
        j_c = min(max(j_c, j_start + 2), ctx.n - 2)
        u_in, cl_in = _numerov.propagate_inward_log(ctx.W, ctx.h, k2, j_c)
        # assemble in log space, normalized to magnitude 1 at the glue point
        with np.errstate(divide="ignore"):
            lmi = np.where(u_in != 0.0, np.log(np.abs(u_in)), -np.inf) + cl_in
        s_c = 1.0 if u_out[j_c] >= 0 else -1.0
        u = np.zeros(ctx.n + 1)
        u[: j_c + 1] = np.sign(u_out[: j_c + 1]) * np.exp(lm[: j_c + 1] - lm[j_c])
        sgn_fix = s_c * (1.0 if u_in[j_c] >= 0 else -1.0)
        u[j_c:] = sgn_fix * np.sign(u_in[j_c:]) * np.exp(lmi[j_c:] - lmi[j_c])
        nrm = float(simpson(u * u, dx=ctx.h))
        if nrm <= 0 or not np.isfinite(nrm):
            raise ZeroNormError(f"bound state at kappa={kap} has vanishing norm")
        u /= math.sqrt(nrm)
        nz = np.nonzero(u)[0]
        if len(nz) and u[nz[0]] < 0:
            u = -u
        wave = RadialFunction(grid=grid, samples=u, k2=k2)
        states.append(
            BoxState(
                momentum=kap,
                wave=wave,
                nodes=count_nodes(wave),
                norm_constant=1.0,
                kind="bound",
            )
        )
    return states


# ---------------------------------------------------------------------------
# Normalization and asymptotic matching
# ---------------------------------------------------------------------------

def normalize_box(state: BoxState, spacing: float) -> BoxState:
    """Rescale so the squared integral is 1 (bound) or 1/spacing (scattering)."""
    if state.wave is None:
        raise DomainError("state carries no stored wave")
    if state.kind == "scattering":
        if spacing <= 0:
            raise DomainError("spacing must be > 0 for scattering states")
        target = 1.0 / spacing
    else:
        target = 1.0
    cur = float(simpson(state.wave.samples**2, dx=state.wave.grid.spacing))
    if cur <= 0 or not np.isfinite(cur):
        raise ZeroNormError(
            f"state at momentum {state.momentum} has vanishing norm "
            "(square-integrable continuum state?)"
        )
    scale = math.sqrt(target / cur)
    wave = replace(state.wave, samples=state.wave.samples * scale)
    return replace(state, wave=wave, norm_constant=state.norm_constant * scale)


def match_asymptotics(
    state: BoxState,
    spec: PotentialSpec,
    *,
    n_check: int = 20,
    residual_tol: float = 1e-6,
):
    """Decompose u on (R0, R) over the exact tail solutions F, G.

    Writing u = sqrt(2/pi) N_k (F cos(delta) + G sin(delta)) — equivalently
    sqrt(2/pi) N_k (S+ h+ + S- h-) with S+- = -+(i/2) e^{+-i delta} — the
    amplitudes come from a two-radius linear match (no derivatives needed),
    checked on ``n_check`` tail points. Returns (N_k, delta, S+, S-).
    """
    if state.kind != "scattering":
        raise DomainError("asymptotic matching applies to scattering states")
    if state.wave is None:
        raise DomainError("state carries no stored wave")
    k = state.momentum
    eta = spec.Vc / (2.0 * k)
    g = state.wave.grid
    r = g.points
    u = state.wave.samples
    nlast = g.n_points - 1
    j1 = int(np.searchsorted(r, max(spec.R0 * 1.02, spec.R0 + 2 * g.spacing)))
    if j1 >= nlast - 1:
        raise MatchingError("no tail region beyond R0 on this grid")
    dj = max(1, int(round(math.pi / (2.0 * k) / g.spacing)))
    j2 = min(nlast - 1, j1 + dj)
    A = B = None
    for _ in range(4):
        F, G = coulomb_fg_points(spec.ell, eta, k * np.array([r[j1], r[j2]]))
        det = F[0] * G[1] - F[1] * G[0]
        scale = max(np.max(np.abs(F)), np.max(np.abs(G)))
        if abs(det) > 1e-8 * scale**2:
            A = (u[j1] * G[1] - u[j2] * G[0]) / det
            B = (F[0] * u[j2] - F[1] * u[j1]) / det
            break
        j2 = min(nlast - 1, j2 + max(1, dj // 2))
    if A is None:
        raise MatchingError(f"tail solutions numerically collinear at k={k}")
    N_k = math.hypot(A, B) / math.sqrt(2.0 / math.pi)
    delta = math.atan2(B, A) % (2.0 * math.pi)
    S_plus = -0.5j * complex(math.cos(delta), math.sin(delta))
    S_minus = 0.5j * complex(math.cos(delta), -math.sin(delta))
    idx = np.unique(np.linspace(j1, nlast, n_check).round().astype(int))
    F, G = coulomb_fg_points(spec.ell, eta, k * r[idx])
    fit = A * F + B * G
    ref = float(np.max(np.abs(u[j1:])))
    if ref == 0.0 or not math.isfinite(ref):
        raise MatchingError("wave is zero or non-finite beyond R0")
    res = float(np.max(np.abs(fit - u[idx]))) / ref
    if res > residual_tol:
        raise MatchingError(
            f"tail fit residual {res:.3e} exceeds {residual_tol:.1e} at k={k}"
        )
    return N_k, delta, S_plus, S_minus


# ---------------------------------------------------------------------------
# Open-interval limits and the zero-energy probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtrapolationReport:
    values: tuple
    defects: tuple
    converged: bool

    @property
    def value(self) -> float:
        return self.values[-1]


def open_limit_extrapolate(
    spec: PotentialSpec,
    quantity_probe: Callable[[PotentialSpec, float], float],
    R_sequence: Sequence[float],
) -> ExtrapolationReport:
    """Evaluate a probe across growing boxes and report the Cauchy defect."""
    Rs = list(R_sequence)
    if len(Rs) < 2 or any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise DomainError("R_sequence must be increasing with >= 2 entries")
    vals = [float(quantity_probe(spec, R)) for R in Rs]
    defects = [abs(b - a) for a, b in zip(vals, vals[1:])]
    converged = all(b <= a for a, b in zip(defects, defects[1:]))
    return ExtrapolationReport(
        values=tuple(vals), defects=tuple(defects), converged=converged
    )


@dataclass(frozen=True)
class ZeroEnergyDiagnosis:
    grows: bool
    marginal: bool
    growth_ratio: float
    wave: RadialFunction


def zero_energy_probe(spec: PotentialSpec, R_large: float) -> ZeroEnergyDiagnosis:
    """Integrate the regular solution at k^2 = 0 and test for growth at large r.

    Growth of |u_0| certifies the absence of a zero-energy bound state; a
    ratio near 1 between the outer two quarter-windows is flagged marginal.
    """
    if R_large <= 2.0 * spec.R0:
        raise DomainError("R_large must be well beyond R0")
    k_int = math.sqrt(max(0.0, -spec.v_floor)) + 1.0
    grid = grid_for_phase(spec, R_large, k_int)
    wave = integrate_regular(spec, 0.0, grid)
    n = grid.n_points - 1
    a_mid = float(np.max(np.abs(wave.samples[n // 2 : 3 * n // 4])))
    a_out = float(np.max(np.abs(wave.samples[3 * n // 4 :])))
    ratio = a_out / a_mid if a_mid > 0 else math.inf
    grows = ratio > 1.1
    marginal = 0.9 <= ratio <= 1.1
    return ZeroEnergyDiagnosis(
        grows=grows, marginal=marginal, growth_ratio=ratio, wave=wave
    )
