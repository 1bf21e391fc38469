"""Config-driven experiment runner.

A TOML config names a potential family and one experiment; the runner
executes it, writes CSV artifacts plus the effective configuration, and
prints a pass/fail report. All computations are deterministic, so
identical configs produce byte-identical CSVs (floats are formatted with
17 significant digits everywhere).

Key names carry their unit as a suffix (``R0_length``, ``depth_energy``)
because unit mix-ups are the dominant failure mode in radial-equation
tooling. Unknown keys are a hard error naming the key path.
"""

import argparse
import dataclasses
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from completeness_lab import asymptotics as asy
from completeness_lab import completeness as cp
from completeness_lab import potential as pot
from completeness_lab import solver as sv
from completeness_lab import specfun as sf
from completeness_lab.errors import CompletenessLabError, ConfigError

FMT = "%.17g"

EXPERIMENT_KINDS = (
    "spectrum",
    "kernel-box",
    "kernel-open",
    "expand",
    "coulomb-delta",
    "wkb-check",
    "scaling-study",
    "lowk-study",
    "riemann-study",
    "normseries-study",
    "specfun-probe",
)

# every knob has a recorded default; the effective config spells them out
DEFAULTS = {
    "potential": {
        "family": "square_well",
        "ell": 0.0,
        "Vc_strength": 0.0,
        "R0_length": 2.0,
        "depth_energy": -3.0,
        "radius_length": 1.2,
        "diffuseness_length": 0.3,
        "nonlocal_strength_energy": 0.0,
        "nonlocal_width_length": 0.7,
    },
    "experiment": {
        "kind": "kernel-box",
        "R_length": 20.0,
        "R_sequence_length": [],
        "M_terms": 1500,
        "K_momentum": 200.0,
        "K_sequence_momentum": [],
        "k_values_momentum": [],
        "k_eps_momentum": 0.2,
        "grid_points": 21,
        "quadrature_order": 64,
        "N_bound": 0,
        "accelerated": False,
        "tolerance": 0.0,
        "probe_samples": 200,
    },
    "run": {
        "output_dir": "runs/latest",
        "workers": 0,
    },
}


@dataclass(frozen=True)
class Check:
    """One reported comparison: pass iff measured <= threshold."""

    name: str
    topic: str
    measured: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.threshold


@dataclass
class RunReport:
    experiment: str
    checks: list
    stage_seconds: dict = field(default_factory=dict)

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = [f"experiment: {self.experiment}"]
        w = max((len(c.name) for c in self.checks), default=10)
        for c in self.checks:
            lines.append(
                "  %-*s  measured %s  threshold %s  [%s]  %s"
                % (
                    w,
                    c.name,
                    FMT % c.measured,
                    FMT % c.threshold,
                    c.topic,
                    "pass" if c.passed else "FAIL",
                )
            )
        for stage, secs in self.stage_seconds.items():
            lines.append(f"  stage {stage}: {secs:.2f} s")
        lines.append("overall: %s" % ("PASS" if self.overall_pass else "FAIL"))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def parse_config(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib

    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse failure: {exc}") from exc
    return merge_config(raw)


def merge_config(raw: dict) -> dict:
    cfg = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    for sec, vals in raw.items():
        if sec not in DEFAULTS:
            raise ConfigError(f"unknown config section '{sec}'")
        if not isinstance(vals, dict):
            raise ConfigError(f"section '{sec}' must be a table")
        for key, value in vals.items():
            if key not in DEFAULTS[sec]:
                raise ConfigError(f"unknown config key '{sec}.{key}'")
            default = DEFAULTS[sec][key]
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ConfigError(f"'{sec}.{key}' must be a boolean")
            elif isinstance(default, (int, float)) and not isinstance(
                value, (int, float)
            ):
                raise ConfigError(f"'{sec}.{key}' must be a number")
            elif isinstance(default, str) and not isinstance(value, str):
                raise ConfigError(f"'{sec}.{key}' must be a string")
            elif isinstance(default, list) and not isinstance(value, list):
                raise ConfigError(f"'{sec}.{key}' must be an array")
            cfg[sec][key] = value
    kind = cfg["experiment"]["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"'experiment.kind' must be one of {', '.join(EXPERIMENT_KINDS)}; "
            f"got '{kind}'"
        )
    return cfg


def _toml_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return FMT % value
    if isinstance(value, str):
        return '"%s"' % value
    if isinstance(value, list):
        return "[%s]" % ", ".join(_toml_literal(v) for v in value)
    raise ConfigError(f"unserializable config value {value!r}")


def effective_config_text(cfg: dict) -> str:
    lines = []
    for sec in DEFAULTS:
        lines.append(f"[{sec}]")
        for key in DEFAULTS[sec]:
            lines.append(f"{key} = {_toml_literal(cfg[sec][key])}")
        lines.append("")
    return "\n".join(lines)


def build_potential(pcfg: dict) -> pot.PotentialSpec:
    family = pcfg["family"]
    ell = float(pcfg["ell"])
    Vc = float(pcfg["Vc_strength"])
    R0 = float(pcfg["R0_length"])
    if family == "free":
        base = pot.free_potential(ell, R0=R0)
        if Vc != 0.0:
            raise ConfigError("'potential.Vc_strength' must be 0 for family free")
    elif family == "square_well":
        base = pot.square_well(float(pcfg["depth_energy"]), R0, Vc=Vc, ell=ell)
    elif family == "pure_coulomb":
        base = pot.pure_coulomb(Vc, ell, R0=R0)
    elif family == "woods_saxon":
        base = pot.truncated_woods_saxon(
            float(pcfg["depth_energy"]),
            float(pcfg["radius_length"]),
            float(pcfg["diffuseness_length"]),
            R0,
            Vc=Vc,
            ell=ell,
        )
    else:
        raise ConfigError(
            "'potential.family' must be one of free, square_well, "
            f"pure_coulomb, woods_saxon; got '{family}'"
        )
    strength = float(pcfg["nonlocal_strength_energy"])
    if strength != 0.0:
        base = pot.composite_sum(
            base,
            pot.gaussian_nonlocal(
                strength, float(pcfg["nonlocal_width_length"]), R0, ell=ell
            ),
        )
    return base


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FMT % v
    return str(v)


def write_csv(path: Path, header: str, rows) -> None:
    lines = ["schema_version,1", header]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _default_tol(cfg: dict, fallback: float) -> float:
    tol = float(cfg["experiment"]["tolerance"])
    return tol if tol > 0.0 else fallback


# ---------------------------------------------------------------------------
# Experiment runners; each returns (checks, {csv name: (header, rows)})
# ---------------------------------------------------------------------------

def _run_spectrum(spec, cfg):
    ex = cfg["experiment"]
    R = float(ex["R_length"])
    K = float(ex["K_momentum"])
    spectrum = sv.find_box_eigenmomenta(spec, R, K, phase_tol=1e-10)
    rows = [
        (i + 1, s.momentum, s.nodes, s.norm_constant)
        for i, s in enumerate(spectrum.scattering)
    ]
    bound_rows = [
        (i + 1, s.momentum, s.nodes) for i, s in enumerate(spectrum.bound)
    ]
    nodes = np.array([s.nodes for s in spectrum.scattering])
    pairing_defect = float(np.max(np.abs(np.diff(nodes) - 1), initial=0.0))
    checks = [
        Check("node_pairing_defect", "box-spectrum", pairing_defect, 0.0),
        Check(
            "first_node_count_defect",
            "box-spectrum",
            float(abs(nodes[0] - len(spectrum.bound))),
            0.0,
        ),
    ]
    if spec.Vc == 0.0 and not spec.has_nonlocal:
        probe = spec.local(np.linspace(0.0, spec.R0, 7))
        if np.all(probe == 0.0):
            exact = sf.bessel_zeros(spec.ell, R, len(rows))
            defect = float(
                np.max(np.abs(spectrum.momenta - exact[: len(rows)]))
            )
            checks.append(
                Check(
                    "free_momentum_defect",
                    "box-spectrum",
                    defect,
                    _default_tol(cfg, 1e-10),
                )
            )
    return checks, {
        "momenta.csv": ("index,momentum,nodes,norm_constant", rows),
        "bound.csv": ("index,momentum,nodes", bound_rows),
    }


def _kernel_rows(field):
    rows = []
    for i, r in enumerate(field.r_grid):
        for j, rp in enumerate(field.rp_grid):
            rows.append(
                (
                    r,
                    rp,
                    field.values[i, j],
                    field.truncation,
                    1 if field.accelerated else 0,
                    field.kind,
                )
            )
    return rows


def _run_kernel_box(spec, cfg):
    ex = cfg["experiment"]
    R = float(ex["R_length"])
    grid = cp.default_kernel_grid(spec, R, n=int(ex["grid_points"]))
    field = cp.kernel_box(
        spec, R, grid, grid, int(ex["M_terms"]), accelerated=bool(ex["accelerated"])
    )
    tol = _default_tol(cfg, 5e-3 * 2.0 / math.pi)
    checks = [Check("max_abs_S_R", "box-kernel", field.max_abs, tol)]
    if field.splice_residual is not None:
        checks.append(
            Check("splice_residual", "box-kernel", field.splice_residual, 1e-2)
        )
    return checks, {
        "kernel.csv": ("r,r_prime,value,truncation,accelerated,kind", _kernel_rows(field))
    }


def _run_kernel_open(spec, cfg):
    ex = cfg["experiment"]
    R_span = float(ex["R_length"])
    grid = cp.default_kernel_grid(spec, R_span, n=int(ex["grid_points"]))
    field = cp.kernel_open(
        spec,
        grid,
        grid,
        float(ex["K_momentum"]),
        int(ex["quadrature_order"]),
        N_bound=int(ex["N_bound"]),
    )
    tol = _default_tol(cfg, 1e-2)
    checks = [
        Check("max_abs_S", "open-kernel", field.max_abs, tol),
        Check(
            "low_k_not_converged",
            "open-kernel",
            0.0 if field.low_k_converged else 1.0,
            0.5,
        ),
    ]
    return checks, {
        "kernel.csv": ("r,r_prime,value,truncation,accelerated,kind", _kernel_rows(field))
    }


def _run_expand(spec, cfg):
    ex = cfg["experiment"]
    R = float(ex["R_length"])
    basis = sv.find_box_eigenmomenta(spec, R, 6.0, keep_waves=True, wave_stride=1)
    idx = 2
    u = basis.scattering[idx].wave
    dk = basis.momenta[idx] - basis.momenta[idx - 1]
    res_e = cp.expand_function(
        lambda r: u(r) * math.sqrt(dk),
        basis,
        np.linspace(0.05 * R, 0.95 * R, 21),
        target="eigenstate",
    )
    coeffs = np.abs(res_e.scattering_coeffs)
    unit_defect = float(abs(coeffs[idx] - 1.0))
    off_diag = float(np.max(np.delete(coeffs, idx)))

    M = int(ex["M_terms"])
    half = 5.0

    def rstep(r):
        if r >= half:
            return 0.0
        return min(r / 0.5, 1.0)

    free_basis = cp.FreeBoxBasis(spec.ell, 2.0 * half, M)
    res_s = cp.expand_function(
        rstep,
        free_basis,
        np.array([half]),
        discontinuities=(half,),
        accelerated=True,
        target="step",
    )
    midpoint_defect = float(abs(res_s.reconstruction[half] - 0.5))

    def bump(r):
        if not 1.0 < r < 2.0:
            return 0.0
        return math.exp(-1.0 / ((r - 1.0) * (2.0 - r)))

    r_eval = np.linspace(0.5, 2.5, 101)
    res_b = cp.expand_function(
        bump, free_basis, r_eval, support=(1.0, 2.0), target="bump"
    )
    bump_sup = max(
        abs(res_b.reconstruction[float(r)] - bump(float(r))) for r in r_eval
    )
    checks = [
        Check("eigenstate_unit_defect", "expansion", unit_defect, 1e-6),
        Check("eigenstate_off_diagonal", "expansion", off_diag, 1e-6),
        Check("step_midpoint_defect", "expansion", midpoint_defect, 1e-2),
        Check("bump_sup_error", "expansion", float(bump_sup), 1e-3),
    ]
    coeff_rows = [
        (m, c) for m, c in zip(res_e.momenta, res_e.scattering_coeffs)
    ]
    recon_rows = [(r, v) for r, v in sorted(res_b.reconstruction.items())]
    return checks, {
        "eigenstate_coeffs.csv": ("momentum,coefficient", coeff_rows),
        "bump_reconstruction.csv": ("r,value", recon_rows),
    }


def _run_coulomb_delta(spec, cfg):
    ex = cfg["experiment"]
    K = float(ex["K_momentum"])
    ell = spec.ell
    Vc = spec.Vc
    r, rp = 1.3, 0.8
    free_val = cp.coulomb_delta_kernel(ell, 0.0, r, rp, K)
    if ell == 0.0:
        ref = (
            math.sin(K * (r - rp)) / (r - rp)
            - math.sin(K * (r + rp)) / (r + rp)
        ) / math.pi
        closed_defect = abs(free_val - ref)
    else:
        closed_defect = 0.0
    sig = 0.18
    g = lambda x: math.exp(-0.5 * ((x - 1.5) / sig) ** 2) / (
        sig * math.sqrt(2.0 * math.pi)
    )
    smeared = cp.coulomb_delta_weak_limit(ell, Vc, g, 1.5, K, (0.8, 2.2))
    weak_defect = abs(smeared - g(1.5))
    freq = cp.kernel_peak_frequency(ell, Vc, 1.2, K)
    freq_defect = abs(freq - K) / K
    radii = np.linspace(0.6, 1.8, 7)
    field = cp.coulomb_delta_field(ell, Vc, radii, radii, K)
    checks = [
        Check("closed_form_defect", "coulomb-delta", closed_defect, 1e-10),
        Check(
            "weak_limit_defect", "coulomb-delta", weak_defect, _default_tol(cfg, 2e-2)
        ),
        Check("peak_frequency_rel_defect", "coulomb-delta", freq_defect, 1e-2),
    ]
    return checks, {
        "kernel.csv": ("r,r_prime,value,truncation,accelerated,kind", _kernel_rows(field))
    }


def _run_wkb_check(spec, cfg):
    ex = cfg["experiment"]
    ks = [float(k) for k in ex["k_values_momentum"]] or [
        8.0 * 2.0 ** (0.5 * i) for i in range(5)
    ]
    R = min(float(ex["R_length"]), 6.0)
    if spec.has_nonlocal:
        local = dataclasses.replace(
            spec, nonlocal_kernel=None, family_tag=spec.family_tag + "|local-part"
        )
        base = asy.wkb_defect_study(local, ks, R)
        with_w = asy.wkb_defect_study(spec, ks, R)
        change = np.abs(with_w.defects - base.defects)
        slope = asy.loglog_slope(ks, change)
        checks = [
            Check("local_defect_slope_error", "wkb", abs(base.slope + 2.0), 0.25),
            Check("nonlocal_change_slope", "wkb", slope, -2.0 + 0.25),
        ]
        rows = list(zip(ks, base.defects, with_w.defects, change))
        return checks, {
            "wkb_defects.csv": ("k,defect_local,defect_with_kernel,change", rows)
        }
    rep = asy.wkb_defect_study(spec, ks, R)
    checks = [Check("defect_slope_error", "wkb", abs(rep.slope + 2.0), 0.25)]
    rows = list(zip(ks, rep.defects))
    return checks, {"wkb_defects.csv": ("k,defect", rows)}


def _run_scaling_study(spec, cfg):
    ex = cfg["experiment"]
    Rs = [float(R) for R in ex["R_sequence_length"]] or [200.0, 400.0, 800.0]
    rep = asy.bound_scaling_study(spec, Rs)
    checks = [
        Check(
            "kappa_slope_error", "bound-scaling", abs(rep.kappa_fit.slope + 1.0), 0.05
        ),
        Check(
            "amplitude_slope_error",
            "bound-scaling",
            abs(rep.amplitude_fit.slope + 1.5),
            0.1,
        ),
    ]
    rr = np.linspace(0.3 * spec.R0, spec.R0, 7)
    pure_tail = np.allclose(spec.local(rr), spec.Vc / rr, rtol=1e-12, atol=0.0)
    if pure_tail and not spec.has_nonlocal and spec.Vc < 0.0:
        # abscissa holds the principal quantum number directly
        ns = rep.kappa_fit.abscissa
        hyd = np.abs(spec.Vc) / (2.0 * ns)
        defect = float(np.max(np.abs(rep.kappa_fit.defects - hyd)))
        checks.append(Check("hydrogenic_kappa_defect", "bound-scaling", defect, 1e-3))
    rows = list(zip(rep.kappa_fit.abscissa, rep.kappa_fit.defects))
    return checks, {"kappa_n.csv": ("n,kappa", rows)}


def _run_lowk_study(spec, cfg):
    ex = cfg["experiment"]
    if spec.Vc < 0.0:
        Rs = [float(R) for R in ex["R_sequence_length"]] or [200.0, 400.0, 800.0]
        rep = asy.attractive_low_k_bound(spec, Rs, float(ex["k_eps_momentum"]))
        checks = [
            Check(
                "bound_not_stable", "low-k", 0.0 if rep.stable else 1.0, 0.5
            ),
            Check("running_max_rel_spread", "low-k", rep.rel_spread, 0.2),
        ]
        rows = list(zip(rep.R_values, rep.max_norm_sq, rep.running_max))
        return checks, {"lowk_bound.csv": ("R,max_norm_sq,running_max", rows)}
    ks = [float(k) for k in ex["k_values_momentum"]] or [0.2, 0.1, 0.05]
    rep = asy.repulsive_low_k_suppression(spec, ks)
    rows = list(zip(rep.abscissa, rep.defects))
    if spec.Vc > 0.0:
        spread = float(np.max(rep.defects) / np.min(rep.defects) - 1.0)
        checks = [Check("gamow_ratio_spread", "low-k", spread, 0.05)]
    else:
        checks = [
            Check(
                "centrifugal_exponent_error",
                "low-k",
                abs(rep.slope - rep.predicted),
                0.05,
            )
        ]
    return checks, {"lowk_suppression.csv": ("k,ratio", rows)}


def _run_riemann_study(spec, cfg):
    ex = cfg["experiment"]
    Ks = [float(K) for K in ex["K_sequence_momentum"]]
    if Ks:
        Rs = [float(R) for R in ex["R_sequence_length"]] or [40.0]
        rep = cp.riemann_vs_integral_study(spec, Rs, Ks)
        checks = [Check("cutoff_remainder_slope", "finite-R-defects", rep.slope, -1.0)]
        rows = list(zip(rep.abscissa, rep.defects))
        return checks, {"riemann_defects.csv": ("K,defect", rows)}
    Rs = [float(R) for R in ex["R_sequence_length"]] or [20.0, 40.0, 80.0]
    rep = cp.riemann_vs_integral_study(spec, Rs, float(ex["K_momentum"]))
    worst_increase = float(np.max(np.diff(rep.defects), initial=-math.inf))
    checks = [Check("defect_R_increase", "finite-R-defects", worst_increase, 0.0)]
    rows = list(zip(rep.abscissa, rep.defects))
    return checks, {"riemann_defects.csv": ("R,defect", rows)}


def _run_normseries_study(spec, cfg):
    ex = cfg["experiment"]
    Rs = [float(R) for R in ex["R_sequence_length"]] or [20.0, 40.0, 80.0]
    rep = cp.norm_defect_series_study(spec, Rs, float(ex["k_eps_momentum"]))
    mags = np.abs(np.asarray(rep.series_values))
    worst_increase = float(np.max(np.diff(mags), initial=-math.inf))
    checks = [
        Check("series_R_increase", "finite-R-defects", worst_increase, 0.0),
    ]
    if rep.mn_fit is not None:
        checks.append(
            Check(
                "envelope_halving_slope_error",
                "finite-R-defects",
                abs(rep.mn_fit.slope - rep.mn_fit.predicted),
                rep.mn_fit.tolerance,
            )
        )
    rows = list(zip(rep.R_values, rep.series_values, rep.M_N_values))
    return checks, {"norm_series.csv": ("R,series_value,envelope", rows)}


def _run_specfun_probe(spec, cfg):
    n = int(cfg["experiment"]["probe_samples"])
    rng = np.random.default_rng(1234)
    ells = rng.uniform(0.0, 10.0, n)
    etas = rng.uniform(-5.0, 5.0, n)
    rhos = rng.uniform(0.1, 100.0, n)
    rows = []
    worst_w = 0.0
    worst_red = 0.0
    for ell, eta, rho in zip(ells, etas, rhos):
        vals = sf.coulomb_wave(sf.CoulombParams(ell=float(ell), eta=float(eta)), float(rho))
        wdef = abs(vals.wronskian - 1.0)
        worst_w = max(worst_w, wdef)
        rows.append((ell, eta, rho, vals.f, vals.g, wdef))
    for ell, rho in zip(ells[:50], rhos[:50]):
        near = sf.coulomb_wave(
            sf.CoulombParams(ell=float(ell), eta=1e-10), float(rho)
        )
        j, _ = sf.riccati_jl(float(ell), float(rho))
        scale = max(1.0, abs(float(j)))
        worst_red = max(worst_red, abs(near.f - float(j)) / scale)
    checks = [
        Check("wronskian_defect", "special-functions", worst_w, 1e-9),
        Check("free_limit_defect", "special-functions", worst_red, 1e-7),
    ]
    return checks, {
        "wronskian_samples.csv": ("ell,eta,rho,F,G,wronskian_defect", rows)
    }


RUNNERS = {
    "spectrum": _run_spectrum,
    "kernel-box": _run_kernel_box,
    "kernel-open": _run_kernel_open,
    "expand": _run_expand,
    "coulomb-delta": _run_coulomb_delta,
    "wkb-check": _run_wkb_check,
    "scaling-study": _run_scaling_study,
    "lowk-study": _run_lowk_study,
    "riemann-study": _run_riemann_study,
    "normseries-study": _run_normseries_study,
    "specfun-probe": _run_specfun_probe,
}


def run(cfg: dict, output_dir=None) -> RunReport:
    """Execute one experiment config and emit its artifacts.

    Stage wall-clock times appear only in the textual report; the CSV
    artifacts carry the measured numbers and are byte-stable across runs
    and worker counts.
    """
    workers = int(cfg["run"]["workers"])
    if workers > 0:
        os.environ["COMPLETENESS_LAB_WORKERS"] = str(workers)
    out = Path(output_dir if output_dir is not None else cfg["run"]["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    kind = cfg["experiment"]["kind"]
    t0 = time.perf_counter()
    spec = build_potential(cfg["potential"])
    t1 = time.perf_counter()
    try:
        checks, artifacts = RUNNERS[kind](spec, cfg)
    except CompletenessLabError as exc:
        raise type(exc)(f"stage '{kind}': {exc}") from exc
    t2 = time.perf_counter()
    for name, (header, rows) in artifacts.items():
        write_csv(out / name, header, rows)
    check_rows = [
        (c.name, c.topic, c.measured, c.threshold, 1 if c.passed else 0)
        for c in checks
    ]
    write_csv(out / "checks.csv", "name,topic,measured,threshold,passed", check_rows)
    (out / "effective_config.toml").write_text(effective_config_text(cfg))
    t3 = time.perf_counter()
    report = RunReport(
        experiment=f"{kind} ({cfg['potential']['family']})",
        checks=checks,
        stage_seconds={
            "setup": t1 - t0,
            "compute": t2 - t1,
            "emit": t3 - t2,
        },
    )
    (out / "report.txt").write_text(report.render() + "\n")
    return report


# ---------------------------------------------------------------------------
# Shipped benchmarks
# ---------------------------------------------------------------------------

BENCHMARKS = {
    "bench-free": (
        "free-particle box spectrum: exact momenta and trivial kernel",
        "box-spectrum",
        {
            "potential": {"family": "free", "R0_length": 1.0},
            "experiment": {"kind": "spectrum", "R_length": math.pi, "K_momentum": 50.4},
        },
    ),
    "bench-sw1": (
        "square-well box kernel, accelerated tail, M=1500",
        "box-kernel",
        {
            "potential": {"family": "square_well"},
            "experiment": {
                "kind": "kernel-box",
                "R_length": 20.0,
                "M_terms": 1500,
                "accelerated": True,
            },
        },
    ),
    "bench-sw-open": (
        "square-well open kernel at K=200 with its bound state",
        "open-kernel",
        {
            "potential": {"family": "square_well"},
            "experiment": {
                "kind": "kernel-open",
                "R_length": 20.0,
                "K_momentum": 200.0,
                "grid_points": 11,
                "N_bound": 1,
            },
        },
    ),
    "bench-coul-att": (
        "attractive Coulomb bound-state scaling (hydrogenic oracle)",
        "bound-scaling",
        {
            "potential": {"family": "pure_coulomb", "Vc_strength": -2.0, "R0_length": 1.0},
            "experiment": {"kind": "scaling-study"},
        },
    ),
    "bench-coul-rep": (
        "repulsive Coulomb delta kernel: closed form, weak limit, frequency",
        "coulomb-delta",
        {
            "potential": {"family": "pure_coulomb", "Vc_strength": 1.0, "R0_length": 1.0},
            "experiment": {"kind": "coulomb-delta", "K_momentum": 300.0},
        },
    ),
    "bench-nonlocal": (
        "square well plus separable Gaussian kernel: WKB defect-change rate",
        "wkb",
        {
            "potential": {
                "family": "square_well",
                "depth_energy": -5.0,
                "nonlocal_strength_energy": 1.5,
            },
            "experiment": {"kind": "wkb-check", "R_length": 6.0},
        },
    ),
    "bench-expand": (
        "eigenstate self-expansion, step midpoint, smooth bump",
        "expansion",
        {
            "potential": {"family": "square_well"},
            "experiment": {"kind": "expand", "R_length": 20.0, "M_terms": 2000},
        },
    ),
    "bench-riemann": (
        "box series vs open integral defect along growing boxes",
        "finite-R-defects",
        {
            "potential": {"family": "square_well"},
            "experiment": {
                "kind": "riemann-study",
                "R_sequence_length": [20.0, 40.0, 80.0],
                "K_momentum": 12.0,
            },
        },
    ),
    "bench-normseries": (
        "low-momentum normalization defect series along growing boxes",
        "finite-R-defects",
        {
            "potential": {"family": "square_well"},
            "experiment": {
                "kind": "normseries-study",
                "R_sequence_length": [20.0, 40.0, 80.0],
                "k_eps_momentum": 0.5,
            },
        },
    ),
    "bench-lowk": (
        "repulsive Coulomb low-momentum Gamow suppression",
        "low-k",
        {
            "potential": {"family": "pure_coulomb", "Vc_strength": 1.0, "R0_length": 1.0},
            "experiment": {"kind": "lowk-study", "k_values_momentum": [0.2, 0.1, 0.05]},
        },
    ),
    "bench-specfun": (
        "Coulomb wave Wronskian and free-limit sample",
        "special-functions",
        {
            "potential": {"family": "free", "R0_length": 1.0},
            "experiment": {"kind": "specfun-probe", "probe_samples": 200},
        },
    ),
}


def benchmark_config(name: str) -> dict:
    if name not in BENCHMARKS:
        raise ConfigError(
            f"unknown benchmark '{name}'; see the list subcommand"
        )
    _, _, overrides = BENCHMARKS[name]
    return merge_config(overrides)


def list_benchmarks() -> str:
    lines = []
    for name, (desc, topic, _) in BENCHMARKS.items():
        lines.append(f"{name:18s} [{topic}] {desc}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="completeness-lab",
        description="Completeness-kernel experiments for radial Hamiltonians",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_bench = sub.add_parser("bench", help="run a shipped benchmark")
    p_bench.add_argument("name")
    p_bench.add_argument("--output-dir", default=None)
    sub.add_parser("list", help="list shipped benchmarks")
    p_probe = sub.add_parser(
        "specfun-probe", help="evaluate a special function at a point"
    )
    p_probe.add_argument("fn", choices=["riccati-j", "riccati-g", "coulomb-fg"])
    p_probe.add_argument("args", nargs="+", type=float)
    ns = parser.parse_args(argv)

    try:
        if ns.command == "list":
            print(list_benchmarks())
            return 0
        if ns.command == "specfun-probe":
            if ns.fn == "riccati-j":
                ell, x = ns.args
                j, jp = sf.riccati_jl(ell, x)
                print(FMT % j, FMT % jp)
            elif ns.fn == "riccati-g":
                ell, x = ns.args
                g, gp = sf.riccati_gl(ell, x)
                print(FMT % g, FMT % gp)
            else:
                ell, eta, rho = ns.args
                v = sf.coulomb_wave(sf.CoulombParams(ell=ell, eta=eta), rho)
                print(FMT % v.f, FMT % v.fp, FMT % v.g, FMT % v.gp)
            return 0
        if ns.command == "run":
            cfg = parse_config(ns.config)
        else:
            cfg = benchmark_config(ns.name)
        report = run(cfg, output_dir=ns.output_dir)
        print(report.render())
        return 0 if report.overall_pass else 1
    except CompletenessLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
