"""Asymptotic-law studies: WKB defects, spectrum expansions, low-k limits.

Slope oracles are independent closed forms where available (free waves,
Bessel zeros, hydrogenic spectra); elsewhere the tests pin the measured
orders with documented windows.
"""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from completeness_lab import asymptotics as asy
from completeness_lab import potential as pot
from completeness_lab import solver as sv
from completeness_lab.errors import (
    DomainError,
    InsufficientLevelsError,
    TurningPointError,
)

SQ = math.sqrt(2.0 / math.pi)


class TestWkbForms:
    def test_free_two_term_is_exact(self):
        free = pot.free_potential(0.0, R0=1.0)
        r = np.linspace(0.0, 5.0, 40)
        got = asy.wkb_bessel(free, 5.0, r)
        np.testing.assert_allclose(got, SQ * np.sin(5 * r), atol=1e-14)

    def test_free_phase_form_is_exact(self):
        free = pot.free_potential(2.0, R0=1.0)
        r = np.linspace(0.1, 5.0, 20)
        from completeness_lab.specfun import riccati_jl

        j, _ = riccati_jl(2.0, 5.0 * r)
        np.testing.assert_allclose(
            asy.wkb_phase_form(free, 5.0, r), SQ * j, atol=1e-9
        )

    def test_vanishes_at_origin(self):
        sw = pot.square_well(-5.0, 2.0, ell=1.0)
        assert asy.wkb_bessel(sw, 10.0, 0.0) == 0.0

    def test_turning_point_guard(self):
        barrier = pot.square_well(4.0, 2.0)
        with pytest.raises(TurningPointError):
            asy.wkb_bessel(barrier, 1.5, np.array([1.0]))
        with pytest.raises(TurningPointError):
            asy.build_frame(barrier, 1.5, 5.0)

    def test_singular_origin_rejected_in_bessel_variant(self):
        coul = pot.pure_coulomb(-2.0, R0=1.0)
        with pytest.raises(DomainError):
            asy.wkb_bessel(coul, 10.0, np.array([1.0]))

    def test_frame_invariants(self):
        sw = pot.square_well(-5.0, 2.0)
        fr = asy.build_frame(sw, 6.0, 8.0)
        r = np.linspace(0.0, 8.0, 100)
        lam = fr.lam(r)
        assert np.all(lam > 0)
        L = fr.Lam(r)
        assert L[0] == 0.0
        assert np.all(np.diff(L) > 0)
        # free region beyond R0 with Vc = 0: lambda == k there
        assert fr.lam(5.0) == pytest.approx(6.0, rel=1e-12)

    def test_defect_slope_square_well(self):
        sw = pot.square_well(-5.0, 2.0)
        ks = [8.0 * 2 ** (0.5 * i) for i in range(5)]
        rep = asy.wkb_defect_study(sw, ks, 6.0)
        assert rep.passed
        assert np.all(np.diff(rep.defects) < 0)

    def test_phase_form_beats_two_term_at_large_r(self):
        # the two-term form degrades linearly in r through V(r) j'
        sw = pot.square_well(-5.0, 2.0)
        ks = [12.0, 17.0, 24.0]
        two = asy.wkb_defect_study(sw, ks, 20.0, form="two_term")
        ph = asy.wkb_defect_study(sw, ks, 20.0, form="phase")
        assert np.all(ph.defects < two.defects)

    def test_coulomb_variant_exact_for_pure_coulomb(self):
        # subtracting the origin Coulomb part leaves v0 = 0, so the phase
        # form reduces to the exact regular Coulomb wave; only the solver
        # floor remains
        coul = pot.pure_coulomb(-2.0, ell=0.0, R0=1.0)
        rep = asy.wkb_defect_study(
            coul, [25.0, 50.0, 100.0], 6.0, form="phase", variant="coulomb"
        )
        assert np.all(rep.defects < 1e-8)

    def test_coulomb_variant_defect_decays(self):
        spec = pot.composite_sum(
            pot.pure_coulomb(-2.0, R0=1.0), pot.square_well(-3.0, 1.0)
        )
        ks = [25.0, 50.0, 100.0]
        rep = asy.wkb_defect_study(spec, ks, 6.0, form="phase", variant="coulomb")
        assert np.all(np.diff(rep.defects) < 0)
        assert rep.defects[-1] < rep.defects[0] / 4.0

    def test_nonlocal_term_invisible_at_large_k(self):
        sw = pot.square_well(-5.0, 2.0)
        swn = pot.composite_sum(sw, pot.gaussian_nonlocal(1.5, 0.7, 2.0))
        ks = [8.0 * 2 ** (0.5 * i) for i in range(5)]
        base = asy.wkb_defect_study(sw, ks, 6.0)
        with_w = asy.wkb_defect_study(swn, ks, 6.0)
        change = np.abs(with_w.defects - base.defects)
        assert asy.loglog_slope(ks, change) <= -1.75


class TestEigenmomentumExpansion:
    def test_free_ell0_leading_term(self):
        free = pot.free_potential(0.0, R0=1.0)
        pred = asy.eigenmomentum_expansion(50, 10.0, free)
        assert pred.k == pytest.approx(50 * math.pi / 10.0, abs=1e-12)
        assert pred.kappa_free == pytest.approx(pred.k, abs=1e-12)

    def test_free_ell2_formula(self):
        free = pot.free_potential(2.0, R0=1.0)
        pred = asy.eigenmomentum_expansion(50, 10.0, free)
        expected = 51 * math.pi / 10.0 - 6.0 / (2 * 10.0 * 50 * math.pi)
        assert pred.k == pytest.approx(expected, abs=1e-12)

    def test_small_m_rejected(self):
        sw = pot.square_well(-80.0, 2.0)
        with pytest.raises(DomainError):
            asy.eigenmomentum_expansion(1, 10.0, sw)

    def test_remainder_slope_square_well(self):
        sw = pot.square_well(-5.0, 2.0)
        rep = asy.eigenmomentum_defect_study(
            sw, 10.0, [20, 28, 40, 57, 80, 113, 160, 200]
        )
        assert rep.passed  # slope -2 +/- 0.15 on the envelope

    def test_coulomb_log_term_improves_prediction(self):
        # with a Coulomb singularity at the origin the log(2kR) correction
        # must beat the log-free formula for every m in the window
        coul = pot.pure_coulomb(-2.0, ell=0.0, R0=1.0)
        R = 10.0
        ms = list(range(30, 60))
        spectrum = sv.find_box_eigenmomenta(
            coul, R, (ms[-1] + 2) * math.pi / R, phase_tol=1e-9, keep_waves=False
        )
        by = {s.nodes + 1: s for s in spectrum.scattering}
        V0R = pot.integrated_potential(coul, R)
        worse = 0
        for m in ms:
            k_sol = by[m].momentum
            with_log = asy.eigenmomentum_expansion(m, R, coul).k
            lead = m * math.pi / R
            logfree = lead + R * V0R / (2 * R * m * math.pi)
            if abs(k_sol - with_log) >= abs(k_sol - logfree):
                worse += 1
        assert worse == 0, f"{worse} of {len(ms)} indices prefer the log-free form"


class TestNormConstants:
    def test_free_ell0_closed_forms(self):
        # k_m = m pi / R: the normalization bracket is cos^2(m pi) = 1 and
        # both constants collapse to sqrt(2/pi) with no finite-m defect
        from completeness_lab.specfun import riccati_jl

        R = math.pi
        for m in (5, 20, 80):
            x = m * math.pi
            j, jp = riccati_jl(0.0, x)
            jp1, _ = riccati_jl(1.0, x)
            jm1 = jp  # l = 0 downward recurrence
            bracket = j * j - jp1 * jm1
            C = math.sqrt(2.0 / (R * (math.pi / R) * bracket))
            B = math.sqrt(-2.0 / (R * (math.pi / R) * jp1 * jm1))
            assert C == pytest.approx(SQ, abs=1e-12)
            assert B == pytest.approx(SQ, abs=1e-12)

    def test_square_well_C_slope(self):
        sw = pot.square_well(-5.0, 2.0)
        c_rep, _ = asy.norm_constant_study(
            sw, 10.0, [20, 28, 40, 57, 80, 113, 160, 200]
        )
        assert c_rep.passed  # slope -2 +/- 0.2

    def test_bessel_B_defect_is_cubic(self):
        # the generic quadratic term cancels identically for Bessel zeros:
        # the defect times m^3 approaches a constant
        sw3 = pot.square_well(-5.0, 2.0, ell=3.0)
        _, b_rep = asy.norm_constant_study(sw3, 10.0, [20, 40, 80, 160])
        assert -3.1 < b_rep.slope < -2.7
        scaled = b_rep.defects * b_rep.abscissa**3
        assert np.max(scaled) / np.min(scaled) < 1.3


class TestSpacingNorm:
    def test_square_well_R_weighted_spacing_decreases(self):
        sw = pot.square_well(-5.0, 2.0)
        rep = asy.spacing_and_norm_large_R(sw, 2.0, [20.0, 40.0, 80.0, 160.0])
        assert np.all(np.diff(rep.spacing_defects) < 0)
        assert np.all(np.diff(rep.norm_defects) < 0)

    def test_repulsive_coulomb_norm_within_two_percent(self):
        coul = pot.pure_coulomb(1.0, R0=1.0)
        rep = asy.spacing_and_norm_large_R(coul, 2.0, [80.0, 160.0])
        assert rep.norm_defects[-1] < 2e-2


class TestLowKAttractive:
    def test_running_max_stabilizes(self):
        att = pot.pure_coulomb(-2.0, R0=1.0)
        rep = asy.attractive_low_k_bound(att, [200.0, 400.0, 800.0], 0.2)
        assert rep.stable
        assert rep.rel_spread <= 0.2
        assert np.all(rep.running_max < 10.0)

    def test_free_norm_uniformly_one(self):
        free = pot.free_potential(0.0, R0=1.0)
        rep = asy.attractive_low_k_bound(free, [100.0, 200.0], 0.5)
        np.testing.assert_allclose(rep.max_norm_sq, 1.0, atol=1e-3)

    def test_sparse_point_below_running_max(self):
        att = pot.pure_coulomb(-1.0, R0=1.0)
        rep = asy.attractive_low_k_bound(att, [200.0, 400.0], 0.2)
        grid = sv.grid_for_phase(att, 400.0, 2.0, phase_tol=1e-8)
        spectrum = sv.find_box_eigenmomenta(att, 400.0, 0.06, grid=grid)
        s = min(spectrum.scattering, key=lambda s: abs(s.momentum - 0.05))
        N, _, _, _ = sv.match_asymptotics(s, att)
        assert N * N <= rep.running_max[-1] * 1.05

    def test_repulsive_rejected(self):
        with pytest.raises(DomainError):
            asy.attractive_low_k_bound(pot.pure_coulomb(1.0, R0=1.0), [50.0], 0.2)


class TestLowKRepulsive:
    def test_turning_point_formula(self):
        assert asy.repulsive_turning_point(
            pot.pure_coulomb(1.0, R0=1.0), 1.0
        ) == pytest.approx(1.0, abs=1e-14)
        assert asy.repulsive_turning_point(
            pot.free_potential(1.0, R0=1.0), 2.0
        ) == pytest.approx(math.sqrt(32.0) / 8.0, abs=1e-14)

    def test_turning_point_root_oracle(self):
        spec = pot.pure_coulomb(2.0, ell=3.0, R0=1.0)
        k = 0.5
        rt = asy.repulsive_turning_point(spec, k)
        f = lambda r: k * k - 2.0 / r - 12.0 / r**2
        assert rt == pytest.approx(brentq(f, 1.0, 100.0), rel=1e-12)
        assert f(rt * 0.99) < 0 < f(rt * 1.01)

    def test_degenerate_free_tail(self):
        with pytest.raises(TurningPointError):
            asy.repulsive_turning_point(pot.free_potential(0.0), 1.0)

    def test_gamow_ratio_stabilizes(self):
        coul = pot.pure_coulomb(1.0, R0=1.0)
        rep = asy.repulsive_low_k_suppression(coul, [0.2, 0.1, 0.05])
        ratios = rep.defects
        assert np.max(ratios) / np.min(ratios) - 1.0 < 0.05

    def test_centrifugal_power_law(self):
        cent = pot.free_potential(1.0, R0=1.0)
        rep = asy.repulsive_low_k_suppression(cent, [0.2, 0.1, 0.05, 0.025])
        assert rep.predicted == 2.0
        assert abs(rep.slope - 2.0) < 0.05

    def test_attractive_rejected(self):
        with pytest.raises(DomainError):
            asy.repulsive_low_k_suppression(pot.pure_coulomb(-1.0, R0=1.0), [0.1])


class TestBoundScaling:
    def test_hydrogenic(self):
        att = pot.pure_coulomb(-2.0, R0=1.0)
        rep = asy.bound_scaling_study(att, [200.0, 400.0, 800.0])
        assert abs(rep.kappa_fit.slope + 1.0) < 0.05
        assert abs(rep.amplitude_fit.slope + 1.5) < 0.1
        assert rep.quantum_defect == pytest.approx(1.0, abs=0.02)
        ns = np.arange(4, 13)
        np.testing.assert_allclose(
            rep.kappa_fit.defects, 1.0 / (ns + 1), atol=1e-3
        )

    def test_composite_interior_slope(self):
        spec = pot.composite_sum(
            pot.square_well(-1.0, 2.0), pot.pure_coulomb(-2.0, R0=2.0)
        )
        rep = asy.bound_scaling_study(spec, [200.0, 400.0, 800.0])
        assert abs(rep.kappa_fit.slope + 1.0) < 0.05

    def test_too_few_levels(self):
        sw = pot.square_well(-3.0, 2.0)  # no Coulomb tail: rejected outright
        with pytest.raises(DomainError):
            asy.bound_scaling_study(sw, [50.0])
        shallow = pot.pure_coulomb(-0.05, R0=1.0)
        with pytest.raises(InsufficientLevelsError):
            asy.bound_scaling_study(shallow, [30.0, 60.0])


class TestNormEquivalent:
    def test_synthetic_half_range(self):
        rep = asy.norm_equivalent_ratio(None, "synthetic", [100.0, 250.0, 1000.0])
        assert rep.defects[-1] < 1e-3
        assert np.all(np.diff(rep.defects) < 0)

    def test_attractive_scattering(self):
        att = pot.pure_coulomb(-2.0, R0=1.0)
        rep = asy.norm_equivalent_ratio(
            att, "scattering", [50.0, 100.0, 200.0, 400.0], k=0.05
        )
        assert rep.defects[-1] < 2e-2

    def test_bound_state_near_re(self):
        # endpoint partial-oscillation defect scales like kappa ~ 1/n, so a
        # deep level is needed before the ratio settles near 1
        att = pot.pure_coulomb(-2.0, R0=1.0)
        rep = asy.norm_equivalent_ratio(
            att, "bound", [200.0, 500.0, 1e9], kappa=1.0 / 41.0
        )
        assert rep.defects[-1] < 0.03

    def test_bound_clamps_at_half_turning_point(self):
        att = pot.pure_coulomb(-2.0, R0=1.0)
        kappa = 1.0 / 9.0
        r_e = abs(att.Vc) / kappa**2 / 2.0
        rep = asy.norm_equivalent_ratio(att, "bound", [10.0, 1e9], kappa=kappa)
        assert rep.abscissa[-1] == pytest.approx(r_e, rel=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            asy.norm_equivalent_ratio(None, "mystery", [1.0, 2.0])


class TestFitPlumbing:
    def test_loglog_slope_exact_power(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        assert asy.loglog_slope(x, 3.0 * x**-2) == pytest.approx(-2.0, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            asy.loglog_slope([1.0, 2.0], [1.0, 0.0])

    def test_report_pass_band(self):
        rep = asy.FitReport(
            name="x",
            abscissa=np.array([1.0, 2.0]),
            defects=np.array([1.0, 0.25]),
            slope=-2.0,
            predicted=-2.0,
            tolerance=0.1,
        )
        assert rep.passed

    def test_k_min_guard_value(self):
        barrier = pot.square_well(4.5, 2.0)
        assert asy.k_min(barrier) == pytest.approx(4.0, abs=1e-3)
