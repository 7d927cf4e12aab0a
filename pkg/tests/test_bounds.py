"""Tests for the loss-plus-diffusion bound."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from su11_metrology.bounds import (
    BoundBreakdown,
    NoiseParams,
    VariationalParams,
    bound_breakdown,
    braced_objective,
    c_q_objective,
    delta_phi_bound,
    diffusion_floor,
    gamma_lambda_closed_form,
    loss_ceiling,
    minimize_gamma,
    minimize_gamma_numeric,
    optimal_c_phi,
    optimal_lambda,
    qfi_lossless,
)
from su11_metrology.exceptions import DegenerateMoments, ZeroInformation
from su11_metrology.gaussian import InputSpec, PhotonMoments, PumpSpec, propagate


def _tmsv(g):
    return propagate(InputSpec(), PumpSpec.create(g))


def _random_case(rng):
    spec = InputSpec.create(
        alpha=math.sqrt(rng.uniform(0.0, 4.0)),
        r=rng.uniform(0.0, 1.5),
        alpha_phase=rng.uniform(0.0, 2 * math.pi),
        squeeze_phase=rng.uniform(0.0, 2 * math.pi),
    )
    m = propagate(spec, PumpSpec.create(rng.uniform(0.1, 2.0)))
    noise = NoiseParams.create(
        eta_a=rng.uniform(0.5, 1.0),
        eta_b=rng.uniform(0.5, 1.0),
        beta_a=rng.uniform(0.0, 0.1),
        beta_b=rng.uniform(0.0, 0.1),
    )
    return m, noise


REDUCTION_INPUTS = [
    (0.0, 0.0, 2.0),
    (1.0, 0.5, 1.0),
    (1.5, 1.0, 2.0),
    (0.5, 0.2, 0.5),
    (2.0, 0.0, 1.5),
]


class TestNoiseParams:
    """Test cases for NoiseParams."""

    def test_defaults_are_noiseless(self):
        """Test the default parameters describe no noise."""
        noise = NoiseParams()
        assert noise.loss_a == 0.0
        assert noise.loss_b == 0.0
        assert diffusion_floor(noise) == 0.0

    @pytest.mark.parametrize("eta", [0.0, -0.1, 1.5, math.nan])
    def test_transmission_out_of_range(self, eta):
        """Test transmissions outside (0, 1] are rejected with the key name."""
        with pytest.raises(ValidationError, match=r"eta_a=.* outside accepted range \(0, 1\]"):
            NoiseParams.create(eta_a=eta)

    def test_negative_diffusion_rejected(self):
        """Test negative β is rejected."""
        with pytest.raises(ValidationError, match="beta_b"):
            NoiseParams.create(beta_b=-0.01)

    def test_symmetric_and_copies(self):
        """Test equal-arm construction and with_* copies."""
        noise = NoiseParams.symmetric(0.9, 0.02)
        assert (noise.eta_a, noise.eta_b, noise.beta_a, noise.beta_b) == (0.9, 0.9, 0.02, 0.02)
        assert noise.with_eta(0.7).eta_b == 0.7
        assert noise.with_eta(0.7).beta_a == 0.02
        assert noise.with_beta(0.0).beta_b == 0.0


class TestVariationalParams:
    """Test cases for VariationalParams."""

    def test_lambda_alias(self):
        """Test λ can be given under its alias."""
        v = VariationalParams.model_validate({"gamma_prime_a": 1.0, "lambda": -0.2})
        assert v.lam == -0.2
        assert v.gamma_prime_b == 0.0

    def test_non_finite_rejected(self):
        """Test non-finite parameters are rejected."""
        with pytest.raises(ValidationError, match="gamma_prime_a"):
            VariationalParams.create(gamma_a=math.inf)


class TestObjective:
    """Test cases for C_Q and its braced factor."""

    def test_gauge_zero_is_lossless_qfi(self):
        """Test γ′ = 0, λ = 0 gives 4Var(K_z) for any loss."""
        m = propagate(InputSpec.create(alpha=1.0, r=0.5), PumpSpec.create(1.0))
        for eta in (0.5, 0.8, 1.0):
            value = c_q_objective(m, NoiseParams.symmetric(eta, 0.03), VariationalParams())
            assert value == pytest.approx(4 * m.kz_variance, rel=1e-12)

    def test_lossless_ignores_gauge(self):
        """Test the braced factor is independent of γ′ when η = 1."""
        m = _tmsv(1.0)
        assert braced_objective(m, NoiseParams(), 3.0, -2.0) == pytest.approx(qfi_lossless(m))

    def test_zero_diffusion_penalizes_rotation(self):
        """Test λ ≠ 0 at β = 0 gives an infinite bound."""
        m = _tmsv(1.0)
        assert c_q_objective(m, NoiseParams(), VariationalParams.create(lam=-0.1)) == math.inf

    def test_diffusion_penalty(self):
        """Test the λ²/8β² terms."""
        m = _tmsv(0.5)
        noise = NoiseParams.symmetric(1.0, 0.1)
        v = VariationalParams.create(lam=-0.5)
        expected = 0.25 * qfi_lossless(m) + 2 * 0.25 / (8 * 0.01)
        assert c_q_objective(m, noise, v) == pytest.approx(expected, rel=1e-12)


class TestReductions:
    """Test the noiseless, loss-only and diffusion-only limits."""

    def test_noiseless_recovery(self):
        """Test Δφ = 1/sinh(4) for the g = 2 TMSV without noise."""
        report = bound_breakdown(_tmsv(2.0), NoiseParams())
        assert report.delta_phi == pytest.approx(1 / math.sinh(4.0), rel=1e-12)
        assert report.f_q_lossless == pytest.approx(math.sinh(4.0) ** 2, rel=1e-12)

    @pytest.mark.parametrize("alpha,r,g", REDUCTION_INPUTS)
    @pytest.mark.parametrize("eta", [0.5, 0.625, 0.75, 0.875, 1.0])
    def test_loss_only(self, alpha, r, g, eta):
        """Test β = 0 gives λ_opt = 0 and Δφ = sqrt(1/C̃_Q)."""
        m = propagate(InputSpec.create(alpha=alpha, r=r), PumpSpec.create(g))
        report = bound_breakdown(m, NoiseParams.symmetric(eta, 0.0))
        assert report.lambda_opt == 0.0
        assert report.c_phi == report.c_tilde
        assert report.delta_phi == pytest.approx(math.sqrt(1 / report.c_tilde), rel=1e-12)

    @pytest.mark.parametrize("alpha,r,g", REDUCTION_INPUTS)
    @pytest.mark.parametrize("beta", [0.0, 0.003, 0.01, 0.1])
    def test_diffusion_only(self, alpha, r, g, beta):
        """Test η = 1 gives Δφ = sqrt(1/F_Q + 4β²)."""
        m = propagate(InputSpec.create(alpha=alpha, r=r), PumpSpec.create(g))
        report = bound_breakdown(m, NoiseParams.symmetric(1.0, beta))
        f_q = qfi_lossless(m)
        assert report.c_tilde == pytest.approx(f_q, rel=1e-12)
        assert report.delta_phi == pytest.approx(math.sqrt(1 / f_q + 4 * beta**2), rel=1e-12)
        assert report.c_phi == pytest.approx(f_q / (1 + 4 * beta**2 * f_q), rel=1e-12)

    @pytest.mark.parametrize("alpha,r,g", REDUCTION_INPUTS)
    @pytest.mark.parametrize(
        "eta,betas", [(1.0, (1e-8, 1e-8)), (0.9, (1e-8, 1e-8)), (0.9, (1e-8, 0.0))]
    )
    def test_continuous_at_zero_diffusion(self, alpha, r, g, eta, betas):
        """Test a vanishing β moves Δφ by less than 1e-6."""
        m = propagate(InputSpec.create(alpha=alpha, r=r), PumpSpec.create(g))
        clean = bound_breakdown(m, NoiseParams.symmetric(eta, 0.0))
        noisy = bound_breakdown(m, NoiseParams.create(eta, eta, *betas))
        assert abs(noisy.delta_phi - clean.delta_phi) < 1e-6

    def test_one_arm_diffusion_free(self):
        """Test the floor and λ_opt vanish when one arm has β = 0."""
        m = _tmsv(1.0)
        noise = NoiseParams.create(eta_a=0.9, eta_b=0.9, beta_a=0.0, beta_b=0.05)
        report = bound_breakdown(m, noise)
        assert report.diffusion_floor == 0.0
        assert report.lambda_opt == 0.0
        assert report.c_phi == pytest.approx(report.c_tilde, rel=1e-15)

    def test_lambda_closed_form(self):
        """Test λ_opt and C_φ for equal arms."""
        noise = NoiseParams.symmetric(0.9, 0.05)
        c_tilde = 100.0
        beta2 = 0.05**2
        assert optimal_lambda(c_tilde, noise) == pytest.approx(
            -8 * c_tilde * beta2**2 / (8 * c_tilde * beta2**2 + 2 * beta2)
        )
        assert optimal_c_phi(c_tilde, noise) == pytest.approx(c_tilde / (1 + 4 * beta2 * c_tilde))
        assert diffusion_floor(noise) == pytest.approx(4 * beta2)


class TestOptimizer:
    """Test the γ′ and λ optimum against direct evaluation."""

    def test_random_draws_never_beat_optimum(self):
        """Test C_Q at the optimum is below C_Q at random variational points."""
        rng = np.random.default_rng(7)
        for _ in range(50):
            m, noise = _random_case(rng)
            report = bound_breakdown(m, noise)
            optimum = VariationalParams.create(*report.gamma_opt, report.lambda_opt)
            best = c_q_objective(m, noise, optimum)
            assert best == pytest.approx(report.c_phi, rel=1e-9)
            draws = rng.uniform([-2.0, -2.0, -1.0], [6.0, 6.0, 0.5], size=(1000, 3))
            values = [
                c_q_objective(m, noise, VariationalParams.create(*row)) for row in draws
            ]
            assert best <= min(values) * (1 + 1e-12)

    def test_finite_difference_stationarity(self):
        """Test the braced factor is stationary at γ′_opt."""
        rng = np.random.default_rng(11)
        for _ in range(50):
            m, noise = _random_case(rng)
            (gamma_a, gamma_b), c_tilde = minimize_gamma(m, noise)
            for index in range(2):
                base = [gamma_a, gamma_b]
                step = 1e-5 * max(1.0, abs(base[index]))
                plus, minus = list(base), list(base)
                plus[index] += step
                minus[index] -= step
                slope = (
                    braced_objective(m, noise, *plus) - braced_objective(m, noise, *minus)
                ) / (2 * step)
                assert abs(slope) * max(1.0, abs(base[index])) / c_tilde < 1e-6

    def test_numeric_route_agrees(self):
        """Test BFGS reproduces the exact minimum."""
        rng = np.random.default_rng(3)
        for _ in range(10):
            m, noise = _random_case(rng)
            _, exact = minimize_gamma(m, noise)
            _, numeric = minimize_gamma_numeric(m, noise)
            assert numeric == pytest.approx(exact, rel=1e-8)

    def test_loss_ceiling(self):
        """Test C̃_Q never exceeds Σ η⟨n⟩/(1−η)."""
        rng = np.random.default_rng(5)
        for _ in range(50):
            m, noise = _random_case(rng)
            noise = NoiseParams.create(
                min(noise.eta_a, 0.99), min(noise.eta_b, 0.99), noise.beta_a, noise.beta_b
            )
            assert bound_breakdown(m, noise).c_tilde <= loss_ceiling(m, noise) * (1 + 1e-12)

    def test_loss_ceiling_lossless_is_infinite(self):
        """Test a lossless arm carrying photons lifts the ceiling."""
        assert loss_ceiling(_tmsv(1.0), NoiseParams.create(eta_a=1.0, eta_b=0.5)) == math.inf


class TestClosedForm:
    """Test the reference closed form against the exact solve."""

    def test_lossless_intermediates(self):
        """Test T_ij = 1 and K_ij = 0 without loss."""
        report = gamma_lambda_closed_form(_tmsv(1.0), NoiseParams())
        check = report.closed_form
        assert check is not None
        assert check.t_ab == pytest.approx(1.0)
        assert check.t_ba == pytest.approx(1.0)
        assert check.k_ab == 0.0
        assert check.c_tilde_reference == pytest.approx(report.c_tilde, rel=1e-12)
        assert check.agrees

    def test_uncorrelated_arms_agree(self):
        """Test the reference optimum is exact when Cov(n_a, n_b) = 0."""
        m = propagate(InputSpec.create(alpha=1.5, r=0.5), PumpSpec.create(0.0))
        report = gamma_lambda_closed_form(m, NoiseParams.symmetric(0.8, 0.0))
        assert report.closed_form.j == pytest.approx(0.0, abs=1e-15)
        assert report.closed_form.agrees
        assert report.closed_form.gamma_reference == pytest.approx(report.gamma_opt, rel=1e-12)

    def test_correlated_gamma_mismatch_is_reported(self):
        """Test a disagreeing reference γ′ is flagged and the exact value kept."""
        m = _tmsv(1.0)
        noise = NoiseParams.symmetric(0.8, 0.0)
        report = gamma_lambda_closed_form(m, noise)
        assert "gamma_a" in report.closed_form.mismatches
        assert report.c_tilde == pytest.approx(braced_objective(m, noise, *report.gamma_opt), rel=1e-12)
        assert report.method == "closed_form"


class TestDegenerateInputs:
    """Test the numeric fallback and information-free states."""

    def test_vacuum_arm_falls_back(self):
        """Test a vacuum arm switches to numeric minimization."""
        m = PhotonMoments.create(mean_a=4.0, mean_b=0.0, var_a=4.0, var_b=0.0)
        noise = NoiseParams.symmetric(0.8, 0.0)
        with pytest.raises(DegenerateMoments):
            gamma_lambda_closed_form(m, noise)
        report = bound_breakdown(m, noise)
        assert report.method == "numeric"
        assert report.closed_form is None
        assert report.c_tilde == pytest.approx(0.8 * 4.0, rel=1e-8)
        assert report.a_a == pytest.approx(1.0)
        assert report.a_b is None
        assert report.j is None
        assert report.b_a == report.b_b == pytest.approx(0.25)
        row = report.build()
        assert math.isnan(row["A_b"]) and math.isnan(row["J"])

    def test_zero_information(self):
        """Test a state without photons has no phase information."""
        m = PhotonMoments.create(0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ZeroInformation):
            bound_breakdown(m, NoiseParams.symmetric(0.9, 0.0))

    def test_delta_phi_bound_matches_report(self):
        """Test delta_phi_bound recomputes the stored sensitivity."""
        report = bound_breakdown(_tmsv(1.5), NoiseParams.symmetric(0.9, 0.02))
        assert delta_phi_bound(report) == report.delta_phi


class TestBoundBreakdown:
    """Test cases for BoundBreakdown."""

    def test_ordering_enforced(self):
        """Test C_φ > C̃_Q is rejected."""
        with pytest.raises(ValidationError, match="ordering"):
            BoundBreakdown(
                f_q_lossless=10.0,
                c_tilde=5.0,
                c_phi=6.0,
                lambda_opt=0.0,
                gamma_opt=(0.0, 0.0),
                delta_phi=0.5,
                diffusion_floor=0.0,
            )

    def test_build(self):
        """Test the row keys."""
        row = bound_breakdown(_tmsv(1.0), NoiseParams.symmetric(0.9, 0.01)).build()
        assert list(row)[:4] == ["F_Q", "C_tilde", "C_phi", "delta_phi"]
        assert row["method"] == "closed_form"

    def test_intermediates_match_closed_form(self):
        """Test the top-level A_i, B_i and J agree with the closed-form record."""
        m = propagate(InputSpec.create(alpha=1.0, r=0.5), PumpSpec.create(1.0))
        report = bound_breakdown(m, NoiseParams.create(0.9, 0.7, 0.01, 0.02))
        check = report.closed_form
        assert check is not None
        assert report.a_a == pytest.approx(check.a_a, rel=1e-15)
        assert report.a_b == pytest.approx(check.a_b, rel=1e-15)
        assert report.b_a == pytest.approx(0.1 / 0.9, rel=1e-15)
        assert report.b_b == pytest.approx(0.3 / 0.7, rel=1e-15)
        assert report.j == pytest.approx(check.j, rel=1e-15)
        assert report.build()["J"] == report.j


class TestMonotonicity:
    """Test Δφ is monotone in each noise parameter."""

    def test_delta_phi_grid(self):
        """Test Δφ rises with β and falls with η on a 10×10 grid."""
        m = propagate(InputSpec.alpha_locked(1.0), PumpSpec.create(2.0))
        etas = np.linspace(0.5, 1.0, 10)
        betas = np.linspace(0.0, 0.1, 10)
        table = np.array(
            [
                [bound_breakdown(m, NoiseParams.symmetric(eta, beta)).delta_phi for beta in betas]
                for eta in etas
            ]
        )
        assert np.all(np.diff(table, axis=1) >= -1e-12 * table[:, 1:])
        assert np.all(np.diff(table, axis=0) <= 1e-12 * table[1:, :])

    def test_per_arm_monotonicity(self):
        """Test Δφ falls with each arm's transmission separately."""
        m = propagate(InputSpec.create(alpha=1.0, r=0.7), PumpSpec.create(1.2))
        for field in ("eta_a", "eta_b"):
            values = [
                bound_breakdown(m, NoiseParams(**{field: eta}, beta_a=0.01, beta_b=0.02)).delta_phi
                for eta in np.linspace(0.5, 1.0, 10)
            ]
            assert np.all(np.diff(values) <= 1e-12 * np.abs(values[1:]))
