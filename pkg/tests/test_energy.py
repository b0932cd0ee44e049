"""Tests for energy module."""

import numpy as np
import pytest

from lattice_nls.lib.energy import (
    EnergyContext,
    el_residual,
    energy,
    energy_gradient,
    lagrange_multiplier,
)
from lattice_nls.lib.lattice import BoxDomain, LatticeField, shift
from lattice_nls.lib.livetypes import InvalidParameterError, ZeroFieldError
from lattice_nls.lib.models import (
    CombinedPowerNonlinearity,
    ModulatedNonlinearity,
    PowerNonlinearity,
    TrappingPotential,
    WellPotential,
    ZeroPotential,
    degenerate_nonlinearity,
)

CASES = [
    (ZeroPotential(), PowerNonlinearity(p=4)),
    (WellPotential(c=1), PowerNonlinearity(p=8)),
    (TrappingPotential(beta=2), CombinedPowerNonlinearity(p=4, q=6, mu=0.5)),
    (WellPotential(c=2), ModulatedNonlinearity(base=PowerNonlinearity(p=4), b0=1)),
    (ZeroPotential(), degenerate_nonlinearity()),
]


@pytest.fixture
def power4_line():
    return EnergyContext(BoxDomain(1, 2), ZeroPotential(), PowerNonlinearity(p=4))


class TestEnergyContext:
    """Tests for EnergyContext construction."""

    def test_rejects_nonpositive_mass(self):
        """Mass must be positive."""
        with pytest.raises(InvalidParameterError):
            EnergyContext(BoxDomain(1, 1), ZeroPotential(), PowerNonlinearity(p=4), mass=0.0)

    def test_limit_context(self):
        """The limit context drops V and the modulation."""
        spec = ModulatedNonlinearity(base=PowerNonlinearity(p=4), b0=1)
        ctx = EnergyContext(BoxDomain(1, 2), WellPotential(c=1), spec, mass=2.0)
        limit = ctx.limit_context()
        assert isinstance(limit.potential, ZeroPotential)
        assert limit.nonlinearity == PowerNonlinearity(p=4)
        assert limit.mass == 2.0

    def test_with_mass(self, power4_line):
        """with_mass keeps everything but the mass."""
        other = power4_line.with_mass(3.0)
        assert other.mass == 3.0
        assert other.domain == power4_line.domain


class TestEnergy:
    """Tests for the energy functional."""

    def test_delta(self, power4_line):
        """d=1, Power(4), delta_0: 1/2 * 2 - 1/4."""
        assert energy(power4_line, LatticeField.delta(power4_line.domain)) == pytest.approx(0.75)

    @pytest.mark.parametrize("vspec,spec", CASES)
    def test_zero_field(self, vspec, spec):
        """Phi(0) = 0."""
        ctx = EnergyContext(BoxDomain(2, 3), vspec, spec)
        assert energy(ctx, LatticeField.zeros(ctx.domain)) == 0.0

    def test_box_field(self):
        """xi=1 on |x|_inf <= 1 in d=1: 1/2 * 2 - 3/4 matches the box-field bound."""
        domain = BoxDomain(1, 3)
        ctx = EnergyContext(domain, ZeroPotential(), PowerNonlinearity(p=4))
        u = LatticeField(domain, np.where(domain.sup_norms <= 1, 1.0, 0.0))
        assert energy(ctx, u) == pytest.approx(0.25)

    def test_translation_invariance(self):
        """Without V and modulation, shifting inside the box keeps the energy."""
        domain = BoxDomain(2, 6)
        ctx = EnergyContext(domain, ZeroPotential(), CombinedPowerNonlinearity(p=4, q=6))
        rng = np.random.default_rng(3)
        u = LatticeField(domain, np.where(domain.l1_norms <= 2, rng.standard_normal(domain.site_count), 0.0))
        assert energy(ctx, shift(u, [2, 1])) == pytest.approx(energy(ctx, u), rel=1e-12)

    @pytest.mark.parametrize("p", [3.0, 4.0, 8.0])
    @pytest.mark.parametrize("a", [0.5, 2.0, 6.0])
    def test_coercivity(self, p, a):
        """Phi(u) >= V_min a / 2 - a^(p/2) / p on S_a."""
        domain = BoxDomain(1, 6)
        well = WellPotential(c=1)
        ctx = EnergyContext(domain, well, PowerNonlinearity(p=p), mass=a)
        rng = np.random.default_rng(int(10 * p + a))
        V_min = well.values_on(domain).min()
        for _ in range(1000):
            values = rng.standard_normal(domain.site_count)
            values *= np.sqrt(a) / np.linalg.norm(values)
            assert energy(ctx, LatticeField(domain, values)) >= 0.5 * V_min * a - a ** (p / 2) / p - 1e-12


class TestEnergyGradient:
    """Tests for the first variation."""

    def test_zero_field(self, power4_line):
        """g(0) = 0 because f(x, 0) = 0."""
        assert not np.any(energy_gradient(power4_line, LatticeField.zeros(power4_line.domain)).values)

    def test_delta(self, power4_line):
        """d=1, Power(4), delta_0: g(0) = 1, g(+-1) = -1."""
        g = energy_gradient(power4_line, LatticeField.delta(power4_line.domain))
        assert g.at([0]) == pytest.approx(1.0)
        assert g.at([1]) == pytest.approx(-1.0)
        assert g.at([-1]) == pytest.approx(-1.0)
        assert g.at([2]) == 0.0

    @pytest.mark.parametrize("vspec,spec", CASES)
    def test_finite_differences(self, vspec, spec):
        """Central differences of Phi match <g, v>."""
        domain = BoxDomain(2, 3)
        ctx = EnergyContext(domain, vspec, spec)
        rng = np.random.default_rng(17)
        h = 1e-5
        for _ in range(100):
            u = LatticeField(domain, rng.standard_normal(domain.site_count) * 0.5)
            v = LatticeField(domain, rng.standard_normal(domain.site_count))
            fd = (energy(ctx, u + h * v) - energy(ctx, u - h * v)) / (2 * h)
            exact = float(np.dot(energy_gradient(ctx, u).values, v.values))
            assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


class TestLagrangeMultiplier:
    """Tests for the recovered multiplier."""

    def test_delta(self, power4_line):
        """d=1, Power(4), delta_0: lambda = (1 - 2) / 1."""
        assert lagrange_multiplier(power4_line, LatticeField.delta(power4_line.domain)) == pytest.approx(-1.0)

    def test_negation_invariant(self):
        """lambda(-u) = lambda(u) for odd f."""
        domain = BoxDomain(1, 4)
        ctx = EnergyContext(domain, WellPotential(c=1), PowerNonlinearity(p=4))
        u = LatticeField(domain, np.random.default_rng(0).standard_normal(domain.site_count))
        assert lagrange_multiplier(ctx, -u) == pytest.approx(lagrange_multiplier(ctx, u), rel=1e-14)

    def test_zero_field(self, power4_line):
        """The multiplier of 0 is undefined."""
        with pytest.raises(ZeroFieldError):
            lagrange_multiplier(power4_line, LatticeField.zeros(power4_line.domain))

    def test_minimizes_residual(self):
        """Perturbing lambda never lowers the residual norm."""
        domain = BoxDomain(1, 4)
        ctx = EnergyContext(domain, WellPotential(c=1), PowerNonlinearity(p=4))
        u = LatticeField(domain, np.random.default_rng(2).standard_normal(domain.site_count))
        lam = lagrange_multiplier(ctx, u)
        _, best = el_residual(ctx, u, lam)
        for delta in (-0.1, -1e-3, 1e-3, 0.1):
            assert el_residual(ctx, u, lam + delta)[1] >= best


class TestElResidual:
    """Tests for the Euler-Lagrange residual."""

    def test_zero_field(self, power4_line):
        """r(0) = 0 for every lambda."""
        r, norm = el_residual(power4_line, LatticeField.zeros(power4_line.domain), 3.0)
        assert norm == 0.0
        assert not np.any(r.values)

    def test_delta(self, power4_line):
        """delta_0 with lambda = -1: r(0) = 0, r(+-1) = -1."""
        r, norm = el_residual(power4_line, LatticeField.delta(power4_line.domain), -1.0)
        assert r.at([0]) == pytest.approx(0.0)
        assert r.at([1]) == pytest.approx(-1.0)
        assert norm == pytest.approx(np.sqrt(2))

    @pytest.mark.parametrize("vspec,spec", CASES)
    def test_gradient_identity(self, vspec, spec):
        """r = g + lambda u."""
        domain = BoxDomain(2, 2)
        ctx = EnergyContext(domain, vspec, spec)
        u = LatticeField(domain, np.random.default_rng(9).standard_normal(domain.site_count))
        r, _ = el_residual(ctx, u, 0.7)
        expected = energy_gradient(ctx, u).values + 0.7 * u.values
        np.testing.assert_allclose(r.values, expected, rtol=0, atol=1e-14)
