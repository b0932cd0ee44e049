"""Tests for lattice module."""

import numpy as np
import pytest

from lattice_nls.lib.lattice import (
    BoxDomain,
    ComplexLatticeField,
    LatticeField,
    field_from_csv,
    field_to_csv,
    gradient_energy,
    inner,
    laplacian,
    lp_norm,
    shift,
)
from lattice_nls.lib.livetypes import DomainMismatchError, InvalidParameterError


def random_field(domain, rng, support=None):
    values = rng.standard_normal(domain.site_count)
    if support is not None:
        values = np.where(domain.l1_norms <= support, values, 0.0)
    return LatticeField(domain, values)


class TestBoxDomain:
    """Tests for BoxDomain enumeration and neighbor structure."""

    def test_site_count_one_dimension(self):
        """A 1-d box of radius L has 2L + 1 sites."""
        assert BoxDomain(1, 2).site_count == 5

    def test_site_count_two_dimensions(self):
        """The 2-d l1 ball of radius L has 2L^2 + 2L + 1 sites."""
        assert BoxDomain(2, 3).site_count == 25

    def test_single_site_box(self):
        """L = 0 holds only the origin."""
        domain = BoxDomain(1, 0)
        assert domain.site_count == 1
        assert domain.origin_index == 0

    def test_lexicographic_order(self):
        """Sites are enumerated lexicographically."""
        sites = [tuple(s) for s in BoxDomain(2, 2).sites.tolist()]
        assert sites == sorted(sites)
        assert BoxDomain(1, 2).sites[:, 0].tolist() == [-2, -1, 0, 1, 2]

    def test_index_of_roundtrip(self):
        """index_of inverts the enumeration and returns -1 outside."""
        domain = BoxDomain(3, 2)
        for idx, site in enumerate(domain.sites):
            assert domain.index_of(site) == idx
        assert domain.index_of([2, 1, 0]) == -1

    def test_every_site_has_2d_slots(self):
        """Neighbor table has 2d columns per site."""
        domain = BoxDomain(2, 3)
        assert domain.neighbors.shape == (domain.site_count, 4)

    def test_exterior_degree_at_corner(self):
        """The tip of the 1-d box has one exterior neighbor."""
        domain = BoxDomain(1, 2)
        assert domain.exterior_degree[domain.index_of([2])] == 1
        assert domain.exterior_degree[domain.index_of([0])] == 0

    def test_rejects_bad_parameters(self):
        """Dimension below 1 or negative radius is rejected."""
        with pytest.raises(InvalidParameterError):
            BoxDomain(0, 2)
        with pytest.raises(InvalidParameterError):
            BoxDomain(1, -1)


class TestLatticeField:
    """Tests for field construction invariants."""

    def test_length_must_match(self):
        """Field length must equal the site count."""
        with pytest.raises(InvalidParameterError):
            LatticeField(BoxDomain(1, 2), [1.0, 2.0])

    def test_values_must_be_finite(self):
        """NaN entries are rejected."""
        with pytest.raises(InvalidParameterError):
            LatticeField(BoxDomain(1, 1), [0.0, np.nan, 0.0])

    def test_values_are_read_only(self):
        """Fields are immutable values."""
        u = LatticeField.zeros(BoxDomain(1, 1))
        with pytest.raises(ValueError):
            u.values[0] = 1.0

    def test_complex_field(self):
        """Complex fields keep the modulus of their values."""
        u = ComplexLatticeField(BoxDomain(1, 1), [1j, 3 + 4j, 0])
        np.testing.assert_allclose(u.modulus, [1, 5, 0])

    def test_arithmetic_on_mismatched_domains(self):
        """Adding fields on different boxes raises."""
        with pytest.raises(DomainMismatchError):
            LatticeField.zeros(BoxDomain(1, 1)) + LatticeField.zeros(BoxDomain(1, 2))


class TestLaplacian:
    """Tests for the discrete Laplacian."""

    def test_delta_one_dimension(self):
        """d=1: Delta delta_0 is -2 at 0, 1 at +-1, 0 at +-2."""
        domain = BoxDomain(1, 2)
        lap = laplacian(LatticeField.delta(domain))
        np.testing.assert_array_equal(lap.values, [0, 1, -2, 1, 0])

    def test_delta_two_dimensions(self):
        """d=2: Delta delta_0 is -4 at 0 and 1 at the four neighbors."""
        domain = BoxDomain(2, 3)
        lap = laplacian(LatticeField.delta(domain))
        assert lap.at([0, 0]) == -4
        for x in ([1, 0], [-1, 0], [0, 1], [0, -1]):
            assert lap.at(x) == 1
        assert np.sum(np.abs(lap.values)) == 8

    def test_zero_field(self):
        """Delta 0 = 0."""
        domain = BoxDomain(3, 2)
        assert not np.any(laplacian(LatticeField.zeros(domain)).values)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_symmetry(self, d):
        """<u, Delta v> = <Delta u, v> over random pairs."""
        domain = BoxDomain(d, 8)
        rng = np.random.default_rng(1)
        for _ in range(1000):
            u, v = random_field(domain, rng), random_field(domain, rng)
            lhs = inner(u, laplacian(v))
            rhs = inner(laplacian(u), v)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


class TestGradientEnergy:
    """Tests for the once-per-edge gradient energy."""

    def test_delta_one_dimension(self):
        """d=1: two incident edges."""
        assert gradient_energy(LatticeField.delta(BoxDomain(1, 2))) == 2

    def test_delta_two_dimensions(self):
        """d=2: four incident edges."""
        assert gradient_energy(LatticeField.delta(BoxDomain(2, 2))) == 4

    def test_box_field_boundary_edges(self):
        """xi=1 on |x| <= 1 in d=1 only pays for the two boundary edges."""
        domain = BoxDomain(1, 3)
        u = LatticeField(domain, np.where(domain.sup_norms <= 1, 1.0, 0.0))
        assert gradient_energy(u) == 2

    def test_matches_brute_force_edge_sum(self):
        """Agrees with an explicit sum over every edge touching the box."""
        domain = BoxDomain(2, 2)
        rng = np.random.default_rng(7)
        u = random_field(domain, rng)
        total = 0.0
        for site in domain.sites:
            for axis in range(domain.d):
                step = np.zeros(domain.d, dtype=int)
                step[axis] = 1
                # Edge (x, x + e) from x; (x - e, x) only when x - e is exterior
                total += (u.at(site + step) - u.at(site)) ** 2
                if domain.index_of(site - step) < 0:
                    total += u.at(site) ** 2
        assert gradient_energy(u) == pytest.approx(total, rel=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_summation_by_parts(self, d):
        """<u, -Delta u> = gradient_energy(u) over many random fields."""
        domain = BoxDomain(d, 8)
        rng = np.random.default_rng(d)
        for _ in range(1000):
            u = random_field(domain, rng)
            lhs = -inner(u, laplacian(u))
            assert lhs == pytest.approx(gradient_energy(u), rel=1e-12)

    def test_shift_invariance(self):
        """Shifting an interior field keeps gradient energy and norms."""
        domain = BoxDomain(2, 6)
        rng = np.random.default_rng(3)
        u = random_field(domain, rng, support=2)
        moved = shift(u, [1, -2])
        assert gradient_energy(moved) == pytest.approx(gradient_energy(u), rel=1e-12)
        for p in (1, 2, 3.5, np.inf):
            assert lp_norm(moved, p) == pytest.approx(lp_norm(u, p), rel=1e-12)

    def test_shift_out_of_box(self):
        """Shifts that push support out of the box are rejected."""
        domain = BoxDomain(1, 2)
        with pytest.raises(InvalidParameterError):
            shift(LatticeField.delta(domain, [2]), [1])


class TestLpNorm:
    """Tests for l^p norms."""

    def test_scaled_delta(self):
        """||3 delta_0||_2 = 3."""
        assert lp_norm(LatticeField.delta(BoxDomain(1, 1), value=3.0), 2) == 3.0

    def test_two_site_field(self):
        """{1, 1}: sqrt(2) in l2 and 2^(1/4) in l4."""
        u = LatticeField(BoxDomain(1, 1), [1.0, 1.0, 0.0])
        assert lp_norm(u, 2) == pytest.approx(np.sqrt(2))
        assert lp_norm(u, 4) == pytest.approx(2**0.25)
        assert lp_norm(u, 4) <= lp_norm(u, 2)

    def test_zero_field(self):
        """Every norm of 0 is 0."""
        u = LatticeField.zeros(BoxDomain(2, 2))
        for p in (1, 2, 7, np.inf):
            assert lp_norm(u, p) == 0.0

    def test_sup_norm(self):
        """p = inf is the max modulus."""
        u = LatticeField(BoxDomain(1, 1), [-5.0, 1.0, 2.0])
        assert lp_norm(u, np.inf) == 5.0

    def test_rejects_p_below_one(self):
        """p < 1 is not a norm."""
        with pytest.raises(InvalidParameterError):
            lp_norm(LatticeField.zeros(BoxDomain(1, 1)), 0.5)

    def test_monotone_in_p(self):
        """||u||_q <= ||u||_p for random 1 <= p < q <= 8."""
        domain = BoxDomain(2, 4)
        rng = np.random.default_rng(11)
        for _ in range(500):
            u = random_field(domain, rng)
            p = rng.uniform(1, 8)
            q = rng.uniform(p, 8)
            assert lp_norm(u, q) <= lp_norm(u, p) + 1e-12


class TestInner:
    """Tests for the counting-measure inner product."""

    def test_delta_with_itself(self):
        """<delta_0, delta_0> = 1."""
        d0 = LatticeField.delta(BoxDomain(2, 1))
        assert inner(d0, d0) == 1.0

    def test_with_zero(self):
        """<u, 0> = 0."""
        domain = BoxDomain(1, 3)
        u = random_field(domain, np.random.default_rng(0))
        assert inner(u, LatticeField.zeros(domain)) == 0.0

    def test_delta_against_minus_laplacian(self):
        """<delta_0, -Delta delta_0> = 2 = gradient_energy(delta_0) in d=1."""
        d0 = LatticeField.delta(BoxDomain(1, 2))
        assert inner(d0, -laplacian(d0)) == 2.0 == gradient_energy(d0)

    def test_domain_mismatch(self):
        """Fields on different boxes cannot be paired."""
        with pytest.raises(DomainMismatchError):
            inner(LatticeField.zeros(BoxDomain(1, 1)), LatticeField.zeros(BoxDomain(2, 1)))


class TestFieldCsv:
    """Tests for field serialization."""

    def test_header_and_rows(self):
        """Columns x1..xd,value; one row per site in enumeration order."""
        domain = BoxDomain(2, 1)
        text = field_to_csv(LatticeField.delta(domain))
        lines = text.strip().splitlines()
        assert lines[0] == "x1,x2,value"
        assert len(lines) == 1 + domain.site_count
        assert lines[1 + domain.origin_index] == "0,0,1"

    def test_parse_back(self):
        """A written field parses back to the same values."""
        domain = BoxDomain(1, 3)
        u = random_field(domain, np.random.default_rng(5))
        np.testing.assert_array_equal(field_from_csv(field_to_csv(u), domain).values, u.values)
