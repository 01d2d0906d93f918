"""Stationary vector routes, scalar solver and uniqueness probing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bikeshare_meanfield import (
    RatePair,
    SystemParams,
    birth_death_stationary,
    build_generator,
    geometric_coefficients,
    geometric_form,
    geometric_roots,
    limiting_rates,
    nonlinear_residual,
    self_map_residual,
    solve_fixed_point,
    stationary_from_load,
    uniqueness_probe,
)
from bikeshare_meanfield.errors import (
    AssumptionViolationError,
    ConfigError,
    DegenerateCaseError,
)

FIG5 = SystemParams(lam=15.0, mu=8.0, gamma=0.25, omega=1, capacity_c=30,
                    capacity_k=50, n_stations=1000, delta=0.1)
FIG7 = SystemParams(lam=20.0, mu=8.0, gamma=0.25, omega=1, capacity_c=30,
                    capacity_k=50, n_stations=1000, delta=0.1)


class TestBirthDeathStationary:
    def test_equal_rates_uniform(self):
        p = birth_death_stationary(RatePair(3.0, 3.0), 4)
        assert np.array_equal(p, np.full(5, 0.2))

    def test_rho_half(self):
        p = birth_death_stationary(RatePair(1.0, 2.0), 2)
        assert np.max(np.abs(p - np.array([4 / 7, 2 / 7, 1 / 7]))) < 1e-15

    def test_rho_two(self):
        p = birth_death_stationary(RatePair(2.0, 1.0), 1)
        assert np.max(np.abs(p - np.array([1 / 3, 2 / 3]))) < 1e-15

    def test_sums_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b = 10.0 ** rng.uniform(-3, 3, size=2)
            p = birth_death_stationary(RatePair(a, b), int(rng.integers(1, 101)))
            assert abs(p.sum() - 1.0) < 1e-12
            assert np.all(p >= 0.0)

    def test_is_generator_null_vector(self):
        rates = RatePair(1.7, 0.9)
        p = birth_death_stationary(rates, 6)
        gen = build_generator(rates, 6)
        assert np.max(np.abs(p @ gen)) < 1e-14

    def test_monotone_shape(self):
        low = birth_death_stationary(RatePair(1.0, 3.0), 8)
        assert np.all(np.diff(low) < 0.0)
        high = birth_death_stationary(RatePair(3.0, 1.0), 8)
        assert np.all(np.diff(high) > 0.0)


class TestGeometricRoots:
    def test_example(self):
        roots = geometric_roots(RatePair(1.0, 2.0))
        assert roots.r == pytest.approx(0.5, abs=1e-15)
        assert roots.g == pytest.approx(2.0, abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateCaseError):
            geometric_roots(RatePair(2.0, 2.0))

    @given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3))
    @settings(max_examples=1000, deadline=None)
    def test_product_is_one(self, a, b):
        if abs(a - b) < 1e-12 * (a + b):
            return
        roots = geometric_roots(RatePair(a, b))
        assert roots.r * roots.g == pytest.approx(1.0, rel=1e-12)

    def test_quadratics_satisfied(self):
        a, b = 0.8, 2.3
        roots = geometric_roots(RatePair(a, b))
        assert a - (a + b) * roots.r + b * roots.r ** 2 == pytest.approx(0.0, abs=1e-12)
        assert a * roots.g ** 2 - (a + b) * roots.g + b == pytest.approx(0.0, abs=1e-12)


class TestGeometricForm:
    def test_matches_closed_form_example(self):
        p = geometric_form(RatePair(1.0, 2.0), 2)
        assert np.max(np.abs(p - np.array([4 / 7, 2 / 7, 1 / 7]))) < 1e-15

    def test_sums_to_one(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a, b = 10.0 ** rng.uniform(-2, 2, size=2)
            if abs(a - b) < 1e-9 * (a + b):
                continue
            p = geometric_form(RatePair(a, b), int(rng.integers(1, 101)))
            assert abs(p.sum() - 1.0) < 1e-12

    def test_equivalent_to_birth_death_stationary(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            a, b = 10.0 ** rng.uniform(-3, 3, size=2)
            if abs(a - b) < 1e-9 * (a + b):
                continue
            k = int(rng.integers(1, 101))
            gap = np.max(np.abs(geometric_form(RatePair(a, b), k)
                                - birth_death_stationary(RatePair(a, b), k)))
            assert gap < 1e-12

    def test_boundary_balance(self):
        # -(c1 + c2 g^K) a + (c1 r + c2 g^(K-1)) b = 0
        rng = np.random.default_rng(6)
        for _ in range(200):
            a, b = 10.0 ** rng.uniform(-1.5, 1.5, size=2)
            if abs(a - b) < 1e-9 * (a + b):
                continue
            k = int(rng.integers(2, 40))
            roots = geometric_roots(RatePair(a, b))
            c1, c2 = geometric_coefficients(roots, k)
            balance = (-(c1 + c2 * roots.g ** k) * a
                       + (c1 * roots.r + c2 * roots.g ** (k - 1)) * b)
            assert abs(balance) < 1e-12 * max(a, b)

    def test_coefficient_ratio_arrangements_agree(self):
        # the two algebraic arrangements of the coefficient ratio are the
        # same once cross-multiplied, because r * g = 1
        rng = np.random.default_rng(7)
        for _ in range(200):
            a, b = 10.0 ** rng.uniform(-0.6, 0.6, size=2)
            if abs(a - b) < 1e-9 * (a + b):
                continue
            k = int(rng.integers(2, 25))
            roots = geometric_roots(RatePair(a, b))
            r, g = roots.r, roots.g
            lhs = (g ** (k - 1) * b - g ** k * a) * (r ** (k - 1) * a - r ** k * b)
            rhs = (b - g * a) * (a - r * b)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateCaseError):
            geometric_form(RatePair(1.0, 1.0), 3)


class TestStationaryFromLoad:
    def test_matches_closed_form(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            rho = 10.0 ** rng.uniform(-3, 3)
            k = int(rng.integers(1, 101))
            p = stationary_from_load(rho, k)
            q = birth_death_stationary(RatePair(rho, 1.0), k)
            assert np.max(np.abs(p - q)) < 1e-12

    def test_extreme_loads(self):
        assert np.array_equal(stationary_from_load(0.0, 3), [1.0, 0, 0, 0])
        p = stationary_from_load(1e12, 3)
        assert p[-1] == pytest.approx(1.0, rel=1e-11)

    def test_smooth_through_one(self):
        below = stationary_from_load(1.0 - 1e-12, 4)
        above = stationary_from_load(1.0 + 1e-12, 4)
        assert np.max(np.abs(below - above)) < 1e-11


class TestSolveFixedPoint:
    def test_analytic_case(self):
        params = SystemParams(lam=1.0, mu=1.0, gamma=0.5, omega=0, capacity_c=1,
                              capacity_k=2, n_stations=100, delta=0.2)
        result = solve_fixed_point(params)
        assert np.max(np.abs(result.p - np.array([4 / 7, 2 / 7, 1 / 7]))) < 1e-10
        assert result.rho == pytest.approx(0.5, abs=1e-10)
        assert result.residual < 1e-10

    def test_uniform_case(self):
        params = SystemParams(lam=5.0, mu=4.0, gamma=1.0, omega=0, capacity_c=3,
                              capacity_k=4, n_stations=100, delta=0.2)
        result = solve_fixed_point(params)
        assert np.max(np.abs(result.p - 0.2)) < 1e-10
        assert result.rho == pytest.approx(1.0, abs=1e-10)

    def test_gamma_irrelevant_at_omega_zero(self):
        base = dict(lam=1.0, mu=1.0, omega=0, capacity_c=1, capacity_k=2,
                    n_stations=100, delta=0.2)
        p1 = solve_fixed_point(SystemParams(gamma=0.1, **base)).p
        p2 = solve_fixed_point(SystemParams(gamma=1.0, **base)).p
        assert np.array_equal(p1, p2)

    def test_p0_increases_with_lambda_fig5(self):
        import dataclasses

        p0s = []
        for lam in np.linspace(10.0, 30.0, 9):
            params = dataclasses.replace(FIG5, lam=float(lam))
            p0s.append(solve_fixed_point(params).p[0])
        assert all(np.diff(p0s) > 0.0)

    def test_result_matches_sta3_given_rho(self):
        for params in (FIG5, FIG7):
            result = solve_fixed_point(params)
            closed = stationary_from_load(result.rho, params.capacity_k)
            assert np.max(np.abs(result.p - closed)) < 1e-12

    def test_solved_vector_is_monotone_geometric(self):
        heavy = solve_fixed_point(FIG5)  # load above one: mass piles up
        assert heavy.rho > 1.0
        assert np.all(np.diff(heavy.p) > 0.0)
        light = solve_fixed_point(SystemParams(
            lam=1.0, mu=1.0, gamma=0.5, omega=0, capacity_c=1,
            capacity_k=2, n_stations=100, delta=0.2,
        ))
        assert light.rho < 1.0
        assert np.all(np.diff(light.p) < 0.0)

    def test_triple_characterization(self):
        result = solve_fixed_point(FIG5)
        rates = limiting_rates(result.p, FIG5)
        gen = build_generator(rates, FIG5.capacity_k)
        assert np.max(np.abs(result.p @ gen)) < 1e-10
        assert self_map_residual(result.p, FIG5) < 1e-10
        assert np.max(np.abs(nonlinear_residual(result.p, FIG5))) < 1e-10

    def test_assumption_violation_reported(self):
        # tiny delta margin forces the solved point outside the bound
        params = SystemParams(lam=1.0, mu=1.0, gamma=0.5, omega=0, capacity_c=1,
                              capacity_k=2, n_stations=100, delta=0.6)
        with pytest.raises(AssumptionViolationError) as err:
            solve_fixed_point(params)
        assert err.value.result is not None
        assert err.value.result.p[0] > 1 - params.delta

    def test_tolerance_floor(self):
        with pytest.raises(ConfigError):
            solve_fixed_point(FIG5, tol=1e-14)


class TestNonlinearResidual:
    def test_zero_at_uniform_fixed_point(self):
        params = SystemParams(lam=5.0, mu=4.0, gamma=1.0, omega=0, capacity_c=3,
                              capacity_k=4, n_stations=100, delta=0.2)
        res = nonlinear_residual(np.full(5, 0.2), params)
        assert np.max(np.abs(res)) < 1e-12

    def test_degenerate_empty_state_zeroes_first_component(self):
        # both products of the level-0 equation carry a zero factor at
        # p = (1, 0, ..., 0); the assumed domain excludes this point
        params = SystemParams(lam=1.0, mu=2.0, gamma=0.5, omega=1, capacity_c=2,
                              capacity_k=3, n_stations=100, delta=0.1)
        p = np.array([1.0, 0.0, 0.0, 0.0])
        res = nonlinear_residual(p, params)
        assert res[0] == 0.0
        assert p[0] > 1 - params.delta

    def test_scales_with_perturbation(self):
        result = solve_fixed_point(FIG5)
        res_at_fp = np.max(np.abs(nonlinear_residual(result.p, FIG5)))
        nudged = result.p.copy()
        nudged[0] += 1e-4
        nudged[1] -= 1e-4
        res_nudged = np.max(np.abs(nonlinear_residual(nudged, FIG5)))
        assert res_nudged > 100 * max(res_at_fp, 1e-15)


class TestUniquenessProbe:
    def test_single_start(self):
        results = uniqueness_probe(FIG5, 1, seed=3)
        assert len(results) == 1
        reference = solve_fixed_point(FIG5)
        assert np.max(np.abs(results[0].p - reference.p)) < 1e-8

    def test_twenty_starts_agree(self):
        results = uniqueness_probe(FIG5, 20, seed=5)
        reference = solve_fixed_point(FIG5).p
        for res in results:
            assert np.max(np.abs(res.p - reference)) < 1e-8

    def test_fig7_parameters(self):
        results = uniqueness_probe(FIG7, 5, seed=9)
        reference = solve_fixed_point(FIG7).p
        for res in results:
            assert np.max(np.abs(res.p - reference)) < 1e-8

    def test_rejects_zero_starts(self):
        with pytest.raises(ConfigError):
            uniqueness_probe(FIG5, 0)


class TestResultExport:
    def test_json_keys(self, tmp_path):
        import json

        result = solve_fixed_point(FIG5)
        path = tmp_path / "fp.json"
        result.to_json(path, params=FIG5)
        payload = json.loads(path.read_text())
        assert set(payload) == {"params", "p", "rho", "a", "b", "residual", "iterations"}
        assert payload["a"] == result.rates.birth
        assert len(payload["p"]) == FIG5.capacity_k + 1
