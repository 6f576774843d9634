import csv
import math

import numpy as np
import pytest

from cotrans.errors import DivergenceError, GridRangeError, SpecError
from cotrans.evolution import (
    CoeffFn,
    check_derivative_identities,
    closed_form_law,
    closed_form_oracle,
    cotranslation_of,
    evolution_of,
    generator_laws,
    infinitesimal_generator,
    integrate,
    psi_cocycle_law,
    psi_unit_law,
    rotation_propagator,
    solution_ode_residual,
    two_variable_differentiability_probe,
    write_csv,
)
from cotrans.report import run_laws


def expm_series(a, terms=40):
    """Taylor series of exp(a), fine for small norms."""
    out = np.eye(len(a))
    term = np.eye(len(a))
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


@pytest.fixture(scope="module")
def rotation_grid():
    return integrate(CoeffFn.rotation(1.0), 0.0, 2 * math.pi, 1e-3)


@pytest.fixture(scope="module")
def periodic_grid():
    return integrate(CoeffFn.periodic_sine(), 0.0, 4.0, 1e-3)


def test_zero_coefficient_gives_identity():
    E = integrate(CoeffFn.zero(2), 0.0, 1.0, 0.1)
    assert E.n == 10
    for i in range(E.n + 1):
        for j in range(E.n + 1):
            assert np.array_equal(E.psi_index(i, j), np.eye(2))


def test_constant_diagonal_is_exponential():
    E = integrate(CoeffFn.constant(np.diag([-1.0, 0.5])), 0.0, 2.0, 1e-3)
    for i, j in [(2000, 0), (0, 2000), (1500, 700)]:
        dt = E.time_of(i) - E.time_of(j)
        assert np.allclose(E.psi_index(i, j), np.diag(np.exp([-dt, 0.5 * dt])), rtol=0, atol=1e-8)


def test_constant_nonnormal_matches_series():
    a = np.array([[0.0, 1.0], [-2.0, -0.3]])
    E = integrate(CoeffFn.constant(a), 0.0, 1.0, 1e-3)
    assert np.allclose(E.psi_index(1000, 0), expm_series(a), atol=1e-9)


def test_rotation_closed_form(rotation_grid):
    law = closed_form_law(rotation_grid, closed_form_oracle(rotation_grid.coeff)).sweep()
    assert law.passed and law.max_residual <= 1e-6
    assert np.allclose(rotation_propagator(1.0, math.pi / 2), [[0, 1], [-1, 0]], atol=1e-15)


def test_diagonal_poly_closed_form():
    A = CoeffFn.diagonal_poly([[0.0, 1.0], [1.0, 0.0, -0.5]])
    E = integrate(A, 0.0, 1.5, 1e-3)
    law = closed_form_law(E, closed_form_oracle(A), count=50).sweep()
    assert law.max_residual <= 1e-8


def test_psi_unit_and_cocycle(rotation_grid, periodic_grid):
    for E in (rotation_grid, periodic_grid):
        assert psi_unit_law(E).sweep().max_residual == 0.0
        assert psi_cocycle_law(E).sweep().max_residual <= 1e-9


def test_generator_recovery(rotation_grid, periodic_grid):
    for E in (rotation_grid, periodic_grid):
        Z = cotranslation_of(E)
        idx = list(range(100, E.n - 100, 97))
        rep = run_laws(generator_laws(Z, idx))
        assert rep.passed, rep.summary()
        assert rep.entry("generator").max_residual <= 5e-4
        t = E.time_of(500)
        assert np.allclose(infinitesimal_generator(Z, t), E.coeff(t), atol=5e-4)


def test_derivative_identities_periodic(periodic_grid):
    rep = check_derivative_identities(cotranslation_of(periodic_grid))
    assert rep.passed, rep.summary()
    assert {e.law for e in rep.entries} == {"d1_split", "d1_inverse", "d2_transport", "d2_inverse", "evolution_backward"}
    for e in rep.entries:
        if e.info["mode"] == "richardson":
            assert 3.5 <= e.info["ratio"] <= 4.5


def test_derivative_identities_need_even_span(periodic_grid):
    with pytest.raises(GridRangeError):
        check_derivative_identities(cotranslation_of(periodic_grid), h_fd=0.009)


def test_shifted_by_scalar_consistency():
    base = CoeffFn.periodic_sine()
    lam = 0.7
    E0 = integrate(base, 0.0, 2.0, 1e-3)
    E1 = integrate(CoeffFn.shifted_by_scalar(base, lam), 0.0, 2.0, 1e-3)
    for i, j in [(2000, 0), (1200, 300), (100, 1900)]:
        dt = E0.time_of(i) - E0.time_of(j)
        assert np.allclose(E1.psi_index(i, j), math.exp(-lam * dt) * E0.psi_index(i, j), rtol=1e-9, atol=1e-12)


def test_solution_property(periodic_grid):
    ode_res, init_res = solution_ode_residual(periodic_grid, 1000, [1.0, -2.0])
    assert init_res == 0.0
    assert ode_res <= 1e-3


def test_differentiability_probe():
    Zs = cotranslation_of(integrate(CoeffFn.periodic_sine(), 0.0, 4.0, 1e-3))
    smooth = two_variable_differentiability_probe(Zs, [(1000, 500), (2000, -300)])
    assert not smooth["flagged"] and 3.5 <= smooth["ratio"] <= 4.5
    step = CoeffFn.periodic_table(0.5, [[[0.0, 1.0], [-1.0, 0.0]], [[0.0, 2.0], [-2.0, 0.0]]], interp="step")
    Zt = cotranslation_of(integrate(step, 0.0, 4.0, 1e-3))
    # the ray from index 1000 crosses the jump at t = 1.0 for every direction
    rough = two_variable_differentiability_probe(Zt, [(995, 500)])
    assert rough["flagged"]


def test_csv_output(tmp_path):
    E = integrate(CoeffFn.rotation(1.0), 0.0, 0.5, 0.1)
    path = tmp_path / "psi.csv"
    write_csv(E, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "psi_00", "psi_01", "psi_10", "psi_11"]
    assert len(rows) == E.n + 2
    last = np.array([float(x) for x in rows[-1][1:]]).reshape(2, 2)
    assert np.array_equal(last, E.psi_index(E.n, 0))


def test_grid_range_errors(rotation_grid):
    Z = cotranslation_of(rotation_grid)
    with pytest.raises(GridRangeError):
        Z(0, -1)
    with pytest.raises(GridRangeError):
        rotation_grid.psi(0.0005, 0.0)
    with pytest.raises(GridRangeError):
        rotation_grid.psi_index(rotation_grid.n + 1, 0)
    with pytest.raises(GridRangeError):
        Z.at(0.0, 0.0015)


def test_divergence_reports_step():
    with pytest.raises(DivergenceError) as exc:
        integrate(CoeffFn.constant(np.diag([1.0, 2.0])), 0.0, 2000.0, 10.0)
    assert exc.value.step is not None and exc.value.step > 0


def test_invalid_integration_ranges():
    with pytest.raises(SpecError):
        integrate(CoeffFn.zero(1), 1.0, 0.0, 0.1)
    with pytest.raises(SpecError):
        integrate(CoeffFn.zero(1), 0.0, 1.0, 0.0)
    with pytest.raises(SpecError):
        integrate(CoeffFn.zero(1), 0.0, 1e4, 1e-3)


def test_evolution_round_trip(periodic_grid):
    Z = cotranslation_of(periodic_grid)
    E2 = evolution_of(Z)
    for i, j in [(0, 0), (3000, 10), (5, 3999)]:
        assert np.array_equal(E2.psi_index(i, j), periodic_grid.psi_index(i, j))
    assert np.array_equal(Z.at(1.0, 0.5), periodic_grid.psi(1.5, 1.0))


def test_step_count_for_nondividing_h():
    E = integrate(CoeffFn.zero(1), 0.0, 1.0, 0.3)
    assert E.n == 4 and E.t1 == pytest.approx(1.2)
