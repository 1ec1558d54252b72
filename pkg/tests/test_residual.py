import math

import numpy as np
import pytest

from cipseries.basis import Band, build_basis
from cipseries.fields import SpaceGrid, laplacian
from cipseries.profiles import RadialBump
from cipseries.residual import (ManufacturedField, ResidualReport, ReportRow, SpanProfile,
                                assemble_system, coefficient_fields, compute_h, compute_hN,
                                decay_study, default_manufactured, field_norm, galerkin_gap,
                                manufactured_problem, quadratic_bound, quadratic_pieces,
                                residual_norm, solver_problem, system_residual, hN_moments)
from cipseries.scattering import Medium

BAND = Band(1.0, 2.0)


@pytest.fixture(scope="module")
def problem65():
    return manufactured_problem(BAND, SpaceGrid(1.0, 65))


@pytest.fixture(scope="module")
def small():
    return manufactured_problem(BAND, SpaceGrid(1.0, 33), rule_order=20, basis_size=10)


def test_h_of_zero(small):
    z = np.zeros_like(small.v)
    assert np.all(compute_h(z, z, small.rule.nodes, small.grid.h) == 0)
    assert np.all(compute_hN(z, small.basis, 4, small.grid.h, small.rule) == 0)
    with pytest.raises(ValueError):
        compute_h(z, None, small.rule.nodes, small.grid.h)


def test_h_vanishes_on_plateau_and_outside(small):
    X = small.grid.interior_mesh()
    rho = np.hypot(*X)
    h = np.abs(small.h).max(axis=-1)
    # the stencil reaches one node further than the point itself
    flat = (rho < 0.2 - 1.5 * small.grid.h) | (rho > 0.5 + 1.5 * small.grid.h)
    assert h[flat].max() <= 1e-13


def test_stencil_h_vs_closed_form_order():
    field = default_manufactured(BAND)
    rule = BAND.rule(24)
    errs = []
    for n in (65, 129):
        g = SpaceGrid(1.0, n)
        v, dkv = field.sample(g, rule.nodes)
        errs.append(residual_norm(compute_h(v, dkv, rule.nodes, g.h), field.exact_h(g, rule.nodes), g, rule))
    assert 1.7 <= math.log2(errs[0] / errs[1]) <= 2.3


def test_span_profile_reproduced():
    basis = build_basis(BAND, 8)
    field = ManufacturedField(RadialBump((0.0, 0.0), 0.5, 0.5 + 0.25j, 0.2),
                              SpanProfile(basis, (0.8, -0.3, 0.2, 0.1)))
    prob = manufactured_problem(BAND, SpaceGrid(1.0, 33), 20, field_=field, basis_size=8)
    scale = np.abs(prob.h).max()
    for N in (4, 6, 8):
        hN = compute_hN(prob.v, prob.basis, N, prob.grid.h, prob.rule)
        assert np.abs(hN - prob.h).max() <= 1e-9 * scale
    report = decay_study(prob, [1, 2, 3, 4, 5, 6])
    assert all(r.rel_residual > 1e-3 for r in report.rows[:3])
    assert all(r.rel_residual < 1e-10 for r in report.rows[3:])


def test_direct_and_commuted_forms_agree(small):
    for N in (2, 5, 8):
        d = compute_hN(small.v, small.basis, N, small.grid.h, small.rule, form="direct")
        c = compute_hN(small.v, small.basis, N, small.grid.h, small.rule, form="commuted")
        assert np.abs(d - c).max() <= 1e-9
    with pytest.raises(ValueError):
        compute_hN(small.v, small.basis, 11, small.grid.h, small.rule)
    with pytest.raises(ValueError):
        compute_hN(small.v, small.basis, 2, small.grid.h, small.rule, form="other")


def test_residual_norm_basics(small):
    g, rule = small.grid, small.rule
    assert residual_norm(small.h, small.h, g, rule) == 0
    c = 0.3 - 0.4j
    expected = abs(c) * math.sqrt(g.interior_volume * BAND.length)
    assert residual_norm(small.h + c, small.h, g, rule) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        residual_norm(small.h[..., :-1], small.h, g, rule)


def test_relative_residual_grid_independent(problem65):
    fine = manufactured_problem(BAND, SpaceGrid(1.0, 129))
    rel = []
    for p in (problem65, fine):
        hN = compute_hN(p.v, p.basis, 4, p.grid.h, p.rule)
        rel.append(residual_norm(hN, p.h, p.grid, p.rule) / field_norm(p.h, p.grid, p.rule))
    assert abs(rel[1] - rel[0]) <= 0.01 * rel[1]


def test_system_residual_zero_and_mismatch(small):
    system = assemble_system(small.basis.truncated(4))
    V = np.zeros((4,) + small.grid.shape, dtype=complex)
    assert np.all(system_residual(V, system, small.grid.h) == 0)
    with pytest.raises(ValueError):
        system_residual(np.zeros((3,) + small.grid.shape), system, small.grid.h)


@pytest.mark.parametrize("N", [1, 3, 6])
def test_galerkin_consistency(small, N):
    V = coefficient_fields(small.v, small.basis, N, small.rule)
    basis = small.basis.truncated(N)
    sys_ = assemble_system(basis)
    tested = hN_moments(V, basis, small.grid.h)
    assert galerkin_gap(V, basis, sys_, small.grid.h) <= 1e-8 * max(1.0, np.abs(tested).max())


def test_hN_moments_match_projection(small):
    # int Phi_m h_N dk with h_N sampled on a finer rule and projected directly
    N = 4
    V = coefficient_fields(small.v, small.basis, N, small.rule)
    fine = BAND.rule(40)
    from cipseries.projection import synthesize
    hN = compute_h(synthesize(V, small.basis, fine.nodes), synthesize(V, small.basis, fine.nodes, True),
                   fine.nodes, small.grid.h)
    direct = np.einsum("mq,...q->m...", small.basis.values(fine.nodes, N) * fine.weights, hN)
    np.testing.assert_allclose(hN_moments(V, small.basis, small.grid.h), direct, atol=1e-10)


def test_quadratic_decomposition_and_bound(small):
    for N in (2, 4, 6):
        pieces = quadratic_pieces(small.v, small.dkv, small.basis, N, small.grid.h, small.rule)
        assert np.abs(pieces.gap() - pieces.four_terms()).max() <= 1e-9
        lhs, rhs = quadratic_bound(pieces, small.rule, BAND.k_hi)
        assert np.all(lhs <= rhs + 1e-12)


def test_gaussian_decay_strict(problem65):
    report = decay_study(problem65, [2, 4, 6, 8])
    assert report.strictly_decreasing()
    assert report.near_monotone()


@pytest.mark.parametrize("center,amp", [((0.1, -0.1), 0.3 + 0.0j), ((-0.2, 0.15), 0.2 - 0.4j)])
def test_near_monotone_other_fields(center, amp):
    field = ManufacturedField(RadialBump(center, 0.45, amp, 0.15), default_manufactured(BAND).chi)
    prob = manufactured_problem(BAND, SpaceGrid(1.0, 33), 20, field_=field, basis_size=10)
    report = decay_study(prob, list(range(1, 11)))
    abs_res = np.array([r.abs_residual for r in report.rows])
    for i in range(len(abs_res)):
        assert np.all(abs_res[i + 1:] <= abs_res[i] + 0.05 * report.h_norm)
    assert report.near_monotone()


def test_decay_study_argument_checks(small):
    with pytest.raises(ValueError):
        decay_study(small, [4, 2])
    with pytest.raises(ValueError):
        decay_study(small, [2, 11])


def test_report_csv_and_threshold():
    rows = [ReportRow(2, 1.0, 0.5, 1e-14), ReportRow(4, 0.01, 0.005, 2e-14)]
    rep = ResidualReport(rows, 2.0, 3, "manufactured")
    lines = rep.to_csv().splitlines()
    assert lines[0] == "N,abs_residual,rel_residual,galerkin_gap"
    assert lines[2] == "4,0.01,0.005,2e-14"
    assert rep.threshold_row().N == 4 and rep.meets_threshold()
    assert ResidualReport(rows, 2.0, 9, "x").meets_threshold() is None
    bumpy = ResidualReport([ReportRow(1, 0, 0.30, 0), ReportRow(2, 0, 0.34, 0), ReportRow(3, 0, 0.2, 0)], 1.0, 3, "x")
    assert bumpy.near_monotone() and not bumpy.strictly_decreasing()
    assert not ResidualReport([ReportRow(1, 0, 0.30, 0), ReportRow(2, 0, 0.36, 0)], 1.0, 3, "x").near_monotone()


def test_solver_data_system_residual():
    prob = solver_problem(BAND, SpaceGrid(1.0, 33), Medium(contrast=0.5), 8)
    V = coefficient_fields(prob.v, prob.basis, 4, prob.rule)
    system = assemble_system(prob.basis.truncated(4))
    r = system_residual(V, system, prob.grid.h)
    lap = np.stack([laplacian(vn, prob.grid.h) for vn in V])
    d_term = np.einsum("mn,n...->m...", system.D, lap)
    assert np.linalg.norm(r) <= 0.1 * np.linalg.norm(d_term)


def test_three_dimensional_manufactured():
    field = ManufacturedField(RadialBump((0.0, 0.0, 0.0), 0.5, 0.5 + 0.25j, 0.2), default_manufactured(BAND).chi)
    prob = manufactured_problem(BAND, SpaceGrid(1.0, 17, dim=3), 16, field_=field, basis_size=8)
    report = decay_study(prob, [2, 4, 6])
    assert report.strictly_decreasing()
    assert max(r.galerkin_gap for r in report.rows) <= 1e-10
