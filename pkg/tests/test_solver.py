from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import scattering_singularity, structural_vectors, wavenumbers
from fabry.chain import MaterialParams, ResonatorChain, StructuralVector, Wavenumber, enumerate_E
from fabry.figures import builtin
from fabry.solver import (
    branch_label,
    contour_count,
    default_deltas,
    default_radius,
    delta_sweep,
    find_resonances,
    fit_loglog_slope,
    newton_refine,
    prepare,
    residual_scale,
)
from fabry.transfer import g_value


def _completeness(t, k0, delta):
    pr = prepare(t, k0)
    rs = find_resonances(t, k0, delta, problem=pr)
    nu = 2 * delta / (1 + delta)
    cc = contour_count(t, nu, k0.value, default_radius(pr, delta))
    inside = sum(abs(k - k0.value) < cc.radius for k in rs.roots)
    return pr, rs, cc, inside


def test_branch_labels():
    assert [branch_label(i) for i in (0, 1, 25, 26)] == ["a", "b", "z", "aa"]


@pytest.mark.parametrize("name,n", [("fig4", 7), ("example", 11), ("setting3", 7)])
def test_completeness_on_reference_configs(name, n):
    cfg = builtin(name)
    pr, rs, cc, inside = _completeness(cfg.t, cfg.k0, 1e-3)
    assert pr.n == n
    assert cc.winding == inside == n
    assert len(rs.distinct_roots(1e-10 * (1 + cfg.k0.value))) == n
    assert not rs.warnings


@settings(max_examples=25)
@given(structural_vectors(n_max=6), wavenumbers)
def test_completeness_on_random_chains(t, k0):
    pr = prepare(t, k0)
    if pr.n == 0:
        return
    for delta in (1e-2, 1e-4):
        _, rs, cc, inside = _completeness(t, k0, delta)
        assert cc.winding == inside == pr.n
        assert all(b.converged for b in rs.branches)


def test_roots_are_scattering_resonances(fig6_cfg):
    for delta in (1e-2, 1e-3):
        rs = find_resonances(fig6_cfg.t, fig6_cfg.k0, delta)
        chain = ResonatorChain.from_structural(fig6_cfg.t, MaterialParams(delta))
        for b in rs.branches:
            assert scattering_singularity(chain, b.k_num, delta) < 1e-10
            # the oracle is not singular just off the root
            assert scattering_singularity(chain, b.k_num + 1e-3, delta) > 1e-8


def test_residual_bound(example_cfg):
    d = 1e-3
    rs = find_resonances(example_cfg.t, example_cfg.k0, d)
    nu = 2 * d / (1 + d)
    scale = residual_scale(example_cfg.t, example_cfg.k0.value, nu)
    for b in rs.branches:
        assert abs(g_value(example_cfg.t, b.k_num, nu)) <= 1e-10 * scale
        assert b.residual <= 1e-10


def test_pair_symmetry_is_order_delta(fig4_cfg):
    ratios = []
    for d in (1e-3, 1e-4, 1e-5):
        rs = find_resonances(fig4_cfg.t, fig4_cfg.k0, d)
        sq = [b for b in rs.branches if b.kind == "sqrt"]
        worst = max(abs((p.k_num + m.k_num) / 2 - fig4_cfg.k0.value) for p, m in zip(sq[::2], sq[1::2]))
        ratios.append(worst / d)
    # the constant in |(k+ + k-)/2 - k0| <= C delta is stable across two decades
    assert max(ratios) / min(ratios) < 1.1


def test_continuation_agrees_with_fresh_seeding(fig4_cfg):
    deltas = default_deltas(1e-5, 1e-2, 8)
    table = delta_sweep(fig4_cfg.t, fig4_cfg.k0, deltas)
    for d in deltas[2::3]:
        fresh = find_resonances(fig4_cfg.t, fig4_cfg.k0, d)
        for b in fresh.branches:
            (row,) = [r for r in table.branch_rows(b.branch_id) if r.delta == d]
            assert abs(row.k_num - b.k_num) <= 1e-9


def test_sweep_table_order_and_slopes(fig4_cfg):
    table = delta_sweep(fig4_cfg.t, fig4_cfg.k0, default_deltas(1e-5, 1e-2, 16))
    keys = [(r.branch_id, -r.delta) for r in table.rows]
    assert keys == sorted(keys)
    for bid, slope in table.slopes.items():
        want = 1.5 if table.kinds[bid] == "sqrt" else 1.0
        assert slope == pytest.approx(want, abs=0.1)
    short = delta_sweep(fig4_cfg.t, fig4_cfg.k0, [1e-3, 1e-4, 1e-5])
    assert short.slopes == {}


def test_sweep_rejects_nonpositive_delta(fig4_cfg):
    with pytest.raises(ValueError):
        delta_sweep(fig4_cfg.t, fig4_cfg.k0, [1e-3, 0.0])


def test_fit_loglog_slope():
    x = np.geomspace(1e-5, 1e-2, 9)
    assert fit_loglog_slope(x, 3 * x**1.5) == pytest.approx(1.5)
    assert math.isnan(fit_loglog_slope([1.0], [1.0]))


def test_contour_count_without_resonance():
    t = StructuralVector.from_values(["1", "0.75", "1"])
    # k = pi/2 is not resonant for any segment of length 1 or 3/4, so g has no zero nearby
    cc = contour_count(t, 2e-3, math.pi / 2, 0.05)
    assert cc.winding == 0
    with pytest.raises(ValueError):
        contour_count(t, 2e-3, math.pi / 2, 0.0)


def test_contour_radius_excludes_neighbouring_wavenumbers(example_cfg):
    pr = prepare(example_cfg.t, example_cfg.k0)
    k0 = example_cfg.k0.value
    others = [w.value for w in enumerate_E(example_cfg.t, 3) if abs(w.value - k0) > 1e-12]
    gap = min(abs(x - k0) for x in others)
    assert default_radius(pr, 1e-1) <= gap / 2
    assert default_radius(pr, 1e-3) == pytest.approx(3 * math.sqrt(pr.spectrum.nonzero_eigenvalues.max() * 1e-3))


def test_newton_converges_from_asymptotic_seed(fig4_cfg):
    pr = prepare(fig4_cfg.t, fig4_cfg.k0)
    d = 1e-4
    nu = 2 * d / (1 + d)
    e = pr.expansions[0]
    res = newton_refine(fig4_cfg.t, nu, e.k_of_delta(d, 1))
    assert res.converged and res.iterations < 10
    assert abs(res.root - e.k_of_delta(d, 1)) < 10 * d**1.5


def test_clustered_delta_type_roots_are_separated():
    # two isolated resonant segments; their delta-type roots sit O(nu^2) apart
    t = StructuralVector.from_values(["5/4", "9/4", "5/4", "3", "3/4", "11/4", "3/2", "11/4", "9/4", "2", "7/4", "1/2", "3/4"])
    k0 = Wavenumber(Fraction(1))
    _, rs, cc, inside = _completeness(t, k0, 1e-4)
    assert cc.winding == inside == 2
    assert len(rs.distinct_roots(1e-10 * (1 + k0.value))) == 2
    assert not rs.warnings


def test_indistinguishable_branches_are_reported():
    # both isolated blocks have the same first-order shift; at tiny delta the
    # roots merge below solver tolerance and are kept with multiplicity
    t = StructuralVector.from_values(["1/4", "3", "1/4", "9/4", "3/2", "5/2", "5/4", "3", "9/4"])
    k0 = Wavenumber(Fraction(1))
    _, rs, cc, inside = _completeness(t, k0, 1e-6)
    assert cc.winding == inside == 2
    assert rs.notes and not rs.warnings
