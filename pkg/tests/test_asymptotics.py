from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import structural_vectors
from fabry.asymptotics import (
    block_order,
    boundary_brute_force,
    boundary_closed_form,
    cot_pi_multiple,
    delta_type_shift,
    expansion_coefficients,
    flank_cot,
    leading_constants,
    newton_boundary,
    rayleigh_term,
    sin_pi_multiple,
)
from fabry.capacitance import block_spectrum, build_capacitance
from fabry.chain import MaterialParams, StructuralVector, Wavenumber, load_config, resonant_index_set
from fabry.figures import BUILTIN_CONFIGS
from fabry.solver import find_resonances

PI = Wavenumber(Fraction(1))


def _expansions(cfg, params=None):
    sysm = build_capacitance(cfg.t, cfg.k0)
    return sysm, expansion_coefficients(sysm, block_spectrum(sysm), params)


def test_exact_cotangents():
    assert cot_pi_multiple(Fraction(3, 2)) == 0.0
    assert cot_pi_multiple(Fraction(5, 4)) == 1.0
    assert cot_pi_multiple(Fraction(-1, 4)) == -1.0
    assert cot_pi_multiple(Fraction(3, 10)) == pytest.approx(1 / math.tan(0.3 * math.pi))
    with pytest.raises(ZeroDivisionError):
        cot_pi_multiple(Fraction(2))
    assert sin_pi_multiple(Fraction(7, 2)) == -1.0
    assert sin_pi_multiple(Fraction(3)) == 0.0


def test_flank_cot_chain_ends_and_resonant_flank():
    t = StructuralVector.from_values(["1", "0.75", "1"])
    assert flank_cot(t, PI, 0) == -1j and flank_cot(t, PI, 4) == -1j
    assert flank_cot(t, PI, 2) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        flank_cot(t, PI, 1)


def test_fig4_coefficients(fig4_cfg):
    _, exps = _expansions(fig4_cfg)
    got = sorted((e.c1, e.c2.real, e.c2.imag) for e in exps)
    want = sorted([(1.0, -0.25, -0.25), (0.5, 1 / 3, 0.0), (1.0, 1 / 6, 0.0)])
    assert np.allclose(got, want, atol=1e-12)


def test_setting3_degenerate_coefficients(setting3_cfg):
    _, exps = _expansions(setting3_cfg)
    cot = 1 / math.tan(0.3 * math.pi)
    got = sorted((e.c1, e.c2.real, e.c2.imag) for e in exps)
    want = sorted(
        [
            (math.sqrt(1 / 6), cot / 12, 0.0),
            (math.sqrt(1 / 6), cot / 12, 0.0),
            (math.sqrt(1 / 2), -cot / 4, 0.0),
        ]
    )
    assert np.allclose(got, want, atol=1e-12)


def test_speed_scaling_of_coefficients(fig4_cfg):
    params = MaterialParams(1e-3, r=Fraction(2), v=Fraction(3))
    _, base = _expansions(fig4_cfg)
    _, scaled = _expansions(fig4_cfg, params)
    for e0, e in zip(base, scaled):
        assert e.c1 == pytest.approx(3 * e0.c1 / math.sqrt(2))
        assert e.c2 == pytest.approx(3 * e0.c2 / 2)
        assert e.nu_linear_coeff == pytest.approx(e0.c2 / 2)


@given(structural_vectors(n_min=2, n_max=8), st.floats(min_value=0.1, max_value=10))
def test_rayleigh_term_is_scale_invariant(t, c):
    sysm = build_capacitance(t, PI)
    for e in expansion_coefficients(sysm):
        L_diag = sysm.blocks[e.block_index].L_diag
        assert rayleigh_term(c * e.alpha, e.B, L_diag) == pytest.approx(rayleigh_term(e.alpha, e.B, L_diag), rel=1e-12)


@given(structural_vectors(n_min=2, n_max=8))
def test_coefficient_count_and_reality(t):
    sysm = build_capacitance(t, PI)
    exps = expansion_coefficients(sysm)
    assert len(exps) == sysm.partition.m
    for e in exps:
        interior = e.a > 1 and e.b < len(t)
        if interior:
            assert e.c2.imag == 0
        else:
            assert e.c2.imag <= 0


@pytest.mark.parametrize("name", ["fig4", "example", "setting3"])
def test_pair_average_recovers_second_order_coefficient(name):
    cfg = load_config(BUILTIN_CONFIGS[name])
    errs = []
    for d in (1e-5, 1e-6):
        rs = find_resonances(cfg.t, cfg.k0, d)
        sq = [b for b in rs.branches if b.kind == "sqrt"]
        worst = 0.0
        for plus, minus in zip(sq[::2], sq[1::2]):
            assert plus.sign == 1 and minus.sign == -1
            assert plus.k_num.real > minus.k_num.real
            avg = ((plus.k_num + minus.k_num) / 2 - cfg.k0.value) / d
            worst = max(worst, abs(avg - plus.c2))
        errs.append(worst)
    # the remainder is O(delta): ten times smaller delta, ten times smaller error
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.2)


def test_nu_form_matches_delta_form(fig4_cfg):
    _, exps = _expansions(fig4_cfg)
    for e in exps:
        gaps = []
        for d in (1e-4, 1e-5):
            nu = 2 * d / (d + e.r)
            gaps.append(abs(e.k_of_nu(nu, 1) - e.k_of_delta(d, 1)))
        assert gaps[1] < 1e-6
        # difference is O(delta^{3/2})
        assert math.log10(gaps[0] / gaps[1]) == pytest.approx(1.5, abs=0.1)


def test_complex_delta_uses_principal_root(fig4_cfg):
    _, exps = _expansions(fig4_cfg)
    e = exps[0]
    d = complex(-1e-4, 1e-4)
    assert e.omega(d, 1) == pytest.approx(e.k0 + e.c1 * cmath.sqrt(d) + e.c2 * d)


def test_block_order_table():
    assert [block_order(4, l) for l in range(3)] == [4, 2, 0]
    assert [block_order(3, l) for l in range(3)] == [3, 1, 0]
    with pytest.raises(ValueError):
        block_order(2, 2)


@given(st.lists(st.integers(min_value=1, max_value=5), min_size=1, max_size=4).filter(lambda s: sum(s) <= 12))
def test_boundary_closed_form_matches_brute_force(sizes):
    n = sum(sizes)
    m = sum(s // 2 for s in sizes)
    brute = boundary_brute_force(sizes)
    assert len(brute) == n - m + 1
    assert brute == [boundary_closed_form(n, m, l) for l in range(n - m + 1)]
    slopes = np.diff(brute)
    assert set(slopes[:m]) <= {-2} and set(slopes[m:]) <= {-1}


def test_example_newton_boundary(example_cfg):
    nb = newton_boundary(resonant_index_set(example_cfg.t, example_cfg.k0))
    assert (nb.n, nb.m) == (11, 5)
    assert nb.S == (11, 9, 7, 5, 3, 1, 0)
    assert nb.breakpoints == ((5, 1), (6, 0))


def test_fig4_leading_constants(fig4_cfg):
    part = resonant_index_set(fig4_cfg.t, fig4_cfg.k0)
    const = leading_constants(fig4_cfg.t, fig4_cfg.k0, part)
    assert newton_boundary(part).S == (7, 5, 3, 1, 0)
    assert const.next_lead == pytest.approx(64 - 64j)
    assert delta_type_shift(const) == pytest.approx(-(1 + 1j) / 4)


@pytest.mark.parametrize("name", ["fig4", "example"])
def test_delta_type_shift_matches_numeric_root(name):
    cfg = load_config(BUILTIN_CONFIGS[name])
    part = resonant_index_set(cfg.t, cfg.k0)
    shift = delta_type_shift(leading_constants(cfg.t, cfg.k0, part))
    for d in (1e-5, 1e-6):
        rs = find_resonances(cfg.t, cfg.k0, d)
        (branch,) = [b for b in rs.branches if b.kind == "delta"]
        nu = 2 * d / (1 + d)
        assert (branch.k_num - cfg.k0.value) / nu == pytest.approx(shift, abs=50 * d)


def test_delta_shift_absent_with_two_odd_blocks():
    t = StructuralVector.from_values(["1", "1", "1", "0.75", "1", "1", "1"])
    part = resonant_index_set(t, PI)
    assert part.n - 2 * part.m == 2
    assert delta_type_shift(leading_constants(t, PI, part)) is None
