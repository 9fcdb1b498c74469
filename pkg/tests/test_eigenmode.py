from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import scattering_system
from fabry.chain import MaterialParams, ResonatorChain, StructuralVector
from fabry.eigenmode import (
    DegenerateEigenvalueError,
    estimate_gamma,
    piecewise_linear_mode,
    propagation_matrix,
    reconstruct_mode,
    subwavelength_mode,
    trig_approximation,
)
from fabry.figures import mode_shape_report, normalized_ratio_error
from fabry.solver import find_resonances, prepare
from fabry.verify import jump_residuals

ks = st.builds(complex, st.floats(0.1, 5.0), st.floats(-0.3, 0.3))
lengths = st.floats(0.0, 3.0)


@given(ks, lengths, lengths)
def test_propagation_matrix_group_law(k, a, b):
    P = propagation_matrix(k, a)
    assert abs(np.linalg.det(P) - 1) < 1e-12
    assert np.allclose(P @ propagation_matrix(k, b), propagation_matrix(k, a + b), atol=1e-11)


@given(ks, lengths)
def test_propagation_matrix_matches_matrix_exponential(k, a):
    # first-order system (u, u')' = [[0, 1], [-k^2, 0]] (u, u')
    A = np.array([[0, 1], [-k * k, 0]], dtype=complex)
    assert np.allclose(propagation_matrix(k, a), expm(A * a), atol=1e-10)


def test_propagation_matrix_at_zero_wavenumber():
    assert np.allclose(propagation_matrix(0, 2.0), [[1, 2], [0, 1]])


def _fig6_branch(fig6_cfg, delta):
    rs = find_resonances(fig6_cfg.t, fig6_cfg.k0, delta)
    return [b for b in rs.branches if b.kind == "sqrt"]


def test_mode_satisfies_interface_conditions(fig6_cfg):
    d = 1e-3
    for b in _fig6_branch(fig6_cfg, d):
        prof = reconstruct_mode(fig6_cfg.chain, b.k_num, d, target=b.block)
        cont, jump = jump_residuals(prof)
        assert cont < 1e-12 and jump < 1e-12
        assert prof.radiation_residual < 1e-8
        assert len(prof.states) == 2 * fig6_cfg.chain.N


def test_radiation_residual_detects_non_resonance(fig6_cfg):
    b = _fig6_branch(fig6_cfg, 1e-3)[0]
    prof = reconstruct_mode(fig6_cfg.chain, b.k_num + 1e-2, 1e-3)
    assert prof.radiation_residual > 1e-4


def _ode_residual(prof, chain, n_pts):
    r = float(chain.params.r)
    worst = 0.0
    for j in range(1, len(prof.boundaries)):
        x, u = prof.x[prof.interval == j], prof.u[prof.interval == j]
        h = x[1] - x[0]
        kl = prof.k * r if j % 2 == 1 else prof.k
        lap = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        worst = max(worst, float(np.abs(lap + kl**2 * u[1:-1]).max()))
    return worst


def test_sampled_mode_solves_helmholtz(fig6_cfg):
    d = 1e-3
    b = _fig6_branch(fig6_cfg, d)[0]
    res = [
        _ode_residual(reconstruct_mode(fig6_cfg.chain, b.k_num, d, points_per_segment=n), fig6_cfg.chain, n)
        for n in (40, 80)
    ]
    # second differences are O(h^2) accurate; halving h quarters the residual
    assert res[0] / res[1] == pytest.approx(4, rel=0.1)


def test_mode_matches_scattering_null_vector(fig6_cfg):
    d = 1e-3
    chain = fig6_cfg.chain
    b = _fig6_branch(fig6_cfg, d)[0]
    prof = reconstruct_mode(chain, b.k_num, d, normalize=False)
    A = scattering_system(chain, b.k_num, d)
    _, _, vh = np.linalg.svd(A)
    coef = vh[-1].conj()
    n_reg = len(prof.boundaries) + 1
    unknowns = [(j, s) for j in range(n_reg) for s in (1, -1)]
    unknowns.remove((0, 1))
    unknowns.remove((n_reg - 1, -1))
    r = float(chain.params.r)
    u_ref = np.zeros_like(prof.u)
    for (j, s), c in zip(unknowns, coef):
        kl = b.k_num * r if j % 2 == 1 else b.k_num
        mask = prof.interval == j
        u_ref[mask] += c * np.exp(1j * s * kl * prof.x[mask])
    scale = np.vdot(u_ref, prof.u) / np.vdot(u_ref, u_ref)
    assert np.abs(prof.u - scale * u_ref).max() < 1e-8 * np.abs(prof.u).max()


def test_normalisation_is_real_unit_peak_on_target(fig6_cfg):
    d = 1e-3
    for b in _fig6_branch(fig6_cfg, d):
        prof = reconstruct_mode(fig6_cfg.chain, b.k_num, d, target=b.block)
        a, e = b.block
        mask = np.array([a <= j <= e and j % 2 == 0 for j in prof.interval])
        peak = prof.u[mask][np.argmax(np.abs(prof.u[mask]))]
        assert peak == pytest.approx(1.0, abs=1e-12)
        assert np.abs(prof.u[mask]).max() == pytest.approx(1.0)
        assert prof.in_target.any()


def test_fig6_shapes_match_trig_prediction(fig6_cfg):
    for item in mode_shape_report(fig6_cfg, 1e-3):
        assert normalized_ratio_error(item["fit"].ratios, item["prediction"].beta) <= 0.05


def test_shape_deviation_shrinks_like_root_delta(fig6_cfg):
    devs = []
    for d in (1e-3, 1e-4, 1e-5):
        devs.append(max(item["fit"].deviation / item["fit"].peak for item in mode_shape_report(fig6_cfg, d)))
    slopes = np.diff(np.log(devs)) / np.diff(np.log([1e-3, 1e-4, 1e-5]))
    assert np.all(slopes == pytest.approx(0.5, abs=0.1))


def test_zero_crossings_follow_the_resonant_phase(fig6_cfg):
    # on a target spacing the mode is ~ sin(k0 (x - x_a)); its zeros sit at x_a + m pi / k0
    d = 1e-5
    for item in mode_shape_report(fig6_cfg, d):
        prof, pred = item["profile"], item["prediction"]
        x_a = prof.boundaries[pred.block[0] - 1]
        j = pred.spacings[int(np.argmax(np.abs(pred.beta)))]
        mask = prof.interval == j
        x, u = prof.x[mask], (prof.u[mask] / item["fit"].scale).real
        flips = np.flatnonzero(np.sign(u[1:]) != np.sign(u[:-1]))
        for i in flips:
            z = x[i] - u[i] * (x[i + 1] - x[i]) / (u[i + 1] - u[i])
            m = round((z - x_a) * pred.k0 / math.pi)
            assert abs(z - (x_a + m * math.pi / pred.k0)) < 1e-2


def test_trig_prediction_rejects_shared_eigenvalue(setting3_cfg, fig4_cfg):
    pr = prepare(setting3_cfg.t, setting3_cfg.k0)
    shared = [e.lam for e in pr.expansions]
    lam = max(set(shared), key=shared.count)
    with pytest.raises(DegenerateEigenvalueError):
        trig_approximation(pr.partition, pr.spectrum, setting3_cfg.k0, lam)
    pr4 = prepare(fig4_cfg.t, fig4_cfg.k0)
    with pytest.raises(ValueError):
        trig_approximation(pr4.partition, pr4.spectrum, fig4_cfg.k0, 123.0)


def test_trig_prediction_spacings_cover_block(fig6_cfg):
    pr = prepare(fig6_cfg.t, fig6_cfg.k0)
    for e in pr.expansions:
        pred = trig_approximation(pr.partition, pr.spectrum, fig6_cfg.k0, e.lam)
        assert all(pred.block[0] <= j <= pred.block[1] and j % 2 == 0 for j in pred.spacings)
        assert pred.amplitude_of(pred.spacings[0]) == pred.beta[0]


def test_estimate_gamma_is_per_interval(fig6_cfg):
    b1 = _fig6_branch(fig6_cfg, 1e-3)[0]
    b2 = [b for b in _fig6_branch(fig6_cfg, 2.5e-4) if b.branch_id == b1.branch_id][0]
    p1 = reconstruct_mode(fig6_cfg.chain, b1.k_num, 1e-3, target=b1.block)
    p2 = reconstruct_mode(fig6_cfg.chain, b2.k_num, 2.5e-4, target=b2.block)
    gam = estimate_gamma(p1, p2, 1e-3, 2.5e-4)
    assert set(gam) == set(range(len(p1.boundaries) + 1))
    assert all(math.isfinite(g) for g in gam.values())
    a, e = b1.block
    n_seg = len(p1.boundaries) - 1
    # the spacings carrying the mode stay O(1), resonators inside the block are
    # O(delta^{1/2}) and the exterior field is O(delta)
    assert abs(gam[a]) < 0.1 and abs(gam[e]) < 0.1
    assert all(gam[j] == pytest.approx(1.0, abs=0.1) for j in range(a + 1, e, 2))
    assert gam[0] == pytest.approx(2.0, abs=0.1) and gam[n_seg + 1] == pytest.approx(2.0, abs=0.1)


def test_subwavelength_recall_error_is_order_delta():
    t = StructuralVector.from_values(["1", "1", "1"])
    errs = []
    for d in (1e-3, 1e-4):
        chain = ResonatorChain.from_structural(t, MaterialParams(d))
        cmp = subwavelength_mode(chain, 2.0, [1.0, -1.0], d)
        assert abs(cmp.profile.k.real - math.sqrt(2 * d)) < 10 * d
        assert not cmp.constant_mode
        errs.append(cmp.error)
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.1)


def test_piecewise_linear_mode_interpolates():
    t = StructuralVector.from_values(["1", "2", "1"])
    chain = ResonatorChain.from_structural(t, MaterialParams(1e-3))
    xs = chain.boundaries()
    mid = (xs[1] + xs[2]) / 2
    got = piecewise_linear_mode(chain, [1.0, -1.0], np.array([xs[0] - 1, xs[0] + 0.5, mid, xs[3] + 1]))
    assert np.allclose(got, [1, 1, 0, -1])


def test_reconstruct_rejects_zero_contrast(fig6_cfg):
    with pytest.raises(ValueError):
        reconstruct_mode(fig6_cfg.chain, 3.0, 0.0)
