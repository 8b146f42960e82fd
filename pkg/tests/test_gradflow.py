import math

import numpy as np
import pytest

from selftrap.core import FieldPair, ModelParams, RadialGrid, energy_breakdown, norm_target
from selftrap.fitting import fit_gaussian
from selftrap.gradflow import (
    FlowConfig,
    Outcome,
    box_mode,
    collapse_probe,
    delocalized_start,
    flow_step,
    ground_state,
    initialize,
    lowest_state,
    residuals,
    rms_width,
)
from selftrap.variational import find_selftrap


def model(d, beta, alpha=1.0, gamma=0.5):
    return ModelParams(alpha, beta, gamma, d)


@pytest.fixture(scope="module")
def ref_1d():
    m, g = model(1, 5.0), RadialGrid(1, 32.0, 2048)
    return m, g, ground_state(m, g)


def test_flow_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(time_step=0)
    with pytest.raises(ValueError):
        FlowConfig(collapse_width_floor=0.5)
    with pytest.raises(ValueError):
        FlowConfig(condensate_wall="periodic")
    with pytest.raises(ValueError):
        FlowConfig(max_steps=0)


def test_initialize_contract():
    m, g = model(2, 1.0), RadialGrid(2, 16.0, 256)
    f = initialize(m, g, 2.0)
    f.validate(g)
    assert np.allclose(f.psi, f.psi[0])
    assert f.chi[1] / f.chi[0] == pytest.approx(math.exp(-0.5 * (g.r[1] / 2.0) ** 2), rel=1e-12)
    pinned = initialize(m, g, 2.0, condensate_wall="dirichlet")
    pinned.validate(g, pin_psi=True)
    assert pinned.psi[0] > pinned.psi[-2] > 0
    for bad in (g.spacing / 2, 8.0, 9.0):
        with pytest.raises(ValueError):
            initialize(m, g, bad)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_box_mode_matches_continuum(d):
    g = RadialGrid(d, 10.0, 1001)
    k2, mode = box_mode(g)
    first_zero = {1: math.pi / 2, 2: 2.404825557695773, 3: math.pi}[d]
    assert k2 == pytest.approx((first_zero / 10.0) ** 2, rel=1e-4)
    assert g.integrate(mode**2) == pytest.approx(1.0)
    assert np.all(mode[:-1] > 0) and mode[-1] == 0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_free_impurity_relaxes_to_box_mode(d):
    g = RadialGrid(d, 16.0, 512)
    rep = ground_state(model(d, 0.0), g)
    assert rep.converged
    k2, mode = box_mode(g)
    assert rep.energy.epsilon == pytest.approx(0.5 * k2, rel=1e-9)
    assert np.abs(rep.fields.chi - mode).max() < 1e-6


def test_norms_and_monotonicity_every_step():
    m, g = model(2, 4.0), RadialGrid(2, 20.0, 400)
    c = FlowConfig()
    f = initialize(m, g, 1.0)
    e_prev = energy_breakdown(m, g, f).e_tot
    for _ in range(300):
        f = flow_step(m, g, f, c)
        n_psi, n_chi = f.norms(g)
        assert n_psi == pytest.approx(norm_target(g), rel=1e-10)
        assert n_chi == pytest.approx(1.0, rel=1e-10)
        e = energy_breakdown(m, g, f).e_tot
        assert e <= e_prev + 1e-9 * abs(e_prev)
        e_prev = e


def test_converged_state_is_stationary(ref_1d):
    m, g, rep = ref_1d
    assert rep.converged and rep.monotonicity_violations == 0
    r_psi, r_chi, mu, eps = residuals(m, g, rep.fields)
    assert max(r_psi, r_chi) < 1e-6
    assert (rep.residual_psi, rep.residual_chi) == (r_psi, r_chi)
    assert eps == pytest.approx(rep.energy.epsilon)
    assert rep.chemical_potential == pytest.approx(mu)
    assert rep.flow_time == pytest.approx(rep.steps * FlowConfig().time_step)


def test_seed_independence(ref_1d):
    m, g, rep = ref_1d
    a = ground_state(m, g, seed_width=g.radius / 4)
    b = ground_state(m, g, seed_width=g.radius / 8)
    assert np.abs(a.fields.chi - b.fields.chi).max() < 1e-6
    assert np.abs(a.fields.psi - b.fields.psi).max() < 1e-6


def test_second_order_grid_convergence():
    m = model(1, 5.0)
    e = [ground_state(m, RadialGrid(1, 32.0, n)).energy.e_tot for n in (513, 1025, 2049)]
    order = math.log2((e[0] - e[1]) / (e[1] - e[2]))
    assert order >= 1.8


def test_weak_coupling_width_1d():
    for beta in (0.5, 1.0):
        m, g = model(1, beta), RadialGrid(1, 128.0, 4096)
        rep = ground_state(m, g)
        sigma = fit_gaussian(g, rep.fields.chi)[0]
        assert abs(beta) * 0.5 / sigma < 0.15
        assert sigma == pytest.approx(find_selftrap(m).sigma_min, rel=0.15)


def test_harmonic_width_at_strong_coupling():
    # a Gaussian of width s solves -a/2 chi'' + k r^2 chi / 2 for s^4 = a / k, with
    # k the curvature of beta * |psi|^2 averaged over the impurity density
    beta = 20.0
    m, g = model(1, beta), RadialGrid(1, 32.0, 8192)
    rep = ground_state(m, g)
    n = rep.fields.psi**2
    curv = np.gradient(np.gradient(n, g.spacing), g.spacing)
    curv[0] = 2 * (n[1] - n[0]) / g.spacing**2
    k = beta * g.integrate(rep.fields.chi**2 * curv)
    assert fit_gaussian(g, rep.fields.chi)[0] == pytest.approx((1.0 / k) ** 0.25, rel=0.2)


def test_2d_subcritical_impurity_spreads_to_box_scale():
    g = RadialGrid(2, 64.0, 4096)
    rep = ground_state(model(2, 3.0), g)
    assert rep.converged
    assert fit_gaussian(g, rep.fields.chi)[0] > g.radius / 4


def test_2d_strong_attraction_collapses():
    g = RadialGrid(2, 64.0, 4096)
    rep = ground_state(model(2, -12.0), g)
    assert rep.outcome is Outcome.COLLAPSE_DETECTED
    assert rep.fields.psi[0] ** 2 > FlowConfig().density_cap or rms_width(g, rep.fields.chi) < 2 * g.spacing


def test_3d_strong_repulsion_localizes():
    g = RadialGrid(3, 32.0, 4096)
    rep = ground_state(model(3, 25.0), g)
    assert rep.converged
    assert fit_gaussian(g, rep.fields.chi)[0] < 0.05 * g.radius


def test_3d_attractive_probe_finds_no_ground_state():
    g = RadialGrid(3, 8.0, 4096)
    c = FlowConfig(time_step=1e-4, impurity_time_step=1e-4, max_steps=5000)
    rep = collapse_probe(model(3, -5.0), g, 0.05, c)
    assert rep.outcome is Outcome.NO_GROUND_STATE
    assert rep.monotonicity_violations == 0
    spread = ground_state(model(3, -5.0), g)
    assert rep.energy.e_tot < spread.energy.e_tot


def test_3d_lowest_state_compares_branches():
    g = RadialGrid(3, 32.0, 4096)
    m = model(3, 16.4)
    local = ground_state(m, g)
    spread = ground_state(m, g, initial=delocalized_start(m, g))
    assert local.converged and spread.converged
    assert rms_width(g, local.fields.chi) < 2 < rms_width(g, spread.fields.chi)
    best = lowest_state(m, g)
    assert best.energy.e_tot == min(local.energy.e_tot, spread.energy.e_tot)


def test_max_steps_outcome():
    rep = ground_state(model(1, 5.0), RadialGrid(1, 32.0, 512), FlowConfig(max_steps=3))
    assert rep.outcome is Outcome.MAX_STEPS_EXCEEDED and rep.steps == 3


def test_dirichlet_condensate_wall():
    g = RadialGrid(1, 32.0, 1024)
    c = FlowConfig(condensate_wall="dirichlet")
    rep = ground_state(model(1, 5.0), g, c)
    assert rep.converged
    rep.fields.validate(g, pin_psi=True)
    assert max(residuals(model(1, 5.0), g, rep.fields, pin_psi=True)[:2]) < 1e-6


def test_trace_records_progress():
    rep = ground_state(model(1, 2.0), RadialGrid(1, 32.0, 512), trace_every=5)
    steps = [t[0] for t in rep.trace]
    assert steps == list(range(5, rep.steps + 1, 5))
    energies = [t[1] for t in rep.trace]
    assert all(b <= a + 1e-9 * abs(a) for a, b in zip(energies, energies[1:]))


def test_warm_start_from_previous_solution(ref_1d):
    m, g, rep = ref_1d
    again = ground_state(m, g, initial=rep.fields)
    assert again.converged and again.steps <= 5
    assert isinstance(again.fields, FieldPair)
