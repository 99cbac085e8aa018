import numpy as np
import pytest

from chve import cahn_hilliard as ch
from chve.diagnostics import total_energy
from chve.errors import NewtonError
from chve.grid import (GridSpec, ModelParams, PreconditionError, ScalarField,
                       StaggeredVectorField, TensorField)


def test_static_mu_vanishes_at_well(grid16, params):
    phi = ScalarField.uniform(grid16, 1.0)
    mu = ch.static_chemical_potential(phi, TensorField.identity(grid16), params)
    assert np.max(np.abs(mu.values)) == 0.0


def test_static_mu_uniform_values(grid16):
    params = ModelParams(eps=1.0)
    F = TensorField.identity(grid16)
    mu0 = ch.static_chemical_potential(ScalarField.uniform(grid16, 0.0), F, params)
    assert np.max(np.abs(mu0.values)) == 0.0  # psi'(0) = 0
    mu5 = ch.static_chemical_potential(ScalarField.uniform(grid16, 0.5), F, params)
    assert np.allclose(mu5.values, 0.5 ** 3 - 0.5)


def test_static_mu_includes_viscous_term(grid16):
    params = ModelParams(delta=0.3)
    F = TensorField.identity(grid16)
    rate = ScalarField.uniform(grid16, 2.0)
    mu = ch.static_chemical_potential(ScalarField.uniform(grid16, 1.0), F,
                                      params, dphi_dt=rate)
    assert np.allclose(mu.values, 0.3 * 2.0)


def test_static_mu_is_discrete_energy_gradient(grid16, rng):
    # <mu, eta> equals d/ds E(phi + s eta) at s=0, for every direction
    params = ModelParams(eps=0.7, c_elastic=0.9)
    phi = ScalarField(grid16, 0.3 * rng.standard_normal((16, 16)))
    F = TensorField(grid16, np.eye(2) + 0.2 * rng.standard_normal((16, 16, 2, 2)))
    mu = ch.static_chemical_potential(phi, F, params)
    a = grid16.cell_area
    for _ in range(5):
        eta = rng.standard_normal((16, 16))
        h = 1e-6
        ep = total_energy(ScalarField(grid16, phi.values + h * eta), F, params).total
        em = total_energy(ScalarField(grid16, phi.values - h * eta), F, params).total
        fd = (ep - em) / (2 * h)
        pairing = np.sum(mu.values * eta) * a
        assert fd == pytest.approx(pairing, rel=1e-7, abs=1e-9)


def test_well_state_fixed_point_single_iteration(grid16, params):
    phi = ScalarField.uniform(grid16, 1.0)
    F = TensorField.identity(grid16)
    v = StaggeredVectorField.zeros(grid16)
    phi1, mu1, iters = ch.step_cahn_hilliard(phi, phi, F, v, dt=0.1, params=params)
    assert iters == 1
    assert np.array_equal(phi1.values, phi.values)
    assert np.max(np.abs(mu1.values)) == 0.0


def test_mass_conserved_per_step(grid16, rng):
    params = ModelParams(eps=0.25, b0=0.5, b1=0.5, c_elastic=0.3)
    phi = ScalarField(grid16, rng.uniform(-0.2, 0.2, (16, 16)))
    F = TensorField(grid16, np.eye(2) + 0.1 * rng.standard_normal((16, 16, 2, 2)))
    psi = rng.standard_normal((17, 17))
    psi[0, :] = psi[-1, :] = psi[:, 0] = psi[:, -1] = 0.0
    v = StaggeredVectorField.from_stream_function(grid16, 0.1 * psi)
    area = grid16.cell_area * grid16.nx * grid16.ny
    for dt in (1e-3, 1e-2):
        phi1, _, _ = ch.step_cahn_hilliard(phi, phi, F, v, dt=dt, params=params)
        drift = abs(np.sum(phi1.values) - np.sum(phi.values)) * grid16.cell_area
        assert drift <= 1e-12 * area


def test_linearized_amplification_matches_backward_euler_symbol():
    """Single cosine mode about phi = 0 with unit eps, F = I, v = 0.

    The convex split treats the (zero) curvature of psi_plus at 0
    implicitly and the -1 curvature of psi_minus explicitly, so one step
    multiplies the mode by (1 + dt b k^2) / (1 + dt b k^4)."""
    n = 256
    grid = GridSpec(n, 4)
    params = ModelParams(eps=1.0, b0=1.0, b1=1.0)
    dt = 2e-3
    X, _ = grid.cell_centers()
    k = 3 * np.pi / grid.lx
    mode = np.cos(k * X)
    amp0 = 1e-6
    phi = ScalarField(grid, amp0 * mode)
    F = TensorField.identity(grid)
    v = StaggeredVectorField.zeros(grid)

    phi1, _, _ = ch.step_cahn_hilliard(phi, phi, F, v, dt=dt, params=params)
    measured = float(np.sum(phi1.values * mode) / np.sum(mode * mode)) / amp0
    expected = (1.0 + dt * params.b0 * k ** 2) / (1.0 + dt * params.b0 * k ** 4)
    assert measured == pytest.approx(expected, rel=1e-3)


@pytest.mark.parametrize("dt", [1e-3, 1e-2, 1e-1])
def test_decoupled_energy_never_increases(dt, rng):
    """v = 0 and a stiffness window placed so f' vanishes on the whole
    phase range: the convex-splitting step is unconditionally
    dissipative in the phase-field energy."""
    grid = GridSpec(32, 32)
    params = ModelParams(eps=0.25, b0=1.0, b1=1.0, f_lo=2.0, f_hi=3.0)
    phi = ScalarField(grid, rng.uniform(-0.8, 0.8, (32, 32)))
    F = TensorField.identity(grid)
    v = StaggeredVectorField.zeros(grid)
    system = ch.CHSystem(grid, params)
    e = total_energy(phi, F, params).total
    for _ in range(25):
        phi, _, _ = system.step(phi, phi, F, v, dt)
        e_new = total_energy(phi, F, params).total
        assert e_new <= e + 1e-10 * abs(e)
        e = e_new


def test_newton_error_carries_residual(grid16, rng):
    params = ModelParams(eps=0.05, b0=1.0, b1=1.0)
    phi = ScalarField(grid16, rng.uniform(-0.5, 0.5, (16, 16)))
    F = TensorField.identity(grid16)
    v = StaggeredVectorField.zeros(grid16)
    with pytest.raises(NewtonError) as exc:
        ch.step_cahn_hilliard(phi, phi, F, v, dt=1.0, params=params,
                              max_iter=1, tol=1e-14)
    assert exc.value.residual > 0.0
    assert exc.value.iterations == 1


def test_rejects_nonpositive_dt(grid16, params):
    phi = ScalarField.uniform(grid16, 0.0)
    with pytest.raises(PreconditionError):
        ch.step_cahn_hilliard(phi, phi, TensorField.identity(grid16),
                              StaggeredVectorField.zeros(grid16), dt=-0.1,
                              params=params)
