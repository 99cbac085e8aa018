import numpy as np
import pytest
from scipy.linalg import expm

from chve.grid import (GridSpec, ModelParams, PreconditionError, ScalarField,
                       StaggeredVectorField, TensorField, determinant)
from chve.transport import TransportSystem, step_deformation
from chve.verification import det_transport_deviation, interior_vortex


def test_uniform_state_is_exact_fixed_point(grid16):
    params = ModelParams(lam=0.05)
    phi = ScalarField.uniform(grid16, 0.3)
    F0 = TensorField(grid16, np.tile(np.array([[1.1, 0.2], [-0.1, 0.9]]),
                                     (16, 16, 1, 1)))
    v = StaggeredVectorField.zeros(grid16)
    F1 = step_deformation(F0, v, phi, dt=0.05, params=params)
    assert np.max(np.abs(F1.comps - F0.comps)) <= 1e-12


def test_rejects_nonpositive_dt(grid16, params):
    F = TensorField.identity(grid16)
    v = StaggeredVectorField.zeros(grid16)
    phi = ScalarField.uniform(grid16, 1.0)
    with pytest.raises(PreconditionError):
        step_deformation(F, v, phi, dt=0.0, params=params)


def test_diffusion_decay_matches_backward_euler_symbol():
    """v = 0, uniform stiffness (f = 1 at the upper clamp), single cosine
    perturbation: each step must damp the mode by 1/(1 + lam k^2 dt)."""
    n = 256
    grid = GridSpec(n, 4)
    params = ModelParams(lam=0.1)
    lam, dt = params.lam, 0.1
    X, _ = grid.cell_centers()
    k = np.pi / grid.lx
    mode = np.cos(k * X)
    comps = np.zeros((n, 4, 2, 2))
    comps[:, :, 0, 0] = 1.0 + 1e-3 * mode
    comps[:, :, 1, 1] = 1.0
    F = TensorField(grid, comps)
    phi = ScalarField.uniform(grid, 1.0)
    v = StaggeredVectorField.zeros(grid)
    system = TransportSystem(grid, params)

    def amplitude(field):
        dev = field.comps[:, :, 0, 0] - 1.0
        return float(np.sum(dev * mode) / np.sum(mode * mode))

    expected = 1.0 / (1.0 + lam * 1.0 * k ** 2 * dt)
    a0 = amplitude(F)
    for _ in range(3):
        F1 = system.step(F, v, phi, dt)
        ratio = amplitude(F1) / amplitude(F)
        assert ratio == pytest.approx(expected, rel=1e-3)
        F = F1
    assert amplitude(F) == pytest.approx(a0 * expected ** 3, rel=3e-3)


def test_stretching_matches_matrix_exponential(grid16):
    """lam = 0, constant skew velocity gradient imposed at operator level:
    N explicit steps give (I + dt W)^N F0, first-order close to expm(tW)."""
    params = ModelParams(lam=0.0)
    W = np.array([[0.0, 0.8], [-0.8, 0.0]])
    grad_v = TensorField(grid16, np.tile(W, (16, 16, 1, 1)))
    v = StaggeredVectorField.zeros(grid16)
    phi = ScalarField.uniform(grid16, 1.0)
    t_end = 0.5
    errs = []
    for dt in (0.01, 0.005):
        F = TensorField.identity(grid16)
        for _ in range(int(round(t_end / dt))):
            F = step_deformation(F, v, phi, dt, params, grad_v=grad_v)
        ref = expm(t_end * W)
        errs.append(np.max(np.abs(F.comps - ref)))
    assert 1.7 <= errs[0] / errs[1] <= 2.3  # first order in dt


def test_step_linear_in_F(grid16, rng):
    params = ModelParams(lam=1e-2)
    phi = ScalarField(grid16, 0.2 * rng.standard_normal((16, 16)))
    v = interior_vortex(grid16, target_max=0.5)
    A = TensorField(grid16, rng.standard_normal((16, 16, 2, 2)))
    B = TensorField(grid16, rng.standard_normal((16, 16, 2, 2)))
    a, b = 1.7, -0.4
    system = TransportSystem(grid16, params)
    combo = system.step(TensorField(grid16, a * A.comps + b * B.comps),
                        v, phi, 0.01)
    parts = (a * system.step(A, v, phi, 0.01).comps
             + b * system.step(B, v, phi, 0.01).comps)
    assert np.max(np.abs(combo.comps - parts)) <= 1e-12


def test_factorization_reused_within_frozen_phi(grid16):
    params = ModelParams(lam=1e-3)
    system = TransportSystem(grid16, params)
    phi = ScalarField.uniform(grid16, 0.2)
    v = interior_vortex(grid16, target_max=0.5)
    F = TensorField.identity(grid16)
    system.step(F, v, phi, 0.01)
    key = system._key
    system.step(F, v, phi, 0.01)
    assert system._key is key
    system.step(F, v, phi, 0.02)
    assert system._key != key


def test_determinant_preserved_at_first_order():
    # lam = 0: det F stays near 1 under a solenoidal vortex; halving (dt, h)
    # together roughly halves the deviation
    dev_coarse = det_transport_deviation(32, dt=4e-3, t_end=0.25, lam=0.0)
    dev_fine = det_transport_deviation(64, dt=2e-3, t_end=0.25, lam=0.0)
    assert 1.4 <= dev_coarse / dev_fine <= 2.6


def test_regularization_breaks_determinant_transport():
    dev0 = det_transport_deviation(64, dt=2e-3, t_end=0.25, lam=0.0)
    dev_lam = det_transport_deviation(64, dt=2e-3, t_end=0.25, lam=1e-2)
    assert dev_lam > 1.5 * dev0
