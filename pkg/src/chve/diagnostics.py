"""Free energy, dissipation, mass and the discrete energy-budget residual.

The total free energy mirrors the integrand the a-priori bound controls:

    E = int (c/2) f(phi)(F:F - d)  +  (eps/2)|grad phi|^2  +  psi(phi)/eps,

with midpoint (cell) quadrature for the bulk/elastic parts and face values
for the gradient part.  The dissipation functional

    D = nu int |grad v|^2 + lam int |grad(f(phi) F)|^2
        + int b(phi)|grad mu|^2 + delta int |dphi/dt|^2

reuses the exact quadratic forms of the discrete step operators, so
(E_new - E_old)/dt + D_new measures the splitting defect of the scheme and
nothing else.  The defect is O(dt + h^2) and is reported, not enforced; the
driver reacts to sign violations by rejecting the step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constitutive as law
from .grid import (ModelParams, ScalarField, SimState, StaggeredVectorField,
                   TensorField)
from .operators import face_average, grad_cc


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    interface: float
    bulk: float

    @property
    def total(self) -> float:
        return self.elastic + self.interface + self.bulk


@dataclass(frozen=True)
class DiagnosticsRow:
    step: int
    t: float
    dt: float
    E_total: float
    E_elastic: float
    E_interface: float
    E_bulk: float
    dissipation: float
    mass: float
    div_v_max: float
    picard_iters: int
    newton_iters: int
    budget_residual: float

    CSV_HEADER = ("step,t,dt,E_total,E_elastic,E_interface,E_bulk,dissipation,"
                  "mass,div_v_max,picard_iters,newton_iters,budget_residual")

    def csv_line(self) -> str:
        floats = [self.t, self.dt, self.E_total, self.E_elastic, self.E_interface,
                  self.E_bulk, self.dissipation, self.mass, self.div_v_max]
        tail = [f"{x:.17g}" for x in floats]
        return ",".join([str(self.step)] + tail[:9]
                        + [str(self.picard_iters), str(self.newton_iters),
                           f"{self.budget_residual:.17g}"])


def total_energy(phi: ScalarField, F: TensorField, params: ModelParams) -> EnergyBreakdown:
    g = phi.grid
    a = g.cell_area
    elastic = float(np.sum(law.neo_hookean_w(phi.values, F.comps, params))) * a
    gphi = grad_cc(phi)
    interface = 0.5 * params.eps * (float(np.sum(gphi.u ** 2))
                                    + float(np.sum(gphi.w ** 2))) * a
    bulk = float(np.sum(law.psi(phi.values))) / params.eps * a
    return EnergyBreakdown(elastic=elastic, interface=interface, bulk=bulk)


def _grad_energy(field: ScalarField) -> float:
    gf = grad_cc(field)
    return float(np.sum(gf.u ** 2)) + float(np.sum(gf.w ** 2))


def dissipation(v: StaggeredVectorField, mu: ScalarField, phi: ScalarField,
                F: TensorField, dphi_dt: ScalarField | None,
                params: ModelParams) -> float:
    """Sum of the four quadratic dissipation forms, each built from the same
    discrete operators the corresponding step uses."""
    g = v.grid
    a = g.cell_area

    # nu |grad v|^2 with the no-slip ghost convention of the Stokes block
    du = np.zeros((g.nx + 1, g.ny + 1))
    du[:, 1:-1] = (v.u[:, 1:] - v.u[:, :-1]) / g.hy
    du[:, 0] = 2.0 * v.u[:, 0] / g.hy
    du[:, -1] = -2.0 * v.u[:, -1] / g.hy
    dw = np.zeros((g.nx + 1, g.ny + 1))
    dw[1:-1, :] = (v.w[1:, :] - v.w[:-1, :]) / g.hx
    dw[0, :] = 2.0 * v.w[0, :] / g.hx
    dw[-1, :] = -2.0 * v.w[-1, :] / g.hx
    # wall entries carry weight 1/2 so the sum reproduces <-Lap_h v, v>
    # (the exact quadratic form of the velocity block) to rounding
    visc = (float(np.sum(((v.u[1:, :] - v.u[:-1, :]) / g.hx) ** 2))
            + float(np.sum(((v.w[:, 1:] - v.w[:, :-1]) / g.hy) ** 2))
            + float(np.sum(du[:, 1:-1] ** 2))
            + 0.5 * (float(np.sum(du[:, 0] ** 2)) + float(np.sum(du[:, -1] ** 2)))
            + float(np.sum(dw[1:-1, :] ** 2))
            + 0.5 * (float(np.sum(dw[0, :] ** 2)) + float(np.sum(dw[-1, :] ** 2))))
    out = params.nu * visc * a

    fvals = law.stiffness_f(phi.values, params)
    if params.lam > 0.0:
        for i in range(F.d):
            for j in range(F.d):
                out += params.lam * _grad_energy(
                    ScalarField(g, fvals * F.comps[:, :, i, j])) * a

    bx, by = face_average(ScalarField(g, law.mobility_b(phi.values, params)))
    gmu = grad_cc(mu)
    out += (float(np.sum(bx * gmu.u ** 2)) + float(np.sum(by * gmu.w ** 2))) * a

    if dphi_dt is not None and params.delta > 0.0:
        out += params.delta * float(np.sum(dphi_dt.values ** 2)) * a
    return out


def total_mass(phi: ScalarField) -> float:
    return float(np.sum(phi.values)) * phi.grid.cell_area


def energy_budget_residual(state_n: SimState, state_np1: SimState, dt: float,
                           params: ModelParams) -> float:
    """(E_new - E_old)/dt + D_new with end-of-step fields in D."""
    e_old = total_energy(state_n.phi, state_n.F, params).total
    e_new = total_energy(state_np1.phi, state_np1.F, params).total
    dphi_dt = ScalarField(state_n.phi.grid,
                          (state_np1.phi.values - state_n.phi.values) / dt)
    d_new = dissipation(state_np1.v, state_np1.mu, state_np1.phi, state_np1.F,
                        dphi_dt, params)
    return (e_new - e_old) / dt + d_new
