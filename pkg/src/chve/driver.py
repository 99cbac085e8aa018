"""Coupled time loop: Stokes -> deformation transport -> Cahn-Hilliard,
with optional Picard sweeps, adaptive step control and file output.

One sweep of :meth:`Simulation.coupled_step` solves the quasi-static
momentum balance with forcing assembled from the freshest available
(mu, F), transports F with the new velocity, then advances the phase
field with the new velocity and the new F.  Repeating the sweep while
refreshing mu and F tightens the coupling to a fixed point of the fully
implicit splitting; the sweep count is capped by ``picard_max`` and
terminated early when the max change across (phi, F, v) drops below
``picard_tol``.

Step control: a step is rejected (and dt halved) when the phase-field
Newton fails, when the advective CFL number exceeds its bound, or when
the total energy increases past ``energy_increase_tol * |E0|``.  After
``grow_after`` consecutive accepted steps dt grows by ``grow_factor``,
clamped to [dt_min, dt_max].  A rejected step never touches the accepted
state, so a retry reruns identical arithmetic.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cahn_hilliard import CHSystem, static_chemical_potential
from .config import ConfigSpec, TimeConfig, dump_config
from .diagnostics import (DiagnosticsRow, dissipation, total_energy, total_mass)
from .errors import NewtonError, RunError, SolverError
from .grid import ScalarField, SimState, TensorField
from .stokes import StokesSolver, assemble_force, div_residual
from .transport import TransportSystem
from .vtk_io import read_restart, write_restart, write_vtk


class StepRejected(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class StepStats:
    picard_iters: int
    newton_iters: int
    picard_gap: float  # max change across (phi, F, v) in the last sweep


@dataclass(frozen=True)
class RunSummary:
    steps: int
    rejected_steps: int
    wall_time: float
    final_energy: float
    final_mass: float
    termination: str


def adapt_dt(dt: float, rules: TimeConfig, accepted: bool, streak: int):
    """Step-size update; returns (dt_new, streak_new).

    Raises RunError when a rejection would push dt below dt_min.
    """
    if not accepted:
        dt_new = 0.5 * dt
        if dt_new < rules.dt_min:
            raise RunError(f"dt underflow: {dt_new:.3e} < dt_min {rules.dt_min:.3e}")
        return dt_new, 0
    streak += 1
    if rules.adaptive and streak >= rules.grow_after:
        return min(dt * rules.grow_factor, rules.dt_max), 0
    return dt, streak


def initial_phi(cfg: ConfigSpec) -> ScalarField:
    g, ini = cfg.grid, cfg.initial
    X, Y = g.cell_centers()
    if ini.phi == "uniform":
        vals = np.full((g.nx, g.ny), ini.phi_value)
    elif ini.phi == "random-uniform":
        rng = np.random.default_rng(ini.seed)
        vals = ini.phi_value + rng.uniform(-ini.phi_amplitude, ini.phi_amplitude,
                                           (g.nx, g.ny))
        # one smoothing pass (reflected stencil conserves the cell sum)
        p = np.pad(vals, 1, mode="edge")
        vals = vals + 0.125 * ((p[:-2, 1:-1] - 2 * vals + p[2:, 1:-1])
                               + (p[1:-1, :-2] - 2 * vals + p[1:-1, 2:]))
    elif ini.phi == "tanh-x":
        vals = ini.phi_value + ini.phi_amplitude * np.tanh(
            (X - 0.5 * g.lx) / ini.phi_width)
    elif ini.phi == "tanh-y":
        vals = ini.phi_value + ini.phi_amplitude * np.tanh(
            (Y - 0.5 * g.ly) / ini.phi_width)
    else:  # pragma: no cover - guarded by config validation
        raise RunError(f"unknown phi profile {ini.phi!r}")
    return ScalarField(g, vals)


def initial_F(cfg: ConfigSpec) -> TensorField:
    g, ini = cfg.grid, cfg.initial
    F = TensorField.identity(g)
    if ini.F == "cosine-stretch" and ini.F_amplitude != 0.0:
        X, _ = g.cell_centers()
        c = F.comps.copy()
        c[:, :, 0, 0] += ini.F_amplitude * np.cos(np.pi * X / g.lx)
        F = TensorField(g, c)
    return F


class Simulation:
    """Owns the per-run solver instances and the output writers."""

    def __init__(self, cfg: ConfigSpec):
        self.cfg = cfg
        self.grid = cfg.grid
        self.params = cfg.params
        self.stokes = StokesSolver(self.grid, cfg.params.nu)
        self.transport = TransportSystem(self.grid, cfg.params)
        self.ch = CHSystem(self.grid, cfg.params)

    # -- state construction -------------------------------------------------

    def initial_state(self) -> SimState:
        cfg = self.cfg
        if cfg.initial.restart_file:
            state, streak, e_scale = read_restart(cfg.initial.restart_file)
            if state.phi.grid != self.grid:
                raise RunError("restart grid does not match the configured grid")
            self._streak0 = streak
            self._e_scale0 = e_scale
            return state
        self._streak0 = 0
        self._e_scale0 = None
        phi = initial_phi(cfg)
        F = initial_F(cfg)
        mu = static_chemical_potential(phi, F, self.params)
        force = assemble_force(phi, mu, F, self.params)
        v, q = self.stokes.solve(force)
        return SimState(phi=phi, phi_prev=phi, mu=mu, F=F, v=v, q=q,
                        t=0.0, dt=cfg.time.dt0, step_index=0)

    # -- one coupled step ----------------------------------------------------

    def coupled_step(self, state: SimState, dt: float):
        """Advance one step of size dt; returns (state_new, StepStats).
        Raises StepRejected on Newton failure or CFL excess."""
        cfg = self.cfg
        p = self.params
        g = self.grid
        phi_n, F_n = state.phi, state.F

        dphi_dt = None
        if p.delta > 0.0:
            dphi_dt = ScalarField(g, (phi_n.values - state.phi_prev.values) / dt)
        mu_force = static_chemical_potential(phi_n, F_n, p, dphi_dt=dphi_dt)
        F_force = F_n
        guess = None
        prev = None
        newton_total = 0
        picard_iters = 0

        for sweep in range(1, cfg.coupling.picard_max + 1):
            force = assemble_force(phi_n, mu_force, F_force, p)
            try:
                v, q = self.stokes.solve(force)
            except SolverError as exc:
                raise StepRejected(f"stokes: {exc}") from exc

            cfl = dt * (np.max(np.abs(v.u)) / g.hx + np.max(np.abs(v.w)) / g.hy)
            if cfl > cfg.time.cfl_max:
                raise StepRejected(f"cfl {cfl:.3f} > {cfg.time.cfl_max}")

            try:
                F_new = self.transport.step(F_n, v, phi_n, dt)
                phi_new, mu_new, n_newton = self.ch.step(
                    phi_n, state.phi_prev, F_new, v, dt, initial_guess=guess)
            except NewtonError as exc:
                raise StepRejected(f"newton: {exc}") from exc
            except SolverError as exc:
                raise StepRejected(f"linear solve: {exc}") from exc
            newton_total += n_newton
            picard_iters = sweep

            if prev is not None:
                change = max(
                    float(np.max(np.abs(phi_new.values - prev[0].values))),
                    float(np.max(np.abs(F_new.comps - prev[1].comps))),
                    float(np.max(np.abs(v.u - prev[2].u))),
                    float(np.max(np.abs(v.w - prev[2].w))),
                )
            else:
                change = np.inf
            prev = (phi_new, F_new, v)
            mu_force = mu_new
            F_force = F_new
            guess = phi_new
            if change <= cfg.coupling.picard_tol:
                break

        new_state = SimState(phi=phi_new, phi_prev=phi_n, mu=mu_new, F=F_new,
                             v=v, q=q, t=state.t + dt, dt=dt,
                             step_index=state.step_index + 1)
        stats = StepStats(picard_iters=picard_iters, newton_iters=newton_total,
                          picard_gap=float(change) if np.isfinite(change) else -1.0)
        return new_state, stats

    # -- the run loop ----------------------------------------------------------

    def run(self, collect_rows: bool = False):
        cfg = self.cfg
        t0 = _time.perf_counter()
        outdir = Path(cfg.output.directory)
        outdir.mkdir(parents=True, exist_ok=True)

        state = self.initial_state()
        streak = getattr(self, "_streak0", 0)
        dt = min(max(state.dt, cfg.time.dt_min), cfg.time.dt_max)
        e_prev = total_energy(state.phi, state.F, self.params).total
        e_scale = getattr(self, "_e_scale0", None) or max(abs(e_prev), 1e-30)
        rejected = 0
        accepted = 0
        rows = [] if collect_rows else None
        termination = "t_end"

        (outdir / "run_config.ini").write_text(dump_config(cfg), encoding="utf-8")
        csv_path = outdir / "diagnostics.csv"
        fresh = state.step_index == 0
        csv = open(csv_path, "w" if fresh else "a", encoding="utf-8", newline="\n")
        try:
            if fresh:
                csv.write(DiagnosticsRow.CSV_HEADER + "\n")
                write_vtk(outdir / f"snap_{state.step_index:08d}.vtk", state)
                write_restart(outdir / f"restart_{state.step_index:08d}.chv",
                              state.advanced(dt=dt), streak, e_scale)

            while True:
                if state.t >= cfg.time.t_end - 1e-14:
                    termination = "t_end"
                    break
                if accepted >= cfg.time.max_steps:
                    termination = "max_steps"
                    break
                step_dt = min(dt, cfg.time.t_end - state.t)
                try:
                    cand, stats = self.coupled_step(state, step_dt)
                except StepRejected:
                    rejected += 1
                    try:
                        dt, streak = adapt_dt(dt, cfg.time, False, streak)
                    except RunError:
                        termination = "dt_underflow"
                        break
                    continue

                e_new = total_energy(cand.phi, cand.F, self.params).total
                if (cfg.time.reject_on_energy
                        and e_new > e_prev + cfg.time.energy_increase_tol * e_scale):
                    rejected += 1
                    try:
                        dt, streak = adapt_dt(dt, cfg.time, False, streak)
                    except RunError:
                        termination = "dt_underflow"
                        break
                    continue

                row = self._diagnostics_row(state, cand, step_dt,
                                            stats.picard_iters,
                                            stats.newton_iters, e_new)
                state = cand
                e_prev = e_new
                accepted += 1
                try:
                    dt, streak = adapt_dt(dt, cfg.time, True, streak)
                except RunError:  # pragma: no cover - growth cannot underflow
                    termination = "dt_underflow"
                    break

                if rows is not None:
                    rows.append(row)
                if accepted % cfg.output.diagnostics_every == 0:
                    csv.write(row.csv_line() + "\n")
                if cfg.output.snapshot_every and accepted % cfg.output.snapshot_every == 0:
                    write_vtk(outdir / f"snap_{state.step_index:08d}.vtk", state)
                    write_restart(outdir / f"restart_{state.step_index:08d}.chv",
                                  state.advanced(dt=dt), streak, e_scale)
        finally:
            csv.close()

        write_vtk(outdir / f"snap_{state.step_index:08d}.vtk", state)
        write_restart(outdir / f"restart_{state.step_index:08d}.chv",
                      state.advanced(dt=dt), streak, e_scale)
        summary = RunSummary(
            steps=accepted, rejected_steps=rejected,
            wall_time=_time.perf_counter() - t0,
            final_energy=total_energy(state.phi, state.F, self.params).total,
            final_mass=total_mass(state.phi),
            termination=termination,
        )
        if rows is not None:
            return summary, rows, state
        return summary

    def _diagnostics_row(self, state_n: SimState, state_np1: SimState, dt: float,
                         picard_iters: int, newton_iters: int,
                         e_new: float) -> DiagnosticsRow:
        p = self.params
        eb = total_energy(state_np1.phi, state_np1.F, p)
        dphi_dt = ScalarField(self.grid,
                              (state_np1.phi.values - state_n.phi.values) / dt)
        dnew = dissipation(state_np1.v, state_np1.mu, state_np1.phi,
                           state_np1.F, dphi_dt, p)
        e_old = total_energy(state_n.phi, state_n.F, p).total
        budget = (e_new - e_old) / dt + dnew
        return DiagnosticsRow(
            step=state_np1.step_index, t=state_np1.t, dt=dt,
            E_total=eb.total, E_elastic=eb.elastic, E_interface=eb.interface,
            E_bulk=eb.bulk, dissipation=dnew, mass=total_mass(state_np1.phi),
            div_v_max=div_residual(state_np1.v),
            picard_iters=picard_iters, newton_iters=newton_iters,
            budget_residual=budget,
        )


def run_simulation(cfg: ConfigSpec) -> RunSummary:
    """Run to completion, emitting diagnostics and snapshots; never raises
    for runtime failures (the summary carries the termination reason)."""
    return Simulation(cfg).run()


def simulate(cfg: ConfigSpec):
    """Testing entry: returns (summary, diagnostics rows, final state)."""
    return Simulation(cfg).run(collect_rows=True)
