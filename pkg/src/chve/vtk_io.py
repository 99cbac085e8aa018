"""Snapshot and restart I/O.

Snapshots are VTK legacy ASCII ``STRUCTURED_POINTS`` files with cell data:
scalars ``phi``, ``mu``, ``q``; vector ``velocity`` (face values averaged
to cell centers, z = 0); tensor ``F`` zero-padded to 3x3.  Cell data runs
x-fastest, matching VTK's ordering for point dimensions
(nx+1, ny+1, 1).

The restart file is a lossless fixed-layout little-endian dump:

    bytes 0..4   magic b"CHVE1"
    <q           nx, ny
    <d           lx, ly, t, dt
    <q           step_index, accept_streak
    <d           energy_scale  (|E| of the run's initial state, feeds the
                                energy-rejection threshold on resume)
    <d arrays    phi, phi_prev, mu, q        (nx*ny each, C order)
                 F                           (nx*ny*4, C order, (i,j,a,b))
                 u                           ((nx+1)*ny)
                 w                           (nx*(ny+1))

``dt`` in the header is the step size the driver would use next (after
adaptation), so resuming reproduces the uninterrupted run bit for bit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import GridSpec, ScalarField, SimState, StaggeredVectorField, TensorField

MAGIC = b"CHVE1"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk(path: str | Path, state: SimState):
    g = state.phi.grid
    nx, ny = g.nx, g.ny
    uc = 0.5 * (state.v.u[1:, :] + state.v.u[:-1, :])
    wc = 0.5 * (state.v.w[:, 1:] + state.v.w[:, :-1])

    lines = [
        "# vtk DataFile Version 3.0",
        f"chve snapshot step={state.step_index} t={_fmt(state.t)}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx + 1} {ny + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {_fmt(g.hx)} {_fmt(g.hy)} 1",
        f"CELL_DATA {nx * ny}",
    ]

    def cellwise(a):
        # x fastest, then y
        return (_fmt(a[i, j]) for j in range(ny) for i in range(nx))

    for name, fld in (("phi", state.phi), ("mu", state.mu), ("q", state.q)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(cellwise(fld.values))

    lines.append("VECTORS velocity double")
    for j in range(ny):
        for i in range(nx):
            lines.append(f"{_fmt(uc[i, j])} {_fmt(wc[i, j])} 0")

    lines.append("TENSORS F double")
    c = state.F.comps
    for j in range(ny):
        for i in range(nx):
            lines.append(f"{_fmt(c[i, j, 0, 0])} {_fmt(c[i, j, 0, 1])} 0")
            lines.append(f"{_fmt(c[i, j, 1, 0])} {_fmt(c[i, j, 1, 1])} 0")
            lines.append("0 0 0")
            lines.append("")

    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_restart(path: str | Path, state: SimState, accept_streak: int = 0,
                  energy_scale: float = 0.0):
    g = state.phi.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<qq", g.nx, g.ny))
        fh.write(struct.pack("<dddd", g.lx, g.ly, state.t, state.dt))
        fh.write(struct.pack("<qq", state.step_index, accept_streak))
        fh.write(struct.pack("<d", energy_scale))
        for arr in (state.phi.values, state.phi_prev.values, state.mu.values,
                    state.q.values, state.F.comps, state.v.u, state.v.w):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_restart(path: str | Path) -> tuple[SimState, int, float]:
    raw = Path(path).read_bytes()
    if raw[:5] != MAGIC:
        raise ValidationError(f"{path}: not a restart file (bad magic)")
    off = 5
    nx, ny = struct.unpack_from("<qq", raw, off)
    off += 16
    lx, ly, t, dt = struct.unpack_from("<dddd", raw, off)
    off += 32
    step_index, streak = struct.unpack_from("<qq", raw, off)
    off += 16
    (energy_scale,) = struct.unpack_from("<d", raw, off)
    off += 8
    g = GridSpec(nx, ny, lx, ly)

    def take(shape):
        nonlocal off
        n = int(np.prod(shape))
        a = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(shape)
        off += 8 * n
        return a.copy()

    phi = ScalarField(g, take((nx, ny)))
    phi_prev = ScalarField(g, take((nx, ny)))
    mu = ScalarField(g, take((nx, ny)))
    q = ScalarField(g, take((nx, ny)))
    F = TensorField(g, take((nx, ny, 2, 2)))
    u = take((nx + 1, ny))
    w = take((nx, ny + 1))
    if off != len(raw):
        raise ValidationError(f"{path}: trailing bytes in restart file")
    state = SimState(phi=phi, phi_prev=phi_prev, mu=mu, F=F,
                     v=StaggeredVectorField(g, u, w), q=q,
                     t=t, dt=dt, step_index=step_index)
    return state, streak, energy_scale
