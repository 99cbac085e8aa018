"""Closed-form constitutive laws and their derivatives.

Profiles are the canonical assumption-compliant choices and are wired
through :class:`~chve.grid.ModelParams` so alternates can be swapped in:

* double well  psi(s) = (1/4)(s^2-1)^2 with the convex/concave split
  psi_plus = (s^4+1)/4, psi_minus = -s^2/2 used by the semi-implicit
  phase-field step;
* stiffness    f(s) = f_min + (1-f_min) * S((s-f_lo)/(f_hi-f_lo)) with S the
  clamped cubic smoothstep, so f is C^{1,1}, bounded in [f_min, 1] and
  f' vanishes outside the window;
* mobility     constant b0 by default, optionally the same smoothstep ramp
  between b0 and b1.

The elastic energies: the phase-coupled Neo-Hookean density
w = (c/2) f(phi) (F:F - d) drives the 2-D solver; the Mooney-Rivlin
density (with cofactor and determinant terms) and its first Piola stress
are evaluation/test utilities for d = 3.
"""

from __future__ import annotations

import numpy as np

from .grid import ModelParams, PreconditionError, cofactor, frobenius, determinant


# ---------------------------------------------------------------------------
# double well


def psi(s):
    s = np.asarray(s, dtype=float)
    return 0.25 * (s * s - 1.0) ** 2


def psi_prime(s):
    s = np.asarray(s, dtype=float)
    return s ** 3 - s


def psi_plus(s):
    s = np.asarray(s, dtype=float)
    return 0.25 * (s ** 4 + 1.0)


def psi_minus(s):
    s = np.asarray(s, dtype=float)
    return -0.5 * s * s


def psi_plus_prime(s):
    s = np.asarray(s, dtype=float)
    return s ** 3


def psi_plus_second(s):
    s = np.asarray(s, dtype=float)
    return 3.0 * s * s


def psi_minus_prime(s):
    s = np.asarray(s, dtype=float)
    return -s


# ---------------------------------------------------------------------------
# smoothstep-based stiffness and mobility


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _smoothstep_prime(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    return np.where(inside, 6.0 * x * (1.0 - x), 0.0)


def stiffness_f(s, params: ModelParams):
    """Stiffness profile, f_min <= f <= 1, clamped outside the window."""
    width = params.f_hi - params.f_lo
    x = (np.asarray(s, dtype=float) - params.f_lo) / width
    return params.f_min + (1.0 - params.f_min) * _smoothstep(x)


def stiffness_f_prime(s, params: ModelParams):
    width = params.f_hi - params.f_lo
    x = (np.asarray(s, dtype=float) - params.f_lo) / width
    return (1.0 - params.f_min) * _smoothstep_prime(x) / width


def stiffness_lipschitz_bound(params: ModelParams) -> float:
    """Max of |f'|: the smoothstep slope peaks at 3/2 mid-window."""
    return 1.5 * (1.0 - params.f_min) / (params.f_hi - params.f_lo)


def mobility_b(s, params: ModelParams):
    s = np.asarray(s, dtype=float)
    if params.mobility_profile == "constant":
        return np.full_like(s, params.b0)
    width = params.f_hi - params.f_lo
    x = (s - params.f_lo) / width
    return params.b0 + (params.b1 - params.b0) * _smoothstep(x)


# ---------------------------------------------------------------------------
# elastic energies and stresses


def neo_hookean_w(phi, F, params: ModelParams):
    """Phase-coupled Neo-Hookean density (c/2) f(phi) (F:F - d)."""
    F = np.asarray(F, dtype=float)
    d = F.shape[-1]
    return 0.5 * params.c_elastic * stiffness_f(phi, params) * (frobenius(F, F) - d)


def neo_hookean_piola(phi, F, params: ModelParams):
    """dw/dF for the Neo-Hookean density: c f(phi) F."""
    F = np.asarray(F, dtype=float)
    fval = np.asarray(stiffness_f(phi, params))
    return params.c_elastic * fval[..., None, None] * F


def eulerian_elastic_stress(phi, F, params: ModelParams):
    """Eulerian stress c f(phi) F F^T entering the momentum balance.

    Symmetric positive semidefinite by construction (a scaled Gram matrix).
    """
    F = np.asarray(F, dtype=float)
    fval = np.asarray(stiffness_f(phi, params))
    FFt = np.einsum("...ik,...jk->...ij", F, F)
    return params.c_elastic * fval[..., None, None] * FFt


def _h_compress(J):
    """Convex compression penalty h(J) = J^2/2 - ln J, stress-free at J=1."""
    return 0.5 * J * J - np.log(J)


def _h_compress_prime(J):
    return J - 1.0 / J


def mooney_rivlin_w(phi, F, params: ModelParams):
    """Mooney-Rivlin density with cofactor and determinant terms (d = 3).

    w = (c/2)  f(phi) (F:F - 3)
      + (c2/2) f(phi) (cofF:cofF - 3)
      + c3 h(det F),       h(J) = J^2/2 - ln J.

    The cofactor modulus reuses the stiffness profile f for its phase
    dependence.  Raises on det F <= 0 where h is singular.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[-1] != 3:
        raise PreconditionError("mooney_rivlin_w is defined for d = 3")
    J = determinant(F)
    if np.any(J <= 0.0):
        raise PreconditionError("mooney_rivlin_w needs det F > 0")
    fval = stiffness_f(phi, params)
    C = cofactor(F)
    return (0.5 * params.c_elastic * fval * (frobenius(F, F) - 3.0)
            + 0.5 * params.c2 * fval * (frobenius(C, C) - 3.0)
            + params.c3 * _h_compress(J))


def mooney_rivlin_piola(phi, F, params: ModelParams):
    """First Piola stress of the Mooney-Rivlin density, term by term:

    c f F + c2 f [ (cofF:cofF) F^{-T} - cofF (cofF)^T F^{-T} ]
          + c3 h'(det F) det F F^{-T}.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[-1] != 3:
        raise PreconditionError("mooney_rivlin_piola is defined for d = 3")
    J = determinant(F)
    if np.any(J <= 0.0):
        raise PreconditionError("mooney_rivlin_piola needs det F > 0")
    fval = np.asarray(stiffness_f(phi, params))
    C = cofactor(F)
    Finv_T = np.swapaxes(np.linalg.inv(F), -1, -2)
    CC = np.asarray(frobenius(C, C))
    term1 = params.c_elastic * fval[..., None, None] * F
    term2 = params.c2 * fval[..., None, None] * (
        CC[..., None, None] * Finv_T
        - np.einsum("...ik,...jk,...jl->...il", C, C, Finv_T)
    )
    term3 = (params.c3 * _h_compress_prime(J) * J)[..., None, None] * Finv_T
    return term1 + term2 + term3
