"""Lifting of the time-discontinuous solution, error norms and EOC rates.

The discrete displacement is discontinuous across slab interfaces.  The
lifting subtracts, on every slab after the first, the interface jump times
the decaying linear blending weight theta_n(t) = (t_{n+1} - t) / dt, which
yields a time-continuous function without touching the first slab.  Error
norms are evaluated against the lifted displacement.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import TemporalBasis, gauss_lobatto_nodes, gauss_rule

__all__ = ["LiftedSolution", "ErrorReport", "lift", "extract_primal_field",
           "error_norms", "eoc"]

ERROR_QUADRATURE_POINTS = 6


@dataclass
class LiftedSolution:
    """Per-slab coefficients of the lifted displacement.

    coeffs has shape (n_slabs, degree_t + 1, n_x) in the nodal temporal
    basis of degree max(q, 1); jumps[n] holds the spatial coefficients of
    the interface jump at the start of slab n (row 0 is zero).
    """

    mesh: object
    xbasis: object
    tbasis: TemporalBasis
    dt: float
    coeffs: np.ndarray
    jumps: np.ndarray

    @property
    def n_slabs(self):
        return self.coeffs.shape[0]

    def spatial_coeffs_at(self, n, xi):
        """Spatial coefficient vector of the lifted function at reference
        time xi within slab n."""
        return self.tbasis.eval(np.array(float(xi))) @ self.coeffs[n]

    def spatial_dt_coeffs_at(self, n, xi):
        return self.tbasis.eval(np.array(float(xi)), deriv=1) @ self.coeffs[n] / self.dt


def extract_primal_field(system, x, field=0):
    """Field coefficients from a global vector, shape (N, q + 1, n_x)."""
    space = system.primal
    out = np.empty((system.n_slabs, space.n_modes, space.n_x))
    for n in range(system.n_slabs):
        ps = system.primal_slice(n)
        block = x[ps][field * space.n_field : (field + 1) * space.n_field]
        out[n] = block.reshape(space.n_modes, space.n_x)
    return out


def lift(space, u1):
    """Lift per-slab displacement coefficients to a time-continuous function.

    u1 has shape (n_slabs, q + 1, n_x).  The lifted function lives in the
    nodal temporal space of degree max(q, 1) per slab; the first slab is
    returned unchanged (merely re-expressed in the richer basis).
    """
    u1 = np.asarray(u1, dtype=float)
    n_slabs = u1.shape[0]
    lift_basis = TemporalBasis(max(space.degree_t, 1))
    embed = space.tbasis.eval(lift_basis.nodes)  # (modes_out, modes_in)
    trace_plus = space.tbasis.eval(np.array(0.0))
    trace_minus = space.tbasis.eval(np.array(1.0))
    theta = 1.0 - lift_basis.nodes

    coeffs = np.einsum("mi,niJ->nmJ", embed, u1)
    jumps = np.zeros((n_slabs, space.n_x))
    for n in range(1, n_slabs):
        jumps[n] = trace_plus @ u1[n] - trace_minus @ u1[n - 1]
        coeffs[n] -= np.outer(theta, jumps[n])
    return LiftedSolution(
        mesh=space.mesh,
        xbasis=space.xbasis,
        tbasis=lift_basis,
        dt=space.dt,
        coeffs=coeffs,
        jumps=jumps,
    )


@dataclass
class ErrorReport:
    err_LinfL2_u: float
    err_L2L2_ut: float
    err_LinfL2_u_restricted: Optional[float] = None
    err_L2L2_ut_restricted: Optional[float] = None


def _spatial_error_sq(sol, f, spatial_coeffs, interval):
    """Squared L2 distance between f and the coefficient function over the
    (possibly clipped) spatial interval."""
    mesh, xb = sol.mesh, sol.xbasis
    k, h = xb.degree, mesh.h
    rule = gauss_rule(ERROR_QUADRATURE_POINTS)
    lo, hi = interval
    total = 0.0
    for e in range(mesh.n_elems):
        x0, x1 = mesh.element_interval(e)
        a, b = max(x0, lo), min(x1, hi)
        if b - a <= 0.0:
            continue
        # sub-interval rule handles elements cut by the region boundary
        xq = a + (b - a) * rule.points
        ref = (xq - x0) / h
        uh = xb.eval(ref) @ spatial_coeffs[e * k : e * k + k + 1]
        total += np.sum(rule.weights * (b - a) * (f(xq) - uh) ** 2)
    return total


def error_norms(u_exact, dt_u_exact, sol, region=None):
    """Error norms of the lifted displacement against an exact solution.

    The max-in-time norm is approximated by sampling Gauss-Lobatto points
    per slab (exact for the polynomial part).  The time derivative error is
    integrated with Gauss quadrature in time.  region, if given, maps a
    time to the spatial subinterval over which restricted norms are taken.
    """
    dt = sol.dt
    full = (sol.mesh.a, sol.mesh.b)
    samples = gauss_lobatto_nodes(sol.tbasis.cardinality + 2)
    trule = gauss_rule(ERROR_QUADRATURE_POINTS)

    linf2 = l2l2 = 0.0
    linf2_r = l2l2_r = 0.0 if region is not None else None
    for n in range(sol.n_slabs):
        t0 = n * dt
        for xi in samples:
            tau = t0 + dt * xi
            c = sol.spatial_coeffs_at(n, xi)
            f = lambda x: u_exact(tau, x)
            linf2 = max(linf2, _spatial_error_sq(sol, f, c, full))
            if region is not None:
                linf2_r = max(linf2_r, _spatial_error_sq(sol, f, c, region(tau)))
        for wq, xi in zip(trule.weights, trule.points):
            tau = t0 + dt * xi
            dc = sol.spatial_dt_coeffs_at(n, xi)
            f = lambda x: dt_u_exact(tau, x)
            l2l2 += dt * wq * _spatial_error_sq(sol, f, dc, full)
            if region is not None:
                l2l2_r += dt * wq * _spatial_error_sq(sol, f, dc, region(tau))
    return ErrorReport(
        err_LinfL2_u=math.sqrt(linf2),
        err_L2L2_ut=math.sqrt(l2l2),
        err_LinfL2_u_restricted=None if region is None else math.sqrt(linf2_r),
        err_L2L2_ut_restricted=None if region is None else math.sqrt(l2l2_r),
    )


def eoc(errors):
    """Convergence rates under halving refinement: log2(e_prev / e_next)."""
    if len(errors) < 2:
        raise ValueError("need at least two levels for a convergence rate")
    rates = []
    for prev, cur in zip(errors, errors[1:]):
        if cur == 0.0:
            rates.append(math.inf)
        elif prev == 0.0:
            rates.append(-math.inf)
        else:
            rates.append(math.log2(prev / cur))
    return rates
