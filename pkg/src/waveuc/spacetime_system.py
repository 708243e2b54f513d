"""Global space-time system: dof layout, matrix-free operator, right-hand
side, dense debug oracle and the associated norms.

The global coefficient vector is slab-major.  Each slab stores the primal
field pair (u1, u2) first and the dual pair (z1, z2) second; that ordering
makes the forward-relaxed interface coupling block-lower-triangular, which
the sweep preconditioners rely on.
"""

from dataclasses import dataclass

import numpy as np

from .basis import gauss_rule
from .mesh import build_interval_mesh, mark_data_domain
from .slab_forms import (
    SlabSpace,
    assemble_A,
    assemble_data_mass,
    assemble_dual_stabilizer,
    assemble_primal_stabilizers,
    interface_jump_blocks,
)

__all__ = ["SpaceTimeSystem", "NormReport"]

DENSE_DOF_LIMIT = 5000
DATA_QUADRATURE_POINTS = 6


@dataclass
class NormReport:
    """Components of the stabilized energy norm of one coefficient vector."""

    sh: float
    omega: float
    sstar: float
    jump: float
    total: float


class SpaceTimeSystem:
    """Assembled slab blocks plus the matrix-free global operator."""

    def __init__(self, config):
        config.validate()
        self.config = config
        self.mesh = build_interval_mesh(config.a, config.b, config.n_elems)
        self.data = mark_data_domain(self.mesh, config.omega)
        self.primal = SlabSpace(self.mesh, config.k, config.q, config.dt)
        self.dual = SlabSpace(self.mesh, config.kstar, config.qstar, config.dt)
        self.n_slabs = config.n_slabs

        self.A_pd = assemble_A(self.primal, self.dual)
        self.stab_parts = assemble_primal_stabilizers(self.primal)
        self.Sh = self.stab_parts["Sh"]
        self.Sstar = assemble_dual_stabilizer(self.dual)
        self.Momega = assemble_data_mass(self.primal, self.primal, self.data)
        self.jump = interface_jump_blocks(self.primal)

        self.n_primal = self.primal.n_pair
        self.n_dual = self.dual.n_pair
        self.slab_size = self.n_primal + self.n_dual
        self.ndof = self.n_slabs * self.slab_size

    # -- layout ----------------------------------------------------------

    def primal_slice(self, n):
        off = n * self.slab_size
        return slice(off, off + self.n_primal)

    def dual_slice(self, n):
        off = n * self.slab_size + self.n_primal
        return slice(off, off + self.n_dual)

    def zero_vector(self):
        return np.zeros(self.ndof)

    def _check(self, x):
        if x.shape != (self.ndof,):
            raise ValueError(f"vector of length {x.shape} does not match layout "
                             f"({self.ndof} dofs)")

    # -- operator --------------------------------------------------------

    def apply(self, x):
        """Action of the full coupled operator.

        Primal-test rows carry the measurement mass, the primal stabilizers,
        the bidirectional interface jump terms and the adjoint of the wave
        operator acting on the dual pair; dual-test rows carry the wave
        operator on the primal pair minus the dual stabilizer.
        """
        self._check(x)
        y = np.zeros_like(x)
        for n in range(self.n_slabs):
            ps, ds = self.primal_slice(n), self.dual_slice(n)
            xp, xd = x[ps], x[ds]
            y[ps] = self.Momega @ xp + self.Sh @ xp + self.A_pd.T @ xd
            y[ds] = self.A_pd @ xp - self.Sstar @ xd
        self._add_interface_jumps(x, y)
        return y

    def _add_interface_jumps(self, x, y):
        P, Mm, C = self.jump["plus"], self.jump["minus"], self.jump["cross"]
        for n in range(1, self.n_slabs):
            ps_prev, ps = self.primal_slice(n - 1), self.primal_slice(n)
            up, u = x[ps_prev], x[ps]
            y[ps] += P @ u - C @ up
            y[ps_prev] += Mm @ up - C.T @ u
        return y

    def apply_primal_stabilized(self, x):
        """Primal-test rows of (measurement mass + stabilizers + interface
        jumps) applied to the primal part of x; dual rows zero."""
        self._check(x)
        y = np.zeros_like(x)
        for n in range(self.n_slabs):
            ps = self.primal_slice(n)
            y[ps] = self.Momega @ x[ps] + self.Sh @ x[ps]
        self._add_interface_jumps(x, y)
        return y

    # -- right-hand side -------------------------------------------------

    def _spatial_data_functional(self, space, f):
        """Vector of (f, phi_j) over the measurement region, by quadrature."""
        rule = gauss_rule(DATA_QUADRATURE_POINTS)
        xb = space.xbasis
        vals = xb.eval(rule.points)
        out = np.zeros(space.n_x)
        k, h = xb.degree, self.mesh.h
        for e in range(self.mesh.n_elems):
            if not self.data.element_mask[e]:
                continue
            x0 = self.mesh.vertices[e]
            fx = f(x0 + h * rule.points)
            out[e * k : e * k + k + 1] += (rule.weights * h * fx) @ vals
        return out

    def _data_functional(self, space, slab_start, u_omega):
        """One slab's (u_omega, first test field) block, space-time quadrature."""
        rule = gauss_rule(DATA_QUADRATURE_POINTS)
        psi = space.tbasis.eval(rule.points)
        dt = self.config.dt
        b = self.zero_vector()
        for n in range(self.n_slabs):
            t0 = n * dt
            block = np.zeros((space.n_modes, space.n_x))
            for wq, xq, prow in zip(rule.weights, rule.points, psi):
                tau = t0 + dt * xq
                sv = self._spatial_data_functional(space, lambda x: u_omega(tau, x))
                block += dt * wq * np.outer(prow, sv)
            off = slab_start(n)
            b[off : off + space.n_field] = block.ravel()
        return b

    def assemble_rhs(self, u_omega):
        """Measurement data tested against w1, integrated over the slabs."""
        return self._data_functional(
            self.primal, lambda n: self.primal_slice(n).start, u_omega
        )

    def assemble_dual_rhs(self, u_omega):
        """Measurement data tested against y1 (dual pair), used by the
        forward-backward split solver's first sweep."""
        return self._data_functional(
            self.dual, lambda n: self.dual_slice(n).start, u_omega
        )

    # -- dense oracle and norms ------------------------------------------

    def dense_matrix(self):
        """Explicit global matrix; debug oracle for small instances only."""
        if self.ndof > DENSE_DOF_LIMIT:
            raise ValueError(
                f"dense assembly refused for {self.ndof} dofs "
                f"(limit {DENSE_DOF_LIMIT})"
            )
        D = np.zeros((self.ndof, self.ndof))
        diag_pp = (self.Momega + self.Sh).toarray()
        A = self.A_pd.toarray()
        Sstar = self.Sstar.toarray()
        for n in range(self.n_slabs):
            ps, ds = self.primal_slice(n), self.dual_slice(n)
            D[ps, ps] += diag_pp
            D[ps, ds] += A.T
            D[ds, ps] += A
            D[ds, ds] -= Sstar
        P, Mm, C = (self.jump[k].toarray() for k in ("plus", "minus", "cross"))
        for n in range(1, self.n_slabs):
            ps_prev, ps = self.primal_slice(n - 1), self.primal_slice(n)
            D[ps, ps] += P
            D[ps_prev, ps_prev] += Mm
            D[ps, ps_prev] -= C
            D[ps_prev, ps] -= C.T
        return D

    def triple_norm(self, x):
        """Stabilized energy norm split into its four contributions."""
        self._check(x)
        sh2 = om2 = ds2 = 0.0
        for n in range(self.n_slabs):
            ps, ds = self.primal_slice(n), self.dual_slice(n)
            xp, xd = x[ps], x[ds]
            sh2 += xp @ (self.Sh @ xp)
            om2 += xp @ (self.Momega @ xp)
            ds2 += xd @ (self.Sstar @ xd)
        jm2 = 0.0
        P, Mm, C = self.jump["plus"], self.jump["minus"], self.jump["cross"]
        for n in range(1, self.n_slabs):
            up = x[self.primal_slice(n - 1)]
            u = x[self.primal_slice(n)]
            jm2 += u @ (P @ u) + up @ (Mm @ up) - 2.0 * (u @ (C @ up))
        # quadratic forms can dip below zero by roundoff
        sh2, om2, ds2, jm2 = (max(v, 0.0) for v in (sh2, om2, ds2, jm2))
        total = np.sqrt(sh2 + om2 + ds2 + jm2)
        return NormReport(
            sh=np.sqrt(sh2),
            omega=np.sqrt(om2),
            sstar=np.sqrt(ds2),
            jump=np.sqrt(jm2),
            total=total,
        )
