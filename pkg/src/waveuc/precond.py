"""Slab-marching preconditioners for the coupled space-time system.

All preconditioners are linear maps r -> x built from sparse LU
factorizations of per-slab blocks.  On a uniform mesh every interior slab
shares one factorization; the first slab differs because no interface jump
terms reach it.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .slab_forms import (
    SlabSpace,
    assemble_A,
    assemble_dfb_extras,
    assemble_dual_stabilizer,
)

__all__ = [
    "IdentityPreconditioner",
    "BlockJacobi",
    "MonolithicForward",
    "ForwardBackwardSplit",
    "build_preconditioner",
]


def _factorize(matrix, label):
    try:
        return splu(matrix.tocsc())
    except RuntimeError as exc:
        raise ValueError(f"singular slab system ({label}): {exc}") from exc


class IdentityPreconditioner:
    def apply(self, r):
        return r.copy()


class BlockJacobi:
    """Independent per-slab solves of the slab-diagonal block, with the
    interface jump terms dropped entirely."""

    def __init__(self, system):
        self.system = system
        D = sp.bmat(
            [[system.Sh + system.Momega, system.A_pd.T],
             [system.A_pd, -system.Sstar]],
            format="csc",
        )
        self.lu = _factorize(D, "slab-diagonal block")

    def apply(self, r):
        self.system._check(r)
        x = np.zeros_like(r)
        n_p = self.system.n_primal
        for n in range(self.system.n_slabs):
            ps, ds = self.system.primal_slice(n), self.system.dual_slice(n)
            sol = self.lu.solve(np.concatenate((r[ps], r[ds])))
            x[ps] = sol[:n_p]
            x[ds] = sol[n_p:]
        return x


def _spatial_embedding(mesh, fine, coarse):
    """Coefficients of coarse spatial functions expressed in the fine nodal
    basis (same mesh, lower degree)."""
    kf, kc = fine.degree, coarse.degree
    n_f = kf * mesh.n_elems + 1
    n_c = kc * mesh.n_elems + 1
    E = sp.lil_matrix((n_f, n_c))
    vals = coarse.eval(fine.nodes)
    for e in range(mesh.n_elems):
        rows = e * kf + np.arange(kf + 1)
        cols = e * kc + np.arange(kc + 1)
        # plain assignment: shared vertex rows agree from both elements
        E[np.ix_(rows, cols)] = vals
    return E.tocsr()


class MonolithicForward:
    """Forward slab sweep on the system with the interface jumps relaxed to
    their upstream-tested half.

    The relaxed system is block-lower-triangular over slabs, so one forward
    substitution with per-slab monolithic (primal + dual) solves inverts it.
    The sweep may use a reduced dual order internally (the "light" variant
    uses the minimal orders (1, 0)); the dual part of the output is then
    recovered exactly from the dual-test rows, which are slab-local, so the
    map stays invertible and all variants precondition the same system.
    """

    def __init__(self, system, dual_orders=None):
        self.system = system
        cfg = system.config
        system_orders = (cfg.kstar, cfg.qstar)
        orders = system_orders if dual_orders is None else tuple(dual_orders)
        if orders == system_orders:
            sweep_dual = system.dual
            A_sw = system.A_pd
            Sstar_sw = system.Sstar
            self.embed = None
        else:
            kc, qc = orders
            if kc > cfg.kstar or qc > cfg.qstar:
                raise ValueError(
                    f"sweep dual orders {orders} exceed the system's "
                    f"{system_orders}"
                )
            sweep_dual = SlabSpace(system.mesh, kc, qc, cfg.dt)
            A_sw = assemble_A(system.primal, sweep_dual)
            Sstar_sw = assemble_dual_stabilizer(sweep_dual)
            Ex = _spatial_embedding(system.mesh, system.dual.xbasis,
                                    sweep_dual.xbasis)
            Et = sp.csr_matrix(sweep_dual.tbasis.eval(system.dual.tbasis.nodes))
            Ef = sp.kron(Et, Ex, format="csr")
            self.embed = sp.block_diag((Ef, Ef), format="csr")
            self.sstar_lu = _factorize(system.Sstar, "dual stabilizer")
        self.n_sweep_dual = sweep_dual.n_pair

        diag_pp = system.Sh + system.Momega
        D0 = sp.bmat([[diag_pp, A_sw.T], [A_sw, -Sstar_sw]], format="csc")
        Dint = sp.bmat(
            [[diag_pp + system.jump["plus"], A_sw.T], [A_sw, -Sstar_sw]],
            format="csc",
        )
        self.lu_first = _factorize(D0, "first slab")
        self.lu_interior = _factorize(Dint, "interior slab")
        self.cross = system.jump["cross"]

    def apply(self, r):
        sys = self.system
        sys._check(r)
        x = np.zeros_like(r)
        n_p = sys.n_primal
        u_prev = None
        for n in range(sys.n_slabs):
            ps, ds = sys.primal_slice(n), sys.dual_slice(n)
            r_w, r_y = r[ps], r[ds]
            r_sweep = r_y if self.embed is None else self.embed.T @ r_y
            rhs_p = r_w if n == 0 else r_w + self.cross @ u_prev
            lu = self.lu_first if n == 0 else self.lu_interior
            sol = lu.solve(np.concatenate((rhs_p, r_sweep)))
            u = sol[:n_p]
            if self.embed is None:
                x[ds] = sol[n_p:]
            else:
                x[ds] = self.sstar_lu.solve(sys.A_pd @ u - r_y)
            x[ps] = u
            u_prev = u
        return x


class ForwardBackwardSplit:
    """Two sweeps over the slab-local primal operator enriched with the
    observer and lateral-boundary terms plus upwind jump couplings.

    Step 1 marches forward in time solving for the primal pair against the
    dual-test rows of the residual.  Step 2 forms the remaining primal-test
    residual and marches backward with the transposed blocks to recover the
    dual pair.
    """

    def __init__(self, system, lam):
        self.system = system
        cfg = system.config
        if (cfg.kstar, cfg.qstar) != (cfg.k, cfg.q):
            raise ValueError(
                "the forward-backward split requires equal primal and dual "
                "orders"
            )
        extras = assemble_dfb_extras(system.primal, system.dual, system.data, lam)
        G0 = system.A_pd + extras["observer"] + extras["nitsche"]
        Gint = G0 + extras["coupling_diag"]
        self.coupling_sub = extras["coupling_sub"]
        self.lu_first = _factorize(G0, "first slab, forward sweep")
        self.lu_interior = _factorize(Gint, "interior slab, forward sweep")

    def apply(self, r):
        sys = self.system
        sys._check(r)
        N = sys.n_slabs
        x = np.zeros_like(r)
        u_prev = None
        for n in range(N):
            rhs = r[sys.dual_slice(n)]
            if n >= 1:
                rhs = rhs + self.coupling_sub @ u_prev
            lu = self.lu_first if n == 0 else self.lu_interior
            u_prev = lu.solve(rhs)
            x[sys.primal_slice(n)] = u_prev
        stab = sys.apply_primal_stabilized(x)
        z_next = None
        for n in reversed(range(N)):
            rhs = r[sys.primal_slice(n)] - stab[sys.primal_slice(n)]
            if n < N - 1:
                rhs = rhs + self.coupling_sub.T @ z_next
            lu = self.lu_first if n == 0 else self.lu_interior
            z_next = lu.solve(rhs, trans="T")
            x[sys.dual_slice(n)] = z_next
        return x


def build_preconditioner(system, kind, lam=None):
    if kind == "none":
        return IdentityPreconditioner()
    if kind == "block":
        return BlockJacobi(system)
    if kind == "mf":
        return MonolithicForward(system)
    if kind == "ml":
        return MonolithicForward(system, dual_orders=(1, 0))
    if kind == "dfb":
        if lam is None:
            lam = system.config.resolved_lambda()
        return ForwardBackwardSplit(system, lam)
    raise ValueError(f"unknown preconditioner kind: {kind!r}")
