import numpy as np
import pytest

from waveuc.basis import SpatialBasis, TemporalBasis, gauss_rule
from waveuc.mesh import build_interval_mesh, mark_data_domain
from waveuc.slab_forms import (
    SlabSpace,
    assemble_A,
    assemble_data_mass,
    assemble_dfb_extras,
    assemble_dual_interface_mass,
    assemble_dual_stabilizer,
    assemble_primal_stabilizers,
    boundary_flux_matrix,
    boundary_penalty_matrix,
    gradient_jump_matrix,
    interface_jump_blocks,
    spatial_matrix,
    temporal_matrix,
    time_trace_matrices,
)

from conftest import pair_coeffs


def eval_elem(space, coeffs, field, tau, e, ref, dx=0, dtime=0):
    """One-sided evaluation inside element e at reference coords (tau, ref)."""
    psi = space.tbasis.eval(np.array(tau), deriv=dtime) / space.dt**dtime
    phi = space.xbasis.eval(np.array(ref), deriv=dx) / space.mesh.h**dx
    k = space.degree_x
    local = coeffs[field][:, e * k : e * k + k + 1]
    return float(psi @ local @ phi)


def quadrature_form_A(primal, dual, U, Y):
    """Direct space-time quadrature of the wave form, oracle for assemble_A."""
    mesh, dt, h = primal.mesh, primal.dt, primal.mesh.h
    tr = gauss_rule(max(primal.degree_t, dual.degree_t) + 3)
    xr = gauss_rule(max(primal.degree_x, dual.degree_x) + 3)
    total = 0.0
    for wt, tq in zip(tr.weights, tr.points):
        for e in range(mesh.n_elems):
            for wx, xq in zip(xr.weights, xr.points):
                w = dt * wt * h * wx
                du2 = eval_elem(primal, U, 1, tq, e, xq, dtime=1)
                y1 = eval_elem(dual, Y, 0, tq, e, xq)
                dxu1 = eval_elem(primal, U, 0, tq, e, xq, dx=1)
                dxy1 = eval_elem(dual, Y, 0, tq, e, xq, dx=1)
                du1 = eval_elem(primal, U, 0, tq, e, xq, dtime=1)
                u2 = eval_elem(primal, U, 1, tq, e, xq)
                y2 = eval_elem(dual, Y, 1, tq, e, xq)
                total += w * (du2 * y1 + dxu1 * dxy1 + (du1 - u2) * y2)
        # lateral boundary: -(normal derivative of u1) * y1
        for (e, ref, nrm) in ((0, 0.0, -1.0), (mesh.n_elems - 1, 1.0, 1.0)):
            dxu1 = eval_elem(primal, U, 0, tq, e, ref, dx=1)
            y1 = eval_elem(dual, Y, 0, tq, e, ref)
            total -= dt * wt * nrm * dxu1 * y1
    return total


def quadrature_stabilizer_energy(space, V):
    """Direct quadrature of the four primal stabilizer terms for one vector."""
    mesh, dt, h = space.mesh, space.dt, space.mesh.h
    tr = gauss_rule(space.degree_t + 3)
    xr = gauss_rule(space.degree_x + 3)
    J = G = I0 = R = 0.0
    for wt, tq in zip(tr.weights, tr.points):
        w_t = dt * wt
        for v in mesh.interior_facets:
            dl = eval_elem(space, V, 0, tq, v - 1, 1.0, dx=1)
            dr = eval_elem(space, V, 0, tq, v, 0.0, dx=1)
            J += w_t * h * (dl - dr) ** 2
        for e in range(mesh.n_elems):
            for wx, xq in zip(xr.weights, xr.points):
                w = w_t * h * wx
                resid = eval_elem(space, V, 1, tq, e, xq, dtime=1) - eval_elem(
                    space, V, 0, tq, e, xq, dx=2
                )
                G += w * h**2 * resid**2
                compat = eval_elem(space, V, 1, tq, e, xq) - eval_elem(
                    space, V, 0, tq, e, xq, dtime=1
                )
                I0 += w * compat**2
        for (e, ref) in ((0, 0.0), (mesh.n_elems - 1, 1.0)):
            R += w_t / h * eval_elem(space, V, 0, tq, e, ref) ** 2
    return {"J": J, "G": G, "I0": I0, "R": R}


# -- scalar building blocks -------------------------------------------------


def test_temporal_matrices_q1_analytic():
    tb = TemporalBasis(1)
    dt = 0.3
    Mt = temporal_matrix(tb, tb, 0, 0, dt)
    assert Mt == pytest.approx(dt * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]]))
    Ct = temporal_matrix(tb, tb, 0, 1, dt)
    assert Ct == pytest.approx(np.array([[-0.5, 0.5], [-0.5, 0.5]]))
    At = temporal_matrix(tb, tb, 1, 1, dt)
    assert At == pytest.approx(np.array([[1, -1], [-1, 1]]) / dt)


def test_spatial_mass_p1_analytic():
    mesh = build_interval_mesh(0, 1, 2)
    b = SpatialBasis(1)
    M = spatial_matrix(mesh, b, b).toarray()
    h = 0.5
    expected = h / 6 * np.array([[2, 1, 0], [1, 4, 1], [0, 1, 2]])
    assert M == pytest.approx(expected)


def test_spatial_stiffness_p1_analytic():
    mesh = build_interval_mesh(0, 1, 2)
    b = SpatialBasis(1)
    K = spatial_matrix(mesh, b, b, 1, 1).toarray()
    expected = 2.0 * np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    assert K == pytest.approx(expected)


def test_masked_spatial_mass():
    mesh = build_interval_mesh(0, 1, 4)
    data = mark_data_domain(mesh, [[0, 0.25]])
    b = SpatialBasis(1)
    M = spatial_matrix(mesh, b, b, mask=data.element_mask).toarray()
    assert M[:2, :2] == pytest.approx(0.25 / 6 * np.array([[2, 1], [1, 2]]))
    assert np.all(M[2:] == 0) and np.all(M[:, 2:] == 0)


def test_boundary_matrices():
    mesh = build_interval_mesh(0, 1, 2)
    b = SpatialBasis(1)
    P = boundary_penalty_matrix(mesh, b, b).toarray()
    expected = np.zeros((3, 3))
    expected[0, 0] = expected[2, 2] = 1.0
    assert P == pytest.approx(expected)
    F = boundary_flux_matrix(mesh, b, b).toarray()
    # at x=0 the outward normal is -1 and the hat slope is (-1/h, 1/h)
    assert F[0] == pytest.approx([1 / mesh.h, -1 / mesh.h, 0])
    assert F[2] == pytest.approx([0, -1 / mesh.h, 1 / mesh.h])


def test_gradient_jump_p1_analytic():
    mesh = build_interval_mesh(0, 1, 2)
    b = SpatialBasis(1)
    J = gradient_jump_matrix(mesh, b).toarray()
    # single interior vertex; jump vector is (1, -2, 1)/h, weight h
    g = np.array([1.0, -2.0, 1.0]) / mesh.h
    assert J == pytest.approx(mesh.h * np.outer(g, g))


def test_gradient_jump_vanishes_for_affine():
    mesh = build_interval_mesh(0, 1, 4)
    for k in (1, 2):
        b = SpatialBasis(k)
        nodes = np.linspace(0, 1, k * mesh.n_elems + 1)
        c = 2.0 * nodes - 0.7
        J = gradient_jump_matrix(mesh, b)
        assert c @ (J @ c) == pytest.approx(0.0, abs=1e-13)


# -- wave operator ----------------------------------------------------------


def test_A_closure_on_affine_displacement():
    # u1 = x, u2 = 0: stiffness and boundary flux cancel exactly
    mesh = build_interval_mesh(0, 1, 1)
    space = SlabSpace(mesh, 1, 1, dt=0.5)
    A = assemble_A(space, space)
    U = np.zeros((2, space.n_modes, space.n_x))
    U[0] = np.array([0.0, 1.0])  # nodal values of x, constant in time
    assert np.linalg.norm(A @ U.ravel()) == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("orders", [(1, 1, 1, 1), (2, 1, 1, 2), (2, 2, 2, 2)])
def test_A_matches_direct_quadrature(orders, rng):
    k, q, kstar, qstar = orders
    mesh = build_interval_mesh(0, 1, 3)
    primal = SlabSpace(mesh, k, q, dt=0.25)
    dual = SlabSpace(mesh, kstar, qstar, dt=0.25)
    A = assemble_A(primal, dual)
    for _ in range(3):
        U = pair_coeffs(primal, rng)
        Y = pair_coeffs(dual, rng)
        assembled = Y.ravel() @ (A @ U.ravel())
        direct = quadrature_form_A(primal, dual, U, Y)
        assert assembled == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_A_vanishes_on_strong_solution():
    # the wave form tested against every dual basis function is zero for a
    # solution of the wave equation; quadrature is the only error source
    mesh = build_interval_mesh(0, 1, 8)
    dual = SlabSpace(mesh, 3, 2, dt=0.25)
    dx_u1 = lambda t, x: np.pi * np.cos(np.pi * t) * np.cos(np.pi * x)
    dt_u2 = lambda t, x: -np.pi**2 * np.cos(np.pi * t) * np.sin(np.pi * x)

    tr = gauss_rule(10)
    xr = gauss_rule(10)
    k = dual.degree_x
    phi = dual.xbasis.eval(xr.points)
    dphi = dual.xbasis.eval(xr.points, deriv=1) / mesh.h
    vec = np.zeros((dual.n_modes, dual.n_x))
    for wt, tq in zip(tr.weights, tr.points):
        t = dual.dt * tq
        psi = dual.tbasis.eval(np.array(tq))
        for e in range(mesh.n_elems):
            x = mesh.vertices[e] + mesh.h * xr.points
            local = (xr.weights * dt_u2(t, x)) @ phi
            local += (xr.weights * dx_u1(t, x)) @ dphi
            vec[:, e * k : e * k + k + 1] += (
                dual.dt * wt * mesh.h * np.outer(psi, local)
            )
        for (dof, xb, nrm) in ((0, 0.0, -1.0), (dual.n_x - 1, 1.0, 1.0)):
            vec[:, dof] -= dual.dt * wt * nrm * dx_u1(t, xb) * psi
    # the rows tested by the second dual field pair with u2 - dt u1 = 0
    assert np.abs(vec).max() <= 1e-8


# -- stabilizers ------------------------------------------------------------


@pytest.mark.parametrize("k,q", [(1, 1), (2, 1), (2, 2)])
def test_primal_stabilizer_matches_direct_quadrature(k, q, rng):
    mesh = build_interval_mesh(0, 1, 3)
    space = SlabSpace(mesh, k, q, dt=0.25)
    parts = assemble_primal_stabilizers(space)
    V = pair_coeffs(space, rng)
    v = V.ravel()
    direct = quadrature_stabilizer_energy(space, V)
    for name in ("J", "G", "I0", "R"):
        assert v @ (parts[name] @ v) == pytest.approx(
            direct[name], rel=1e-10, abs=1e-12
        )
    total = sum(direct.values())
    assert v @ (parts["Sh"] @ v) == pytest.approx(total, rel=1e-10)
    assert total >= 0


def test_stabilizers_vanish_on_compatible_affine_data():
    # u1 affine in space and time, u2 = du1/dt: J, G and I0 all vanish
    mesh = build_interval_mesh(0, 1, 4)
    space = SlabSpace(mesh, 1, 1, dt=0.5)
    nodes = np.linspace(0, 1, space.n_x)
    V = np.zeros((2, 2, space.n_x))
    V[0, 0] = 1.0 + nodes          # at slab start
    V[0, 1] = 1.0 + nodes + 0.5 * 3.0  # slope 3 in time
    V[1, :] = 3.0
    v = V.ravel()
    parts = assemble_primal_stabilizers(space)
    for name in ("J", "G", "I0"):
        assert v @ (parts[name] @ v) == pytest.approx(0.0, abs=1e-12)
    assert v @ (parts["R"] @ v) > 0


def test_stabilizer_symmetry():
    mesh = build_interval_mesh(0, 1, 3)
    space = SlabSpace(mesh, 2, 1, dt=0.25)
    parts = assemble_primal_stabilizers(space)
    for name, mat in parts.items():
        assert abs(mat - mat.T).max() < 1e-12, name
    Sd = assemble_dual_stabilizer(space)
    assert abs(Sd - Sd.T).max() < 1e-12


def test_boundary_penalty_scaling_in_h():
    space_a = SlabSpace(build_interval_mesh(0, 1, 2), 1, 1, dt=0.5)
    space_b = SlabSpace(build_interval_mesh(0, 1, 4), 1, 1, dt=0.5)
    Ra = assemble_primal_stabilizers(space_a)["R"]
    Rb = assemble_primal_stabilizers(space_b)["R"]
    # corner entry is Mt[0,0] / h, so halving h doubles it
    assert Rb[0, 0] == pytest.approx(2 * Ra[0, 0])


def test_dual_stabilizer_constant_value():
    mesh = build_interval_mesh(0, 1, 4)
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    Sd = assemble_dual_stabilizer(space)
    Z = np.zeros((2, 2, space.n_x))
    Z[0] = 1.0  # z1 constant 1, z2 = 0
    z = Z.ravel()
    expected = space.dt * (1.0 + 2.0 / mesh.h)
    assert z @ (Sd @ z) == pytest.approx(expected, rel=1e-12)


def test_dual_stabilizer_positive_definite():
    mesh = build_interval_mesh(0, 1, 3)
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    Sd = assemble_dual_stabilizer(space).toarray()
    assert np.linalg.eigvalsh(Sd).min() > 0


def test_data_mass_supported_on_marked_elements(rng):
    mesh = build_interval_mesh(0, 1, 4)
    data = mark_data_domain(mesh, [[0, 0.25], [0.75, 1]])
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    Mw = assemble_data_mass(space, space, data).toarray()
    # velocity rows and columns are empty
    n_f = space.n_field
    assert np.all(Mw[n_f:] == 0) and np.all(Mw[:, n_f:] == 0)
    # spatial dofs of the unmarked middle elements do not couple
    middle = [2]  # interior node x = 0.5 of the P1 space
    for m in middle:
        for mode in range(space.n_modes):
            assert np.all(Mw[mode * space.n_x + m] == 0)


# -- time traces and interface coupling -------------------------------------


def test_traces_q0_identity():
    mesh = build_interval_mesh(0, 1, 2)
    space = SlabSpace(mesh, 1, 0, dt=0.25)
    tr = time_trace_matrices(space)
    V = np.arange(space.n_pair, dtype=float)
    for key in ("plus", "minus"):
        assert np.allclose(tr[key][0] @ V, V[: space.n_x])
        assert np.allclose(tr[key][1] @ V, V[space.n_field :])


def test_traces_q1_select_endpoint_modes(rng):
    mesh = build_interval_mesh(0, 1, 2)
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    V = pair_coeffs(space, rng)
    tr = time_trace_matrices(space)
    assert np.allclose(tr["plus"][0] @ V.ravel(), V[0, 0])
    assert np.allclose(tr["minus"][0] @ V.ravel(), V[0, 1])
    assert np.allclose(tr["plus"][1] @ V.ravel(), V[1, 0])
    assert np.allclose(tr["minus"][1] @ V.ravel(), V[1, 1])


def test_interface_jump_form_vanishes_for_continuous(rng):
    mesh = build_interval_mesh(0, 1, 2)
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    blocks = interface_jump_blocks(space)
    prev = pair_coeffs(space, rng)
    cur = pair_coeffs(space, rng)
    cur[:, 0] = prev[:, 1]  # continuous traces at the interface
    u, up = cur.ravel(), prev.ravel()
    energy = (
        u @ (blocks["plus"] @ u)
        + up @ (blocks["minus"] @ up)
        - 2 * u @ (blocks["cross"] @ up)
    )
    assert energy == pytest.approx(0.0, abs=1e-12)


def test_interface_jump_energy_analytic():
    # discontinuity only in u1, constant in space: energy = |jump|^2 / dt
    mesh = build_interval_mesh(0, 1, 2)
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    blocks = interface_jump_blocks(space)
    prev = np.zeros((2, 2, space.n_x))
    cur = np.zeros((2, 2, space.n_x))
    cur[0, 0] = 1.0
    u, up = cur.ravel(), prev.ravel()
    energy = (
        u @ (blocks["plus"] @ u)
        + up @ (blocks["minus"] @ up)
        - 2 * u @ (blocks["cross"] @ up)
    )
    # constant jump: no gradient part, spatial mass of 1 over [0,1] is 1
    assert energy == pytest.approx(1.0 / space.dt, rel=1e-12)


def test_interface_jump_blocks_symmetric_psd():
    mesh = build_interval_mesh(0, 1, 2)
    space = SlabSpace(mesh, 2, 1, dt=0.25)
    blocks = interface_jump_blocks(space)
    for key in ("plus", "minus"):
        M = blocks[key]
        assert abs(M - M.T).max() < 1e-12
        assert np.linalg.eigvalsh(M.toarray()).min() > -1e-12


# -- forward-backward extras ------------------------------------------------


def test_dfb_extras_reject_nonpositive_penalty():
    mesh = build_interval_mesh(0, 1, 4)
    data = mark_data_domain(mesh, [[0, 0.25]])
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    with pytest.raises(ValueError):
        assemble_dfb_extras(space, space, data, lam=0.0)


def test_dfb_coupling_cancels_for_continuous(rng):
    mesh = build_interval_mesh(0, 1, 4)
    data = mark_data_domain(mesh, [[0, 0.25]])
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    extras = assemble_dfb_extras(space, space, data, lam=10.0)
    prev = pair_coeffs(space, rng)
    cur = pair_coeffs(space, rng)
    cur[:, 0] = prev[:, 1]
    out = extras["coupling_diag"] @ cur.ravel() - extras["coupling_sub"] @ prev.ravel()
    assert np.linalg.norm(out) == pytest.approx(0.0, abs=1e-12)


def test_dual_interface_mass_values(rng):
    mesh = build_interval_mesh(0, 1, 4)
    space = SlabSpace(mesh, 1, 1, dt=0.25)
    E = assemble_dual_interface_mass(space)
    # zero incoming trace: no contribution
    Z = pair_coeffs(space, rng)
    Z[:, 0] = 0.0
    assert np.linalg.norm(E @ Z.ravel()) == pytest.approx(0.0, abs=1e-13)
    # constant-in-time unit z1: dt times the spatial mass of 1
    Z = np.zeros((2, 2, space.n_x))
    Z[0] = 1.0
    assert Z.ravel() @ (E @ Z.ravel()) == pytest.approx(space.dt, rel=1e-12)


# -- quadrature robustness --------------------------------------------------


def test_quadrature_order_independence():
    mesh = build_interval_mesh(0, 1, 3)
    primal = SlabSpace(mesh, 2, 2, dt=0.25)
    dual = SlabSpace(mesh, 1, 1, dt=0.25)
    base_nq = max(primal.degree_x, primal.degree_t) + 2
    A1 = assemble_A(primal, dual, nq=base_nq)
    A2 = assemble_A(primal, dual, nq=base_nq + 2)
    assert abs(A1 - A2).max() < 1e-12
    S1 = assemble_primal_stabilizers(primal, nq=base_nq)["Sh"]
    S2 = assemble_primal_stabilizers(primal, nq=base_nq + 2)["Sh"]
    assert abs(S1 - S2).max() < 1e-12
