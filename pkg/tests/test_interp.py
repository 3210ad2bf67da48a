import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdivstokes.assembly import build_dofmap
from hdivstokes.fe_spaces import evaluate_velocity, rt0_basis
from hdivstokes.harness import example51
from hdivstokes.interp import (edge_fluxes, fortin, interp_p1, interp_rt0, nodal_values,
                               project_p0, rt0_divergence)
from hdivstokes.mesh import build_topology, generate_structured
from hdivstokes.quadrature import physical_points, quadrature

from conftest import UNIT_RIGHT


def random_poly_field(seed, degree=3):
    """Random vector polynomial of total degree <= degree and its divergence."""
    rng = np.random.default_rng(seed)
    terms = [(a, b) for a in range(degree + 1) for b in range(degree + 1 - a)]
    cu, cv = rng.normal(size=(2, len(terms)))

    def v(x, y):
        return (sum(c * x**a * y**b for c, (a, b) in zip(cu, terms)),
                sum(c * x**a * y**b for c, (a, b) in zip(cv, terms)))

    def div(x, y):
        return (sum(c * a * x**max(a - 1, 0) * y**b for c, (a, b) in zip(cu, terms))
                + sum(c * b * x**a * y**max(b - 1, 0) for c, (a, b) in zip(cv, terms)))

    return v, div


def discrete_divergence(mesh, dofmap, U_L, U_R):
    _, grads = evaluate_velocity(mesh.coords(), mesh.tri_signs, mesh.normals[mesh.tri_edges],
                                 dofmap.local_velocity(U_L), dofmap.local_edges(U_R),
                                 quadrature(2).points)
    return np.trace(grads, axis1=-2, axis2=-1)


def test_project_constant(structured):
    m, _ = structured(4)
    np.testing.assert_allclose(project_p0(m, lambda x, y: 1.0 + 0 * x), 1.0, rtol=1e-15)


def test_project_x_single_cell(structured):
    m, _ = structured(1)
    np.testing.assert_allclose(project_p0(m, lambda x, y: x), [2 / 3, 1 / 3], rtol=1e-14)


def test_projection_orthogonal(structured):
    m, _ = structured(5)
    q = lambda x, y: np.exp(x) * np.sin(4 * y)
    ph = project_p0(m, q)
    rule = quadrature()
    x = physical_points(m.coords(), rule)
    resid = (q(x[..., 0], x[..., 1]) - ph[:, None]) @ rule.weights
    assert np.abs(resid).max() < 1e-14


def test_rt0_duality_single_triangle():
    m = build_topology(UNIT_RIGHT, [(0, 1, 2)])
    d = build_dofmap(m)
    for k in range(3):
        phi = rt0_basis(UNIT_RIGHT, k, m.tri_signs[0, k])

        def v(x, y):
            val = phi(np.stack([x, y], axis=-1))
            return val[..., 0], val[..., 1]

        coeffs = interp_rt0(m, d, v, all_edges=True)
        expected = np.zeros(3)
        expected[m.tri_edges[0, k]] = 1.0
        np.testing.assert_allclose(coeffs, expected, atol=1e-14)


def test_constant_field_on_diagonal(structured):
    m, d = structured(1)
    coeff = interp_rt0(m, d, lambda x, y: (1 + 0 * x, 0 * y))
    e = np.flatnonzero(~m.edge_boundary)[0]
    assert coeff[0] == pytest.approx(m.normals[e] @ [1.0, 0.0], rel=1e-15)
    assert coeff[0] == pytest.approx(1 / np.sqrt(2), rel=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_commuting_divergence(seed, n):
    m = generate_structured(n)
    d = build_dofmap(m)
    v, div = random_poly_field(seed)
    lhs = rt0_divergence(m, interp_rt0(m, d, v, all_edges=True))
    rhs = project_p0(m, div)
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_edge_flux_orthogonality(seed):
    m = generate_structured(3)
    d = build_dofmap(m)
    v, _ = random_poly_field(seed)
    coeff = interp_rt0(m, d, v, all_edges=True)
    # normal trace of the interpolant is the coefficient itself; compare means with a finer rule
    np.testing.assert_allclose(coeff, edge_fluxes(m, v, npoints=9), atol=1e-12)
    # and the assembled RT0 field has that constant normal trace on every edge
    inner = ~m.edge_boundary
    U_R = np.zeros(d.nR)
    U_R[d.edge_index[inner]] = coeff[inner]
    bary = np.array([[0.0, 0.3, 0.7], [0.0, 0.8, 0.2]])
    for k in range(3):
        b = np.roll(bary, k, axis=1)
        vals, _ = evaluate_velocity(m.coords(), m.tri_signs, m.normals[m.tri_edges],
                                    np.zeros((m.n_triangles, 6)), d.local_edges(U_R), b)
        e = m.tri_edges[:, k]
        normal = np.einsum("fqd,fd->fq", vals, m.normals[e])
        expect = np.where(inner[e], coeff[e], 0.0)
        np.testing.assert_allclose(normal, np.repeat(expect[:, None], 2, axis=1), atol=1e-12)


def test_nodal_interpolation_zero_field(structured):
    m, d = structured(4)
    assert not interp_p1(m, d, lambda x, y: (0 * x, 0 * y)).any()


def test_nodal_values_roundtrip(structured):
    m, d = structured(4)
    v = lambda x, y: (np.sin(np.pi * x) * y, x * (1 - y))
    nodal = nodal_values(m, d, interp_p1(m, d, v))
    inner = ~m.vertex_boundary
    np.testing.assert_allclose(nodal[inner, 0], v(*m.vertices[inner].T)[0])
    assert not nodal[~inner].any()


def test_fortin_reproduces_p1(structured):
    m, d = structured(2)
    h = 0.5

    def hat(x, y):
        dx, dy = (x - 0.5) / h, (y - 0.5) / h
        return np.maximum(0.0, 1 - np.maximum(np.maximum(abs(dx), abs(dy)), abs(dx - dy)))

    U_L, U_R = fortin(m, d, lambda x, y: (hat(x, y), 2 * hat(x, y)))
    np.testing.assert_allclose(U_L, [1.0, 2.0], atol=1e-15)
    assert np.abs(U_R).max() < 1e-14


def test_fortin_divergence_free(structured):
    m, d = structured(8)
    U_L, U_R = fortin(m, d, example51(1.0).u)
    div = discrete_divergence(m, d, U_L, U_R)
    assert np.abs(div).max() <= 1e-12
    # constant per element
    assert np.ptp(div, axis=1).max() <= 1e-12


def test_fortin_commutes_with_divergence(structured):
    m, d = structured(6)
    v = lambda x, y: (np.sin(np.pi * x) * np.sin(np.pi * y) * (1 + x), x * (1 - x) * y * (1 - y))
    div_v = lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y) * (1 + x)
                          + np.sin(np.pi * x) * np.sin(np.pi * y) + x * (1 - x) * (1 - 2 * y))
    U_L, U_R = fortin(m, d, v)
    div = discrete_divergence(m, d, U_L, U_R)[:, 0]
    np.testing.assert_allclose(div, project_p0(m, div_v), atol=1e-11)


def test_fortin_second_order(structured):
    case = example51(1.0)
    rule = quadrature()
    errs = []
    for n in (8, 16, 32):
        m, d = structured(n)
        U_L, U_R = fortin(m, d, case.u)
        vals, _ = evaluate_velocity(m.coords(), m.tri_signs, m.normals[m.tri_edges],
                                    d.local_velocity(U_L), d.local_edges(U_R), rule.points)
        x = physical_points(m.coords(), rule)
        du = np.stack(case.u(x[..., 0], x[..., 1]), axis=-1) - vals
        w = 2 * m.areas[:, None] * rule.weights
        errs.append(np.sqrt(np.sum(w * (du**2).sum(-1))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all((orders > 1.8) & (orders < 2.2)), orders
