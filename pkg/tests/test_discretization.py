import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sandwichbeam import (
    BeamCoefficients,
    BeamState,
    ValidationError,
    assemble_Ah,
    assemble_M,
    assemble_fd,
    assemble_orfd,
    discrete_energy,
    extend_shear_boundary,
    make_grid,
    make_random_initial,
    make_shear_workspace,
    solve_k,
    solve_shear,
    to_first_order,
)

COEFFS = BeamCoefficients(B=2.0, C=3.0, P=5.0)


def boundary_weight(grid):
    """diag(h, ..., h, 1): the row weights that symmetrize the stiffness."""
    return np.diag([grid.h] * grid.N + [1.0])


# ---------------------------------------------------------------------------
# grids and matrices
# ---------------------------------------------------------------------------

def test_make_grid():
    g = make_grid(5)
    assert g.N == 5
    assert g.h == pytest.approx(1.0 / 6.0, rel=1e-15)
    assert g.nodes.shape == (7,)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValidationError):
        make_grid(0)
    with pytest.raises(ValidationError):
        make_grid(2.5)
    with pytest.raises(ValidationError):
        make_grid(True)


@pytest.mark.parametrize("n", [1, 3, 10, 50])
def test_mass_stiffness_identity_exact(n):
    g = make_grid(n)
    lhs = g.h ** 2 * assemble_Ah(g)
    rhs = 4.0 * np.eye(n) - 4.0 * assemble_M(g)
    # entrywise exact, no tolerance
    assert np.array_equal(lhs, rhs)


def test_matrix_shapes_and_symmetry():
    g = make_grid(9)
    ah = assemble_Ah(g)
    m = assemble_M(g)
    assert ah.shape == m.shape == (9, 9)
    assert np.array_equal(ah, ah.T)
    assert np.array_equal(m, m.T)
    assert m[-1, -1] == 0.75  # free-end diagonal 3/4, off-diagonal unchanged
    assert m[-1, -2] == 0.25
    assert ah[-1, -1] == pytest.approx(1.0 / g.h ** 2, rel=1e-15)
    # positive definiteness
    assert np.linalg.eigvalsh(ah).min() > 0.0
    capm = COEFFS.C * ah + COEFFS.P * m
    assert np.linalg.eigvalsh(capm).min() > 0.0


# ---------------------------------------------------------------------------
# shear solves
# ---------------------------------------------------------------------------

def test_solve_shear_matches_dense_solve():
    g = make_grid(9)
    ws = make_shear_workspace(COEFFS, g)
    ah, m = assemble_Ah(g), assemble_M(g)
    rng = np.random.default_rng(11)
    y = rng.standard_normal(9)
    phi = solve_shear(ws, y)
    ref = (COEFFS.B / (2.0 * g.h)) * np.linalg.solve(COEFFS.C * ah + COEFFS.P * m, ah @ y)
    assert np.max(np.abs(phi - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_k_route_reproduces_direct_shear_solve():
    # with M = I - (h^2/4) A_h the shear system factors through
    # ((C/P - h^2/4) A_h + I) k = y, and phi = (B / 2hP) A_h k
    g = make_grid(12)
    ws = make_shear_workspace(COEFFS, g)
    rng = np.random.default_rng(4)
    y = rng.standard_normal(12)
    phi = solve_shear(ws, y)
    k = solve_k(ws, y)
    via_k = (COEFFS.B / (2.0 * g.h * COEFFS.P)) * (assemble_Ah(g) @ k)
    assert np.max(np.abs(phi - via_k)) <= 1e-10 * max(1.0, np.max(np.abs(phi)))


def test_shear_workspace_fingerprint_guard():
    g = make_grid(6)
    ws = make_shear_workspace(COEFFS, g)
    with pytest.raises(ValidationError):
        solve_shear(ws, np.ones(6), coeffs=BeamCoefficients(B=1.0, C=3.0, P=5.0))
    with pytest.raises(ValidationError):
        solve_shear(ws, np.ones(5))


def test_extend_shear_boundary():
    ext = extend_shear_boundary(np.array([1.0, 2.0, 3.0]))
    assert np.array_equal(ext, [0.0, 1.0, 2.0, 3.0, 3.0])


def test_operator_j_identities():
    # (C A_h + P M)^{-1} A_h == (1/C) I - (P/C)(C A_h + P M)^{-1} M, symmetric
    g = make_grid(15)
    ah, m = assemble_Ah(g), assemble_M(g)
    s = COEFFS.C * ah + COEFFS.P * m
    j = np.linalg.solve(s, ah)
    alt = np.eye(15) / COEFFS.C - (COEFFS.P / COEFFS.C) * np.linalg.solve(s, m)
    scale = np.max(np.abs(j))
    assert np.max(np.abs(j - alt)) <= 1e-12 * scale
    assert np.max(np.abs(j - j.T)) <= 1e-12 * scale


@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_shear_response_map_symmetric_psd(seed):
    g = make_grid(10)
    ah, m = assemble_Ah(g), assemble_M(g)
    r = np.linalg.solve(COEFFS.C * ah + COEFFS.P * m, ah)
    assert np.max(np.abs(r - r.T)) <= 1e-12 * np.max(np.abs(r))
    y = np.random.default_rng(seed).standard_normal(10)
    assert y @ r @ y >= -1e-12 * (y @ y)


# ---------------------------------------------------------------------------
# assembled bundles
# ---------------------------------------------------------------------------

def test_assembly_validation():
    g = make_grid(2)
    with pytest.raises(ValidationError):
        assemble_orfd(COEFFS, g, 0.0)
    with pytest.raises(ValidationError):
        assemble_fd(COEFFS, make_grid(4), -1.0)
    with pytest.raises(ValidationError):
        assemble_orfd("not coeffs", make_grid(4), 0.0)


def test_state_dimensions():
    g = make_grid(6)
    assert assemble_orfd(COEFFS, g, 0.0).state_dim() == 14   # 2N + 2
    assert assemble_orfd(COEFFS, g, 2.0).state_dim() == 14
    assert assemble_fd(COEFFS, g, 0.0).state_dim() == 12     # tip eliminated
    assert assemble_fd(COEFFS, g, 2.0).state_dim() == 13     # tip velocity kept


def test_stiffness_hand_stencil_agreement():
    """Dual-route check: literal ghost-rule stencil loops vs the assembled rows.

    Ghosts: z_{-1} = z_0 = 0 (clamped) and z_{N+2} = 2 z_{N+1} - z_N (free-end
    z'' = 0).  Rows i = 1..N carry delta^4 z_i minus the phi coupling; the row
    at i = N drops its phi_{N+1} leg (energy-gradient closure).
    """
    g = make_grid(8)
    n, h = g.N, g.h
    bundle = assemble_orfd(COEFFS, g, 0.0)
    ws = make_shear_workspace(COEFFS, g)
    rng = np.random.default_rng(21)

    for z_sample in ((g.nodes ** 2), np.concatenate([[0.0], rng.standard_normal(n + 1)])):
        z = z_sample.copy()
        z[0] = 0.0
        zfull = np.concatenate([[0.0], z, [2.0 * z[-1] - z[-2]]])  # z_{-1} .. z_{N+2}
        y = np.array([z[i + 1] - z[i - 1] for i in range(1, n + 1)])
        phi = extend_shear_boundary(solve_shear(ws, y))
        hand = np.empty(n)
        for i in range(1, n + 1):
            bending = (
                zfull[i - 1] - 4 * zfull[i] + 6 * zfull[i + 1]
                - 4 * zfull[i + 2] + zfull[i + 3]
            ) / h ** 4
            if i < n:
                shear = -(COEFFS.B / (2 * h)) * (phi[i + 1] - phi[i - 1])
            else:
                shear = (COEFFS.B / (2 * h)) * phi[i - 1]
            hand[i - 1] = bending + shear
        assembled = bundle.apply_stiffness(z[1:])
        scale = np.max(np.abs(hand))
        assert np.max(np.abs(assembled[:n] - hand)) <= 1e-9 * scale


def test_stiffness_dense_matches_apply():
    for xi in (0.0, 3.0):
        g = make_grid(7)
        bundle = assemble_orfd(COEFFS, g, xi)
        k = bundle.stiffness_dense()
        rng = np.random.default_rng(17)
        for _ in range(3):
            u = rng.standard_normal(g.N + 1)
            ref = k @ u
            assert np.max(np.abs(bundle.apply_stiffness(u) - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_weighted_stiffness_is_energy_hessian():
    # diag(h,...,h,1) K is symmetric, and the potential energy of a state at
    # rest equals (1/2) u^T (W K) u
    g = make_grid(7)
    bundle = assemble_orfd(COEFFS, g, 0.0)
    wk = boundary_weight(g) @ bundle.stiffness_dense()
    assert np.max(np.abs(wk - wk.T)) <= 1e-12 * np.max(np.abs(wk))
    rng = np.random.default_rng(5)
    z = np.concatenate([[0.0], rng.standard_normal(g.N + 1)])
    state = BeamState(z=z, zdot=np.zeros(g.N + 2))
    quad = 0.5 * z[1:] @ wk @ z[1:]
    assert discrete_energy(bundle, state) == pytest.approx(quad, rel=1e-10)


def test_state_restriction_round_trip():
    g = make_grid(6)
    rng = np.random.default_rng(2)

    orfd = assemble_orfd(COEFFS, g, 1.5)
    s = make_random_initial(g, rng)
    back = orfd.expand_state(orfd.restrict_state(s), t=0.25)
    assert np.allclose(back.z, s.z, atol=1e-14)
    assert np.allclose(back.zdot, s.zdot, atol=1e-14)
    assert back.t == 0.25

    # FD with xi = 0 carries no independent tip displacement: restriction
    # projects onto the constraint, after which the round trip is exact
    fd = assemble_fd(COEFFS, g, 0.0)
    s = make_random_initial(g, rng)
    once = fd.expand_state(fd.restrict_state(s))
    twice = fd.expand_state(fd.restrict_state(once))
    assert np.allclose(once.z, twice.z, atol=1e-14)
    assert np.allclose(once.zdot, twice.zdot, atol=1e-14)
    assert np.allclose(once.z[:-1], s.z[:-1], atol=1e-14)


# ---------------------------------------------------------------------------
# first-order operator
# ---------------------------------------------------------------------------

def test_first_order_structure():
    g = make_grid(10)
    bundle = assemble_orfd(COEFFS, g, 0.0)
    op = to_first_order(bundle)
    dense = op.materialize()
    assert op.dim == 22
    assert abs(np.trace(dense)) <= 1e-9 * np.max(np.abs(dense))

    rng = np.random.default_rng(77)
    z = rng.standard_normal(11)
    x = np.concatenate([z, np.zeros(11)])
    out = op.apply(x)
    assert np.max(np.abs(out[:11])) == 0.0  # zdot block of [z; 0] is zero

    for _ in range(4):
        v = rng.standard_normal(22)
        ref = dense @ v
        assert np.max(np.abs(op.apply(v) - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_first_order_time_scale_is_multiplicative():
    g = make_grid(5)
    bundle = assemble_orfd(COEFFS, g, 0.0)
    base = to_first_order(bundle, time_scale=1.0).materialize()
    scaled = to_first_order(bundle, time_scale=0.25).materialize()
    assert np.allclose(scaled, 0.25 * base, rtol=0.0, atol=1e-14 * np.max(np.abs(base)))
