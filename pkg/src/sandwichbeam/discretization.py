"""Spatial semi-discretizations of the clamped-free sandwich beam.

Two schemes are assembled on the uniform grid 0 = x_0 < x_1 < ... < x_{N+1} = 1,
h = 1/(N+1), with unknowns z_1 .. z_{N+1} (z_0 = z_{-1} = 0 clamped,
z_{N+2} = 2 z_{N+1} - z_N from the free-end moment condition):

* ORFD (order-reduced finite differences): interior rows carry the averaged
  mass (1/4)(z''_{i-1} + 2 z''_i + z''_{i+1}), and the tip equation keeps an
  inertia term (h/4)(z''_N + z''_{N+1}).  The core shear angle is eliminated
  through phi = (B/2h) (C A_h + P M)^{-1} A_h y with y_i = z_{i+1} - z_{i-1}.

* FD (plain finite differences, the negative control): identity mass on the
  interior rows, one-sided third differences in the shear equation
  (C A_h + P I) phi = -(B/2) d3(z), and a tip equation with no inertia at all.
  With xi = 0 that tip row is an algebraic constraint; it is eliminated
  exactly, so the first-order state has dimension 2N.  With xi > 0 the row
  turns into a dynamic equation for z_{N+1} and the state has dimension 2N+1.
  expand_state/restrict_state translate between reduced states and full node
  vectors in both cases.

The N x N matrices behind the shear solve are

          1  |  2 -1         |            1  |  2  1         |
    A_h = -- | -1  2 -1      |        M = -  |  1  2  1      |
          h^2|    .. .. ..   |            4  |    .. .. ..   |
             |      -1  2 -1 |               |      1  2  1  |
             |         -1  1 |               |         1  3  |

(boundary closures u_0 = 0 and u_{N+1} = u_N), linked by the exact identity
h^2 A_h = 4 I - 4 M, so A_h and M commute and share eigenvectors.

Sign convention of the dissipative tip row: the closed-loop ORFD system is
assembled as  mass z'' + damping z' + stiffness z = 0  with
damping = xi e_{N+1} e_{N+1}^T, which makes the discrete energy satisfy
dE_h/dt = -xi (z'_{N+1})^2 exactly (energy non-increasing for xi > 0).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded

from .errors import SingularOperatorError, ValidationError
from .model import BeamCoefficients

ORFD = "orfd"
FD = "fd"
SCHEMES = (ORFD, FD)


# ----------------------------------------------------------------------------
# grid and state
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid with N interior nodes, h = 1/(N+1), nodes x_i = i h.

    Scheme assembly requires N >= 3 (stencil width after ghost elimination);
    construct via make_grid for that guard.  Instances with N = 1 or 2 are
    legitimate only for unit tests of individual matrix stencils.
    """

    N: int
    h: float
    nodes: np.ndarray


def make_grid(N):
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool):
        raise ValidationError(f"N must be an integer, got {N!r}")
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    h = 1.0 / (N + 1)
    return Grid(N=int(N), h=h, nodes=np.arange(N + 2) * h)


@dataclass(eq=False)
class BeamState:
    """Displacements and velocities at all nodes 0 .. N+1 at one time."""

    z: np.ndarray
    zdot: np.ndarray
    t: float = 0.0


def validate_state(state, grid):
    z = np.asarray(state.z, dtype=float)
    zdot = np.asarray(state.zdot, dtype=float)
    n_nodes = grid.N + 2
    if z.shape != (n_nodes,) or zdot.shape != (n_nodes,):
        raise ValidationError(
            f"state vectors must have length {n_nodes}, got {z.shape} and {zdot.shape}"
        )
    if z[0] != 0.0 or zdot[0] != 0.0:
        raise ValidationError("clamped end requires z[0] = zdot[0] = 0")
    return z, zdot


# ----------------------------------------------------------------------------
# the shear-solve matrices
# ----------------------------------------------------------------------------

def assemble_Ah(grid):
    """Scaled second-difference matrix A_h (N x N, symmetric, tridiagonal).

    (1/h^2) tridiag(-1, 2, -1) with last diagonal entry 1/h^2, reflecting the
    closures u_0 = 0 and u_{N+1} = u_N.  Valid for any N >= 1.
    """
    n, h = grid.N, grid.h
    assert n >= 1
    a = np.zeros((n, n))
    idx = np.arange(n)
    a[idx, idx] = 2.0
    a[n - 1, n - 1] = 1.0
    if n > 1:
        a[idx[:-1], idx[:-1] + 1] = -1.0
        a[idx[1:], idx[1:] - 1] = -1.0
    return a / h ** 2


def assemble_M(grid):
    """Averaging mass matrix M = (1/4) tridiag(1, 2, 1), last diagonal 3/4.

    Satisfies h^2 A_h = 4 I - 4 M entrywise exactly.
    """
    n = grid.N
    assert n >= 1
    m = np.zeros((n, n))
    idx = np.arange(n)
    m[idx, idx] = 2.0
    m[n - 1, n - 1] = 3.0
    if n > 1:
        m[idx[:-1], idx[:-1] + 1] = 1.0
        m[idx[1:], idx[1:] - 1] = 1.0
    return m / 4.0


def _upper_banded(mat):
    """Pack a symmetric tridiagonal matrix into (2, n) upper banded storage."""
    n = mat.shape[0]
    ab = np.zeros((2, n))
    ab[1] = np.diag(mat)
    if n > 1:
        ab[0, 1:] = np.diag(mat, 1)
    return ab


def _banded_lu_form(mat):
    """Pack a tridiagonal matrix into the (1, 1) form used by solve_banded."""
    n = mat.shape[0]
    ab = np.zeros((3, n))
    ab[1] = np.diag(mat)
    if n > 1:
        ab[0, 1:] = np.diag(mat, 1)
        ab[2, :-1] = np.diag(mat, -1)
    return ab


@dataclass(eq=False)
class ShearSolveWorkspace:
    """Matrices and factorizations reused by every shear elimination.

    Holds A_h and M, the banded Cholesky factor of (C A_h + P M), and the
    banded form of ((C/P - h^2/4) A_h + I) for the k-route solve.  The
    fingerprint records the (B, C, P, h) the factorizations were built for.
    """

    grid: Grid
    coeffs: BeamCoefficients
    ah: np.ndarray
    m: np.ndarray
    capm_cho: np.ndarray = field(repr=False)
    kroute_ab: np.ndarray = field(repr=False)
    fingerprint: tuple = ()

    def check_current(self, coeffs, grid):
        key = (coeffs.B, coeffs.C, coeffs.P, grid.h)
        if key != self.fingerprint:
            raise ValidationError(
                "stale shear workspace: built for (B, C, P, h) = "
                f"{self.fingerprint}, asked to solve for {key}"
            )


def make_shear_workspace(coeffs, grid):
    ah = assemble_Ah(grid)
    m = assemble_M(grid)
    capm = coeffs.C * ah + coeffs.P * m
    alpha = coeffs.C / coeffs.P - grid.h ** 2 / 4.0
    # (alpha A_h + I) is positive definite because alpha > -h^2/4 and
    # lambda_max(A_h) < 4/h^2; guard anyway before factorizing.
    lam_max = (4.0 / grid.h ** 2) * np.sin((2 * grid.N - 1) * np.pi / (4 * grid.N + 2)) ** 2
    if alpha <= -1.0 / lam_max:
        raise SingularOperatorError(
            f"k-route operator singular: C/P - h^2/4 = {alpha} <= -1/lambda_max"
        )
    return ShearSolveWorkspace(
        grid=grid,
        coeffs=coeffs,
        ah=ah,
        m=m,
        capm_cho=cholesky_banded(_upper_banded(capm)),
        kroute_ab=_banded_lu_form(alpha * ah + np.eye(grid.N)),
        fingerprint=(coeffs.B, coeffs.C, coeffs.P, grid.h),
    )


def solve_shear(workspace, y, coeffs=None):
    """phi = (B/2h) (C A_h + P M)^{-1} A_h y  via one banded solve.

    y has length N (one value per interior node); accepts a matrix of
    stacked columns as well.  Boundary values phi_0 = 0 and
    phi_{N+1} = phi_N are supplied by extend_shear_boundary.
    """
    if coeffs is not None:
        workspace.check_current(coeffs, workspace.grid)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != workspace.grid.N:
        raise ValidationError(
            f"y must have leading dimension {workspace.grid.N}, got {y.shape}"
        )
    scale = workspace.coeffs.B / (2.0 * workspace.grid.h)
    return scale * cho_solve_banded((workspace.capm_cho, False), workspace.ah @ y)


def solve_k(workspace, y):
    """The unique k with ((C/P - h^2/4) A_h + I) k = y.

    Exposed for invariant testing: by construction of A_h's closure the
    boundary relations k_0 = 0 and k_{N+1} = k_N hold for the extension of k.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] != workspace.grid.N:
        raise ValidationError(
            f"y must have leading dimension {workspace.grid.N}, got {y.shape}"
        )
    return solve_banded((1, 1), workspace.kroute_ab, y)


def extend_shear_boundary(phi):
    """Extend interior shear values with phi_0 = 0 and phi_{N+1} = phi_N."""
    phi = np.asarray(phi, dtype=float)
    return np.concatenate(([0.0], phi, [phi[-1]]))


# ----------------------------------------------------------------------------
# stencil blocks shared by both schemes (free unknowns u = (z_1 .. z_{N+1}))
# ----------------------------------------------------------------------------

def _bending_rows(n, h):
    """Fourth-difference rows i = 1..N over u, ghosts eliminated.

    Row i = 1:  ( 6 z_1 - 4 z_2 + z_3) / h^4          (z_{-1} = z_0 = 0)
    Row i = N:  (z_{N-2} - 4 z_{N-1} + 5 z_N - 2 z_{N+1}) / h^4
                                                      (z_{N+2} = 2 z_{N+1} - z_N)
    """
    out = np.zeros((n, n + 1))
    for i in range(1, n + 1):
        r = i - 1
        for offset, coeff in ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)):
            j = i + offset  # node index of z_j
            if j <= 0:
                continue  # clamped ghosts z_0 = z_{-1} = 0
            if j == n + 2:
                # free-end ghost z_{N+2} = 2 z_{N+1} - z_N
                out[r, n] += coeff * 2.0
                out[r, n - 1] += coeff * (-1.0)
            else:
                out[r, j - 1] += coeff
    return out / h ** 4


def _y_from_z_matrix(n):
    """Map u = (z_1..z_{N+1}) to y_i = z_{i+1} - z_{i-1}, i = 1..N (z_0 = 0)."""
    out = np.zeros((n, n + 1))
    for i in range(1, n + 1):
        out[i - 1, i] = 1.0  # z_{i+1}
        if i >= 2:
            out[i - 1, i - 2] = -1.0  # z_{i-1}
    return out


def _orfd_shear_rows(n, coeffs, h):
    """Couple rows to phi: -(B/2h)(phi_{i+1} - phi_{i-1}) away from the free end.

    Returns the (N+1) x N matrix applied to the interior shear vector phi,
    with phi_0 = 0.  The two rows touching the free end carry the exact
    gradient of the shear energy (B/4) sum_j phi_j (z_{j+1} - z_{j-1}):
    row N couples as +(B/2h) phi_{N-1} and the tip row as +(B/2) phi_N.
    This is the unique closure for which the boundary-weighted stiffness
    equals the energy Hessian, so the open-loop flow conserves the discrete
    energy identically instead of leaking O(h) power through the tip.
    """
    g = np.zeros((n + 1, n))
    s = -coeffs.B / (2.0 * h)
    for i in range(1, n):
        r = i - 1
        g[r, i] += s  # phi_{i+1}
        if i >= 2:
            g[r, i - 2] -= s  # -phi_{i-1}
    g[n - 1, n - 2] = -s  # row N: +(B/2h) phi_{N-1}
    g[n, n - 1] = 0.5 * coeffs.B  # tip row: +(B/2) phi_N
    return g


def _fd_shear_rows(n, coeffs, h):
    """FD interior coupling -(B/h)(phi_{i+1} - phi_i); vanishes at i = N."""
    g = np.zeros((n, n))
    s = -coeffs.B / h
    for i in range(1, n):
        g[i - 1, i] += s      # phi_{i+1}
        g[i - 1, i - 1] -= s  # -phi_i
    return g


def _fd_third_difference(n, h):
    """One-sided rows (d3 z)_i = (z_{i+2} - 3 z_{i+1} + 3 z_i - z_{i-1}) / h^3.

    Ghosts as in the scheme: z_0 = 0 at i = 1, z_{N+2} = 2 z_{N+1} - z_N at
    i = N (which collapses the row to (-z_{N+1} + 2 z_N - z_{N-1}) / h^3).
    """
    out = np.zeros((n, n + 1))
    for i in range(1, n + 1):
        r = i - 1
        for offset, coeff in ((-1, -1.0), (0, 3.0), (1, -3.0), (2, 1.0)):
            j = i + offset
            if j <= 0:
                continue
            if j == n + 2:
                out[r, n] += coeff * 2.0
                out[r, n - 1] += coeff * (-1.0)
            else:
                out[r, j - 1] += coeff
    return out / h ** 3


def _fd_tip_stencil(n, h):
    """Tip row (z_{N+2} - 3 z_N + 3 z_{N-1} - z_{N-2}) / h^3 over u, as printed,
    after the ghost substitution z_{N+2} = 2 z_{N+1} - z_N."""
    assert n >= 3
    row = np.zeros(n + 1)
    row[n] = 2.0        # z_{N+1}
    row[n - 1] = -4.0   # z_N   (-3 - 1 from the ghost)
    row[n - 2] = 3.0    # z_{N-1}
    row[n - 3] = -1.0   # z_{N-2}
    return row / h ** 3


# ----------------------------------------------------------------------------
# operator bundles
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class OperatorBundle:
    """Assembled operators for one scheme, immutable after assembly.

    For ORFD: mass/damping are (N+1) x (N+1) over u = (z_1 .. z_{N+1}) and the
    stiffness acts on u (matrix-free through the shear solve, or materialized
    densely once).  For FD the printed tip row has no inertia, so the bundle
    stores the interior stiffness rows plus the tip row `constraint`; the
    first-order reduction is 2N-dimensional for xi = 0 (tip eliminated
    exactly) and (2N+1)-dimensional for xi > 0 (tip row become dynamic).
    """

    scheme: str
    coeffs: BeamCoefficients
    grid: Grid
    xi: float
    workspace: ShearSolveWorkspace
    mass: np.ndarray
    damping: np.ndarray | None
    _bending: np.ndarray = field(repr=False, default=None)
    _shear_rows: np.ndarray = field(repr=False, default=None)
    _y_map: np.ndarray = field(repr=False, default=None)
    _mass_ab: np.ndarray = field(repr=False, default=None)
    # FD-only pieces
    _interior_stiffness: np.ndarray = field(repr=False, default=None)
    _constraint: np.ndarray = field(repr=False, default=None)
    _cache: dict = field(repr=False, default_factory=dict)

    # ---- stiffness access paths -------------------------------------------

    def apply_stiffness(self, u):
        """Apply the ORFD stiffness to u via one banded shear solve."""
        assert self.scheme == ORFD
        phi = solve_shear(self.workspace, self._y_map @ u)
        return self._bending @ u + self._shear_rows @ phi

    def stiffness_dense(self):
        """Materialize the stiffness over the free unknowns (cached)."""
        key = "stiffness"
        if key not in self._cache:
            if self.scheme == ORFD:
                phi_map = solve_shear(self.workspace, self._y_map)
                self._cache[key] = self._bending + self._shear_rows @ phi_map
            else:
                self._cache[key] = self._interior_stiffness
        return self._cache[key]

    # ---- first-order reduction --------------------------------------------

    def state_dim(self):
        n = self.grid.N
        if self.scheme == ORFD:
            return 2 * n + 2
        return 2 * n if self.xi == 0.0 else 2 * n + 1

    def _fd_elimination(self):
        """Weights expressing z_{N+1} from z_1..z_N on the xi = 0 constraint."""
        r = self._constraint
        if abs(r[-1]) <= 1e-13 * np.linalg.norm(r):
            raise SingularOperatorError(
                "FD tip constraint does not determine z_{N+1}: leading "
                f"coefficient {r[-1]} is numerically zero"
            )
        return -r[:-1] / r[-1]

    def fd_feedback_row(self):
        """Oriented FD tip row for xi > 0: zdot_{N+1} = (row @ z) / xi.

        The closed-loop tip row fixes zdot_{N+1} up to an overall sign, and
        only one orientation dissipates: with the row taken as
        -(tip stencil - B phi_N)/xi every closed-loop eigenvalue has
        negative real part, while the opposite sign is exponentially
        unstable.  We hard-wire the dissipative orientation.
        """
        assert self.scheme == FD and self.xi != 0.0
        return -self._constraint / self.xi

    def first_order_base(self):
        """Dense unscaled first-order operator (cached); see to_first_order."""
        key = "first_order"
        if key not in self._cache:
            n = self.grid.N
            if self.scheme == ORFD:
                k = self.stiffness_dense()
                minv_k = solve_banded((1, 1), self._mass_ab, k)
                a = np.zeros((2 * n + 2, 2 * n + 2))
                a[: n + 1, n + 1 :] = np.eye(n + 1)
                a[n + 1 :, : n + 1] = -minv_k
                if self.xi != 0.0:
                    minv_d = solve_banded((1, 1), self._mass_ab, self.damping)
                    a[n + 1 :, n + 1 :] = -minv_d
            elif self.xi == 0.0:
                w = self._fd_elimination()
                embed = np.vstack([np.eye(n), w])  # (N+1) x N, u = embed @ z_int
                k_red = self._interior_stiffness @ embed
                a = np.zeros((2 * n, 2 * n))
                a[:n, n:] = np.eye(n)
                a[n:, :n] = -k_red
            else:
                # state (z_1 .. z_{N+1}, zdot_1 .. zdot_N)
                a = np.zeros((2 * n + 1, 2 * n + 1))
                a[np.arange(n), n + 1 + np.arange(n)] = 1.0  # d/dt z_i = zdot_i
                a[n, : n + 1] = self.fd_feedback_row()  # dynamic tip row
                a[n + 1 :, : n + 1] = -self._interior_stiffness
            self._cache[key] = a
        return self._cache[key]

    def apply_first_order(self, x, time_scale=None):
        """Matrix-free application of the (scaled) first-order operator."""
        s = self.coeffs.time_scale if time_scale is None else time_scale
        n = self.grid.N
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.state_dim():
            raise ValidationError(
                f"state must have dimension {self.state_dim()}, got {x.shape}"
            )
        if self.scheme == ORFD:
            u, v = x[: n + 1], x[n + 1 :]
            rhs = self.apply_stiffness(u)
            if self.xi != 0.0:
                rhs = rhs + self.damping @ v
            return s * np.concatenate([v, -solve_banded((1, 1), self._mass_ab, rhs)])
        return s * (self.first_order_base() @ x)

    # ---- state translation -------------------------------------------------

    def restrict_state(self, state):
        """Project a full BeamState onto the scheme's first-order unknowns.

        For FD with xi = 0 the tip displacement is not a free unknown (its
        value is recovered from the algebraic tip row), so initial data is
        projected onto the constraint manifold.
        """
        z, zdot = validate_state(state, self.grid)
        if self.scheme == ORFD:
            return np.concatenate([z[1:], zdot[1:]])
        n = self.grid.N
        if self.xi == 0.0:
            return np.concatenate([z[1 : n + 1], zdot[1 : n + 1]])
        return np.concatenate([z[1:], zdot[1 : n + 1]])

    def expand_state(self, x, t=0.0):
        """Rebuild full node vectors (z_0 .. z_{N+1}) from a first-order state."""
        n = self.grid.N
        x = np.asarray(x, dtype=float)
        if self.scheme == ORFD:
            u, v = x[: n + 1], x[n + 1 :]
        elif self.xi == 0.0:
            w = self._fd_elimination()
            zi, vi = x[:n], x[n:]
            u = np.concatenate([zi, [w @ zi]])
            v = np.concatenate([vi, [w @ vi]])
        else:
            u = x[: n + 1]
            vtip = self.fd_feedback_row() @ u
            v = np.concatenate([x[n + 1 :], [vtip]])
        return BeamState(
            z=np.concatenate([[0.0], u]), zdot=np.concatenate([[0.0], v]), t=t
        )


def _orfd_mass(n, h):
    mass = np.zeros((n + 1, n + 1))
    for i in range(1, n + 1):  # interior rows (1/4)(z''_{i-1} + 2 z''_i + z''_{i+1})
        r = i - 1
        mass[r, r] = 0.5
        if r >= 1:
            mass[r, r - 1] = 0.25
        mass[r, r + 1] = 0.25
    mass[n, n - 1] = h / 4.0  # tip row (h/4)(z''_N + z''_{N+1})
    mass[n, n] = h / 4.0
    return mass


def assemble_orfd(coeffs, grid, xi=0.0):
    """Assemble the order-reduced scheme as an OperatorBundle.

    The closed-loop tip row is oriented so that dE_h/dt = -xi (z'_{N+1})^2:
    mass z'' + damping z' + stiffness z = 0 with damping = xi e e^T.
    """
    _check_assembly_args(coeffs, grid, xi)
    n, h = grid.N, grid.h
    mass = _orfd_mass(n, h)
    damping = np.zeros((n + 1, n + 1))
    damping[n, n] = xi
    bending = np.zeros((n + 1, n + 1))
    bending[:n] = _bending_rows(n, h)
    # tip row -d3 z_{N+1/2} = (z_{N+1} - 2 z_N + z_{N-1}) / h^3 after the ghost
    bending[n, n] = 1.0 / h ** 3
    bending[n, n - 1] = -2.0 / h ** 3
    bending[n, n - 2] = 1.0 / h ** 3
    return OperatorBundle(
        scheme=ORFD,
        coeffs=coeffs,
        grid=grid,
        xi=float(xi),
        workspace=make_shear_workspace(coeffs, grid),
        mass=mass,
        damping=damping,
        _bending=bending,
        _shear_rows=_orfd_shear_rows(n, coeffs, h),
        _y_map=_y_from_z_matrix(n),
        _mass_ab=_banded_lu_form(mass),
    )


def assemble_fd(coeffs, grid, xi=0.0):
    """Assemble the plain finite-difference scheme as an OperatorBundle.

    Interior rows z''_i + d4 z_i - (B/h)(phi_{i+1} - phi_i) = 0 with the
    shear solve (C A_h + P I) phi = -(B/2) d3 z, all stencils as printed.
    The tip row, which has no inertia, is stored as `constraint`; see the
    class docstring for how it enters the first-order reduction.
    """
    _check_assembly_args(coeffs, grid, xi)
    n, h = grid.N, grid.h
    workspace = make_shear_workspace(coeffs, grid)
    capi = coeffs.C * workspace.ah + coeffs.P * np.eye(n)
    capi_cho = cholesky_banded(_upper_banded(capi))
    phi_map = -0.5 * coeffs.B * cho_solve_banded(
        (capi_cho, False), _fd_third_difference(n, h)
    )  # phi as a dense linear map of u
    interior = _bending_rows(n, h) + _fd_shear_rows(n, coeffs, h) @ phi_map
    constraint = _fd_tip_stencil(n, h) - coeffs.B * phi_map[n - 1]
    return OperatorBundle(
        scheme=FD,
        coeffs=coeffs,
        grid=grid,
        xi=float(xi),
        workspace=workspace,
        mass=np.eye(n),
        damping=None,
        _interior_stiffness=interior,
        _constraint=constraint,
    )


def _check_assembly_args(coeffs, grid, xi):
    if not isinstance(coeffs, BeamCoefficients):
        raise ValidationError(f"coeffs must be BeamCoefficients, got {type(coeffs)!r}")
    if not isinstance(grid, Grid):
        raise ValidationError(f"grid must be a Grid, got {type(grid)!r}")
    if grid.N < 3:
        raise ValidationError(f"scheme assembly requires N >= 3, got N = {grid.N}")
    if not (xi >= 0.0 and np.isfinite(xi)):
        raise ValidationError(f"feedback gain xi must be >= 0, got {xi!r}")


# ----------------------------------------------------------------------------
# first-order operator
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class FirstOrderOperator:
    """State-space operator x' = A x with both access paths.

    `apply` works matrix-free (ORFD routes through the banded solves);
    `materialize` returns the dense matrix, built once and cached.  The
    time-scale factor is folded in: A = time_scale * A_base, which traverses
    the same trajectories at speed time_scale (state semantics unchanged).
    """

    bundle: OperatorBundle
    time_scale: float

    @property
    def dim(self):
        return self.bundle.state_dim()

    def apply(self, x):
        return self.bundle.apply_first_order(x, time_scale=self.time_scale)

    def materialize(self):
        key = ("materialized", self.time_scale)
        if key not in self.bundle._cache:
            self.bundle._cache[key] = self.time_scale * self.bundle.first_order_base()
        return self.bundle._cache[key]


def to_first_order(bundle, time_scale=None):
    """First-order reduction x' = A x for x = [z; z'] (free unknowns).

    time_scale defaults to bundle.coeffs.time_scale; pass 1.0 for the
    unscaled generator.
    """
    s = bundle.coeffs.time_scale if time_scale is None else float(time_scale)
    if not (s > 0.0 and np.isfinite(s)):
        raise ValidationError(f"time_scale must be positive and finite, got {time_scale!r}")
    return FirstOrderOperator(bundle=bundle, time_scale=s)
