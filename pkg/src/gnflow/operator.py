"""The depth-dependent elliptic operator and its inversion.

Strong form, applied with 4th-order differences (D = deriv):

    A[h, xi] u = h (1 + xi_x^2) u + D(h^2 xi_x u / 2) - (h^2 xi_x / 2) D(u)
                 - D(h^3 D(u) / 3)

Inversion goes through the symmetric weak form instead, so that positive
depth guarantees a positive definite matrix: for test/trial functions u, v

    B(u, v) = int  w0 u v + w1 (u v' + u' v) + w2 u' v'  dx,
    w0 = h (1 + xi_x^2),   w1 = -h^2 xi_x / 2,   w2 = h^3 / 3.

P1 elements on the periodic grid with the coefficients frozen at element
midpoints give a symmetric cyclic tridiagonal matrix.  Per element the
integrand is w0 p^2 + 2 w1 p p' + w2 p'^2 with discriminant
w1^2 - (w0 - h)(w2 - h^3/12) ... completing the square the same way the
continuous coercivity estimate does:

    w0 p^2 + 2 w1 p p' + w2 p'^2
        = h p^2 + (h^3/12) p'^2 + (sqrt(h) xi_x p - (h^(3/2)/2) p')^2,

so B(u,u) >= int h u^2 + (1/12) h^3 u_x^2 holds exactly element by element
whenever h > 0 at the midpoints, and the matrix is SPD.  coercivity_report
evaluates the lower bound with the same midpoint quadrature, which is why
its slack is nonnegative to machine precision rather than to O(dx^2).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError

from . import _kernels
from .bathymetry import Bathymetry, fourier
from .errors import GnflowError, NotPositiveDefinite
from .grid import Field, Grid, deriv, require_same_grid, sobolev_norm

__all__ = ["SpdTridiagonal", "apply_A", "assemble_A", "solve_A",
           "load_vector", "coercivity_report", "CoercivityReport"]


class SpdTridiagonal:
    """Symmetric cyclic tridiagonal matrix with a cached direct factorization.

    ``offdiag[j]`` couples unknowns j and j+1; ``offdiag[n-1]`` is the
    periodic corner coupling n-1 and 0.  Immutable after construction; the
    factorization is computed on first use and shared by later solves.
    """

    __slots__ = ("grid", "diag", "offdiag", "_factor")

    def __init__(self, grid: Grid, diag: np.ndarray, offdiag: np.ndarray):
        self.grid = grid
        self.diag = np.asarray(diag, dtype=float)
        self.offdiag = np.asarray(offdiag, dtype=float)
        if self.diag.shape != (grid.n,) or self.offdiag.shape != (grid.n,):
            raise ValueError("band arrays must have length n")
        self._factor = None

    @property
    def corner(self) -> float:
        return float(self.offdiag[-1])

    def matvec(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return (self.diag * u + self.offdiag * np.roll(u, -1)
                + np.roll(self.offdiag, 1) * np.roll(u, 1))

    def quad(self, u: np.ndarray, v: np.ndarray) -> float:
        """Bilinear form value v^T M u."""
        return float(np.asarray(v, dtype=float) @ self.matvec(u))

    def factor(self):
        if self._factor is None:
            try:
                self._factor = _kernels.cyclic_spd_factor(self.diag, self.offdiag)
            except (ValueError, LinAlgError) as exc:
                raise NotPositiveDefinite(str(exc)) from None
        return self._factor

    def solve(self, rhs: np.ndarray, rtol: float = 1e-11) -> np.ndarray:
        """Direct solve, verified to ||M u - rhs|| <= rtol * ||rhs||.

        One step of iterative refinement covers the rare case where plain
        forward/back substitution lands above the verification threshold.
        """
        rhs = np.asarray(rhs, dtype=float)
        fac = self.factor()
        u = _kernels.cyclic_spd_solve(fac, rhs)
        bnorm = np.linalg.norm(rhs)
        if bnorm == 0.0:
            return np.zeros_like(rhs)
        resid = rhs - self.matvec(u)
        rnorm = np.linalg.norm(resid)
        if rnorm > 0.01 * rtol * bnorm:
            u = u + _kernels.cyclic_spd_solve(fac, resid)
            rnorm = np.linalg.norm(rhs - self.matvec(u))
        if not rnorm <= rtol * bnorm:
            raise GnflowError(
                f"cyclic solve residual {rnorm:.3e} above {rtol:.1e} * ||rhs||")
        return u


def _midpoint(v: np.ndarray) -> np.ndarray:
    return 0.5 * (v + np.roll(v, -1))


def assemble_from_weights(grid: Grid, w0m, w1m, w2m) -> SpdTridiagonal:
    """P1 assembly from element-midpoint coefficient samples.

    Element integrals with frozen coefficients: mass dx*[[2,1],[1,2]]/6,
    stiffness [[1,-1],[-1,1]]/dx, and the mixed u v' + u' v term reduces to
    the boundary evaluation [p q]_elem = diag(-1, +1).
    """
    dx = grid.dx
    off = w0m * (dx / 6.0) - w2m / dx
    diag = ((np.roll(w0m, 1) + w0m) * (dx / 3.0)
            + (np.roll(w1m, 1) - w1m)
            + (np.roll(w2m, 1) + w2m) / dx)
    return SpdTridiagonal(grid, diag, off)


def _weights(h_mid: np.ndarray, xi_x_mid: np.ndarray):
    w0 = h_mid * (1.0 + xi_x_mid * xi_x_mid)
    w1 = -0.5 * h_mid * h_mid * xi_x_mid
    w2 = h_mid ** 3 / 3.0
    return w0, w1, w2


def assemble_A(h: Field, bathy: Bathymetry) -> SpdTridiagonal:
    g = h.grid
    xi_x_mid = bathy.xi_x(g.x + 0.5 * g.dx)
    return assemble_A_arrays(g, h.values, xi_x_mid)


def assemble_A_arrays(grid: Grid, h_values: np.ndarray,
                      xi_x_mid: np.ndarray) -> SpdTridiagonal:
    """Hot-loop assembly entry: nodal depth plus precomputed midpoint xi_x."""
    w0, w1, w2 = _weights(_midpoint(h_values), xi_x_mid)
    return assemble_from_weights(grid, w0, w1, w2)


def apply_A(h: Field, bathy: Bathymetry, u: Field) -> Field:
    """Strong-form operator application (4th-order differences).

    Kept alongside the Galerkin path as a consistency check; solve then
    apply returns the data to O(dx^2) on smooth fields.
    """
    g = require_same_grid(h, u)
    xi_x = bathy.xi_x(g.x)
    hv, uv = h.values, u.values
    du = _kernels.deriv4(uv, g.dx)
    out = (hv * (1.0 + xi_x * xi_x) * uv
           + _kernels.deriv4(0.5 * hv * hv * xi_x * uv, g.dx)
           - 0.5 * hv * hv * xi_x * du
           - _kernels.deriv4(hv ** 3 * du / 3.0, g.dx))
    return Field(g, out)


def load_vector(grid: Grid, f_values: np.ndarray) -> np.ndarray:
    """P1 consistent load: (M_mass f)_j = dx (f_{j-1} + 4 f_j + f_{j+1}) / 6."""
    f = np.asarray(f_values, dtype=float)
    return grid.dx * (np.roll(f, 1) + 4.0 * f + np.roll(f, -1)) / 6.0


def solve_A(h: Field, bathy: Bathymetry, f: Field) -> Field:
    """Invert the weak-form operator against the P1 load vector of f."""
    g = require_same_grid(h, f)
    mat = assemble_A(h, bathy)
    return Field(g, mat.solve(load_vector(g, f.values)))


# ---------------------------------------------------------------------------
# coercivity diagnostics


@dataclass(frozen=True)
class CoercivityReport:
    trials: int
    n: int
    min_slack: float          # min over trials of (B(u,u) - lower)/||u||_H1^2
    max_upper_ratio: float    # max over trials of B(u,u)/||u||_H1^2
    analytic_upper_bound: float  # worst C(h, xi) over trials


def band_limited(grid: Grid, rng, modes: int = 8, amp: float = 1.0) -> np.ndarray:
    """Random band-limited nodal samples, sup-normalized then scaled by amp."""
    vals = np.zeros(grid.n)
    for m in range(1, modes + 1):
        a, b = rng.standard_normal(2)
        ph = 2.0 * np.pi * m * grid.x / grid.L
        vals += a * np.cos(ph) + b * np.sin(ph)
    peak = np.max(np.abs(vals))
    if peak == 0.0:
        return vals
    return amp * vals / peak


def coercivity_slack(h: Field, bathy: Bathymetry, u: Field):
    """Normalized slack of the lower bound and the upper ratio for one triple.

    Both quadratic forms use the same midpoint P1 quadrature; see the module
    docstring for why that makes the slack exactly nonnegative.
    """
    g = require_same_grid(h, u)
    mat = assemble_A(h, bathy)
    h_mid = _midpoint(h.values)
    lower = assemble_from_weights(g, h_mid, np.zeros(g.n), h_mid ** 3 / 12.0)
    b_uu = mat.quad(u.values, u.values)
    low_uu = lower.quad(u.values, u.values)
    h1sq = sobolev_norm(u, 1.0) ** 2
    return (b_uu - low_uu) / h1sq, b_uu / h1sq


def analytic_upper_bound(h: Field, bathy: Bathymetry) -> float:
    """C(h, xi) with B(u,u) <= C ||u||_H1^2, from max norms of the weights."""
    g = h.grid
    xm = bathy.xi_x(g.x + 0.5 * g.dx)
    hm = _midpoint(h.values)
    return float(np.max(hm * (1.0 + xm * xm))
                 + np.max(0.5 * hm * hm * np.abs(xm))
                 + np.max(hm ** 3) / 3.0)


def coercivity_report(grid: Grid, trials: int = 1000, seed: int = 0,
                      min_depth: float = 0.2) -> CoercivityReport:
    """Seeded random-triple sweep of the coercivity inequality.

    Depths are 1 + a*b(x) with b sup-normalized band-limited noise and
    a <= 1 - min_depth, so min h >= min_depth by construction; bottoms are
    random band-limited profiles with slopes up to order one.
    """
    rng = np.random.default_rng(seed)
    min_slack = np.inf
    max_ratio = 0.0
    worst_c = 0.0
    for _ in range(trials):
        h = Field(grid, 1.0 + band_limited(grid, rng, amp=rng.uniform(0.0, 1.0 - min_depth)))
        coeffs = rng.standard_normal((2, 4)) * (0.05 / np.arange(1, 5))
        bathy = fourier(grid.L, coeffs[0], coeffs[1])
        u = Field(grid, band_limited(grid, rng, amp=rng.uniform(0.1, 2.0)))
        slack, ratio = coercivity_slack(h, bathy, u)
        min_slack = min(min_slack, slack)
        max_ratio = max(max_ratio, ratio)
        worst_c = max(worst_c, analytic_upper_bound(h, bathy))
    return CoercivityReport(trials, grid.n, float(min_slack), float(max_ratio),
                            float(worst_c))
