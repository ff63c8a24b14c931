"""Physical-space localization: lattice bump partitions and the disk eigenpair.

The partition of unity is built from a radial cutoff zeta that equals 1 inside
radius sqrt(2)/2 and vanishes from radius 1 on, normalized by its own lattice
periodization S(x) = sum_k zeta(x + k); the quotient phi = zeta / S sums to
one exactly over lattice translates.  At scale j the bumps are
phi_{j,k}(x) = phi(2^j x - k) on the lattice (2^{-j} Z)^2, which on the torus
of period L is the finite lattice of m = 2^j L cells per axis; j need not be
an integer, only m must be.  Bumps are realized through one translation-
invariant patch template, so every localized sum/sup is a gather against the
same small stencil.

The companion eigenpair is the principal Dirichlet eigenfunction of the disk
of radius 2: lambda_1 = (z/2)^2 with z the first zero of the Bessel function
J0, and the radial profile J0(sqrt(lambda_1) r) extended by zero.  It enters
through the localized integration-by-parts identity (verify_eigen_identity)
and through the comparability constants M_l, M_u against the lattice bumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import fields as F
from .lpkit import smooth_step

_SQRT2_OVER_2 = math.sqrt(2.0) / 2.0


class LocalizeError(ValueError):
    pass


class IncommensurateScaleError(LocalizeError):
    """The requested lattice does not fit the torus or the grid."""


def zeta_profile(r):
    """Radial cutoff: 1 for r <= sqrt(2)/2, 0 for r >= 1, smooth between."""
    r = np.asarray(r, dtype=float)
    return smooth_step((1.0 - r) / (1.0 - _SQRT2_OVER_2))


def lattice_sum(points):
    """S at lattice coordinates: sum of zeta over integer translates."""
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[:-1])
    for k1 in range(-2, 3):
        for k2 in range(-2, 3):
            shifted = points - np.array([k1, k2])
            out += zeta_profile(np.sqrt((shifted ** 2).sum(axis=-1)))
    return out


def phi_profile(points):
    """The generator phi = zeta / S evaluated at lattice coordinates."""
    points = np.asarray(points, dtype=float)
    r = np.sqrt((points ** 2).sum(axis=-1))
    return zeta_profile(r) / lattice_sum(points)


class PartitionOfUnity:
    """Lattice bump family phi_{j,k} at one scale on one grid.

    m bump centers per axis sit on grid points (n must be a multiple of m);
    scale = m / L = 2^j so bump supports have radius 2^{-j} in length units.
    """

    def __init__(self, grid: F.Grid, m: int):
        if m < 4:
            raise IncommensurateScaleError(f"need at least 4 lattice cells per axis, got {m}")
        if grid.n % m != 0:
            raise IncommensurateScaleError(
                f"lattice of {m} cells does not align with the n={grid.n} grid"
            )
        self.grid = grid
        self.m = int(m)
        self.r = grid.n // m  # grid points per lattice cell
        self.scale = m / grid.length  # = 2^j
        self.j = math.log2(self.scale)

        r = self.r
        offsets = np.arange(-(r - 1), r)  # |o|/r < 1 keeps the bump support
        o1, o2 = np.meshgrid(offsets, offsets, indexing="ij")
        pts = np.stack([o1 / r, o2 / r], axis=-1)
        self.phi_patch = phi_profile(pts)
        self.offsets = offsets
        # gather rows: rows[k, o] = grid index of offset o from lattice center k
        centers = np.arange(m) * r
        self.rows = (centers[:, None] + offsets[None, :]) % grid.n

    def bump_values(self, k1: int, k2: int) -> np.ndarray:
        """phi_{j,k} on the full grid (mostly zeros; for tests and plots)."""
        out = np.zeros((self.grid.n, self.grid.n))
        out[np.ix_(self.rows[k1], self.rows[k2])] = self.phi_patch
        return out

    def _gather_squares(self, data: np.ndarray) -> np.ndarray:
        """data gathered into patches, shape (m, patch, m, patch)."""
        return data[np.ix_(self.rows.ravel(), self.rows.ravel())].reshape(
            self.m, len(self.offsets), self.m, len(self.offsets)
        ).transpose(0, 2, 1, 3)

    def cell_masses(self, data_sq: np.ndarray, weight_patch: np.ndarray) -> np.ndarray:
        """integral of weight * data_sq per lattice cell, shape (m, m)."""
        patches = self._gather_squares(data_sq)
        return self.grid.cell_area * np.einsum("abij,ij->ab", patches, weight_patch)

    def sum_of_bumps(self) -> np.ndarray:
        """sum_k phi_{j,k} on the full grid (should be identically 1)."""
        return self._scatter(self.phi_patch)

    def sum_of_squares(self) -> np.ndarray:
        """sum_k phi_{j,k}^2 on the full grid (pinched between 1/16 and 1)."""
        return self._scatter(self.phi_patch ** 2)

    def _scatter(self, patch: np.ndarray) -> np.ndarray:
        acc = np.zeros((self.grid.n, self.grid.n))
        for a in range(self.m):
            for b in range(self.m):
                acc[np.ix_(self.rows[a], self.rows[b])] += patch
        return acc

    def min_disjoint_separation(self) -> int:
        """Smallest lattice distance at which bump products vanish identically.

        Stated disjointness holds from distance 5; the construction achieves
        it from distance 2 already (supports have radius 1 lattice unit).
        """
        for d in range(1, 6):
            if self._max_overlap_at(d) == 0.0:
                return d
        return 6

    def _max_overlap_at(self, d: int) -> float:
        base = self.bump_values(0, 0)
        worst = 0.0
        for k1 in range(-d, d + 1):
            k2sq = d * d - k1 * k1
            if k2sq < 0:
                continue
            k2 = int(round(math.sqrt(k2sq)))
            if k1 * k1 + k2 * k2 != d * d:
                continue
            other = self.bump_values(k1 % self.m, k2 % self.m)
            worst = max(worst, float(np.abs(base * other).max()))
        return worst


def build_partition(grid: F.Grid, j: float) -> PartitionOfUnity:
    """Partition at scale j; 2^j L must be a whole number of lattice cells."""
    m_real = 2.0 ** j * grid.length
    m = round(m_real)
    if m < 1 or abs(m_real - m) > 1e-9 * max(1.0, m_real):
        raise IncommensurateScaleError(
            f"scale j={j} gives {m_real} cells per axis; need an integer"
        )
    return PartitionOfUnity(grid, m)


def build_partition_cells(grid: F.Grid, m: int) -> PartitionOfUnity:
    return PartitionOfUnity(grid, m)


def _squares(f) -> np.ndarray:
    """Pointwise squared magnitude of a physical scalar or vector field."""
    if isinstance(f, F.VectorField):
        p = F.vec_as_physical(f)
        return (p.data ** 2).sum(axis=0)
    p = F.as_physical(f)
    return p.data ** 2


def loc_sum(f, pou: PartitionOfUnity) -> float:
    """sum_k ||sqrt(phi_{j,k}) f||_{L2}^2; equals ||f||^2 by the partition."""
    return float(pou.cell_masses(_squares(f), pou.phi_patch).sum())


def loc_sup(f, pou: PartitionOfUnity, weight: str = "sqrt-bump") -> float:
    """sup_k ||w_{j,k} f||_{L2} with w = sqrt(phi) ('sqrt-bump') or phi ('bump')."""
    if weight == "sqrt-bump":
        wp = pou.phi_patch
    elif weight == "bump":
        wp = pou.phi_patch ** 2
    else:
        raise ValueError(f"unknown weight {weight!r}")
    return float(np.sqrt(pou.cell_masses(_squares(f), wp).max()))


def loc_cell_values(f, pou: PartitionOfUnity, weight: str = "sqrt-bump") -> np.ndarray:
    """Per-lattice-cell values ||w_{j,k} f||_{L2}^2, shape (m, m)."""
    wp = pou.phi_patch if weight == "sqrt-bump" else pou.phi_patch ** 2
    return pou.cell_masses(_squares(f), wp)


@dataclass
class MorreyReport:
    """Per-scale localized time-integrated masses and their overall sup."""

    aggregation: str
    per_scale: dict = field(default_factory=dict)  # j -> 2^{2j} * integral
    overall: float = 0.0

    def csv(self) -> str:
        lines = ["j,aggregation,kind,value"]
        for j, v in sorted(self.per_scale.items()):
            lines.append(f"{j},{self.aggregation},integrated,{v!r}")
        lines.append(f"all,{self.aggregation},overall_sup,{self.overall!r}")
        return "\n".join(lines) + "\n"


def morrey_quantity(samples, times, pous, aggregation: str = "sup") -> MorreyReport:
    """sup_j 2^{2j} int_0^t (localized mass at scale j) dtau over given scales.

    ``samples`` is a uniformly-sampled trajectory of (vector or scalar)
    fields, ``pous`` the partitions to scan.  Aggregation 'sum' uses the full
    lattice sum (which collapses to ||f||^2), 'sup' the largest single-cell
    sqrt-bump mass; the two are reported by the same machinery so they can be
    compared side by side.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("empty trajectory")
    if aggregation not in ("sum", "sup"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    times = np.asarray(times, dtype=float)
    report = MorreyReport(aggregation=aggregation)
    for pou in pous:
        series = []
        for f in samples:
            if aggregation == "sum":
                series.append(loc_sum(f, pou))
            else:
                series.append(loc_sup(f, pou, "sqrt-bump") ** 2)
        value = pou.scale ** 2 * float(np.trapezoid(series, times))
        report.per_scale[pou.j] = value
    report.overall = max(report.per_scale.values())
    return report


def first_j0_zero(tol: float = 1e-14) -> float:
    """First positive zero of J0 by bisection on [2, 3]."""
    lo, hi = 2.0, 3.0
    flo = special.j0(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = special.j0(mid)
        if flo * fmid <= 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Eigenpair:
    """Principal Dirichlet eigenpair of the disk of radius 2.

    lam1 = (z/2)^2 with z the first J0 zero; the profile is normalized to 1
    at the origin and extended by zero outside the disk.  M_l and M_u pinch
    the profile over the support of the lattice bump (radius 1), giving
    M_l phi_{j,k} <= varphi_{j,k} phi_{j,k} <= M_u phi_{j,k} pointwise.
    """

    z: float
    lam1: float
    m_lower: float
    m_upper: float

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 2.0, special.j0(np.sqrt(self.lam1) * r), 0.0)

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        root = np.sqrt(self.lam1)
        return np.where(r <= 2.0, -root * special.j1(root * r), 0.0)

    def radial_residual(self, n_points: int = 10_000) -> float:
        """Relative FD residual of phi'' + phi'/r + lam1 phi on (0, 2)."""
        h = 2.0 / (n_points + 1)
        r = np.linspace(h, 2.0 - h, n_points)
        p = self.profile(r)
        d2 = (self.profile(r + h) - 2 * p + self.profile(r - h)) / h ** 2
        d1 = (self.profile(r + h) - self.profile(r - h)) / (2 * h)
        res = d2 + d1 / r + self.lam1 * p
        return float(np.abs(res).max() / (self.lam1 * np.abs(p).max()))


def eigen_disk() -> Eigenpair:
    z = first_j0_zero()
    lam1 = (z / 2.0) ** 2
    # profile is radially decreasing on [0, 2], so over the bump support
    # (radius 1) the extremes sit at r = 1 and r = 0
    m_lower = float(special.j0(np.sqrt(lam1) * 1.0))
    m_upper = 1.0
    return Eigenpair(z=z, lam1=lam1, m_lower=m_lower, m_upper=m_upper)


def verify_eigen_identity(value, gradient, laplacian, r: float, center=(0.0, 0.0),
                          order: int = 256, eigenpair: Eigenpair | None = None):
    """Check the localized integration-by-parts identity on the disk of radius 2r.

    With varphi_r = varphi(x / r) the identity reads

        -int Lap(f) f varphi_r
            = lam1/(2 r^2) int f^2 varphi_r + int varphi_r |grad f|^2
              + 1/2 oint_{|x| = 2r} f^2 grad(varphi_r) . n dS.

    ``value``, ``gradient``, ``laplacian`` are callables of (x, y) given
    analytically so no periodic-grid contamination enters; quadrature is
    Gauss-Legendre radially and trapezoid in angle.  Returns (lhs, rhs,
    defect) with defect = |lhs - rhs| / (|lhs| + |rhs|).
    """
    if r <= 0:
        raise LocalizeError("r must be positive")
    if order < 8:
        raise LocalizeError("quadrature order too small to resolve the disk")
    ep = eigenpair or eigen_disk()

    nodes, weights = np.polynomial.legendre.leggauss(order)
    rho = (nodes + 1.0) * r  # map [-1, 1] -> [0, 2r]
    wr = weights * r
    theta = 2.0 * np.pi * np.arange(order) / order
    wt = 2.0 * np.pi / order

    xx = center[0] + rho[:, None] * np.cos(theta)[None, :]
    yy = center[1] + rho[:, None] * np.sin(theta)[None, :]
    fv = value(xx, yy)
    gx, gy = gradient(xx, yy)
    lap = laplacian(xx, yy)
    weight2d = (wr * rho)[:, None] * wt
    vphi = ep.profile(rho / r)[:, None]

    lhs = -np.sum(weight2d * lap * fv * vphi)
    rhs_mass = ep.lam1 / (2.0 * r ** 2) * np.sum(weight2d * fv ** 2 * vphi)
    rhs_grad = np.sum(weight2d * vphi * (gx ** 2 + gy ** 2))

    bx = center[0] + 2.0 * r * np.cos(theta)
    by = center[1] + 2.0 * r * np.sin(theta)
    fb = value(bx, by)
    dn = ep.profile_derivative(2.0) / r  # radial derivative of varphi_r at the rim
    rhs_boundary = 0.5 * dn * np.sum(fb ** 2) * wt * 2.0 * r

    rhs = rhs_mass + rhs_grad + rhs_boundary
    denom = abs(lhs) + abs(rhs)
    defect = abs(lhs - rhs) / denom if denom > 0 else 0.0
    return float(lhs), float(rhs), float(defect)
