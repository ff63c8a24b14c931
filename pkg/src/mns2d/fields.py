"""Grids, transforms, and calculus for 3-component fields on a 2D periodic box.

Fields live on an n-by-n uniform grid over [0, L)^2 and carry either real
physical samples or complex Fourier coefficients.  One transform convention is
used everywhere:

    forward:  fhat[k] = sum_x f(x) e^{-i k.x}        (numpy fft2, no scaling)
    inverse:  f(x)   = (1/n^2) sum_k fhat[k] e^{i k.x}

The physical L2 norm uses the uniform quadrature weight (L/n)^2 per cell, so
Parseval reads ||f||^2 = (L^2/n^4) sum_k |fhat[k]|^2.  For norms of the Fourier
transform itself (Fourier-Herz style quantities) the coefficients are rescaled
to samples of the symmetric-convention continuum transform,
uhat(k) = (2pi)^{-1} integral f e^{-ik.x} dx, carried on the mode lattice with
cell measure (2pi/L)^2; with that pairing the spectral L2 norm equals the
physical one exactly.

Vector fields have three components depending on the two space variables;
curl and cross products are three-dimensional while divergence uses only the
horizontal derivatives.  All operations are pure: inputs are never mutated.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

PHYSICAL = "physical"
SPECTRAL = "spectral"

SNAPSHOT_MAGIC = b"MNS2"
SNAPSHOT_VERSION = 1


class FieldError(ValueError):
    """Base class for field-algebra errors."""


class GridMismatchError(FieldError):
    """Raised when an operation mixes fields from different grids."""


class RepresentationError(FieldError):
    """Raised when a field is in the wrong representation for an operation."""


class NonFiniteError(FieldError):
    """Raised when field data contains NaN or infinity."""


class Grid:
    """Uniform periodic grid: n points per axis (power of two) on [0, L)^2."""

    def __init__(self, n: int, length: float):
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        if length <= 0:
            raise ValueError(f"box period must be positive, got {length}")
        self.n = int(n)
        self.length = float(length)
        self.dx = self.length / self.n
        self.cell_area = self.dx * self.dx
        self.x = np.arange(self.n) * self.dx
        # wavenumbers (2pi/L) * {-n/2, ..., n/2 - 1} in FFT layout
        k1d = 2.0 * np.pi / self.length * np.fft.fftfreq(self.n, d=1.0 / self.n)
        self.k1 = k1d[:, None] * np.ones((1, self.n))
        self.k2 = np.ones((self.n, 1)) * k1d[None, :]
        self.k1d = k1d
        self.ksq = self.k1 ** 2 + self.k2 ** 2
        self.kmag = np.sqrt(self.ksq)
        self.kmin = 2.0 * np.pi / self.length
        self.kmax = float(self.kmag.max())
        # 2/3-rule cutoff on each axis separately
        self.kcut = (2.0 * np.pi / self.length) * (self.n / 3.0)
        self.dealias_mask = (np.abs(self.k1) <= self.kcut) & (np.abs(self.k2) <= self.kcut)

    def meshgrid(self):
        return np.meshgrid(self.x, self.x, indexing="ij")

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.n == other.n
            and self.length == other.length
        )

    def __hash__(self):
        return hash((self.n, self.length))

    def __repr__(self):
        return f"Grid(n={self.n}, L={self.length:g})"


def _check_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"mixed grids: {a.grid} vs {b.grid}")


def _check_rep(f, rep):
    if f.rep != rep:
        raise RepresentationError(f"expected {rep} representation, got {f.rep}")


@dataclass(frozen=True)
class ScalarField:
    """A scalar sample plane with its grid and representation flag."""

    grid: Grid
    data: np.ndarray
    rep: str = PHYSICAL

    def __post_init__(self):
        if self.data.shape != (self.grid.n, self.grid.n):
            raise FieldError(
                f"data shape {self.data.shape} does not match grid n={self.grid.n}"
            )
        if self.rep not in (PHYSICAL, SPECTRAL):
            raise FieldError(f"unknown representation {self.rep!r}")

    @staticmethod
    def from_samples(grid: Grid, samples: np.ndarray) -> "ScalarField":
        return ScalarField(grid, np.asarray(samples, dtype=float), PHYSICAL)

    @staticmethod
    def from_function(grid: Grid, fn) -> "ScalarField":
        xx, yy = grid.meshgrid()
        return ScalarField(grid, np.asarray(fn(xx, yy), dtype=float), PHYSICAL)

    @staticmethod
    def zeros(grid: Grid, rep: str = PHYSICAL) -> "ScalarField":
        dtype = float if rep == PHYSICAL else complex
        return ScalarField(grid, np.zeros((grid.n, grid.n), dtype=dtype), rep)

    def copy(self) -> "ScalarField":
        return replace(self, data=self.data.copy())

    def __add__(self, other):
        _check_grid(self, other)
        if self.rep != other.rep:
            raise RepresentationError("cannot add fields in different representations")
        return replace(self, data=self.data + other.data)

    def __sub__(self, other):
        _check_grid(self, other)
        if self.rep != other.rep:
            raise RepresentationError("cannot subtract fields in different representations")
        return replace(self, data=self.data - other.data)

    def __mul__(self, c):
        return replace(self, data=self.data * c)

    __rmul__ = __mul__


def to_spectral(f: ScalarField) -> ScalarField:
    """Forward transform of a physical field; rejects non-finite samples."""
    _check_rep(f, PHYSICAL)
    if not np.all(np.isfinite(f.data)):
        raise NonFiniteError("non-finite samples in physical field")
    return ScalarField(f.grid, np.fft.fft2(f.data), SPECTRAL)


def to_physical(f: ScalarField) -> ScalarField:
    """Inverse transform of a spectral field; the imaginary residue is dropped."""
    _check_rep(f, SPECTRAL)
    if not np.all(np.isfinite(f.data)):
        raise NonFiniteError("non-finite coefficients in spectral field")
    return ScalarField(f.grid, np.fft.ifft2(f.data).real, PHYSICAL)


def as_spectral(f: ScalarField) -> ScalarField:
    return f if f.rep == SPECTRAL else to_spectral(f)


def as_physical(f: ScalarField) -> ScalarField:
    return f if f.rep == PHYSICAL else to_physical(f)


def hermitian_defect(f: ScalarField) -> float:
    """Max deviation of spectral data from the symmetry of a real field."""
    _check_rep(f, SPECTRAL)
    flipped = np.conj(f.data[(-np.arange(f.grid.n)) % f.grid.n][:, (-np.arange(f.grid.n)) % f.grid.n])
    scale = np.abs(f.data).max() or 1.0
    return float(np.abs(f.data - flipped).max() / scale)


def l2_norm(f: ScalarField) -> float:
    """Physical L2 norm, computable in either representation (Parseval)."""
    if f.rep == PHYSICAL:
        return float(np.sqrt(f.grid.cell_area * np.sum(f.data.astype(float) ** 2)))
    w = f.grid.length ** 2 / f.grid.n ** 4
    return float(np.sqrt(w * np.sum(np.abs(f.data) ** 2)))


def upsample(f: ScalarField, factor: int) -> np.ndarray:
    """Samples of the band-limited interpolant on a grid refined by ``factor``."""
    if factor == 1:
        return as_physical(f).data
    g = as_spectral(f)
    n, m = f.grid.n, f.grid.n * factor
    fine = np.zeros((m, m), dtype=complex)
    half = n // 2
    # quadrant copy of the FFT-layout spectrum into the padded array
    fine[:half, :half] = g.data[:half, :half]
    fine[:half, m - half :] = g.data[:half, half:]
    fine[m - half :, :half] = g.data[half:, :half]
    fine[m - half :, m - half :] = g.data[half:, half:]
    return np.fft.ifft2(fine).real * factor ** 2


def lp_norm(f: ScalarField, p: float, refine: int = 1) -> float:
    """Physical L^p norm by the grid quadrature rule; p = inf is the max.

    ``refine`` evaluates the band-limited interpolant on a grid that many
    times finer before applying the quadrature; useful when |f| has kinks
    (p = 1) and plain trapezoid error would dominate.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    data = upsample(f, refine)
    if p == np.inf:
        return float(np.abs(data).max())
    cell = f.grid.cell_area / refine ** 2
    return float((cell * np.sum(np.abs(data) ** p)) ** (1.0 / p))


def spectral_samples(f: ScalarField) -> np.ndarray:
    """Continuum-convention transform samples uhat(k) = (2pi)^{-1} * (L/n)^2 fhat[k].

    Paired with the mode-lattice measure (2pi/L)^2 these satisfy Plancherel
    against the physical L2 norm exactly.
    """
    g = as_spectral(f)
    return g.data * (f.grid.length / f.grid.n) ** 2 / (2.0 * np.pi)


MODE_MEASURE_DOC = "each Fourier mode carries measure (2pi/L)^2"


def mode_measure(grid: Grid) -> float:
    return (2.0 * np.pi / grid.length) ** 2


def spectral_lp_norm(f: ScalarField, p: float) -> float:
    """L^p norm of the Fourier transform over the mode lattice."""
    coeffs = np.abs(spectral_samples(f))
    mu = mode_measure(f.grid)
    if p == np.inf:
        return float(coeffs.max())
    return float((mu * np.sum(coeffs ** p)) ** (1.0 / p))


def grad(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Spectral gradient (d1 f, d2 f); input must be spectral."""
    _check_rep(f, SPECTRAL)
    g = f.grid
    return (
        ScalarField(g, 1j * g.k1 * f.data, SPECTRAL),
        ScalarField(g, 1j * g.k2 * f.data, SPECTRAL),
    )


def laplacian(f: ScalarField) -> ScalarField:
    _check_rep(f, SPECTRAL)
    return ScalarField(f.grid, -f.grid.ksq * f.data, SPECTRAL)


def dealias(f: ScalarField) -> ScalarField:
    """2/3-rule truncation: modes with max(|k1|,|k2|) beyond (2pi/L) n/3 are zeroed."""
    _check_rep(f, SPECTRAL)
    return ScalarField(f.grid, f.data * f.grid.dealias_mask, SPECTRAL)


@dataclass(frozen=True)
class VectorField:
    """Three scalar components (V1, V2, V3) on one grid, one representation."""

    grid: Grid
    data: np.ndarray  # shape (3, n, n)
    rep: str = PHYSICAL

    def __post_init__(self):
        if self.data.shape != (3, self.grid.n, self.grid.n):
            raise FieldError(f"vector data shape {self.data.shape} invalid")

    @staticmethod
    def from_components(c1: ScalarField, c2: ScalarField, c3: ScalarField) -> "VectorField":
        _check_grid(c1, c2)
        _check_grid(c1, c3)
        if not (c1.rep == c2.rep == c3.rep):
            raise RepresentationError("components must share one representation")
        return VectorField(c1.grid, np.stack([c1.data, c2.data, c3.data]), c1.rep)

    @staticmethod
    def zeros(grid: Grid, rep: str = PHYSICAL) -> "VectorField":
        dtype = float if rep == PHYSICAL else complex
        return VectorField(grid, np.zeros((3, grid.n, grid.n), dtype=dtype), rep)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.data[i], self.rep)

    @property
    def components(self):
        return tuple(self.component(i) for i in range(3))

    def copy(self) -> "VectorField":
        return replace(self, data=self.data.copy())

    def __add__(self, other):
        _check_grid(self, other)
        if self.rep != other.rep:
            raise RepresentationError("cannot add fields in different representations")
        return replace(self, data=self.data + other.data)

    def __sub__(self, other):
        _check_grid(self, other)
        if self.rep != other.rep:
            raise RepresentationError("cannot subtract fields in different representations")
        return replace(self, data=self.data - other.data)

    def __mul__(self, c):
        return replace(self, data=self.data * c)

    __rmul__ = __mul__


def vec_to_spectral(v: VectorField) -> VectorField:
    _check_rep(v, PHYSICAL)
    if not np.all(np.isfinite(v.data)):
        raise NonFiniteError("non-finite samples in physical field")
    return VectorField(v.grid, np.fft.fft2(v.data, axes=(1, 2)), SPECTRAL)


def vec_to_physical(v: VectorField) -> VectorField:
    _check_rep(v, SPECTRAL)
    return VectorField(v.grid, np.fft.ifft2(v.data, axes=(1, 2)).real, PHYSICAL)


def vec_as_spectral(v: VectorField) -> VectorField:
    return v if v.rep == SPECTRAL else vec_to_spectral(v)


def vec_as_physical(v: VectorField) -> VectorField:
    return v if v.rep == PHYSICAL else vec_to_physical(v)


def vec_l2_norm(v: VectorField) -> float:
    return float(np.sqrt(sum(l2_norm(c) ** 2 for c in v.components)))


def vec_linf_norm(v: VectorField) -> float:
    """Max over the grid of the pointwise Euclidean magnitude."""
    p = vec_as_physical(v)
    return float(np.sqrt((p.data ** 2).sum(axis=0)).max())


def curl25(v: VectorField) -> VectorField:
    """Three-component curl with d3 = 0: (d2 V3, -d1 V3, d1 V2 - d2 V1)."""
    _check_rep(v, SPECTRAL)
    g = v.grid
    out = np.empty_like(v.data)
    out[0] = 1j * g.k2 * v.data[2]
    out[1] = -1j * g.k1 * v.data[2]
    out[2] = 1j * g.k1 * v.data[1] - 1j * g.k2 * v.data[0]
    return VectorField(g, out, SPECTRAL)


def cross(a: VectorField, b: VectorField) -> VectorField:
    """Pointwise 3D cross product of physical fields."""
    _check_grid(a, b)
    _check_rep(a, PHYSICAL)
    _check_rep(b, PHYSICAL)
    out = np.empty_like(a.data)
    out[0] = a.data[1] * b.data[2] - a.data[2] * b.data[1]
    out[1] = a.data[2] * b.data[0] - a.data[0] * b.data[2]
    out[2] = a.data[0] * b.data[1] - a.data[1] * b.data[0]
    return VectorField(a.grid, out, PHYSICAL)


def dot(a: VectorField, b: VectorField) -> ScalarField:
    _check_grid(a, b)
    _check_rep(a, PHYSICAL)
    _check_rep(b, PHYSICAL)
    return ScalarField(a.grid, np.einsum("cij,cij->ij", a.data, b.data), PHYSICAL)


def integral(f: ScalarField) -> float:
    g = as_physical(f)
    return float(g.grid.cell_area * np.sum(g.data))


def div2(v: VectorField) -> ScalarField:
    """Horizontal divergence d1 V1 + d2 V2 (the third component is ignored)."""
    _check_rep(v, SPECTRAL)
    g = v.grid
    return ScalarField(g, 1j * g.k1 * v.data[0] + 1j * g.k2 * v.data[1], SPECTRAL)


def div2_defect(v: VectorField) -> float:
    """||div2 v|| / ||v||, zero for the zero field."""
    s = vec_as_spectral(v)
    denom = vec_l2_norm(s)
    if denom == 0.0:
        return 0.0
    return l2_norm(div2(s)) / denom


def leray_project(v: VectorField) -> VectorField:
    """Project the horizontal pair onto its divergence-free part, mode by mode.

    The k = 0 mode passes through unchanged (the mean is untouched); the third
    component is not acted on.
    """
    _check_rep(v, SPECTRAL)
    g = v.grid
    ksq = g.ksq.copy()
    ksq[0, 0] = 1.0  # k = 0 passes through; avoids 0/0
    kd = (g.k1 * v.data[0] + g.k2 * v.data[1]) / ksq
    kd[0, 0] = 0.0
    out = v.data.copy()
    out[0] = v.data[0] - g.k1 * kd
    out[1] = v.data[1] - g.k2 * kd
    return VectorField(g, out, SPECTRAL)


def vec_dealias(v: VectorField) -> VectorField:
    _check_rep(v, SPECTRAL)
    return VectorField(v.grid, v.data * v.grid.dealias_mask, SPECTRAL)


def refine_scalar(f: ScalarField, fine: Grid) -> ScalarField:
    """Spectral injection onto a finer grid of the same box (exact prolongation)."""
    if fine.length != f.grid.length or fine.n % f.grid.n != 0 or fine.n < f.grid.n:
        raise GridMismatchError("target grid must refine the source grid")
    g = as_spectral(f)
    n, m = f.grid.n, fine.n
    half = n // 2
    out = np.zeros((m, m), dtype=complex)
    out[:half, :half] = g.data[:half, :half]
    out[:half, m - half:] = g.data[:half, half:]
    out[m - half:, :half] = g.data[half:, :half]
    out[m - half:, m - half:] = g.data[half:, half:]
    return ScalarField(fine, out * (m / n) ** 2, SPECTRAL)


def refine_vector(v: VectorField, fine: Grid) -> VectorField:
    s = vec_as_spectral(v)
    return VectorField.from_components(*(refine_scalar(c, fine) for c in s.components))


def refine_state(state: State, fine: Grid) -> State:
    return State(
        t=state.t,
        u=refine_vector(state.u, fine),
        E=refine_vector(state.E, fine),
        B=refine_vector(state.B, fine),
    )


def vec_grad_norm_sq(v: VectorField) -> float:
    """||grad v||^2 summed over the three components (horizontal derivatives)."""
    s = vec_as_spectral(v)
    w = s.grid.length ** 2 / s.grid.n ** 4
    return float(w * np.sum(s.grid.ksq * np.abs(s.data) ** 2))


@dataclass(frozen=True)
class State:
    """The triple (u, E, B) at one time instant, spectral representation."""

    t: float
    u: VectorField
    E: VectorField
    B: VectorField

    def __post_init__(self):
        _check_grid(self.u, self.E)
        _check_grid(self.u, self.B)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def validate(self, tol: float = 1e-10) -> None:
        """Check the horizontal divergence constraints on u and B."""
        for name, field in (("u", self.u), ("B", self.B)):
            d = div2_defect(field)
            if d > tol:
                raise FieldError(f"div2 {name} defect {d:.3e} exceeds {tol:.1e}")

    def energy(self) -> float:
        """Total squared L2 norm ||u||^2 + ||E||^2 + ||B||^2."""
        return (
            vec_l2_norm(self.u) ** 2
            + vec_l2_norm(self.E) ** 2
            + vec_l2_norm(self.B) ** 2
        )


# binary snapshot format: header {magic "MNS2", version u32, n u32, L f64,
# t f64, field count u8}, then row-major little-endian f64 planes in the
# order u1 u2 u3 E1 E2 E3 B1 B2 B3.
_HEADER = struct.Struct("<4sII d d B")


def write_snapshot(path, state: State) -> None:
    g = state.grid
    planes = [
        vec_as_physical(state.u).data,
        vec_as_physical(state.E).data,
        vec_as_physical(state.B).data,
    ]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.n, g.length, state.t, 9))
        for block in planes:
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def read_snapshot(path) -> State:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, n, length, t, count = _HEADER.unpack(raw)
        if magic != SNAPSHOT_MAGIC:
            raise FieldError(f"bad snapshot magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise FieldError(f"unsupported snapshot version {version}")
        if count != 9:
            raise FieldError(f"expected 9 field planes, got {count}")
        grid = Grid(n, length)
        planes = np.frombuffer(fh.read(9 * n * n * 8), dtype="<f8").reshape(9, n, n)
    fields = [
        vec_to_spectral(VectorField(grid, planes[3 * i : 3 * i + 3].astype(float), PHYSICAL))
        for i in range(3)
    ]
    return State(t=t, u=fields[0], E=fields[1], B=fields[2])
