"""Core grid types and operators for potentials on the flat torus [0,1)^2.

The complex-dimension-one reduction works with real-valued potentials u on a
uniform N x N periodic grid.  A background density ``theta`` with positive
total mass V plays the role of a semipositive form twisted by ``dd^c u``; the
normalization is

    curvature(u) = Laplacian(u) / (2*pi),
    ma_density(theta, u) = theta + curvature(u),

so that ``integrate(ma_density(theta, u)) == V`` identically (the discrete
Laplacian sums to zero over the torus).  A field is theta-plurisubharmonic
(theta-psh) when its ma_density is nonnegative.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import MaenvError

_MAGIC = b"MAENV1"


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic N x N grid on the unit square with spacing h = 1/N."""

    n: int

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def coords(self):
        """Return meshgrid arrays X, Y with X[i, j] = i*h and Y[i, j] = j*h."""
        xs = np.arange(self.n) * self.h
        return np.meshgrid(xs, xs, indexing="ij")


class GridField:
    """Immutable real field sampled on a :class:`TorusGrid`.

    Values are stored as a read-only float64 array of shape (N, N); all
    operators return new fields.
    """

    __slots__ = ("grid", "_values")

    def __init__(self, grid: TorusGrid, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (grid.n, grid.n):
            raise ValueError(f"expected shape {(grid.n, grid.n)}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "_values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridField is immutable")

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __repr__(self):
        v = self._values
        return f"GridField(n={self.grid.n}, min={v.min():.6g}, max={v.max():.6g})"


def constant_field(grid: TorusGrid, value: float) -> GridField:
    return GridField(grid, np.full((grid.n, grid.n), float(value)))


def field_from_function(grid: TorusGrid, fn) -> GridField:
    """Sample ``fn(x, y)`` (vectorized over arrays) at the grid nodes."""
    x, y = grid.coords()
    return GridField(grid, np.asarray(fn(x, y), dtype=np.float64))


@dataclass(frozen=True)
class ThetaDensity:
    """Background density; its integral V = integrate(density) is the total mass.

    The density may change sign.  V must be strictly positive.
    """

    density: GridField

    def __post_init__(self):
        if self.total_mass <= 0:
            raise ValueError("theta density must have positive total mass")

    @property
    def grid(self) -> TorusGrid:
        return self.density.grid

    @property
    def total_mass(self) -> float:
        return integrate(self.density)


@dataclass(frozen=True)
class MeasureDensity:
    """Nonnegative reference density; may vanish on part of the grid."""

    density: GridField

    def __post_init__(self):
        v = self.density.values
        if np.any(v < 0):
            raise ValueError("measure density must be nonnegative")
        if not np.any(v > 0):
            raise ValueError("measure density must not vanish identically")

    @property
    def grid(self) -> TorusGrid:
        return self.density.grid

    @property
    def support_mask(self) -> np.ndarray:
        return self.density.values > 0

    @property
    def total_mass(self) -> float:
        return integrate(self.density)


def _laplacian(values: np.ndarray, h: float) -> np.ndarray:
    return (
        np.roll(values, 1, axis=0)
        + np.roll(values, -1, axis=0)
        + np.roll(values, 1, axis=1)
        + np.roll(values, -1, axis=1)
        - 4.0 * values
    ) / (h * h)


def curvature(u: GridField) -> GridField:
    """Five-point periodic Laplacian of u divided by 2*pi."""
    return GridField(u.grid, _laplacian(u.values, u.grid.h) / (2.0 * np.pi))


def curvature_values(values: np.ndarray, h: float) -> np.ndarray:
    """Array-level curvature used by the solvers' inner loops."""
    return _laplacian(values, h) / (2.0 * np.pi)


def ma_density(theta: ThetaDensity, u: GridField) -> GridField:
    """Density of the twisted Monge-Ampere operator, theta + curvature(u)."""
    if theta.grid.n != u.grid.n:
        raise ValueError("theta and u live on different grids")
    return GridField(u.grid, theta.density.values + curvature(u).values)


@dataclass(frozen=True)
class PshReport:
    """Outcome of a pointwise positivity check of ma_density."""

    passed: bool
    min_value: float
    argmin: tuple
    tol: float


def is_theta_psh(theta: ThetaDensity, u: GridField, tol: float = 1e-10):
    """Check ``ma_density(theta, u) >= -tol`` at every node.

    Returns ``(passed, report)`` where the report records the minimum of the
    density and the node where it is attained.
    """
    m = ma_density(theta, u).values
    k = int(np.argmin(m))
    ij = (k // u.grid.n, k % u.grid.n)
    mn = float(m[ij])
    return mn >= -tol, PshReport(mn >= -tol, mn, ij, tol)


def integrate(u: GridField) -> float:
    """Trapezoidal (= midpoint, by periodicity) integral: h^2 * sum of values."""
    return float(u.values.sum()) * u.grid.h**2


def norms(u: GridField, v: GridField | None = None) -> dict:
    """Sup, L1 and L2 norms of u (or of u - v when v is given)."""
    d = u.values if v is None else u.values - v.values
    h2 = u.grid.h**2
    return {
        "sup": float(np.max(np.abs(d))),
        "l1": float(np.sum(np.abs(d)) * h2),
        "l2": float(np.sqrt(np.sum(d * d) * h2)),
    }


def _minplus_pass(cost: np.ndarray, arr: np.ndarray, chunk: int = 32) -> np.ndarray:
    # out[a, :] = min_b cost[a, b] + arr[b, :]
    n = arr.shape[0]
    out = np.empty_like(arr)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = cost[start:stop, :, None] + arr[None, :, :]
        out[start:stop] = block.min(axis=1)
    return out


def inf_convolution(u: GridField, j: float) -> GridField:
    """Quadratic inf-convolution min_z { u(z) + j * d(x, z)^2 } on the torus.

    ``d`` is the periodic Euclidean distance.  The squared distance splits
    per axis, so the minimization is done in two one-dimensional passes.
    The result is <= u, nondecreasing in j, and semiconcave with constant 2j.
    """
    if j <= 0:
        raise ValueError("penalty strength j must be positive")
    grid = u.grid
    k = np.arange(grid.n)
    dist = grid.h * np.minimum(k, grid.n - k)
    shift = np.abs(k[:, None] - k[None, :])
    cost = j * dist[np.minimum(shift, grid.n - shift)] ** 2
    mid = _minplus_pass(cost, u.values)
    out = _minplus_pass(cost, mid.T).T
    return GridField(grid, out)


@lru_cache(maxsize=None)
def laplacian_matrix(n: int) -> sp.csc_matrix:
    """Sparse matrix of the five-point periodic Laplacian scaled by 1/h^2.

    Acts on row-major flattened (N*N,) vectors; ``laplacian_matrix(n) @ u.ravel()``
    equals ``_laplacian(u, h).ravel()``.
    """
    h2 = (1.0 / n) ** 2
    ones = np.ones(n)
    t = sp.diags([ones[:-1], -2.0 * ones, ones[:-1]], [-1, 0, 1], format="lil")
    t[0, n - 1] = 1.0
    t[n - 1, 0] = 1.0
    t = t.tocsr()
    eye = sp.identity(n, format="csr")
    lap = (sp.kron(t, eye) + sp.kron(eye, t)) / h2
    return lap.tocsc()


def field_with_curvature(grid: TorusGrid, target: GridField) -> GridField:
    """Mean-zero field u with curvature(u) = target - mean(target).

    Solved exactly in Fourier space; used to build comparison fields and
    explicit supersolutions.
    """
    g = target.values
    rhs = 2.0 * np.pi * (g - g.mean())
    k = np.fft.fftfreq(grid.n, d=1.0) * grid.n
    lam1 = (2.0 * np.cos(2.0 * np.pi * k / grid.n) - 2.0) / grid.h**2
    lam = lam1[:, None] + lam1[None, :]
    lam[0, 0] = 1.0
    u_hat = np.fft.fft2(rhs) / lam
    u_hat[0, 0] = 0.0
    u = np.real(np.fft.ifft2(u_hat))
    return GridField(grid, u - u.mean())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def field_to_csv(u: GridField) -> str:
    """Row-major CSV serialization with full float64 round-trip precision."""
    lines = [",".join(format(x, ".17g") for x in row) for row in u.values]
    return "\n".join(lines) + "\n"


def write_field_csv(path, u: GridField) -> None:
    with open(path, "w") as f:
        f.write(field_to_csv(u))


def read_field_csv(path) -> GridField:
    arr = np.atleast_2d(np.loadtxt(path, delimiter=","))
    if arr.shape[0] != arr.shape[1]:
        raise MaenvError(f"CSV field is not square: shape {arr.shape}")
    return GridField(TorusGrid(arr.shape[0]), arr)


def write_field_binary(path, u: GridField) -> None:
    """Binary format: magic 'MAENV1', little-endian uint32 N, N*N float64."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", u.grid.n))
        f.write(u.values.astype("<f8").tobytes(order="C"))


def read_field_binary(path) -> GridField:
    with open(path, "rb") as f:
        magic = f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise MaenvError(f"bad magic {magic!r}; expected {_MAGIC!r}")
        (n,) = struct.unpack("<I", f.read(4))
        data = np.frombuffer(f.read(8 * n * n), dtype="<f8")
        if data.size != n * n:
            raise MaenvError("truncated binary field")
    return GridField(TorusGrid(n), data.reshape(n, n).astype(np.float64))
