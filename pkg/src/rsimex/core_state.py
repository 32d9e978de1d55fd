"""Conserved/primitive state algebra, the Cartesian grid and ghost filling.

Fields are stored as one float array of shape ``(NVAR, ny_tot, nx_tot)``
holding the conserved vector

    (alpha1, alpha1 rho1, alpha2 rho2, rho v_x, rho v_y, w_x, w_y, rhoE)

including ghost layers.  One-dimensional grids keep ``ny_tot == 1`` and the
y components stay zero.
"""
from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .errors import AdmissibilityError, ConfigError, DomainError

NVAR = 8
IA, IM1, IM2, IMX, IMY, IWX, IWY, IE = range(NVAR)
ALPHA_MIN = 1e-8
ALPHA_MAX = 1.0 - 1e-8


class BC(str, Enum):
    PERIODIC = "periodic"
    TRANSMISSIVE = "transmissive"
    DIRICHLET = "dirichlet"


SIDES = ("left", "right", "bottom", "top")


@dataclass
class State:
    """Conserved variables; entries broadcast (scalars or arrays)."""

    alpha1: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    mom: np.ndarray
    w: np.ndarray
    rhoE: np.ndarray

    @classmethod
    def from_array(cls, q):
        return cls(q[IA], q[IM1], q[IM2], q[IMX:IMY + 1], q[IWX:IWY + 1], q[IE])

    def to_array(self):
        shape = np.broadcast_shapes(
            np.shape(self.alpha1), np.shape(self.m1), np.shape(self.m2),
            np.shape(self.rhoE), np.shape(self.mom)[1:], np.shape(self.w)[1:],
        )
        q = np.empty((NVAR,) + shape)
        q[IA] = self.alpha1
        q[IM1] = self.m1
        q[IM2] = self.m2
        q[IMX:IMY + 1] = np.asarray(self.mom).reshape((2,) + np.shape(self.mom)[1:])
        q[IWX:IWY + 1] = np.asarray(self.w).reshape((2,) + np.shape(self.w)[1:])
        q[IE] = self.rhoE
        return q


@dataclass
class Primitives:
    rho1: np.ndarray
    rho2: np.ndarray
    rho: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    v: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    T: np.ndarray
    Ekin: np.ndarray

    @property
    def w(self):
        return self.v1 - self.v2


def _first_bad(mask):
    idx = np.argwhere(np.atleast_1d(mask))[0]
    # arrays are laid out (..., j, i); report (i, j)
    if len(idx) >= 2:
        return (int(idx[-1]), int(idx[-2]))
    return (int(idx[-1]), 0)


def check_state(q, eos, stage=None):
    """Raise :class:`AdmissibilityError` if any cell of ``q`` is inadmissible."""
    a = q[IA]
    for name, bad in (
        ("finite state", ~np.all(np.isfinite(q), axis=0)),
        ("alpha1 in [1e-8, 1-1e-8]", ~((a >= ALPHA_MIN) & (a <= ALPHA_MAX))),
        ("alpha1 rho1 > 0", ~(q[IM1] > 0.0)),
        ("alpha2 rho2 > 0", ~(q[IM2] > 0.0)),
    ):
        if np.any(bad):
            cell = _first_bad(bad)
            raise AdmissibilityError(name, cell, None, stage)
    rhoe = internal_energy(q)
    bad = ~(rhoe > 0.0)
    if np.any(bad):
        cell = _first_bad(bad)
        raise AdmissibilityError("rhoE - rhoE_kin > 0", cell, float(np.atleast_1d(rhoe)[np.atleast_1d(bad)][0]), stage)


def kinetic_energy(q):
    """rho|v|^2/2 + rho y1 y2 |w|^2/2 from the conserved array."""
    rho = q[IM1] + q[IM2]
    y1y2 = q[IM1] * q[IM2] / rho ** 2
    mom2 = q[IMX] ** 2 + q[IMY] ** 2
    w2 = q[IWX] ** 2 + q[IWY] ** 2
    return 0.5 * mom2 / rho + 0.5 * rho * y1y2 * w2


def internal_energy(q):
    return q[IE] - kinetic_energy(q)


def to_primitives(q, eos, check=True, stage=None):
    """Primitive variables of a :class:`State` (or a raw conserved array)."""
    arr = q.to_array() if isinstance(q, State) else np.asarray(q, dtype=float)
    if check:
        check_state(arr, eos, stage)
    a1 = arr[IA]
    m1, m2 = arr[IM1], arr[IM2]
    rho = m1 + m2
    y1 = m1 / rho
    y2 = m2 / rho
    v = arr[IMX:IMY + 1] / rho
    w = arr[IWX:IWY + 1]
    v1 = v + y2 * w
    v2 = v - y1 * w
    Ekin = 0.5 * np.sum(v * v, axis=0) + 0.5 * y1 * y2 * np.sum(w * w, axis=0)
    T = (arr[IE] - rho * Ekin) / (m1 * eos.phase1.cv + m2 * eos.phase2.cv)
    return Primitives(m1 / a1, m2 / (1.0 - a1), rho, y1, y2, v, v1, v2, T, Ekin)


def conserved_from_primitive_values(alpha1, rho1, rho2, v1, v2, T, eos):
    """Conserved array from (alpha1, rho_l, phase velocities, T).

    ``v1`` and ``v2`` have a leading axis of length 2.
    """
    alpha1 = np.asarray(alpha1, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    shape = np.broadcast_shapes(alpha1.shape, np.shape(rho1), np.shape(rho2), np.shape(T),
                                v1.shape[1:], v2.shape[1:])
    m1 = alpha1 * rho1
    m2 = (1.0 - alpha1) * rho2
    rho = m1 + m2
    y1 = m1 / rho
    y2 = m2 / rho
    v = y1 * v1 + y2 * v2
    w = v1 - v2
    Ekin = 0.5 * np.sum(v * v, axis=0) + 0.5 * y1 * y2 * np.sum(w * w, axis=0)
    q = np.empty((NVAR,) + shape)
    q[IA] = alpha1
    q[IM1] = m1
    q[IM2] = m2
    q[IMX:IMY + 1] = rho * v
    q[IWX:IWY + 1] = w
    q[IE] = m1 * eos.phase1.cv * T + m2 * eos.phase2.cv * T + rho * Ekin
    return q


def from_primitives(p, alpha1, eos, check=True):
    """Inverse of :func:`to_primitives`; returns a :class:`State`."""
    q = conserved_from_primitive_values(alpha1, p.rho1, p.rho2, p.v1, p.v2, p.T, eos)
    if check:
        check_state(q, eos)
    return State.from_array(q)


def mach_numbers(p, eos):
    """Phase Mach numbers |v_l|/a_l and the mixture Mach number |v|/a."""
    T = np.asarray(p.T, dtype=float)
    if np.any(~(T > 0.0)):
        raise DomainError("T", "temperature must be positive")
    ph1, ph2 = eos.phase1, eos.phase2
    a1_sq = ph1.gamma * ph1.kappa * T
    a2_sq = ph2.gamma * ph2.kappa * T
    a_sq = p.y1 * a1_sq + p.y2 * a2_sq
    M1 = np.sqrt(np.sum(p.v1 ** 2, axis=0) / a1_sq)
    M2 = np.sqrt(np.sum(p.v2 ** 2, axis=0) / a2_sq)
    M = np.sqrt(np.sum(p.v ** 2, axis=0) / a_sq)
    return M1, M2, M


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid over ``[x0, x1] x [y0, y1]``."""

    dims: int
    n: tuple
    extent: tuple
    bc: dict = field(default_factory=dict)
    ghost: int = 2

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ConfigError(f"dims must be 1 or 2, got {self.dims}")
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        if self.dims == 1:
            n = (n[0], 1)
        elif len(n) == 1:
            n = (n[0], n[0])
        object.__setattr__(self, "n", n)
        ext = tuple(float(e) for e in self.extent)
        if len(ext) == 2:
            ext = ext + (0.0, 1.0)
        object.__setattr__(self, "extent", ext)
        if n[0] < 4 or (self.dims == 2 and n[1] < 4):
            raise ConfigError(f"need at least 4 cells per axis, got {n[:self.dims]}")
        if self.ghost < 2:
            raise ConfigError("ghost width must be at least 2")
        if not (ext[1] > ext[0] and ext[3] > ext[2]):
            raise ConfigError("domain extent must be increasing")
        bc = {s: BC(self.bc.get(s, BC.PERIODIC)) for s in SIDES}
        for a, b in (("left", "right"), ("bottom", "top")):
            if (bc[a] is BC.PERIODIC) != (bc[b] is BC.PERIODIC):
                raise ConfigError(f"periodic boundary on {a} requires periodic on {b}")
        object.__setattr__(self, "bc", bc)

    @property
    def nx(self):
        return self.n[0]

    @property
    def ny(self):
        return self.n[1]

    @property
    def dx(self):
        return (self.extent[1] - self.extent[0]) / self.nx

    @property
    def dy(self):
        if self.dims == 1:
            return self.extent[3] - self.extent[2]
        return (self.extent[3] - self.extent[2]) / self.ny

    @property
    def gx(self):
        return self.ghost

    @property
    def gy(self):
        return self.ghost if self.dims == 2 else 0

    @property
    def shape(self):
        return (self.ny + 2 * self.gy, self.nx + 2 * self.gx)

    @property
    def interior(self):
        return (slice(self.gy, self.gy + self.ny), slice(self.gx, self.gx + self.nx))

    @property
    def cell_volume(self):
        return self.dx * self.dy

    def centers(self, with_ghosts=False):
        """Cell-centre coordinates ``(X, Y)`` broadcast to the storage layout."""
        gx = self.gx if with_ghosts else 0
        gy = self.gy if with_ghosts else 0
        i = np.arange(-gx, self.nx + gx)
        x = self.extent[0] + (i + 0.5) * self.dx
        if self.dims == 1:
            y = np.array([0.5 * (self.extent[2] + self.extent[3])])
        else:
            j = np.arange(-gy, self.ny + gy)
            y = self.extent[2] + (j + 0.5) * self.dy
        X, Y = np.meshgrid(x, y)
        return X, Y

    @property
    def periodic(self):
        return self.bc["left"] is BC.PERIODIC and (self.dims == 1 or self.bc["bottom"] is BC.PERIODIC)


class Field:
    """Conserved-variable storage on a :class:`Grid` including ghosts."""

    def __init__(self, grid, data=None):
        self.grid = grid
        if data is None:
            data = np.zeros((NVAR,) + grid.shape)
        data = np.asarray(data, dtype=float)
        if data.shape != (NVAR,) + grid.shape:
            raise ValueError(f"field data shape {data.shape} does not match grid {grid.shape}")
        self.data = data

    @classmethod
    def from_interior(cls, grid, q):
        f = cls(grid)
        f.data[(slice(None),) + grid.interior] = np.asarray(q).reshape((NVAR, grid.ny, grid.nx))
        return f

    @property
    def interior(self):
        return self.data[(slice(None),) + self.grid.interior]

    def state(self):
        return State.from_array(self.interior)

    def copy(self):
        return Field(self.grid, self.data.copy())

    def cell(self, i, j=0):
        """Conserved vector of interior cell ``(i, j)``."""
        return self.interior[:, j, i].copy()


def apply_bc(f, exact=None, t=0.0):
    """Fill ghost cells in place and return the field.

    ``exact`` is a callable ``(X, Y, t) -> conserved array`` used by Dirichlet
    sides.
    """
    g = f.grid
    d = f.data
    gx, gy, nx, ny = g.gx, g.gy, g.nx, g.ny
    needs_exact = any(g.bc[s] is BC.DIRICHLET for s in (SIDES if g.dims == 2 else SIDES[:2]))
    if needs_exact and exact is None:
        raise ConfigError("Dirichlet boundary requires an exact-solution sampler")
    Xg = Yg = None
    if needs_exact:
        Xg, Yg = g.centers(with_ghosts=True)

    def fill(side, dst, src_periodic, src_edge):
        kind = g.bc[side]
        if kind is BC.PERIODIC:
            d[dst] = d[src_periodic]
        elif kind is BC.TRANSMISSIVE:
            d[dst] = d[src_edge]
        else:
            d[dst] = np.asarray(exact(Xg[dst[1:]], Yg[dst[1:]], t))

    a = slice(None)
    rows = slice(gy, gy + ny)
    for k in range(gx):
        # left ghost column gx-1-k mirrors periodic column nx+gx-1-k
        fill("left", (a, rows, slice(gx - 1 - k, gx - k)),
             (a, rows, slice(nx + gx - 1 - k, nx + gx - k)), (a, rows, slice(gx, gx + 1)))
        fill("right", (a, rows, slice(nx + gx + k, nx + gx + k + 1)),
             (a, rows, slice(gx + k, gx + k + 1)), (a, rows, slice(nx + gx - 1, nx + gx)))
    if g.dims == 2:
        cols = slice(None)
        for k in range(gy):
            fill("bottom", (a, slice(gy - 1 - k, gy - k), cols),
                 (a, slice(ny + gy - 1 - k, ny + gy - k), cols), (a, slice(gy, gy + 1), cols))
            fill("top", (a, slice(ny + gy + k, ny + gy + k + 1), cols),
                 (a, slice(gy + k, gy + k + 1), cols), (a, slice(ny + gy - 1, ny + gy), cols))
    return f


def conservation_sums(f):
    """Compensated interior sums of (m1, m2, mom_x, mom_y, rhoE) times cell volume."""
    q = f.interior
    vol = f.grid.cell_volume
    return np.array([math.fsum(q[k].ravel()) * vol for k in (IM1, IM2, IMX, IMY, IE)])
