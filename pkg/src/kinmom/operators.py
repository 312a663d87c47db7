"""Sparse finite-difference operators for a charged particle in a static
electromagnetic field.

All operators are complex CSR matrices acting on wavefunctions over a
uniform grid with Dirichlet-zero boundaries.  Derivatives are second-order
central differences; composite operators (Hamiltonian, force, torque) are
assembled from the same discrete factors so that operator identities hold
at the sharpest level the discretization allows.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .fields import Poly3, ZERO
from .fields import X as PX, Y as PY, Z as PZ
from .tensors import Index3, nonzero_eps_pairs

_COORD_POLY = (PX, PY, PZ)


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class StateSpecError(ValueError):
    """A requested test state violates a grid margin or width precondition."""


@dataclass(frozen=True)
class Grid:
    """Uniform 1-3 dimensional grid, equal spacing h on every axis.

    Points sit symmetrically around `origin`; the Dirichlet wall lies half a
    step beyond the outermost point plus the ghost layer, i.e. at distance
    (n + 1) h / 2 from the origin along an axis with n points.  Axes beyond
    `ndim` have coordinate identically zero and zero derivative.
    """

    shape: tuple
    h: float
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        raw = self.shape if isinstance(self.shape, (tuple, list)) else (self.shape,)
        shape = tuple(int(n) for n in raw)
        if not 1 <= len(shape) <= 3:
            raise ValueError(f"grid needs 1-3 axes, got {len(shape)}")
        if any(n < 8 for n in shape):
            raise ValueError(f"each axis needs at least 8 points, got {shape}")
        h = float(self.h)
        if h <= 0:
            raise ValueError(f"grid spacing must be positive, got {h}")
        origin = tuple(float(v) for v in self.origin)
        if len(origin) != 3:
            raise ValueError("origin must have three components")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "origin", origin)

    @property
    def ndim(self):
        return len(self.shape)

    @property
    def npoints(self):
        n = 1
        for s in self.shape:
            n *= s
        return n

    @property
    def measure(self):
        return self.h ** self.ndim

    def axis_points(self, axis0):
        n = self.shape[axis0]
        return self.origin[axis0] + (np.arange(n) - (n - 1) / 2.0) * self.h

    def face_distance(self, axis0):
        """Distance from origin to the Dirichlet plane along one axis."""
        return (self.shape[axis0] + 1) * self.h / 2.0

    @cached_property
    def _flat_coords(self):
        axes = [self.axis_points(a) for a in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = [m.ravel() for m in mesh]
        while len(coords) < 3:
            coords.append(np.zeros(self.npoints))
        return tuple(coords)

    def coordinate(self, axis):
        """Flat coordinate array for 1-based axis; zeros beyond ndim."""
        return self._flat_coords[Index3(axis) - 1]

    def evaluate(self, poly):
        """Sample a Poly3 on every grid point (flat float array)."""
        return poly.on_grid(*self._flat_coords)

    def describe(self):
        return f"{self.ndim}D {'x'.join(str(n) for n in self.shape)} h={self.h:g}"


class WaveFunction:
    """Complex amplitudes on a grid with the discrete L2 inner product."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values, check=True):
        values = np.asarray(values, dtype=np.complex128).ravel()
        if values.size != grid.npoints:
            raise ValueError(
                f"amplitude vector has {values.size} entries for {grid.npoints} points")
        if check and not np.all(np.isfinite(values)):
            raise ValueError("wavefunction amplitudes must be finite")
        self.grid = grid
        self.values = values

    def norm(self):
        return float(np.linalg.norm(self.values)) * self.grid.measure ** 0.5

    def inner(self, other):
        """<self|other> = h^d sum conj(self) * other."""
        if self.grid != other.grid:
            raise GridMismatchError("inner product across different grids")
        return complex(np.vdot(self.values, other.values)) * self.grid.measure

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return WaveFunction(self.grid, self.values / n, check=False)

    def copy(self):
        return WaveFunction(self.grid, self.values.copy(), check=False)

    def __add__(self, other):
        if self.grid != other.grid:
            raise GridMismatchError("adding wavefunctions on different grids")
        return WaveFunction(self.grid, self.values + other.values, check=False)

    def __sub__(self, other):
        if self.grid != other.grid:
            raise GridMismatchError("subtracting wavefunctions on different grids")
        return WaveFunction(self.grid, self.values - other.values, check=False)

    def __mul__(self, scalar):
        return WaveFunction(self.grid, self.values * scalar, check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return WaveFunction(self.grid, -self.values, check=False)


class LinearOperator:
    """Sparse CSR operator on grid wavefunctions with a Hermiticity tag.

    The `hermitian` flag is metadata set by the builders: it is only set
    when the assembled matrix is Hermitian by construction (up to float
    rounding), not merely Hermitian in the continuum limit.
    """

    __slots__ = ("grid", "matrix", "label", "hermitian")

    def __init__(self, grid, matrix, label="", hermitian=False):
        matrix = sp.csr_matrix(matrix, dtype=np.complex128)
        n = grid.npoints
        if matrix.shape != (n, n):
            raise ValueError(f"matrix shape {matrix.shape} does not match grid ({n})")
        self.grid = grid
        self.matrix = matrix
        self.label = label
        self.hermitian = hermitian

    def apply(self, psi):
        if psi.grid != self.grid:
            raise GridMismatchError(
                f"operator {self.label!r} applied to a state on a different grid")
        return WaveFunction(self.grid, self.matrix @ psi.values, check=False)

    __call__ = apply

    def __matmul__(self, other):
        if self.grid != other.grid:
            raise GridMismatchError("composing operators on different grids")
        return LinearOperator(self.grid, self.matrix @ other.matrix,
                              f"({self.label}@{other.label})")

    def __add__(self, other):
        if self.grid != other.grid:
            raise GridMismatchError("adding operators on different grids")
        return LinearOperator(self.grid, self.matrix + other.matrix,
                              f"({self.label}+{other.label})",
                              self.hermitian and other.hermitian)

    def __sub__(self, other):
        if self.grid != other.grid:
            raise GridMismatchError("subtracting operators on different grids")
        return LinearOperator(self.grid, self.matrix - other.matrix,
                              f"({self.label}-{other.label})",
                              self.hermitian and other.hermitian)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        return LinearOperator(self.grid, self.matrix * scalar,
                              f"({scalar:g}*{self.label})" if scalar.imag == 0
                              else f"({scalar}*{self.label})",
                              self.hermitian and scalar.imag == 0.0)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def relabeled(self, label, hermitian=None):
        return LinearOperator(self.grid, self.matrix, label,
                              self.hermitian if hermitian is None else hermitian)

    def hermiticity_defect(self, pairs=10, seed=0):
        """Worst relative asymmetry of <phi|O psi> vs conj(<psi|O phi>)."""
        rng = np.random.default_rng(seed)
        n = self.grid.npoints
        worst = 0.0
        for _ in range(pairs):
            phi = WaveFunction(self.grid,
                               rng.standard_normal(n) + 1j * rng.standard_normal(n),
                               check=False).normalized()
            psi = WaveFunction(self.grid,
                               rng.standard_normal(n) + 1j * rng.standard_normal(n),
                               check=False).normalized()
            a = phi.inner(self.apply(psi))
            b = psi.inner(self.apply(phi))
            scale = max(abs(a), abs(b), 1e-300)
            worst = max(worst, abs(a - np.conj(b)) / scale)
        return worst


def identity_operator(grid):
    return LinearOperator(grid, sp.identity(grid.npoints, format="csr"),
                          "1", hermitian=True)


def _kron_chain(grid, axis0, mat1d):
    out = None
    for a in range(grid.ndim):
        block = mat1d if a == axis0 else sp.identity(grid.shape[a], format="csr")
        out = block if out is None else sp.kron(out, block, format="csr")
    return out


def _diag(grid, values):
    return sp.diags(values, 0, shape=(grid.npoints, grid.npoints), format="csr")


def position_operator(grid, axis):
    """Diagonal coordinate operator x_axis (zero beyond grid dimension)."""
    axis = Index3(axis)
    return LinearOperator(grid, _diag(grid, grid.coordinate(axis)),
                          f"x{axis}", hermitian=True)


def derivative_operator(grid, axis):
    """Central-difference d/dx_axis with Dirichlet-zero ghost values.

    The raw matrix is real antisymmetric, so -i*hbar times it is Hermitian.
    Beyond the grid dimension the derivative is identically zero.
    """
    axis = Index3(axis)
    n = grid.npoints
    if axis > grid.ndim:
        return LinearOperator(grid, sp.csr_matrix((n, n)), f"D{axis}")
    na = grid.shape[axis - 1]
    w = 1.0 / (2.0 * grid.h)
    stencil = sp.diags([np.full(na - 1, w), np.full(na - 1, -w)], [1, -1],
                       format="csr")
    return LinearOperator(grid, _kron_chain(grid, axis - 1, stencil), f"D{axis}")


def momentum_operator(grid, axis, hbar=1.0):
    """Canonical momentum p_axis = -i hbar d_axis."""
    d = derivative_operator(grid, axis)
    return LinearOperator(grid, (-1j * float(hbar)) * d.matrix,
                          f"p{axis}", hermitian=True)


def pi_operator(grid, cfg, axis):
    """Kinetic momentum pi_axis = -i hbar d_axis - (q/c) A_axis."""
    axis = Index3(axis)
    p = momentum_operator(grid, axis, cfg.hbar)
    a_pol = cfg.A[axis - 1]
    mat = p.matrix
    if not a_pol.is_zero:
        mat = mat - float(cfg.q / cfg.c) * _diag(grid, grid.evaluate(a_pol))
    return LinearOperator(grid, mat, f"pi{axis}", hermitian=True)


def l_operator(grid, axis, hbar=1.0):
    """Canonical angular momentum l_axis = eps_ijk x_j p_k."""
    axis = Index3(axis)
    mat = None
    for j, k, sign in nonzero_eps_pairs(axis):
        term = _diag(grid, grid.coordinate(j)) @ momentum_operator(grid, k, hbar).matrix
        term = sign * term
        mat = term if mat is None else mat + term
    return LinearOperator(grid, mat, f"l{axis}", hermitian=True)


def L_operator(grid, cfg, axis, assembly="diagonal"):
    """Kinetic angular momentum L_axis = l_axis - (q/c) eps_ijk x_j A_k.

    assembly='diagonal' subtracts the exact polynomial diagonal from l_axis;
    assembly='pi' composes eps_ijk x_j pi_k from the same discrete factors.
    Both routes produce entrywise-identical matrices up to float rounding.
    """
    axis = Index3(axis)
    if assembly == "pi":
        mat = None
        for j, k, sign in nonzero_eps_pairs(axis):
            term = _diag(grid, grid.coordinate(j)) @ pi_operator(grid, cfg, k).matrix
            term = sign * term
            mat = term if mat is None else mat + term
        return LinearOperator(grid, mat, f"L{axis}", hermitian=True)
    if assembly != "diagonal":
        raise ValueError(f"unknown assembly {assembly!r}; expected diagonal or pi")
    base = l_operator(grid, axis, cfg.hbar)
    poly = ZERO
    for j, k, sign in nonzero_eps_pairs(axis):
        poly = poly + sign * (_COORD_POLY[j - 1] * cfg.A[k - 1])
    mat = base.matrix
    if not poly.is_zero:
        mat = mat - float(cfg.q / cfg.c) * _diag(grid, grid.evaluate(poly))
    return LinearOperator(grid, mat, f"L{axis}", hermitian=True)


def _second_derivative_matrix(grid, axis0):
    """Ghost-extended composition of two central differences along one axis.

    On the infinite lattice D(D psi) is the wide 2h stencil
    (psi_{j+2} - 2 psi_j + psi_{j-2}) / 4h^2; truncating to the box with
    zero ghost values keeps the -2 diagonal on every row.  The plain product
    of two truncated D matrices would instead soften the outermost rows
    (losing the path through the ghost layer), which weakens the wall and
    admits spurious low-lying edge modes.
    """
    n = grid.shape[axis0]
    w = 1.0 / (4.0 * grid.h ** 2)
    stencil = sp.diags(
        [np.full(n - 2, w), np.full(n, -2.0 * w), np.full(n - 2, w)],
        [2, 0, -2], format="csr")
    return _kron_chain(grid, axis0, stencil)


def kinetic_square(grid, cfg):
    """The summed square pi_i pi_i as one sparse matrix.

    Expanded as -hbar^2 D^2 + i hbar (q/c)(D A + A D) + (q/c)^2 A^2 with the
    pure second-derivative block composed through the ghost layer; the mixed
    and diagonal blocks are plain products, which already agree with the
    ghost-extended composition because the ghost amplitudes vanish.
    """
    hbar = float(cfg.hbar)
    qc = float(cfg.q / cfg.c)
    n = grid.npoints
    mat = sp.csr_matrix((n, n), dtype=np.complex128)
    for i in (1, 2, 3):
        if i <= grid.ndim:
            mat = mat - hbar ** 2 * _second_derivative_matrix(grid, i - 1)
        a_pol = cfg.A[i - 1]
        if a_pol.is_zero:
            continue
        a = _diag(grid, grid.evaluate(a_pol))
        if i <= grid.ndim:
            d = derivative_operator(grid, i).matrix
            mat = mat + (1j * hbar * qc) * (d @ a + a @ d)
        mat = mat + qc ** 2 * (a @ a)
    return mat


def hamiltonian_operator(grid, cfg):
    """H = pi_i pi_i / 2m + q V, assembled from the discrete pi factors."""
    mat = kinetic_square(grid, cfg) / (2.0 * float(cfg.m))
    if not cfg.V.is_zero:
        mat = mat + float(cfg.q) * _diag(grid, grid.evaluate(cfg.V))
    return LinearOperator(grid, mat, "Hamiltonian", hermitian=True)


def magnetic_force_operator(grid, cfg, axis, form="anticommutator"):
    """Magnetic force component M_axis in one of its three operator forms.

    definition:     (i / 2 m hbar) [pi_i pi_i, pi_axis]  (nested sparse products)
    anticommutator: (q / 2 m c) eps_kmn {pi_m, Hmag_n}
    expanded:       (q / m c) eps_kmn Hmag_n pi_m
                    - (i hbar q / 2 m c) eps_kmn d_m Hmag_n

    The three agree exactly in the continuum; on the grid the definition
    form differs from the other two at second order, and the expanded form
    equals the anticommutator form exactly only for uniform Hmag (which is
    also when the expanded form is exactly Hermitian).
    """
    axis = Index3(axis)
    n = grid.npoints
    hbar, q, m, c = (float(cfg.hbar), float(cfg.q), float(cfg.m), float(cfg.c))
    if form == "definition":
        ksq = kinetic_square(grid, cfg)
        pim = pi_operator(grid, cfg, axis).matrix
        mat = (1j / (2.0 * m * hbar)) * (ksq @ pim - pim @ ksq)
        return LinearOperator(grid, mat, f"M{axis}[definition]", hermitian=True)
    if form == "anticommutator":
        mat = sp.csr_matrix((n, n), dtype=np.complex128)
        for mm, nn, sign in nonzero_eps_pairs(axis):
            h_pol = cfg.Hmag[nn - 1]
            if h_pol.is_zero:
                continue
            hd = _diag(grid, grid.evaluate(h_pol))
            pim = pi_operator(grid, cfg, mm).matrix
            mat = mat + (sign * q / (2.0 * m * c)) * (pim @ hd + hd @ pim)
        return LinearOperator(grid, mat, f"M{axis}[anticommutator]", hermitian=True)
    if form == "expanded":
        mat = sp.csr_matrix((n, n), dtype=np.complex128)
        for mm, nn, sign in nonzero_eps_pairs(axis):
            h_pol = cfg.Hmag[nn - 1]
            if not h_pol.is_zero:
                hd = _diag(grid, grid.evaluate(h_pol))
                pim = pi_operator(grid, cfg, mm).matrix
                mat = mat + (sign * q / (m * c)) * (hd @ pim)
            dh_pol = h_pol.diff(mm)
            if not dh_pol.is_zero:
                mat = mat - (sign * 1j * hbar * q / (2.0 * m * c)) * _diag(
                    grid, grid.evaluate(dh_pol))
        return LinearOperator(grid, mat, f"M{axis}[expanded]",
                              hermitian=cfg.uniform_H)
    raise ValueError(
        f"unknown magnetic-force form {form!r}; "
        "expected definition, anticommutator or expanded")


def lorentz_force_operator(grid, cfg, axis):
    """f_axis = M_axis (expanded form) + q E_axis."""
    axis = Index3(axis)
    f = magnetic_force_operator(grid, cfg, axis, "expanded")
    e_pol = cfg.E[axis - 1]
    mat = f.matrix
    if not e_pol.is_zero:
        mat = mat + float(cfg.q) * _diag(grid, grid.evaluate(e_pol))
    return LinearOperator(grid, mat, f"f{axis}", hermitian=f.hermitian)


def torque_operator(grid, cfg, axis):
    """T_axis = (1/2) eps_ijk (x_j f_k + f_k x_j) with f the Lorentz force."""
    axis = Index3(axis)
    n = grid.npoints
    mat = sp.csr_matrix((n, n), dtype=np.complex128)
    for j, k, sign in nonzero_eps_pairs(axis):
        fk = lorentz_force_operator(grid, cfg, k).matrix
        if fk.nnz == 0:
            continue
        xj = _diag(grid, grid.coordinate(j))
        mat = mat + (0.5 * sign) * (xj @ fk + fk @ xj)
    return LinearOperator(grid, mat, f"T{axis}", hermitian=cfg.uniform_H)


def commutator_apply(op_a, op_b, psi):
    """(AB - BA) psi via four operator-vector applications."""
    if op_a.grid != op_b.grid or op_a.grid != psi.grid:
        raise GridMismatchError("commutator operands live on different grids")
    return op_a.apply(op_b.apply(psi)) - op_b.apply(op_a.apply(psi))


def anticommutator_apply(op_a, op_b, psi):
    """(AB + BA) psi via four operator-vector applications."""
    if op_a.grid != op_b.grid or op_a.grid != psi.grid:
        raise GridMismatchError("anticommutator operands live on different grids")
    return op_a.apply(op_b.apply(psi)) + op_b.apply(op_a.apply(psi))


def expectation(op, psi, check_normalization=True):
    """<psi|O|psi> with the discrete inner product; psi must be normalized."""
    if check_normalization:
        n = psi.norm()
        if abs(n - 1.0) > 1e-8:
            raise ValueError(f"expectation needs a normalized state, norm = {n!r}")
    return psi.inner(op.apply(psi))


def gaussian_packet(grid, center, sigma, wavevector=(0.0, 0.0, 0.0), vortex_m=0):
    """Normalized Gaussian test state, optionally boosted and vortex-phased.

    amplitude = N exp(-|r - c|^2 / 4 sigma^2) exp(i k.r) exp(i m phi)

    Preconditions: sigma >= 3h and the center at least 4 sigma away from
    every Dirichlet face, so that boundary truncation stays below the
    discretization error.
    """
    center = tuple(float(v) for v in center)
    wavevector = tuple(float(v) for v in wavevector)
    if len(center) != 3 or len(wavevector) != 3:
        raise ValueError("center and wavevector must have three components")
    sigma = float(sigma)
    if sigma < 3.0 * grid.h * (1.0 - 1e-12):
        raise StateSpecError(
            f"packet width sigma = {sigma:g} is below the 3h = {3 * grid.h:g} minimum")
    for a in range(grid.ndim):
        margin = grid.face_distance(a) - abs(center[a] - grid.origin[a])
        if margin < 4.0 * sigma * (1.0 - 1e-12):
            raise StateSpecError(
                f"margin {margin:g} to the {'xyz'[a]} face is below the "
                f"4 sigma = {4 * sigma:g} minimum")
    for a in range(grid.ndim, 3):
        if wavevector[a] != 0.0:
            raise StateSpecError(
                f"wavevector component along absent axis {'xyz'[a]} must be zero")
    if vortex_m and grid.ndim < 2:
        raise StateSpecError("vortex phases need at least two grid axes")

    coords = [grid.coordinate(a + 1) for a in range(3)]
    r2 = sum((coords[a] - center[a]) ** 2 for a in range(grid.ndim))
    phase = sum(wavevector[a] * coords[a] for a in range(grid.ndim))
    values = np.exp(-r2 / (4.0 * sigma**2) + 1j * phase)
    if vortex_m:
        phi = np.arctan2(coords[1] - center[1], coords[0] - center[0])
        values = values * np.exp(1j * int(vortex_m) * phi)
    return WaveFunction(grid, values).normalized()


def gauge_phase(psi, cfg, chi):
    """Apply the local phase exp(i q chi / hbar c) that accompanies A -> A + grad chi."""
    theta = float(cfg.q / (cfg.hbar * cfg.c))
    values = psi.values * np.exp(1j * theta * psi.grid.evaluate(chi))
    return WaveFunction(psi.grid, values, check=False)
