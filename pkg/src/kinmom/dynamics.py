"""Time propagation and eigenstates: unitary Crank-Nicolson stepping,
observable tracking, the dynamic torque balance, and ground-state solvers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import (L_operator, LinearOperator, WaveFunction, _diag,
                        hamiltonian_operator, l_operator, momentum_operator,
                        pi_operator, position_operator, torque_operator)
from .verify import ResidualReport, _relative


class SolverError(RuntimeError):
    """A linear or eigenvalue solve failed to reach its residual target."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class PropagationDomainError(RuntimeError):
    """The packet reached the Dirichlet boundary during propagation."""


@dataclass
class PropagationTrace:
    """Per-step record of tracked expectation values and norm drift."""

    times: list = field(default_factory=list)
    observables: dict = field(default_factory=dict)
    norm_drift: list = field(default_factory=list)

    def column(self, label):
        return self.observables[label]

    def write_csv(self, stream):
        labels = sorted(self.observables)
        writer = csv.writer(stream)
        writer.writerow(["time"]
                        + [f"Re[{lb}]" for lb in labels]
                        + [f"Im[{lb}]" for lb in labels]
                        + ["norm_drift"])
        for n, t in enumerate(self.times):
            row = [repr(t)]
            row += [repr(self.observables[lb][n].real) for lb in labels]
            row += [repr(self.observables[lb][n].imag) for lb in labels]
            row.append(repr(self.norm_drift[n]))
            writer.writerow(row)


class CrankNicolson:
    """Unitary Cayley-form propagator for a fixed Hermitian Hamiltonian.

    Each step solves (1 + i H dt / 2 hbar) psi' = (1 - i H dt / 2 hbar) psi.
    The sparse path factorizes once and polishes every solve by iterative
    refinement down to `solve_tol`; `dense=True` switches to a dense LU
    solve, kept as an independent cross-check for small grids.
    """

    def __init__(self, ham, dt, hbar=1.0, solve_tol=1e-10, max_refine=30,
                 dense=False):
        if not ham.hermitian:
            raise ValueError("Crank-Nicolson needs a Hermitian Hamiltonian")
        self.ham = ham
        self.dt = float(dt)
        if self.dt == 0.0:
            raise ValueError("time step must be nonzero")
        self.hbar = float(hbar)
        self.solve_tol = float(solve_tol)
        self.max_refine = int(max_refine)
        n = ham.grid.npoints
        eye = sp.identity(n, format="csr", dtype=np.complex128)
        w = 0.5j * self.dt / self.hbar
        self._forward = (eye + w * ham.matrix).tocsr()
        self._backward = (eye - w * ham.matrix).tocsr()
        self.dense = bool(dense)
        if self.dense:
            self._lu = scipy.linalg.lu_factor(self._forward.toarray())
        else:
            self._lu = spla.splu(self._forward.tocsc())

    def _solve(self, rhs):
        if self.dense:
            x = scipy.linalg.lu_solve(self._lu, rhs)
        else:
            x = self._lu.solve(rhs)
        bnorm = np.linalg.norm(rhs)
        if bnorm == 0.0:
            return x
        for _ in range(self.max_refine):
            res = rhs - self._forward @ x
            if np.linalg.norm(res) <= self.solve_tol * bnorm:
                return x
            if self.dense:
                x = x + scipy.linalg.lu_solve(self._lu, res)
            else:
                x = x + self._lu.solve(res)
        final = np.linalg.norm(rhs - self._forward @ x) / bnorm
        raise SolverError(
            f"Crank-Nicolson solve stalled at relative residual {final:.3e} "
            f"after {self.max_refine} refinements (target {self.solve_tol:.1e})")

    def step(self, psi):
        if psi.grid != self.ham.grid:
            raise ValueError("state grid does not match the propagator grid")
        return WaveFunction(psi.grid, self._solve(self._backward @ psi.values),
                            check=False)


def crank_nicolson_step(ham, psi, dt, hbar=1.0, **kwargs):
    """Single Cayley step; build a CrankNicolson instance for repeated use."""
    return CrankNicolson(ham, dt, hbar=hbar, **kwargs).step(psi)


def observable_operator(grid, cfg, label):
    """Resolve a trace label to its operator.

    Labels: x|y|z, x^2|y^2|z^2, px..pz, pix..piz, lx..lz, Lx..Lz, Tx..Tz, H.
    """
    axes = {"x": 1, "y": 2, "z": 3}
    if label == "H":
        return hamiltonian_operator(grid, cfg)
    if label in axes:
        return position_operator(grid, axes[label])
    if len(label) == 3 and label.endswith("^2") and label[0] in axes:
        a = axes[label[0]]
        sq = grid.coordinate(a) ** 2
        return LinearOperator(grid, _diag(grid, sq), label, hermitian=True)
    if len(label) == 2 and label[0] in "plLT" and label[1] in axes:
        a = axes[label[1]]
        kind = label[0]
        if kind == "p":
            return momentum_operator(grid, a, float(cfg.hbar))
        if kind == "l":
            return l_operator(grid, a, float(cfg.hbar))
        if kind == "L":
            return L_operator(grid, cfg, a)
        return torque_operator(grid, cfg, a)
    if len(label) == 3 and label.startswith("pi") and label[2] in axes:
        return pi_operator(grid, cfg, axes[label[2]])
    raise ValueError(f"unknown observable label {label!r}")


def _boundary_mask(grid):
    mask = np.zeros(grid.shape, dtype=bool)
    for a in range(grid.ndim):
        index = [slice(None)] * grid.ndim
        index[a] = 0
        mask[tuple(index)] = True
        index[a] = -1
        mask[tuple(index)] = True
    return mask.ravel()


def propagate_and_track(cfg, grid, psi0, dt, steps, observables,
                        solve_tol=1e-10, boundary_tol=1e-8):
    """Propagate `steps` Crank-Nicolson steps, recording expectations.

    The tracked expectation values are taken against the instantaneous
    normalized state; `norm_drift` records |norm - 1| per sample.  If more
    than `boundary_tol` of the probability reaches the outermost grid layer
    the run aborts: the Dirichlet wall would reflect the packet and the
    recorded trace would be unphysical.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("need at least one step")
    ops = {label: observable_operator(grid, cfg, label) for label in observables}
    prop = CrankNicolson(hamiltonian_operator(grid, cfg), dt,
                         hbar=float(cfg.hbar), solve_tol=solve_tol)
    edge = _boundary_mask(grid)
    trace = PropagationTrace(observables={label: [] for label in ops})
    psi = psi0.copy()
    for n in range(steps + 1):
        if n:
            psi = prop.step(psi)
        edge_mass = float(np.sum(np.abs(psi.values[edge]) ** 2)) * grid.measure
        if edge_mass > boundary_tol:
            raise PropagationDomainError(
                f"boundary layer holds {edge_mass:.3e} probability at step {n} "
                f"(limit {boundary_tol:.1e}); shorten the run or enlarge the grid")
        trace.times.append(n * float(dt))
        trace.norm_drift.append(abs(psi.norm() - 1.0))
        for label, op in ops.items():
            trace.observables[label].append(psi.inner(op.apply(psi)))
    return trace


def verify_angular_ehrenfest_dynamic(cfg, grid, psi0, dt, steps,
                                     tolerance=1e-2, return_trace=False):
    """Centered-difference d<L_i>/dt against <T_i> along a propagated orbit.

    Components are the z one on 2D grids and all three in 3D.  The maximum
    interior-sample deviation is normalized by the largest torque magnitude
    seen on the trace (absolute when the torque vanishes identically).
    """
    components = (3,) if grid.ndim == 2 else (1, 2, 3)
    labels = [f"L{'xyz'[i - 1]}" for i in components]
    labels += [f"T{'xyz'[i - 1]}" for i in components]
    labels.append("H")
    trace = propagate_and_track(cfg, grid, psi0, dt, steps, labels)
    details = {}
    worst = 0.0
    worst_scale = 1.0
    for i in components:
        lvals = np.array(trace.column(f"L{'xyz'[i - 1]}")).real
        tvals = np.array(trace.column(f"T{'xyz'[i - 1]}")).real
        fd = (lvals[2:] - lvals[:-2]) / (2.0 * float(dt))
        deviation = float(np.max(np.abs(fd - tvals[1:-1])))
        rel, scale = _relative(deviation, [float(np.max(np.abs(tvals)))])
        details[f"component{i}"] = rel
        if rel >= worst:
            worst, worst_scale = rel, scale
    energies = np.array(trace.column("H")).real
    details["max_norm_drift"] = float(np.max(trace.norm_drift))
    details["energy_drift"] = float(
        np.max(np.abs(energies - energies[0])) / max(abs(energies[0]), 1e-300))
    report = ResidualReport("torque-balance-dynamic", worst, tolerance,
                            worst_scale, grid.describe(),
                            f"dt={dt:g} steps={steps}", details)
    return (report, trace) if return_trace else report


def dense_ground_state(ham):
    """Dense eigensolver oracle; only sensible for small grids."""
    n = ham.grid.npoints
    if n > 4096:
        raise ValueError(f"dense oracle limited to 4096 points, got {n}")
    w, v = np.linalg.eigh(ham.matrix.toarray())
    state = WaveFunction(ham.grid, v[:, 0], check=False).normalized()
    return float(w[0]), state


def _rayleigh(ham, psi):
    return float(np.real(np.vdot(psi, ham.matrix @ psi)))


def ground_state(ham, tol=1e-8, max_iter=120, smoothing_rounds=24, seed=11):
    """Lowest eigenpair, to relative eigenresidual ||H psi - E psi||/|E| <= tol.

    Imaginary-time phase: repeated (1 + tau H)^-1 smoothing with tau grown
    geometrically, which limits to inverse-power iteration and keeps driving
    the Rayleigh quotient down even through near-degenerate clusters; a step
    that raises the quotient is rejected and tau backed off (guards operators
    that are not positive definite).  A Rayleigh-shift inverse iteration then
    polishes the eigenpair to the residual target.

    Raises SolverError with the residual history if the iteration cap is hit.
    """
    grid = ham.grid
    if not ham.hermitian:
        raise ValueError("ground_state needs a Hermitian operator")
    n = grid.npoints
    rng = np.random.default_rng(seed)
    psi = np.ones(n) + 0.05 * rng.standard_normal(n) + 0.0j
    psi /= np.linalg.norm(psi)
    eye = sp.identity(n, format="csc", dtype=np.complex128)

    scale = float(np.max(np.abs(ham.matrix).sum(axis=1)))
    tau = 4.0 / scale if scale > 0 else 1.0
    energy = _rayleigh(ham, psi)
    for _ in range(int(smoothing_rounds)):
        try:
            smoother = spla.splu((eye + tau * ham.matrix).tocsc())
            for _ in range(4):
                psi_new = smoother.solve(psi)
                norm = np.linalg.norm(psi_new)
                if not np.isfinite(norm) or norm == 0.0:
                    raise RuntimeError("smoothing diverged")
                psi_new /= norm
        except RuntimeError:
            tau *= 0.25
            continue
        energy_new = _rayleigh(ham, psi_new)
        if np.isfinite(energy_new) and energy_new <= energy + 1e-14 * abs(energy):
            psi, energy = psi_new, energy_new
            tau *= 4.0
        else:
            tau *= 0.25

    history = []
    shift_pad = max(1e-3 * abs(energy), 1e-12)
    for _ in range(int(max_iter)):
        hpsi = ham.matrix @ psi
        energy = float(np.real(np.vdot(psi, hpsi)))
        residual = float(np.linalg.norm(hpsi - energy * psi))
        denom = max(abs(energy), 1e-300)
        history.append(residual / denom)
        if history[-1] <= tol:
            state = WaveFunction(grid, psi, check=False).normalized()
            return energy, state
        shifted = (ham.matrix - (energy - shift_pad) * eye).tocsc()
        try:
            psi = spla.splu(shifted).solve(psi)
        except RuntimeError:
            # exactly singular shift: nudge and retry once
            shifted = (ham.matrix - (energy - 10 * shift_pad) * eye).tocsc()
            psi = spla.splu(shifted).solve(psi)
        psi /= np.linalg.norm(psi)
        shift_pad = max(0.1 * shift_pad, 1e-14)
    raise SolverError(
        f"ground-state iteration stalled at relative residual {history[-1]:.3e} "
        f"(target {tol:.1e})", history)
