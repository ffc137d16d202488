"""Time-dependent Schrodinger propagation with a retarded local time.

Classical (instantaneous) evolution uses the Crank-Nicolson scheme

    (I + i*dt/(2*hbar) H) psi_{n+1} = (I - i*dt/(2*hbar) H) psi_n,

with H = -hbar^2/(2m) Laplacian + U and fixed-zero boundary values.  The
scheme is unconditionally stable and, for real U, preserves the L2 norm to
round-off.  The modified evolution is obtained from the classical one by
evaluating each point at its own local time theta = t - t_P, where t_P is
the arrival time of the perturbation front; points the front has not yet
reached hold the unperturbed value (zero for states that start as pure
perturbations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .constants import CODATA2018, PhysicalConstants
from .eikonal import TraveltimeField
from .fields import ComplexField, Grid, ScalarField, l2_norm_squared

__all__ = [
    "QuantumProblem",
    "ClassicalSolution",
    "StationaryState",
    "ConvergenceError",
    "HistoryWindowError",
    "step_classical",
    "propagate_classical",
    "evaluate_modified",
    "difference_estimate",
    "stationary_modified_wavefunction",
    "make_plane_wave",
    "gaussian_packet",
    "box_eigenmode",
]

# Iterative-solver settings for multi-dimensional steps.  The tolerance is
# far below the CN truncation error so the solver never dominates the
# error budget; 500 iterations is generous for the diagonally dominant
# systems CN produces at practical dt.
_BICGSTAB_RTOL = 1e-13
_BICGSTAB_MAXITER = 500

# Relative slack when matching a requested time against stored snapshot
# times (absorbs accumulation round-off in k*dt).
_TIME_MATCH_RTOL = 1e-9


class ConvergenceError(RuntimeError):
    """Iterative linear solve failed to reach the requested tolerance."""


class HistoryWindowError(RuntimeError):
    """A local-time lookup fell outside the retained snapshot window."""


@dataclass(frozen=True, eq=False)
class QuantumProblem:
    """A single-particle problem on a grid: potential, mass and step size.

    The potential is in joules on the same grid as the states; boundary
    values are clamped to zero (hard-wall box), so any state fed to the
    stepper must vanish on the outermost cell layer.
    """

    grid: Grid
    potential: ScalarField
    mass: float
    dt: float
    constants: PhysicalConstants = CODATA2018

    def __post_init__(self) -> None:
        if self.potential.grid.shape != self.grid.shape:
            raise ValueError(
                f"potential grid shape {self.potential.grid.shape} does not "
                f"match problem grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.potential.values)):
            raise ValueError("potential contains non-finite values")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")


@dataclass(frozen=True, eq=False)
class StationaryState:
    """An energy eigenstate with its frequency nu = E/h."""

    psi: ComplexField
    energy: float
    constants: PhysicalConstants = CODATA2018
    nu: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nu", self.energy / self.constants.h)


def _boundary_mask(shape: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        sl_lo = [slice(None)] * len(shape)
        sl_hi = [slice(None)] * len(shape)
        sl_lo[axis] = 0
        sl_hi[axis] = -1
        mask[tuple(sl_lo)] = True
        mask[tuple(sl_hi)] = True
    return mask


def _require_zero_boundary(state: ComplexField) -> None:
    mask = _boundary_mask(state.grid.shape)
    if np.any(state.values[mask] != 0.0):
        raise ValueError(
            "state does not vanish on the boundary cell layer; the stepper "
            "assumes hard-wall (fixed zero) boundaries"
        )


class _Stepper1D:
    """Tridiagonal CN stepper; direct banded solve on the interior."""

    def __init__(self, problem: QuantumProblem) -> None:
        hbar = problem.constants.hbar
        dx = problem.grid.spacing[0]
        u = problem.potential.values[1:-1]
        m = u.shape[0]
        hop = -(hbar**2) / (2.0 * problem.mass * dx * dx)
        diag_h = -2.0 * hop + u
        c = 1j * problem.dt / (2.0 * hbar)

        # A in banded storage for solve_banded((1, 1), ...): rows are the
        # superdiagonal, diagonal, subdiagonal.
        ab = np.zeros((3, m), dtype=np.complex128)
        ab[0, 1:] = c * hop
        ab[1, :] = 1.0 + c * diag_h
        ab[2, :-1] = c * hop
        self._ab = ab
        self._b_diag = 1.0 - c * diag_h
        self._b_off = -c * hop

    def step(self, values: np.ndarray) -> np.ndarray:
        x = values[1:-1]
        rhs = self._b_diag * x
        rhs[:-1] += self._b_off * x[1:]
        rhs[1:] += self._b_off * x[:-1]
        out = np.zeros_like(values)
        out[1:-1] = scipy.linalg.solve_banded((1, 1), self._ab, rhs)
        return out


class _StepperND:
    """Sparse CN stepper for 2-D and 3-D grids; BiCGSTAB on the interior."""

    def __init__(self, problem: QuantumProblem) -> None:
        hbar = problem.constants.hbar
        shape_int = tuple(n - 2 for n in problem.grid.shape)
        interior = tuple(slice(1, -1) for _ in shape_int)
        u = problem.potential.values[interior].ravel()

        lap = scipy.sparse.csr_matrix((u.size, u.size), dtype=np.float64)
        for axis, (n_ax, dx) in enumerate(zip(shape_int, problem.grid.spacing)):
            t_ax = scipy.sparse.diags(
                [-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n_ax, n_ax)
            ) / (dx * dx)
            factor = [scipy.sparse.identity(n) for n in shape_int]
            factor[axis] = t_ax
            term = factor[0]
            for f in factor[1:]:
                term = scipy.sparse.kron(term, f)
            lap = lap + scipy.sparse.csr_matrix(term)

        h_mat = (hbar**2 / (2.0 * problem.mass)) * lap + scipy.sparse.diags(u)
        c = 1j * problem.dt / (2.0 * hbar)
        eye = scipy.sparse.identity(u.size, dtype=np.complex128, format="csr")
        self._a = (eye + c * h_mat).tocsr()
        self._b = (eye - c * h_mat).tocsr()
        self._interior = interior
        self._shape_int = shape_int

    def step(self, values: np.ndarray) -> np.ndarray:
        x = values[self._interior].ravel()
        rhs = self._b @ x
        sol, info = scipy.sparse.linalg.bicgstab(
            self._a,
            rhs,
            x0=x,
            rtol=_BICGSTAB_RTOL,
            atol=0.0,
            maxiter=_BICGSTAB_MAXITER,
        )
        if info != 0:
            raise ConvergenceError(
                f"BiCGSTAB failed to converge to rtol={_BICGSTAB_RTOL} "
                f"within {_BICGSTAB_MAXITER} iterations (info={info}); "
                "reduce dt or refine the grid"
            )
        out = np.zeros_like(values)
        out[self._interior] = sol.reshape(self._shape_int)
        return out


@lru_cache(maxsize=16)
def _stepper_for(problem: QuantumProblem):
    if problem.grid.dims == 1:
        return _Stepper1D(problem)
    return _StepperND(problem)


def step_classical(state: ComplexField, problem: QuantumProblem) -> ComplexField:
    """Advance a state by one CN step of problem.dt.

    The state must live on the problem grid and vanish on the boundary
    cell layer.  The returned field carries time_stamp advanced by dt.
    """
    if state.grid.shape != problem.grid.shape:
        raise ValueError(
            f"state grid shape {state.grid.shape} does not match problem "
            f"grid shape {problem.grid.shape}"
        )
    _require_zero_boundary(state)
    new_values = _stepper_for(problem).step(state.values)
    return ComplexField(problem.grid, new_values, state.time_stamp + problem.dt)


@dataclass(frozen=True, eq=False)
class ClassicalSolution:
    """A run of CN snapshots at uniform spacing problem.dt.

    Snapshots are the retained tail of the full history: snapshot j holds
    the state at global step first_step + j.  initial_norm is the squared
    L2 norm at step 0, kept so norm drift stays checkable after early
    snapshots have been dropped from a windowed run.
    """

    problem: QuantumProblem
    snapshots: tuple[ComplexField, ...]
    initial_norm: float
    first_step: int = 0
    history_window: int | None = None

    def __post_init__(self) -> None:
        if not self.snapshots:
            raise ValueError("a solution needs at least one snapshot")
        dt = self.problem.dt
        for j in range(1, len(self.snapshots)):
            gap = self.snapshots[j].time_stamp - self.snapshots[j - 1].time_stamp
            if not math.isclose(gap, dt, rel_tol=1e-9):
                raise ValueError(
                    f"snapshots {j - 1} and {j} are spaced {gap} apart; "
                    f"expected uniform spacing dt={dt}"
                )
        if not (self.initial_norm > 0.0 and math.isfinite(self.initial_norm)):
            raise ValueError("initial_norm must be positive and finite")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time_stamp for s in self.snapshots])

    def norm_drift(self) -> float:
        """Largest relative deviation of any retained norm from step 0."""
        norms = [l2_norm_squared(s) for s in self.snapshots]
        return max(abs(n - self.initial_norm) for n in norms) / self.initial_norm

    def snapshot_at(self, t: float) -> ComplexField:
        """The retained snapshot whose time matches t to round-off."""
        times = self.times
        j = int(np.argmin(np.abs(times - t)))
        tol = _TIME_MATCH_RTOL * max(self.problem.dt, abs(t))
        if abs(times[j] - t) > tol:
            raise HistoryWindowError(
                f"no snapshot at t={t}; nearest retained time is {times[j]}"
            )
        return self.snapshots[j]


def propagate_classical(
    initial: ComplexField,
    problem: QuantumProblem,
    n_steps: int,
    history_window: int | None = None,
) -> ClassicalSolution:
    """Run n_steps CN steps, retaining the last history_window snapshots.

    history_window=None keeps all n_steps + 1 snapshots.  A retarded
    evaluation at global time t needs every snapshot back to t - max(t_P),
    so the window must cover ceil(max(t_P)/dt) + 2 snapshots; too-small
    windows surface later as HistoryWindowError from evaluate_modified.
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be non-negative, got {n_steps}")
    if history_window is not None and history_window < 2:
        raise ValueError(
            f"history_window must be at least 2 to bracket any local time, "
            f"got {history_window}"
        )
    initial_norm = l2_norm_squared(initial)
    if initial_norm == 0.0:
        raise ValueError("initial state has zero norm")

    snapshots = [initial]
    state = initial
    for _ in range(n_steps):
        state = step_classical(state, problem)
        snapshots.append(state)
        if history_window is not None and len(snapshots) > history_window:
            del snapshots[0]
    first_step = n_steps + 1 - len(snapshots)
    return ClassicalSolution(
        problem=problem,
        snapshots=tuple(snapshots),
        initial_norm=initial_norm,
        first_step=first_step,
        history_window=history_window,
    )


def _stacked_values(solution: ClassicalSolution) -> np.ndarray:
    return np.stack([s.values.reshape(-1) for s in solution.snapshots])


def evaluate_modified(
    solution: ClassicalSolution,
    traveltime: TraveltimeField,
    t: float,
) -> ComplexField:
    """Evaluate the retarded state Psi(x, t - t_P(x)) from stored snapshots.

    Where the front has not yet arrived (t < t_P) the value is exactly
    zero.  Local times that coincide with a snapshot time reproduce that
    snapshot's values bit for bit; in particular t_P = 0 everywhere gives
    back the classical state unchanged.  Local times strictly between
    snapshots are interpolated linearly in time.
    """
    grid = solution.problem.grid
    if traveltime.grid.shape != grid.shape:
        raise ValueError(
            f"traveltime grid shape {traveltime.grid.shape} does not match "
            f"solution grid shape {grid.shape}"
        )
    times = solution.times
    theta = t - traveltime.t_P
    reached = theta >= 0.0

    theta_flat = theta.reshape(-1)
    reached_flat = reached.reshape(-1)
    # Clamp unreached points to a valid lookup time; their values are
    # overwritten with zero below.
    theta_q = np.where(reached_flat, theta_flat, times[0])

    slack = _TIME_MATCH_RTOL * solution.problem.dt
    if np.any(theta_q < times[0] - slack) or np.any(theta_q > times[-1] + slack):
        raise HistoryWindowError(
            f"local times span [{theta_q.min()}, {theta_q.max()}] but the "
            f"retained snapshots cover [{times[0]}, {times[-1]}]; enlarge "
            "history_window, extend the run, or reduce t"
        )
    theta_q = np.clip(theta_q, times[0], times[-1])

    lo = np.clip(np.searchsorted(times, theta_q, side="right") - 1, 0, len(times) - 2)
    gap = times[lo + 1] - times[lo]
    w = (theta_q - times[lo]) / gap
    # Snap near-exact hits (within the time-match tolerance) so local
    # times that are whole multiples of dt survive accumulated rounding
    # in the snapshot time stamps.
    w = np.where(w * gap <= slack, 0.0, w)
    w = np.where((1.0 - w) * gap <= slack, 1.0, w)

    stacked = _stacked_values(solution)
    cols = np.arange(theta_q.size)
    lower = stacked[lo, cols]
    upper = stacked[lo + 1, cols]
    # Exact endpoints bypass the blend so snapshot hits are bit-identical.
    mixed = np.where(
        w == 0.0, lower, np.where(w == 1.0, upper, (1.0 - w) * lower + w * upper)
    )
    out = np.where(reached_flat, mixed, 0.0 + 0.0j).reshape(grid.shape)
    return ComplexField(grid, out, t)


def difference_estimate(
    solution: ClassicalSolution,
    traveltime: TraveltimeField,
    t: float,
) -> tuple[ScalarField, ScalarField]:
    """Actual and first-order-predicted retardation difference at time t.

    Returns (|Psi_classical - Psi_modified|, |dPsi/dt| * t_P), both at
    snapshot time t.  The time derivative is the centered difference of
    the neighbouring snapshots, so t must sit strictly inside the retained
    window; the retarded lookup additionally needs history back to
    t - max(t_P).  Both fields vanish together as t_P goes to zero.
    """
    times = solution.times
    j = int(np.argmin(np.abs(times - t)))
    tol = _TIME_MATCH_RTOL * max(solution.problem.dt, abs(t))
    if abs(times[j] - t) > tol:
        raise HistoryWindowError(
            f"t={t} is not a retained snapshot time; nearest is {times[j]}"
        )
    if j == 0 or j == len(times) - 1:
        raise HistoryWindowError(
            f"t={t} is an endpoint of the retained window; the centered "
            "time derivative needs a snapshot on each side"
        )
    dt = solution.problem.dt
    dpsi_dt = (solution.snapshots[j + 1].values - solution.snapshots[j - 1].values) / (
        2.0 * dt
    )
    predicted = np.abs(dpsi_dt) * traveltime.t_P
    modified = evaluate_modified(solution, traveltime, times[j])
    actual = np.abs(solution.snapshots[j].values - modified.values)
    grid = solution.problem.grid
    return ScalarField(grid, actual), ScalarField(grid, predicted)


def stationary_modified_wavefunction(
    state: StationaryState,
    traveltime: TraveltimeField,
    t: float,
) -> ComplexField:
    """Retarded evolution of an energy eigenstate, evaluated analytically.

    psi(x) exp(-2 pi i nu (t - t_P(x))) where the front has arrived,
    exactly zero elsewhere.  Uses the closed-form phase instead of stored
    snapshots, so it is exact for any t.
    """
    grid = state.psi.grid
    if traveltime.grid.shape != grid.shape:
        raise ValueError(
            f"traveltime grid shape {traveltime.grid.shape} does not match "
            f"state grid shape {grid.shape}"
        )
    theta = t - traveltime.t_P
    phase = np.exp(-2.0j * np.pi * state.nu * theta)
    values = np.where(theta >= 0.0, state.psi.values * phase, 0.0 + 0.0j)
    return ComplexField(grid, values, t)


def make_plane_wave(
    grid: Grid,
    nu: float,
    wavenumber: float,
    t: float,
    axis: int = 0,
) -> ComplexField:
    """exp(2 pi i (k x - nu t)) along one axis; k and nu are in cycles.

    Useful as an analytic snapshot source: a tuple of these at uniform
    times forms a ClassicalSolution without running the stepper.
    """
    if not 0 <= axis < grid.dims:
        raise ValueError(f"axis {axis} out of range for {grid.dims}-d grid")
    x = grid.coordinate_arrays()[axis]
    values = np.exp(2.0j * np.pi * (wavenumber * x - nu * t))
    return ComplexField(grid, np.broadcast_to(values, grid.shape).copy(), t)


def gaussian_packet(
    grid: Grid,
    center: Sequence[float],
    width: float,
    wavenumber: float = 0.0,
    axis: int = 0,
) -> ComplexField:
    """A normalized Gaussian wave packet with a plane-wave carrier.

    width is the position-space standard deviation; wavenumber is the
    carrier in cycles per unit length along the given axis.  The boundary
    cell layer is zeroed so the packet is a valid hard-wall initial state;
    keep the packet several widths away from the walls for that clamp to
    be negligible.
    """
    center = tuple(float(c) for c in center)
    if len(center) != grid.dims:
        raise ValueError(
            f"center has {len(center)} components for a {grid.dims}-d grid"
        )
    if width <= 0.0:
        raise ValueError(f"width must be positive, got {width}")
    coords = grid.coordinate_arrays()
    r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center))
    values = np.exp(-r2 / (4.0 * width**2)).astype(np.complex128)
    values = values * np.exp(2.0j * np.pi * wavenumber * coords[axis])
    values[_boundary_mask(grid.shape)] = 0.0
    norm = math.sqrt(l2_norm_squared(ComplexField(grid, values)))
    if norm == 0.0:
        raise ValueError("packet vanishes on this grid; widen it or move it")
    return ComplexField(grid, values / norm)


def box_eigenmode(
    grid: Grid,
    mode_numbers: Sequence[int],
    mass: float = CODATA2018.m_e,
    constants: PhysicalConstants = CODATA2018,
) -> StationaryState:
    """A hard-wall box eigenstate on the grid, with its continuum energy.

    mode_numbers are the per-axis quantum numbers (1, 2, ...).  The box
    spans the grid extent along each axis, so the state vanishes exactly
    on the boundary cell layer.  The energy is the continuum eigenvalue
    sum_a (n_a pi hbar / L_a)^2 / (2 m); the discrete operator's
    eigenvalue differs at O(dx^2), which matters when comparing CN phases
    against exp(-i E t / hbar).
    """
    mode_numbers = tuple(int(n) for n in mode_numbers)
    if len(mode_numbers) != grid.dims:
        raise ValueError(
            f"{len(mode_numbers)} mode numbers for a {grid.dims}-d grid"
        )
    if any(n < 1 for n in mode_numbers):
        raise ValueError(f"mode numbers must be >= 1, got {mode_numbers}")
    if not (mass > 0.0 and math.isfinite(mass)):
        raise ValueError(f"mass must be positive and finite, got {mass}")
    coords = grid.coordinate_arrays()
    values = np.ones(grid.shape, dtype=np.complex128)
    energy = 0.0
    for axis, n_mode in enumerate(mode_numbers):
        length = (grid.shape[axis] - 1) * grid.spacing[axis]
        rel = coords[axis] - grid.origin[axis]
        values = values * np.sin(n_mode * np.pi * rel / length)
        energy += (n_mode * np.pi * constants.hbar / length) ** 2 / (2.0 * mass)
    # sin(n*pi) evaluates to ~1e-16, not 0; clamp so the hard-wall
    # precondition holds exactly.
    values[_boundary_mask(grid.shape)] = 0.0
    psi = ComplexField(grid, values)
    norm = math.sqrt(l2_norm_squared(psi))
    psi = ComplexField(grid, values / norm)
    return StationaryState(psi=psi, energy=energy, constants=constants)
