"""Adaptive integration of the Galerkin systems with augmented energy states.

Two systems share one integrator core:

  * the truncated Navier-Stokes system, where the advecting field is the
    evolving solution itself (self drift), and
  * the linear drift problem dz/dt + nu A z + B(u, z) = g with a prescribed
    drift u, either stored as a trajectory or taken as the state itself.

The diagonal Stokes part -nu*lambda_j is integrated exactly through a
per-step integrating factor (Lawson transformation) wrapped around an
embedded Dormand-Prince 5(4) pair; only the triad term and the forcing are
treated explicitly.  A purely linear run (single shear mode) is therefore
reproduced to rounding, and high eigenvalues do not throttle the step size
at desk scale.

Two quadrature states ride along in the same ODE vector:

    visc(t) = nu * int_tau^t |y|_V^2,      work(t) = int_tau^t <f, y>,

so energy-ledger residuals reflect integrator error only, never output-grid
resolution.

Dense output is stored on a uniform grid of ``dense_output_points`` times.
Between grid points the trajectory interpolates with a cubic Hermite rule
applied to the integrating-factor-transformed state, which keeps pure decay
exact and matches the interpolation used for stored drifts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import BasisSet, SpectralField, project
from .trilinear import TriadTensor, b_apply_coeffs

__all__ = [
    "Forcing",
    "DriftSpec",
    "SolverConfig",
    "SolverError",
    "Trajectory",
    "simulate_nse",
    "solve_problem_c",
    "restrict",
    "save_trajectory",
    "load_trajectory",
]


class SolverError(RuntimeError):
    """Integration failure; carries the time at which the step collapsed."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class SolverConfig:
    """Viscosity and integrator controls for one run."""

    nu: float
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.05
    dense_output_points: int = 401

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.max_step <= 0:
            raise ValueError(f"max_step must be positive, got {self.max_step}")
        if self.dense_output_points < 2:
            raise ValueError("dense_output_points must be at least 2")

    def ledger_tol(self, scale: float = 1.0) -> float:
        """Absolute tolerance for energy-ledger residuals at these controls.

        Local errors of at most rel_tol*scale + abs_tol per accepted step
        accumulate over at most ~1e4 steps at desk scale.
        """
        return 1e4 * (self.rel_tol * scale + self.abs_tol)


@dataclass(frozen=True)
class Forcing:
    """Exterior force split into a dual-space part and an H part.

    Both parts are callables t -> coefficient array; the pairing with a
    field sums the two.  Keeping the parts separate mirrors how the work
    integral treats an L2-V* plus L1-H force.
    """

    dual_part: Callable[[float], np.ndarray] | None = None
    h_part: Callable[[float], np.ndarray] | None = None

    @classmethod
    def zero(cls) -> "Forcing":
        return cls()

    @classmethod
    def modal(
        cls,
        size: int,
        index: int,
        amplitude: float,
        omega: float = 0.0,
        part: str = "dual",
    ) -> "Forcing":
        """Single-mode sinusoid amplitude*cos(omega*t) on one coefficient."""
        if not 0 <= index < size:
            raise ValueError(f"mode index {index} outside [0, {size})")
        if part not in ("dual", "h"):
            raise ValueError(f"part must be 'dual' or 'h', got {part!r}")

        def waveform(t: float) -> np.ndarray:
            out = np.zeros(size)
            out[index] = amplitude * np.cos(omega * t)
            return out

        return cls(dual_part=waveform) if part == "dual" else cls(h_part=waveform)

    @property
    def is_zero(self) -> bool:
        return self.dual_part is None and self.h_part is None

    def coeffs_at(self, t: float, size: int) -> np.ndarray:
        out = np.zeros(size)
        for part in (self.dual_part, self.h_part):
            if part is not None:
                arr = np.asarray(part(t), dtype=float)
                n = min(size, len(arr))
                out[:n] += arr[:n]
        return out


# ---------------------------------------------------------------------------
# trajectories


def _hermite_weights(theta: np.ndarray):
    t2 = theta * theta
    t3 = t2 * theta
    return 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + theta, -2 * t3 + 3 * t2, t3 - t2


def _hermite_dweights(theta: np.ndarray):
    t2 = theta * theta
    return 6 * t2 - 6 * theta, 3 * t2 - 4 * theta + 1, -6 * t2 + 6 * theta, 3 * t2 - 2 * theta


@dataclass
class Trajectory:
    """Time grid, coefficient snapshots and augmented energy accumulators.

    ``states`` holds the active coefficients (columns j < m; higher modes
    are identically zero).  ``derivs`` holds time derivatives of the
    augmented state [a_1..a_m, visc, work] on the same grid and supports
    the cubic Hermite dense-output rule.  Treat instances as immutable.
    """

    basis: BasisSet
    m: int
    grid: np.ndarray
    states: np.ndarray  # (n, m)
    visc_accum: np.ndarray  # (n,)
    work_accum: np.ndarray  # (n,)
    derivs: np.ndarray  # (n, m + 2)
    nu: float
    rel_tol: float
    abs_tol: float

    def __post_init__(self):
        if len(self.grid) < 2:
            raise ValueError("trajectory needs at least two grid points")
        if not np.all(np.diff(self.grid) > 0):
            raise ValueError("trajectory grid must be strictly increasing")

    @property
    def tau(self) -> float:
        return float(self.grid[0])

    @property
    def t_end(self) -> float:
        return float(self.grid[-1])

    def _aug(self) -> np.ndarray:
        cached = self.__dict__.get("_aug_cache")
        if cached is None:
            cached = np.column_stack([self.states, self.visc_accum, self.work_accum])
            self.__dict__["_aug_cache"] = cached
        return cached

    def _interp(self, ts, derivative: bool = False) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        lo, hi = self.grid[0], self.grid[-1]
        if np.any(ts < lo - 1e-9) or np.any(ts > hi + 1e-9):
            raise ValueError(f"time outside trajectory interval [{lo}, {hi}]")
        ts = np.clip(ts, lo, hi)
        idx = np.clip(np.searchsorted(self.grid, ts, side="right") - 1, 0, len(self.grid) - 2)
        h = self.grid[idx + 1] - self.grid[idx]
        theta = (ts - self.grid[idx]) / h
        aug = self._aug()
        y0, y1 = aug[idx], aug[idx + 1]
        d0, d1 = self.derivs[idx], self.derivs[idx + 1]
        hh = h[:, None]
        if derivative:
            w00, w10, w01, w11 = _hermite_dweights(theta)
            return (
                w00[:, None] * y0 + w10[:, None] * hh * d0 + w01[:, None] * y1 + w11[:, None] * hh * d1
            ) / hh
        w00, w10, w01, w11 = _hermite_weights(theta)
        return w00[:, None] * y0 + w10[:, None] * hh * d0 + w01[:, None] * y1 + w11[:, None] * hh * d1

    def coeffs_at(self, t: float) -> np.ndarray:
        """Active coefficients at time t via the dense-output interpolant."""
        return self._interp(t)[0, : self.m]

    def accums_at(self, t: float) -> tuple[float, float]:
        row = self._interp(t)[0]
        return float(row[self.m]), float(row[self.m + 1])

    def field_at(self, t: float) -> SpectralField:
        coeffs = np.zeros(self.basis.m)
        coeffs[: self.m] = self.coeffs_at(t)
        return SpectralField(self.basis, coeffs)

    def field(self, i: int) -> SpectralField:
        coeffs = np.zeros(self.basis.m)
        coeffs[: self.m] = self.states[i]
        return SpectralField(self.basis, coeffs)

    def norms_h(self) -> np.ndarray:
        """H norm of the state at every grid time."""
        return np.sqrt(np.einsum("ij,ij->i", self.states, self.states))

    def covers(self, tau: float, t_end: float, slack: float = 1e-9) -> bool:
        return self.tau <= tau + slack and self.t_end >= t_end - slack


# ---------------------------------------------------------------------------
# the Lawson / Dormand-Prince 5(4) core

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

# Bound on (decay rate * step) so the per-step growth factors exp(+d*c*h)
# used by the transformed stages and dense output stay mild.
_STIFF_CAP = 4.0

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass
class _Step:
    t0: float
    h: float
    y0: np.ndarray
    n0: np.ndarray  # nonlinear part at t0
    y1: np.ndarray
    n1: np.ndarray  # nonlinear part at t0 + h


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(t0, y0, n0, decay, h_cap, rel_tol, abs_tol, nonlinear):
    f0 = -decay * y0 + n0
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_cap)
    y1 = y0 + h0 * f0
    f1 = -decay * y1 + nonlinear(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, h_cap)


def _integrate(
    y0_active: np.ndarray,
    tau: float,
    t_end: float,
    decay_active: np.ndarray,
    nonlinear: Callable[[float, np.ndarray], np.ndarray],
    cfg: SolverConfig,
) -> list[_Step]:
    """Advance the augmented state from tau to t_end, returning the accepted
    steps with their endpoint nonlinear evaluations (dense-output support)."""
    n_aug = len(y0_active) + 2
    decay = np.zeros(n_aug)
    decay[: len(decay_active)] = decay_active
    d_max = float(decay.max(initial=0.0))

    y = np.concatenate([y0_active, [0.0, 0.0]])
    t = tau
    n_cur = nonlinear(t, y)
    span = t_end - tau
    h_cap = min(cfg.max_step, span, _STIFF_CAP / d_max if d_max > 0 else np.inf)
    h = _initial_step(t, y, n_cur, decay, h_cap, cfg.rel_tol, cfg.abs_tol, nonlinear)

    steps: list[_Step] = []
    K = np.empty((7, n_aug))
    rejected = False
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise SolverError(f"step size underflow at t={t!r}", time=t)

        ch = _DP_C * h
        E = np.exp(-np.outer(ch, decay))  # stage decay factors
        K[0] = n_cur
        for j in range(1, 7):
            V = y + h * (_DP_A[j] @ K[:j])
            Yj = E[j] * V
            n_stage = nonlinear(t + ch[j], Yj)
            K[j] = n_stage / E[j]
        y_new = E[6] * (y + h * (_DP_B @ K))
        err_vec = E[6] * (h * (_DP_ERR @ K))
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)

        if not np.isfinite(err):
            rejected = True
            h *= _MIN_FACTOR
            continue
        if err > 1.0:
            rejected = True
            h = h * max(_MIN_FACTOR, _SAFETY * err**-0.2)
            continue

        # accepted; stage 7 sits at the step end (FSAL), so n_stage is the
        # nonlinear part at t + h
        n_new = n_stage
        steps.append(_Step(t, h, y.copy(), n_cur.copy(), y_new.copy(), n_new.copy()))
        t = t + h
        y = y_new
        n_cur = n_new
        factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        if rejected:
            factor = min(factor, 1.0)
        rejected = False
        h = min(h * factor, h_cap)
    return steps


def _sample_steps(steps: list[_Step], decay: np.ndarray, ts: np.ndarray):
    """Evaluate states and derivatives at the output times ts (sorted).

    Within each step the state is e^{-decay*(t-t0)} times a cubic Hermite in
    the transformed variable, so pure exponential decay is sampled exactly.
    """
    n_aug = len(steps[0].y0)
    out_y = np.empty((len(ts), n_aug))
    out_d = np.empty((len(ts), n_aug))
    t0s = np.array([s.t0 for s in steps])
    idx = np.clip(np.searchsorted(t0s, ts, side="right") - 1, 0, len(steps) - 1)
    for i in np.unique(idx):
        s = steps[i]
        sel = np.nonzero(idx == i)[0]
        theta = (ts[sel] - s.t0) / s.h
        grow = np.exp(decay * s.h)
        v0, s0 = s.y0, s.n0
        v1, s1 = grow * s.y1, grow * s.n1
        w00, w10, w01, w11 = _hermite_weights(theta)
        v = (
            w00[:, None] * v0
            + w10[:, None] * (s.h * s0)
            + w01[:, None] * v1
            + w11[:, None] * (s.h * s1)
        )
        d00, d10, d01, d11 = _hermite_dweights(theta)
        dv = (
            d00[:, None] * v0
            + d10[:, None] * (s.h * s0)
            + d01[:, None] * v1
            + d11[:, None] * (s.h * s1)
        ) / s.h
        damp = np.exp(-np.outer(theta * s.h, decay))
        y = damp * v
        out_y[sel] = y
        out_d[sel] = -decay * y + damp * dv
    return out_y, out_d


# ---------------------------------------------------------------------------
# drift handling and the public entry points


@dataclass(frozen=True)
class DriftSpec:
    """Advecting field of the linear problem: a stored trajectory, or the
    evolving state itself when ``trajectory`` is None."""

    trajectory: Trajectory | None = None

    @classmethod
    def self_drift(cls) -> "DriftSpec":
        return cls(None)

    @classmethod
    def stored(cls, traj: Trajectory) -> "DriftSpec":
        return cls(traj)

    @property
    def is_self(self) -> bool:
        return self.trajectory is None


def _check_interval(interval) -> tuple[float, float]:
    tau, t_end = float(interval[0]), float(interval[1])
    if not tau < t_end:
        raise ValueError(f"need tau < T, got [{tau}, {t_end}]")
    return tau, t_end


def _run(
    y0: SpectralField,
    forcing: Forcing,
    m: int,
    interval,
    cfg: SolverConfig,
    tensor: TriadTensor,
    drift: DriftSpec,
) -> Trajectory:
    basis = tensor.basis
    if m < 1 or m > basis.m:
        raise ValueError(f"truncation level {m} outside [1, {basis.m}]")
    if y0.basis.m != basis.m:
        raise ValueError("initial field basis does not match tensor basis")
    tau, t_end = _check_interval(interval)

    if drift.is_self:
        m_u = m
    else:
        u_traj = drift.trajectory
        if u_traj.basis is not basis and not basis.compatible_with(u_traj.basis):
            raise ValueError("drift basis does not match tensor basis")
        if not u_traj.covers(tau, t_end):
            raise ValueError(
                f"drift interval [{u_traj.tau}, {u_traj.t_end}] does not cover [{tau}, {t_end}]"
            )
        m_u = u_traj.m
    arrays = tensor.restricted(m, m_u)

    lambdas = basis.lambdas[:m]
    a0 = project(y0, m).coeffs[:m]
    nu = cfg.nu

    def nonlinear(t: float, x: np.ndarray) -> np.ndarray:
        a = x[:m]
        u = a if drift.is_self else drift.trajectory.coeffs_at(t)
        fj = forcing.coeffs_at(t, m)
        out = np.empty(m + 2)
        out[:m] = fj - b_apply_coeffs(u, a, arrays, m)
        out[m] = nu * float(np.dot(lambdas * a, a))
        out[m + 1] = float(np.dot(fj, a))
        return out

    steps = _integrate(a0, tau, t_end, nu * lambdas, nonlinear, cfg)
    decay = np.concatenate([nu * lambdas, [0.0, 0.0]])
    grid = np.linspace(tau, t_end, cfg.dense_output_points)
    ys, ds = _sample_steps(steps, decay, grid)
    return Trajectory(
        basis=basis,
        m=m,
        grid=grid,
        states=ys[:, :m],
        visc_accum=ys[:, m],
        work_accum=ys[:, m + 1],
        derivs=ds,
        nu=nu,
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
    )


def simulate_nse(
    y_tau: SpectralField,
    f: Forcing,
    m: int,
    interval,
    cfg: SolverConfig,
    tensor: TriadTensor,
) -> Trajectory:
    """Integrate the level-m Navier-Stokes truncation from P_m y_tau.

    The advecting field is the evolving solution itself; the viscous and
    work integrals are carried as extra ODE components.
    """
    return _run(y_tau, f, m, interval, cfg, tensor, DriftSpec.self_drift())


def solve_problem_c(
    drift,
    g: Forcing,
    z_tau: SpectralField,
    m: int,
    interval,
    cfg: SolverConfig,
    tensor: TriadTensor,
) -> Trajectory:
    """Integrate the linear drift problem dz/dt + nu A z + B(u, z) = g.

    ``drift`` is a Trajectory (or DriftSpec.stored thereof) whose dense
    output covers the requested interval; values between its grid points
    come from the cubic Hermite rule.
    """
    if isinstance(drift, Trajectory):
        drift = DriftSpec.stored(drift)
    if drift.is_self:
        raise ValueError("solve_problem_c needs a stored drift trajectory")
    return _run(z_tau, g, m, interval, cfg, tensor, drift)


def restrict(traj: Trajectory, t1: float, t2: float) -> Trajectory:
    """Restriction to [t1, t2] with accumulators rebased to zero at t1."""
    eps = 1e-9 * max(1.0, abs(traj.t_end))
    if t1 < traj.tau - eps or t2 > traj.t_end + eps or not t1 < t2:
        raise ValueError(
            f"restriction [{t1}, {t2}] not inside [{traj.tau}, {traj.t_end}]"
        )
    grid = traj.grid
    inside = (grid > t1 + eps) & (grid < t2 - eps)
    new_grid = [t1] + list(grid[inside]) + [t2]

    n = len(new_grid)
    aug = np.empty((n, traj.m + 2))
    der = np.empty((n, traj.m + 2))
    aug[1 : n - 1] = traj._aug()[inside]
    der[1 : n - 1] = traj.derivs[inside]
    for pos, t in ((0, t1), (n - 1, t2)):
        exact = np.nonzero(np.abs(grid - t) <= eps)[0]
        if len(exact):
            aug[pos] = traj._aug()[exact[0]]
            der[pos] = traj.derivs[exact[0]]
            new_grid[pos] = float(grid[exact[0]])
        else:
            aug[pos] = traj._interp(t)[0]
            der[pos] = traj._interp(t, derivative=True)[0]

    visc = aug[:, traj.m] - aug[0, traj.m]
    work = aug[:, traj.m + 1] - aug[0, traj.m + 1]
    return Trajectory(
        basis=traj.basis,
        m=traj.m,
        grid=np.array(new_grid),
        states=aug[:, : traj.m],
        visc_accum=visc,
        work_accum=work,
        derivs=der,
        nu=traj.nu,
        rel_tol=traj.rel_tol,
        abs_tol=traj.abs_tol,
    )


# ---------------------------------------------------------------------------
# serialization


def save_trajectory(traj: Trajectory, path) -> None:
    """Write the trajectory; .npz selects the binary variant, else CSV.

    Field order is identical in both: t, a_1..a_m, visc_accum, work_accum,
    after a header carrying basis hash, m, nu, interval and tolerances.
    """
    path = str(path)
    if path.endswith(".npz"):
        np.savez_compressed(
            path,
            basis_hash=np.array(traj.basis.ordering_hash),
            m=np.array(traj.m),
            nu=np.array(traj.nu),
            rel_tol=np.array(traj.rel_tol),
            abs_tol=np.array(traj.abs_tol),
            t=traj.grid,
            states=traj.states,
            visc_accum=traj.visc_accum,
            work_accum=traj.work_accum,
        )
        return
    with open(path, "w") as fh:
        fh.write("# nsledger trajectory v1\n")
        fh.write(
            f"# basis_hash={traj.basis.ordering_hash} m={traj.m} nu={traj.nu!r}"
            f" tau={traj.tau!r} t_end={traj.t_end!r}"
            f" rel_tol={traj.rel_tol!r} abs_tol={traj.abs_tol!r}\n"
        )
        cols = ["t"] + [f"a_{j}" for j in range(1, traj.m + 1)] + ["visc_accum", "work_accum"]
        fh.write(",".join(cols) + "\n")
        for i, t in enumerate(traj.grid):
            row = [repr(float(t))]
            row += [repr(float(x)) for x in traj.states[i]]
            row += [repr(float(traj.visc_accum[i])), repr(float(traj.work_accum[i]))]
            fh.write(",".join(row) + "\n")


def _spline_derivatives(grid: np.ndarray, aug: np.ndarray) -> np.ndarray:
    # files carry no derivative columns; reconstruct interpolation slopes
    # with a C2 cubic spline, order-consistent with the Hermite rule
    from scipy.interpolate import CubicSpline

    if len(grid) >= 4:
        return CubicSpline(grid, aug, axis=0).derivative()(grid)
    return np.gradient(aug, grid, axis=0)


def load_trajectory(path, basis: BasisSet) -> Trajectory:
    """Read a saved trajectory and rebuild its interpolation support."""
    path = str(path)
    if path.endswith(".npz"):
        data = np.load(path)
        if str(data["basis_hash"]) != basis.ordering_hash:
            raise ValueError(f"{path}: trajectory was written against a different basis")
        m = int(data["m"])
        grid = data["t"]
        states = data["states"]
        visc, work = data["visc_accum"], data["work_accum"]
        nu = float(data["nu"])
        rel_tol, abs_tol = float(data["rel_tol"]), float(data["abs_tol"])
    else:
        meta = {}
        rows = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            key, val = tok.split("=", 1)
                            meta[key] = val
                    continue
                if line.startswith("t,"):
                    continue
                try:
                    rows.append([float(x) for x in line.split(",")])
                except ValueError:
                    raise ValueError(f"{path}: malformed row at line {lineno}")
        if "basis_hash" not in meta or "m" not in meta:
            raise ValueError(f"{path}: missing trajectory header")
        if meta["basis_hash"] != basis.ordering_hash:
            raise ValueError(f"{path}: trajectory was written against a different basis")
        m = int(meta["m"])
        if not rows:
            raise ValueError(f"{path}: no data rows")
        width = m + 3
        for i, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")
        table = np.array(rows)
        grid = table[:, 0]
        states = table[:, 1 : m + 1]
        visc, work = table[:, m + 1], table[:, m + 2]
        nu = float(meta.get("nu", "nan"))
        rel_tol = float(meta.get("rel_tol", "1e-10"))
        abs_tol = float(meta.get("abs_tol", "1e-12"))
    if m > basis.m:
        raise ValueError(f"{path}: trajectory level m={m} exceeds basis size {basis.m}")
    aug = np.column_stack([states, visc, work])
    derivs = _spline_derivatives(np.asarray(grid, dtype=float), aug)
    return Trajectory(
        basis=basis,
        m=m,
        grid=np.asarray(grid, dtype=float),
        states=np.asarray(states, dtype=float),
        visc_accum=np.asarray(visc, dtype=float),
        work_accum=np.asarray(work, dtype=float),
        derivs=derivs,
        nu=nu,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )
