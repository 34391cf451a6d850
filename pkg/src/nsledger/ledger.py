"""Energy bookkeeping and verdicts for the invariants of Galerkin runs.

The central object is the Leray-Hopf functional

    V(t) = 1/2 |y(t)|^2 + nu int_tau^t |y|_V^2 - int_tau^t <f, y>,

assembled from a trajectory's augmented accumulators.  Exact solutions keep
V constant along Galerkin runs; the checks here turn "constant" and
"nonincreasing" into PASS/FAIL verdicts with explicit worst violations and
witnesses, and add the bounded-variation, right-continuity and projection
defect diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .basis import SpectralField, norm, project
from .solver import Trajectory

__all__ = [
    "EnergyLedger",
    "Verdict",
    "PsiDiagnostic",
    "compute_ledger",
    "check_energy_equality",
    "check_energy_inequality",
    "total_variation",
    "sample_norm_squared",
    "right_continuity_modulus",
    "psi_sequence",
    "psi_profile",
    "save_ledger",
    "load_ledger",
]


@dataclass(frozen=True)
class EnergyLedger:
    """Sampled energy columns of one run: kinetic, viscous, work, V."""

    times: np.ndarray
    kinetic: np.ndarray
    visc: np.ndarray
    work: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if n == 0:
            raise ValueError("ledger is empty")
        for name in ("kinetic", "visc", "work"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"ledger column {name} has wrong length")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("ledger times must be strictly increasing")

    @property
    def v_values(self) -> np.ndarray:
        return self.kinetic + self.visc - self.work


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check: PASS iff worst_violation <= tolerance."""

    status: str
    worst_violation: float
    witness: object
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self) -> dict:
        witness = self.witness
        if isinstance(witness, tuple):
            witness = list(witness)
        return {
            "status": self.status,
            "worst_violation": self.worst_violation,
            "witness": witness,
            "tolerance": self.tolerance,
        }


def _verdict(worst: float, witness, tol: float) -> Verdict:
    status = "PASS" if worst <= tol else "FAIL"
    return Verdict(status, float(worst), witness, float(tol))


def compute_ledger(traj: Trajectory, tau: float | None = None) -> EnergyLedger:
    """Assemble the ledger of a trajectory from its augmented accumulators."""
    if tau is not None and abs(tau - traj.tau) > 1e-9 * max(1.0, abs(traj.tau)):
        raise ValueError(f"ledger start {tau} does not match trajectory start {traj.tau}")
    kinetic = 0.5 * np.einsum("ij,ij->i", traj.states, traj.states)
    return EnergyLedger(
        times=traj.grid.copy(),
        kinetic=kinetic,
        visc=traj.visc_accum.copy(),
        work=traj.work_accum.copy(),
    )


def check_energy_equality(ledger: EnergyLedger, tol: float) -> Verdict:
    """PASS iff V stays within tol of its initial value at every time."""
    v = ledger.v_values
    dev = np.abs(v - v[0])
    i = int(np.argmax(dev))
    return _verdict(float(dev[i]), float(ledger.times[i]), tol)


def check_energy_inequality(ledger: EnergyLedger, tol: float) -> Verdict:
    """PASS iff V(t) <= V(s) + tol whenever t >= s.

    Single scan with a running minimum: the worst pair always takes s at
    the running minimum seen so far.
    """
    v = ledger.v_values
    t = ledger.times
    run_min = v[0]
    s_at_min = t[0]
    worst = -np.inf
    witness = (float(t[0]), float(t[0]))
    for i in range(len(v)):
        rise = v[i] - run_min
        if rise > worst:
            worst = rise
            witness = (float(s_at_min), float(t[i]))
        if v[i] < run_min:
            run_min = v[i]
            s_at_min = t[i]
    return _verdict(float(worst), witness, tol)


def total_variation(values) -> float:
    """Sum of absolute increments of a sampled series."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("series is empty")
    return float(np.sum(np.abs(np.diff(v))))


def sample_norm_squared(traj: Trajectory, refinement: int = 1) -> np.ndarray:
    """|y(t)|^2 sampled on the trajectory grid subdivided refinement-fold.

    Evaluated with the dense-output interpolant, so the total variation of
    the returned series can only grow (up to rounding) as the grid refines.
    """
    if refinement < 1:
        raise ValueError("refinement factor must be >= 1")
    if refinement == 1:
        ts = traj.grid
    else:
        pieces = [
            np.linspace(t0, t1, refinement + 1)[:-1]
            for t0, t1 in zip(traj.grid[:-1], traj.grid[1:])
        ]
        ts = np.append(np.concatenate(pieces), traj.grid[-1])
    rows = traj._interp(ts)[:, : traj.m]
    return np.einsum("ij,ij->i", rows, rows)


def right_continuity_modulus(traj: Trajectory, s: float, deltas) -> np.ndarray:
    """Worst H-distance |y(t) - y(s)| over t in (s, s + delta], per delta.

    Off-grid times use the dense-output interpolant.  For a trajectory
    converging right-continuously at s the moduli decrease toward zero with
    delta.
    """
    deltas = np.asarray(list(deltas), dtype=float)
    if len(deltas) == 0 or np.any(deltas <= 0):
        raise ValueError("deltas must be positive")
    if np.any(np.diff(deltas) >= 0):
        raise ValueError("deltas must be strictly decreasing")
    if not (traj.tau <= s < traj.t_end):
        raise ValueError(f"base time {s} outside [{traj.tau}, {traj.t_end})")
    if s + deltas[0] > traj.t_end + 1e-12:
        raise ValueError("largest delta reaches past the trajectory end")
    y_s = traj.coeffs_at(s)
    moduli = np.empty(len(deltas))
    for i, d in enumerate(deltas):
        sample = traj.grid[(traj.grid > s) & (traj.grid <= s + d)]
        ts = np.append(sample, min(s + d, traj.t_end))
        rows = traj._interp(ts)[:, : traj.m]
        moduli[i] = float(np.max(np.linalg.norm(rows - y_s, axis=1)))
    return moduli


@dataclass(frozen=True)
class PsiDiagnostic:
    """Projection-defect sequence from the uniqueness argument.

    psi_values[i] collects, per truncation level m_levels[i],

        psi_m = |P_m z|_V (nu |P_m z|_V - C |u|_V |z - P_m z|_V),

    whose limit in the level is nu |z|_V^2.  A second axis (when present)
    indexes sample times.  Monotonicity of psi in the level is reported as
    a violation count, not asserted.
    """

    m_levels: tuple[int, ...]
    psi_values: np.ndarray
    limit: np.ndarray
    C_used: float

    def violation_count(self, slack: float = 1e-12) -> int:
        """Number of adjacent level pairs (per time) with decreasing psi."""
        diffs = np.diff(self.psi_values, axis=0)
        return int(np.sum(diffs < -slack))


def _psi_single(z: SpectralField, u: SpectralField, levels, C: float, nu: float):
    vals = np.empty(len(levels))
    nu_v = norm(u, "V")
    for i, m in enumerate(levels):
        pz = project(z, m)
        pz_v = norm(pz, "V")
        tail_v = norm(z - pz, "V")
        vals[i] = pz_v * (nu * pz_v - C * nu_v * tail_v)
    return vals, nu * norm(z, "V") ** 2


def psi_sequence(
    z: SpectralField, u: SpectralField, levels, C: float, nu: float
) -> PsiDiagnostic:
    """Evaluate the projection-defect sequence for one pair of fields."""
    levels = tuple(int(m) for m in levels)
    if len(levels) == 0:
        raise ValueError("levels is empty")
    if any(m < 0 or m > z.basis.m for m in levels):
        raise ValueError("levels must lie within the basis size")
    if any(l2 <= l1 for l1, l2 in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    vals, limit = _psi_single(z, u, levels, C, nu)
    return PsiDiagnostic(levels, vals, np.asarray(limit), float(C))


def psi_profile(
    z_traj: Trajectory, u_traj: Trajectory, times, levels, C: float, nu: float
) -> PsiDiagnostic:
    """psi per level and sample time along stored trajectories."""
    levels = tuple(int(m) for m in levels)
    times = np.asarray(list(times), dtype=float)
    vals = np.empty((len(levels), len(times)))
    lims = np.empty(len(times))
    for j, t in enumerate(times):
        col, lim = _psi_single(z_traj.field_at(t), u_traj.field_at(t), levels, C, nu)
        vals[:, j] = col
        lims[j] = lim
    return PsiDiagnostic(levels, vals, lims, float(C))


# ---------------------------------------------------------------------------
# serialization


def save_ledger(ledger: EnergyLedger, path) -> None:
    """CSV columns t, kinetic, visc, work, V."""
    with open(str(path), "w") as fh:
        fh.write("t,kinetic,visc,work,V\n")
        v = ledger.v_values
        for i, t in enumerate(ledger.times):
            fh.write(
                f"{float(t)!r},{float(ledger.kinetic[i])!r},{float(ledger.visc[i])!r},"
                f"{float(ledger.work[i])!r},{float(v[i])!r}\n"
            )


def load_ledger(path) -> EnergyLedger:
    rows = []
    with open(str(path)) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("t,"):
                continue
            parts = line.split(",")
            if len(parts) not in (4, 5):
                raise ValueError(f"{path}: malformed row at line {lineno}")
            try:
                rows.append([float(x) for x in parts[:4]])
            except ValueError:
                raise ValueError(f"{path}: malformed row at line {lineno}")
    if not rows:
        raise ValueError(f"{path}: ledger file has no data rows")
    table = np.array(rows)
    return EnergyLedger(table[:, 0], table[:, 1], table[:, 2], table[:, 3])


def save_verdicts(verdicts: dict[str, Verdict], path) -> None:
    payload = {name: v.to_dict() for name, v in verdicts.items()}
    with open(str(path), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
