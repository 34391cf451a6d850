"""Cross-resolution Cauchy diagnostics for Galerkin refinement.

Almost-everywhere convergence statements are not directly testable, so the
report measures finite surrogates between consecutive truncation levels run
from the same projected initial data:

  * the L2-in-time H distance of the trajectories,
  * sup-in-time gaps of weak traces <y(t), v> against fixed test fields,
  * sup-in-time gaps of the energy ledgers,
  * the L2-in-time gap of the convective terms in the V*_{3/2} dual norm,
  * worst pointwise H distance over a fixed random sample of interior times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SpectralField
from .ledger import compute_ledger
from .solver import Forcing, SolverConfig, SolverError, Trajectory, simulate_nse
from .trilinear import TriadTensor, b_apply_coeffs

__all__ = ["RefinementReport", "l2H_distance", "weak_trace", "refinement_study"]

POINTWISE_SAMPLES = 32


def _union_grid(a: Trajectory, b: Trajectory) -> np.ndarray:
    return np.union1d(a.grid, b.grid)


def _check_comparable(a: Trajectory, b: Trajectory) -> None:
    if a.basis is not b.basis and not a.basis.compatible_with(b.basis):
        raise ValueError("trajectories live on different bases")
    if abs(a.tau - b.tau) > 1e-9 or abs(a.t_end - b.t_end) > 1e-9:
        raise ValueError(
            f"trajectory intervals differ: [{a.tau}, {a.t_end}] vs [{b.tau}, {b.t_end}]"
        )


def _states_on(traj: Trajectory, ts: np.ndarray, width: int) -> np.ndarray:
    rows = traj._interp(ts)[:, : traj.m]
    if traj.m == width:
        return rows
    out = np.zeros((len(ts), width))
    out[:, : traj.m] = rows
    return out


def l2H_distance(a: Trajectory, b: Trajectory) -> float:
    """(integral of |a(t) - b(t)|^2 dt)^(1/2) by trapezoid on the union grid."""
    _check_comparable(a, b)
    ts = _union_grid(a, b)
    width = max(a.m, b.m)
    diff = _states_on(a, ts, width) - _states_on(b, ts, width)
    sq = np.einsum("ij,ij->i", diff, diff)
    return float(np.sqrt(np.trapezoid(sq, ts)))


def weak_trace(traj: Trajectory, v: SpectralField) -> np.ndarray:
    """t -> (y(t), v) on the output grid; probes weak continuity."""
    if v.basis is not traj.basis and not traj.basis.compatible_with(v.basis):
        raise ValueError("test field basis does not match trajectory basis")
    return traj.states @ v.coeffs[: traj.m]


@dataclass(frozen=True)
class RefinementReport:
    """Gap columns between consecutive levels; row i compares levels i, i+1."""

    levels: tuple[int, ...]
    l2H_gaps: np.ndarray
    weak_gaps: np.ndarray  # (pairs, test fields)
    ledger_gaps: np.ndarray
    nonlin_gaps: np.ndarray  # convective-term gaps in the V*_{3/2} norm
    pointwise_gaps: np.ndarray  # worst H distance over the sampled times

    def summary(self) -> str:
        lines = ["refinement study"]
        header = f"{'levels':>12} {'l2H':>12} {'ledger':>12} {'nonlin*':>12} {'pointwise':>12} weak(max)"
        lines.append(header)
        for i in range(len(self.levels) - 1):
            pair = f"{self.levels[i]}->{self.levels[i + 1]}"
            lines.append(
                f"{pair:>12} {self.l2H_gaps[i]:12.4e} {self.ledger_gaps[i]:12.4e}"
                f" {self.nonlin_gaps[i]:12.4e} {self.pointwise_gaps[i]:12.4e}"
                f" {np.max(self.weak_gaps[i]):.4e}"
            )
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        with open(str(path), "w") as fh:
            fh.write("level_lo,level_hi,l2H_gap,ledger_gap,nonlin_gap,pointwise_gap,weak_gap_max\n")
            for i in range(len(self.levels) - 1):
                fh.write(
                    f"{self.levels[i]},{self.levels[i + 1]},{self.l2H_gaps[i]!r},"
                    f"{self.ledger_gaps[i]!r},{self.nonlin_gaps[i]!r},"
                    f"{self.pointwise_gaps[i]!r},{float(np.max(self.weak_gaps[i]))!r}\n"
                )


def _nonlinear_gap(a: Trajectory, b: Trajectory, tensor: TriadTensor, ts: np.ndarray) -> float:
    """L2-in-time V*_{3/2} distance of P_m B(y_m, y_m) between two runs."""
    lam = tensor.basis.lambdas
    width = tensor.basis.m
    vals = np.empty(len(ts))
    arrays_a = tensor.restricted(a.m, a.m)
    arrays_b = tensor.restricted(b.m, b.m)
    for i, t in enumerate(ts):
        ca = a.coeffs_at(t)
        cb = b.coeffs_at(t)
        na = np.zeros(width)
        nb = np.zeros(width)
        na[: a.m] = b_apply_coeffs(ca, ca, arrays_a, a.m)
        nb[: b.m] = b_apply_coeffs(cb, cb, arrays_b, b.m)
        diff = na - nb
        vals[i] = float(np.dot(lam ** -1.5 * diff, diff))
    return float(np.sqrt(np.trapezoid(vals, ts)))


def refinement_study(
    scenario,
    levels,
    cfg: SolverConfig,
    tensor: TriadTensor,
    test_fields: list[SpectralField] | None = None,
) -> RefinementReport:
    """Run the scenario at every level from the same projected initial data
    and assemble the gap columns between consecutive levels.

    ``scenario`` provides initial_field(basis) and forcing(basis); see
    nsledger.scenarios.
    """
    levels = tuple(int(m) for m in levels)
    if any(l2 < l1 for l1, l2 in zip(levels, levels[1:])):
        raise ValueError("levels must be nondecreasing")
    basis = tensor.basis
    if levels[-1] > basis.m:
        raise ValueError(f"top level {levels[-1]} exceeds tensor capacity {basis.m}")

    y0 = scenario.initial_field(basis)
    forcing = scenario.forcing(basis)
    interval = (scenario.tau, scenario.t_end)

    runs: list[Trajectory] = []
    for m in levels:
        try:
            runs.append(simulate_nse(y0, forcing, m, interval, cfg, tensor))
        except SolverError as exc:
            raise SolverError(f"level m={m}: {exc}", time=exc.time) from exc

    if test_fields is None:
        count = min(3, basis.m)
        test_fields = [SpectralField.unit_mode(basis, j) for j in range(count)]

    rng = np.random.default_rng(7)
    span = scenario.t_end - scenario.tau
    sample_times = scenario.tau + span * np.sort(rng.uniform(0.02, 0.98, POINTWISE_SAMPLES))

    pairs = len(levels) - 1
    l2h = np.empty(pairs)
    weak = np.empty((pairs, len(test_fields)))
    ledg = np.empty(pairs)
    nl = np.empty(pairs)
    ptw = np.empty(pairs)
    for i in range(pairs):
        a, b = runs[i], runs[i + 1]
        l2h[i] = l2H_distance(a, b)
        for j, v in enumerate(test_fields):
            weak[i, j] = float(np.max(np.abs(weak_trace(a, v) - weak_trace(b, v))))
        va = compute_ledger(a).v_values
        vb = compute_ledger(b).v_values
        ledg[i] = float(np.max(np.abs(va - vb)))  # shared output grid
        ts = _union_grid(a, b)
        nl[i] = _nonlinear_gap(a, b, tensor, ts)
        width = max(a.m, b.m)
        diff = _states_on(a, sample_times, width) - _states_on(b, sample_times, width)
        ptw[i] = float(np.max(np.linalg.norm(diff, axis=1)))
    return RefinementReport(levels, l2h, weak, ledg, nl, ptw)
