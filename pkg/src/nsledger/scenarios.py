"""Named initial-data and forcing configurations for reproducible runs.

shear_mode     one cosine mode on k = (1,0,0); the convective term vanishes
               identically, so the run decays as a0 * exp(-nu t) in closed
               form and every ledger column is known analytically.
taylor_green   equal-amplitude combination of the first three cosine modes
               with polarization 1 on the |k|^2 = 3 shell, scaled to unit
               energy norm; the triad interactions feed a genuine cascade.
random_field   seeded coefficients with variance lambda^-2, which keeps the
               V norm of samples finite, scaled to the requested amplitude.
from_file      coefficients read from a saved field file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, SpectralField
from .solver import Forcing

__all__ = [
    "Scenario",
    "make_scenario",
    "shear_mode_index",
    "taylor_green_field",
    "random_coefficients",
    "save_field",
    "load_field",
]

SCENARIO_NAMES = ("shear_mode", "taylor_green", "random_field", "from_file")


def shear_mode_index(basis: BasisSet) -> int:
    """Index of the cosine mode with k = (1,0,0), polarization 1."""
    for j, mode in enumerate(basis.modes):
        if mode.k == (1, 0, 0) and mode.polarization == 1 and mode.phase == "cos":
            return j
    raise ValueError("basis too small to contain the k=(1,0,0) shear mode")


# Mode triple of the vortex scenario.  Not every 3-subset of the shell
# works: same-polarization cosine triples have an exactly vanishing
# projected convective term and decay linearly; this combination feeds a
# genuine cascade.
TAYLOR_GREEN_MODES = (
    ((1, -1, 1), 2, "sin"),
    ((1, 1, -1), 1, "sin"),
    ((1, 1, 1), 1, "cos"),
)


def taylor_green_field(basis: BasisSet, amplitude: float = 1.0) -> SpectralField:
    """Three-mode vortex on the |k|^2 = 3 shell with H norm = amplitude."""
    index = {(m.k, m.polarization, m.phase): j for j, m in enumerate(basis.modes)}
    try:
        picked = [index[key] for key in TAYLOR_GREEN_MODES]
    except KeyError:
        raise ValueError("basis too small to contain the |k|^2=3 shell")
    coeffs = np.zeros(basis.m)
    coeffs[picked] = amplitude / np.sqrt(3.0)
    return SpectralField(basis, coeffs)


def random_coefficients(basis: BasisSet, seed: int, amplitude: float = 1.0) -> SpectralField:
    """Seeded random field with coefficient variance lambda^-2, rescaled to
    H norm = amplitude."""
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(basis.m) / basis.lambdas
    coeffs *= amplitude / np.linalg.norm(coeffs)
    return SpectralField(basis, coeffs)


def save_field(field: SpectralField, path) -> None:
    with open(str(path), "w") as fh:
        fh.write(f"# nsledger field v1\n# basis_hash={field.basis.ordering_hash} m={field.basis.m}\n")
        for a in field.coeffs:
            fh.write(f"{float(a)!r}\n")


def load_field(path, basis: BasisSet) -> SpectralField:
    meta = {}
    values = []
    with open(str(path)) as fh:
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
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}: malformed coefficient at line {lineno}")
    if meta.get("basis_hash") not in (None, basis.ordering_hash):
        raise ValueError(f"{path}: field was written against a different basis")
    coeffs = np.zeros(basis.m)
    n = min(len(values), basis.m)
    coeffs[:n] = values[:n]
    return SpectralField(basis, coeffs)


@dataclass(frozen=True)
class Scenario:
    """A named, fully determined run setup."""

    name: str
    nu: float
    tau: float
    t_end: float
    amplitude: float = 1.0
    seed: int | None = None
    init_path: str | None = None
    forcing_terms: tuple = ()  # (index, amplitude, omega, part) tuples

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; choose one of {SCENARIO_NAMES}")
        if not self.tau < self.t_end:
            raise ValueError(f"need tau < T, got [{self.tau}, {self.t_end}]")
        if self.nu <= 0:
            raise ValueError("viscosity must be positive")
        if self.name == "random_field" and self.seed is None:
            raise ValueError("random_field requires a seed")
        if self.name == "from_file" and not self.init_path:
            raise ValueError("from_file requires init_path")

    def initial_field(self, basis: BasisSet) -> SpectralField:
        if self.name == "shear_mode":
            return SpectralField.unit_mode(basis, shear_mode_index(basis), self.amplitude)
        if self.name == "taylor_green":
            return taylor_green_field(basis, self.amplitude)
        if self.name == "random_field":
            return random_coefficients(basis, self.seed, self.amplitude)
        return load_field(self.init_path, basis)

    def forcing(self, basis: BasisSet) -> Forcing:
        if not self.forcing_terms:
            return Forcing.zero()
        dual_terms = [t for t in self.forcing_terms if t[3] == "dual"]
        h_terms = [t for t in self.forcing_terms if t[3] == "h"]

        def make(terms):
            if not terms:
                return None

            def waveform(t: float) -> np.ndarray:
                out = np.zeros(basis.m)
                for index, amp, omega, _ in terms:
                    out[index] += amp * np.cos(omega * t)
                return out

            return waveform

        return Forcing(dual_part=make(dual_terms), h_part=make(h_terms))


def make_scenario(
    name: str,
    nu: float,
    tau: float,
    t_end: float,
    amplitude: float = 1.0,
    seed: int | None = None,
    init_path: str | None = None,
    forcing_terms=(),
) -> Scenario:
    return Scenario(
        name=name,
        nu=nu,
        tau=tau,
        t_end=t_end,
        amplitude=amplitude,
        seed=seed,
        init_path=init_path,
        forcing_terms=tuple(tuple(t) for t in forcing_terms),
    )
