"""Divergence-free trigonometric eigenbasis of the Stokes operator on the
periodic box [0, 2pi)^3.

Each basis element is a real vector field

    w(x) = amp * e(k) * phi(k . x),    phi in {cos, sin},

where k is a nonzero integer wavevector, e(k) is a unit polarization vector
orthogonal to k (so the field is exactly divergence-free), and amp is chosen
so that the L2 norm over the box is exactly 1.  These are eigenfunctions of
the Stokes operator with eigenvalue lambda = |k|^2, and the first eigenvalue
on the unit-period box is 1.

Wavevectors are stored in the half-space whose first nonzero component is
positive; together with the two phases this represents every real field
without conjugate duplication.  The mode order is canonical: ascending
|k|^2, ties broken lexicographically by (k1, k2, k3), then polarization,
then cosine before sine.

All Sobolev-scale norms are diagonal here: the V_sigma norm of a field with
coefficients a_j is (sum lambda_j^sigma a_j^2)^(1/2).  sigma = 0 is the H
(energy) norm, sigma = 1 the V norm, sigma = -1 the V* dual norm.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
BOX_VOLUME = TWO_PI**3

# H-normalization of e * phi(k.x): integral of cos^2 over the box is vol/2.
MODE_AMPLITUDE = float(np.sqrt(2.0 / BOX_VOLUME))

PHASES = ("cos", "sin")


def canonical_wavevector(k) -> tuple[int, int, int]:
    """Map k to its half-space representative (first nonzero component > 0)."""
    k = tuple(int(x) for x in k)
    for x in k:
        if x > 0:
            return k
        if x < 0:
            return (-k[0], -k[1], -k[2])
    return k


@dataclass(frozen=True)
class WaveVector:
    """Nonzero integer lattice wavevector in the canonical half-space."""

    k: tuple[int, int, int]

    def __post_init__(self):
        if self.k == (0, 0, 0):
            raise ValueError("wavevector must be nonzero")
        if canonical_wavevector(self.k) != self.k:
            raise ValueError(f"wavevector {self.k} is not in the canonical half-space")

    @property
    def norm_squared(self) -> int:
        return self.k[0] ** 2 + self.k[1] ** 2 + self.k[2] ** 2


def direction_vectors(k) -> tuple[np.ndarray, np.ndarray]:
    """Integer (unnormalized) polarization directions for a wavevector.

    d1 is parallel to k x zhat (xhat when k is parallel to zhat) and d2 to
    k x e1, both rescaled to integer components.  Dot products among these
    and with k are integer-valued, hence exact in floating point; genuinely
    orthogonal combinations give exact zeros.
    """
    k1, k2, k3 = (int(x) for x in k)
    if k1 == 0 and k2 == 0:
        d1 = np.array([1.0, 0.0, 0.0])
        d2 = np.array([0.0, float(k3), 0.0])
    else:
        d1 = np.array([float(k2), float(-k1), 0.0])
        d2 = np.array([float(k1 * k3), float(k2 * k3), float(-(k1 * k1 + k2 * k2))])
    return d1, d2


def polarization_vectors(k) -> tuple[np.ndarray, np.ndarray]:
    """Unit polarization pair (e1, e2), both exactly orthogonal to k.

    e1 = (k x zhat)/|k x zhat| when k is not parallel to zhat, else xhat;
    e2 = (k x e1)/|k|.  Normalized from the integer directions, so e . k
    still vanishes exactly in floating point.
    """
    d1, d2 = direction_vectors(k)
    return d1 / np.linalg.norm(d1), d2 / np.linalg.norm(d2)


@dataclass(frozen=True)
class Mode:
    """One Stokes eigenfunction: wavevector, polarization index, phase."""

    k: tuple[int, int, int]
    polarization: int  # 1 or 2
    phase: str  # "cos" or "sin"

    @property
    def eigenvalue(self) -> float:
        return float(self.k[0] ** 2 + self.k[1] ** 2 + self.k[2] ** 2)

    @property
    def e(self) -> np.ndarray:
        e1, e2 = polarization_vectors(self.k)
        return e1 if self.polarization == 1 else e2

    @property
    def amplitude(self) -> float:
        return MODE_AMPLITUDE

    def record(self) -> dict:
        """Audit record (k, polarization, phase, lambda)."""
        return {
            "k": list(self.k),
            "polarization": self.polarization,
            "phase": self.phase,
            "eigenvalue": self.eigenvalue,
        }


def _half_space_wavevectors(min_count: int) -> list[tuple[int, int, int]]:
    """First canonical wavevectors, enough for min_count modes (4 per k)."""
    radius = 2
    while True:
        vecs = []
        r2 = radius * radius
        for k in itertools.product(range(-radius, radius + 1), repeat=3):
            if k == (0, 0, 0) or canonical_wavevector(k) != k:
                continue
            if k[0] ** 2 + k[1] ** 2 + k[2] ** 2 <= r2:
                vecs.append(k)
        # shells with |k|^2 <= radius^2 are complete inside the cube
        vecs.sort(key=lambda k: (k[0] ** 2 + k[1] ** 2 + k[2] ** 2, k))
        if 4 * len(vecs) >= min_count:
            return vecs
        radius += 1


@dataclass(frozen=True)
class BasisSet:
    """Ordered finite family of modes with precomputed coefficient arrays.

    Immutable after construction; safe to share across tasks.
    """

    modes: tuple[Mode, ...]
    lambdas: np.ndarray = field(repr=False)  # (m,)
    kvecs: np.ndarray = field(repr=False)  # (m, 3) int
    evecs: np.ndarray = field(repr=False)  # (m, 3) unit polarization vectors
    dvecs: np.ndarray = field(repr=False)  # (m, 3) integer polarization directions
    dnorms: np.ndarray = field(repr=False)  # (m,) norms of dvecs
    sin_mask: np.ndarray = field(repr=False)  # (m,) True where phase == sin

    @property
    def m(self) -> int:
        return len(self.modes)

    def records(self) -> list[dict]:
        """Serializable audit listing of the basis."""
        return [mode.record() for mode in self.modes]

    def to_json(self) -> str:
        return json.dumps(self.records())

    @property
    def ordering_hash(self) -> str:
        """Hash of the mode ordering, used to tag serialized artifacts."""
        payload = "\n".join(
            f"{m.k[0]},{m.k[1]},{m.k[2]},{m.polarization},{m.phase}" for m in self.modes
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def compatible_with(self, other: "BasisSet") -> bool:
        if self is other:
            return True
        n = min(self.m, other.m)
        return self.modes[:n] == other.modes[:n]


def build_basis(mode_count: int) -> BasisSet:
    """Construct the first mode_count modes in canonical order."""
    if mode_count < 1:
        raise ValueError(f"mode_count must be >= 1, got {mode_count}")
    modes = []
    for k in _half_space_wavevectors(mode_count):
        for pol in (1, 2):
            for phase in PHASES:
                modes.append(Mode(k, pol, phase))
    modes = tuple(modes[:mode_count])
    lambdas = np.array([m.eigenvalue for m in modes])
    kvecs = np.array([m.k for m in modes], dtype=np.int64)
    dvecs = np.array(
        [direction_vectors(m.k)[0 if m.polarization == 1 else 1] for m in modes]
    )
    dnorms = np.linalg.norm(dvecs, axis=1)
    evecs = dvecs / dnorms[:, None]
    sin_mask = np.array([m.phase == "sin" for m in modes])
    return BasisSet(modes, lambdas, kvecs, evecs, dvecs, dnorms, sin_mask)


@dataclass(frozen=True)
class SpectralField:
    """A velocity field as real coefficients against a BasisSet.

    Also used in the dual role: the same coefficients paired against test
    fields realize elements of V_sigma* (the pairing is diagonal).
    """

    basis: BasisSet
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.basis.m,):
            raise ValueError(
                f"coefficient length {coeffs.shape} does not match basis size {self.basis.m}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, basis: BasisSet) -> "SpectralField":
        return cls(basis, np.zeros(basis.m))

    @classmethod
    def unit_mode(cls, basis: BasisSet, index: int, amplitude: float = 1.0) -> "SpectralField":
        coeffs = np.zeros(basis.m)
        coeffs[index] = amplitude
        return cls(basis, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _require_same_basis(self, other)
        return SpectralField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _require_same_basis(self, other)
        return SpectralField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__


def _require_same_basis(a: SpectralField, b: SpectralField) -> None:
    if a.basis is not b.basis and not a.basis.compatible_with(b.basis):
        raise ValueError("fields live on different bases")
    if a.basis.m != b.basis.m:
        raise ValueError("fields live on bases of different sizes")


def project(v: SpectralField, m: int) -> SpectralField:
    """Galerkin projection P_m: zero every coefficient beyond index m."""
    if m < 0 or m > v.basis.m:
        raise ValueError(f"projection level {m} outside [0, {v.basis.m}]")
    coeffs = v.coeffs.copy()
    coeffs[m:] = 0.0
    return SpectralField(v.basis, coeffs)


def _sigma_of(space) -> float:
    if isinstance(space, str):
        table = {"H": 0.0, "V": 1.0, "V*": -1.0, "V_dual": -1.0}
        try:
            return table[space]
        except KeyError:
            raise ValueError(f"unknown space {space!r}; use 'H', 'V', 'V*' or a numeric sigma")
    return float(space)


def norm(v: SpectralField, space="H") -> float:
    """Norm of v in H, V, V* or any V_sigma (pass sigma as a number).

    The scale is diagonal: ||v||_{V_sigma}^2 = sum lambda_j^sigma a_j^2.
    Negative sigma gives dual norms (sigma = -1 is V*, -3/2 is V_{3/2}*).
    """
    sigma = _sigma_of(space)
    a = v.coeffs
    if sigma == 0.0:
        return float(np.sqrt(np.dot(a, a)))
    w = v.basis.lambdas**sigma
    return float(np.sqrt(np.dot(w * a, a)))


def pair(f: SpectralField, v: SpectralField) -> float:
    """Duality pairing <f, v>; coincides with the H inner product on H x V."""
    _require_same_basis(f, v)
    return float(np.dot(f.coeffs, v.coeffs))
