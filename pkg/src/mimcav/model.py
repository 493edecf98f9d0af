"""Cavity data model and the characteristic functions of the resonator.

Wavenumbers ``k`` and lengths are in the same (arbitrary) length unit as
``CavityGeometry.half_subcavity_length``; frequencies are ``omega = c k``.
Every phase that enters the characteristic functions is a product ``k * length``
and therefore dimensionless, so the functions are valid for any ``L`` and ``c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, GeometryError

# Numeric root finding never sees a perfect mirror; R = 1 is handled analytically.
R_NUMERIC_MAX = 1.0 - 1e-9

# Sign of the derivative jump u'(x+) - u'(x-) = JUMP_SIGN * 2 k zeta u(x) at a
# membrane. Fixed by requiring that the transfer-matrix zeros reproduce the
# closed two-membrane equation (see tests/test_model.py::test_jump_sign).
JUMP_SIGN = -1.0


def membrane_angle(reflectivity: float) -> float:
    """Return theta with sin(theta) = sqrt(R), theta in [0, pi/2]."""
    if not (0.0 <= reflectivity <= 1.0) or math.isnan(reflectivity):
        raise DomainError(f"reflectivity must lie in [0, 1], got {reflectivity!r}")
    return math.asin(math.sqrt(reflectivity))


def default_rest_positions(n_membranes: int, half_length: float = 1.0) -> tuple[float, ...]:
    """Membranes at (2j - N - 1) L, j = 1..N: N+1 sub-cavities of length 2L."""
    return tuple(float((2 * j - n_membranes - 1) * half_length) for j in range(1, n_membranes + 1))


@dataclass(frozen=True)
class CavityGeometry:
    """N identical delta-function membranes between perfect mirrors at +-(N+1)L."""

    membrane_count: int
    reflectivity: float
    half_subcavity_length: float = 1.0
    light_speed: float = 1.0
    membrane_rest_positions: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.membrane_count) != self.membrane_count or self.membrane_count < 1:
            raise DomainError(f"membrane_count must be a positive integer, got {self.membrane_count!r}")
        membrane_angle(self.reflectivity)
        if not self.half_subcavity_length > 0:
            raise DomainError("half_subcavity_length must be positive")
        if not self.light_speed > 0:
            raise DomainError("light_speed must be positive")
        if self.membrane_rest_positions is None:
            rest = default_rest_positions(self.membrane_count, self.half_subcavity_length)
            object.__setattr__(self, "membrane_rest_positions", rest)
        else:
            rest = tuple(float(x) for x in self.membrane_rest_positions)
            if len(rest) != self.membrane_count:
                raise GeometryError("membrane_rest_positions must have membrane_count entries")
            object.__setattr__(self, "membrane_rest_positions", rest)
        self.check_positions(self.membrane_rest_positions)

    @property
    def mirror_position(self) -> float:
        return (self.membrane_count + 1) * self.half_subcavity_length

    @property
    def total_length(self) -> float:
        return 2.0 * self.mirror_position

    @property
    def theta(self) -> float:
        return membrane_angle(self.reflectivity)

    @property
    def is_perfect_mirror(self) -> bool:
        return self.reflectivity >= 1.0

    @property
    def numeric_reflectivity(self) -> float:
        return min(self.reflectivity, R_NUMERIC_MAX)

    @property
    def zeta(self) -> float:
        """Membrane strength tan(theta), finite because R is clamped."""
        r = self.numeric_reflectivity
        return math.sqrt(r / (1.0 - r))

    @property
    def multiplet_size(self) -> int:
        return self.membrane_count + 1

    @property
    def root_spacing(self) -> float:
        """Wavenumber spacing of the empty (R = 0) cavity, pi / total_length."""
        return math.pi / self.total_length

    def with_reflectivity(self, reflectivity: float) -> "CavityGeometry":
        return CavityGeometry(self.membrane_count, reflectivity, self.half_subcavity_length,
                              self.light_speed, self.membrane_rest_positions)

    def check_positions(self, positions: Sequence[float]) -> np.ndarray:
        x = np.asarray(positions, dtype=float)
        if x.shape != (self.membrane_count,):
            raise GeometryError(f"expected {self.membrane_count} membrane positions, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise GeometryError("membrane positions must be finite")
        a = self.mirror_position
        if np.any(x <= -a) or np.any(x >= a):
            raise GeometryError(f"membrane positions {x.tolist()} must lie strictly inside the mirrors at +-{a}")
        if np.any(np.diff(x) <= 0):
            raise GeometryError(f"membrane positions {x.tolist()} must be strictly increasing")
        return x


@dataclass(frozen=True)
class MechanicalParams:
    mass: float = 1.0
    mech_frequency: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "mech_frequency", "hbar"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    def zero_point_amplitude(self, effective_mass: float) -> float:
        if not effective_mass > 0:
            raise DomainError("effective mass must be positive")
        return math.sqrt(self.hbar / (2.0 * effective_mass * self.mech_frequency))


@dataclass(frozen=True)
class CollectiveCoordinates:
    """Two-membrane collective coordinates.

    ``relative`` is the membrane separation entering the two-membrane
    characteristic equation (positive, 2L at rest) and ``com`` the
    centre-of-mass position. The left membrane sits at ``com - relative/2``.
    """

    relative: float
    com: float = 0.0

    def positions(self) -> tuple[float, float]:
        return (self.com - 0.5 * self.relative, self.com + 0.5 * self.relative)

    @classmethod
    def from_positions(cls, positions: Sequence[float]) -> "CollectiveCoordinates":
        left, right = positions
        return cls(relative=right - left, com=0.5 * (left + right))


def char_two_membrane(k, coords: CollectiveCoordinates, geom: CavityGeometry):
    """Closed characteristic function of the two-membrane cavity.

    f(k) = sin 2(theta + 3kL) + sin^2(theta) sin 2k(3L - q)
           - 2 sin(theta) cos(theta + kq) cos(2kQ)

    Zeros in k are the allowed wavenumbers. Works on scalars or arrays of k.
    """
    if geom.membrane_count != 2:
        raise DomainError("char_two_membrane requires exactly two membranes")
    geom.check_positions(coords.positions())
    k = np.asarray(k, dtype=float)
    L = geom.half_subcavity_length
    th = geom.theta
    s = math.sin(th)
    q, Q = coords.relative, coords.com
    out = (np.sin(2.0 * (th + 3.0 * k * L))
           + s * s * np.sin(2.0 * k * (3.0 * L - q))
           - 2.0 * s * np.cos(th + k * q) * np.cos(2.0 * k * Q))
    return out if out.ndim else float(out)


def char_transfer_matrix(k, positions: Sequence[float], geom: CavityGeometry):
    """Field at the right mirror for a solution with a node at the left mirror.

    The state (u, u'/k) is rotated through each free region, sheared at each
    membrane (u'/k jumps by JUMP_SIGN * 2 zeta u), and renormalised to unit
    length after every step. Renormalisation is a positive factor, so the
    zero set is exactly that of the unnormalised field.
    """
    x = geom.check_positions(positions)
    k = np.asarray(k, dtype=float)
    zeta2 = JUMP_SIGN * 2.0 * geom.zeta
    u = np.zeros_like(k)
    v = np.ones_like(k)
    left = -geom.mirror_position
    for xm in np.append(x, geom.mirror_position):
        c, s = np.cos(k * (xm - left)), np.sin(k * (xm - left))
        u, v = u * c + v * s, v * c - u * s
        if xm < geom.mirror_position:
            v = v + zeta2 * u
        norm = np.hypot(u, v)
        u, v = u / norm, v / norm
        left = xm
    return u if u.ndim else float(u)


def mode_phase(k, positions: Sequence[float], geom: CavityGeometry):
    """Continuous phase phi(k) of the field at the right mirror.

    With (u, u'/k) = r (sin phi, cos phi) the phase starts at 0 on the left
    mirror, advances by k * d across a free region, and is mapped monotonically
    within its half-turn by each membrane shear. phi is strictly increasing in k
    for k > 0, and the allowed wavenumbers are exactly phi = m pi; m counts the
    modes below k with k = 0 taken as mode 0.
    """
    x = geom.check_positions(positions)
    k = np.asarray(k, dtype=float)
    zeta2 = JUMP_SIGN * 2.0 * geom.zeta
    phi = np.zeros_like(k)
    left = -geom.mirror_position
    for xm in x:
        phi = phi + k * (xm - left)
        turns = np.floor(phi / math.pi)
        u, v = np.sin(phi), np.cos(phi)
        # near phi = m pi rounding can put phi/pi and sin(phi) in different half-turns
        parity = np.where(turns % 2 == 0, 1.0, -1.0)
        wrong = (u != 0.0) & (np.sign(u) != parity)
        low = phi - turns * math.pi < 0.5 * math.pi
        turns = turns + np.where(wrong, np.where(low, -1.0, 1.0), 0.0)
        safe_u = np.where(u == 0.0, 1.0, u)
        sheared = turns * math.pi + (0.5 * math.pi - np.arctan((v + zeta2 * u) / safe_u))
        phi = np.where(u == 0.0, phi, sheared)
        left = xm
    phi = phi + k * (geom.mirror_position - left)
    return phi if phi.ndim else float(phi)


def mode_count(k, positions: Sequence[float], geom: CavityGeometry):
    """Number of allowed wavenumbers in (0, k], i.e. the index of the last mode <= k."""
    return np.floor(np.asarray(mode_phase(k, positions, geom)) / math.pi).astype(int)
