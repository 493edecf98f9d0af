"""Collective-coordinate bases for membrane arrays and spectrum symmetry checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import CavityGeometry

MAX_MEMBRANES = 10


@dataclass(frozen=True)
class NormalModeBasis:
    """Rows of ``matrix`` map individual positions (q_1..q_N, left to right)
    to collective coordinates (Q_1..Q_N)."""

    n_membranes: int
    matrix: np.ndarray
    names: tuple[str, ...]
    symmetric: tuple[bool, ...]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def displacement(self, amplitudes) -> np.ndarray:
        """Individual displacements for the given collective amplitudes."""
        return self.inverse @ np.asarray(amplitudes, dtype=float)

    def mode_vector(self, index: int) -> np.ndarray:
        """Displacement pattern of mode ``index`` (0-based) at unit amplitude."""
        return self.inverse[:, index]

    def to_dict(self) -> dict:
        return {
            "n_membranes": self.n_membranes,
            "matrix": self.matrix.tolist(),
            "names": list(self.names),
            "symmetric": list(self.symmetric),
        }


def _chain_basis(n: int) -> NormalModeBasis:
    # cosine profiles of a uniform free-ended chain; mode m has reflection parity (-1)^m
    j = np.arange(1, n + 1)
    rows = [np.full(n, 1.0 / n)]
    names = ["com"]
    for m in range(1, n):
        rows.append((2.0 / n) * np.cos(math.pi * m * (j - 0.5) / n))
        names.append(f"chain{m}")
    return NormalModeBasis(n, np.array(rows), tuple(names), tuple(m % 2 == 0 for m in range(n)))


def basis(n_membranes: int) -> NormalModeBasis:
    """Collective coordinates for N membranes.

    N = 2: relative q1 - q2 and COM (q1 + q2)/2. N = 3: COM, scissors
    (q1 - 2 q2 + q3)/6 and stretch (q3 - q1)/2, unnormalised as written.
    Otherwise the cosine modes of a uniform chain. A mode is flagged symmetric
    when its displacement pattern is palindromic, i.e. the mirror image of the
    +a configuration is the -a configuration.
    """
    n = n_membranes
    if int(n) != n or not 1 <= n <= MAX_MEMBRANES:
        raise DomainError(f"membrane count must be an integer in 1..{MAX_MEMBRANES}, got {n!r}")
    if n == 1:
        return NormalModeBasis(1, np.array([[1.0]]), ("com",), (True,))
    if n == 2:
        return NormalModeBasis(2, np.array([[1.0, -1.0], [0.5, 0.5]]), ("relative", "com"), (False, True))
    if n == 3:
        m = np.array([[1 / 3, 1 / 3, 1 / 3], [1 / 6, -2 / 6, 1 / 6], [-1 / 2, 0.0, 1 / 2]])
        return NormalModeBasis(3, m, ("com", "scissors", "stretch"), (True, True, False))
    return _chain_basis(n)


def symmetric_count(n_membranes: int) -> int:
    if n_membranes < 1:
        raise DomainError("membrane count must be >= 1")
    return n_membranes // 2 if n_membranes % 2 == 0 else n_membranes // 2 + 1


def coupling_term_counts(n_membranes: int) -> tuple[int | None, int]:
    """(remaining, total) mode-mode coupling terms per optical frequency.

    ``remaining`` is only known for even N and is None otherwise.
    """
    n = n_membranes
    if n < 2:
        raise DomainError("coupling terms need at least two membranes")
    total = n * (n - 1) // 2
    remaining = n * (n - 2) // 8 if n % 2 == 0 else None
    return remaining, total


@dataclass(frozen=True)
class SymmetryResult:
    mode_index: int
    name: str
    flagged_symmetric: bool
    amplitude: float
    residual: float
    n_roots: int

    def to_dict(self) -> dict:
        return {
            "mode_index": self.mode_index,
            "name": self.name,
            "flagged_symmetric": self.flagged_symmetric,
            "amplitude": self.amplitude,
            "residual": self.residual if math.isfinite(self.residual) else "inf",
            "n_roots": self.n_roots,
        }


def default_window(geom: CavityGeometry) -> tuple[float, float]:
    """Multiplets n = 1 and n = 2."""
    L = geom.half_subcavity_length
    return (0.5 * math.pi / L - 0.3 / L, 1.5 * math.pi / L - 0.05 / L)


def check_spectrum_symmetry(geom: CavityGeometry, mode_basis: NormalModeBasis, mode_index: int,
                            amplitude: float, window=None) -> SymmetryResult:
    """Maximum root mismatch between +a and -a displacements of one mode.

    Both spectra come from the transfer-matrix characteristic function. A
    differing root count gives an infinite residual.
    """
    from .spectrum import solve_spectrum

    if mode_basis.n_membranes != geom.membrane_count:
        raise DomainError("basis and geometry disagree on the membrane count")
    if not 0 <= mode_index < geom.membrane_count:
        raise DomainError(f"mode index {mode_index} out of range")
    window = default_window(geom) if window is None else window
    rest = np.array(geom.membrane_rest_positions)
    shift = amplitude * mode_basis.mode_vector(mode_index)
    plus = solve_spectrum(geom, rest + shift, window, method="transfer")
    minus = solve_spectrum(geom, rest - shift, window, method="transfer")
    if len(plus) != len(minus):
        residual = math.inf
    else:
        residual = float(np.max(np.abs(plus.roots - minus.roots))) if len(plus) else 0.0
    return SymmetryResult(mode_index, mode_basis.names[mode_index], mode_basis.symmetric[mode_index],
                          amplitude, residual, len(plus))
