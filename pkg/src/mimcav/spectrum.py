"""Root scanning, multiplet labelling and branch tracking over coordinate sweeps."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, GeometryError, NumericalError
from .model import (
    CavityGeometry,
    CollectiveCoordinates,
    char_transfer_matrix,
    char_two_membrane,
    mode_count,
    mode_phase,
)

DEFAULT_OVERSAMPLE = 200
BISECT_XTOL_REL = 1e-12


@dataclass
class RootSet:
    window: tuple[float, float]
    roots: np.ndarray
    residuals: np.ndarray
    bracket_width_used: float
    # global mode index of roots[0] (k = 0 is mode 0); None when unknown
    first_index: int | None = None
    degenerate: bool = False

    def __len__(self):
        return len(self.roots)


@dataclass(frozen=True)
class LabeledRoot:
    n: int
    i: int
    k: float
    degenerate: bool = False
    partial: bool = False


def bisect(f: Callable[[float], float], lo: float, hi: float, flo: float | None = None,
           xtol_rel: float = BISECT_XTOL_REL, max_iter: int = 200) -> float:
    """Bisection on a sign-changing bracket.

    Stops once the bracket is narrower than ``xtol_rel * |mid|``; with
    ``xtol_rel=0`` it runs until the bracket cannot be split any further in
    floating point.
    """
    if flo is None:
        flo = f(lo)
    if flo == 0.0:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= xtol_rel * abs(mid):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sign_change_brackets(ks, fs):
    idx = np.nonzero(fs[:-1] * fs[1:] < 0)[0]
    return [(ks[j], ks[j + 1], fs[j]) for j in idx]


def scan_roots(f: Callable, window: tuple[float, float], oversample: int = DEFAULT_OVERSAMPLE,
               spacing: float | None = None, count: Callable[[float], int] | None = None,
               xtol_rel: float = BISECT_XTOL_REL, max_halvings: int = 8,
               near_zero: float = 0.05, _retries: int = 3) -> RootSet:
    """Find every zero of ``f`` in ``window`` by sign-change scanning plus bisection.

    ``f`` must accept numpy arrays. The grid step is ``spacing / oversample``.
    Grid points where ``|f|`` has a local minimum below ``near_zero * max|f|``
    without a neighbouring sign change are treated as a possible unresolved
    root pair and re-sampled with the step halved up to ``max_halvings`` times.

    If ``count`` is given (number of roots in (0, k]) the result is checked
    against it; on a mismatch the scan is repeated with doubled oversampling
    and a ``NumericalError`` is raised if it still disagrees.
    """
    a, b = map(float, window)
    if not (math.isfinite(a) and math.isfinite(b) and 0 < a < b):
        raise DomainError(f"window must be positive, finite and increasing, got {window!r}")
    if oversample < 1:
        raise DomainError("oversample must be >= 1")
    if spacing is None:
        spacing = (b - a) / 100.0
    step = spacing / oversample
    npts = max(int(math.ceil((b - a) / step)) + 1, 3)
    ks = np.linspace(a, b, npts)
    fs = np.asarray(f(ks), dtype=float)
    fmax = float(np.max(np.abs(fs))) or 1.0

    exact = [float(ks[j]) for j in np.nonzero(fs == 0.0)[0]]
    brackets = _sign_change_brackets(ks, fs)

    absf = np.abs(fs)
    sign_cell = fs[:-1] * fs[1:] <= 0
    for j in range(1, npts - 1):
        if sign_cell[j - 1] or sign_cell[j]:
            continue
        if absf[j] <= absf[j - 1] and absf[j] <= absf[j + 1] and absf[j] < near_zero * fmax:
            lo, hi = ks[j - 1], ks[j + 1]
            for s in range(1, max_halvings + 1):
                sub = np.linspace(lo, hi, 2 ** (s + 1) + 1)
                fsub = np.asarray(f(sub), dtype=float)
                found = _sign_change_brackets(sub, fsub)
                exact.extend(float(x) for x in sub[1:-1][fsub[1:-1] == 0.0])
                if found or np.any(fsub[1:-1] == 0.0):
                    brackets.extend(found)
                    break

    scalar_f = lambda x: float(f(np.asarray(x)))
    roots = [bisect(scalar_f, lo, hi, float(flo), xtol_rel=xtol_rel) for lo, hi, flo in brackets]
    roots = np.array(sorted(roots + exact))
    if len(roots) > 1:
        keep = np.concatenate(([True], np.diff(roots) > 4 * np.finfo(float).eps * roots[1:]))
        roots = roots[keep]
    residuals = np.abs(np.asarray(f(roots), dtype=float)) if len(roots) else np.empty(0)

    first_index = None
    if count is not None:
        expected = int(count(b)) - int(count(a))
        if expected != len(roots):
            if _retries > 0:
                return scan_roots(f, window, 2 * oversample, spacing, count, xtol_rel,
                                  max_halvings, near_zero, _retries - 1)
            raise NumericalError(
                f"root scan found {len(roots)} roots in {window}, mode count says {expected}")
        first_index = int(count(a)) + 1
    return RootSet((a, b), roots, residuals, step, first_index)


def _as_positions(geom: CavityGeometry, positions):
    if isinstance(positions, CollectiveCoordinates):
        return geom.check_positions(positions.positions())
    return geom.check_positions(positions)


def _char_function(geom: CavityGeometry, positions, method: str):
    """Characteristic function for a layout given as positions or, for two
    membranes, as CollectiveCoordinates (used verbatim, keeping Q-parity exact)."""
    if method not in ("auto", "closed", "transfer"):
        raise DomainError(f"unknown characteristic function {method!r}")
    if method == "closed" or (method == "auto" and geom.membrane_count == 2):
        if isinstance(positions, CollectiveCoordinates):
            coords = positions
        else:
            coords = CollectiveCoordinates.from_positions(positions)
        return lambda k: char_two_membrane(k, coords, geom)
    positions = _as_positions(geom, positions)
    return lambda k: char_transfer_matrix(k, positions, geom)


def _subcavity_lengths(geom: CavityGeometry, positions) -> np.ndarray:
    edges = np.concatenate(([-geom.mirror_position], positions, [geom.mirror_position]))
    return np.diff(edges)


def perfect_mirror_roots(geom: CavityGeometry, positions, window) -> RootSet:
    """R = 1: the sub-cavities decouple and the spectrum is the union of theirs."""
    a, b = window
    roots, below = [], 0
    for d in _subcavity_lengths(geom, positions):
        m = np.arange(1, int(math.floor(b * d / math.pi)) + 1)
        ks = m * math.pi / d
        roots.extend(ks[ks > a])
        below += int(np.count_nonzero(ks <= a))
    roots = np.array(sorted(roots))
    # the N+1 zero-frequency sub-cavity modes occupy global indices 0..N
    first = geom.membrane_count + below + 1
    return RootSet((a, b), roots, np.zeros_like(roots), 0.0, first, degenerate=True)


def solve_spectrum(geom: CavityGeometry, positions=None, window=(1.4, 2.3),
                   oversample: int = DEFAULT_OVERSAMPLE, method: str = "auto",
                   xtol_rel: float = BISECT_XTOL_REL) -> RootSet:
    """All allowed wavenumbers of the resonator inside ``window``.

    ``positions`` defaults to the rest layout; two-membrane layouts may also be
    given as CollectiveCoordinates. ``method`` picks the closed two-membrane
    equation ("closed"), the transfer-matrix function ("transfer"), or the
    former whenever N = 2 ("auto").
    """
    positions = geom.membrane_rest_positions if positions is None else positions
    x = _as_positions(geom, positions)
    if geom.is_perfect_mirror:
        return perfect_mirror_roots(geom, x, window)
    f = _char_function(geom, positions, method)
    return scan_roots(f, window, oversample, spacing=1.0 / (geom.multiplet_size * geom.half_subcavity_length),
                      count=lambda k: mode_count(k, x, geom), xtol_rel=xtol_rel)


def group_multiplets(rs: RootSet, geom: CavityGeometry) -> list[LabeledRoot]:
    """Label roots as (n, i): multiplet n anchored at n pi / 2L, i ascending within it.

    Labels come from the global mode index (exact when the root set carries
    one). Without it, roots are anchored to the nearest multiplet base
    frequency at or below them, valid for the symmetric rest layout.
    """
    size = geom.multiplet_size
    if len(rs) == 0:
        return []
    if rs.first_index is not None:
        idx = rs.first_index + np.arange(len(rs))
        ns, iis = idx // size, idx % size + 1
    else:
        L = geom.half_subcavity_length
        ns = np.floor(rs.roots * 2 * L / math.pi * (1 + 1e-12)).astype(int)
        iis = np.zeros_like(ns)
        for n in np.unique(ns):
            sel = np.nonzero(ns == n)[0]
            iis[sel] = np.arange(1, len(sel) + 1)
    counts = {n: int(np.count_nonzero(ns == n)) for n in np.unique(ns)}
    return [LabeledRoot(int(n), int(i), float(k), rs.degenerate, counts[n] < size)
            for n, i, k in zip(ns, iis, rs.roots)]


def _phase_crossing(geom, x, target, k_hi, xtol_rel=1e-13):
    g = lambda k: float(mode_phase(k, x, geom)) - target
    return bisect(g, 0.0, k_hi, g(0.0), xtol_rel=xtol_rel)


def branch_root(geom: CavityGeometry, positions, n: int, i: int, method: str = "auto",
                xtol_rel: float = 0.0) -> float:
    """Wavenumber of branch (n, i) at the given membrane positions.

    The root is isolated using the mode phase (which crosses m pi exactly once,
    m = n (N+1) + i - 1) and then refined on the characteristic function.
    """
    size = geom.multiplet_size
    if not 1 <= i <= size:
        raise DomainError(f"branch index i must lie in 1..{size}")
    return root_by_index(geom, positions, n * size + i - 1, method, xtol_rel)


def root_by_index(geom: CavityGeometry, positions, m: int, method: str = "auto",
                  xtol_rel: float = 0.0) -> float:
    """Wavenumber of the m-th mode (k = 0 is mode 0)."""
    if m < 1:
        raise DomainError("mode 0 is the trivial k = 0 solution")
    n, i = divmod(m, geom.multiplet_size)
    i += 1
    if isinstance(positions, CollectiveCoordinates):
        # bracket on the mirror image with Q >= 0 so that +Q and -Q give bit-identical roots
        x = _as_positions(geom, CollectiveCoordinates(positions.relative, abs(positions.com)))
    else:
        x = _as_positions(geom, positions)
    if geom.is_perfect_mirror:
        k_top = (m + 1) * math.pi / float(np.min(_subcavity_lengths(geom, x)))
        rs = perfect_mirror_roots(geom, x, (1e-300, k_top))
        return float(rs.roots[m - rs.first_index])
    total = geom.total_length
    k_hi = (m + 1 + geom.membrane_count) * math.pi / total
    lo = _phase_crossing(geom, x, (m - 0.5) * math.pi, k_hi)
    hi = _phase_crossing(geom, x, (m + 0.5) * math.pi, k_hi)
    f = _char_function(geom, positions, method)
    scalar_f = lambda k: float(f(np.asarray(k)))
    flo, fhi = scalar_f(lo), scalar_f(hi)
    if flo * fhi > 0:
        raise NumericalError(f"branch ({n},{i}) not bracketed on [{lo}, {hi}]")
    return bisect(scalar_f, lo, hi, flo, xtol_rel=xtol_rel)


# --------------------------------------------------------------------------
# sweeps


def coordinate_positions(geom: CavityGeometry, values: dict[str, float]) -> np.ndarray:
    """Membrane positions for named collective coordinates.

    Two membranes: ``q`` (separation, rest 2L) and ``Q`` (centre of mass, rest 0).
    Any N: ``Q1`` .. ``QN`` displace the normal modes of ``modes.basis(N)``
    from the rest layout.
    """
    rest = np.array(geom.membrane_rest_positions)
    if any(name in ("q", "Q") for name in values):
        if geom.membrane_count != 2:
            raise DomainError("coordinates q, Q are defined for two membranes only")
        c0 = CollectiveCoordinates.from_positions(rest)
        unknown = set(values) - {"q", "Q"}
        if unknown:
            raise DomainError(f"cannot mix q/Q with {sorted(unknown)}")
        c = CollectiveCoordinates(values.get("q", c0.relative), values.get("Q", c0.com))
        return geom.check_positions(c.positions())
    from .modes import basis

    b = basis(geom.membrane_count)
    amps = np.zeros(geom.membrane_count)
    for name, value in values.items():
        if not (name.startswith("Q") and name[1:].isdigit() and 1 <= int(name[1:]) <= geom.membrane_count):
            raise DomainError(f"unknown coordinate {name!r}")
        amps[int(name[1:]) - 1] = value
    return geom.check_positions(rest + b.displacement(amps))


@dataclass
class SpectrumSurface:
    axes: tuple[str, ...]
    grids: tuple[np.ndarray, ...]
    points: np.ndarray                     # (P, len(axes)), C order over grids
    omega: dict[tuple[int, int], np.ndarray]
    continuous: dict[tuple[int, int], np.ndarray]
    ambiguous: dict[tuple[int, int], np.ndarray]
    partial: set[int] = field(default_factory=set)
    light_speed: float = 1.0

    @property
    def branches(self) -> list[tuple[int, int]]:
        return sorted(self.omega)

    @property
    def ok(self) -> bool:
        return all(bool(np.all(v)) for v in self.continuous.values())

    def rows(self):
        """(coords..., n, i, omega, flag) ordered by branch then grid point."""
        for key in self.branches:
            for p, w, flag in zip(self.points, self.omega[key], self.continuous[key]):
                yield (*p, key[0], key[1], w, int(bool(flag)))


def _track(surface_omega, shape, all_roots, c):
    """Nearest-frequency continuation along the last grid axis.

    Returns (continuous, ambiguous) flags per branch. A point is discontinuous
    when continuation picks a different root than the label, and ambiguous when
    the next-nearest candidate is within 10x the prediction error.
    """
    cont, amb = {}, {}
    P = int(np.prod(shape))
    lines = np.arange(P).reshape(shape).reshape(-1, shape[-1])
    for key, w in surface_omega.items():
        ok = np.isfinite(w).copy()
        ambiguous = np.zeros(P, dtype=bool)
        for line in lines:
            for t in range(1, len(line)):
                j, j1 = line[t], line[t - 1]
                if not (np.isfinite(w[j]) and np.isfinite(w[j1])):
                    ok[j] = False
                    continue
                pred = w[j1]
                if t >= 2 and np.isfinite(w[line[t - 2]]):
                    pred = 2 * w[j1] - w[line[t - 2]]
                cand = c * all_roots[j]
                d = np.abs(cand - pred)
                order = np.argsort(d)
                nearest = cand[order[0]]
                if nearest != w[j]:
                    ok[j] = False
                err = max(d[order[0]], 1e-12 * abs(pred))
                if len(order) > 1 and d[order[1]] < 10 * err:
                    ambiguous[j] = True
        cont[key], amb[key] = ok, ambiguous
    return cont, amb


def sweep_surface(geom: CavityGeometry, axes: Sequence[str], grids: Sequence[Sequence[float]],
                  window=(1.4, 2.3), multiplets: Sequence[int] | None = None,
                  fixed: dict[str, float] | None = None, oversample: int = DEFAULT_OVERSAMPLE,
                  method: str = "auto") -> SpectrumSurface:
    """Sample branch frequencies omega_{n,i} = c k over a 1-D or 2-D grid.

    Grid points are independent; continuity is checked afterwards by a
    sequential pass along the last axis. Multiplets that are not complete at
    every grid point are dropped unless requested explicitly, in which case
    missing samples are NaN and flagged discontinuous.
    """
    axes = tuple(axes)
    grids = tuple(np.asarray(g, dtype=float) for g in grids)
    if len(axes) != len(grids) or not 1 <= len(axes) <= 2:
        raise DomainError("sweep needs one or two axes with one grid each")
    shape = tuple(len(g) for g in grids)
    points = np.array(list(itertools.product(*grids))).reshape(-1, len(axes))
    fixed = dict(fixed or {})
    c = geom.light_speed

    labelled, all_roots = [], []
    for p in points:
        values = {**fixed, **dict(zip(axes, p))}
        x = coordinate_positions(geom, values)
        rs = solve_spectrum(geom, x, window, oversample, method)
        all_roots.append(rs.roots)
        labelled.append(group_multiplets(rs, geom))

    complete = None
    partial = set()
    for labels in labelled:
        ns = {lr.n for lr in labels if not lr.partial}
        partial |= {lr.n for lr in labels if lr.partial}
        complete = ns if complete is None else complete & ns
    wanted = sorted(complete or ()) if multiplets is None else list(multiplets)

    omega = {}
    for n in wanted:
        for i in range(1, geom.multiplet_size + 1):
            omega[(n, i)] = np.full(len(points), np.nan)
    for j, labels in enumerate(labelled):
        for lr in labels:
            if (lr.n, lr.i) in omega:
                omega[(lr.n, lr.i)][j] = c * lr.k
    cont, amb = _track(omega, shape, all_roots, c)
    return SpectrumSurface(axes, grids, points, omega, cont, amb, partial & set(wanted), c)


def min_branch_gap(surface: SpectrumSurface) -> float:
    """Smallest separation between consecutive branches of the same multiplet."""
    gap = math.inf
    for (n, i) in surface.branches:
        nxt = surface.omega.get((n, i + 1))
        if nxt is not None:
            gap = min(gap, float(np.nanmin(nxt - surface.omega[(n, i)])))
    return gap


def modulation_period(coord: np.ndarray, omega: np.ndarray) -> float:
    """Mean spacing between successive extrema of the same kind along a sweep."""
    w = np.asarray(omega)
    spacings = []
    for cmp in (np.greater, np.less):
        ext = [coord[j] for j in range(1, len(w) - 1)
               if cmp(w[j], w[j - 1]) and not cmp(w[j + 1], w[j])]
        spacings.extend(np.diff(ext))
    if not spacings:
        raise NumericalError("sweep does not contain two extrema of the same kind")
    return float(np.mean(spacings))
