"""Optomechanical expansion coefficients of the two-membrane spectrum.

Each optical branch is expanded about an operating point (q0, Q0) as

    omega(q, Q) = delta + b_rel dq + b_com dQ + m_rel dq^2 + m_com dQ^2 + p_cross dq dQ + ...

with no factors of 1/2, so m_* are half the second derivatives and p_cross is
the mixed derivative. Here q is the membrane separation (the argument of the
closed two-membrane equation, 2L at rest) and Q the centre of mass.

Coefficients are in physical units built from L and c: omega ~ c/L,
b ~ c/L^2, m and p ~ c/L^3. With L = c = 1 they are the dimensionless values.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, NumericalError, SingularPointError, StencilContaminationError
from .model import R_NUMERIC_MAX, CavityGeometry, CollectiveCoordinates, MechanicalParams
from .spectrum import root_by_index

DEFAULT_STEP = 1e-4

# The closed-form slope differentiates with respect to q1 - q2 labelled left to
# right, i.e. minus the separation used here; its sign flips accordingly.
CLOSED_FORM_SLOPE_ORIENTATION = -1.0

DEFAULT_TOLERANCES = {
    "delta_rel": 1e-9,
    "b_rel": 1e-6,
    "b_zero_abs": 1e-8,
    "m_rel": 1e-4,
    "m_zero_abs": 1e-8,
    "b_com_abs": 1e-8,
    "p_abs": 1e-6,
}


@dataclass
class CouplingCoefficients:
    q0: float
    Q0: float
    n: int
    i: int
    delta: float
    b_rel: float
    b_com: float
    m_rel: float
    m_com: float
    p_cross: float
    step: float
    theta_ni: float = field(init=False)
    xi_ni: float = field(init=False)
    tau: float = field(init=False)
    half_length: float = 1.0
    light_speed: float = 1.0

    def __post_init__(self):
        L, c = self.half_length, self.light_speed
        self.theta_ni = 2.0 * self.delta * L / c
        self.xi_ni = self.theta_ni / (2.0 * L) ** 2
        self.tau = 4.0 * L / c

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = {
            "mode": "dimensionless" if (self.half_length == 1.0 and self.light_speed == 1.0) else "physical",
            "delta": "c/L", "b_rel": "c/L^2", "b_com": "c/L^2",
            "m_rel": "c/L^3", "m_com": "c/L^3", "p_cross": "c/L^3",
            "q0": "L", "Q0": "L", "step": "L", "xi_ni": "1/L^2", "tau": "L/c",
        }
        return d


# --------------------------------------------------------------------------
# closed forms at q0 = 2L, Q0 = 0


def _require_pair(geom: CavityGeometry):
    if geom.membrane_count != 2:
        raise DomainError("closed forms exist only for two membranes")


def delta_closed_form(n: int, i: int, geom: CavityGeometry) -> float:
    """Triplet frequencies at the symmetric operating point."""
    _require_pair(geom)
    if i not in (1, 2, 3):
        raise DomainError(f"closed forms exist for i in 1..3, got {i}")
    L, c, th = geom.half_subcavity_length, geom.light_speed, geom.theta
    if i == 1:
        return n * math.pi * c / (2 * L)
    a = math.asin(math.sqrt(3.0 + math.sin(th) ** 2) / 2.0)
    if i == 2:
        return c / (2 * L) * (n * math.pi + a - th)
    return c / (2 * L) * ((n + 1) * math.pi - a - th)


def b_closed_form(n: int, i: int, geom: CavityGeometry) -> float:
    """Linear coupling to the relative coordinate, in its closed-form orientation."""
    L, c, th = geom.half_subcavity_length, geom.light_speed, geom.theta
    t = 2.0 * delta_closed_form(n, i, geom) * L / c
    xi = t / (2.0 * L) ** 2
    den = (3.0 * math.cos(t) * math.sin(th) ** 2 + 3.0 * math.cos(2 * th + 3 * t)
           + math.sin(2 * th) * math.sin(t))
    if abs(den) < 1e-13:
        raise SingularPointError(f"closed-form slope denominator vanishes ({den:.3e})", den)
    # factor c restores frequency units
    return c * xi * math.sin(t) * math.sin(2 * th) / den


def m1_closed_form(n: int, geom: CavityGeometry) -> float:
    """Quadratic coupling of the lowest triplet member, -(1/6) tau xi^2 tan(theta)."""
    _require_pair(geom)
    if geom.reflectivity > R_NUMERIC_MAX:
        raise SingularPointError("quadratic coupling diverges as R -> 1 (tan theta -> infinity)")
    L, c = geom.half_subcavity_length, geom.light_speed
    tau = 4.0 * L / c
    xi = n * math.pi / (2.0 * L) ** 2
    # factor c^2 restores frequency units
    return -tau * xi ** 2 * math.tan(geom.theta) * c ** 2 / 6.0


# --------------------------------------------------------------------------
# numerical extraction


def _omega(geom, m, q, Q):
    return geom.light_speed * root_by_index(geom, CollectiveCoordinates(q, Q), m, method="closed", xtol_rel=0.0)


def _richardson(coarse, fine, order=2):
    return (2 ** order * fine - coarse) / (2 ** order - 1)


def extract_couplings_numeric(geom: CavityGeometry, n: int, i: int, q0: float | None = None,
                              Q0: float = 0.0, step: float = DEFAULT_STEP) -> CouplingCoefficients:
    """Finite-difference expansion coefficients of branch (n, i) about (q0, Q0).

    Central differences at steps h and h/2 (h = step * L) combined by one
    Richardson extrapolation. Every stencil root is bisected to machine
    precision on the closed two-membrane equation, with the branch isolated by
    its mode index so neighbouring branches cannot be picked up.
    """
    _require_pair(geom)
    if geom.is_perfect_mirror:
        raise DomainError("couplings are undefined for perfect mirrors (degenerate branches)")
    if not 1 <= i <= 3:
        raise DomainError("branch index must be 1..3")
    L = geom.half_subcavity_length
    q0 = 2.0 * L if q0 is None else float(q0)
    h = step * L
    m = n * 3 + i - 1
    w = lambda dq, dQ: _omega(geom, m, q0 + dq, Q0 + dQ)

    w0 = w(0.0, 0.0)
    # neighbouring branches at the centre set the contamination threshold
    c = geom.light_speed
    below = c * root_by_index(geom, CollectiveCoordinates(q0, Q0), m - 1, "closed") if m > 1 else 0.0
    above = c * root_by_index(geom, CollectiveCoordinates(q0, Q0), m + 1, "closed")
    gap = min(w0 - below, above - w0)

    samples = {}
    for s in (h, 0.5 * h):
        for key in ((s, 0), (-s, 0), (0, s), (0, -s), (s, s), (s, -s), (-s, s), (-s, -s)):
            samples[key] = w(*key)
    for key, value in samples.items():
        if abs(value - w0) > 0.1 * gap:
            raise StencilContaminationError(
                f"branch ({n},{i}) moves by {abs(value - w0):.3e} at stencil offset {key}, "
                f"comparable to the branch gap {gap:.3e}", point=(q0 + key[0], Q0 + key[1]))

    def first(axis, s):
        p = (s, 0) if axis == 0 else (0, s)
        mneg = (-s, 0) if axis == 0 else (0, -s)
        return (samples[p] - samples[mneg]) / (2 * s)

    def half_second(axis, s):
        p = (s, 0) if axis == 0 else (0, s)
        mneg = (-s, 0) if axis == 0 else (0, -s)
        return 0.5 * (samples[p] - 2 * w0 + samples[mneg]) / s ** 2

    def cross(s):
        return (samples[(s, s)] - samples[(s, -s)] - samples[(-s, s)] + samples[(-s, -s)]) / (4 * s ** 2)

    hh = 0.5 * h
    return CouplingCoefficients(
        q0=q0, Q0=Q0, n=n, i=i, delta=w0,
        b_rel=_richardson(first(0, h), first(0, hh)),
        b_com=_richardson(first(1, h), first(1, hh)),
        m_rel=_richardson(half_second(0, h), half_second(0, hh)),
        m_com=_richardson(half_second(1, h), half_second(1, hh)),
        p_cross=_richardson(cross(h), cross(hh)),
        step=h, half_length=L, light_speed=geom.light_speed,
    )


def fit_couplings_lsq(geom: CavityGeometry, n: int, i: int, q0: float | None = None,
                      Q0: float = 0.0, step: float = DEFAULT_STEP) -> dict[str, float]:
    """Full 2-D quadratic least-squares fit over a 5x5 stencil of spacing ``step * L``."""
    _require_pair(geom)
    L = geom.half_subcavity_length
    q0 = 2.0 * L if q0 is None else float(q0)
    h = step * L
    m = n * 3 + i - 1
    offs = h * np.arange(-2, 3)
    rows, rhs = [], []
    for dq in offs:
        for dQ in offs:
            rows.append([1.0, dq, dQ, dq * dq, dQ * dQ, dq * dQ])
            rhs.append(_omega(geom, m, q0 + dq, Q0 + dQ))
    rhs = np.array(rhs)
    coef, *_ = np.linalg.lstsq(np.array(rows), rhs - rhs[12], rcond=None)
    return {"delta": rhs[12] + coef[0], "b_rel": coef[1], "b_com": coef[2],
            "m_rel": coef[3], "m_com": coef[4], "p_cross": coef[5]}


def single_photon_scales(coeffs: CouplingCoefficients, mech: MechanicalParams, mode: str = "relative",
                         effective_mass: float | None = None) -> tuple[float, float]:
    """(linear, quadratic) coupling rates B x_zpf and M x_zpf^2 for one collective mode.

    Effective masses default to m/2 for the relative mode and 2m for the COM mode.
    """
    if mode == "relative":
        b, mq, m_eff = coeffs.b_rel, coeffs.m_rel, 0.5 * mech.mass
    elif mode == "com":
        b, mq, m_eff = coeffs.b_com, coeffs.m_com, 2.0 * mech.mass
    else:
        raise DomainError(f"mode must be 'relative' or 'com', got {mode!r}")
    if effective_mass is not None:
        m_eff = effective_mass
    x_zpf = mech.zero_point_amplitude(m_eff)
    return b * x_zpf, mq * x_zpf ** 2


# --------------------------------------------------------------------------
# validation records


@dataclass
class Check:
    name: str
    numeric: float
    reference: float | None
    tolerance: float
    kind: str                       # "rel", "abs", or "bool"
    passed: bool = field(init=False)
    abs_dev: float = field(init=False)
    rel_dev: float = field(init=False)
    note: str = ""
    skipped: bool = False

    def __post_init__(self):
        ref = 0.0 if self.reference is None else self.reference
        self.abs_dev = abs(self.numeric - ref)
        self.rel_dev = self.abs_dev / abs(ref) if ref != 0 else math.inf
        if self.skipped:
            self.passed = True
        elif self.kind == "rel":
            self.passed = bool(self.rel_dev <= self.tolerance)
        elif self.kind == "abs":
            self.passed = bool(self.abs_dev <= self.tolerance)
        elif self.kind == "bool":
            self.passed = bool(self.numeric)
        else:
            raise ValueError(f"unknown check kind {self.kind!r}")

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        if self.kind == "bool" or self.skipped:
            return f"[{status}] {self.name}" + (f"  ({self.note})" if self.note else "")
        dev = self.rel_dev if self.kind == "rel" else self.abs_dev
        return (f"[{status}] {self.name}: numeric={self.numeric:.12g} reference={self.reference!r:.14s} "
                f"{self.kind}_dev={dev:.3e} tol={self.tolerance:.1e}" + (f"  ({self.note})" if self.note else ""))

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("rel_dev", "abs_dev"):
            if not math.isfinite(d[key]):
                d[key] = None
        return d


def compare(name: str, numeric: float, reference: float, rel_tol: float, abs_tol: float, note: str = "") -> Check:
    """Relative comparison, or absolute when the reference is exactly zero."""
    if reference != 0.0:
        return Check(name, numeric, reference, rel_tol, "rel", note=note)
    return Check(name, numeric, reference, abs_tol, "abs", note=note)


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, other: "ValidationReport"):
        self.checks.extend(other.checks)

    def summary(self) -> str:
        n_fail = sum(not c.passed for c in self.checks)
        lines = [c.line() for c in self.checks]
        lines.append(f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "meta": self.meta, "checks": [c.to_dict() for c in self.checks]}


def crosscheck(geom: CavityGeometry, n: int = 1, tolerances: dict | None = None,
               step: float = DEFAULT_STEP) -> ValidationReport:
    """Numeric coefficients at (2L, 0) against the closed forms, for the whole triplet."""
    _require_pair(geom)
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    report = ValidationReport(meta={"n": n, "reflectivity": geom.reflectivity, "q0": 2 * geom.half_subcavity_length,
                                    "Q0": 0.0, "step": step})
    R = geom.reflectivity
    if geom.is_perfect_mirror:
        from .spectrum import branch_root
        for i in (1, 2, 3):
            k = branch_root(geom, geom.membrane_rest_positions, n, i)
            report.checks.append(compare(f"Delta_{n},{i} (R=1 degenerate)", geom.light_speed * k,
                                         delta_closed_form(n, i, geom), tol["delta_rel"], 0.0,
                                         note="analytic perfect-mirror spectrum"))
        report.checks.append(Check("couplings at R=1", 0.0, None, 0.0, "abs", skipped=True,
                                   note="degenerate branches; couplings undefined"))
        return report

    transparent = "transparent membranes: spectrum independent of positions" if R == 0 else ""
    coeffs = {i: extract_couplings_numeric(geom, n, i, step=step) for i in (1, 2, 3)}
    for i, cc in coeffs.items():
        report.checks.append(compare(f"Delta_{n},{i}", cc.delta, delta_closed_form(n, i, geom),
                                     tol["delta_rel"], tol["b_zero_abs"], note=transparent))
    report.checks.append(Check(f"B_{n},1", coeffs[1].b_rel, 0.0, tol["b_zero_abs"], "abs"))
    for i in (2, 3):
        ref = CLOSED_FORM_SLOPE_ORIENTATION * b_closed_form(n, i, geom)
        report.checks.append(compare(f"B_{n},{i}", coeffs[i].b_rel, ref, tol["b_rel"], tol["b_zero_abs"],
                                     note="closed form taken with respect to the separation"))
    report.checks.append(compare(f"M_{n},1", coeffs[1].m_rel, m1_closed_form(n, geom), tol["m_rel"],
                                 tol["m_zero_abs"]))
    for i in (1, 2, 3):
        report.checks.append(Check(f"B'_{n},{i}", coeffs[i].b_com, 0.0, tol["b_com_abs"], "abs"))
    for i in (1, 2, 3):
        report.checks.append(Check(f"P_{n},{i}", coeffs[i].p_cross, 0.0, tol["p_abs"], "abs"))
    report.meta["coefficients"] = [cc.to_dict() for cc in coeffs.values()]
    return report
