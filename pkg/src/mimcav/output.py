"""Self-describing CSV and JSON emitters with fixed precision."""
from __future__ import annotations

import io
import json
import math

import numpy as np

from . import __version__
from .model import CavityGeometry
from .spectrum import SpectrumSurface


def header(geom: CavityGeometry, command: str, **extra) -> dict:
    dimensionless = geom.half_subcavity_length == 1.0 and geom.light_speed == 1.0
    meta = {
        "tool": "mimcav",
        "version": __version__,
        "command": command,
        "geometry": {
            "membrane_count": geom.membrane_count,
            "reflectivity": geom.reflectivity,
            "half_subcavity_length": geom.half_subcavity_length,
            "light_speed": geom.light_speed,
            "membrane_rest_positions": list(geom.membrane_rest_positions),
        },
        "units": "dimensionless (L = c = 1)" if dimensionless else
                 "physical: lengths in units of L's unit, omega = c k",
    }
    meta.update(extra)
    return meta


def fmt(x, precision: int = 12) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.{precision}g}"


def surface_csv(surface: SpectrumSurface, meta: dict, precision: int = 12) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    columns = [*surface.axes, "multiplet_n", "branch_i", "omega", "continuity_flag"]
    buf.write(",".join(columns) + "\n")
    for row in surface.rows():
        *coords, n, i, w, flag = row
        buf.write(",".join([*(fmt(c, precision) for c in coords), str(n), str(i), fmt(w, precision), str(flag)]) + "\n")
    return buf.getvalue()


def _round(obj, precision):
    if isinstance(obj, dict):
        return {str(k): _round(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, precision) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{precision}g}")
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist(), precision)
    return obj


def json_document(result, meta: dict, precision: int = 12) -> str:
    doc = {"meta": meta, "result": result}
    return json.dumps(_round(doc, precision), indent=2, sort_keys=True) + "\n"
