"""Forward orbits with escape, pole and overflow handling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import as_function, evaluate_array

DEFAULT_ESCAPE_RADIUS = 1e8
DEFAULT_N_MAX = 10_000
HARD_CAP = 1_000_000


@dataclass
class OrbitRecord:
    """Trajectory ``points[0..]`` of ``z0``.

    ``status`` is ``"escaped"``, ``"hit_pole"``, ``"overflow"`` or
    ``"bounded_horizon"``; ``step`` is the index ``k`` attached to the
    first three (``None`` for the horizon case).
    """

    start: complex
    points: np.ndarray
    status: str
    step: int | None
    escape_radius: float
    n_max: int

    def to_json(self):
        return {"start": [self.start.real, self.start.imag],
                "points": [[p.real, p.imag] for p in self.points],
                "status": self.status, "step": self.step,
                "escape_radius": self.escape_radius, "n_max": self.n_max}


def iterate_orbit(f, z0, n_max: int = DEFAULT_N_MAX,
                  escape_radius: float = DEFAULT_ESCAPE_RADIUS,
                  hard_cap: int = HARD_CAP) -> OrbitRecord:
    """Iterate ``f`` from ``z0`` for at most ``n_max`` steps.

    Point ``k`` is tested for escape first; ``f`` is then evaluated there
    and a pole or overflow ends the orbit with status at step ``k``.
    """
    f = as_function(f)
    if n_max < 0 or n_max > hard_cap:
        raise ValueError(f"n_max must lie in [0, {hard_cap}]")
    z = complex(z0)
    pts = [z]
    for k in range(n_max + 1):
        if abs(z) > escape_radius:
            return OrbitRecord(complex(z0), np.array(pts), "escaped", k, escape_radius, n_max)
        if k == n_max:
            break
        v, kind, _ = evaluate_array(f, z)
        if kind[0] == 1:
            return OrbitRecord(complex(z0), np.array(pts), "hit_pole", k, escape_radius, n_max)
        if kind[0] == 2:
            return OrbitRecord(complex(z0), np.array(pts), "overflow", k, escape_radius, n_max)
        z = complex(v[0])
        pts.append(z)
    return OrbitRecord(complex(z0), np.array(pts), "bounded_horizon", None, escape_radius, n_max)
