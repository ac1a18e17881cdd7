"""Compiled sub-expressions usable as ``@name`` references.

A block implements ``eval_scaled(z) -> (value, scale)``, ``pole_families()``
and ``to_json()``.  Two kinds exist:

* :class:`RationalBlock` -- a polynomial in ``z/s`` plus *ring terms*
  ``sum_i c_i w**i / (1 - w**m)`` with ``w = z/rho``.  A ring term has its
  poles at the ``m``-th roots of ``rho**m``; ``m * z**(m-1) / (z**m - rho**m)``
  (the sum of ``1/(z - p)`` over the ring) is the single term
  ``i = m-1, c = -m/rho``.
* :class:`PlateauBlock` -- an entire sum of affine maps times smooth
  plateaus ``(erf(k(z-l)) - erf(k(z-u)))/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .nodes import RingPoles


def ring_basis(z, rho, m, powers):
    """Columns ``w**i / (1 - w**m)`` for ``i`` in ``powers``, stable on both sides of the ring."""
    z = np.asarray(z, complex)
    w = z / rho
    inside = np.abs(w) <= 1.0
    wi = np.where(inside, w, 1.0)
    u = np.where(inside, 1.0, 1.0 / np.where(inside, 1.0, w))
    powers = np.asarray(powers)
    with np.errstate(all="ignore"):
        den_in = 1.0 - wi ** m
        den_out = 1.0 - u ** m
        cols_in = wi[:, None] ** powers[None, :] / den_in[:, None]
        # w^i/(1-w^m) = -u^(m-i)/(1-u^m)
        cols_out = -(u[:, None] ** (m - powers[None, :])) / den_out[:, None]
    return np.where(inside[:, None], cols_in, cols_out)


def ring_minus_limit(z, rho, m):
    """``1/(1-w**m) - 1`` inside the ring and ``1/(1-w**m)`` outside.

    Both are small away from the ring, so partial sums that nearly cancel
    a linear map can be formed without rounding loss.
    """
    z = np.asarray(z, complex)
    w = z / rho
    inside = np.abs(w) <= 1.0
    with np.errstate(all="ignore"):
        wm = np.where(inside, w, 1.0) ** m
        um = (1.0 / np.where(inside, 1.0, w)) ** m
        q_in = wm / (1.0 - wm)
        q_out = -um / (1.0 - um)
    return np.where(inside, q_in, q_out)


@dataclass
class RingTerm:
    rho: float
    m: int
    powers: np.ndarray
    coeffs: np.ndarray  # complex, aligned with powers

    def to_json(self):
        return {"rho": self.rho, "m": self.m, "powers": [int(p) for p in self.powers],
                "coeffs_re": list(map(float, np.real(self.coeffs))),
                "coeffs_im": list(map(float, np.imag(self.coeffs)))}

    @classmethod
    def from_json(cls, d):
        return cls(float(d["rho"]), int(d["m"]), np.array(d["powers"], int),
                   np.array(d["coeffs_re"]) + 1j * np.array(d["coeffs_im"]))


@dataclass
class RationalBlock:
    """``sum_j a_j (z/s)**j + sum of ring terms``."""

    poly: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    scale: float = 1.0
    rings: list = field(default_factory=list)
    transcendental = False

    def terms(self, z):
        """Individual term values, shape ``(len(z), n_terms)``."""
        z = np.atleast_1d(np.asarray(z, complex))
        cols = []
        if len(self.poly):
            cols.append(((z / self.scale)[:, None] ** np.arange(len(self.poly))) * self.poly)
        for r in self.rings:
            cols.append(ring_basis(z, r.rho, r.m, r.powers) * r.coeffs)
        if not cols:
            return np.zeros((len(z), 1), complex)
        return np.concatenate(cols, axis=1)

    def eval_scaled(self, z):
        t = self.terms(z)
        return t.sum(axis=1), np.abs(t).sum(axis=1)

    def __call__(self, z):
        return self.eval_scaled(z)[0]

    def pole_families(self):
        return [RingPoles(r.rho, r.m) for r in self.rings if np.any(r.coeffs != 0)]

    def pole_mask(self, z):
        z = np.atleast_1d(np.asarray(z, complex))
        mask = np.zeros(z.shape, bool)
        for fam in self.pole_families():
            mask |= fam.near(z, 1e-9 * (1 + np.abs(z)))
        return mask

    def degree(self) -> int:
        return max(len(self.poly) - 1, 0) + sum(r.m for r in self.rings)

    def to_json(self):
        return {"kind": "rational", "scale": self.scale,
                "poly_re": list(map(float, np.real(self.poly))),
                "poly_im": list(map(float, np.imag(self.poly))),
                "rings": [r.to_json() for r in self.rings]}

    @classmethod
    def from_json(cls, d):
        poly = np.array(d.get("poly_re", [])) + 1j * np.array(d.get("poly_im", []))
        return cls(poly, float(d.get("scale", 1.0)), [RingTerm.from_json(r) for r in d.get("rings", [])])


@dataclass
class PlateauTerm:
    """``(c0 + c1 (z - p)) * (erf(k(z-l)) - erf(k(z-u))) / 2``."""

    p: float
    c0: complex
    c1: complex
    lo: float
    hi: float
    k: float

    def plateau(self, z):
        return 0.5 * (erf(self.k * (z - self.lo)) - erf(self.k * (z - self.hi)))

    def __call__(self, z):
        z = np.asarray(z, complex)
        with np.errstate(all="ignore"):
            return (self.c0 + self.c1 * (z - self.p)) * self.plateau(z)

    def to_json(self):
        return {"p": self.p, "c0": [self.c0.real, self.c0.imag], "c1": [self.c1.real, self.c1.imag],
                "lo": self.lo, "hi": self.hi, "k": self.k}

    @classmethod
    def from_json(cls, d):
        return cls(float(d["p"]), complex(*d["c0"]), complex(*d["c1"]),
                   float(d["lo"]), float(d["hi"]), float(d["k"]))


@dataclass
class PlateauBlock:
    terms: list = field(default_factory=list)
    transcendental = True

    def eval_scaled(self, z):
        z = np.atleast_1d(np.asarray(z, complex))
        v = np.zeros(z.shape, complex)
        s = np.zeros(z.shape)
        with np.errstate(all="ignore"):
            for t in self.terms:
                x = (t.c0 + t.c1 * (z - t.p)) * t.plateau(z)
                v += x
                s += np.abs(x)
        return v, s

    def __call__(self, z):
        return self.eval_scaled(z)[0]

    def derivative(self, z):
        z = np.atleast_1d(np.asarray(z, complex))
        d = np.zeros(z.shape, complex)
        c = 1.0 / np.sqrt(np.pi)
        with np.errstate(all="ignore"):
            for t in self.terms:
                dp = t.k * c * (np.exp(-(t.k * (z - t.lo)) ** 2) - np.exp(-(t.k * (z - t.hi)) ** 2))
                d += t.c1 * t.plateau(z) + (t.c0 + t.c1 * (z - t.p)) * dp
        return d

    def pole_families(self):
        return []

    def to_json(self):
        return {"kind": "plateau", "terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, d):
        return cls([PlateauTerm.from_json(t) for t in d["terms"]])


BLOCK_TYPES = {"rational": RationalBlock, "plateau": PlateauBlock}


def block_from_json(d):
    kind = d.get("kind")
    if kind not in BLOCK_TYPES:
        raise ValueError(f"unknown block kind {kind!r}")
    return BLOCK_TYPES[kind].from_json(d)
