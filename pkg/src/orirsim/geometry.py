"""Gaussian beams through a cubic lattice: per-site Rabi scaling, vdW falloff,
addressable lattice size, and the phase mismatch of a counter-propagating pair.

Lengths in micrometres, frequencies in rad/us.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # um/us (numerically equal to m/s)

# fraction of the lattice constant that limits the addressable array
_LATTICE_FACTOR = 0.13
_EPS = 1e-9


@dataclass(frozen=True)
class BeamSpec:
    direction: tuple
    waist: float
    wavelength: float
    focus: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,) or not np.any(d):
            raise ValueError("beam direction must be a nonzero 3-vector")
        if not (self.waist > 0 and self.wavelength > 0):
            raise ValueError("waist and wavelength must be positive")
        object.__setattr__(self, "direction", tuple(int(x) if float(x).is_integer() else float(x) for x in d))
        object.__setattr__(self, "focus", tuple(float(x) for x in self.focus))

    @property
    def unit(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float)
        return d / np.linalg.norm(d)

    @property
    def rayleigh_length(self) -> float:
        return rayleigh_length(self.waist, self.wavelength)


@dataclass(frozen=True)
class LatticeSpec:
    constant: float
    dims: tuple = (3, 5, 3)

    def __post_init__(self):
        if not self.constant > 0:
            raise ValueError("lattice constant must be positive")
        dims = tuple(int(n) for n in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError("lattice dimensions must be three integers >= 1")
        object.__setattr__(self, "dims", dims)

    def indices(self) -> np.ndarray:
        return np.array(list(itertools.product(*(range(n) for n in self.dims))), dtype=int)

    @property
    def center_index(self) -> np.ndarray:
        return np.array([(n - 1) // 2 for n in self.dims])

    def sites(self, centered: bool = True) -> np.ndarray:
        """Site coordinates (um); with ``centered`` the central site is the origin."""
        idx = self.indices()
        if centered:
            idx = idx - self.center_index
        return idx * self.constant


@dataclass(frozen=True)
class InteractionModel:
    v0: float
    lattice_constant: float
    exponent: int = 6

    def __post_init__(self):
        if not self.lattice_constant > 0:
            raise ValueError("lattice constant must be positive")


def rayleigh_length(w0: float, wavelength: float) -> float:
    if not (w0 > 0 and wavelength > 0):
        raise ValueError("waist and wavelength must be positive")
    return math.pi * w0**2 / wavelength


def waist_for_rayleigh_length(X: float, wavelength: float) -> float:
    return math.sqrt(X * wavelength / math.pi)


def beam_radius(l1, w0: float, wavelength: float):
    X = rayleigh_length(w0, wavelength)
    return w0 * np.sqrt(X**2 + np.asarray(l1, dtype=float) ** 2) / X


def perpendicular_distance(site, beam: BeamSpec) -> tuple:
    """Longitudinal and radial coordinates of ``site`` in the beam frame."""
    rel = np.asarray(site, dtype=float) - np.asarray(beam.focus)
    u = beam.unit
    l_par = float(rel @ u)
    r_perp = float(np.linalg.norm(rel - l_par * u))
    return l_par, r_perp


def rabi_scale(site, beam: BeamSpec) -> float:
    """Field amplitude at ``site`` relative to the focus.

    Longitudinal factor X / sqrt(X^2 + l^2) times the radial Gaussian
    exp(-r^2 / w(l)^2).
    """
    l, r = perpendicular_distance(site, beam)
    X = beam.rayleigh_length
    w = float(beam_radius(l, beam.waist, beam.wavelength))
    return X / math.hypot(X, l) * math.exp(-(r**2) / w**2)


def vdw_interaction(model: InteractionModel, distance):
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = model.v0 * (model.lattice_constant / d) ** model.exponent
    return float(out) if out.ndim == 0 else out


def max_addressable_lattice(lattice_constant: float, wavelength: float) -> tuple:
    """((nx, ny, nz), N) with N = floor(0.13 L / lambda) and dims (1+N, 1+2N, 1+N).

    The floor tolerates 1e-9 so a ratio that is an integer up to rounding
    counts as that integer.
    """
    if not (lattice_constant > 0 and wavelength > 0):
        raise ValueError("lattice constant and wavelength must be positive")
    N = int(math.floor(_LATTICE_FACTOR * lattice_constant / wavelength + _EPS))
    return (1 + N, 1 + 2 * N, 1 + N), N


def distance_bound(lattice_constant: float, wavelength: float, r_perp0: float | None = None,
                   waist: float | None = None) -> float:
    """Largest focus-to-atom distance keeping an off-axis neighbour dark.

    A neighbour at radius 2 r0 is dark when exp(-4 r0^2 / w(l)^2) <= e^-4,
    i.e. w(l) >= r0.  Without a waist the divergence bound
    w(l) >= sqrt(2 lambda l / pi) is used, giving l < pi r0^2 / (2 lambda)
    (0.33 L^2 / lambda at r0 = 0.46 L).  With a waist the exact Gaussian
    radius is used; the bound is 0 once r0 <= w0.
    """
    if not (lattice_constant > 0 and wavelength > 0):
        raise ValueError("lattice constant and wavelength must be positive")
    r0 = 0.46 * lattice_constant if r_perp0 is None else r_perp0
    if waist is None:
        return math.pi * r0**2 / (2 * wavelength)
    ratio = r0 / waist
    if ratio <= 1.0:
        return 0.0
    return rayleigh_length(waist, wavelength) * math.sqrt(ratio**2 - 1.0)


def orir_phase_mismatch(z, delta: float, delta1: float, delta2: float):
    """2 (D + d2 - d1) z / c for detunings in rad/us and z in um."""
    return 2.0 * (delta + delta2 - delta1) * np.asarray(z, dtype=float) / SPEED_OF_LIGHT


def site_table(lattice: LatticeSpec, beams: dict, model: InteractionModel | None = None) -> dict:
    """Per-site columns: index, position, (l, r, scale) per beam, and V to the centre site."""
    idx = lattice.indices()
    pos = lattice.sites()
    cols = {"ix": idx[:, 0], "iy": idx[:, 1], "iz": idx[:, 2],
            "x_um": pos[:, 0], "y_um": pos[:, 1], "z_um": pos[:, 2]}
    for name, beam in beams.items():
        lr = np.array([perpendicular_distance(p, beam) for p in pos])
        cols[f"l_{name}_um"] = lr[:, 0]
        cols[f"r_{name}_um"] = lr[:, 1]
        cols[f"scale_{name}"] = np.array([rabi_scale(p, beam) for p in pos])
    dist = np.linalg.norm(pos, axis=1)
    cols["distance_um"] = dist
    if model is not None:
        v = np.full(dist.shape, np.nan)
        nz = dist > 0
        v[nz] = vdw_interaction(model, dist[nz]) / model.v0
        cols["v_over_v0"] = v
    return cols
