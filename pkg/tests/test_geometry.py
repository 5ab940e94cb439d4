import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orirsim import geometry as geo


def beam(X=26.0, lam=0.78, direction=(1, 2, -1)):
    return geo.BeamSpec(direction, geo.waist_for_rayleigh_length(X, lam), lam)


def test_rayleigh_waist_round_trip():
    w0 = geo.waist_for_rayleigh_length(26.0, 0.78)
    assert w0 == pytest.approx(2.5407, abs=1e-4)
    assert geo.rayleigh_length(w0, 0.78) == pytest.approx(26.0)
    assert geo.rayleigh_length(w0, 1.56) == pytest.approx(13.0)


def test_beam_radius():
    w0, lam = 3.0, 0.78
    X = geo.rayleigh_length(w0, lam)
    assert geo.beam_radius(0.0, w0, lam) == pytest.approx(w0)
    assert geo.beam_radius(X, w0, lam) == pytest.approx(math.sqrt(2) * w0)
    far = 50 * X
    assert geo.beam_radius(far, w0, lam) >= math.sqrt(2 * lam * far / math.pi)


@settings(max_examples=50)
@given(st.floats(0.5, 10), st.floats(0.3, 2), st.floats(-500, 500))
def test_beam_radius_identity(w0, lam, l):
    X = geo.rayleigh_length(w0, lam)
    w = geo.beam_radius(l, w0, lam)
    assert w**2 - w0**2 * (1 + l**2 / X**2) == pytest.approx(0.0, abs=1e-9 * w**2)


def test_perpendicular_distance_examples():
    b = beam()
    L = 10.0
    assert geo.perpendicular_distance((0, 0, 0), b) == (0.0, 0.0)
    l, r = geo.perpendicular_distance(L * np.array([1, 2, -1]), b)
    assert l == pytest.approx(math.sqrt(6) * L) and r == pytest.approx(0.0, abs=1e-12)
    l, r = geo.perpendicular_distance((0, L, 0), b)
    assert l == pytest.approx(2 * L / math.sqrt(6))
    assert r == pytest.approx(L / math.sqrt(3))


@settings(max_examples=50)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=3))
def test_perpendicular_distance_pythagoras(site):
    l, r = geo.perpendicular_distance(site, beam())
    d2 = float(np.dot(site, site))
    assert l**2 + r**2 == pytest.approx(d2, rel=1e-12, abs=1e-12)


def test_rabi_scale_values():
    b = beam()
    assert geo.rabi_scale((0, 0, 0), b) == 1.0
    on_axis = math.sqrt(6) * 10 * b.unit
    assert geo.rabi_scale(on_axis, b) == pytest.approx(0.728, abs=1e-3)
    # radial factor e^-4 at r = 2 w(l)
    l = 20.0
    w = geo.beam_radius(l, b.waist, b.wavelength)
    normal = np.cross(b.unit, (1, 0, 0))
    normal /= np.linalg.norm(normal)
    site = l * b.unit + 2 * w * normal
    X = b.rayleigh_length
    assert geo.rabi_scale(site, b) == pytest.approx(X / math.hypot(X, l) * math.exp(-4))


def test_rabi_scale_monotone():
    b = beam()
    axial = [geo.rabi_scale(s * b.unit, b) for s in np.linspace(0, 80, 30)]
    assert np.all(np.diff(axial) < 0)
    n = np.cross(b.unit, (0, 0, 1))
    radial = [geo.rabi_scale(5 * b.unit + s * n, b) for s in np.linspace(0, 3, 30)]
    assert np.all(np.diff(radial) < 0)


def test_vdw_ratios():
    m = geo.InteractionModel(1.0, 10.0)
    assert geo.vdw_interaction(m, 10.0) == 1.0
    assert geo.vdw_interaction(m, math.sqrt(6) * 10) == pytest.approx(1 / 216, rel=1e-14)
    assert geo.vdw_interaction(m, math.sqrt(3) * 10) == pytest.approx(1 / 27, rel=1e-14)
    d = np.array([3.0, 7.0, 12.0])
    assert np.allclose(geo.vdw_interaction(m, d) * d**6, 1e6)
    with pytest.raises(ValueError):
        geo.vdw_interaction(m, 0.0)


def test_max_addressable_lattice():
    assert geo.max_addressable_lattice(16.5, 0.78) == ((3, 5, 3), 2)
    assert geo.max_addressable_lattice(6.0, 0.78) == ((2, 3, 2), 1)
    assert geo.max_addressable_lattice(1.0, 0.78) == ((1, 1, 1), 0)


@settings(max_examples=50)
@given(st.floats(1, 50), st.floats(1, 50), st.floats(0.3, 1.5))
def test_max_addressable_lattice_monotone(L1, L2, lam):
    a, b = sorted((L1, L2))
    assert geo.max_addressable_lattice(a, lam)[1] <= geo.max_addressable_lattice(b, lam)[1]
    assert geo.max_addressable_lattice(a, lam)[1] >= geo.max_addressable_lattice(a, lam * 1.3)[1]


def test_distance_bound():
    assert geo.distance_bound(10.0, 0.78) == pytest.approx(0.33 * 100 / 0.78, rel=0.01)
    assert geo.distance_bound(10.0, 0.39) == pytest.approx(2 * geo.distance_bound(10.0, 0.78))
    assert geo.distance_bound(10.0, 0.78, r_perp0=3.0, waist=3.0) == 0.0
    lmax = geo.distance_bound(10.0, 0.78, r_perp0=4.6, waist=2.0)
    assert geo.beam_radius(lmax, 2.0, 0.78) == pytest.approx(4.6)


def test_phase_mismatch():
    assert geo.orir_phase_mismatch(0.0, 1.0, 2.0, 3.0) == 0.0
    phi = geo.orir_phase_mismatch(1.0, 0.0, 0.0, 2 * math.pi * 1e3)
    assert phi == pytest.approx(4.19e-5, rel=1e-3)


def test_lattice_and_site_table():
    lat = geo.LatticeSpec(16.5, (3, 5, 3))
    sites = lat.sites()
    assert sites.shape == (45, 3)
    assert np.allclose(sites.mean(axis=0), 0.0)
    tab = geo.site_table(lat, {"par": beam()}, geo.InteractionModel(1.0, 16.5))
    assert set(tab) >= {"x_um", "l_par_um", "r_par_um", "scale_par", "v_over_v0"}
    centre = int(np.argmin(tab["distance_um"]))
    assert tab["scale_par"][centre] == 1.0
    assert np.isnan(tab["v_over_v0"][centre])
