import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimcav import (
    CavityGeometry,
    CollectiveCoordinates,
    DomainError,
    GeometryError,
    char_transfer_matrix,
    char_two_membrane,
    membrane_angle,
    mode_phase,
)
from mimcav.model import mode_count
from mimcav.spectrum import scan_roots


def test_membrane_angle_limits():
    assert membrane_angle(0.0) == 0.0
    assert membrane_angle(1.0) == pytest.approx(math.pi / 2)
    assert math.sin(membrane_angle(0.5)) ** 2 == pytest.approx(0.5)
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(DomainError):
            membrane_angle(bad)


def test_geometry_defaults_and_validation():
    g = CavityGeometry(3, 0.4, half_subcavity_length=2.0)
    assert g.membrane_rest_positions == (-4.0, 0.0, 4.0)
    assert g.mirror_position == 8.0
    assert g.total_length == 16.0
    with pytest.raises(DomainError):
        CavityGeometry(0, 0.5)
    with pytest.raises(DomainError):
        CavityGeometry(2, 0.5, half_subcavity_length=0.0)
    with pytest.raises(GeometryError):
        g.check_positions([-4.0, 5.0, 4.0])
    with pytest.raises(GeometryError):
        g.check_positions([-9.0, 0.0, 4.0])


def test_collective_round_trip():
    c = CollectiveCoordinates(2.3, -0.2)
    back = CollectiveCoordinates.from_positions(c.positions())
    assert (back.relative, back.com) == pytest.approx((2.3, -0.2))
    left, right = c.positions()
    assert right - left == pytest.approx(2.3)


def test_jump_sign(pair):
    # transfer-matrix zeros must coincide with the closed two-membrane equation
    for coords in (CollectiveCoordinates(2.0, 0.0), CollectiveCoordinates(2.2, 0.15)):
        closed = scan_roots(lambda k: char_two_membrane(k, coords, pair), (0.3, 4.0), spacing=pair.root_spacing)
        tm = scan_roots(lambda k: char_transfer_matrix(k, coords.positions(), pair), (0.3, 4.0),
                        spacing=pair.root_spacing)
        assert len(closed) == len(tm)
        np.testing.assert_allclose(tm.roots, closed.roots, rtol=1e-10)


def test_transparent_membranes_give_empty_cavity():
    g = CavityGeometry(2, 0.0)
    rs = scan_roots(lambda k: char_transfer_matrix(k, g.membrane_rest_positions, g), (0.1, 3.0),
                    spacing=g.root_spacing)
    # empty cavity of length 6L: k = m pi / 6
    expected = np.arange(1, 6) * math.pi / 6
    np.testing.assert_allclose(rs.roots, expected, rtol=1e-10)


def test_transfer_matrix_is_sine_of_phase():
    g = CavityGeometry(3, 0.7)
    x = [-1.9, 0.1, 2.2]
    k = np.linspace(0.05, 6.0, 500)
    np.testing.assert_allclose(char_transfer_matrix(k, x, g), np.sin(mode_phase(k, x, g)), atol=1e-12)


def test_phase_is_increasing_and_counts_modes():
    g = CavityGeometry(2, 0.9)
    x = g.membrane_rest_positions
    k = np.linspace(1e-3, 10.0, 5000)
    phi = mode_phase(k, x, g)
    assert np.all(np.diff(phi) > 0)
    rs = scan_roots(lambda kk: char_transfer_matrix(kk, x, g), (1e-3, 10.0), spacing=g.root_spacing)
    assert int(mode_count(10.0, x, g)) == len(rs)


def test_phase_exact_at_closed_form_root():
    # pi/2 is an exact root at rest; the phase must sit on a multiple of pi
    g = CavityGeometry(2, 0.5)
    phi = mode_phase(math.pi / 2, g.membrane_rest_positions, g)
    assert phi / math.pi == pytest.approx(round(phi / math.pi), abs=1e-9)
    assert round(phi / math.pi) == 3


@settings(max_examples=40, deadline=None)
@given(R=st.floats(0.01, 0.99), q=st.floats(1.5, 2.5), Q=st.floats(-0.4, 0.4), k=st.floats(0.1, 8.0))
def test_closed_function_even_in_com(R, q, Q, k):
    g = CavityGeometry(2, R)
    a = char_two_membrane(k, CollectiveCoordinates(q, Q), g)
    b = char_two_membrane(k, CollectiveCoordinates(q, -Q), g)
    assert a == b


@settings(max_examples=40, deadline=None)
@given(R=st.floats(0.0, 0.999), L=st.floats(0.2, 5.0), k=st.floats(0.1, 8.0))
def test_length_scaling(R, L, k):
    # only k * L enters
    g1, gL = CavityGeometry(2, R), CavityGeometry(2, R, half_subcavity_length=L)
    c1 = CollectiveCoordinates(2.1, 0.05)
    cL = CollectiveCoordinates(2.1 * L, 0.05 * L)
    assert char_two_membrane(k / L, cL, gL) == pytest.approx(char_two_membrane(k, c1, g1), abs=1e-9)
