"""Inversion and time-reversal checks on curvature and projector fields."""

import dataclasses

import numpy as np
import numpy.testing as npt
import pytest

from blochpump.bands import solve_bands
from blochpump.errors import AsymmetricMesh
from blochpump.geometry import curvature, projector_field
from blochpump.model import (make_mesh, ramp_potential, separable_potential,
                             sliding_cosine, static_potential,
                             two_harmonic_loop)
from blochpump.symmetry import (check_inversion, check_time_reversal,
                                detect_symmetries, reversal_matrix,
                                symmetry_report)

N_CUT = 9


def _field(pot, nk, nt, n_cut=N_CUT):
    mesh = make_mesh(pot, nk, nt)
    b = solve_bands(pot, mesh, n_cut)
    fld = projector_field(b, 1)
    return fld, curvature(fld)


def test_detected_flags():
    cases = ((static_potential(), True, True),
             (sliding_cosine(), False, True),
             (two_harmonic_loop(), False, True),
             (two_harmonic_loop(symmetric=True), True, True),
             (ramp_potential(), True, True))
    for pot, inversion, real in cases:
        flags = detect_symmetries(pot)
        assert flags.inversion is inversion
        assert flags.real is real


def test_reversal_matrix_involution():
    for n_cut, d in ((1, 1), (3, 1), (2, 2)):
        R = reversal_matrix(n_cut, d)
        npt.assert_array_equal(R @ R, np.eye(R.shape[0]))
    npt.assert_array_equal(reversal_matrix(1, 1), np.fliplr(np.eye(3)))


def test_breathing_loop_symmetries():
    fld, curv = _field(two_harmonic_loop(symmetric=True), 32, 33)
    # real Hamiltonian at every (k, t): the pairing vanishes identically
    assert np.max(np.abs(curv.theta)) == 0.0
    inv = check_inversion(fld, curv)
    assert inv["theta_parity"] == 0.0
    assert inv["projector"] <= 1e-10
    tr = check_time_reversal(fld, curv)
    assert tr["theta_parity"] == 0.0
    assert tr["projector"] <= 1e-10
    assert "omega_parity" not in tr


def test_sliding_time_reversal_only():
    fld, curv = _field(sliding_cosine(), 64, 64)
    tr = check_time_reversal(fld, curv)
    assert tr["theta_parity"] <= 1e-10
    assert tr["projector"] <= 1e-10
    # negative control: the slide breaks inversion at order one
    inv = check_inversion(fld, curv)
    assert inv["projector"] > 0.1


def test_symmetry_report_breathing():
    pot = two_harmonic_loop(symmetric=True)
    fld, curv = _field(pot, 32, 33)
    report = symmetry_report(pot, fld, curv)
    assert report.flags.inversion and report.flags.real
    worst = max(v for checks in report.defects.values()
                for v in checks.values())
    assert worst <= 1e-9


def test_parity_needs_symmetric_mesh():
    pot = static_potential()
    mesh = make_mesh(pot, 8, 5)
    doctored = dataclasses.replace(mesh, ks=mesh.ks + 0.17)
    b = solve_bands(pot, doctored, 3)
    fld = projector_field(b, 1)
    curv = curvature(fld)
    with pytest.raises(AsymmetricMesh):
        check_inversion(fld, curv)


def test_2d_separable_symmetries():
    pot = separable_potential([two_harmonic_loop(symmetric=True),
                               static_potential()])
    mesh = make_mesh(pot, (8, 8), 9)
    b = solve_bands(pot, mesh, 3)
    fld = projector_field(b, 1)
    curv = curvature(fld)
    tr = check_time_reversal(fld, curv)
    assert tr["theta_parity"] == 0.0
    assert tr["omega_parity"] == 0.0


def test_symmetry_defect_decays_with_cutoff():
    # the residual parity defect comes from the truncated plane-wave box and
    # falls off spectrally with the cutoff
    pot = separable_potential([two_harmonic_loop(symmetric=True),
                               static_potential()])
    defects = {}
    for n_cut in (3, 5):
        mesh = make_mesh(pot, (8, 8), 9)
        b = solve_bands(pot, mesh, n_cut)
        fld = projector_field(b, 1)
        defects[n_cut] = check_inversion(fld, curvature(fld))["projector"]
    assert defects[3] > 1e-6
    assert defects[5] < 1e-7
    assert defects[3] / defects[5] > 50
