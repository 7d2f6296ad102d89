"""Projector fields, curvature pairings, polarization routes, and gauge frames."""

import numpy as np
import numpy.testing as npt
import pytest

from blochpump.bands import Bands, fermi_projector, solve_bands
from blochpump.errors import (GaugeMismatch, MeshMismatch, NonIntegral,
                              NonRealCurvature, SingularOverlap)
from blochpump.geometry import (band_curvature, chern_integral, chern_plaquette,
                                connection_and_potential, curvature,
                                frame_flatness, integrate_curvature, kato_frame,
                                ksv_polarization, lowdin, polarization_history,
                                projector_field, pumped_charge,
                                representation_residual, smooth_k_frame,
                                velocity_matrix)
from blochpump.model import (TWO_PI, make_lattice, make_mesh, ramp_potential,
                             separable_potential, sliding_cosine,
                             static_potential, two_harmonic_loop)

N_CUT = 9

_cache = {}


def _bands(name, nk, nt):
    key = (name, nk, nt)
    if key not in _cache:
        pot = {"sliding": sliding_cosine(),
               "loop": two_harmonic_loop(),
               "static": static_potential()}[name]
        mesh = make_mesh(pot, nk, nt)
        _cache[key] = (pot, mesh, solve_bands(pot, mesh, N_CUT))
    return _cache[key]


def _kato(name, nk, nt):
    key = ("kato", name, nk, nt)
    if key not in _cache:
        _, mesh, b = _bands(name, nk, nt)
        P = fermi_projector(b, 1)
        frame0 = smooth_k_frame(P[0], 1, N_CUT, mesh)
        _cache[key] = kato_frame(P, frame0, mesh)
    return _cache[key]


# ---------------------------------------------------------------- helpers

def test_lowdin_orthonormalizes():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(7, 3)) + 1j * rng.normal(size=(7, 3))
    Q = lowdin(A)
    npt.assert_allclose(Q.conj().T @ Q, np.eye(3), atol=1e-12)
    npt.assert_allclose(lowdin(Q), Q, atol=1e-12)


def test_lowdin_singular_overlap():
    A = np.array([[1.0, 0.0], [0.0, 1e-12], [0.0, 0.0]])
    with pytest.raises(SingularOverlap):
        lowdin(A)


def test_velocity_matrix_free_diagonal():
    lat = make_lattice([[1.0]])
    ks = np.array([[0.3], [-1.1]])
    V = velocity_matrix(lat, ks, 3, 0)
    assert V.shape == (2, 7)
    for i, k in enumerate(ks[:, 0]):
        npt.assert_allclose(V[i], k + TWO_PI * np.arange(-3, 4), atol=1e-13)


# ---------------------------------------------------------------- curvature

def test_static_curvature_vanishes():
    _, _, b = _bands("static", 16, 9)
    curv = curvature(projector_field(b, 1))
    assert np.max(np.abs(curv.theta)) <= 1e-14


def test_unknown_partials_mode():
    _, _, b = _bands("static", 16, 9)
    with pytest.raises(ValueError):
        projector_field(b, 1, partials="spectral")


def test_stencil_partials_converge_to_analytic():
    errs = []
    for nk, nt in ((32, 33), (64, 65)):
        _, _, b = _bands("loop", nk, nt)
        ta = curvature(projector_field(b, 1)).theta
        tb = curvature(projector_field(b, 1, partials="stencil")).theta
        errs.append(np.max(np.abs(ta - tb)))
    ratio = errs[0] / errs[1]
    assert 1.8 <= ratio <= 4.5


def test_band_additivity():
    _, _, b = _bands("sliding", 64, 64)
    th_pair = curvature(projector_field(b, 2)).theta[..., 0]
    th_sum = band_curvature(b, 0) + band_curvature(b, 1)
    assert np.max(np.abs(th_pair - th_sum)) <= 1e-9


def test_band_curvature_matches_projector_route():
    _, _, b = _bands("loop", 32, 33)
    th_p = curvature(projector_field(b, 1)).theta[..., 0]
    th_b = band_curvature(b, 0)
    assert np.max(np.abs(th_p - th_b)) <= 1e-10


def test_curvature_imag_guard():
    _, _, b = _bands("loop", 16, 17)
    with pytest.raises(NonRealCurvature):
        curvature(projector_field(b, 1), imag_tol=0.0)


def test_xi_block_layout():
    _, _, b = _bands("loop", 16, 17)
    curv = curvature(projector_field(b, 1))
    xi = curv.xi
    assert xi.shape[-2:] == (2, 2)
    assert np.max(np.abs(xi + np.swapaxes(xi, -1, -2))) == 0.0
    npt.assert_array_equal(xi[..., 1, 0], curv.theta[..., 0])


# ---------------------------------------------------------------- charge routes

def test_pumped_charge_is_minus_chern():
    _, _, b = _bands("sliding", 64, 64)
    curv = curvature(projector_field(b, 1))
    assert pumped_charge(curv) == -chern_integral(curv)
    npt.assert_allclose(integrate_curvature(curv),
                        TWO_PI * chern_integral(curv), atol=1e-12)


def test_sliding_chern_integral():
    _, _, b = _bands("sliding", 64, 64)
    curv = curvature(projector_field(b, 1))
    npt.assert_allclose(chern_integral(curv), -1.0, atol=1e-3)


def test_plaquette_integers():
    _, _, b = _bands("sliding", 64, 64)
    assert chern_plaquette(b, band=0) == -1
    assert chern_plaquette(b, band=1) == -1
    assert chern_plaquette(b, n_occ=2) == -2


def test_plaquette_argument_errors():
    _, _, b = _bands("sliding", 64, 64)
    with pytest.raises(ValueError):
        chern_plaquette(b)
    with pytest.raises(ValueError):
        chern_plaquette(b, n_occ=1, band=0)
    pot = ramp_potential()
    mesh = make_mesh(pot, 8, 5)
    br = solve_bands(pot, mesh, 5)
    with pytest.raises(ValueError):
        chern_plaquette(br, n_occ=1)


def test_plaquette_residue_guard():
    # the angle sum telescopes, so the residue is pure float noise; a zero
    # tolerance must still flag it
    _, _, b = _bands("sliding", 32, 33)
    with pytest.raises(NonIntegral):
        chern_plaquette(b, band=0, tol=0.0)


def test_polarization_history_quantized():
    _, _, b = _bands("sliding", 64, 64)
    p_hist, dp = polarization_history(b, 1)
    assert len(p_hist) == 64
    npt.assert_allclose(dp, 1.0, atol=1e-9)


def test_polarization_history_gauge_invariant():
    pot, mesh, b = _bands("sliding", 32, 33)
    _, dp = polarization_history(b, 1)
    rng = np.random.default_rng(5)
    phases = np.exp(1j * rng.uniform(0, TWO_PI,
                                     size=b.states.shape[:2] + (1, b.D)))
    b2 = Bands(pot=pot, mesh=mesh, n_cut=b.n_cut, energies=b.energies,
               states=b.states * phases)
    _, dp2 = polarization_history(b2, 1)
    npt.assert_allclose(dp2, dp, atol=1e-10)


# ---------------------------------------------------------------- gauge frames

def test_smooth_k_frame_spans_projector():
    _, mesh, b = _bands("loop", 16, 17)
    P = fermi_projector(b, 1)
    fr = smooth_k_frame(P[0], 1, N_CUT, mesh)
    chi = fr.chi
    gram = np.conj(np.swapaxes(chi, -1, -2)) @ chi
    assert np.max(np.abs(gram - np.eye(1))) <= 1e-12
    assert np.max(np.abs(P[0] @ chi - chi)) <= 1e-12
    ov = [abs(np.vdot(chi[i, :, 0], chi[(i + 1) % 16, :, 0]))
          for i in range(16)]
    assert min(ov) >= 0.5


def test_kato_frame_static_is_constant():
    _, mesh, b = _bands("static", 16, 9)
    P = fermi_projector(b, 1)
    fr = kato_frame(P, smooth_k_frame(P[0], 1, N_CUT, mesh), mesh)
    drift = np.max(np.abs(fr.chi - fr.chi[:1]))
    assert drift <= 1e-12
    assert frame_flatness(fr, mesh) <= 1e-12
    A, phi = connection_and_potential(fr, mesh, N_CUT)
    assert np.nanmax(np.abs(phi)) <= 1e-12
    assert ksv_polarization(fr, mesh, N_CUT) <= 1e-12


def test_kato_flatness_second_order():
    fl = []
    for nt in (129, 257):
        pot, mesh, b = _bands("loop", 8, nt)
        P = fermi_projector(b, 1)
        fr = kato_frame(P, smooth_k_frame(P[0], 1, N_CUT, mesh), mesh)
        fl.append(frame_flatness(fr, mesh))
    assert 2.5 <= fl[0] / fl[1] <= 6.0


def test_ksv_polarization_quantized():
    _, mesh, _ = _bands("sliding", 64, 64)
    fr = _kato("sliding", 64, 64)
    npt.assert_allclose(ksv_polarization(fr, mesh, N_CUT), 1.0, atol=1e-6)


def test_ksv_requires_kato_gauge():
    _, mesh, b = _bands("loop", 16, 17)
    P = fermi_projector(b, 1)
    fr = smooth_k_frame(P[0], 1, N_CUT, mesh)
    with pytest.raises(GaugeMismatch):
        ksv_polarization(fr, mesh, N_CUT)


def test_frame_flatness_mesh_guard():
    _, mesh, _ = _bands("loop", 16, 17)
    fr = _kato("loop", 16, 17)
    other = make_mesh(two_harmonic_loop(), 16, 33)
    with pytest.raises(MeshMismatch):
        frame_flatness(fr, other)


def test_representation_residual_refines():
    res = []
    for nk, nt in ((16, 17), (32, 33)):
        _, mesh, b = _bands("loop", nk, nt)
        curv = curvature(projector_field(b, 1))
        fr = _kato("loop", nk, nt)
        A, phi = connection_and_potential(fr, mesh, N_CUT)
        res.append(representation_residual(curv.theta[..., 0], A, phi, mesh))
    assert 2.0 <= res[0] / res[1] <= 4.5


def test_2d_round_trip_smoke():
    pot = separable_potential([sliding_cosine(), static_potential()])
    mesh = make_mesh(pot, (8, 8), 9)
    b = solve_bands(pot, mesh, 3)
    curv = curvature(projector_field(b, 1))
    assert curv.theta.shape == (9, 64, 2)
    assert curv.omega.shape == (9, 64, 2, 2)
    assert np.max(np.abs(curv.omega + np.swapaxes(curv.omega, -1, -2))) == 0.0
