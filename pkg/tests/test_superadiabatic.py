"""Resolvent calculus, expansion terms, intertwiners, and effective blocks."""

import numpy as np
import numpy.testing as npt
import pytest

from blochpump.bands import fermi_projector, solve_bands
from blochpump.errors import (GapClosed, GaugeMismatch, SpectrumNotSplit,
                              StencilOutOfRange)
from blochpump.geometry import kato_frame, smooth_k_frame
from blochpump.model import (make_mesh, ramp_potential, static_potential,
                             two_harmonic_loop)
from blochpump.superadiabatic import (almost_projector, commutator_residual,
                                      contour_apply, contour_projector,
                                      dt_field, effective_hamiltonian,
                                      intertwiner, nenciu_terms, rectify,
                                      residue_apply, resolvent_contour)

N_CUT = 9
EPS_LIST = (0.2, 0.1, 0.05)

_cache = {}


def _loop():
    if "loop" not in _cache:
        pot = two_harmonic_loop()
        mesh = make_mesh(pot, 16, 33)
        _cache["loop"] = (pot, mesh, solve_bands(pot, mesh, N_CUT))
    return _cache["loop"]


def _loop_terms(order):
    key = ("terms", order)
    if key not in _cache:
        _, _, b = _loop()
        _cache[key] = nenciu_terms(b, 1, order)
    return _cache[key]


def _loop_frame():
    if "frame" not in _cache:
        _, mesh, b = _loop()
        P = fermi_projector(b, 1)
        _cache["frame"] = kato_frame(P, smooth_k_frame(P[0], 1, N_CUT, mesh),
                                     mesh)
    return _cache["frame"]


def _fit_slope(vals):
    return float(np.polyfit(np.log(EPS_LIST), np.log(vals), 1)[0])


# ---------------------------------------------------------------- resolvent

def test_contour_projector_matches_spectral():
    from blochpump.model import assemble_fiber
    pot, mesh, b = _loop()
    for it, ik in ((0, 0), (7, 3)):
        H = assemble_fiber(pot, mesh.ks[ik], mesh.ts[it], N_CUT)
        cont = resolvent_contour(b.energies[it, ik], 1)
        Pc = contour_projector(H, cont)
        Ps = fermi_projector(b, 1)[it, ik]
        assert np.max(np.abs(Pc - Ps)) <= 1e-8
        npt.assert_allclose(np.trace(Pc).real, 1.0, atol=1e-8)


def test_contour_quadrature_converged():
    from blochpump.model import assemble_fiber
    pot, mesh, b = _loop()
    H = assemble_fiber(pot, mesh.ks[5], mesh.ts[3], N_CUT)
    P64 = contour_projector(H, resolvent_contour(b.energies[3, 5], 1))
    P128 = contour_projector(H, resolvent_contour(b.energies[3, 5], 1,
                                                  n_quad=128))
    assert np.max(np.abs(P64 - P128)) <= 1e-10


def test_residue_matches_contour_integral():
    from blochpump.model import assemble_fiber
    pot, mesh, b = _loop()
    it, ik = 4, 9
    H = assemble_fiber(pot, mesh.ks[ik], mesh.ts[it], N_CUT)
    E, V = b.energies[it, ik], b.states[it, ik]
    rng = np.random.default_rng(2)
    X = rng.normal(size=H.shape) + 1j * rng.normal(size=H.shape)
    got = residue_apply(E, V, X, 1)
    want = contour_apply(H, resolvent_contour(E, 1), X)
    assert np.max(np.abs(got - want)) <= 1e-8


def test_resolvent_contour_gap_guard():
    with pytest.raises(GapClosed):
        resolvent_contour(np.array([0.0, 0.0, 1.0]), 1)


# ---------------------------------------------------------------- expansion

def test_static_terms_vanish():
    pot = static_potential()
    b = solve_bands(pot, make_mesh(pot, 16, 9), N_CUT)
    terms = nenciu_terms(b, 1, 2)
    assert np.max(np.abs(terms[1])) == 0.0
    assert np.max(np.abs(terms[2])) == 0.0


def test_leading_correction_off_diagonal():
    terms = _loop_terms(1)
    P0, P1 = terms
    assert np.max(np.abs(P0 @ P1 @ P0)) <= 1e-9
    Q0 = np.eye(P0.shape[-1]) - P0
    assert np.max(np.abs(Q0 @ P1 @ Q0)) <= 1e-9


def test_order_by_order_idempotency():
    P0, P1, P2 = _loop_terms(2)
    c1 = np.max(np.abs(P0 @ P1 + P1 @ P0 - P1))
    c2 = np.max(np.abs(P0 @ P2 + P2 @ P0 + P1 @ P1 - P2))
    assert c1 <= 1e-10
    assert c2 <= 1e-10


def test_flat_loop_endpoint_terms_small():
    terms = _loop_terms(1)
    assert np.max(np.abs(terms[1][0])) <= 1e-10
    assert np.max(np.abs(terms[1][-1])) <= 1e-10


def test_flat_ramp_endpoint_terms_exact_zero():
    pot = ramp_potential()
    b = solve_bands(pot, make_mesh(pot, 16, 17), N_CUT)
    terms = nenciu_terms(b, 1, 1)
    assert np.max(np.abs(terms[1][0])) == 0.0
    assert np.max(np.abs(terms[1][-1])) == 0.0


def test_almost_projector_defect_slopes():
    for order, floor in ((1, 1.9), (2, 2.9)):
        terms = _loop_terms(order)
        defects = [almost_projector(e, terms)[1] for e in EPS_LIST]
        assert _fit_slope(defects) >= floor


def test_almost_projector_spectrum_guard():
    terms = _loop_terms(1)
    with pytest.raises(SpectrumNotSplit):
        almost_projector(1.0, terms)


def test_commutator_residual_slope():
    _, _, b = _loop()
    terms = _loop_terms(1)
    vals = [commutator_residual(b, terms, e) for e in EPS_LIST]
    assert _fit_slope(vals) >= 1.8


def test_rectify_projects():
    terms = _loop_terms(1)
    Pt, defect = almost_projector(0.1, terms)
    P = rectify(Pt, 1)
    assert np.max(np.abs(P @ P - P)) <= 1e-12
    npt.assert_allclose(np.trace(P, axis1=-2, axis2=-1).real, 1.0, atol=1e-10)
    assert np.max(np.abs(P - Pt)) <= 3 * max(defect, 1e-3)


# ---------------------------------------------------------------- intertwiner

def test_intertwiner_defect_slope():
    frame = _loop_frame()
    terms = _loop_terms(1)
    defects = []
    for eps in EPS_LIST:
        Pt, _ = almost_projector(eps, terms)
        defects.append(intertwiner(frame, terms, rectify(Pt, 1), eps)[2])
    assert _fit_slope(defects) >= 1.9


def test_intertwiner_requires_kato_gauge():
    _, mesh, b = _loop()
    P = fermi_projector(b, 1)
    smooth = smooth_k_frame(P[0], 1, N_CUT, mesh)
    terms = _loop_terms(1)
    Pt, _ = almost_projector(0.1, terms)
    with pytest.raises(GaugeMismatch):
        intertwiner(smooth, terms, rectify(Pt, 1), 0.1)


def test_static_intertwiner_is_reference():
    pot = static_potential()
    mesh = make_mesh(pot, 16, 9)
    b = solve_bands(pot, mesh, N_CUT)
    P = fermi_projector(b, 1)
    frame = kato_frame(P, smooth_k_frame(P[0], 1, N_CUT, mesh), mesh)
    terms = nenciu_terms(b, 1, 1)
    Pt, _ = almost_projector(0.1, terms)
    T_eps, T_terms, defect = intertwiner(frame, terms, rectify(Pt, 1), 0.1)
    assert np.max(np.abs(T_eps - T_terms[0])) <= 1e-12
    assert defect <= 1e-12
    ts_i, Heff, herm = effective_hamiltonian(T_eps, b, 0.1)
    assert herm <= 1e-12
    assert np.max(np.abs(Heff[..., 0, 0].real
                         - b.energies[1:-1, :, 0])) <= 1e-10


def test_effective_hamiltonian_tracks_band():
    _, _, b = _loop()
    frame = _loop_frame()
    terms = _loop_terms(1)
    gaps = []
    for eps in EPS_LIST:
        Pt, _ = almost_projector(eps, terms)
        T_eps, _, _ = intertwiner(frame, terms, rectify(Pt, 1), eps)
        _, Heff, herm = effective_hamiltonian(T_eps, b, eps)
        assert herm <= 1e-2
        gaps.append(np.max(np.abs(Heff[..., 0, 0].real
                                  - b.energies[1:-1, :, 0])))
    assert _fit_slope(gaps) >= 1.5


# ---------------------------------------------------------------- stencils

def test_dt_field_periodic_oracle():
    pot, _, _ = _loop()
    mesh = make_mesh(pot, 4, 65)
    base = np.sin(2 * np.pi * mesh.ts / pot.T)
    F = base[:, None, None, None] * np.ones((65, 4, 2, 2))
    dF = dt_field(F, mesh)
    exact = (2 * np.pi / pot.T) * np.cos(2 * np.pi * mesh.ts / pot.T)
    err = np.max(np.abs(dF - exact[:, None, None, None]))
    assert err <= 2e-2
    npt.assert_allclose(dF[0], dF[-1], atol=1e-13)


def test_dt_field_needs_anchor():
    from blochpump.model import make_lattice
    mesh = make_mesh(make_lattice([[1.0]]), 4, 9, T=1.0)
    assert not mesh.periodic_t
    F = np.ones((9, 4, 2, 2))
    with pytest.raises(StencilOutOfRange):
        dt_field(F, mesh, flat_endpoints=False)


def test_dt_field_needs_three_slices():
    pot, _, _ = _loop()
    mesh = make_mesh(pot, 4, 2)
    with pytest.raises(StencilOutOfRange):
        dt_field(np.ones((2, 4, 2, 2)), mesh)
