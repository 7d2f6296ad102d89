"""Space-reflection and time-reversal symmetry checks on computed fields.

On plane-wave fibers the reflection operator is the index reversal
R: G -> -G, and time reversal is entrywise complex conjugation composed with
R.  For a potential with c_{-G} = c_G (inversion symmetric),
P(k,t) = R P(-k,t) R and Theta is odd in k; for real potentials
(c_{-G} = conj c_G), P(k,t) = conj(R P(-k,t) R), Theta is even in k and the
Berry curvature Omega is odd.  The checks below evaluate these identities on
meshes that contain -k for every node, mapping the zone-edge column through
the dual shift.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricMesh
from .model import dual_index_box, shift_matrix


@dataclass(frozen=True)
class SymmetryFlags:
    inversion: bool
    real: bool


@dataclass(frozen=True)
class SymmetryReport:
    flags: SymmetryFlags
    defects: dict


def detect_symmetries(pot, tol=1e-12) -> SymmetryFlags:
    """Sample the Fourier schedules and classify the potential.

    inversion: c_{-G}(t) = c_G(t) for all entries and probe times;
    real: c_{-G}(t) = conj(c_G(t)) (also enforced at construction).
    """
    tprobe = np.linspace(0.0, pot.T, 9)
    lookup = {g: s for g, s in pot.entries}
    inversion = True
    real = True
    for g, s in pot.entries:
        neg = tuple(-x for x in g)
        other = lookup.get(neg)
        vals = s.value(tprobe)
        ovals = other.value(tprobe) if other is not None else np.zeros_like(vals)
        if np.max(np.abs(ovals - vals)) > tol:
            inversion = False
        if np.max(np.abs(ovals - np.conj(vals))) > tol:
            real = False
    return SymmetryFlags(inversion, real)


def reversal_matrix(n_cut, d):
    """Index-reversal permutation R with (R psi)[G] = psi[-G]."""
    idx = dual_index_box(n_cut, d)
    D = len(idx)
    cols = np.ravel_multi_index((-idx + n_cut).T, (2 * n_cut + 1,) * d)
    R = np.zeros((D, D))
    R[np.arange(D), cols] = 1.0
    return R


def _parity_map(mesh, tol=1e-10):
    """Node permutation p and per-axis shift flags s with -k_i = k_{p(i)} + s_i . duals.

    Our centered meshes always contain -k up to a dual shift at the k = -1/2
    column of each axis; AsymmetricMesh guards hand-built meshes.
    """
    d = mesh.lattice.d
    per_axis_perm = []
    per_axis_shift = []
    for n in mesh.n_k:
        i = np.arange(n)
        per_axis_perm.append((n - i) % n)
        per_axis_shift.append((i == 0).astype(int))
    grids_p = np.meshgrid(*per_axis_perm, indexing="ij")
    grids_s = np.meshgrid(*per_axis_shift, indexing="ij")
    strides = [mesh.k_stride(j) for j in range(d)]
    perm = sum(g.ravel() * s for g, s in zip(grids_p, strides))
    shifts = np.stack([g.ravel() for g in grids_s], axis=-1)
    target = mesh.ks[perm] + shifts @ mesh.lattice.duals
    if np.max(np.abs(target + mesh.ks)) > tol:
        raise AsymmetricMesh("mesh does not contain -k for every node")
    return perm, shifts


def _reflect_projector(P, mesh, n_cut):
    """Field R P(-k, t) R on the mesh, shift-conjugating the wrapped columns."""
    d = mesh.lattice.d
    perm, shifts = _parity_map(mesh)
    R = reversal_matrix(n_cut, d)
    out = P[:, perm]
    for j in range(d):
        S = shift_matrix(n_cut, d, j)
        sel = shifts[:, j] == 1
        if np.any(sel):
            out[:, sel] = S @ out[:, sel] @ S.T
    return R @ out @ R


def check_inversion(field, curv) -> dict:
    """Defects of the inversion identities P(k) = R P(-k) R and Theta odd in k."""
    mesh = field.mesh
    n_cut = field.bands.n_cut
    refl = _reflect_projector(field.P, mesh, n_cut)
    defect_P = float(np.max(np.abs(field.P - refl)))
    perm, _ = _parity_map(mesh)
    defect_theta = float(np.max(np.abs(curv.theta[:, perm] + curv.theta)))
    return {"projector": defect_P, "theta_parity": defect_theta}


def check_time_reversal(field, curv) -> dict:
    """Defects of P(k) = conj(R P(-k) R), Theta even and Omega odd in k."""
    mesh = field.mesh
    n_cut = field.bands.n_cut
    refl = np.conj(_reflect_projector(field.P, mesh, n_cut))
    defect_P = float(np.max(np.abs(field.P - refl)))
    perm, _ = _parity_map(mesh)
    defect_theta = float(np.max(np.abs(curv.theta[:, perm] - curv.theta)))
    out = {"projector": defect_P, "theta_parity": defect_theta}
    if mesh.lattice.d >= 2:
        out["omega_parity"] = float(np.max(np.abs(curv.omega[:, perm] + curv.omega)))
    return out


def symmetry_report(pot, field, curv) -> SymmetryReport:
    """Run every check whose hypothesis holds for this potential."""
    flags = detect_symmetries(pot)
    defects = {}
    if flags.inversion:
        defects["inversion"] = check_inversion(field, curv)
    if flags.real:
        defects["time_reversal"] = check_time_reversal(field, curv)
    return SymmetryReport(flags, defects)
