"""Bloch bands and Fermi projectors on (k, t) meshes."""

from dataclasses import dataclass

import numpy as np

from .errors import EigenFailure, GapClosed
from .model import Mesh, PotentialPath, assemble_fiber_batch


@dataclass(frozen=True)
class Bands:
    """Eigendata of the fiber Hamiltonian on a mesh.

    energies has shape (n_t, n_nodes, D) with bands ascending; states has
    shape (n_t, n_nodes, D, D) with eigenvectors in columns, matching the
    energy order.
    """

    pot: PotentialPath
    mesh: Mesh
    n_cut: int
    energies: np.ndarray
    states: np.ndarray

    @property
    def D(self):
        return self.energies.shape[-1]


def solve_bands(pot, mesh, n_cut) -> Bands:
    """Diagonalize the fiber Hamiltonian at every mesh node."""
    nt, nn = mesh.n_t, mesh.n_nodes
    D = (2 * n_cut + 1) ** pot.lattice.d
    E = np.empty((nt, nn, D))
    V = np.empty((nt, nn, D, D), dtype=complex)
    for it, t in enumerate(mesh.ts):
        H = assemble_fiber_batch(pot, mesh.ks, t, n_cut)
        try:
            E[it], V[it] = np.linalg.eigh(H)
        except np.linalg.LinAlgError as exc:
            raise EigenFailure(f"eigensolve failed at t={t:g}") from exc
    return Bands(pot, mesh, n_cut, E, V)


def spectral_gap(bands, n_occ):
    """Minimum over the mesh of E_{n_occ} - E_{n_occ - 1} and its location."""
    gap = bands.energies[..., n_occ] - bands.energies[..., n_occ - 1]
    flat = int(np.argmin(gap))
    it, ik = np.unravel_index(flat, gap.shape)
    return float(gap[it, ik]), (it, ik)


def certify_gap(bands, n_occ, tol=1e-8):
    """Return the minimal gap above band n_occ - 1, raising GapClosed below tol."""
    g, (it, ik) = spectral_gap(bands, n_occ)
    if g < tol:
        raise GapClosed(
            f"gap above band {n_occ - 1} is {g:.3e} at t={bands.mesh.ts[it]:g}, "
            f"k={bands.mesh.ks[ik]}")
    return g


def fermi_projector(bands, n_occ, gap_tol=1e-8):
    """Rank-n_occ spectral projector onto the lowest bands, shape (n_t, n_nodes, D, D).

    The gap above the occupied set is certified first; a closed gap makes the
    projector discontinuous and everything downstream meaningless.
    """
    certify_gap(bands, n_occ, gap_tol)
    occ = bands.states[..., :n_occ]
    return occ @ np.conj(np.swapaxes(occ, -1, -2))


def band_projector(bands, m, gap_tol=1e-8):
    """Rank-1 projector onto band m, isolated from both neighbours."""
    E = bands.energies
    below = np.inf if m == 0 else float(np.min(E[..., m] - E[..., m - 1]))
    above = np.inf if m == bands.D - 1 else float(np.min(E[..., m + 1] - E[..., m]))
    if min(below, above) < gap_tol:
        raise GapClosed(
            f"band {m} not isolated: gaps below/above = {below:.3e}/{above:.3e}")
    v = bands.states[..., m]
    return v[..., :, None] @ np.conj(v[..., None, :])
