"""Super-adiabatic projectors, intertwining unitaries, and the effective Hamiltonian.

The expansion P_eps ~ sum_j eps^j P_j is built recursively: the off-diagonal
part of each order comes from a resolvent residue around the occupied
spectrum, the diagonal part from order-by-order idempotency,

    P_j = G_j - 2 P_0 G_j P_0 + (1/2 pi) oint R_z [P_0, dP_{j-1}/dt] R_z dz,
    G_j = sum_{m=1}^{j-1} P_m P_{j-m}.

Residues are evaluated exactly in the eigenbasis (production route); the
contour quadrature is kept as an independent oracle.  Time derivatives of the
P_{j-1} fields are central differences on the mesh, wrapped for loops and
exactly zero at flat endpoints.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (GapClosed, GaugeMismatch, MeshMismatch,
                     SingularNormalizer, SpectrumNotSplit, StencilOutOfRange)
from .geometry import GaugeFrame, _adj
from .model import assemble_fiber_field

# ----------------------------------------------------------------------
# resolvent contours

@dataclass(frozen=True)
class ResolventContour:
    """Circle in the complex energy plane enclosing the occupied eigenvalues.

    nodes/weights give the trapezoid rule for oint f(z) dz = sum w_j f(z_j);
    on a circle the trapezoid rule converges spectrally.
    """

    center: complex
    radius: float
    n_quad: int
    nodes: np.ndarray
    weights: np.ndarray


def resolvent_contour(E, n_occ, n_quad=64) -> ResolventContour:
    """Circle through the gap midpoints below E_0 and above E_{n_occ - 1}."""
    E = np.asarray(E, dtype=float)
    gap = E[n_occ] - E[n_occ - 1]
    if gap <= 0:
        raise GapClosed(f"no gap above band {n_occ - 1}")
    lo = E[0] - gap / 2
    hi = E[n_occ - 1] + gap / 2
    center = 0.5 * (lo + hi)
    radius = 0.5 * (hi - lo)
    th = 2 * np.pi * np.arange(n_quad) / n_quad
    nodes = center + radius * np.exp(1j * th)
    weights = (2 * np.pi / n_quad) * 1j * radius * np.exp(1j * th)
    clearance = np.abs(np.abs(E - center) - radius)
    if np.min(clearance) < gap / 2 * (1 - 1e-9):
        raise GapClosed(
            f"an eigenvalue sits within {np.min(clearance):.3e} of the contour "
            f"(need clearance {gap / 2:.3e})")
    return ResolventContour(complex(center), float(radius), int(n_quad), nodes, weights)


def contour_projector(H, contour) -> np.ndarray:
    """(i/2 pi) oint (H - z)^-1 dz by quadrature; equals the occupied projector."""
    D = H.shape[-1]
    acc = np.zeros_like(H)
    eye = np.eye(D)
    for z, w in zip(contour.nodes, contour.weights):
        acc += w * np.linalg.inv(H - z * eye)
    return (1j / (2 * np.pi)) * acc


def contour_apply(H, contour, X) -> np.ndarray:
    """(1/2 pi) oint (H - z)^-1 X (H - z)^-1 dz by quadrature (test oracle)."""
    D = H.shape[-1]
    acc = np.zeros_like(X, dtype=complex)
    eye = np.eye(D)
    for z, w in zip(contour.nodes, contour.weights):
        R = np.linalg.inv(H - z * eye)
        acc += w * (R @ X @ R)
    return acc / (2 * np.pi)


def residue_apply(E, V, X, n_occ) -> np.ndarray:
    """Exact residues of (1/2 pi) oint R_z X R_z dz, batched over leading axes.

    In the eigenbasis the only surviving entries couple occupied to unoccupied
    states: out_mn = i X_mn / (E_m - E_n) on the occ/unocc block and its
    counterpart with the opposite sign of the denominator swap.
    """
    D = E.shape[-1]
    Xt = _adj(V) @ X @ V
    den = E[..., :, None] - E[..., None, :] + np.eye(D)
    out = np.zeros_like(Xt)
    out[..., :n_occ, n_occ:] = 1j * Xt[..., :n_occ, n_occ:] / den[..., :n_occ, n_occ:]
    out[..., n_occ:, :n_occ] = -1j * Xt[..., n_occ:, :n_occ] / den[..., n_occ:, :n_occ]
    return V @ out @ _adj(V)


# ----------------------------------------------------------------------
# the recursion

def dt_field(F, mesh, flat_endpoints=False):
    """Central-difference time derivative of a (n_t, ...) field.

    Loops wrap (the duplicate t = T slice is skipped); flat-endpoint
    schedules have exactly vanishing derivatives at both ends; anything else
    has no valid stencil at the boundary slices.
    """
    if F.shape[0] < 3:
        raise StencilOutOfRange("need at least 3 time slices")
    ht = mesh.dt
    dF = np.empty_like(F)
    dF[1:-1] = (F[2:] - F[:-2]) / (2 * ht)
    if mesh.periodic_t:
        dF[0] = (F[1] - F[-2]) / (2 * ht)
        dF[-1] = dF[0]
    elif flat_endpoints:
        dF[0] = 0.0
        dF[-1] = 0.0
    else:
        raise StencilOutOfRange(
            "time derivative at the mesh boundary needs a loop or a "
            "flat-endpoint schedule")
    return dF


def nenciu_terms(bands, n_occ, N):
    """Correction fields [P_0 .. P_N], each of shape (n_t, n_nodes, D, D)."""
    from .bands import fermi_projector

    mesh = bands.mesh
    pot = bands.pot
    E, V = bands.energies, bands.states
    terms = [fermi_projector(bands, n_occ).astype(complex)]
    for j in range(1, N + 1):
        dprev = dt_field(terms[-1], mesh, pot.flat_endpoints)
        G = np.zeros_like(terms[0])
        for m in range(1, j):
            G += terms[m] @ terms[j - m]
        P0 = terms[0]
        Y = P0 @ dprev - dprev @ P0
        Pj = G - 2 * (P0 @ G @ P0) + residue_apply(E, V, Y, n_occ)
        terms.append(Pj)
    return terms


def almost_projector(eps, terms):
    """P-tilde = sum eps^j P_j and its idempotency defect (sup of 2-norms).

    Raises SpectrumNotSplit unless every eigenvalue of P-tilde lies within
    0.25 of {0, 1} with exactly rank-many near 1.
    """
    Pt = np.zeros_like(terms[0])
    for j, term in enumerate(terms):
        Pt = Pt + (eps ** j) * term
    w = np.linalg.eigvalsh(0.5 * (Pt + np.conj(np.swapaxes(Pt, -1, -2))))
    near1 = w > 0.5
    dist = np.minimum(np.abs(w), np.abs(w - 1.0))
    if np.max(dist) > 0.25:
        raise SpectrumNotSplit(
            f"almost-projector spectrum strays {np.max(dist):.3f} from {{0,1}}; "
            "decrease eps or the order")
    n_occ = int(np.round(np.trace(terms[0][0, 0]).real))
    if not np.all(near1.sum(axis=-1) == n_occ):
        raise SpectrumNotSplit("rank of the near-1 cluster changed across the mesh")
    defect = float(np.max(np.linalg.svd(Pt @ Pt - Pt, compute_uv=False)))
    return Pt, defect


def rectify(Pt, n_occ):
    """Spectral projection of the almost-projector onto its near-1 cluster.

    Exact Hermitian idempotent; equals the Riesz projection of P-tilde around
    z = 1 (the contour route is retained in tests as an oracle).
    """
    w, W = np.linalg.eigh(0.5 * (Pt + np.conj(np.swapaxes(Pt, -1, -2))))
    dist = np.minimum(np.abs(w), np.abs(w - 1.0))
    if np.max(dist) > 0.25:
        raise SpectrumNotSplit(
            f"spectrum strays {np.max(dist):.3f} from {{0,1}}; cannot rectify")
    if not np.all((w > 0.5).sum(axis=-1) == n_occ):
        raise SpectrumNotSplit("near-1 cluster rank differs from the projector rank")
    occ = W[..., -n_occ:]
    return occ @ _adj(occ)


# ----------------------------------------------------------------------
# intertwiners and the effective Hamiltonian

def _inv_sqrt_check(W, what):
    """Inverse square root of a Hermitian positive block, batched."""
    w, U = np.linalg.eigh(0.5 * (W + _adj(W)))
    if np.min(w) < 0.5:
        raise SingularNormalizer(
            f"{what} has eigenvalue {np.min(w):.3f} below 1/2; "
            "the unitarization is not trustworthy at this eps")
    return (U / np.sqrt(w)[..., None, :]) @ _adj(U)


def intertwiner(frame: GaugeFrame, terms, P_eps, eps):
    """Unitarized intertwiner T_eps mapping ran P_eps onto the reference space.

    The seed T_0 = chi^H projects onto the time-flat frame; corrections keep
    T almost unitary order by order,

        T_{n+1} = -1/2 sum_{k=1}^{n} T_k T_{n+1-k}^H T_0
                  + sum_{j=0}^{n} T_j P_{n+1-j} (1 - P_0),

    then T-hat = (T-tilde T-tilde^H)^{-1/2} T-tilde and
    T_eps = (T-hat P_eps T-hat^H)^{-1/2} T-hat P_eps.
    Returns (T_eps, T_terms, unitarity_defect of T-tilde).
    """
    if not frame.token or frame.token[0] != "kato":
        raise GaugeMismatch(
            "intertwiner needs a time-flat (Kato-transported) frame, got "
            f"provenance {frame.token}")
    N = len(terms) - 1
    P0 = terms[0]
    D = P0.shape[-1]
    one = np.eye(D)
    T0 = _adj(frame.chi)
    T = [T0]
    for n in range(N):
        corr = np.zeros_like(T0)
        for k in range(1, n + 1):
            corr -= 0.5 * (T[k] @ _adj(T[n + 1 - k]) @ T0)
        for j in range(n + 1):
            corr += T[j] @ terms[n + 1 - j] @ (one - P0)
        T.append(corr)
    Tt = np.zeros_like(T0)
    for j, term in enumerate(T):
        Tt = Tt + (eps ** j) * term
    W = Tt @ _adj(Tt)
    M = W.shape[-1]
    defect = float(np.max(np.linalg.svd(W - np.eye(M), compute_uv=False)))
    That = _inv_sqrt_check(W, "T-tilde T-tilde^H") @ Tt
    ThP = That @ P_eps
    W2 = ThP @ _adj(That)
    T_eps = _inv_sqrt_check(W2, "T-hat P T-hat^H") @ ThP
    return T_eps, T, defect


def effective_hamiltonian(T_eps, bands, eps):
    """H_eff = T (P H P) T^H - i eps T d/dt(T^H) on interior time slices.

    T P = T collapses the projector sandwich to T H T^H.  The frame behind T
    carries no time wrap (Kato transport is not periodic), so the derivative
    exists only at interior nodes: returns (ts[1:-1], H_eff, hermiticity
    defect).
    """
    mesh = bands.mesh
    if T_eps.shape[0] != mesh.n_t:
        raise MeshMismatch("intertwiner field does not match the time mesh")
    if mesh.n_t < 3:
        raise StencilOutOfRange("need at least 3 time slices")
    H = assemble_fiber_field(bands.pot, mesh, bands.n_cut)
    TH = _adj(T_eps)
    ht = mesh.dt
    dTH = (TH[2:] - TH[:-2]) / (2 * ht)
    core = T_eps[1:-1] @ H[1:-1] @ TH[1:-1]
    Heff = core - 1j * eps * (T_eps[1:-1] @ dTH)
    herm = float(np.max(np.abs(Heff - _adj(Heff))))
    return mesh.ts[1:-1], Heff, herm


def reference_block(frame: GaugeFrame, bands):
    """First-order block E(k,t) = chi^H H chi in the frame's basis."""
    H = assemble_fiber_field(bands.pot, bands.mesh, bands.n_cut)
    return _adj(frame.chi) @ H @ frame.chi


def commutator_residual(bands, terms, eps):
    """sup-norm of [i eps d/dt - H, P-tilde] over the mesh (central differences)."""
    mesh = bands.mesh
    Pt, _ = almost_projector(eps, terms)
    dPt = dt_field(Pt, mesh, bands.pot.flat_endpoints)
    H = assemble_fiber_field(bands.pot, mesh, bands.n_cut)
    res = 1j * eps * dPt - (H @ Pt - Pt @ H)
    return float(np.max(np.linalg.svd(res, compute_uv=False)))
