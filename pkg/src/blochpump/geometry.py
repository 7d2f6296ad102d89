"""Projector fields, adiabatic curvature, gauge frames, and pumped-charge formulas.

The central objects are the Fermi projector P(k, t) on a mesh and the
curvature pairings

    Theta_j  = -i tr( P [dP/dt,   dP/dk_j] )      (mixed time/quasimomentum)
    Omega_jl = -i tr( P [dP/dk_j, dP/dk_l] )      (quasimomentum/quasimomentum)

collected into one antisymmetric matrix field Xi over the variables
(t, k_1..k_d) with Xi[j, 0] = Theta_j and Xi[j, l] = Omega_jl (j, l >= 1).

Projector derivatives come in two independent flavours: "analytic"
(first-order perturbation theory from the eigendata and the closed-form dH)
and "stencil" (central differences of P itself on the mesh).  They are kept
as separate routes on purpose; tests pit one against the other.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (BandDegenerate, ContinuityBreak, GaugeDiscontinuity,
                     GaugeMismatch, MeshMismatch, NonIntegral,
                     NonRealCurvature, NontrivialBundle, RankDrop,
                     SingularOverlap, StencilOutOfRange)
from .model import fiber_time_derivative, g_vectors, shift_matrix

# ----------------------------------------------------------------------
# small linear-algebra helpers


def _adj(A):
    return np.conj(np.swapaxes(A, -1, -2))


def lowdin(A, tol=1e-8):
    """Closest matrix with orthonormal columns (polar factor U V^H of the SVD)."""
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s.min() < tol:
        raise SingularOverlap(f"polar factor ill-defined, smallest singular value {s.min():.3e}")
    return U @ Vh


def velocity_matrix(lattice, ks, n_cut, axis):
    """Diagonal of dH/dk_j at each k: the plane-wave velocities (k + G)_j."""
    gs = g_vectors(lattice, n_cut)
    ks = np.atleast_2d(np.asarray(ks, dtype=float))
    return ks[:, None, axis] + gs[None, :, axis]


def _eig_partial(E, V, dH, n_occ):
    """Perturbative projector derivative from eigendata and an operator derivative.

    dP = sum_{m occ, n unocc} ( |m><m|dH|n><n| + h.c. ) / (E_m - E_n),
    evaluated in the eigenbasis and rotated back.  Batched over leading axes.
    """
    W = _adj(V) @ dH @ V
    den = E[..., :n_occ, None] - E[..., None, n_occ:]
    X = W[..., :n_occ, n_occ:] / den
    out = np.zeros_like(W)
    out[..., :n_occ, n_occ:] = X
    out[..., n_occ:, :n_occ] = _adj(X)
    return V @ out @ _adj(V)


# ----------------------------------------------------------------------
# projector fields

@dataclass(frozen=True)
class ProjectorField:
    """Fermi projector and its first derivatives on a (k, t) mesh.

    P has shape (n_t, n_nodes, D, D); dPdt the same; dPdk is a tuple with one
    such array per k axis.  mode records which derivative route built it.
    """

    bands: object
    n_occ: int
    P: np.ndarray
    dPdt: np.ndarray
    dPdk: tuple
    mode: str

    @property
    def mesh(self):
        return self.bands.mesh


def _check_projector(P, n_occ, tol=1e-8):
    D = P.shape[-1]
    tr = np.trace(P, axis1=-2, axis2=-1).real
    if np.max(np.abs(tr - n_occ)) > tol:
        raise RankDrop(f"projector trace deviates from {n_occ} by "
                       f"{np.max(np.abs(tr - n_occ)):.3e}")
    idem = P @ P - P
    if np.max(np.abs(idem)) > tol:
        raise RankDrop(f"projector idempotency defect {np.max(np.abs(idem)):.3e}")


def _k_roll(F, mesh, axis, step, n_cut):
    """Field shifted by one k node along a dual axis, S-conjugated across the zone edge.

    Uses the exact equivariance P(k + gamma*) = S P(k) S^T of plane-wave
    fibers, so k stencils wrap around the zone without any smooth gauge.
    """
    d = mesh.lattice.d
    nt = F.shape[0]
    D = F.shape[-1]
    G = F.reshape((nt,) + mesh.n_k + (D, D))
    ax = 1 + axis
    rolled = np.roll(G, -step, axis=ax)
    S = shift_matrix(n_cut, d, axis)
    sl = [slice(None)] * G.ndim
    if step > 0:  # nodes that wrapped past the upper edge live one cell down
        sl[ax] = slice(-step, None)
        idx = tuple(sl)
        rolled[idx] = S @ rolled[idx] @ S.T
    else:
        sl[ax] = slice(None, -step)
        idx = tuple(sl)
        rolled[idx] = S.T @ rolled[idx] @ S
    return rolled.reshape(F.shape)


def _t_derivative(F, mesh):
    """Central-difference d/dt of a (n_t, ...) field, wrapped when t is periodic.

    Periodic paths duplicate t = 0 at t = T, so the wrap skips the last slice.
    Non-periodic paths use one-sided second-order stencils at the ends.
    """
    if F.shape[0] < 3:
        raise StencilOutOfRange("need at least 3 time slices for a t stencil")
    ht = mesh.dt
    dF = np.empty_like(F)
    dF[1:-1] = (F[2:] - F[:-2]) / (2 * ht)
    if mesh.periodic_t:
        dF[0] = (F[1] - F[-2]) / (2 * ht)
        dF[-1] = dF[0]
    else:
        dF[0] = (-3 * F[0] + 4 * F[1] - F[2]) / (2 * ht)
        dF[-1] = (3 * F[-1] - 4 * F[-2] + F[-3]) / (2 * ht)
    return dF


def _check_adjacency(P, mesh, n_cut):
    """Rank-preserving homotopy witness: ||P(node) - P(neighbor)|| < 1 on all edges."""
    worst = 0.0
    diffs = [P[1:] - P[:-1]]
    for j in range(mesh.lattice.d):
        diffs.append(_k_roll(P, mesh, j, +1, n_cut) - P)
    for dP in diffs:
        fro = np.linalg.norm(dP, axis=(-2, -1))
        cand = fro >= 1.0  # Frobenius bounds the operator norm from above
        if np.any(cand):
            worst = max(worst, float(np.max(np.linalg.svd(dP[cand], compute_uv=False))))
        else:
            worst = max(worst, float(np.max(fro)))
    if worst >= 1.0:
        raise ContinuityBreak(
            f"projector jumps by {worst:.3f} between neighbouring nodes; "
            "mesh too coarse to witness a rank-preserving homotopy")


def projector_field(bands, n_occ, partials="analytic") -> ProjectorField:
    """Build the Fermi projector with first derivatives on the band mesh.

    partials = "analytic" uses perturbation theory with the closed-form dH/dt
    and the diagonal dH/dk; "stencil" uses central differences of P on the
    mesh (S-wrapped in k, wrapped in t for loops).
    """
    from .bands import fermi_projector

    mesh = bands.mesh
    d = mesh.lattice.d
    P = fermi_projector(bands, n_occ)
    _check_projector(P, n_occ)
    _check_adjacency(P, mesh, bands.n_cut)

    if partials == "analytic":
        E, V = bands.energies, bands.states
        dPdt = np.empty_like(P)
        for it, t in enumerate(mesh.ts):
            dHt = fiber_time_derivative(bands.pot, mesh.ks[0], t, bands.n_cut)
            dPdt[it] = _eig_partial(E[it], V[it], dHt[None], n_occ)
        dPdk = []
        for j in range(d):
            vel = velocity_matrix(mesh.lattice, mesh.ks, bands.n_cut, j)
            D = P.shape[-1]
            dHk = np.zeros((mesh.n_nodes, D, D), dtype=complex)
            dHk[:, np.arange(D), np.arange(D)] = vel
            dPdk.append(_eig_partial(E, V, dHk[None], n_occ))
    elif partials == "stencil":
        dPdt = _t_derivative(P, mesh)
        dPdk = []
        for j in range(d):
            h = np.linalg.norm(mesh.k_step(j))
            plus = _k_roll(P, mesh, j, +1, bands.n_cut)
            minus = _k_roll(P, mesh, j, -1, bands.n_cut)
            dPdk.append((plus - minus) / (2 * h))
    else:
        raise ValueError(f"unknown partials mode {partials!r}")
    return ProjectorField(bands, n_occ, P, dPdt, tuple(dPdk), partials)


# ----------------------------------------------------------------------
# curvature

@dataclass(frozen=True)
class CurvatureField:
    """Adiabatic curvature on a mesh.

    theta has shape (n_t, n_nodes, d); omega (n_t, n_nodes, d, d); xi packs
    both into the antisymmetric (1+d) x (1+d) form with coordinate order
    (t, k_1, .., k_d).
    """

    mesh: object
    theta: np.ndarray
    omega: np.ndarray

    @property
    def xi(self):
        nt, nn, d = self.theta.shape
        X = np.zeros((nt, nn, d + 1, d + 1))
        X[..., 1:, 0] = self.theta
        X[..., 0, 1:] = -self.theta
        X[..., 1:, 1:] = self.omega
        return X


def _pairing(P, A, B, tol):
    """-i tr(P [A, B]) with a reality check on the result."""
    C = A @ B - B @ A
    val = -1j * np.sum(P * np.swapaxes(C, -1, -2), axis=(-2, -1))
    worst = np.max(np.abs(val.imag))
    if worst > tol:
        raise NonRealCurvature(f"curvature has imaginary part {worst:.3e}")
    return val.real


def curvature(field: ProjectorField, imag_tol=1e-9) -> CurvatureField:
    """Curvature pairings of a projector field."""
    d = field.mesh.lattice.d
    nt, nn = field.P.shape[:2]
    theta = np.empty((nt, nn, d))
    omega = np.zeros((nt, nn, d, d))
    for j in range(d):
        theta[..., j] = _pairing(field.P, field.dPdt, field.dPdk[j], imag_tol)
        for l in range(j + 1, d):
            w = _pairing(field.P, field.dPdk[j], field.dPdk[l], imag_tol)
            omega[..., j, l] = w
            omega[..., l, j] = -w
    return CurvatureField(field.mesh, theta, omega)


def band_curvature(bands, m, axis=0, gap_tol=1e-8) -> np.ndarray:
    """Mixed curvature Theta_axis of the single band m, by sum over states.

    Theta = 2 Im sum_{n != m} <m|dH/dt|n> <m|dH/dk|n>* / (E_m - E_n)^2.
    Independent of the projector-commutator route: no projector derivatives
    are ever formed.  Shape (n_t, n_nodes).
    """
    mesh = bands.mesh
    E, V = bands.energies, bands.states
    den = E[..., m, None] - E  # (nt, nn, D), zero at n = m
    worst = np.min(np.abs(den[..., np.arange(bands.D) != m]))
    if worst < gap_tol:
        raise BandDegenerate(f"band {m} within {worst:.3e} of a neighbour")
    den = den.copy()
    den[..., m] = np.inf
    vm = V[..., m]
    vel = velocity_matrix(mesh.lattice, mesh.ks, bands.n_cut, axis)
    # <m|dH/dk|n> with diagonal dH/dk
    Wk = ((vm.conj() * vel[None])[..., None, :] @ V)[..., 0, :]
    out = np.empty((mesh.n_t, mesh.n_nodes))
    for it, t in enumerate(mesh.ts):
        dHt = fiber_time_derivative(bands.pot, mesh.ks[0], t, bands.n_cut)
        Wt = (vm[it].conj()[..., None, :] @ (dHt @ V[it]))[..., 0, :]
        out[it] = 2.0 * np.imag(np.sum(Wt * Wk[it].conj() / den[it] ** 2, axis=-1))
    return out


def band_velocity(bands, m, axis=0) -> np.ndarray:
    """Group velocity dE_m/dk_axis at every mesh node (Hellmann-Feynman)."""
    vm = bands.states[..., m]
    vel = velocity_matrix(bands.mesh.lattice, bands.mesh.ks, bands.n_cut, axis)
    return np.sum(np.abs(vm) ** 2 * vel[None], axis=-1)


# ----------------------------------------------------------------------
# integrated quantities

def integrate_curvature(curv: CurvatureField, axis=0) -> float:
    """Integral of Theta_axis over one period and the whole zone."""
    mesh = curv.mesh
    dk = mesh.lattice.bz_volume / mesh.n_nodes
    per_t = curv.theta[..., axis].sum(axis=1) * dk
    return float(np.trapezoid(per_t, mesh.ts))


def pumped_charge(curv: CurvatureField, axis=0) -> float:
    """Charge transported along one lattice direction per cycle.

    Delta P_j = -(2 pi)^-d * integral of Theta_j over the zone and period.
    """
    d = curv.mesh.lattice.d
    return -integrate_curvature(curv, axis) / (2 * np.pi) ** d


def chern_integral(curv: CurvatureField, axis=0) -> float:
    """(1 / 2 pi) double integral of Theta_axis; integer for loops (d = 1)."""
    return integrate_curvature(curv, axis) / (2 * np.pi)


def chern_plaquette(bands, n_occ=None, band=None, tol=0.05) -> int:
    """Integer pump invariant from plaquette link phases on the (k, t) torus.

    Uses determinants of frame overlaps on each plaquette, oriented so the
    result matches chern_integral.  Gauge invariant site by site, hence
    independent of any eigenvector phase choice.  Only d = 1 tori are
    two-dimensional in (k, t).
    """
    if (n_occ is None) == (band is None):
        raise ValueError("pass exactly one of n_occ or band")
    mesh = bands.mesh
    if mesh.lattice.d != 1:
        raise ValueError("plaquette invariant needs a 1D lattice ((k, t) torus)")
    if not mesh.periodic_t:
        raise ValueError("plaquette invariant needs a loop in t")
    if band is not None:
        V = bands.states[..., band:band + 1]
    else:
        V = bands.states[..., :n_occ]
    S = shift_matrix(bands.n_cut, 1)
    # close the k cycle through the zone shift: chi(k0 + 2 pi) = S chi(k0)
    Vw = np.concatenate([V, (S @ V[:, :1])], axis=1)
    link_k = np.linalg.det(_adj(Vw[:, :-1]) @ Vw[:, 1:])
    link_t = np.linalg.det(_adj(Vw[:-1]) @ Vw[1:])
    F = np.angle(link_t[:, :-1] * link_k[1:] * link_t[:, 1:].conj() * link_k[:-1].conj())
    C = float(np.sum(F) / (2 * np.pi))
    if abs(C - round(C)) > tol:
        raise NonIntegral(f"plaquette sum {C:.6f} is not near an integer")
    return int(round(C))


def polarization_history(bands, n_occ, jump_tol=0.25):
    """Polarization p(t) from zone Wilson loops, branch-tracked along t.

    p(t) = -Arg det W(t) / 2 pi with W the ordered product of occupied-frame
    overlaps around the zone (closed through the shift matrix).  Fully gauge
    invariant per time slice; only the integer branch needs continuity, and a
    jump beyond jump_tol means the time mesh cannot track it.  Returns
    (p_history, p_history[-1] - p_history[0]).  Independent cross-check for
    the frame-based endpoint route below.
    """
    mesh = bands.mesh
    if mesh.lattice.d != 1:
        raise ValueError("Wilson-loop polarization implemented for d = 1")
    V = bands.states[..., :n_occ]
    S = shift_matrix(bands.n_cut, 1)
    Vw = np.concatenate([V, (S @ V[:, :1])], axis=1)
    ov = _adj(Vw[:, :-1]) @ Vw[:, 1:]
    W = np.linalg.det(ov).prod(axis=1)
    if np.min(np.abs(W)) < 1e-12:
        raise SingularOverlap("Wilson loop determinant vanished; mesh too coarse")
    p = -np.angle(W) / (2 * np.pi)
    # continuous branch in t
    for i in range(1, len(p)):
        p[i] -= round(p[i] - p[i - 1])
        if abs(p[i] - p[i - 1]) > jump_tol:
            raise GaugeDiscontinuity(
                f"polarization jump {abs(p[i] - p[i - 1]):.3f} between t slices "
                f"{i - 1} and {i}; refine the time mesh")
    return p, float(p[-1] - p[0])


# ----------------------------------------------------------------------
# gauge frames

@dataclass(frozen=True)
class GaugeFrame:
    """Orthonormal frame chi spanning ran P, with provenance.

    chi has shape (..., D, M).  token identifies how and on what data the
    frame was built; functions that combine frames require matching tokens.
    """

    chi: np.ndarray
    token: tuple

    @property
    def M(self):
        return self.chi.shape[-1]


def _require_same_token(a: GaugeFrame, b: GaugeFrame):
    if a.token != b.token:
        raise GaugeMismatch(f"frames from different constructions: {a.token} vs {b.token}")


def smooth_k_frame(P_slice, n_occ, n_cut, mesh, smin_tol=0.1) -> GaugeFrame:
    """Smooth quasi-periodic frame over the k mesh at a fixed time (d = 1).

    Parallel transport along the unfolded chain k_0 -> k_0 + 2 pi (ghost fiber
    through the shift matrix), then the closing holonomy is smeared uniformly
    over the chain, leaving chi(k + 2 pi) = S chi(k) exactly.  In one
    dimension the Bloch bundle is always trivial, so this never obstructs.
    """
    if mesh.lattice.d != 1:
        raise ValueError("smooth k frame implemented for d = 1")
    nn = P_slice.shape[0]
    S = shift_matrix(n_cut, 1)
    w, U = np.linalg.eigh(P_slice[0])
    chi0 = U[:, -n_occ:]
    chi = np.empty((nn, P_slice.shape[-1], n_occ), dtype=complex)
    chi[0] = chi0
    for j in range(1, nn):
        step = P_slice[j] @ chi[j - 1]
        smin = np.linalg.svd(step, compute_uv=False).min()
        if smin < smin_tol:
            raise ContinuityBreak(
                f"projector turned too fast between k nodes {j - 1} and {j} "
                f"(overlap {smin:.3f}); refine the k mesh")
        chi[j] = lowdin(step)
    # ghost fiber at k_0 + 2 pi and the closing holonomy
    P_wrap = S @ P_slice[0] @ S.T
    chi_end = lowdin(P_wrap @ chi[-1])
    target = S @ chi[0]
    W = target.conj().T @ chi_end
    Wu = lowdin(W)
    if np.max(np.abs(W - Wu)) > 0.5:
        raise NontrivialBundle("closing holonomy far from unitary; no smooth frame")
    phases, Uh = np.linalg.eig(Wu)
    ang = np.angle(phases)
    for j in range(nn):
        corr = Uh @ np.diag(np.exp(-1j * ang * (j / nn))) @ np.linalg.inv(Uh)
        chi[j] = chi[j] @ corr
    return GaugeFrame(chi, ("smooth_k", id(mesh), n_occ))


def kato_frame(P, frame0: GaugeFrame, mesh, smin_tol=0.1) -> GaugeFrame:
    """Parallel (Kato) transport of an initial frame along the time axis.

    chi(t_{i+1}) = polar(P(t_{i+1}) chi(t_i)): the unique transport with
    chi^H dchi/dt = 0.  Not t-periodic in general; after a loop the frame
    returns to ran P(0) rotated by the holonomy.
    """
    nt = P.shape[0]
    chi = np.empty((nt,) + frame0.chi.shape, dtype=complex)
    chi[0] = frame0.chi
    for i in range(1, nt):
        step = P[i] @ chi[i - 1]
        smin = np.linalg.svd(step, compute_uv=False).min(axis=-1).min()
        if smin < smin_tol:
            raise ContinuityBreak(
                f"projector turned too fast between t nodes {i - 1} and {i} "
                f"(overlap {smin:.3f}); refine the time mesh")
        chi[i] = lowdin(step)
    return GaugeFrame(chi, ("kato",) + frame0.token)


def frame_flatness(frame: GaugeFrame, mesh) -> float:
    """sup over interior t nodes of || chi^H dchi/dt || (central differences).

    Zero for exact Kato transport; the discrete value measures how flat the
    transported frame actually is on this mesh.
    """
    chi = frame.chi
    if chi.ndim < 3 or chi.shape[0] != mesh.n_t:
        raise MeshMismatch("frame is not a time stack on this mesh")
    ht = mesh.dt
    dchi = (chi[2:] - chi[:-2]) / (2 * ht)
    blk = _adj(chi[1:-1]) @ dchi
    return float(np.max(np.abs(blk)))


def connection_and_potential(frame: GaugeFrame, mesh, n_cut):
    """Berry connection A and geometric scalar potential phi of a frame stack.

    A is the gauge-covariant Wilson-link form, attributed to k-link midpoints:
    A(k + h/2) = -Im log det(chi(k)^H chi(k+h)) / h, closed through the shift
    matrix at the zone edge.  phi = -i tr(chi^H dchi/dt) by central
    differences at the k nodes (periodic in k because the trace kills the
    shift); phi is NaN on the two boundary t slices since the frame carries
    no time wrap.  d = 1 only; both arrays have shape (n_t, n_nodes).
    """
    if mesh.lattice.d != 1:
        raise ValueError("connection implemented for d = 1")
    chi = frame.chi
    if chi.shape[:2] != (mesh.n_t, mesh.n_nodes):
        raise MeshMismatch("frame shape does not match the mesh")
    hk = np.linalg.norm(mesh.k_step(0))
    S = shift_matrix(n_cut, 1)
    up = np.roll(chi, -1, axis=1)
    up[:, -1] = S @ chi[:, 0]
    ov = np.linalg.det(_adj(chi) @ up)
    if np.min(np.abs(ov)) < 0.1:
        raise SingularOverlap("frame overlap between neighbouring k nodes below 0.1")
    A = -np.angle(ov) / hk
    ht = mesh.dt
    phi = np.full((mesh.n_t, mesh.n_nodes), np.nan)
    dchi_t = (chi[2:] - chi[:-2]) / (2 * ht)
    phi[1:-1] = np.sum(chi[1:-1].conj() * (-1j * dchi_t), axis=(-2, -1)).real
    return A, phi


def representation_residual(theta, A, phi, mesh):
    """sup | Theta + dA/dt + dphi/dk | over interior mesh points.

    A smooth frame satisfies Theta = -dA/dt - dphi/dk identically; the
    second-order discrete residual shrinks like h^2 under mesh halving.
    A is link-valued (from connection_and_potential), so Theta is averaged
    onto link midpoints and phi differenced across each link.
    """
    ht = mesh.dt
    hk = np.linalg.norm(mesh.k_step(0))
    # everything at k-link midpoints: wrap is plain (theta and phi periodic)
    theta_mid = 0.5 * (theta + np.roll(theta, -1, axis=1))
    dphi_dk = (np.roll(phi, -1, axis=1) - phi) / hk
    dA_dt = (A[2:] - A[:-2]) / (2 * ht)
    res = theta_mid[2:-2] + dA_dt[1:-1] + dphi_dk[2:-2]
    return float(np.max(np.abs(res)))


def ksv_polarization(frame: GaugeFrame, mesh, n_cut) -> float:
    """Endpoint polarization change from a Kato-transported frame (d = 1).

    Delta P = (2 pi)^-1 * integral over the zone of A(k, T) - A(k, 0), with A
    the Wilson-link connection of the transported gauge.  The t = T frame must
    come from continuous transport of the t = 0 frame: the endpoint difference
    is gauge dependent, and only the transported gauge makes it the pumped
    charge.  Enforced through the frame's provenance token.
    """
    if not frame.token or frame.token[0] != "kato":
        raise GaugeMismatch(
            "endpoint polarization needs a Kato-transported frame stack, got "
            f"provenance {frame.token}")
    A, _ = connection_and_potential(frame, mesh, n_cut)
    hk = np.linalg.norm(mesh.k_step(0))
    return float(np.sum(A[-1] - A[0]) * hk / (2 * np.pi))
