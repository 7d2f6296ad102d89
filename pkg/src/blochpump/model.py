"""Lattices, time-dependent periodic potentials, and plane-wave fiber matrices.

Conventions used throughout the package:

* lattice generators are rows of a d x d matrix, duals satisfy
  gamma_i . gamma*_j = 2 pi delta_ij;
* the plane-wave index box is the set of integer dual coordinates with every
  component in [-n_cut, n_cut], flattened in C order (last coordinate fastest),
  so in 1D the basis is G = -n_cut*gamma*, ..., 0, ..., +n_cut*gamma*;
* the fiber matrix is H(k,t)[a,b] = 1/2 |k+G_a|^2 delta_ab + c_{G_a-G_b}(t);
* all schedules carry closed-form time derivatives, nothing in the package
  differentiates the potential numerically.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CoefficientOutsideCutoff, SingularGenerators

TWO_PI = 2.0 * np.pi


# ----------------------------------------------------------------------
# flat switching function (C-infinity, all derivatives vanish at 0 and 1)

def _bump(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smoothstep(u):
    """Mollified step: 0 for u<=0, 1 for u>=1, C-infinity and flat at both ends."""
    u = np.asarray(u, dtype=float)
    f = _bump(u)
    g = _bump(1.0 - u)
    return f / (f + g)


def smoothstep_d(u):
    """Derivative of :func:`smoothstep` (closed form)."""
    u = np.asarray(u, dtype=float)
    f = _bump(u)
    g = _bump(1.0 - u)
    inside = (u > 0) & (u < 1)
    fp = np.zeros_like(u)
    gp = np.zeros_like(u)
    fp[inside] = f[inside] / u[inside] ** 2
    gp[inside] = -g[inside] / (1.0 - u[inside]) ** 2
    s = f + g
    out = np.zeros_like(u)
    out[inside] = (fp[inside] * g[inside] - f[inside] * gp[inside]) / s[inside] ** 2
    return out


# ----------------------------------------------------------------------
# lattice

@dataclass(frozen=True)
class Lattice:
    """Bravais lattice with generators as rows and duals scaled by 2 pi."""

    generators: np.ndarray
    duals: np.ndarray
    cell_volume: float
    bz_volume: float

    @property
    def d(self):
        return self.generators.shape[0]


def make_lattice(generators) -> Lattice:
    """Build a lattice from a d x d generator matrix (rows are generators)."""
    gen = np.atleast_2d(np.asarray(generators, dtype=float))
    det = np.linalg.det(gen)
    if abs(det) < 1e-12:
        raise SingularGenerators(f"generator matrix is singular, det = {det:g}")
    duals = TWO_PI * np.linalg.inv(gen).T
    vol = abs(det)
    return Lattice(gen, duals, vol, abs(np.linalg.det(duals)))


def fold_to_bz(lat: Lattice, k):
    """Fold k into the centered zone; returns (k_folded, dual shift) with k = k_folded + shift.

    Folding is per dual coordinate into [-1/2, 1/2).
    """
    k = np.asarray(k, dtype=float)
    x = np.linalg.solve(lat.duals.T, k)
    n = np.floor(x + 0.5)
    shift = lat.duals.T @ n
    return k - shift, shift


# ----------------------------------------------------------------------
# schedules

class Schedule:
    """Complex amplitude c(t) with an analytic derivative.

    kind is one of "constant", "loop" (T-periodic), "ramp" (flat-endpoint,
    clamped outside [0, T]).
    """

    def __init__(self, kind, value_fn, deriv_fn):
        self.kind = kind
        self._value = value_fn
        self._deriv = deriv_fn

    def value(self, t):
        return self._value(np.asarray(t, dtype=float))

    def derivative(self, t):
        return self._deriv(np.asarray(t, dtype=float))


def constant_schedule(c):
    c = complex(c)
    return Schedule("constant",
                    lambda t: np.full_like(t, c, dtype=complex),
                    lambda t: np.zeros_like(t, dtype=complex))


def _progress(T, flat):
    """Loop progress u(t) in [0,1) per period and its derivative, periodic in t."""
    if flat:
        def prog(t):
            return smoothstep((t % T) / T)

        def prog_d(t):
            return smoothstep_d((t % T) / T) / T
    else:
        def prog(t):
            return (t % T) / T

        def prog_d(t):
            return np.full_like(t, 1.0 / T)
    return prog, prog_d


def wound_schedule(c, winding, T, flat=True):
    """c * exp(2 pi i * winding * u(t)) with u running 0 -> 1 per period."""
    c = complex(c)
    prog, prog_d = _progress(T, flat)
    om = TWO_PI * winding

    def val(t):
        return c * np.exp(1j * om * prog(t))

    def der(t):
        return c * 1j * om * prog_d(t) * np.exp(1j * om * prog(t))

    return Schedule("loop", val, der)


def breathing_schedule(mean, amp, T, flat=True):
    """Real amplitude mean + amp*cos(2 pi u(t)), a loop that never winds."""
    prog, prog_d = _progress(T, flat)

    def val(t):
        return (mean + amp * np.cos(TWO_PI * prog(t))) + 0j

    def der(t):
        return (-amp * TWO_PI * prog_d(t) * np.sin(TWO_PI * prog(t))) + 0j

    return Schedule("loop", val, der)


def ramp_schedule(c0, c1, T):
    """Flat-endpoint interpolation from c0 (t<=0) to c1 (t>=T)."""
    c0, c1 = complex(c0), complex(c1)

    def val(t):
        return c0 + (c1 - c0) * smoothstep(t / T)

    def der(t):
        return (c1 - c0) * smoothstep_d(t / T) / T

    return Schedule("ramp", val, der)


# ----------------------------------------------------------------------
# potential paths

@dataclass(frozen=True)
class PotentialPath:
    """Fourier data of a time-dependent lattice-periodic potential.

    entries maps integer dual coordinates G (tuples of length d) to schedules.
    real means c_{-G}(t) = conj(c_G(t)) for all t, checked at construction.
    periodic means every schedule is a loop of period T (or constant).
    """

    lattice: Lattice
    entries: tuple
    T: float
    real: bool
    periodic: bool
    flat_endpoints: bool
    name: str = "custom"

    def coefficient(self, G, t):
        for g, sched in self.entries:
            if g == tuple(G):
                return sched.value(t)
        return np.zeros_like(np.asarray(t, dtype=float), dtype=complex)


def potential_path(lattice, entries, T, name="custom") -> PotentialPath:
    """Assemble and validate a PotentialPath from {G: Schedule} data."""
    ent = tuple((tuple(int(x) for x in g), s) for g, s in entries)
    lookup = dict(ent)
    if len(lookup) != len(ent):
        raise ValueError("duplicate G entries in potential")
    tprobe = np.linspace(0.0, T, 7)
    real = True
    for g, sched in ent:
        neg = tuple(-x for x in g)
        if neg not in lookup:
            real = False
            break
        if np.max(np.abs(lookup[neg].value(tprobe) - np.conj(sched.value(tprobe)))) > 1e-12:
            real = False
            break
    if not real:
        raise ValueError("potential is not real: c_{-G} != conj(c_G); "
                         "only real potentials are supported")
    periodic = all(s.kind in ("constant", "loop") for _, s in ent)
    ends = np.array([0.0, float(T)])
    flat = all(np.max(np.abs(s.derivative(ends))) == 0.0 for _, s in ent)
    return PotentialPath(lattice, ent, float(T), real, periodic, flat, name)


def _lat1d(lattice):
    return make_lattice([[1.0]]) if lattice is None else lattice


def static_potential(v=0.5, lattice=None) -> PotentialPath:
    """V(x) = 2 v cos(2 pi x), frozen in time."""
    lat = _lat1d(lattice)
    ent = [((1,), constant_schedule(v)), ((-1,), constant_schedule(v))]
    return potential_path(lat, ent, 1.0, name="static")


def sliding_cosine(v=0.5, T=1.0, flat=True, lattice=None) -> PotentialPath:
    """V(x,t) = 2 v cos(2 pi (x - u(t))), one full cell of rigid slide per period.

    With flat=True the slide position u(t) is the mollified step, so the
    deformation starts and ends with all time derivatives zero (one loop of a
    Thouless pump); flat=False gives the plain linear slide u = t/T.
    """
    lat = _lat1d(lattice)
    ent = [((1,), wound_schedule(v, -1, T, flat)),
           ((-1,), wound_schedule(v, +1, T, flat))]
    return potential_path(lat, ent, T, name="sliding_cosine")


def two_harmonic_loop(rho=0.6, w=0.3, T=2.0, flat=True, symmetric=False,
                      breath=0.25, lattice=None) -> PotentialPath:
    """Two-harmonic loop: winding first harmonic over a static second one.

    Default (symmetric=False): c_{+-1}(t) = rho * exp(+-2 pi i u(t)),
    c_{+-2} = w.  The loop encircles the point c_1 = 0 where bands 0 and 1
    touch at the zone edge (a pure second harmonic couples only even index
    transfers, so the two sublattice sectors decouple there).  Band 0
    therefore pumps one quantum per cycle, and shrinking rho closes the gap.
    The potential breaks inversion symmetry at generic t.

    symmetric=True replaces the winding by an amplitude breathing
    c_{+-1}(t) = rho + breath*cos(2 pi u(t)) (real), which keeps
    V(-x,t) = V(x,t) for all t.
    """
    lat = _lat1d(lattice)
    if symmetric:
        first = breathing_schedule(rho, breath, T, flat)
        ent = [((1,), first), ((-1,), first)]
    else:
        ent = [((1,), wound_schedule(rho, +1, T, flat)),
               ((-1,), wound_schedule(rho, -1, T, flat))]
    ent += [((2,), constant_schedule(w)), ((-2,), constant_schedule(w))]
    return potential_path(lat, ent, T, name="two_harmonic_loop")


def ramp_potential(v0=0.3, v1=0.7, T=1.0, lattice=None) -> PotentialPath:
    """First-harmonic amplitude ramped from v0 to v1 with flat endpoints."""
    lat = _lat1d(lattice)
    ent = [((1,), ramp_schedule(v0, v1, T)), ((-1,), ramp_schedule(v0, v1, T))]
    return potential_path(lat, ent, T, name="ramp")


def reverse_path(pot: PotentialPath) -> PotentialPath:
    """The same deformation traversed backwards: c_G'(t) = c_G(T - t)."""
    T = pot.T

    def flip(s):
        return Schedule(s.kind,
                        lambda t, s=s: s.value(T - np.asarray(t, dtype=float)),
                        lambda t, s=s: -s.derivative(T - np.asarray(t, dtype=float)))

    ent = [(g, flip(s)) for g, s in pot.entries]
    return potential_path(pot.lattice, ent, T, name=pot.name + "_reversed")


def separable_potential(parts) -> PotentialPath:
    """Additive d-dimensional potential from per-axis 1D paths.

    V(x_1..x_d, t) = sum_j V_j(x_j, t); the fiber Hamiltonian is then an exact
    Kronecker sum and the Fermi projector of a nondegenerate ground state is
    an exact tensor product.
    """
    parts = list(parts)
    d = len(parts)
    gens = np.zeros((d, d))
    for j, p in enumerate(parts):
        if p.lattice.d != 1:
            raise ValueError("separable_potential expects 1D parts")
        gens[j, j] = p.lattice.generators[0, 0]
    lat = make_lattice(gens)
    ent = []
    for j, p in enumerate(parts):
        for g, sched in p.entries:
            G = [0] * d
            G[j] = g[0]
            ent.append((tuple(G), sched))
    T = max(p.T for p in parts)
    return potential_path(lat, ent, T, name="separable")


# ----------------------------------------------------------------------
# plane-wave fiber assembly

def dual_index_box(n_cut, d):
    """Integer dual coordinates of the basis, shape (D, d), C-order flattened."""
    ax = np.arange(-n_cut, n_cut + 1)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def g_vectors(lattice, n_cut):
    """Cartesian dual vectors G_a of the basis, shape (D, d)."""
    return dual_index_box(n_cut, lattice.d).astype(float) @ lattice.duals


def _coupling_pairs(n_cut, d, G):
    """Row/column index arrays with idx[row] - idx[col] = G inside the box."""
    idx = dual_index_box(n_cut, d)
    tgt = idx - np.asarray(G, dtype=int)
    ok = np.all(np.abs(tgt) <= n_cut, axis=1)
    rows = np.nonzero(ok)[0]
    cols = np.ravel_multi_index((tgt[ok] + n_cut).T, (2 * n_cut + 1,) * d)
    return rows, cols


def _potential_matrix(pot, t, n_cut, deriv=False):
    """Potential (or its time derivative) as a dense matrix at time t."""
    d = pot.lattice.d
    D = (2 * n_cut + 1) ** d
    V = np.zeros((D, D), dtype=complex)
    for G, sched in pot.entries:
        if any(abs(g) > 2 * n_cut for g in G):
            warnings.warn(f"coupling G={G} unreachable at n_cut={n_cut}, dropped",
                          CoefficientOutsideCutoff)
            continue
        c = sched.derivative(t) if deriv else sched.value(t)
        rows, cols = _coupling_pairs(n_cut, d, G)
        V[rows, cols] += complex(c)
    return V


def assemble_fiber(pot, k, t, n_cut):
    """Dense Hermitian fiber matrix H(k,t) at one (k, t) point."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    gs = g_vectors(pot.lattice, n_cut)
    H = _potential_matrix(pot, t, n_cut)
    kin = 0.5 * np.sum((k[None, :] + gs) ** 2, axis=1)
    H[np.arange(len(kin)), np.arange(len(kin))] += kin
    return H


def fiber_time_derivative(pot, k, t, n_cut):
    """Analytic dH/dt at (k, t); the kinetic part is time independent."""
    return _potential_matrix(pot, t, n_cut, deriv=True)


def assemble_fiber_batch(pot, ks, t, n_cut):
    """Fiber matrices for a stack of k points, shape (n, D, D).

    The potential block does not depend on k, so it is assembled once.
    """
    ks = np.atleast_2d(np.asarray(ks, dtype=float))
    gs = g_vectors(pot.lattice, n_cut)
    V = _potential_matrix(pot, t, n_cut)
    D = V.shape[0]
    H = np.broadcast_to(V, (len(ks), D, D)).copy()
    kin = 0.5 * np.sum((ks[:, None, :] + gs[None, :, :]) ** 2, axis=2)
    H[:, np.arange(D), np.arange(D)] += kin
    return H


def assemble_fiber_field(pot, mesh, n_cut):
    """Fiber matrices on a whole mesh, shape (n_t, n_nodes, D, D)."""
    D = (2 * n_cut + 1) ** pot.lattice.d
    H = np.empty((mesh.n_t, mesh.n_nodes, D, D), dtype=complex)
    for it, t in enumerate(mesh.ts):
        H[it] = assemble_fiber_batch(pot, mesh.ks, t, n_cut)
    return H


def shift_matrix(n_cut, d, axis=0):
    """Index-shift matrix S with chi(k + gamma*_axis) = S chi(k).

    Realizes the discrete equivariance H(k + gamma*) = S H(k) S^T on the
    truncated box (rows at the cutoff edge are zero).
    """
    idx = dual_index_box(n_cut, d)
    D = len(idx)
    e = np.zeros(d, dtype=int)
    e[axis] = 1
    tgt = idx + e
    ok = np.all(np.abs(tgt) <= n_cut, axis=1)
    rows = np.nonzero(ok)[0]
    cols = np.ravel_multi_index((tgt[ok] + n_cut).T, (2 * n_cut + 1,) * d)
    S = np.zeros((D, D))
    S[rows, cols] = 1.0
    return S


# ----------------------------------------------------------------------
# meshes

@dataclass(frozen=True)
class Mesh:
    """Uniform (k, t) mesh: k nodes over the centered zone, t over [0, T].

    k nodes are flattened in C order over the per-axis fractions
    i/n - 1/2, i = 0..n-1 (even n puts a node at k = 0, the zone edge node
    sits at -1/2 only).  periodic_t marks loop schedules, allowing wrapped
    time stencils.
    """

    lattice: Lattice
    n_k: tuple
    n_t: int
    T: float
    periodic_t: bool
    ks: np.ndarray
    ts: np.ndarray

    @property
    def n_nodes(self):
        return self.ks.shape[0]

    @property
    def dt(self):
        return self.ts[1] - self.ts[0]

    def k_step(self, axis):
        """Physical k-spacing vector along one dual axis."""
        return self.lattice.duals[axis] / self.n_k[axis]

    def k_stride(self, axis):
        """Flat-index stride of a unit step along one k axis."""
        s = 1
        for n in self.n_k[axis + 1:]:
            s *= n
        return s


def make_mesh(pot_or_lattice, n_k, n_t, T=None, periodic_t=None) -> Mesh:
    """Build a mesh; when given a PotentialPath, T and periodicity are taken from it."""
    if isinstance(pot_or_lattice, PotentialPath):
        lat = pot_or_lattice.lattice
        T = pot_or_lattice.T if T is None else T
        periodic_t = pot_or_lattice.periodic if periodic_t is None else periodic_t
    else:
        lat = pot_or_lattice
        if T is None:
            raise ValueError("T required when building a mesh from a bare lattice")
        periodic_t = bool(periodic_t)
    if np.isscalar(n_k):
        n_k = (int(n_k),) * lat.d
    n_k = tuple(int(n) for n in n_k)
    fracs = [np.arange(n) / n - 0.5 for n in n_k]
    grids = np.meshgrid(*fracs, indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=-1)
    ks = X @ lat.duals
    ts = np.linspace(0.0, float(T), int(n_t))
    return Mesh(lat, n_k, int(n_t), float(T), bool(periodic_t), ks, ts)
