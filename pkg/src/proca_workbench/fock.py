"""Momentum-space one-particle layer and truncated-Fock oracle.

One-particle space for the vector field: square-integrable C^4-valued functions
of spatial momentum, transversal to the on-shell covector k = (omega(k), kvec),
with fibre inner product <v, w> = -eta^{-1}(conj v, w) (positive definite on the
transversal subspace).  The scalar analogue drops the fibre structure.  On the
lattice the momentum measure d^3k/(2pi)^3 becomes a flat weight 1/L^3 per mode.

Mass-shell restriction uses the covector Fourier convention
hat f(k) = integral e^{+i k.x} f(x) d^4x with k.x = k_0 t + kvec.xvec:
spatially an exact DFT on the torus, in time a plain trapezoid sum against
e^{+i omega(k) t}.  Admissible inputs vanish identically near the time
boundary, so the trapezoid converges faster than any power of dt.

The closed-form n-particle expectation of the quadratic observable built from a
smeared field is validated here by a brute-force oracle: dense creation and
annihilation matrices on an explicitly truncated symmetric Fock space over the
populated modes.  The two charged-field sectors enter as a tensor product; since
the n-particle state is a product vector and every expanded term is a product
operator, the oracle evaluates each tensor factor with its own dense matrices
and multiplies the factor expectations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .formindex import METRIC_DIAG
from .lattice import Grid, LatticeField, require_interior_support


class GridMismatch(ValueError):
    """Mode-space operands live on different grids or mass shells."""


class TruncationOverflow(RuntimeError):
    """A brute-force Fock computation exceeds its declared truncation budget."""


# ---------------------------------------------------------------------------
# mode grid and states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeGrid:
    """Spatial mode set of a lattice grid with the (2pi)^-3 d^3k weight."""

    grid: Grid

    @property
    def weight(self) -> float:
        """Quadrature weight per mode: (Delta k)^3/(2pi)^3 = 1/L^3."""
        return 1.0 / self.grid.L ** 3

    @cached_property
    def kvecs(self) -> np.ndarray:
        """True mode covectors, shape (3, N, N, N) in FFT ordering."""
        k = self.grid.axis_modes
        N = self.grid.N
        out = np.empty((3, N, N, N))
        out[0] = k[:, None, None]
        out[1] = k[None, :, None]
        out[2] = k[None, None, :]
        return out

    @cached_property
    def k_squared(self) -> np.ndarray:
        return np.sum(self.kvecs ** 2, axis=0)

    def omega(self, mass: float) -> np.ndarray:
        """On-shell frequency per mode (true modes, Nyquist included)."""
        return np.sqrt(mass * mass + self.k_squared)


@dataclass
class ModeState:
    """C^4-valued mode function on the mass shell of the given mass."""

    modes: ModeGrid
    values: np.ndarray  # (4, N, N, N) complex
    mass: float

    def __post_init__(self):
        N = self.modes.grid.N
        if self.values.shape != (4, N, N, N):
            raise GridMismatch("mode values shaped %r do not fit N=%d"
                               % (self.values.shape, N))

    @property
    def onshell_covector(self) -> np.ndarray:
        """(4, N, N, N): the covector (omega(k), kvec) at every mode."""
        out = np.empty((4,) + self.values.shape[1:])
        out[0] = self.modes.omega(self.mass)
        out[1:] = self.modes.kvecs
        return out

    def transversality_defect(self) -> float:
        """max |<value(k), k>| / max fibre norm over populated modes."""
        k = self.onshell_covector
        pair = np.zeros(self.values.shape[1:], complex)
        fibre = np.zeros(self.values.shape[1:])
        for mu in range(4):
            pair -= METRIC_DIAG[mu] * np.conj(self.values[mu]) * k[mu]
            fibre += abs(self.values[mu]) ** 2
        scale = math.sqrt(float(fibre.max())) * float(np.abs(k).max())
        if scale == 0.0:
            return 0.0
        return float(np.abs(pair).max()) / scale

    def scale(self, c: complex) -> "ModeState":
        return ModeState(self.modes, self.values * c, self.mass)


@dataclass
class ScalarModeState:
    """Scalar mode function on the mass shell of the given mass."""

    modes: ModeGrid
    values: np.ndarray  # (N, N, N) complex
    mass: float

    def __post_init__(self):
        N = self.modes.grid.N
        if self.values.shape != (N, N, N):
            raise GridMismatch("mode values shaped %r do not fit N=%d"
                               % (self.values.shape, N))

    def scale(self, c: complex) -> "ScalarModeState":
        return ScalarModeState(self.modes, self.values * c, self.mass)


def _check_compatible(u, v) -> None:
    if type(u) is not type(v):
        raise GridMismatch("cannot pair %s with %s"
                           % (type(u).__name__, type(v).__name__))
    if u.modes.grid != v.modes.grid:
        raise GridMismatch("mode states live on different grids")
    if u.mass != v.mass:
        raise GridMismatch("mode states live on different mass shells "
                           "(%g vs %g)" % (u.mass, v.mass))


def inner(u, v) -> complex:
    """Hilbert-space inner product; antilinear in the first argument.

    Vector states pair fibrewise through -eta^{-1}(conj u, v) (positive on
    transversal vectors); scalar states through conj(u) v.  Both sum over
    modes with the 1/L^3 measure weight.
    """
    _check_compatible(u, v)
    if isinstance(u, ScalarModeState):
        acc = np.sum(np.conj(u.values) * v.values)
    else:
        acc = 0.0 + 0.0j
        for mu in range(4):
            acc -= METRIC_DIAG[mu] * np.sum(np.conj(u.values[mu]) * v.values[mu])
    return complex(u.modes.weight * acc)


def norm(u) -> float:
    sq = inner(u, u).real
    return math.sqrt(max(sq, 0.0))


# ---------------------------------------------------------------------------
# mass-shell maps
# ---------------------------------------------------------------------------

def _shell_restrict(grid: Grid, comp: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Trapezoid of e^{+i omega t} against the spatial DFT of one component.

    comp: (Nt, N, N, N) position-space data; returns (N, N, N) complex values
    of the 4D transform at (k_0, kvec) = (omega(kvec), kvec).
    """
    fhat = grid.L ** 3 * np.fft.ifftn(comp, axes=(1, 2, 3))
    wts = np.full(grid.Nt, grid.dt)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    out = np.zeros(comp.shape[1:], complex)
    # chunk the last axis to bound the size of the per-mode phase array
    step = max(1, int(2e7 // (grid.Nt * grid.N * grid.N)))
    for lo in range(0, grid.N, step):
        sl = slice(lo, lo + step)
        phase = np.exp(1j * grid.times[:, None, None, None] * omega[None, :, :, sl])
        out[:, :, sl] = np.einsum("t,txyz,txyz->xyz", wts, phase, fhat[:, :, :, sl])
    return out


def kmap(f: LatticeField, mass: float) -> ModeState:
    """Mass-shell map of a 1-form: transform, restrict, project, weight.

    (Kf)_mu(k) = (2 omega)^{-1/2} (delta_mu^nu - m^-2 k_mu k^nu) hat f_nu
    restricted to k_0 = omega(k).  The projector output is transversal by
    construction since the on-shell covector is null for it.
    """
    if f.degree != 1:
        raise GridMismatch("kmap expects a 1-form, got degree %d" % f.degree)
    require_interior_support(f, what="mass-shell input")
    grid = f.grid
    modes = ModeGrid(grid)
    omega = modes.omega(mass)
    vals = np.empty((4,) + omega.shape, complex)
    for mu in range(4):
        vals[mu] = _shell_restrict(grid, f.data[mu], omega)
    kcov = np.empty_like(vals.real)
    kcov[0] = omega
    kcov[1:] = modes.kvecs
    # k^nu hat f_nu with the index raised by the inverse metric
    kdotf = sum(METRIC_DIAG[mu] * kcov[mu] * vals[mu] for mu in range(4))
    vals -= (kcov / mass ** 2) * kdotf[None]
    vals *= (2.0 * omega) ** -0.5
    return ModeState(modes, vals, mass)


def kmap_scalar(h: LatticeField, mass: float) -> ScalarModeState:
    """Mass-shell map of a scalar: (K h)(k) = (2 omega)^{-1/2} hat h(omega, k)."""
    if h.degree != 0:
        raise GridMismatch("kmap_scalar expects a 0-form, got degree %d" % h.degree)
    require_interior_support(h, what="mass-shell input")
    grid = h.grid
    modes = ModeGrid(grid)
    omega = modes.omega(mass)
    vals = _shell_restrict(grid, h.data[0], omega) * (2.0 * omega) ** -0.5
    return ScalarModeState(modes, vals, mass)


# ---------------------------------------------------------------------------
# closed-form n-particle expectation
# ---------------------------------------------------------------------------

def expectation_quadratic(S: ModeState, n: int, h_minus_K: ModeState,
                          conj_kmap: Optional[ModeState] = None) -> float:
    """Expectation of the quadratic smeared-field observable in the n-particle
    single-mode state built on S.

    Returns ||Kh||^2 + n |<K hbar, S>|^2 ||S||^(2(n-1)), the two surviving Wick
    contributions.  S is normalized internally, so the result equals the
    evaluation in the normalized state whatever scale S carries.

    h_minus_K is the mass-shell image of the scattered section h; conj_kmap
    must supply the mass-shell image of its complex conjugate whenever h is
    not real (the two images sample the 4D transform on opposite shells, so
    neither determines the other).  Default: h real, both images coincide.
    """
    if n < 0:
        raise ValueError("particle number must be nonnegative")
    ns = norm(S)
    if ns == 0.0:
        raise ValueError("the state vector must be nonzero")
    u = conj_kmap if conj_kmap is not None else h_minus_K
    _check_compatible(u, h_minus_K)
    out = inner(h_minus_K, h_minus_K).real
    if n > 0:
        out += n * abs(inner(u, S) / ns) ** 2
    return float(out)


# ---------------------------------------------------------------------------
# brute-force oracle on a truncated Fock space
# ---------------------------------------------------------------------------

def _gather_fibres(states: Sequence[ModeState], tol: float):
    """Populated modes and their fibre vectors across the given states.

    Returns (flat mode indices, list of (len(states), 4) fibre matrices).
    """
    amp = np.zeros(states[0].values.shape[1:])
    for st in states:
        amp += np.sum(np.abs(st.values), axis=0)
    flat = amp.reshape(-1)
    top = float(flat.max())
    if top == 0.0:
        return np.empty(0, int), []
    idx = np.nonzero(flat > tol * top)[0]
    fibres = []
    for i in idx:
        fibres.append(np.stack([st.values.reshape(4, -1)[:, i] for st in states]))
    return idx, fibres


def _fibre_gram(v: np.ndarray, w: np.ndarray) -> complex:
    acc = 0.0 + 0.0j
    for mu in range(4):
        acc -= METRIC_DIAG[mu] * np.conj(v[mu]) * w[mu]
    return acc


def _orthonormal_coefficients(states: Sequence[ModeState], tol: float = 1e-13):
    """Orthonormal one-particle basis adapted to the states' populated modes.

    Gram-Schmidt runs per mode in the fibre inner product scaled by the mode
    weight, so the returned coefficient vectors satisfy Parseval against the
    Hilbert-space inner product.  Returns (d, coefficient matrix of shape
    (len(states), d)).
    """
    idx, fibres = _gather_fibres(states, tol)
    weight = states[0].modes.weight
    coeffs: List[List[complex]] = [[] for _ in states]
    total = 0
    for fib in fibres:
        basis: List[np.ndarray] = []
        for v in fib:
            r = v.copy()
            for _ in range(2):  # re-orthogonalize once for numerical stability
                for e in basis:
                    r = r - (weight * _fibre_gram(e, r)) * e
            nr2 = (weight * _fibre_gram(r, r)).real
            floor = tol ** 2 * max((weight * _fibre_gram(v, v)).real, 1e-300)
            if nr2 > floor and len(basis) < 3:
                basis.append(r / math.sqrt(nr2))
        for s_i, v in enumerate(fib):
            for e in basis:
                coeffs[s_i].append(weight * _fibre_gram(e, v))
        total += len(basis)
    mat = np.array(coeffs, complex).reshape(len(states), total)
    return total, mat


def _occupation_basis(d: int, cap: int) -> Tuple[List[Tuple[int, ...]], Dict[Tuple[int, ...], int]]:
    """All occupation multi-indices over d modes with total occupation <= cap."""
    basis: List[Tuple[int, ...]] = []
    for total in range(cap + 1):
        for combo in combinations_with_replacement(range(d), total):
            occ = [0] * d
            for j in combo:
                occ[j] += 1
            basis.append(tuple(occ))
    index = {occ: i for i, occ in enumerate(basis)}
    return basis, index


def _creation_matrix(u: np.ndarray, basis, index) -> np.ndarray:
    """Dense matrix of the creation operator a*(u) on the truncated space.

    Linear in u; states pushed above the occupation cap are annihilated,
    which is the truncation's defining convention.
    """
    dim = len(basis)
    out = np.zeros((dim, dim), complex)
    for col, occ in enumerate(basis):
        for j, uj in enumerate(u):
            if uj == 0.0:
                continue
            lifted = list(occ)
            lifted[j] += 1
            row = index.get(tuple(lifted))
            if row is not None:
                out[row, col] += uj * math.sqrt(occ[j] + 1)
    return out


def fock_oracle(S: ModeState, n: int, h_minus_K: ModeState,
                mode_budget: int = 4, occupation_cap: int = 4,
                conj_kmap: Optional[ModeState] = None) -> float:
    """Brute-force expectation on an explicitly truncated two-sector Fock space.

    Builds dense creation/annihilation matrices over the populated modes,
    creates the n-particle vector by repeated application of a*(S), and
    evaluates all four expanded terms of
    (a*(K hbar) + b(K h)) (a(K hbar) + b*(K h)).
    The state is a product vector across the two sectors and each term is a
    product operator, so sector expectations are computed separately and
    multiplied; the particle-changing cross terms vanish through an explicit
    vacuum matrix element, not by assumption.
    """
    if not 1 <= mode_budget <= 4:
        raise TruncationOverflow("mode budget must be between 1 and 4")
    if not 0 <= n <= occupation_cap <= 4:
        raise TruncationOverflow("need n <= occupation_cap <= 4, got n=%d cap=%d"
                                 % (n, occupation_cap))
    u_state = conj_kmap if conj_kmap is not None else h_minus_K
    _check_compatible(S, h_minus_K)
    _check_compatible(u_state, h_minus_K)

    ns = norm(S)
    if ns == 0.0:
        raise ValueError("the state vector must be nonzero")
    S = S.scale(1.0 / ns)

    idx, _ = _gather_fibres((S, u_state, h_minus_K), 1e-13)
    if len(idx) > mode_budget:
        raise TruncationOverflow("%d populated modes exceed the budget of %d"
                                 % (len(idx), mode_budget))
    d, mat = _orthonormal_coefficients((S, u_state, h_minus_K))
    s_vec, u_vec, w_vec = mat[0], mat[1], mat[2]

    cap_a = n + 1  # headroom: every expanded term acts without clipping
    basis_a, index_a = _occupation_basis(d, cap_a)
    if len(basis_a) > 4000:
        raise TruncationOverflow("oracle dimension %d exceeds the dense budget"
                                 % len(basis_a))
    a_dag_S = _creation_matrix(s_vec, basis_a, index_a)
    a_dag_u = _creation_matrix(u_vec, basis_a, index_a)
    a_u = a_dag_u.conj().T

    vac_a = np.zeros(len(basis_a), complex)
    vac_a[index_a[(0,) * d]] = 1.0
    chi = vac_a
    for _ in range(n):
        chi = a_dag_S @ chi
    # <chi|chi> = n! for normalized S; divide at the end

    basis_b, index_b = _occupation_basis(d, 1)
    b_dag_w = _creation_matrix(w_vec, basis_b, index_b)
    b_w = b_dag_w.conj().T
    vac_b = np.zeros(len(basis_b), complex)
    vac_b[index_b[(0,) * d]] = 1.0

    term_aa = np.vdot(chi, a_dag_u @ (a_u @ chi))
    term_ab = np.vdot(chi, a_dag_u @ chi) * np.vdot(vac_b, b_dag_w @ vac_b)
    term_ba = np.vdot(chi, a_u @ chi) * np.vdot(vac_b, b_w @ vac_b)
    term_bb = np.vdot(chi, chi) * np.vdot(vac_b, b_w @ (b_dag_w @ vac_b))
    total = (term_aa + term_ab + term_ba + term_bb) / math.factorial(n)
    if abs(total.imag) > 1e-10 * max(abs(total.real), 1.0):
        raise RuntimeError("oracle expectation has a non-real value: %r" % total)
    return float(total.real)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def mode_state_csv(state, path: str) -> None:
    """Write a mode state as CSV: k1,k2,k3 then Re/Im per component."""
    if isinstance(state, ScalarModeState):
        comps = state.values.reshape(1, -1)
    else:
        comps = state.values.reshape(4, -1)
    kv = state.modes.kvecs.reshape(3, -1)
    headers = ["k1", "k2", "k3"]
    for c in range(comps.shape[0]):
        headers += ["re_%d" % c, "im_%d" % c]
    with open(path, "w") as fh:
        fh.write(",".join(headers) + "\n")
        for i in range(kv.shape[1]):
            row = ["%.17g" % kv[a, i] for a in range(3)]
            for c in range(comps.shape[0]):
                row += ["%.17g" % comps[c, i].real, "%.17g" % comps[c, i].imag]
            fh.write(",".join(row) + "\n")
