"""Hamiltonians and Lindblad generators.

Frequencies here are unit-agnostic: the protocol layer feeds everything
in units of the mechanical frequency (omega_m = 1), while tests are free
to use SI. The dissipator convention carries a factor 2 inside
``D_o[rho] = 2 o rho o^dag - o^dag o rho - rho o^dag o`` and a global
1/2 on each rate, so ``Gamma`` is the population relaxation rate: a bare
qubit relaxes ``<sigma_z>`` at Gamma (2 Nbar + 1).

Vectorization is column-stacking: vec(A rho B) = (B^T kron A) vec(rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from .constants import HBAR, KB
from .errors import SpecMismatchError
from .hilbert import DensityMatrix, HilbertSpec, Operator, fock_ops, qubit_ops

__all__ = [
    "QubitParams",
    "ModelParams",
    "Liouvillian",
    "hamiltonian_N",
    "rabi_hamiltonian",
    "effective_hamiltonian",
    "liouvillian",
    "dressed_liouvillian",
    "thermal_occupation",
    "vec",
    "unvec",
    "spre",
    "spost",
    "dissipator",
]


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose occupation (exp(hbar omega / kB T) - 1)^-1; zero at T = 0."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0:
        return 0.0
    x = HBAR * omega / (KB * temperature)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class QubitParams:
    """Drive, coupling and rates of one qubit (all angular frequencies)."""

    Omega: float = 0.0          # microwave Rabi frequency
    delta: float = 0.0          # drive detuning, omega_D - Delta
    g: float = 0.0              # spin-motion coupling
    Gamma: float = 0.0          # relaxation rate
    Gamma_phi_o: float = 0.0    # dephasing: optical pumping
    Gamma_phi_v: float = 0.0    # dephasing: membrane vibrations
    Gamma_phi_h: float = 0.0    # dephasing: nuclear-spin bath
    Delta: float = 0.0          # bare splitting (thermal weight of relaxation)
    N_qubit: float = 0.0        # bath occupation at the splitting, Nbar_Delta

    def __post_init__(self):
        for name in ("Gamma", "Gamma_phi_o", "Gamma_phi_v", "Gamma_phi_h",
                     "N_qubit"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def Gamma_phi(self) -> float:
        return self.Gamma_phi_o + self.Gamma_phi_v + self.Gamma_phi_h


@dataclass(frozen=True)
class ModelParams:
    """Everything the generators need, in one consistent unit system."""

    spec: HilbertSpec
    omega_m: float
    gamma_m: float
    N_th_mech: float
    qubits: tuple[QubitParams, ...] = dc_field(default_factory=tuple)

    def __post_init__(self):
        if self.N_th_mech < 0 or self.gamma_m < 0:
            raise ValueError("rates and occupations must be >= 0")
        if len(self.qubits) != self.spec.n_qubits:
            raise SpecMismatchError(
                f"{len(self.qubits)} qubit parameter sets for "
                f"{self.spec.n_qubits}-qubit spec"
            )
        object.__setattr__(self, "qubits", tuple(self.qubits))

    def mech_occupation(self, omega: float) -> float:
        """Thermal occupation of the mechanical bath at |omega|, on the
        Bose profile through (omega_m, N_th_mech)."""
        if self.N_th_mech == 0:
            return 0.0
        scale = math.log1p(1.0 / self.N_th_mech) / self.omega_m
        return 1.0 / math.expm1(scale * abs(omega))


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Sparse superoperator acting on column-stacked density matrices.

    ``basis`` is the unitary whose columns express this generator's basis
    in the computational one (None means computational). States passed to
    the solvers are always in the computational basis; the transform is
    handled internally.
    """

    spec: HilbertSpec
    matrix: sp.csr_matrix
    basis: np.ndarray | None = None

    def to_internal(self, rho: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return rho
        return self.basis.conj().T @ rho @ self.basis

    def to_computational(self, rho: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return rho
        return self.basis @ rho @ self.basis.conj().T

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """L[rho] for a matrix-form rho in the computational basis."""
        d = self.spec.dim
        out = self.matrix @ vec(self.to_internal(rho))
        return self.to_computational(unvec(out, d))


# ---------------------------------------------------------------------------
# vectorization helpers (column-stacking)


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((d, d), order="F")


def spre(a: sp.spmatrix | np.ndarray) -> sp.csr_matrix:
    a = sp.csr_matrix(a)
    return sp.kron(sp.identity(a.shape[0], format="csr"), a, format="csr")


def spost(b: sp.spmatrix | np.ndarray) -> sp.csr_matrix:
    b = sp.csr_matrix(b)
    return sp.kron(b.T, sp.identity(b.shape[0], format="csr"), format="csr")


def dissipator(o: sp.spmatrix | np.ndarray) -> sp.csr_matrix:
    """Superoperator of D_o[rho] = 2 o rho o^dag - {o^dag o, rho}."""
    o = sp.csr_matrix(o)
    odag = o.conj().T.tocsr()
    oo = (odag @ o).tocsr()
    ident = sp.identity(o.shape[0], format="csr")
    return (
        2.0 * sp.kron(o.conj(), o, format="csr")
        - sp.kron(ident, oo, format="csr")
        - sp.kron(oo.T, ident, format="csr")
    )


# ---------------------------------------------------------------------------
# Hamiltonians


def hamiltonian_N(params: ModelParams) -> Operator:
    """Spin-motion Hamiltonian for N driven qubits coupled to the mode:

        omega_m b^dag b
        + sum_j (Omega_j/2) sx_j - (delta_j/2) sz_j + g_j sz_j (b + b^dag)
    """
    spec = params.spec
    a, adag, num = fock_ops(spec)
    h = params.omega_m * num.matrix
    x = a.matrix + adag.matrix
    for j, q in enumerate(params.qubits):
        sx, _, sz, _, _ = qubit_ops(spec, j)
        h = h + (q.Omega / 2.0) * sx.matrix - (q.delta / 2.0) * sz.matrix \
            + q.g * (sz.matrix @ x)
    return Operator(spec, h)


def rabi_hamiltonian(spec: HilbertSpec, omega_m: float, Omega: float,
                     g: float) -> Operator:
    """(Omega/2) sz - g sx (b + b^dag) + omega_m b^dag b, the spin-rotated
    form of the resonantly driven (delta = 0) single-qubit Hamiltonian."""
    if spec.n_qubits != 1:
        raise SpecMismatchError("rabi_hamiltonian expects a single-qubit spec")
    a, adag, num = fock_ops(spec)
    sx, _, sz, _, _ = qubit_ops(spec, 0)
    h = (Omega / 2.0) * sz.matrix - g * (sx.matrix @ (a.matrix + adag.matrix)) \
        + omega_m * num.matrix
    return Operator(spec, h)


def effective_hamiltonian(spec: HilbertSpec, omega_m: float, Omega: float,
                          g: float) -> Operator:
    """Oscillator-only quadratic model after eliminating the spin excited
    state: omega_m b^dag b - (g^2/Omega)(b + b^dag)^2. Loses stability at
    4 g^2 = omega_m Omega."""
    if Omega <= 0:
        raise ValueError("Omega must be positive")
    if spec.n_qubits != 0:
        raise SpecMismatchError("effective_hamiltonian expects an oscillator spec")
    a, adag, num = fock_ops(spec)
    x = a.matrix + adag.matrix
    return Operator(spec, omega_m * num.matrix - (g**2 / Omega) * (x @ x))


# ---------------------------------------------------------------------------
# bare generator


def _hamiltonian_part(h: np.ndarray) -> sp.csr_matrix:
    hs = sp.csr_matrix(h)
    return -1j * (spre(hs) - spost(hs))


def liouvillian(params: ModelParams, H: Operator) -> Liouvillian:
    """Weak-coupling generator: commutator with ``H`` plus mechanical
    damping, qubit relaxation and qubit dephasing, all in the fixed
    dissipator convention of this module."""
    if H.spec != params.spec:
        raise SpecMismatchError("Hamiltonian spec does not match params")
    if not H.is_hermitian(tol=1e-9 * max(1.0, float(np.abs(H.matrix).max()))):
        raise ValueError("Hamiltonian must be Hermitian")
    spec = params.spec
    a, adag, _ = fock_ops(spec)
    L = _hamiltonian_part(H.matrix)
    nm = params.N_th_mech
    if params.gamma_m > 0:
        L = L + (params.gamma_m / 2.0) * (
            (nm + 1.0) * dissipator(a.matrix) + nm * dissipator(adag.matrix)
        )
    for j, q in enumerate(params.qubits):
        _, _, sz, s_plus, s_minus = qubit_ops(spec, j)
        if q.Gamma > 0:
            nq = q.N_qubit
            L = L + (q.Gamma / 2.0) * (
                (nq + 1.0) * dissipator(s_minus.matrix)
                + nq * dissipator(s_plus.matrix)
            )
        if q.Gamma_phi > 0:
            L = L + (q.Gamma_phi / 2.0) * dissipator(sz.matrix)
    return Liouvillian(spec=spec, matrix=L.tocsr())


# ---------------------------------------------------------------------------
# dressed generator


def _binned_jumps(o_eig: np.ndarray, w: np.ndarray, bin_tol: float):
    """Split an operator (already in the eigenbasis with energies ``w``)
    into jump operators grouped by Bohr frequency w_k - w_j; groups closer
    than ``bin_tol`` merge. Yields (omega_bin, sparse jump matrix)."""
    d = o_eig.shape[0]
    jj, kk = np.nonzero(np.abs(o_eig) > 1e-14 * max(1.0, np.abs(o_eig).max()))
    if jj.size == 0:
        return
    bohr = w[kk] - w[jj]
    order = np.argsort(bohr, kind="stable")
    jj, kk, bohr = jj[order], kk[order], bohr[order]
    start = 0
    for i in range(1, len(bohr) + 1):
        if i == len(bohr) or bohr[i] - bohr[start] > bin_tol:
            sel = slice(start, i)
            vals = o_eig[jj[sel], kk[sel]]
            amat = sp.coo_matrix((vals, (jj[sel], kk[sel])), shape=(d, d))
            yield float(bohr[sel].mean()), amat.tocsr()
            start = i


def dressed_liouvillian(
    params: ModelParams,
    H: Operator,
    bin_tol: float | None = None,
) -> Liouvillian:
    """Generator with dissipators built from eigenoperators of ``H``
    (secular approximation within Bohr-frequency bins).

    Each bare jump operator is decomposed over the eigenbasis of H; a
    component that lowers the system energy by omega relaxes at the
    channel rate times (Nbar(omega) + 1), a raising component at the rate
    times Nbar(omega). Mechanical components use the thermal profile of
    the mechanical bath; qubit relaxation keeps the constant occupation
    at the (large, frame-hidden) qubit splitting; dephasing is treated as
    a flat-spectrum channel. Zero-frequency components keep their bare
    weights, which makes the construction reduce exactly to the bare
    generator when the Hamiltonian does not mix the channels.
    """
    if H.spec != params.spec:
        raise SpecMismatchError("Hamiltonian spec does not match params")
    hm = H.matrix
    if float(np.max(np.abs(hm - hm.conj().T))) > 1e-9 * max(1.0, float(np.abs(hm).max())):
        raise ValueError("Hamiltonian must be Hermitian")
    spec = params.spec
    d = spec.dim
    if bin_tol is None:
        bin_tol = 1e-6 * abs(params.omega_m)
    w, V = np.linalg.eigh(hm)

    # Hamiltonian part is diagonal in its own eigenbasis
    bohr_grid = np.subtract.outer(w, w)              # (a, b) -> w_a - w_b
    L = sp.diags(-1j * bohr_grid.reshape(-1, order="F"), format="csr")

    a_op, adag_op, _ = fock_ops(spec)

    def add_channel(o: np.ndarray, rate: float, weight_of):
        nonlocal L
        if rate == 0:
            return
        o_eig = V.conj().T @ o @ V
        for omega, amat in _binned_jumps(o_eig, w, bin_tol):
            weight = weight_of(omega)
            if weight != 0.0:
                L = L + (rate * weight) * dissipator(amat)

    def thermal_weight(occ, zero_weight):
        def weight(omega):
            if omega > bin_tol:
                return occ(omega) + 1.0     # downward: emission
            if omega < -bin_tol:
                return occ(-omega)          # upward: absorption
            return zero_weight              # degenerate: keep the bare role
        return weight

    nm = params.N_th_mech
    if params.gamma_m > 0:
        add_channel(a_op.matrix, params.gamma_m / 2.0,
                    thermal_weight(params.mech_occupation, nm + 1.0))
        add_channel(adag_op.matrix, params.gamma_m / 2.0,
                    thermal_weight(params.mech_occupation, nm))
    for j, q in enumerate(params.qubits):
        _, _, sz, s_plus, s_minus = qubit_ops(spec, j)
        if q.Gamma > 0:
            # the lab qubit splitting dwarfs every dressed shift, so the
            # bath occupation is effectively constant across bins
            nq = q.N_qubit
            occ_const = lambda omega, _n=nq: _n
            add_channel(s_minus.matrix, q.Gamma / 2.0,
                        thermal_weight(occ_const, nq + 1.0))
            add_channel(s_plus.matrix, q.Gamma / 2.0,
                        thermal_weight(occ_const, nq))
        if q.Gamma_phi > 0:
            # dephasing bath treated as flat: every component keeps Gamma_phi
            add_channel(sz.matrix, q.Gamma_phi / 2.0, lambda omega: 1.0)
    return Liouvillian(spec=spec, matrix=L.tocsr(), basis=V)
