"""Operator algebra on truncated qubit ⊗ oscillator Hilbert spaces.

All composite operators use a fixed tensor ordering: qubit 0 ⊗ ... ⊗
qubit (N-1) ⊗ oscillator. Matrices are dense ``complex128``; the spaces
used by the protocols are small (dimension <= a few hundred), so clarity
wins over sparse storage here. Everything is immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma

import numpy as np
from scipy.linalg import expm

from .errors import SpecMismatchError, TruncationError

__all__ = [
    "HilbertSpec",
    "Operator",
    "DensityMatrix",
    "fock_ops",
    "qubit_ops",
    "identity",
    "expectation",
    "partial_trace_to_oscillator",
    "partial_trace_qubit",
    "replace_qubit_state",
    "replace_oscillator_state",
    "coherent_state",
    "fock_state",
    "thermal_state",
    "pure_dm",
    "displacement_operator",
    "parity_operator",
    "coherent_overlap",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class HilbertSpec:
    """Shape of a composite space: ``n_qubits`` two-level systems and one
    oscillator truncated to ``fock_dim`` levels (n_max = fock_dim - 1)."""

    n_qubits: int
    fock_dim: int

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be >= 0")
        if self.fock_dim < 1:
            raise ValueError("fock_dim must be >= 1")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits * self.fock_dim

    @property
    def n_max(self) -> int:
        return self.fock_dim - 1

    def factor_dims(self) -> tuple[int, ...]:
        return (2,) * self.n_qubits + (self.fock_dim,)


def _check_same_spec(a, b):
    if a.spec != b.spec:
        raise SpecMismatchError(f"incompatible specs {a.spec} and {b.spec}")


@dataclass(frozen=True)
class Operator:
    """A square complex matrix tagged with its Hilbert space."""

    spec: HilbertSpec
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.spec.dim, self.spec.dim):
            raise SpecMismatchError(
                f"matrix shape {m.shape} does not match spec dim {self.spec.dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "Operator":
        return Operator(self.spec, self.matrix.conj().T)

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_spec(self, other)
        return Operator(self.spec, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_spec(self, other)
        return Operator(self.spec, self.matrix - other.matrix)

    def __neg__(self) -> "Operator":
        return Operator(self.spec, -self.matrix)

    def __mul__(self, c) -> "Operator":
        return Operator(self.spec, self.matrix * complex(c))

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_spec(self, other)
        return Operator(self.spec, self.matrix @ other.matrix)


@dataclass(frozen=True)
class DensityMatrix:
    """A state: Hermitian, unit-trace, positive (within tolerances)."""

    spec: HilbertSpec
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.spec.dim, self.spec.dim):
            raise SpecMismatchError(
                f"matrix shape {m.shape} does not match spec dim {self.spec.dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def validate(self) -> None:
        """Raise ValueError if Hermiticity / trace / positivity tolerances fail."""
        herm = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = complex(np.trace(self.matrix))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace deviates from 1 by {abs(tr - 1.0):.3e}")
        w = np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
        if w.min() < POSITIVITY_TOL:
            raise ValueError(f"negative eigenvalue {w.min():.3e}")

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


# ---------------------------------------------------------------------------
# operator constructors


def _embed(spec: HilbertSpec, slot: int, local: np.ndarray) -> np.ndarray:
    """Pad ``local`` with identities on every other factor of ``spec``."""
    dims = spec.factor_dims()
    out = np.array([[1.0 + 0j]])
    for k, d in enumerate(dims):
        blk = local if k == slot else np.eye(d, dtype=complex)
        out = np.kron(out, blk)
    return out


def identity(spec: HilbertSpec) -> Operator:
    return Operator(spec, np.eye(spec.dim, dtype=complex))


def fock_ops(spec: HilbertSpec) -> tuple[Operator, Operator, Operator]:
    """Truncated ladder operators on the oscillator factor.

    Returns ``(annihilation, creation, number)`` embedded in the full
    space. The truncation makes ``[a, a^dag]`` equal the identity except
    for the bottom-right diagonal entry, which is ``-n_max``.
    """
    n = spec.fock_dim
    a_local = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    a = Operator(spec, _embed(spec, spec.n_qubits, a_local))
    adag = a.dag()
    return a, adag, adag @ a


_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def qubit_ops(
    spec: HilbertSpec, j: int
) -> tuple[Operator, Operator, Operator, Operator, Operator]:
    """Pauli operators for qubit ``j``: ``(sx, sy, sz, s_plus, s_minus)``.

    Sign convention: sigma_z |up> = +|up>, with |up> the first basis
    state of the qubit factor. sigma_± = (sigma_x ± i sigma_y)/2, so
    s_minus |up> = |down>.
    """
    if not 0 <= j < spec.n_qubits:
        raise IndexError(f"qubit index {j} out of range for {spec.n_qubits} qubits")
    sx = Operator(spec, _embed(spec, j, _SX))
    sy = Operator(spec, _embed(spec, j, _SY))
    sz = Operator(spec, _embed(spec, j, _SZ))
    sp = 0.5 * (sx + 1j * sy)
    sm = 0.5 * (sx - 1j * sy)
    return sx, sy, sz, sp, sm


# ---------------------------------------------------------------------------
# expectations and partial traces


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    """tr(op . rho). Real to ~1e-10 for Hermitian ``op``."""
    if rho.spec != op.spec:
        raise SpecMismatchError(f"incompatible specs {rho.spec} and {op.spec}")
    return complex(np.trace(op.matrix @ rho.matrix))


def _ptrace_keep_last(mat: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    """Trace out all factors except the last one."""
    k = len(dims)
    resh = mat.reshape(dims + dims)
    for _ in range(k - 1):
        # trace over the leading remaining factor (axis 0 with its ket twin)
        resh = np.trace(resh, axis1=0, axis2=resh.ndim // 2)
    return resh


def partial_trace_to_oscillator(rho: DensityMatrix) -> DensityMatrix:
    """Reduced state on the Fock factor; trace is preserved."""
    dims = rho.spec.factor_dims()
    red = _ptrace_keep_last(rho.matrix, dims)
    return DensityMatrix(HilbertSpec(0, rho.spec.fock_dim), red)


def partial_trace_qubit(rho: DensityMatrix, j: int) -> np.ndarray:
    """2x2 reduced state of qubit ``j``."""
    dims = rho.spec.factor_dims()
    k = len(dims)
    resh = rho.matrix.reshape(dims + dims)
    moved = np.moveaxis(np.moveaxis(resh, j, 0), k + j, 1)
    rest = int(np.prod(dims)) // dims[j]
    return np.trace(moved.reshape(2, 2, rest, rest), axis1=2, axis2=3)


def _replace_factor(rho: DensityMatrix, slot: int, fac: np.ndarray) -> DensityMatrix:
    """rho -> fac (x) tr_slot(rho), with ``fac`` re-inserted at ``slot``."""
    dims = rho.spec.factor_dims()
    k = len(dims)
    d = dims[slot]
    rest_dims = dims[:slot] + dims[slot + 1:]
    rest = int(np.prod(rest_dims)) if rest_dims else 1
    resh = rho.matrix.reshape(dims + dims)
    rho_rest = np.trace(resh, axis1=slot, axis2=k + slot).reshape(rest, rest)
    t = np.kron(fac, rho_rest).reshape((d,) + rest_dims + (d,) + rest_dims)
    t = np.moveaxis(t, 0, slot)       # fac ket index back to its slot
    t = np.moveaxis(t, k, k + slot)   # fac bra index likewise
    return DensityMatrix(rho.spec, t.reshape(rho.spec.dim, rho.spec.dim))


def replace_qubit_state(rho: DensityMatrix, j: int, qubit_dm: np.ndarray) -> DensityMatrix:
    """Discard qubit ``j`` and set it to ``qubit_dm`` (2x2), keeping the rest."""
    if not 0 <= j < rho.spec.n_qubits:
        raise IndexError(f"qubit index {j} out of range")
    return _replace_factor(rho, j, np.asarray(qubit_dm, dtype=complex))


def replace_oscillator_state(rho: DensityMatrix, osc_dm: np.ndarray) -> DensityMatrix:
    """Discard the oscillator factor and set it to ``osc_dm``."""
    return _replace_factor(rho, rho.spec.n_qubits, np.asarray(osc_dm, dtype=complex))


# ---------------------------------------------------------------------------
# states


def check_truncation(spec: HilbertSpec, alpha: complex) -> None:
    a = abs(alpha)
    if a**2 + 5 * a > spec.n_max:
        raise TruncationError(
            f"amplitude |alpha|={a:.3f} needs n_max >= {a**2 + 5 * a:.1f}, "
            f"got {spec.n_max}"
        )


def coherent_state(spec: HilbertSpec, alpha: complex) -> np.ndarray:
    """Normalized coherent state vector on an oscillator-only spec.

    Guards against truncation loss: requires |alpha|^2 + 5|alpha| <= n_max,
    which keeps the missing Poisson tail below ~1e-6.
    """
    if spec.n_qubits != 0:
        raise SpecMismatchError("coherent_state expects an oscillator-only spec")
    check_truncation(spec, alpha)
    n = np.arange(spec.fock_dim)
    if alpha == 0:
        vec = np.zeros(spec.fock_dim, dtype=complex)
        vec[0] = 1.0
        return vec
    # log-domain amplitudes to stay stable for large |alpha|
    logmag = n * np.log(abs(alpha)) - 0.5 * np.array([lgamma(k + 1) for k in n])
    phase = np.angle(alpha) * n
    vec = np.exp(logmag - abs(alpha) ** 2 / 2) * np.exp(1j * phase)
    return vec / np.linalg.norm(vec)


def fock_state(spec: HilbertSpec, n: int) -> np.ndarray:
    if not 0 <= n < spec.fock_dim:
        raise ValueError(f"Fock index {n} outside truncation {spec.fock_dim}")
    vec = np.zeros(spec.fock_dim, dtype=complex)
    vec[n] = 1.0
    return vec


def thermal_state(spec: HilbertSpec, nbar: float) -> np.ndarray:
    """Gibbs diagonal with mean occupation ``nbar`` (renormalized on the
    truncated space); returns the fock_dim x fock_dim density matrix."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    n = np.arange(spec.fock_dim, dtype=float)
    if nbar == 0:
        p = np.zeros(spec.fock_dim)
        p[0] = 1.0
    else:
        logp = n * np.log(nbar / (nbar + 1.0))
        p = np.exp(logp - logp.max())
        p /= p.sum()
    return np.diag(p).astype(complex)


def pure_dm(spec: HilbertSpec, vec: np.ndarray) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex).ravel()
    if v.size != spec.dim:
        raise SpecMismatchError(f"vector length {v.size} != dim {spec.dim}")
    v = v / np.linalg.norm(v)
    return DensityMatrix(spec, np.outer(v, v.conj()))


# ---------------------------------------------------------------------------
# oscillator helpers used by the diagnostics layer


def displacement_operator(spec: HilbertSpec, alpha: complex) -> np.ndarray:
    """exp(alpha b^dag - alpha* b) on an oscillator-only spec, by matrix
    exponential (robust near the truncation edge)."""
    if spec.n_qubits != 0:
        raise SpecMismatchError("displacement_operator expects an oscillator-only spec")
    a, adag, _ = fock_ops(spec)
    return expm(alpha * adag.matrix - np.conj(alpha) * a.matrix)


def parity_operator(spec: HilbertSpec) -> np.ndarray:
    """(-1)^(b^dag b) on the oscillator factor."""
    signs = (-1.0) ** np.arange(spec.fock_dim)
    return _embed(spec, spec.n_qubits, np.diag(signs).astype(complex))


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """<alpha|beta> = exp(-(|a|^2+|b|^2)/2 + conj(a) b), exact closed form."""
    return complex(
        np.exp(-(abs(alpha) ** 2 + abs(beta) ** 2) / 2 + np.conj(alpha) * beta)
    )
