"""Time evolution, steady states, pulses and measurements.

The master equation is integrated as a vectorized linear system with an
adaptive embedded Runge-Kutta pair (DOP853), re-symmetrizing the state
after every accepted step. Steady states come from a direct sparse
factorization of the generator with one row replaced by the trace
constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import DOP853

from .errors import PostselectionError, SpecMismatchError, SteadyStateError, StiffnessError
from .hilbert import (
    DensityMatrix,
    HilbertSpec,
    Operator,
    fock_state,
    qubit_ops,
    replace_oscillator_state,
    replace_qubit_state,
    thermal_state,
)
from .model import Liouvillian, unvec, vec

__all__ = [
    "evolve",
    "evolve_sampled",
    "steady_state",
    "apply_pulse",
    "postselect",
    "FreeEvolve",
    "Pulse",
    "Measure",
    "InitializeSpin",
    "InitializeOscillator",
    "ProtocolStep",
    "RunResult",
    "run_protocol",
    "default_initial_state",
]

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
ZERO_PROB = 1e-12


def _symmetrized(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


def evolve_sampled(
    rho0: DensityMatrix,
    L: Liouvillian,
    times: np.ndarray,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> list[DensityMatrix]:
    """States at the (sorted, non-negative) sample ``times``.

    Uses dense output inside each accepted step; the state is
    re-symmetrized after every step, so Hermiticity never drifts.
    """
    if rho0.spec != L.spec:
        raise SpecMismatchError("state and generator live on different spaces")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("sample times must be sorted and non-negative")
    d = L.spec.dim
    y = vec(L.to_internal(rho0.matrix))
    out: list[DensityMatrix] = []
    idx = 0
    while idx < len(times) and times[idx] == 0.0:
        out.append(rho0)
        idx += 1
    if idx == len(times):
        return out
    t_end = float(times[-1])
    mat = L.matrix

    def rhs(t, yv):
        return mat @ yv

    solver = DOP853(rhs, 0.0, y, t_end, rtol=rtol, atol=atol)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StiffnessError(
                f"integrator step failed at t = {solver.t:.3g}: {msg}; "
                "try a smaller Hilbert space or looser tolerances"
            )
        while idx < len(times) and times[idx] <= solver.t + 1e-15:
            ti = min(float(times[idx]), solver.t)
            yi = solver.dense_output()(ti)
            rho_i = _symmetrized(unvec(yi, d))
            out.append(DensityMatrix(L.spec, L.to_computational(rho_i)))
            idx += 1
        # re-symmetrize the running state between steps
        solver.y = vec(_symmetrized(unvec(solver.y, d)))
    if idx < len(times):
        raise StiffnessError("integration ended before reaching the final time")
    return out


def evolve(
    rho0: DensityMatrix,
    L: Liouvillian,
    t: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> DensityMatrix:
    """rho(t) under the generator ``L``; t = 0 returns the input."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return rho0
    return evolve_sampled(rho0, L, np.array([t]), rtol=rtol, atol=atol)[-1]


def steady_state(L: Liouvillian, residual_tol: float = 1e-10) -> DensityMatrix:
    """Null vector of ``L`` normalized to unit trace.

    One row of the sparse generator is replaced by the trace functional
    and the system is solved by direct LU factorization. Raises
    SteadyStateError when the factorization fails (degenerate kernel) or
    the residual ||L rho|| exceeds ``residual_tol * ||L||`` (max-abs
    norms).
    """
    d = L.spec.dim
    n = d * d
    mat = L.matrix.tolil(copy=True)
    diag_idx = np.arange(d) * (d + 1)
    row = np.zeros(n)
    row[diag_idx] = 1.0
    mat[0, :] = row
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(mat.tocsc())
        x = lu.solve(rhs)
    except RuntimeError as exc:
        raise SteadyStateError(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SteadyStateError("singular system: generator kernel is degenerate")
    rho = _symmetrized(unvec(x, d))
    tr = np.trace(rho).real
    if not np.isfinite(tr) or abs(tr) < 1e-10:
        raise SteadyStateError("steady-state candidate has vanishing trace")
    rho = rho / tr
    resid = np.max(np.abs(L.matrix @ vec(rho)))
    scale = np.max(np.abs(L.matrix.data)) if L.matrix.nnz else 1.0
    if resid > residual_tol * scale:
        raise SteadyStateError(
            f"residual {resid:.3e} exceeds {residual_tol:.1e} * ||L|| = "
            f"{residual_tol * scale:.3e}; kernel may be degenerate"
        )
    return DensityMatrix(L.spec, L.to_computational(rho))


_AXES = {"x": 0, "y": 1, "z": 2}


def apply_pulse(rho: DensityMatrix, qubit: int, axis: str, angle: float) -> DensityMatrix:
    """Instantaneous rotation exp(-i angle sigma_axis / 2) on one qubit."""
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}")
    paulis = qubit_ops(rho.spec, qubit)[:3]
    sig = paulis[_AXES[axis]].matrix
    dim = rho.spec.dim
    u = np.cos(angle / 2.0) * np.eye(dim) - 1j * np.sin(angle / 2.0) * sig
    return DensityMatrix(rho.spec, u @ rho.matrix @ u.conj().T)


def postselect(rho: DensityMatrix, qubit: int, outcome: str) -> tuple[DensityMatrix, float]:
    """Project qubit ``qubit`` onto ``outcome`` ('up' or 'down').

    Returns the renormalized conditional state and the branch
    probability; branches below 1e-12 raise PostselectionError.
    """
    if outcome not in ("up", "down"):
        raise ValueError("outcome must be 'up' or 'down'")
    _, _, sz, _, _ = qubit_ops(rho.spec, qubit)
    sign = 1.0 if outcome == "up" else -1.0
    proj = (np.eye(rho.spec.dim) + sign * sz.matrix) / 2.0
    branch = proj @ rho.matrix @ proj
    p = float(np.trace(branch).real)
    if p < ZERO_PROB:
        raise PostselectionError(
            f"outcome '{outcome}' on qubit {qubit} has probability {p:.3e}"
        )
    return DensityMatrix(rho.spec, branch / p), p


# ---------------------------------------------------------------------------
# protocol steps


@dataclass(frozen=True)
class FreeEvolve:
    duration: float                 # in the generator's time units
    generator: Liouvillian

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")


@dataclass(frozen=True)
class Pulse:
    qubit: int
    axis: str
    angle: float

    def __post_init__(self):
        if not np.isfinite(self.angle):
            raise ValueError("pulse angle must be finite")


@dataclass(frozen=True)
class Measure:
    qubit: int
    outcome: str


@dataclass(frozen=True)
class InitializeSpin:
    qubit: int
    state: str                      # 'up' or 'down'


@dataclass(frozen=True)
class InitializeOscillator:
    kind: str                       # 'ground' | 'thermal' | 'steady'
    nbar: float = 0.0
    generator: Liouvillian | None = None


ProtocolStep = Union[FreeEvolve, Pulse, Measure, InitializeSpin, InitializeOscillator]

_SPIN_DM = {
    "up": np.array([[1, 0], [0, 0]], dtype=complex),
    "down": np.array([[0, 0], [0, 1]], dtype=complex),
}


@dataclass
class RunResult:
    """Outcome of a protocol run: final state, accumulated postselection
    probability, per-step observable records and run metadata."""

    final_state: DensityMatrix
    postselect_probability: float
    traces: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def default_initial_state(spec: HilbertSpec) -> DensityMatrix:
    """All qubits polarized |down>, oscillator in its ground state."""
    m = np.array([[1.0 + 0j]])
    for _ in range(spec.n_qubits):
        m = np.kron(m, _SPIN_DM["down"])
    osc = np.outer(fock_state(HilbertSpec(0, spec.fock_dim), 0),
                   fock_state(HilbertSpec(0, spec.fock_dim), 0).conj())
    return DensityMatrix(spec, np.kron(m, osc))


def run_protocol(
    steps: list[ProtocolStep],
    spec: HilbertSpec,
    rho0: DensityMatrix | None = None,
    observables: dict[str, Operator] | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> RunResult:
    """Execute ``steps`` sequentially, multiplying postselection
    probabilities and recording the requested observables after each
    step (times are cumulative evolution durations)."""
    rho = default_initial_state(spec) if rho0 is None else rho0
    if rho.spec != spec:
        raise SpecMismatchError("initial state spec mismatch")
    observables = observables or {}
    traces: dict[str, list[tuple[float, float]]] = {k: [] for k in observables}
    prob = 1.0
    t_now = 0.0
    for step in steps:
        if isinstance(step, FreeEvolve):
            rho = evolve(rho, step.generator, step.duration, rtol=rtol, atol=atol)
            t_now += step.duration
        elif isinstance(step, Pulse):
            rho = apply_pulse(rho, step.qubit, step.axis, step.angle)
        elif isinstance(step, Measure):
            rho, p = postselect(rho, step.qubit, step.outcome)
            prob *= p
        elif isinstance(step, InitializeSpin):
            rho = replace_qubit_state(rho, step.qubit, _SPIN_DM[step.state])
        elif isinstance(step, InitializeOscillator):
            osc_spec = HilbertSpec(0, spec.fock_dim)
            if step.kind == "ground":
                osc = thermal_state(osc_spec, 0.0)
            elif step.kind == "thermal":
                osc = thermal_state(osc_spec, step.nbar)
            elif step.kind == "steady":
                if step.generator is None:
                    raise ValueError("steady initialization needs a generator")
                from .hilbert import partial_trace_to_oscillator

                osc = partial_trace_to_oscillator(
                    steady_state(step.generator)
                ).matrix
            else:
                raise ValueError(f"unknown oscillator initialization {step.kind!r}")
            rho = replace_oscillator_state(rho, osc)
        else:
            raise TypeError(f"unknown protocol step {step!r}")
        for name, op in observables.items():
            traces[name].append((t_now, np.real(np.trace(op.matrix @ rho.matrix))))
    return RunResult(final_state=rho, postselect_probability=prob, traces=traces)
