"""State diagnostics: phonon number, fidelity, Wigner maps, squeezing.

Quadratures follow X(theta) = b e^{i theta} + b^dag e^{-i theta}, so the
vacuum variance is 1 and squeezing in dB is measured against that
reference. Phase space uses (x, p) = (X(0), X(pi/2)); a coherent state
|alpha> sits at (2 Re alpha, 2 Im alpha) and the Wigner function is
normalized to integrate to 1 over dx dp.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import (
    DensityMatrix,
    HilbertSpec,
    Operator,
    displacement_operator,
    expectation,
    fock_ops,
    parity_operator,
)

__all__ = [
    "phonon_number",
    "fidelity",
    "WignerGrid",
    "wigner",
    "write_wigner_csv",
    "quadrature_variance",
    "min_quadrature_variance",
    "squeezing_db",
]

WIGNER_CONVENTION = (
    "x = X(0) = <b + b^dag>, p = X(pi/2); integral of W over dx dp = 1; "
    "coherent state alpha peaks at (2 Re alpha, 2 Im alpha)"
)


def phonon_number(rho: DensityMatrix) -> float:
    """Mean occupation tr(b^dag b rho)."""
    _, _, num = fock_ops(rho.spec)
    return float(np.real(expectation(rho, num)))


def fidelity(rho: DensityMatrix, target: np.ndarray) -> float:
    """<psi| rho |psi> against a normalized pure target state."""
    v = np.asarray(target, dtype=complex).ravel()
    if v.size != rho.spec.dim:
        raise ValueError(f"target length {v.size} != state dim {rho.spec.dim}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"target norm {norm} deviates from 1 by more than 1e-8")
    return float(np.real(v.conj() @ rho.matrix @ v))


@dataclass
class WignerGrid:
    """Wigner function sampled on a rectangular (x, p) grid.

    ``values[i, j]`` is W(p_i, x_j). ``integral`` is the discrete
    normalization check; ``coverage_warning`` flags grids too small for
    the state's support.
    """

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    integral: float
    coverage_warning: bool = False
    metadata: dict = field(default_factory=dict)


def wigner(
    rho: DensityMatrix,
    half_width: float | None = None,
    resolution: int = 81,
) -> WignerGrid:
    """Displaced-parity Wigner map of an oscillator-only state.

    W(alpha) = (2/pi) tr[rho D(alpha) Pi D(-alpha)] evaluated pointwise
    with displacement operators built by matrix exponential, then scaled
    to the (x, p) = (X(0), X(pi/2)) axes where it integrates to 1. The
    default square grid spans +-(2 a_max + 3) with a_max estimated from
    the mean occupation.
    """
    if rho.spec.n_qubits != 0:
        raise ValueError("wigner expects an oscillator-only state; trace out spins")
    if half_width is None:
        amax = math.sqrt(phonon_number(rho) + 1.0)
        half_width = 2.0 * amax + 3.0
    x = np.linspace(-half_width, half_width, resolution)
    p = np.linspace(-half_width, half_width, resolution)
    pi_op = parity_operator(rho.spec)
    vals = np.empty((resolution, resolution))
    for i, pv in enumerate(p):
        for j, xv in enumerate(x):
            alpha = (xv + 1j * pv) / 2.0
            d_op = displacement_operator(rho.spec, alpha)
            # (1/2pi) = (2/pi) x Jacobian 1/4 of alpha -> (x, p)
            vals[i, j] = np.real(
                np.trace(rho.matrix @ d_op @ pi_op @ d_op.conj().T)
            ) / (2.0 * np.pi)
    cell = (x[1] - x[0]) * (p[1] - p[0])
    integral = float(vals.sum() * cell)
    warn = abs(integral - 1.0) > 2e-2
    return WignerGrid(
        x=x, p=p, values=vals, integral=integral, coverage_warning=warn,
        metadata={"convention": WIGNER_CONVENTION, "resolution": resolution,
                  "half_width": half_width},
    )


def write_wigner_csv(grid: WignerGrid, path: str) -> None:
    """CSV with the x grid as header and one row per p value; a JSON
    sidecar (same path + '.meta.json') records the convention."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p_x"] + [f"{v:.12g}" for v in grid.x])
        for pv, row in zip(grid.p, grid.values):
            writer.writerow([f"{pv:.12g}"] + [f"{v:.12g}" for v in row])
    meta = dict(grid.metadata)
    meta.update({"integral": grid.integral, "coverage_warning": grid.coverage_warning})
    with open(path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _centered_moments(rho: DensityMatrix) -> tuple[float, complex]:
    a, adag, num = fock_ops(rho.spec)
    m1 = expectation(rho, a)
    n = float(np.real(expectation(rho, num)))
    s = complex(np.trace(a.matrix @ a.matrix @ rho.matrix))
    nd = n - abs(m1) ** 2
    sd = s - m1**2
    return nd, sd


def quadrature_variance(rho: DensityMatrix, theta: float) -> float:
    """Var X(theta) with X(theta) = b e^{i theta} + b^dag e^{-i theta}."""
    nd, sd = _centered_moments(rho)
    return float(1.0 + 2.0 * nd + 2.0 * np.real(np.exp(2j * theta) * sd))


def min_quadrature_variance(rho: DensityMatrix) -> tuple[float, float]:
    """(theta*, variance) minimizing Var X(theta), from the second-moment
    matrix: the minimum is 1 + 2<db^dag db> - 2|<db^2>|."""
    nd, sd = _centered_moments(rho)
    if abs(sd) == 0.0:
        return 0.0, float(1.0 + 2.0 * nd)
    theta = float((np.pi - np.angle(sd)) / 2.0)
    return theta, float(1.0 + 2.0 * nd - 2.0 * abs(sd))


def squeezing_db(variance: float) -> float:
    """Variance in decibel relative to the vacuum value 1."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    return float(10.0 * math.log10(variance))
