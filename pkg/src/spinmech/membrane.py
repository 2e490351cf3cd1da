"""Map membrane and magnet geometry to simulation parameters.

This is the only module that works in SI units. It turns a tensioned
circular drum plus a magnetic-tip field profile into the quantities the
dynamics layer consumes: mode frequency, effective mass, zero-point
amplitude, and per-site qubit splitting and spin-motion coupling.

The drum model is the fundamental mode of a clamped circular membrane
under tension: omega_m = (alpha01/R) sqrt(tension/density) with mode
shape J0(alpha01 r / R). The default tension is a calibration knob fixed
so that a 1.5 um radius with the default 2.7e6 T/m peak gradient gives a
coupling-to-frequency ratio g0/omega_m = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0, j1, jn_zeros

from .constants import G_E, HBAR, MU_B
from .errors import InfeasibleSiteError

__all__ = [
    "MembraneConfig",
    "FieldProfile",
    "MechanicalMode",
    "QubitSite",
    "fundamental_mode",
    "gaussian_tip_profile",
    "site_parameters",
    "choose_cooling_site",
    "ALPHA_01",
    "MODE_MASS_FRACTION",
    "DEFAULT_TENSION",
    "DEFAULT_AREAL_DENSITY",
    "DEFAULT_PEAK_GRADIENT",
]

ALPHA_01 = float(jn_zeros(0, 1)[0])           # first zero of J0
MODE_MASS_FRACTION = float(j1(ALPHA_01) ** 2)  # m_eff / (rho2d pi R^2) ~ 0.2695

DEFAULT_AREAL_DENSITY = 7.5e-7   # kg/m^2, monolayer
DEFAULT_PEAK_GRADIENT = 2.7e6    # T/m  (= 270 G/nm)
# calibrated so that R = 1.5 um at the default gradient gives g0/omega_m = 2
DEFAULT_TENSION = 4.762868735667992e-07  # N/m
DEFAULT_Q = 1e5
DEFAULT_TEMPERATURE = 0.014      # K


@dataclass(frozen=True)
class MembraneConfig:
    radius: float            # m
    areal_density: float = DEFAULT_AREAL_DENSITY  # kg/m^2
    tension: float = DEFAULT_TENSION              # N/m
    quality_factor: float = DEFAULT_Q
    temperature: float = DEFAULT_TEMPERATURE      # K

    def __post_init__(self):
        for name in ("radius", "areal_density", "tension", "quality_factor",
                     "temperature"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True, eq=False)
class MechanicalMode:
    omega_m: float                                  # rad/s
    m_eff: float                                    # kg
    z_zp: float                                     # m
    radius: float                                   # m
    psi: Callable[[float, float], float]            # mode profile, psi(0,.)=1


@dataclass(frozen=True, eq=False)
class FieldProfile:
    """Out-of-plane field and gradient sampled on the membrane plane.

    ``b_perp(r, theta)`` in tesla; ``db_dz(r, theta)`` in T/m. The sweet
    spot must be the gradient maximum.
    """

    b_perp: Callable[[float, float], float]
    db_dz: Callable[[float, float], float]
    sweet_spot: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class QubitSite:
    position: tuple[float, float]   # (r, theta)
    delta: float                    # splitting, rad/s
    g: float                        # spin-motion coupling, rad/s
    role: str = "central"


def fundamental_mode(cfg: MembraneConfig) -> MechanicalMode:
    """Fundamental drum mode of a clamped, tensioned circular membrane."""
    omega_m = (ALPHA_01 / cfg.radius) * math.sqrt(cfg.tension / cfg.areal_density)
    m_eff = cfg.areal_density * math.pi * cfg.radius**2 * MODE_MASS_FRACTION
    z_zp = math.sqrt(HBAR / (2.0 * m_eff * omega_m))
    radius = cfg.radius

    def psi(r: float, theta: float) -> float:
        if r > radius:
            raise ValueError(f"r = {r} outside membrane radius {radius}")
        return float(j0(ALPHA_01 * r / radius))

    return MechanicalMode(omega_m=omega_m, m_eff=m_eff, z_zp=z_zp,
                          radius=radius, psi=psi)


def gaussian_tip_profile(
    radius: float,
    peak_gradient: float = DEFAULT_PEAK_GRADIENT,
    bias_splitting: float = 2 * math.pi * 2.0e9,
    width: float | None = None,
    sweet_spot: tuple[float, float] = (0.0, 0.0),
) -> FieldProfile:
    """Magnetic-tip model: Gaussian gradient bump over the sweet spot.

    Both the field and its gradient fall off with the same Gaussian of
    ``width`` (default R/4), so the splitting varies across the membrane
    and the gradient peaks at the sweet spot. ``bias_splitting`` (rad/s)
    sets the splitting right at the sweet spot.
    """
    w = radius / 4.0 if width is None else width
    r0, th0 = sweet_spot
    b0 = bias_splitting * HBAR / (MU_B * G_E)

    def _dist2(r, theta):
        return r**2 + r0**2 - 2.0 * r * r0 * math.cos(theta - th0)

    def b_perp(r, theta):
        return b0 * math.exp(-_dist2(r, theta) / (2.0 * w**2))

    def db_dz(r, theta):
        return peak_gradient * math.exp(-_dist2(r, theta) / (2.0 * w**2))

    return FieldProfile(b_perp=b_perp, db_dz=db_dz, sweet_spot=(r0, th0))


def site_parameters(
    mode: MechanicalMode,
    field: FieldProfile,
    position: tuple[float, float],
    role: str = "central",
) -> QubitSite:
    """Splitting and coupling of a defect at ``position`` (angular units).

    delta = mu_B g_e B_perp / hbar and g = mu_B g_e dB/dz psi z_zp / hbar.
    """
    r, theta = position
    if r < 0 or r > mode.radius:
        raise ValueError(f"position r = {r} outside disc of radius {mode.radius}")
    delta = MU_B * G_E * field.b_perp(r, theta) / HBAR
    g = MU_B * G_E * field.db_dz(r, theta) * mode.psi(r, theta) * mode.z_zp / HBAR
    return QubitSite(position=(r, theta), delta=delta, g=g, role=role)


def choose_cooling_site(
    mode: MechanicalMode,
    field: FieldProfile,
    gamma_relax: float,
    gamma_m: float,
    n_bar: float,
) -> tuple[QubitSite, float]:
    """Place the cooling qubit on the ray through the sweet spot.

    Policy: pick the radius where g equals gamma_relax / 2, found by a
    1-D root search outward from the sweet spot (or the sweet spot itself
    if the coupling never reaches that level). Returns the site and the
    margin g_c^2 / (gamma_relax * gamma_m * n_bar); a margin <= 1 means
    the coupling is too weak to beat the thermal decoherence flux and the
    placement is rejected.
    """
    if gamma_relax <= 0:
        raise InfeasibleSiteError(
            "g_c < Gamma cannot hold: qubit relaxation rate Gamma is zero"
        )
    r0, th0 = field.sweet_spot
    target = gamma_relax / 2.0

    def g_at(r):
        return site_parameters(mode, field, (r, th0)).g

    g_peak = g_at(r0)
    if g_peak <= target:
        r_c = r0
    else:
        # g(r) falls to zero at the clamped edge, so a crossing exists
        r_c = brentq(lambda r: g_at(r) - target, r0, mode.radius, xtol=1e-18)
    site = site_parameters(mode, field, (r_c, th0), role="cooling")
    denom = gamma_relax * gamma_m * n_bar
    margin = math.inf if denom == 0 else site.g**2 / denom
    if site.g >= gamma_relax:
        raise InfeasibleSiteError(
            f"g_c = {site.g:.3e} does not satisfy g_c < Gamma = {gamma_relax:.3e}"
        )
    if margin <= 1.0:
        raise InfeasibleSiteError(
            f"g_c^2 = {site.g**2:.3e} does not dominate Gamma*gamma_m*Nbar = "
            f"{denom:.3e} (margin {margin:.2f})"
        )
    return site, margin
