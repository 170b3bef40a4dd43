"""
Closed-form reflectance of a PEC-backed dielectric slab at normal incidence.

This is the physics oracle for the empty pattern. The configured permittivity
uses the e^{-iwt} convention (positive imaginary part = loss); the
transmission-line formulas below use e^{jwt}, hence the conjugate.
"""
import numpy as np

from .config import C0, ETA0, SolverConfig


def analytic_slab_coPR(f, cfg: SolverConfig):
    """
    |Gamma|^2 of a grounded slab of the configured substrate.

    Args:
        f: Frequency in Hz, scalar or array, > 0
        cfg: Solver configuration (substrate permittivity, permeability, thickness)

    Returns:
        Reflectance in [0, 1], same shape as f
    """
    f = np.asarray(f, dtype=np.float64)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    eps = np.conj(complex(cfg.substrate_eps_r))
    mu = cfg.substrate_mu_r
    z_d = ETA0 * np.sqrt(mu / eps)
    beta = 2.0 * np.pi * f * np.sqrt(mu * eps) / C0
    z_in = 1j * z_d * np.tan(beta * cfg.substrate_thickness)
    gamma = (z_in - ETA0) / (z_in + ETA0)
    result = np.abs(gamma) ** 2
    return float(result) if result.ndim == 0 else result
