"""
Periodic unit-cell FDTD solver.

A 3-D Yee grid with periodic lateral boundaries, a PEC backplate at z = 0,
the substrate above it, the patch sheet at the substrate surface, air, and a
CFS-CPML absorber below a PEC lid at the top. A soft x-polarized plane-wave
source just below the absorber launches a differentiated-Gaussian pulse
towards the device. The transverse average of Ex at an observation plane is
recorded; a vacuum reference run on a 1x1 lateral grid with the same time step
gives the incident waveform, and the reflectance is the ratio of the two DFTs.

Field layout on an (nx, ny, nz) grid, index k counting cells from the bottom:
    Ex (nx, ny, nz+1) at (i+1/2, j,     k)
    Ey (nx, ny, nz+1) at (i,     j+1/2, k)
    Ez (nx, ny, nz)   at (i,     j,     k+1/2)
    Hx (nx, ny, nz)   at (i,     j+1/2, k+1/2)
    Hy (nx, ny, nz)   at (i+1/2, j,     k+1/2)
    Hz (nx, ny, nz+1) at (i+1/2, j+1/2, k)
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from apps.patterns.pattern import Pattern
from utils.error_handling import SolverNonConvergence

from .config import EPS0, ETA0, MU0, SolverConfig
from .spectrum import Spectrum

logger = logging.getLogger(__name__)

# CFS-CPML grading
PML_ORDER = 3
PML_ALPHA_MAX = 0.05

# Source pulse: differentiated Gaussian with its spectral peak at 7 GHz
PULSE_PEAK_HZ = 7.0e9
PULSE_DELAY = 5.0

ENERGY_CHECK_INTERVAL = 25


@dataclass(frozen=True)
class VerticalLayout:
    """Plane indices of a run along z."""
    nz: int
    k_patch: Optional[int]
    k_src: int
    k_obs: int
    pml_bottom: bool


@dataclass
class SimulationResult:
    spectrum: Spectrum
    steps: int
    residual_db: float
    wall_time: float


def device_layout(cfg: SolverConfig) -> VerticalLayout:
    nsub, nair, npml = cfg.substrate_cells, cfg.air_cells, cfg.absorber_cells
    k_obs = nsub + min(int(round(0.75 * nair)), nair - 4)
    return VerticalLayout(
        nz=nsub + nair + npml,
        k_patch=nsub,
        k_src=nsub + nair - 2,
        k_obs=k_obs,
        pml_bottom=False,
    )


def reference_layout(cfg: SolverConfig) -> VerticalLayout:
    """The device layout with the substrate turned to vacuum and an absorber below."""
    device = device_layout(cfg)
    npml = cfg.absorber_cells
    return VerticalLayout(
        nz=device.nz + npml,
        k_patch=None,
        k_src=device.k_src + npml,
        k_obs=device.k_obs + npml,
        pml_bottom=True,
    )


def source_waveform(t: np.ndarray, amplitude: float) -> np.ndarray:
    tau = 1.0 / (math.pi * math.sqrt(2.0) * PULSE_PEAK_HZ)
    x = (t - PULSE_DELAY * tau) / tau
    return -amplitude * x * np.exp(-x * x)


def source_duration() -> float:
    tau = 1.0 / (math.pi * math.sqrt(2.0) * PULSE_PEAK_HZ)
    return 2.0 * PULSE_DELAY * tau


def patch_masks(p: Pattern, cfg: SolverConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ex and Ey edges of the patch plane covered by copper.

    Pattern columns run along x and rows along y. An edge is metal when it lies
    inside the closed square of a copper patch.

    Returns:
        (metal_x, metal_y): boolean arrays of shape (nx, ny)
    """
    n, pc, pad = cfg.nx, cfg.pitch_cells, cfg.pad_cells
    metal_x = np.zeros((n, n), dtype=bool)
    metal_y = np.zeros((n, n), dtype=bool)
    for row, col in np.argwhere(p.cells == 1):
        x0 = pad + col * pc
        y0 = pad + row * pc
        metal_x[x0:x0 + pc, y0:y0 + pc + 1] = True
        metal_y[x0:x0 + pc + 1, y0:y0 + pc] = True
    return metal_x, metal_y


def _pml_profile(depth: np.ndarray, dz: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """b and c recursion coefficients for normalized depths (0 outside the layer)."""
    sigma_max = 0.8 * (PML_ORDER + 1) / (ETA0 * dz)
    inside = depth > 0
    d = np.clip(depth, 0.0, 1.0)
    sigma = np.where(inside, sigma_max * d ** PML_ORDER, 0.0)
    alpha = np.where(inside, PML_ALPHA_MAX * (1.0 - d), 0.0)
    b = np.exp(-(sigma + alpha) * dt / EPS0)
    denom = sigma + alpha
    c = np.divide(sigma * (b - 1.0), denom, out=np.zeros_like(sigma), where=denom > 0)
    return b, c


class YeeEngine:
    """
    Time stepper for one run.

    Args:
        cfg: Solver configuration (steps, materials, absorber)
        layout: Vertical plane indices
        lateral: Number of lateral cells per axis (1 for the reference run)
        metal: Optional (metal_x, metal_y) masks of the patch plane
        dt: Time step shared by device and reference runs
        substrate: Whether the cells below k_patch hold the substrate
    """

    def __init__(self, cfg: SolverConfig, layout: VerticalLayout, lateral: int,
                 metal: Optional[Tuple[np.ndarray, np.ndarray]], dt: float, substrate: bool):
        self.layout = layout
        self.dt = dt
        self.dx = self.dy = cfg.lateral_step
        self.dz = cfg.vertical_step
        nx = ny = lateral
        nz = layout.nz

        self.Ex = np.zeros((nx, ny, nz + 1))
        self.Ey = np.zeros((nx, ny, nz + 1))
        self.Ez = np.zeros((nx, ny, nz))
        self.Hx = np.zeros((nx, ny, nz))
        self.Hy = np.zeros((nx, ny, nz))
        self.Hz = np.zeros((nx, ny, nz + 1))

        # materials along z: node planes k and half planes k+1/2
        eps_node = np.ones(nz + 1)
        eps_half = np.ones(nz)
        sigma_node = np.zeros(nz + 1)
        sigma_half = np.zeros(nz)
        mu_node = np.ones(nz + 1)
        mu_half = np.ones(nz)
        if substrate:
            eps = complex(cfg.substrate_eps_r)
            # constant conductivity matching the loss at the band centre
            f_c = 0.5 * (cfg.band_lo + cfg.band_hi)
            sigma = 2.0 * math.pi * f_c * EPS0 * eps.imag
            ks = layout.k_patch
            eps_node[:ks] = eps.real
            eps_node[ks] = 0.5 * (eps.real + 1.0)
            eps_half[:ks] = eps.real
            sigma_node[:ks] = sigma
            sigma_node[ks] = 0.5 * sigma
            sigma_half[:ks] = sigma
            mu_node[:ks] = cfg.substrate_mu_r
            mu_node[ks] = 0.5 * (cfg.substrate_mu_r + 1.0)
            mu_half[:ks] = cfg.substrate_mu_r
        self._eps_node = eps_node[None, None, :]
        self._eps_half = eps_half[None, None, :]
        self._mu_node = mu_node[None, None, :]
        self._mu_half = mu_half[None, None, :]

        def lossy(eps_r, sig):
            loss = sig * dt / (2.0 * EPS0 * eps_r)
            return (1.0 - loss) / (1.0 + loss), (dt / (EPS0 * eps_r)) / (1.0 + loss)

        ca_node, cb_node = lossy(eps_node, sigma_node)
        ca_half, cb_half = lossy(eps_half, sigma_half)
        self.ca_e = ca_node[None, None, 1:-1]
        self.cb_e = cb_node[None, None, 1:-1]
        self.ca_z = ca_half[None, None, :]
        self.cb_z = cb_half[None, None, :]
        self.db_half = (dt / (MU0 * mu_half))[None, None, :]
        self.db_node = (dt / (MU0 * mu_node))[None, None, :]

        # CPML along z
        npml = cfg.absorber_cells
        k_nodes = np.arange(1, nz, dtype=np.float64)
        k_halves = np.arange(nz, dtype=np.float64) + 0.5
        top = nz - npml
        depth_e = (k_nodes - top) / npml
        depth_h = (k_halves - top) / npml
        if layout.pml_bottom:
            depth_e = np.maximum(depth_e, (npml - k_nodes) / npml)
            depth_h = np.maximum(depth_h, (npml - k_halves) / npml)
        be, ce = _pml_profile(depth_e, self.dz, dt)
        bh, ch = _pml_profile(depth_h, self.dz, dt)
        self.be, self.ce = be[None, None, :], ce[None, None, :]
        self.bh, self.ch = bh[None, None, :], ch[None, None, :]
        self.psi_exz = np.zeros((nx, ny, nz - 1))
        self.psi_eyz = np.zeros((nx, ny, nz - 1))
        self.psi_hxz = np.zeros((nx, ny, nz))
        self.psi_hyz = np.zeros((nx, ny, nz))

        if metal is not None and layout.k_patch is not None:
            self.keep_x = (~metal[0]).astype(np.float64)
            self.keep_y = (~metal[1]).astype(np.float64)
        else:
            self.keep_x = self.keep_y = None

    def update_h(self):
        Ex, Ey, Ez = self.Ex, self.Ey, self.Ez
        dx, dy, dz = self.dx, self.dy, self.dz

        dEz_dy = (np.roll(Ez, -1, axis=1) - Ez) / dy
        dEy_dz = (Ey[:, :, 1:] - Ey[:, :, :-1]) / dz
        self.psi_hxz *= self.bh
        self.psi_hxz += self.ch * dEy_dz
        self.Hx -= self.db_half * (dEz_dy - dEy_dz - self.psi_hxz)

        dEx_dz = (Ex[:, :, 1:] - Ex[:, :, :-1]) / dz
        dEz_dx = (np.roll(Ez, -1, axis=0) - Ez) / dx
        self.psi_hyz *= self.bh
        self.psi_hyz += self.ch * dEx_dz
        self.Hy -= self.db_half * (dEx_dz + self.psi_hyz - dEz_dx)

        dEy_dx = (np.roll(Ey, -1, axis=0) - Ey) / dx
        dEx_dy = (np.roll(Ex, -1, axis=1) - Ex) / dy
        self.Hz -= self.db_node * (dEy_dx - dEx_dy)

    def update_e(self, source: float):
        Hx, Hy, Hz = self.Hx, self.Hy, self.Hz
        dx, dy, dz = self.dx, self.dy, self.dz
        inner = slice(1, -1)

        dHz_dy = (Hz - np.roll(Hz, 1, axis=1)) / dy
        dHy_dz = (Hy[:, :, 1:] - Hy[:, :, :-1]) / dz
        self.psi_exz *= self.be
        self.psi_exz += self.ce * dHy_dz
        self.Ex[:, :, inner] *= self.ca_e
        self.Ex[:, :, inner] += self.cb_e * (dHz_dy[:, :, inner] - dHy_dz - self.psi_exz)

        dHx_dz = (Hx[:, :, 1:] - Hx[:, :, :-1]) / dz
        dHz_dx = (Hz - np.roll(Hz, 1, axis=0)) / dx
        self.psi_eyz *= self.be
        self.psi_eyz += self.ce * dHx_dz
        self.Ey[:, :, inner] *= self.ca_e
        self.Ey[:, :, inner] += self.cb_e * (dHx_dz + self.psi_eyz - dHz_dx[:, :, inner])

        dHy_dx = (Hy - np.roll(Hy, 1, axis=0)) / dx
        dHx_dy = (Hx - np.roll(Hx, 1, axis=1)) / dy
        self.Ez *= self.ca_z
        self.Ez += self.cb_z * (dHy_dx - dHx_dy)

        self.Ex[:, :, self.layout.k_src] += source

        if self.keep_x is not None:
            k = self.layout.k_patch
            self.Ex[:, :, k] *= self.keep_x
            self.Ey[:, :, k] *= self.keep_y

    def energy(self) -> float:
        """Electromagnetic energy in units of eps0 (E^2 + eta0^2 H^2 weighted by material)."""
        electric = (self._eps_node * (self.Ex ** 2 + self.Ey ** 2)).sum() + (self._eps_half * self.Ez ** 2).sum()
        magnetic = (self._mu_half * (self.Hx ** 2 + self.Hy ** 2)).sum() + (self._mu_node * self.Hz ** 2).sum()
        return float(electric + ETA0 ** 2 * magnetic)

    def observe(self) -> float:
        return float(self.Ex[:, :, self.layout.k_obs].mean())


def _run_until_decay(engine: YeeEngine, cfg: SolverConfig, drive: np.ndarray) -> Tuple[np.ndarray, float]:
    record = np.empty(cfg.max_steps)
    threshold = 10.0 ** (cfg.decay_db / 10.0)
    source_end = source_duration()
    peak = 0.0
    energy = 0.0

    for n in range(cfg.max_steps):
        engine.update_h()
        engine.update_e(drive[n])
        record[n] = engine.observe()

        if (n + 1) % ENERGY_CHECK_INTERVAL == 0:
            energy = engine.energy()
            peak = max(peak, energy)
            if (n + 1) * engine.dt > source_end and energy <= peak * threshold:
                return record[:n + 1], 10.0 * math.log10(energy / peak) if energy > 0 else -math.inf
        if (n + 1) % 2000 == 0:
            logger.debug(f"step {n + 1}/{cfg.max_steps}, energy {energy:.3e} (peak {peak:.3e})")

    energy = engine.energy()
    peak = max(peak, energy)
    residual_db = 10.0 * math.log10(energy / peak) if energy > 0 and peak > 0 else -math.inf
    raise SolverNonConvergence(residual_db, cfg.max_steps)


def _run_fixed(engine: YeeEngine, drive: np.ndarray, steps: int) -> np.ndarray:
    record = np.empty(steps)
    for n in range(steps):
        engine.update_h()
        engine.update_e(drive[n])
        record[n] = engine.observe()
    return record


def spectral_ratio(total: np.ndarray, incident: np.ndarray, dt: float, freqs: np.ndarray) -> np.ndarray:
    """|DFT(total - incident) / DFT(incident)|^2 at the given frequencies."""
    t = np.arange(1, len(total) + 1) * dt
    kernel = np.exp(-2j * np.pi * np.outer(freqs, t))
    reflected = kernel @ (total - incident)
    incoming = kernel @ incident
    return np.abs(reflected / incoming) ** 2


def run_simulation(p: Pattern, cfg: SolverConfig) -> SimulationResult:
    """
    Device and reference runs for one pattern.

    Args:
        p: Pattern on the patch plane
        cfg: Solver configuration

    Returns:
        SimulationResult: Spectrum plus step count, residual energy and wall time

    Raises:
        InvalidSolverConfig: If cfg violates its invariants
        SolverNonConvergence: If the device run does not decay within max_steps
    """
    cfg.validate()
    started = time.perf_counter()
    dt = cfg.time_step()
    drive = source_waveform(np.arange(cfg.max_steps) * dt, cfg.source_amplitude)

    device = YeeEngine(cfg, device_layout(cfg), cfg.nx, patch_masks(p, cfg), dt, substrate=True)
    total, residual_db = _run_until_decay(device, cfg, drive)
    steps = len(total)

    reference = YeeEngine(cfg, reference_layout(cfg), 1, None, dt, substrate=False)
    incident = _run_fixed(reference, drive, steps)

    freqs = cfg.freqs()
    values = spectral_ratio(total, incident, dt, freqs)
    wall = time.perf_counter() - started
    logger.info(
        f"simulated pattern (class {p.class_tag.value}, seed {p.seed}): "
        f"{steps} steps, residual {residual_db:.1f} dB, {wall:.1f} s"
    )
    return SimulationResult(Spectrum(freqs, values), steps, residual_db, wall)


def simulate_coPR(p: Pattern, cfg: SolverConfig) -> Spectrum:
    """Co-polarized reflectance of a pattern; see run_simulation."""
    return run_simulation(p, cfg).spectrum
