"""Time evolution of the defocusing cubic NLS spectral system.

Two integrators: a Strang split-step whose linear and nonlinear substeps are
both exactly norm-preserving (mass conservation is then a rounding-level
statement, not a tolerance), and a classical RK4 on the full spectral ODE as
an independent cross-check.  The cubic term is always re-analyzed on a grid
padded to the exact product bandwidth; the only discretization loss is the
truncation of frequencies above the basis cutoff.

Sign convention: the linear flow multiplies coefficient k by exp(-i nu_k t).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import transform
from .errors import InstabilityError
from .imethod import EnergyReport, IMultiplier, functionals
from .spectra import SpectralBasis, SpectralCoeffs

SPLIT_STEP_STRANG = "SplitStepStrang"
REFERENCE_RK4 = "ReferenceRK4"


@dataclass
class EvolveConfig:
    dt: float
    T: float
    scheme: str = SPLIT_STEP_STRANG
    record_every: int = 1
    mult: IMultiplier | None = None
    stability_factor: float = 0.5   # RK4 cap: dt <= factor / nu_max
    instability_ratio: float = 10.0

    def validate(self, basis: SpectralBasis):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T < self.dt:
            raise ValueError(f"need dt <= T, got dt={self.dt}, T={self.T}")
        if self.scheme not in (SPLIT_STEP_STRANG, REFERENCE_RK4):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.scheme == REFERENCE_RK4:
            nu_max = float(basis.eigenvalues.max())
            if nu_max > 0 and self.dt > self.stability_factor / nu_max:
                raise ValueError(
                    f"RK4 needs dt <= {self.stability_factor / nu_max:.3e} "
                    f"for nu_max={nu_max:.3e}, got dt={self.dt}"
                )


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    states: list[SpectralCoeffs] = field(default_factory=list)
    reports: list[EnergyReport] = field(default_factory=list)
    true_energies: list[float] = field(default_factory=list)

    def append(self, t: float, state: SpectralCoeffs, report: EnergyReport, energy: float):
        if self.times and t <= self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        self.times.append(t)
        self.states.append(state)
        self.reports.append(report)
        self.true_energies.append(energy)

    @property
    def final_state(self) -> SpectralCoeffs:
        return self.states[-1]


def linear_propagate(c: SpectralCoeffs, t: float) -> SpectralCoeffs:
    """Free flow: coefficient k picks up the phase exp(-i nu_k t)."""
    return SpectralCoeffs(c.basis, c.values * np.exp(-1j * c.basis.eigenvalues * t))


def _cubic_grid(basis: SpectralBasis):
    bw = transform.basis_bandwidth(basis)
    return transform.grid_for_degree(basis.manifold, basis.lam, max(4 * bw, 1))


def _record(traj, t, values, basis, mult):
    state = SpectralCoeffs(basis, values.copy())
    report = functionals(state, mult)
    energy = report.modified_energy if mult is None else functionals(state, None).modified_energy
    traj.append(t, state, report, energy)


def evolve(c0: SpectralCoeffs, cfg: EvolveConfig) -> Trajectory:
    """Integrate i u_t + Delta u = |u|^2 u from c0 over [0, T].

    Split-step: half linear phase, exact pointwise rotation
    u -> u exp(-i |u|^2 dt) on the padded grid, half linear phase.
    RK4: four-stage integration of dc_k/dt = -i nu_k c_k - i (|u|^2 u)_k.
    """
    basis = c0.basis
    cfg.validate(basis)
    grid = _cubic_grid(basis)
    eigs = basis.eigenvalues
    n_steps = int(round(cfg.T / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.T) > 1e-9 * max(1.0, cfg.T):
        n_steps = int(math.ceil(cfg.T / cfg.dt - 1e-12))
    dt = cfg.T / n_steps

    traj = Trajectory()
    values = c0.values.copy()
    _record(traj, 0.0, values, basis, cfg.mult)

    half = np.exp(-0.5j * eigs * dt)

    def nonlinear_substep(vals):
        fld = transform.synthesize(SpectralCoeffs(basis, vals), grid)
        fld.values *= np.exp(-1j * np.abs(fld.values) ** 2 * dt)
        return transform.analyze(fld, basis, input_bandwidth=3 * transform.basis_bandwidth(basis)).values

    def rk4_rhs(vals):
        fld = transform.synthesize(SpectralCoeffs(basis, vals), grid)
        cubic = np.abs(fld.values) ** 2 * fld.values
        ck = transform.analyze(
            transform.GridField(grid, cubic), basis,
            input_bandwidth=3 * transform.basis_bandwidth(basis),
        ).values
        return -1j * (eigs * vals + ck)

    for step in range(1, n_steps + 1):
        norm_before = float(np.linalg.norm(values))
        if cfg.scheme == SPLIT_STEP_STRANG:
            values = half * values
            values = nonlinear_substep(values)
            values = half * values
        else:
            k1 = rk4_rhs(values)
            k2 = rk4_rhs(values + 0.5 * dt * k1)
            k3 = rk4_rhs(values + 0.5 * dt * k2)
            k4 = rk4_rhs(values + dt * k3)
            values = values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        norm_after = float(np.linalg.norm(values))
        if norm_after > cfg.instability_ratio * max(norm_before, 1e-300):
            raise InstabilityError(
                f"norm grew {norm_after / max(norm_before, 1e-300):.2e}x in one step "
                f"(step {step}, t={step * dt:.6g})",
                step=step,
                time=step * dt,
                norm_before=norm_before,
                norm_after=norm_after,
            )
        if step % cfg.record_every == 0 or step == n_steps:
            _record(traj, step * dt, values, basis, cfg.mult)
    return traj


def modified_energy_series(traj: Trajectory, mult: IMultiplier) -> tuple[list[tuple[float, float]], float]:
    """Per-time modified energy and the sup of its increment from t=0."""
    series = []
    for t, state in zip(traj.times, traj.states):
        series.append((t, functionals(state, mult).modified_energy))
    base = series[0][1]
    sup_increment = max(abs(v - base) for _, v in series)
    return series, sup_increment


def trajectory_csv(traj: Trajectory) -> str:
    """Columns: t, mass, energy, modified_energy, h_s_norm (17 digits)."""
    lines = ["t,mass,energy,modified_energy,h_s_norm"]
    for t, rep, en in zip(traj.times, traj.reports, traj.true_energies):
        lines.append(
            ",".join(
                f"{v:.17g}" for v in (t, rep.mass, en, rep.modified_energy, rep.h_s_norm)
            )
        )
    return "\n".join(lines) + "\n"


def run_manifest(cfg: EvolveConfig, basis: SpectralBasis, seed=None) -> str:
    doc = {
        "scheme": cfg.scheme,
        "dt": cfg.dt,
        "T": cfg.T,
        "N": None if cfg.mult is None else cfg.mult.N,
        "s": None if cfg.mult is None else cfg.mult.s,
        "lam": basis.lam,
        "seed": seed,
        "basis": basis.descriptor(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)
