"""End-to-end drivers for the manufactured-solution and crack experiments."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .adaptivity import indicator, inherit_degrees, mark, transfer
from .assembly import BoundaryData, DgParams
from .constitutive import ModelParams, exact_value, exact_value_grad, source_f
from .dgspace import make_space
from .mesh import build_uniform, refine
from .postproc import (ConvergenceRecord, eoc, error_energy, error_l2, export_csv,
                       export_mesh_vtk, export_vtk, relative_percent, sample_line)
from .solve import picard

log = logging.getLogger(__name__)

EXPERIMENTS = ("converge-h", "converge-p", "converge-hp", "crack")
CRACK = ((0.5, 0.5), (1.0, 0.5))
LIGAMENT = ((0.0, 0.5), (0.5, 0.5))
U_L2 = 1.0 / 168.0


@dataclass
class RunConfig:
    experiment: str = "converge-h"
    alpha: float = 1.0
    beta: float = 1.0
    mu: float = 0.5
    sigma: float = 100.0
    gamma: float = 1.0
    degree: int = 1
    degrees: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    levels: list[int] = field(default_factory=lambda: [4, 8, 16, 32, 64])
    mesh_n: int = 30
    hp_ladder: list[list[int]] = field(default_factory=lambda: [[5, 1], [10, 2], [15, 3], [20, 4]])
    tol: float = 1e-10
    max_picard: int = 100
    relaxation: float = 1.0
    anderson: int = 0
    theta: float = 0.2
    depth: int = 4
    betas: list[float] = field(default_factory=lambda: [0.0, 0.01, 0.1, 1.0, 10.0, 100.0])
    sample_count: int = 100
    boundary_flux: bool = True
    linear_solver: str = "direct"
    out: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        ModelParams(self.alpha, self.beta, self.mu)
        DgParams(self.sigma, self.gamma)
        if self.experiment == "converge-h" and not self.levels:
            raise ValueError("levels must be non-empty")
        if self.experiment == "converge-p" and not self.degrees:
            raise ValueError("degrees must be non-empty")
        if self.experiment == "converge-hp" and not self.hp_ladder:
            raise ValueError("hp_ladder must be non-empty")
        if self.experiment == "crack" and self.mesh_n % 2:
            raise ValueError("crack experiment needs an even mesh_n")

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.alpha, self.beta, self.mu)

    @property
    def dg(self) -> DgParams:
        return DgParams(self.sigma, self.gamma, boundary_flux=self.boundary_flux)

    @classmethod
    def defaults_for(cls, experiment: str, **overrides) -> "RunConfig":
        base: dict[str, Any] = {"experiment": experiment}
        if experiment == "crack":
            base.update(alpha=2.0, beta=2.0, mu=1.0, sigma=1e4, degree=1, tol=1e-8,
                        max_picard=200, anderson=5)
        base.update(overrides)
        names = {f.name for f in fields(cls)}
        unknown = set(base) - names
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**base)


def manufactured_data(p: ModelParams) -> BoundaryData:
    return BoundaryData(g=lambda x: np.zeros(x.shape[:-1]), f=lambda x: source_f(x, p))


def crack_data() -> BoundaryData:
    one_minus_x = lambda x: 1.0 - x[..., 0]  # noqa: E731
    return BoundaryData(g={
        "left": lambda x: np.ones(x.shape[:-1]),
        "right": lambda x: np.zeros(x.shape[:-1]),
        "bottom": one_minus_x,
        "top": one_minus_x,
        "crack": lambda x: np.zeros(x.shape[:-1]),
    })


@dataclass
class LevelResult:
    n: int
    degree: int
    ndof: int
    l2: float
    energy: float
    iterations: int
    converged: bool
    seconds: float


def solve_manufactured(cfg: RunConfig, n: int, degree: int) -> LevelResult:
    t0 = time.perf_counter()
    p, dg = cfg.model, cfg.dg
    space = make_space(build_uniform(n), degree)
    rep = picard(space, p, dg, manufactured_data(p), cfg.tol, cfg.max_picard,
                 relaxation=cfg.relaxation, solver=cfg.linear_solver,
                 anderson=cfg.anderson)
    if not rep.converged:
        log.warning("Picard did not converge on %dx%d, degree %d", n, n, degree)
    u = rep.solution
    l2 = error_l2(u, exact_value, dg)
    en = error_energy(u, exact_value_grad, dg)
    return LevelResult(n, degree, space.total_dofs, l2, en, rep.iterations, rep.converged,
                       time.perf_counter() - t0)


def exact_energy_norm(cfg: RunConfig, n: int, degree: int) -> float:
    # u vanishes on the boundary and is continuous: the norm is |u|_H1
    from .assembly import energy_norm
    space = make_space(build_uniform(n), degree)
    neg = lambda x: tuple(-a for a in exact_value_grad(x))  # noqa: E731
    return energy_norm(space, cfg.dg, None, neg, extra_degree=4)


def build_records(levels: list[LevelResult], hs: list[float], labels: list[str],
                  u_energy: float, with_eoc: bool = True) -> list[ConvergenceRecord]:
    l2 = [r.l2 for r in levels]
    en = [r.energy for r in levels]
    e_l2 = [None] + eoc(l2, hs) if with_eoc and len(levels) > 1 else [None] * len(levels)
    e_en = [None] + eoc(en, hs) if with_eoc and len(levels) > 1 else [None] * len(levels)
    out = []
    for k, r in enumerate(levels):
        out.append(ConvergenceRecord(
            label=labels[k], h=hs[k], degree=r.degree, ndof=r.ndof,
            l2_error=r.l2, eoc_l2=e_l2[k], energy_error=r.energy, eoc_energy=e_en[k],
            rel_l2_percent=relative_percent(r.l2, U_L2),
            rel_energy_percent=relative_percent(r.energy, u_energy),
            picard_iterations=r.iterations, converged=r.converged))
    return out


def _write_manifest(cfg: RunConfig, out: Path, name: str, extra: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    from . import kernels
    doc = {"config": asdict(cfg), "kernel_backend": kernels.BACKEND, **extra}
    path = out / f"{name}_manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")
    return path


def _level_info(levels: list[LevelResult]) -> list[dict]:
    return [asdict(r) for r in levels]


def run_converge_h(cfg: RunConfig, write: bool = True) -> list[ConvergenceRecord]:
    levels = [solve_manufactured(cfg, n, cfg.degree) for n in cfg.levels]
    u_en = exact_energy_norm(cfg, max(cfg.levels), cfg.degree)
    recs = build_records(levels, [1.0 / n for n in cfg.levels],
                         [f"{n}x{n}" for n in cfg.levels], u_en)
    if write:
        out = Path(cfg.out)
        export_csv(recs, out / f"converge_h_p{cfg.degree}.csv")
        _write_manifest(cfg, out, f"converge_h_p{cfg.degree}", {"levels": _level_info(levels)})
    return recs


def run_converge_p(cfg: RunConfig, write: bool = True) -> list[ConvergenceRecord]:
    levels = [solve_manufactured(cfg, cfg.mesh_n, d) for d in cfg.degrees]
    u_en = exact_energy_norm(cfg, cfg.mesh_n, max(cfg.degrees))
    h = 1.0 / cfg.mesh_n
    recs = build_records(levels, [h] * len(levels), [str(d) for d in cfg.degrees], u_en,
                         with_eoc=False)
    if write:
        out = Path(cfg.out)
        export_csv(recs, out / "converge_p.csv")
        _write_manifest(cfg, out, "converge_p", {"levels": _level_info(levels)})
    return recs


def run_converge_hp(cfg: RunConfig, write: bool = True) -> list[ConvergenceRecord]:
    levels = [solve_manufactured(cfg, int(n), int(d)) for n, d in cfg.hp_ladder]
    nmax = max(int(n) for n, _ in cfg.hp_ladder)
    u_en = exact_energy_norm(cfg, nmax, 4)
    hs = [1.0 / n for n, _ in cfg.hp_ladder]
    recs = build_records(levels, hs, [f"1/{n},P{d}" for n, d in cfg.hp_ladder], u_en)
    if write:
        out = Path(cfg.out)
        export_csv(recs, out / "converge_hp.csv")
        _write_manifest(cfg, out, "converge_hp", {"levels": _level_info(levels)})
    return recs


@dataclass
class CrackRun:
    beta: float
    samples: np.ndarray
    meshes: list
    solution: Any
    iterations: list[int]
    converged: list[bool]
    seconds: float


def run_crack_single(cfg: RunConfig, beta: float) -> CrackRun:
    t0 = time.perf_counter()
    p = cfg.model.with_beta(beta)
    dg, bd = cfg.dg, crack_data()
    mesh = build_uniform(cfg.mesh_n, CRACK)
    space = make_space(mesh, cfg.degree)
    meshes, its, conv = [mesh], [], []
    initial = None
    for level in range(cfg.depth + 1):
        rep = picard(space, p, dg, bd, cfg.tol, cfg.max_picard, initial=initial,
                     relaxation=cfg.relaxation, solver=cfg.linear_solver,
                 anderson=cfg.anderson)
        its.append(rep.iterations)
        conv.append(rep.converged)
        if not rep.converged:
            log.warning("Picard did not converge for beta=%g at adaptive level %d", beta, level)
        sol = rep.solution
        if level == cfg.depth:
            break
        marked = mark(indicator(sol), cfg.theta)
        mesh = refine(mesh, marked)
        new_space = inherit_degrees(space, mesh)
        initial = transfer(sol, new_space)
        space = new_space
        meshes.append(mesh)
    samples = sample_line(sol, LIGAMENT, cfg.sample_count, p, y_offset=-1e-9)
    return CrackRun(beta, samples, meshes, sol, its, conv, time.perf_counter() - t0)


def crack_betas(cfg: RunConfig) -> list[float]:
    return sorted(set(float(b) for b in cfg.betas) | {float(cfg.beta)})


def run_crack(cfg: RunConfig, write: bool = True) -> dict[float, CrackRun]:
    runs = {}
    for beta in crack_betas(cfg):
        run = run_crack_single(cfg, beta)
        runs[beta] = run
        if write:
            out = Path(cfg.out)
            tag = f"beta_{beta:g}"
            export_csv(run.samples, out / f"crack_samples_{tag}.csv")
            export_vtk(run.solution, out / f"crack_solution_{tag}.vtk", cfg.model.with_beta(beta))
            for k, m in enumerate(run.meshes):
                export_mesh_vtk(m, out / f"crack_mesh_{tag}_level{k}.vtk")
    if write:
        info = {f"{b:g}": {"elements": [m.n_elements for m in r.meshes],
                           "picard_iterations": r.iterations, "converged": r.converged,
                           "seconds": r.seconds} for b, r in runs.items()}
        _write_manifest(cfg, Path(cfg.out), "crack", {"runs": info})
    return runs


RUNNERS = {"converge-h": run_converge_h, "converge-p": run_converge_p,
           "converge-hp": run_converge_hp, "crack": run_crack}


def run(cfg: RunConfig, write: bool = True):
    return RUNNERS[cfg.experiment](cfg, write)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
