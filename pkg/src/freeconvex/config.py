"""Run configuration: tolerances, search budgets, and reproducibility knobs."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict


@dataclass(frozen=True)
class Tolerances:
    """Default numerical tolerances.

    structural : exact-arithmetic identities (hermiticity, round trips)
    spectral   : eigenvalue / PSD slack
    verdict    : margin below which a membership verdict is not claimed
    sdp_gap    : relative duality gap accepted as optimal
    constraint : equality-constraint residual accepted as feasible
    """

    structural: float = 1e-12
    spectral: float = 1e-9
    verdict: float = 1e-6
    sdp_gap: float = 1e-7
    constraint: float = 1e-8
    psd: float = 1e-9


@dataclass(frozen=True)
class Budget:
    """Search budgets for sweeps, seesaws, nets and bisection."""

    level_cap: int = 4
    sweep_starts: int = 32
    sweep_iters: int = 25
    seesaw_rounds: int = 40
    seesaw_restarts: int = 4
    summand_cap: int | None = None  # default m**2 + 1, chosen at call time
    net_refinement: int = 3
    max_net_size: int = 20000
    polygon_verts: int = 32
    bisect_rel_width: float = 1e-3
    witness_samples: int = 16
    cross_validate: bool = False


@dataclass(frozen=True)
class RunConfig:
    """Bundle of seed, tolerances and budgets; recorded verbatim in reports."""

    seed: int = 2024
    tol: Tolerances = field(default_factory=Tolerances)
    budget: Budget = field(default_factory=Budget)
    side_cap: int = 400      # stacked cone side after realification
    iteration_cap: int = 200

    def to_json(self) -> dict:
        return asdict(self)


DEFAULT = RunConfig()
