"""Partition-and-refine bounded-time safety verification.

Each cover of the initial set is simulated once, bloated by its discrepancy
bound into a reach-tube, and classified against the unsafe set; undecided
covers are split into finer ones.  SAFE requires every stored tube segment to
be disjoint from the unsafe set; UNSAFE requires a simulation box fully
inside it.  Because machine arithmetic cannot honor unbounded refinement, an
UNKNOWN verdict is returned when the refinement budget or radius floor is
exhausted with covers still undecided.
"""

from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    BlowupError,
    DomainExitError,
    RefinementFloorError,
    SimulationError,
    UnboundedIntervalError,
)
from .geometry import (
    CONTAINED,
    DISJOINT,
    Ball,
    Box,
    Cover,
    HalfspaceSet,
    classify_against_unsafe,
    partition_cover,
)
from .ldf import DELTA_CAP, Reachtube, build_reachtube, compute_ldf, compute_ldf_ct
from .models import VerificationProblem
from .simulate import SimulationTrace, simulate_trace

SAFE = "SAFE"
UNSAFE = "UNSAFE"
UNKNOWN = "UNKNOWN"

SAFE_COVER = "SAFE_COVER"
UNSAFE_WITNESS = "UNSAFE_WITNESS"
UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class WitnessInfo:
    """A simulation box fully inside the unsafe set."""

    cover: Cover
    step_index: int
    time: float
    box: Box


@dataclass(frozen=True)
class Verdict:
    status: str
    num_sims: int
    num_refinements: int
    wall_seconds: float
    reachtube_union: tuple[Reachtube, ...] | None = None
    witness: WitnessInfo | None = None
    exhausted: dict | None = None

    def __post_init__(self):
        evidence = [
            self.reachtube_union is not None,
            self.witness is not None,
            self.exhausted is not None,
        ]
        if sum(evidence) != 1:
            raise ValueError("exactly one evidence field must be populated")


def check_tube(
    tube: Reachtube, trace: SimulationTrace, u: HalfspaceSet
) -> tuple[str, int | None]:
    """SAFE_COVER if every tube segment misses the unsafe set; UNSAFE_WITNESS
    with the step index if some simulation box lies inside it; else
    UNDECIDED."""
    for k, box in enumerate(trace.boxes):
        if classify_against_unsafe(box, u) == CONTAINED:
            return UNSAFE_WITNESS, k
    if all(classify_against_unsafe(seg, u) == DISJOINT for seg, _ in tube.segments):
        return SAFE_COVER, None
    return UNDECIDED, None


def _run_cover(problem: VerificationProblem, cover: Cover, delta_cap: float):
    try:
        trace = simulate_trace(
            problem.system, cover.theta, problem.tau, cover.epsilon, problem.T
        )
    except SimulationError as exc:
        raise SimulationError(
            f"cover theta={cover.theta.tolist()} delta={cover.delta:.3g}: {exc}"
        ) from exc
    try:
        if problem.ct_enabled:
            coeffs = compute_ldf_ct(
                trace,
                problem.system,
                cover.delta,
                cover.epsilon,
                problem.ct_step,
                delta_cap=delta_cap,
            )
        else:
            coeffs = compute_ldf(
                trace, problem.system, cover.delta, cover.epsilon, delta_cap=delta_cap
            )
        tube = build_reachtube(trace, coeffs)
    except (BlowupError, DomainExitError, UnboundedIntervalError) as exc:
        # Divergence or domain exit shrinks away under refinement.
        return "REFINE", trace, None, str(exc)
    kind, k = check_tube(tube, trace, problem.unsafe)
    return kind, trace, tube, k


def verify_safety(
    problem: VerificationProblem,
    workers: int = 1,
    delta_floor: float = 1e-6,
    delta_cap: float = DELTA_CAP,
) -> Verdict:
    """Run the refinement loop to a SAFE / UNSAFE / UNKNOWN verdict.

    Covers are processed in creation (FIFO) order; with several workers the
    in-flight wave is drained and its results handled in creation order, so
    the verdict is deterministic regardless of worker count."""
    workers = max(1, int(workers))
    start = time.perf_counter()
    init_region = Ball(problem.theta_center, problem.delta).bounding_box()
    queue: deque[tuple[Cover, int]] = deque(
        [(Cover(problem.theta_center, problem.delta, problem.epsilon0), 0)]
    )
    tubes: list[Reachtube] = []
    exhausted: list[dict] = []
    num_sims = 0
    num_refinements = 0

    def finish(status: str, **evidence) -> Verdict:
        return Verdict(
            status=status,
            num_sims=num_sims,
            num_refinements=num_refinements,
            wall_seconds=time.perf_counter() - start,
            **evidence,
        )

    while queue:
        wave = [queue.popleft() for _ in range(min(workers, len(queue)))]
        if len(wave) == 1:
            results = [_run_cover(problem, wave[0][0], delta_cap)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(lambda cd: _run_cover(problem, cd[0], delta_cap), wave)
                )
        for (cover, depth), (kind, trace, tube, extra) in zip(wave, results):
            num_sims += 1
            if kind == SAFE_COVER:
                tubes.append(tube)
                continue
            if kind == UNSAFE_WITNESS:
                k = extra
                return finish(
                    UNSAFE,
                    witness=WitnessInfo(
                        cover=cover,
                        step_index=k,
                        time=float(trace.times[k]),
                        box=trace.boxes[k],
                    ),
                )
            reason = "undecided" if kind == UNDECIDED else f"refined after error: {extra}"
            if depth >= problem.max_refinements:
                exhausted.append(
                    {"theta": cover.theta.tolist(), "delta": cover.delta,
                     "depth": depth, "reason": f"max refinements: {reason}"}
                )
                continue
            try:
                children = partition_cover(cover, init_region, floor=delta_floor)
            except RefinementFloorError:
                exhausted.append(
                    {"theta": cover.theta.tolist(), "delta": cover.delta,
                     "depth": depth, "reason": f"delta floor: {reason}"}
                )
                continue
            num_refinements += 1
            # Only the initial ball needs covering; drop children whose
            # balls cannot intersect it.
            queue.extend(
                (child, depth + 1)
                for child in children
                if np.linalg.norm(child.theta - problem.theta_center)
                <= child.delta + problem.delta
            )

    if exhausted:
        return finish(
            UNKNOWN,
            exhausted={
                "undecided_covers": len(exhausted),
                "max_depth": max(e["depth"] for e in exhausted),
                "min_delta": min(e["delta"] for e in exhausted),
                "details": exhausted[:16],
            },
        )
    return finish(SAFE, reachtube_union=tuple(tubes))
