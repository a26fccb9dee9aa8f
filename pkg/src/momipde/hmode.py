"""Two-phase multiobjective differential evolution over the candidate
box, with feasibility decided by the eigenvalue-bound solver.

Phase I is classic DE (mutate around an archived design, reflect into
the box, binomial crossover, feasibility-first selection). Phase II
replaces every member by a componentwise random blend of two archived
designs, exploiting the front found so far. A spacing-limited archive
of nondominated feasible designs persists across generations, and the
run ends by picking the knee of the archived front.

Determinism: each (generation, individual) pair owns an RNG substream
spawned from the run seed, and every generation works from a snapshot
of the previous population and archive, so evaluation order cannot
change results. Archive updates run sequentially in index order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .lmi import EPS_FEAS_DEFAULT
from .momip import CandidateEvaluation, Dominance, Momip, dominates, evaluate_candidate


class EmptyArchive(Exception):
    """Knee selection needs at least one archived design."""


@dataclass(frozen=True)
class HmodeConfig:
    n_pop: int = 100
    n_iter: int = 200
    eta_c: float = 0.2
    eta_d: float = 0.05
    phase_fraction: float = 2.0 / 3.0
    seed: int = 0
    eps_feas: float = EPS_FEAS_DEFAULT

    def __post_init__(self):
        if self.n_pop < 4:
            raise ValueError("n_pop must be >= 4 (mutation draws 3 distinct others)")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if not 0.0 < self.eta_c < 1.0:
            raise ValueError("eta_c must lie in (0, 1)")
        if self.eta_d <= 0.0:
            raise ValueError("eta_d must be positive")
        if not 0.0 < self.phase_fraction <= 1.0:
            raise ValueError("phase_fraction must lie in (0, 1]")
        if self.eps_feas <= 0.0:
            raise ValueError("eps_feas must be positive")


@dataclass(frozen=True)
class ArchiveEntry:
    f: np.ndarray
    alpha: np.ndarray
    x_star: np.ndarray
    order: int  # insertion counter; knee ties resolve to the lowest


@dataclass(frozen=True)
class Archive:
    entries: tuple[ArchiveEntry, ...] = ()
    eta_d: float = 0.05
    next_order: int = 0

    def __len__(self) -> int:
        return len(self.entries)


def mutate(best, a_j, a_k, r: float) -> np.ndarray:
    """best + r (a_j - a_k), one scalar r per individual."""
    best = np.asarray(best, dtype=np.float64)
    return best + r * (np.asarray(a_j, dtype=np.float64) - np.asarray(a_k, dtype=np.float64))


def reflect(v, lo, hi) -> np.ndarray:
    """Mirror out-of-box components back about the violated bound; a deep
    overshoot lands on the opposite bound. Output always inside [lo, hi]."""
    v = np.asarray(v, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    out = v.copy()
    low = v < lo
    out[low] = np.minimum(hi[low], 2.0 * lo[low] - v[low])
    high = v > hi
    out[high] = np.maximum(lo[high], 2.0 * hi[high] - v[high])
    return out


def crossover(parent, mutant, eta_c: float, j_rand: int, rng) -> np.ndarray:
    """Binomial crossover: each component takes the mutant when its draw
    falls under eta_c, and component j_rand takes the mutant regardless."""
    parent = np.asarray(parent, dtype=np.float64)
    mutant = np.asarray(mutant, dtype=np.float64)
    take = rng.random(parent.shape[0]) < eta_c
    take[j_rand] = True
    return np.where(take, mutant, parent)


def select(parent_eval: CandidateEvaluation, child_eval: CandidateEvaluation) -> bool:
    """Keep the child iff it gains feasibility, or both are feasible and
    the child improves every objective strictly."""
    if not child_eval.feasible:
        return False
    if not parent_eval.feasible:
        return True
    return bool(np.all(child_eval.f < parent_eval.f))


def phase2_recombine(a1, a2, rng) -> np.ndarray:
    """Componentwise r_j a1 + (1 - r_j) a2; lands in the min/max cube of
    the two parents (clipped there to absorb last-ulp rounding)."""
    a1 = np.asarray(a1, dtype=np.float64)
    a2 = np.asarray(a2, dtype=np.float64)
    r = rng.random(a1.shape[0])
    out = r * a1 + (1.0 - r) * a2
    return np.clip(out, np.minimum(a1, a2), np.maximum(a1, a2))


def archive_update(archive: Archive, candidate: CandidateEvaluation) -> tuple[Archive, bool]:
    """Insert a feasible candidate unless an archived vector dominates it;
    drop archived vectors it dominates; then require Euclidean spacing
    above eta_d from everything that remains (empty archive admits)."""
    if not candidate.feasible:
        raise ValueError("archive_update requires a feasible candidate")
    f = candidate.f
    for e in archive.entries:
        if dominates(e.f, f) is Dominance.DOMINATES:
            return archive, False
    kept = tuple(e for e in archive.entries if dominates(f, e.f) is not Dominance.DOMINATES)
    if kept:
        dist = min(float(np.sqrt(np.sum((f - e.f) ** 2))) for e in kept)
        if dist <= archive.eta_d:
            return Archive(kept, archive.eta_d, archive.next_order), False
    entry = ArchiveEntry(f=f.copy(), alpha=candidate.alpha.copy(),
                         x_star=candidate.x_star.copy(), order=archive.next_order)
    return Archive(kept + (entry,), archive.eta_d, archive.next_order + 1), True


def knee_score(f, f_lo, f_hi) -> float:
    """Product of normalized improvements against the archive extremes;
    an objective with no spread contributes a neutral factor."""
    score = 1.0
    for n in range(len(f)):
        span = f_hi[n] - f_lo[n]
        if span > 0.0:
            score *= (f_hi[n] - f[n]) / span
    return score


def knee_select(archive: Archive) -> ArchiveEntry:
    """The archived entry maximizing the knee product; ties go to the
    earliest-inserted entry."""
    if not archive.entries:
        raise EmptyArchive("cannot select a knee from an empty archive")
    fs = np.stack([e.f for e in archive.entries])
    f_lo = fs.min(axis=0)
    f_hi = fs.max(axis=0)
    best = None
    best_score = -np.inf
    for e in archive.entries:
        s = knee_score(e.f, f_lo, f_hi)
        if s > best_score or (s == best_score and e.order < best.order):
            best = e
            best_score = s
    return best


@dataclass(frozen=True)
class HmodeOutput:
    archive: Archive
    knee: Optional[ArchiveEntry]
    generations_run: int
    evaluations_count: int


def _substream(seed: int, generation: int, individual: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(generation, individual))
    return np.random.Generator(np.random.PCG64(ss))


def _draw_excluding(rng, n: int, excluded) -> int:
    r = int(rng.integers(n - len(excluded)))
    for e in sorted(excluded):
        if r >= e:
            r += 1
    return r


def run(p: Momip, cfg: HmodeConfig,
        on_generation: Optional[Callable[[int, Archive, int], None]] = None) -> HmodeOutput:
    """Full search: random initial population, n_iter generations split
    into the two phases at floor(phase_fraction * n_iter), archive sweep
    after each generation, knee selection at the end."""
    n_pop, m = cfg.n_pop, p.m
    threshold = int(np.floor(cfg.phase_fraction * cfg.n_iter))
    evaluations = 0

    pop_alpha = []
    pop_eval = []
    for i in range(n_pop):
        rng = _substream(cfg.seed, 0, i)
        alpha = p.lo + (p.hi - p.lo) * rng.random(m)
        pop_alpha.append(alpha)
        pop_eval.append(evaluate_candidate(p, alpha, cfg.eps_feas))
        evaluations += 1

    archive = Archive(entries=(), eta_d=cfg.eta_d)
    for t_c in range(1, cfg.n_iter + 1):
        snap_alpha = list(pop_alpha)
        snap_eval = list(pop_eval)
        snap_archive = archive
        phase1 = t_c <= threshold
        for i in range(n_pop):
            rng = _substream(cfg.seed, t_c, i)
            if phase1 or len(snap_archive) < 2:
                j = _draw_excluding(rng, n_pop, (i,))
                k = _draw_excluding(rng, n_pop, (i, j))
                if len(snap_archive) > 0:
                    best = snap_archive.entries[int(rng.integers(len(snap_archive)))].alpha
                else:
                    best = snap_alpha[_draw_excluding(rng, n_pop, (i, j, k))]
                v = mutate(best, snap_alpha[j], snap_alpha[k], float(rng.random()))
                v = reflect(v, p.lo, p.hi)
                j_rand = int(rng.integers(m))
                child = crossover(snap_alpha[i], v, cfg.eta_c, j_rand, rng)
                child_eval = evaluate_candidate(p, child, cfg.eps_feas)
                evaluations += 1
                if select(snap_eval[i], child_eval):
                    pop_alpha[i] = child
                    pop_eval[i] = child_eval
                else:
                    pop_alpha[i] = snap_alpha[i]
                    pop_eval[i] = snap_eval[i]
            else:
                i1 = int(rng.integers(len(snap_archive)))
                i2 = _draw_excluding(rng, len(snap_archive), (i1,))
                alpha = phase2_recombine(snap_archive.entries[i1].alpha,
                                         snap_archive.entries[i2].alpha, rng)
                pop_alpha[i] = alpha
                pop_eval[i] = evaluate_candidate(p, alpha, cfg.eps_feas)
                evaluations += 1
        for i in range(n_pop):
            if pop_eval[i].feasible:
                archive, _ = archive_update(archive, pop_eval[i])
        if on_generation is not None:
            on_generation(t_c, archive, evaluations)

    knee = knee_select(archive) if len(archive) else None
    return HmodeOutput(archive=archive, knee=knee,
                       generations_run=cfg.n_iter, evaluations_count=evaluations)
