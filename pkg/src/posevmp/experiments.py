"""Scripted evaluation scenarios on synthetic data.

These mirror the structure of the library-operation comparison (incremental
vs. batch weight means) and the via-point detection comparison.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .batch_oracle import ComparisonReport, batch_fit_library, batch_mean, compare_means
from .detect import STRATEGIES, DetectConfig, greedy_detect
from .library import Library, LibraryConfig
from .synth import bimodal_stream, generate
from .vmp import BasisConfig, Demonstration, fit_weights

NO_DETECT = DetectConfig(max_viapoints=0)


def learn(lib: Library, demos: list[Demonstration]) -> int:
    mp_id = lib.add_mp(demos[0])
    for d in demos[1:]:
        lib.improve_mp(mp_id, d)
    return mp_id


def add_improve_row(seed: int, count: int = 6, samples: int = 100, basis: BasisConfig = BasisConfig()):
    demos = generate("smooth", count, seed, samples)
    lib = Library(LibraryConfig(basis=basis, detect=NO_DETECT))
    mp_id = learn(lib, demos)
    ref = batch_fit_library({"add": demos}, basis)["add"]
    return compare_means("Add and improve", lib.get(mp_id).model.weights.mu_hat, ref.mean), lib, mp_id, ref


def merge_row(seed: int, counts=(6, 3), samples: int = 100, basis: BasisConfig = BasisConfig()):
    demos = generate("smooth", sum(counts), seed, samples)
    lib = Library(LibraryConfig(basis=basis, detect=NO_DETECT))
    a = learn(lib, demos[: counts[0]])
    b = learn(lib, demos[counts[0]:])
    c = lib.merge_modes(a, b)
    ref = batch_fit_library({"merge": demos}, basis)["merge"]
    return compare_means("Merge two modes", lib.get(c).model.weights.mu_hat, ref.mean), lib, c, ref


@dataclass
class SplitOutcome:
    seed: int
    family_means: dict[int, np.ndarray]
    child_means: dict[int, np.ndarray]
    joint_pre_split: np.ndarray
    joint_all: np.ndarray
    assigned: list[tuple[int, int]] = field(default_factory=list)

    def distance(self, which: str, family: int) -> float:
        if which == "child":
            m = self.child_means[family]
        elif which == "pre_split":
            m = self.joint_pre_split
        else:
            m = self.joint_all
        return float(np.linalg.norm(m - self.family_means[family]))


def split_experiment(seed: int, samples: int = 100, basis: BasisConfig = BasisConfig()) -> SplitOutcome:
    """Four joint demonstrations, a split on the fifth, four assigned ones.

    The fifth demonstration belongs to family 0, which ends with six
    demonstrations against three of family 1.
    """
    rng = np.random.default_rng(seed)
    joint = list(rng.permutation([0, 0, 1, 1]))
    extra = list(rng.permutation([0, 0, 0, 1]))
    modes = joint + [0] + extra
    demos = bimodal_stream(seed, modes, samples)
    lib = Library(LibraryConfig(basis=basis, detect=NO_DETECT))
    mp = learn(lib, demos[:4])
    pre_split = lib.get(mp).model.weights.mu_hat.copy()
    ia, ib = lib.split_mode(mp, demos[4])
    child_of = {0: ia, 1: ib}
    assigned = []
    for d, m in zip(demos[5:], extra):
        target = lib.assign_demo_to_mode(d, [ia, ib])
        lib.improve_mp(target, d)
        assigned.append((int(m), 0 if target == ia else 1))
    W = np.array([fit_weights(d, basis) for d in demos])
    labels = np.array(modes)
    fam = {f: batch_mean(W[labels == f]) for f in (0, 1)}
    return SplitOutcome(
        seed,
        fam,
        {f: lib.get(child_of[f]).model.weights.mu_hat.copy() for f in (0, 1)},
        pre_split,
        batch_mean(W),
        assigned,
    )


def assignment_experiment(
    seed: int, train: int = 3, held_out: int = 4, samples: int = 100, basis: BasisConfig = BasisConfig()
) -> tuple[int, int]:
    """Learn one mode per bimodal family, assign held-out demonstrations.

    Returns (correct, total).
    """
    rng = np.random.default_rng(seed)
    test_modes = list(rng.permutation([i % 2 for i in range(held_out)]))
    modes = [0] * train + [1] * train + test_modes
    demos = bimodal_stream(seed, modes, samples)
    lib = Library(LibraryConfig(basis=basis, detect=NO_DETECT))
    ids = [learn(lib, demos[:train]), learn(lib, demos[train: 2 * train])]
    correct = 0
    for d, m in zip(demos[2 * train:], test_modes):
        correct += lib.assign_demo_to_mode(d, ids) == ids[m]
    return correct, len(test_modes)


def operations_report(seed: int = 0, samples: int = 100, basis: BasisConfig = BasisConfig()) -> ComparisonReport:
    rows = [add_improve_row(seed, samples=samples, basis=basis)[0], merge_row(seed, samples=samples, basis=basis)[0]]
    split = split_experiment(seed, samples, basis)
    for f, label in ((0, "A"), (1, "B")):
        rows.append(compare_means(f"Split a mode ({label})", split.child_means[f], split.family_means[f]))
    for f, label in ((0, "A"), (1, "B")):
        rows.append(compare_means(f"Without splitting ({label})", split.joint_all, split.family_means[f]))
    return ComparisonReport(rows, {"seed": seed, "samples": samples, "k": basis.k})


@dataclass
class DetectionRow:
    n_max: int
    strategy: str
    mean: float
    std: float
    duration_mean: float
    duration_std: float
    per_demo: list[float] = field(default_factory=list)


def detection_table(
    demos: list[Demonstration],
    strategies=STRATEGIES,
    budgets=(1, 3),
    theta: float = 1e-4,
    alpha: float = 0.1,
    basis: BasisConfig = BasisConfig(),
    w_o: np.ndarray | None = None,
) -> list[DetectionRow]:
    """Reconstruct every demonstration with the shared mean weights.

    The first row (budget 0) is the reconstruction without via-points.
    """
    if w_o is None:
        w_o = np.mean([fit_weights(d, basis) for d in demos], axis=0)
    rows = []
    base = []
    for budget in budgets:
        for strategy in strategies:
            means, times = [], []
            for d in demos:
                t0 = time.perf_counter()
                res = greedy_detect(basis, w_o, d, DetectConfig(strategy, theta, alpha, budget))
                times.append(time.perf_counter() - t0)
                means.append(res.final_mean)
                if len(base) < len(demos):
                    base.append(res.initial_mean)
            rows.append(DetectionRow(budget, strategy, float(np.mean(means)), float(np.std(means)),
                                     float(np.mean(times)), float(np.std(times)), means))
    none = DetectionRow(0, "none", float(np.mean(base)), float(np.std(base)), 0.0, 0.0, base)
    return [none, *rows]


def render_detection_table(rows: list[DetectionRow]) -> str:
    header = ("#", "Approach", "Average distance", "Duration [s]")
    body = []
    for r in rows:
        dur = "-" if r.n_max == 0 else f"{r.duration_mean:.4f} +- {r.duration_std:.4f}"
        body.append((str(r.n_max), r.strategy, f"{r.mean:.5f} +- {r.std:.5f}", dur))
    widths = [max(len(x[i]) for x in [header, *body]) for i in range(4)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(x, widths)).rstrip() for x in [header, *body]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
