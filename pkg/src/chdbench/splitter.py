"""Training/testing splits under the four proportional/equal scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import Dataset


class Scheme(str, Enum):
    PROPORTIONAL = "prop"
    EQUAL = "eq"


@dataclass(frozen=True)
class Scenario:
    training: Scheme
    testing: Scheme

    @property
    def name(self) -> str:
        return f"{self.training.value}-{self.testing.value}"

    @property
    def label(self) -> str:
        names = {Scheme.PROPORTIONAL: "Prop.", Scheme.EQUAL: "Equal"}
        return f"{names[self.training]}/{names[self.testing]}"

    @classmethod
    def parse(cls, name: str) -> "Scenario":
        try:
            return SCENARIOS[name]
        except KeyError:
            raise ValueError(f"unknown scenario {name!r}; expected one of {list(SCENARIOS)}") from None

    def __str__(self) -> str:
        return self.name


PROP_PROP = Scenario(Scheme.PROPORTIONAL, Scheme.PROPORTIONAL)
EQ_PROP = Scenario(Scheme.EQUAL, Scheme.PROPORTIONAL)
PROP_EQ = Scenario(Scheme.PROPORTIONAL, Scheme.EQUAL)
EQ_EQ = Scenario(Scheme.EQUAL, Scheme.EQUAL)

# Reporting order.
SCENARIOS = {s.name: s for s in (PROP_PROP, EQ_PROP, PROP_EQ, EQ_EQ)}


class InfeasibleSplit(ValueError):
    pass


def round_half_away(x: float) -> int:
    """Nearest integer, halves away from zero.

    A 1e-9 nudge absorbs representation error such as 0.5*622 landing
    just below an exact half.
    """
    return int(math.copysign(math.floor(abs(x) + 0.5 + 1e-9), x))


@dataclass(frozen=True, eq=False)
class ScenarioSplit:
    train_g1: np.ndarray
    train_g2: np.ndarray
    test: np.ndarray
    tau: float
    scenario: Scenario
    seed: tuple[int, ...]

    @property
    def n1(self) -> int:
        return len(self.train_g1)

    @property
    def n2(self) -> int:
        return len(self.train_g2)

    @property
    def n3(self) -> int:
        return len(self.test)

    @property
    def train(self) -> np.ndarray:
        return np.concatenate([self.train_g1, self.train_g2])

    def same_indices(self, other: "ScenarioSplit") -> bool:
        return (
            np.array_equal(self.train_g1, other.train_g1)
            and np.array_equal(self.train_g2, other.train_g2)
            and np.array_equal(self.test, other.test)
        )


def planned_sizes(n_g1: int, n_g2: int, scenario: Scenario, tau: float) -> dict[str, int]:
    """Requested draw sizes: train per group, test per group.

    Under proportional testing with proportional training the test set is
    the complement, so its sizes are the remainders rather than re-rounded.
    """
    if not 0 < tau < 1:
        raise ValueError(f"training ratio must lie in (0, 1), got {tau}")
    small = min(n_g1, n_g2)
    if scenario.training is Scheme.PROPORTIONAL:
        n1, n2 = round_half_away(tau * n_g1), round_half_away(tau * n_g2)
    else:
        n1 = n2 = round_half_away(tau * small)
    if scenario.testing is Scheme.EQUAL:
        t1 = t2 = round_half_away((1 - tau) * small)
    elif scenario.training is Scheme.PROPORTIONAL:
        t1, t2 = n_g1 - n1, n_g2 - n2
    else:
        t1, t2 = round_half_away((1 - tau) * n_g1), round_half_away((1 - tau) * n_g2)
    return {"train_g1": n1, "train_g2": n2, "test_g1": t1, "test_g2": t2}


def make_split(d: Dataset, scenario: Scenario, tau: float, rng: np.random.Generator,
               seed: tuple[int, ...] = ()) -> ScenarioSplit:
    """Draw one split. Deterministic given the generator state."""
    g1, g2 = d.group1, d.group2
    sizes = planned_sizes(len(g1), len(g2), scenario, tau)
    for group, pool, need in (
        ("group 1 (CHD)", len(g1), sizes["train_g1"] + sizes["test_g1"]),
        ("group 2 (no CHD)", len(g2), sizes["train_g2"] + sizes["test_g2"]),
    ):
        if need > pool:
            raise InfeasibleSplit(
                f"{scenario.name} at tau={tau}: {group} has {pool} rows, {need} required"
            )
    if sizes["train_g1"] < 1 or sizes["train_g2"] < 1:
        raise InfeasibleSplit(f"{scenario.name} at tau={tau}: empty training group")

    perm1 = rng.permutation(g1)
    perm2 = rng.permutation(g2)
    a, b = sizes["train_g1"], sizes["train_g2"]
    train_g1 = np.sort(perm1[:a])
    train_g2 = np.sort(perm2[:b])
    test = np.sort(np.concatenate([perm1[a:a + sizes["test_g1"]], perm2[b:b + sizes["test_g2"]]]))
    return ScenarioSplit(train_g1, train_g2, test, tau, scenario, tuple(seed))


def sim_rng(master_seed: int, sim_index: int, *stream: int) -> np.random.Generator:
    """Per-simulation generator derived from (master seed, simulation index[, substream])."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, sim_index, *stream]))


def split_for_sim(d: Dataset, scenario: Scenario, tau: float, master_seed: int,
                  sim_index: int) -> ScenarioSplit:
    return make_split(d, scenario, tau, sim_rng(master_seed, sim_index),
                      seed=(master_seed, sim_index))


def training_prevalence(s: ScenarioSplit) -> float:
    total = s.n1 + s.n2
    if total < 1:
        raise ValueError("empty training set")
    return s.n1 / total
