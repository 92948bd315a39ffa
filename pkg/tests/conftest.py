from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rubrickit.core import Criterion, LevelDescriptor, Rubric


def make_criterion(name: str, weight: int, scale: int, stem: str | None = None) -> Criterion:
    stem = stem or name.lower()
    return Criterion(
        name=name,
        weight=weight,
        levels=tuple(
            LevelDescriptor(text=f"{stem} requirement for level {n}")
            for n in range(1, scale + 1)
        ),
    )


def make_rubric(
    name: str,
    weights: dict[str, int],
    scale: int,
    task_description: str = "Write a short persuasive piece.",
) -> Rubric:
    return Rubric(
        name=name,
        task_description=task_description,
        scale=scale,
        criteria=tuple(
            make_criterion(criterion, weight, scale) for criterion, weight in weights.items()
        ),
    )


def random_weights(rng: random.Random, k: int, total: int = 100) -> list[int]:
    cuts = sorted(rng.sample(range(1, total), k - 1)) if k > 1 else []
    bounds = [0] + cuts + [total]
    return [bounds[i + 1] - bounds[i] for i in range(k)]


def random_rubric(rng: random.Random, tag: str = "") -> Rubric:
    scale = rng.randint(3, 6)
    k = rng.randint(1, 5)
    names = [f"Criterion {tag}{i + 1}" for i in range(k)]
    weights = dict(zip(names, random_weights(rng, k)))
    rubric = make_rubric(f"Rubric {tag or rng.randint(0, 10**6)}", weights, scale)
    return rubric


@pytest.fixture
def ad_rubric() -> Rubric:
    """The four-criterion, five-level ad-copy rubric with weights 25/20/30/25."""
    return Rubric(
        name="Clara's Rubric",
        task_description=(
            "Write advertising copy for a solar-charging portable Bluetooth speaker, "
            "aimed at eco-conscious shoppers, around 120 words."
        ),
        scale=5,
        criteria=(
            make_criterion("Clarity", 25, 5, "message clarity"),
            make_criterion("Creativity", 20, 5, "inventiveness"),
            make_criterion("Engagement", 30, 5, "audience pull"),
            make_criterion("Brand Alignment", 25, 5, "brand voice fit"),
        ),
    )


@pytest.fixture
def ad_copy() -> str:
    return (
        "A New Speaker - The EcoSound 360 is here. It plays music outdoors and "
        "charges in the sun. The battery lasts a long time and the case is made "
        "from recycled plastic. It connects to your phone over Bluetooth. "
        "Buy one today from our website."
    )
