"""Bundled toy corpora for smoke tests and the end-to-end pipeline."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

TOPICS = {
    "food": ("牛肉麵", "餐廳", "好吃", "便當", "夜市", "滷肉飯", "珍奶", "火鍋", "老闆", "排隊", "小吃", "甜點"),
    "politics": ("政府", "立法院", "選舉", "總統", "政黨", "候選人", "投票", "議員", "政策", "民調", "執政", "修法"),
}


def two_topic_lines(n_per_topic: int = 500, seed: int = 20230101) -> list[str]:
    """Sentences that each draw 5-12 words from a single topic, alternating topics."""
    rng = np.random.Generator(np.random.PCG64(seed))
    lines = []
    for _ in range(n_per_topic):
        for words in TOPICS.values():
            size = int(rng.integers(5, 13))
            lines.append(" ".join(words[i] for i in rng.integers(0, len(words), size=size)))
    return lines


def data_path(name: str) -> Path:
    return Path(str(resources.files("lexnet") / "data" / name))


TWO_TOPIC_FILE = "two_topics.txt"
CLASSICAL_FILE = "lunyu_xueer.txt"
