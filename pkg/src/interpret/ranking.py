"""
Top-k sensitive networks per class and the CN/AD comparison sign.
"""

from dataclasses import dataclass
from enum import Enum

import pandas as pd

from src.data import CHANNELS, Label

from .sensitivity import SensitivityTable


class Comparison(str, Enum):
    """Which class is more sensitive to a channel; AD>CN is drawn red, CN>AD blue."""
    AD_GREATER = "AD>CN"
    CN_GREATER = "CN>AD"
    EQUAL = "AD=CN"

    @property
    def color(self) -> str:
        return {"AD>CN": "red", "CN>AD": "blue", "AD=CN": "none"}[self.value]


@dataclass(frozen=True)
class RankedChannel:
    label: Label
    rank: int
    channel_index: int
    delta_percent: float
    comparison: Comparison

    @property
    def domain(self) -> str:
        return CHANNELS[self.channel_index].domain.value

    def to_dict(self) -> dict:
        return {
            "class": self.label.value,
            "rank": self.rank,
            "channel_index": self.channel_index,
            "domain": self.domain,
            "delta_percent": self.delta_percent,
            "comparison": self.comparison.value,
            "color": self.comparison.color,
        }


def compare(ad_delta: float, cn_delta: float) -> Comparison:
    if ad_delta > cn_delta:
        return Comparison.AD_GREATER
    if cn_delta > ad_delta:
        return Comparison.CN_GREATER
    return Comparison.EQUAL


def rank_sensitivities(table: SensitivityTable, top_k: int = 5) -> dict[Label, list[RankedChannel]]:
    """
    The ``top_k`` channels of each class by descending delta.

    Ties are broken by ascending channel index; ``top_k`` equal to the
    channel count yields a full permutation.
    """
    ad = table.classes[Label.AD].deltas
    cn = table.classes[Label.CN].deltas
    ranked: dict[Label, list[RankedChannel]] = {}
    for label in Label:
        entry = table.classes[label]
        deltas = entry.deltas
        order = sorted(range(len(deltas)), key=lambda i: (-deltas[i], i))
        ranked[label] = [
            RankedChannel(label, position + 1, i, float(deltas[i]), compare(ad[i], cn[i]))
            for position, i in enumerate(order[:top_k])
        ]
    return ranked


def ranking_frame(ranked: dict[Label, list[RankedChannel]]) -> pd.DataFrame:
    rows = [item.to_dict() for label in Label for item in ranked.get(label, [])]
    return pd.DataFrame(
        rows, columns=["class", "rank", "channel_index", "domain", "delta_percent", "comparison", "color"]
    )
