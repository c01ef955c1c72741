"""Logged observations and their on-disk formats.

Datasets are stored as one JSON object per line (optionally gzipped)
plus a sidecar JSON holding the simulation config, the decomposition and
the rule set, so logged randomization can be replayed exactly.
"""
from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .bvn import BvnDecomposition
from .rankings import Ranking
from .rules import RuleSet

LOGS_FILENAME = "logs.jsonl"
SIDECAR_FILENAME = "sidecar.json"


@dataclass(frozen=True)
class ObservationLog:
    """One logged impression: what was ranked, shown and clicked."""

    context_id: int
    ranker_ranking: Ranking
    sampled_component: int
    displayed_ranking: Ranking
    clicks: tuple[int, ...]
    decomposition_ref: str = "bvn-0"
    ruleset_ref: str = "rules-0"

    def __post_init__(self):
        if len(self.clicks) != len(self.displayed_ranking):
            raise ValueError(
                f"clicks length {len(self.clicks)} != ranking length {len(self.displayed_ranking)}"
            )
        if any(c not in (0, 1) for c in self.clicks):
            raise ValueError(f"clicks must be 0/1 indicators: {self.clicks}")

    def to_json_dict(self) -> dict:
        return {
            "context_id": self.context_id,
            "ranker_ranking": list(self.ranker_ranking.items),
            "sampled_component": self.sampled_component,
            "displayed_ranking": list(self.displayed_ranking.items),
            "clicks": list(self.clicks),
            "decomposition_ref": self.decomposition_ref,
            "ruleset_ref": self.ruleset_ref,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ObservationLog":
        return cls(
            context_id=int(data["context_id"]),
            ranker_ranking=Ranking(data["ranker_ranking"]),
            sampled_component=int(data["sampled_component"]),
            displayed_ranking=Ranking(data["displayed_ranking"]),
            clicks=tuple(int(c) for c in data["clicks"]),
            decomposition_ref=data["decomposition_ref"],
            ruleset_ref=data["ruleset_ref"],
        )


@dataclass
class LogDataset:
    """Column-oriented view of a simulated log; iterates as ObservationLogs."""

    ranker_rankings: np.ndarray  # (N, n) int64, items by position
    sampled_components: np.ndarray  # (N,) int64
    displayed_rankings: np.ndarray  # (N, n) int64
    clicks: np.ndarray  # (N, n) uint8, by displayed position
    decomposition: BvnDecomposition
    rules: RuleSet = field(default_factory=RuleSet)
    config: dict | None = None
    decomposition_ref: str = "bvn-0"
    ruleset_ref: str = "rules-0"

    def __len__(self) -> int:
        return self.ranker_rankings.shape[0]

    @property
    def n_items(self) -> int:
        return self.ranker_rankings.shape[1]

    def log(self, i: int) -> ObservationLog:
        return ObservationLog(
            context_id=i,
            ranker_ranking=Ranking(self.ranker_rankings[i]),
            sampled_component=int(self.sampled_components[i]),
            displayed_ranking=Ranking(self.displayed_rankings[i]),
            clicks=tuple(int(c) for c in self.clicks[i]),
            decomposition_ref=self.decomposition_ref,
            ruleset_ref=self.ruleset_ref,
        )

    def __iter__(self) -> Iterator[ObservationLog]:
        return (self.log(i) for i in range(len(self)))

    @classmethod
    def from_logs(
        cls,
        logs: Sequence[ObservationLog],
        decomposition: BvnDecomposition,
        rules: RuleSet = RuleSet(),
        config: dict | None = None,
    ) -> "LogDataset":
        if not logs:
            raise ValueError("no logs given")
        return cls(
            ranker_rankings=np.asarray([log.ranker_ranking.items for log in logs], dtype=np.int64),
            sampled_components=np.asarray([log.sampled_component for log in logs], dtype=np.int64),
            displayed_rankings=np.asarray([log.displayed_ranking.items for log in logs], dtype=np.int64),
            clicks=np.asarray([log.clicks for log in logs], dtype=np.uint8),
            decomposition=decomposition,
            rules=rules,
            config=config,
            decomposition_ref=logs[0].decomposition_ref,
            ruleset_ref=logs[0].ruleset_ref,
        )

    def sidecar_dict(self) -> dict:
        return {
            "config": self.config,
            "decomposition_ref": self.decomposition_ref,
            "ruleset_ref": self.ruleset_ref,
            "decomposition": self.decomposition.to_json_dict(),
            "ruleset": self.rules.to_json_dict(),
        }

    def write(self, out_dir: str | Path, compress: bool = False) -> Path:
        """Write logs.jsonl[.gz] and sidecar.json into ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = LOGS_FILENAME + (".gz" if compress else "")
        opener = gzip.open if compress else open
        with opener(out / name, "wt", encoding="utf-8") as fh:
            for i in range(len(self)):
                fh.write(json.dumps(self.log(i).to_json_dict()) + "\n")
        (out / SIDECAR_FILENAME).write_text(json.dumps(self.sidecar_dict(), indent=2))
        return out / name

    @classmethod
    def read(cls, in_dir: str | Path) -> "LogDataset":
        in_dir = Path(in_dir)
        sidecar = json.loads((in_dir / SIDECAR_FILENAME).read_text())
        path = in_dir / LOGS_FILENAME
        opener = open
        if not path.exists():
            path = in_dir / (LOGS_FILENAME + ".gz")
            opener = gzip.open
        logs = []
        with opener(path, "rt", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    logs.append(ObservationLog.from_json_dict(json.loads(line)))
        return cls.from_logs(
            logs,
            decomposition=BvnDecomposition.from_json_dict(sidecar["decomposition"]),
            rules=RuleSet.from_json_dict(sidecar["ruleset"]),
            config=sidecar.get("config"),
        )
