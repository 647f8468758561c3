"""End-to-end run: SIF, expert-judgement simulation, matrix, and the files a run writes."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__
from .ej import initial_ranking, score_matrix
from .errors import DatasetError, EmptyInput, MissingResults
from .ingestion import DatasetManifest
from .matrix import MatrixInput, PriorityMatrix, build_matrix, priority_counts, render
from .mcs import MonteCarloRanker, SimulationConfig
from .model import Dataset, MonteCarloStats
from .sif import SifResult, sif_table

logger = logging.getLogger(__name__)

OUTPUT_FILES = ("matrix.csv", "matrix.json", "matrix.svg", "stats.json", "run-manifest.json")


def fixture_manifest() -> DatasetManifest:
    """The bundled 10-UCA eVTOL case-study dataset."""
    root = Path(str(resources.files("uca_prioritizer") / "data"))
    return DatasetManifest.from_dir(root)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    seed: int
    num_simulations: int
    variation_range: float
    input_digests: Mapping[str, str]
    timestamp: str
    ej_source: str = "mcs"
    fixed_max_sif: float | None = None
    fixed_max_ej: float | None = None
    max_mean_shift: float = 1.0
    max_std: float = 0.5

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_digests"] = dict(sorted(self.input_digests.items()))
        return d

    @property
    def run_id(self) -> str:
        payload = self.to_dict()
        del payload["timestamp"]
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunManifest":
        return cls(**d)

    @classmethod
    def create(cls, config: SimulationConfig, paths, **options) -> "RunManifest":
        digests = {str(p): file_digest(p) for p in paths}
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        return cls(__version__, int(config.seed), config.num_simulations,
                   float(config.variation_range), digests, stamp,
                   max_mean_shift=config.max_mean_shift, max_std=config.max_std, **options)


@dataclass
class PipelineResult:
    dataset: Dataset
    config: SimulationConfig
    sif: list[SifResult]
    stats: list[MonteCarloStats]
    final_ranks: dict[str, int]
    initial_scores: dict[str, float]
    ej: dict[str, float]
    matrix: PriorityMatrix
    expert_ranks: dict[str, dict[str, int]] = field(default_factory=dict)
    ej_source: str = "mcs"

    def stats_document(self) -> dict:
        rows = []
        for s in self.stats:
            rows.append({**s.to_dict(), "initial_saw_score": self.initial_scores[s.uca_id],
                         "final_rank": self.final_ranks[s.uca_id]})
        return {
            "num_simulations": self.config.num_simulations,
            "variation_range": self.config.variation_range,
            "seed": self.config.seed,
            "ej_source": self.ej_source,
            "ucas": rows,
            "expert_initial_ranks": self.expert_ranks,
        }


def expert_initial_ranks(dataset: Dataset) -> dict[str, dict[str, int]]:
    """SAW ranking of each expert's own sheets, for side-by-side comparison."""
    out = {}
    for expert in dataset.expert_ids:
        ids, X = score_matrix(dataset, expert)
        if not ids:
            continue
        _, ranks = initial_ranking(X)
        out[expert] = {uid: int(r) for uid, r in zip(ids, ranks)}
    return out


def run_pipeline(dataset: Dataset, config: SimulationConfig | None = None, *,
                 ej_source: str = "mcs", reference_ej: Mapping[str, float] | None = None,
                 fixed_max_sif: float | None = None, fixed_max_ej: float | None = None,
                 n_jobs: int | None = 1) -> PipelineResult:
    """Run the full prioritization on a validated dataset.

    With ``ej_source="dataset"`` the matrix uses ``reference_ej`` (e.g. the
    published EJ values of a case study) instead of the simulated EJ-Scores;
    the simulation still runs so stats and stability are reported.
    """
    config = config or SimulationConfig()
    check = dataset.validate()
    if not check.ok:
        raise DatasetError("; ".join(check.violations))
    if not dataset.ucas:
        raise EmptyInput("dataset has no UCAs")

    sif = sif_table(dataset)
    ids, X = score_matrix(dataset)
    ranker = MonteCarloRanker(config.num_simulations, config.variation_range, config.seed,
                              config.max_mean_shift, config.max_std, n_jobs=n_jobs)
    ranker.fit(X, ids=ids)
    final = {uid: int(r) for uid, r in zip(ids, ranker.final_ranks_)}

    if ej_source == "mcs":
        ej = {s.uca_id: s.ej_score for s in ranker.stats_}
    elif ej_source == "dataset":
        reference_ej = reference_ej or {}
        missing = [uid for uid in ids if uid not in reference_ej]
        if missing:
            raise DatasetError(f"no reference EJ for {', '.join(missing)}")
        ej = {uid: float(reference_ej[uid]) for uid in ids}
    else:
        raise ValueError(f"ej_source must be 'mcs' or 'dataset', got {ej_source!r}")

    matrix = build_matrix([MatrixInput(r.uca_id, r.sif, ej[r.uca_id], r.pms, r.cif) for r in sif],
                          max_sif=fixed_max_sif, max_ej_inverted=fixed_max_ej)
    logger.info("placed %d UCAs: %s", len(ids),
                {p.value: n for p, n in priority_counts(matrix).items()})
    return PipelineResult(dataset, config, sif, list(ranker.stats_), final,
                          {uid: float(v) for uid, v in zip(ids, ranker.initial_scores_)},
                          ej, matrix, expert_initial_ranks(dataset), ej_source)


def _dump(obj) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def write_outputs(result: PipelineResult, manifest: RunManifest, out_root) -> Path:
    """Write every output file into ``out_root/<run-id>/`` and return that directory."""
    out = Path(out_root) / manifest.run_id
    out.mkdir(parents=True, exist_ok=True)
    extra = {s.uca_id: {"final_rank": result.final_ranks[s.uca_id],
                        "stability": s.stability.value} for s in result.stats}
    (out / "matrix.csv").write_bytes(render(result.matrix, "csv", extra=extra))
    (out / "matrix.json").write_bytes(render(result.matrix, "json"))
    (out / "matrix.svg").write_bytes(render(result.matrix, "svg"))
    (out / "stats.json").write_bytes(_dump(result.stats_document()))
    (out / "run-manifest.json").write_bytes(_dump(manifest.to_dict()))
    return out


@dataclass
class LoadedResults:
    directory: Path
    stats: list[MonteCarloStats]
    final_ranks: dict[str, int]
    expert_ranks: dict[str, dict[str, int]]
    matrix: PriorityMatrix
    manifest: RunManifest | None


def load_results(directory) -> LoadedResults:
    d = Path(directory)
    for name in ("stats.json", "matrix.json"):
        if not (d / name).is_file():
            raise MissingResults(f"{d / name} not found; run `compute` first")
    doc = json.loads((d / "stats.json").read_text(encoding="utf-8"))
    stats = [MonteCarloStats.from_dict(row) for row in doc["ucas"]]
    final = {row["uca_id"]: row["final_rank"] for row in doc["ucas"]}
    matrix = PriorityMatrix.from_json((d / "matrix.json").read_bytes())
    manifest = None
    if (d / "run-manifest.json").is_file():
        manifest = RunManifest.from_dict(json.loads((d / "run-manifest.json").read_text("utf-8")))
    return LoadedResults(d, stats, final, doc.get("expert_initial_ranks", {}), matrix, manifest)


def top_priorities(results: LoadedResults, k: int) -> list:
    """Records ordered by priority level, then final EJ rank, then SIF (descending)."""
    ranks = results.final_ranks
    order = sorted(results.matrix.records,
                   key=lambda r: (r.priority.value, ranks.get(r.uca_id, np.inf), -r.sif, r.uca_id))
    return order[:k]
