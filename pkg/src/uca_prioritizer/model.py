"""Domain types for UCA prioritization.

All types are frozen dataclasses. Each one has ``to_dict``/``from_dict`` so it
can be written to JSON with a stable field order (the dataclass field order).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from types import MappingProxyType
from typing import Any, Mapping

from .errors import DatasetError, LinkError


class Criterion(str, Enum):
    OPERATIONAL_DISRUPTION = "operational_disruption"
    CRITICALITY = "criticality"
    DETECTABILITY = "detectability"
    STAKEHOLDER_EFFECT = "stakeholder_effect"
    LIKELIHOOD = "likelihood"


#: Column order used by every score matrix in the package.
CRITERIA = tuple(Criterion)
CRITERION_NAMES = tuple(c.value for c in CRITERIA)


class DalLevel(str, Enum):
    CATASTROPHIC = "Catastrophic"
    HAZARDOUS = "Hazardous"
    MAJOR = "Major"
    MINOR = "Minor"

    @classmethod
    def parse(cls, text: str) -> "DalLevel":
        key = text.strip().casefold()
        for level in cls:
            if level.value.casefold() == key:
                return level
        raise ValueError(f"unknown DAL level {text!r} (expected one of "
                         f"{', '.join(l.value for l in cls)})")


class Stability(str, Enum):
    STABLE = "Stable"
    SENSITIVE = "Sensitive"


class Priority(str, Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    P5 = "P5"

    @property
    def colour(self) -> str:
        return _PRIORITY_COLOURS[self]

    @property
    def label(self) -> str:
        return _PRIORITY_LABELS[self]


_PRIORITY_COLOURS = {
    Priority.P1: "Darkred",
    Priority.P2: "Red",
    Priority.P3: "Orange",
    Priority.P4: "Yellow",
    Priority.P5: "Green",
}
_PRIORITY_LABELS = {
    Priority.P1: "High Priority",
    Priority.P2: "Moderate Priority",
    Priority.P3: "Minor Priority",
    Priority.P4: "Low Priority",
    Priority.P5: "Very Low Priority",
}


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (frozenset, set)):
        return sorted(value)
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return value


class _Serializable:
    def to_dict(self) -> dict:
        return {f.name: _plain(getattr(self, f.name)) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SubLoss(_Serializable):
    id: str
    parent_loss: str
    dal_level: DalLevel
    description: str
    pms: int

    def __post_init__(self):
        if not isinstance(self.dal_level, DalLevel):
            object.__setattr__(self, "dal_level", DalLevel.parse(self.dal_level))
        if isinstance(self.pms, bool) or not isinstance(self.pms, int) or self.pms < 1:
            raise DatasetError(f"sub-loss {self.id}: pms must be an integer >= 1, got {self.pms!r}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SubLoss":
        return cls(d["id"], d["parent_loss"], DalLevel.parse(d["dal_level"]),
                   d.get("description", ""), d["pms"])


@dataclass(frozen=True)
class Controller(_Serializable):
    id: str
    name: str
    cif: int
    hierarchy_level: int

    def __post_init__(self):
        for name in ("cif", "hierarchy_level"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise DatasetError(f"controller {self.id}: {name} must be an integer >= 1, got {v!r}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "Controller":
        return cls(d["id"], d.get("name", d["id"]), d["cif"], d["hierarchy_level"])


_SCORE_RANGES = {
    Criterion.OPERATIONAL_DISRUPTION: (1, 2, 3),
    Criterion.CRITICALITY: (1, 2, 3),
    Criterion.DETECTABILITY: (1, 2, 3),
    Criterion.STAKEHOLDER_EFFECT: (1, 2, 3),
    Criterion.LIKELIHOOD: (0, 1),
}


def allowed_scores(criterion: Criterion) -> tuple[int, ...]:
    return _SCORE_RANGES[Criterion(criterion)]


@dataclass(frozen=True)
class CriterionScores(_Serializable):
    """One expert's concern-ordered scores for a single UCA (3 = worst, likelihood 0/1)."""

    operational_disruption: int
    criticality: int
    detectability: int
    stakeholder_effect: int
    likelihood: int

    def __post_init__(self):
        for crit in CRITERIA:
            v = getattr(self, crit.value)
            if isinstance(v, bool) or not isinstance(v, int) or v not in _SCORE_RANGES[crit]:
                raise ValueError(f"{crit.value} must be one of {_SCORE_RANGES[crit]}, got {v!r}")

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, name) for name in CRITERION_NAMES)

    @classmethod
    def from_dict(cls, d: Mapping) -> "CriterionScores":
        return cls(*(d[name] for name in CRITERION_NAMES))


@dataclass(frozen=True)
class MeanScores(_Serializable):
    """Per-criterion arithmetic mean over several expert sheets."""

    operational_disruption: float
    criticality: float
    detectability: float
    stakeholder_effect: float
    likelihood: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in CRITERION_NAMES)

    @classmethod
    def from_dict(cls, d: Mapping) -> "MeanScores":
        return cls(*(float(d[name]) for name in CRITERION_NAMES))


@dataclass(frozen=True)
class UcaRecord(_Serializable):
    id: str
    controller_id: str
    description: str
    loss_links: frozenset[str]
    expert_scores: Mapping[str, CriterionScores] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "loss_links", frozenset(self.loss_links))
        # experts kept in sorted id order so serialization is canonical
        scores = {k: self.expert_scores[k] for k in sorted(self.expert_scores)}
        object.__setattr__(self, "expert_scores", MappingProxyType(scores))

    def __hash__(self):
        return hash((self.id, self.controller_id, self.description, self.loss_links,
                     tuple(self.expert_scores.items())))

    def __eq__(self, other):
        if not isinstance(other, UcaRecord):
            return NotImplemented
        return (self.id, self.controller_id, self.description, self.loss_links,
                dict(self.expert_scores)) == (other.id, other.controller_id, other.description,
                                              other.loss_links, dict(other.expert_scores))

    def with_scores(self, expert_scores: Mapping[str, CriterionScores]) -> "UcaRecord":
        return UcaRecord(self.id, self.controller_id, self.description, self.loss_links, expert_scores)

    @classmethod
    def from_dict(cls, d: Mapping) -> "UcaRecord":
        scores = {k: CriterionScores.from_dict(v) for k, v in d.get("expert_scores", {}).items()}
        return cls(d["id"], d["controller_id"], d.get("description", ""),
                   frozenset(d["loss_links"]), scores)


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Dataset(_Serializable):
    """Losses, controllers and UCAs (with embedded expert sheets), cross-linked.

    Construction rejects duplicate ids, duplicate PMS values and dangling
    references. Softer problems (a UCA with no loss link, CIF not following the
    hierarchy) are reported by :meth:`validate` instead.
    """

    losses: tuple[SubLoss, ...]
    controllers: tuple[Controller, ...]
    ucas: tuple[UcaRecord, ...]

    def __post_init__(self):
        for name in ("losses", "controllers", "ucas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name, items in (("sub-loss", self.losses), ("controller", self.controllers),
                            ("UCA", self.ucas)):
            seen = set()
            for item in items:
                if item.id in seen:
                    raise DatasetError(f"duplicate {name} id {item.id!r}")
                seen.add(item.id)
        by_pms: dict[int, str] = {}
        for loss in self.losses:
            if loss.pms in by_pms:
                raise DatasetError(f"duplicate pms {loss.pms} on sub-losses "
                                   f"{by_pms[loss.pms]} and {loss.id}")
            by_pms[loss.pms] = loss.id
        problems = []
        for uca in self.ucas:
            if uca.controller_id not in self.controller_map:
                problems.append(f"{uca.id}: unresolved controller {uca.controller_id!r}")
            for link in sorted(uca.loss_links - self.loss_map.keys()):
                problems.append(f"{uca.id}: unresolved sub-loss {link!r}")
        if problems:
            raise LinkError(problems)

    @property
    def loss_map(self) -> Mapping[str, SubLoss]:
        return {l.id: l for l in self.losses}

    @property
    def controller_map(self) -> Mapping[str, Controller]:
        return {c.id: c for c in self.controllers}

    @property
    def uca_ids(self) -> tuple[str, ...]:
        return tuple(u.id for u in self.ucas)

    @property
    def expert_ids(self) -> tuple[str, ...]:
        return tuple(sorted({e for u in self.ucas for e in u.expert_scores}))

    def validate(self) -> ValidationResult:
        out: list[str] = []
        cifs: dict[int, str] = {}
        for c in self.controllers:
            if c.cif in cifs:
                out.append(f"controllers {cifs[c.cif]} and {c.id} share cif {c.cif}")
            cifs.setdefault(c.cif, c.id)
        ordered = sorted(self.controllers, key=lambda c: c.hierarchy_level)
        for upper, lower in zip(ordered, ordered[1:]):
            if not upper.cif > lower.cif:
                out.append(f"cif must decrease down the hierarchy: {upper.id} (level "
                           f"{upper.hierarchy_level}, cif {upper.cif}) vs {lower.id} "
                           f"(level {lower.hierarchy_level}, cif {lower.cif})")
        for uca in self.ucas:
            out.extend(validate_record(uca, self).violations)
        return ValidationResult(tuple(out))

    def to_dict(self) -> dict:
        return {
            "losses": [l.to_dict() for l in self.losses],
            "controllers": [c.to_dict() for c in self.controllers],
            "ucas": [u.to_dict() for u in self.ucas],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Dataset":
        return cls(tuple(SubLoss.from_dict(x) for x in d["losses"]),
                   tuple(Controller.from_dict(x) for x in d["controllers"]),
                   tuple(UcaRecord.from_dict(x) for x in d["ucas"]))


def validate_record(record: UcaRecord, dataset: Dataset) -> ValidationResult:
    """Collect every invariant violation of ``record`` against ``dataset``."""
    out = []
    if not record.loss_links:
        out.append(f"{record.id}: no loss link")
    if record.controller_id not in dataset.controller_map:
        out.append(f"{record.id}: unresolved controller {record.controller_id!r}")
    losses = dataset.loss_map
    for link in sorted(record.loss_links):
        if link not in losses:
            out.append(f"{record.id}: unresolved sub-loss {link!r}")
    if not record.expert_scores:
        out.append(f"{record.id}: no expert scores")
    return ValidationResult(tuple(out))


Z_95 = 1.96


@dataclass(frozen=True)
class MonteCarloStats(_Serializable):
    uca_id: str
    initial_rank: int
    mean_rank: float
    rank_std: float
    ej_score: float
    ci_upper: float
    stability: Stability
    num_simulations: int

    def __post_init__(self):
        if not isinstance(self.stability, Stability):
            object.__setattr__(self, "stability", Stability(self.stability))
        if self.initial_rank < 1:
            raise ValueError("initial_rank must be >= 1")
        if self.num_simulations < 1:
            raise ValueError("num_simulations must be >= 1")
        if not self.rank_std >= 0:
            raise ValueError("rank_std must be >= 0")
        if self.ej_score != self.mean_rank + self.rank_std:
            raise ValueError(f"{self.uca_id}: ej_score must equal mean_rank + rank_std")
        if self.ci_upper != ci_upper_bound(self.mean_rank, self.rank_std, self.num_simulations):
            raise ValueError(f"{self.uca_id}: ci_upper inconsistent with mean_rank, rank_std, N")

    @classmethod
    def from_dict(cls, d: Mapping) -> "MonteCarloStats":
        return cls(d["uca_id"], d["initial_rank"], d["mean_rank"], d["rank_std"],
                   d["ej_score"], d["ci_upper"], Stability(d["stability"]), d["num_simulations"])


def ci_upper_bound(mean: float, std: float, n: int) -> float:
    return mean + Z_95 * std / math.sqrt(n)


@dataclass(frozen=True)
class PriorityRecord(_Serializable):
    uca_id: str
    pms: int | None
    cif: int | None
    sif: int
    ej: float
    ej_inverted: float
    sif_scaled: int
    ej_scaled: int
    priority: Priority

    def __post_init__(self):
        if not isinstance(self.priority, Priority):
            object.__setattr__(self, "priority", Priority(self.priority))
        if self.pms is not None and self.cif is not None and self.sif != self.pms * self.cif:
            raise ValueError(f"{self.uca_id}: sif {self.sif} != pms {self.pms} * cif {self.cif}")
        if self.ej_inverted < 0:
            raise ValueError(f"{self.uca_id}: ej_inverted must be >= 0")
        for name in ("sif_scaled", "ej_scaled"):
            if not 0 <= getattr(self, name) <= 4:
                raise ValueError(f"{self.uca_id}: {name} out of 0..4")

    @classmethod
    def from_dict(cls, d: Mapping) -> "PriorityRecord":
        return cls(d["uca_id"], d.get("pms"), d.get("cif"), d["sif"], d["ej"], d["ej_inverted"],
                   d["sif_scaled"], d["ej_scaled"], Priority(d["priority"]))

