"""Read losses, controllers, UCAs and expert score sheets into a :class:`Dataset`.

Two encodings are accepted, both UTF-8:

* four CSV files with header rows (``losses.csv``, ``controllers.csv``,
  ``ucas.csv``, ``scores.csv``);
* one ``dataset.json`` object holding the same rows under the keys
  ``losses``, ``controllers``, ``ucas`` and ``scores``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import FileError, FormatError, LinkError, NoExperts, UnknownIntensity
from .model import (
    CRITERIA,
    CRITERION_NAMES,
    Controller,
    Criterion,
    CriterionScores,
    DalLevel,
    Dataset,
    MeanScores,
    SubLoss,
    UcaRecord,
)
from .sif import derive_cif_ranking

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ("sub_loss_id", "parent", "dal", "description", "pms")
CONTROLLER_COLUMNS = ("controller_id", "name", "hierarchy_level", "cif")
UCA_COLUMNS = ("uca_id", "controller_id", "description", "loss_links")
SCORE_COLUMNS = ("uca_id", "expert_id") + CRITERION_NAMES

# Concern-ordered: 3 is always the worst case for the criterion.
INTENSITY_LABELS: dict[Criterion, dict[str, int]] = {
    Criterion.OPERATIONAL_DISRUPTION: {
        "High Impact": 3,
        "Medium Impact": 2,
        "Low Impact": 1,
    },
    Criterion.CRITICALITY: {
        "High Risk": 3,
        "Moderate Risk": 2,
        "Low Risk": 1,
    },
    Criterion.DETECTABILITY: {
        "Low Detectability": 3,
        "Moderate Detectability": 2,
        "High Detectability": 1,
    },
    Criterion.STAKEHOLDER_EFFECT: {
        "Significant Impact": 3,
        "Moderate Impact": 2,
        "Minimal Impact": 1,
    },
    Criterion.LIKELIHOOD: {
        "Not mitigated by pre-existing regulations and likely to occur": 1,
        "Mitigated by pre-existing regulations and unlikely to occur": 0,
    },
}


def _label_key(text: str) -> str:
    return " ".join(text.split()).rstrip(".").casefold()


_LABEL_LOOKUP = {
    crit: {_label_key(label): score for label, score in labels.items()}
    for crit, labels in INTENSITY_LABELS.items()
}


def score_intensity(criterion: Criterion | str, label: str) -> int:
    """Map a canonical intensity label to its numeric score.

    Matching ignores case, repeated whitespace and a trailing full stop.

    >>> score_intensity(Criterion.DETECTABILITY, "low detectability")
    3
    """
    crit = Criterion(criterion)
    try:
        return _LABEL_LOOKUP[crit][_label_key(label)]
    except KeyError:
        raise UnknownIntensity(
            f"{label!r} is not an intensity of {crit.value}; expected one of "
            f"{list(INTENSITY_LABELS[crit])}") from None


def aggregate_experts(scores: Mapping[str, CriterionScores]) -> MeanScores:
    """Per-criterion arithmetic mean over all expert sheets for one UCA."""
    if not scores:
        raise NoExperts("at least one expert sheet is required")
    sheets = list(scores.values())
    n = len(sheets)
    # fsum is exactly rounded, so the result does not depend on expert order
    return MeanScores(*(math.fsum(getattr(s, name) for s in sheets) / n for name in CRITERION_NAMES))


@dataclass(frozen=True)
class DatasetManifest:
    losses_path: Path
    controllers_path: Path
    ucas_path: Path
    scores_path: Path | None = None

    def __post_init__(self):
        for name in ("losses_path", "controllers_path", "ucas_path", "scores_path"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, Path(v))

    @property
    def paths(self) -> tuple[Path, ...]:
        return tuple(p for p in (self.losses_path, self.controllers_path, self.ucas_path,
                                 self.scores_path) if p is not None)

    @classmethod
    def from_dir(cls, directory) -> "DatasetManifest":
        d = Path(directory)
        scores = d / "scores.csv"
        return cls(d / "losses.csv", d / "controllers.csv", d / "ucas.csv",
                   scores if scores.exists() else None)


# --------------------------------------------------------------------------- rows

def _read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileError(f"{path}: no such file") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise FileError(f"{path}: {exc}") from exc


def _csv_rows(path: Path, required: Iterable[str]) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, row)`` for each non-blank data row of a CSV file."""
    text = _read_text(path)
    reader = csv.DictReader(text.splitlines(keepends=True))
    header = reader.fieldnames
    if header is None:
        return
    header = [h.strip() for h in header]
    reader.fieldnames = header
    missing = [c for c in required if c not in header]
    if missing:
        raise FormatError(f"missing column(s) {', '.join(missing)}", path, 1)
    for row in reader:
        if None in row:
            raise FormatError("too many fields", path, reader.line_num)
        if all(not (v or "").strip() for v in row.values()):
            continue
        yield reader.line_num, {k: (v or "").strip() for k, v in row.items()}


_INT_RE = re.compile(r"[+-]?\d+")


def _parse_int(value, field_name: str, path, line) -> int:
    if isinstance(value, bool):
        raise FormatError(f"{field_name}: expected an integer, got {value!r}", path, line)
    if isinstance(value, int):
        return value
    if isinstance(value, str) and _INT_RE.fullmatch(value.strip()):
        return int(value)
    raise FormatError(f"{field_name}: expected an integer, got {value!r}", path, line)


def _parse_float(value, field_name: str, path, line) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        out = float(value)
    else:
        try:
            out = float(str(value).strip())
        except ValueError:
            raise FormatError(f"{field_name}: expected a number, got {value!r}", path, line) from None
    if not math.isfinite(out):
        raise FormatError(f"{field_name}: value must be finite, got {value!r}", path, line)
    return out


def _score_cell(crit: Criterion, value, path, line) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        score = value
    else:
        text = str(value).strip()
        if _INT_RE.fullmatch(text):
            score = int(text)
        else:
            try:
                return score_intensity(crit, text)
            except UnknownIntensity as exc:
                raise FormatError(str(exc), path, line) from None
    allowed = (0, 1) if crit is Criterion.LIKELIHOOD else (1, 2, 3)
    if score not in allowed:
        raise FormatError(f"{crit.value}: score {score} outside {allowed}", path, line)
    return score


def _split_links(value) -> frozenset[str]:
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = str(value).split(";")
    return frozenset(s.strip() for s in items if s.strip() and s.strip().upper() != "N/A")


# ----------------------------------------------------------------------- builders

def _build_losses(rows, path) -> list[SubLoss]:
    out = []
    for line, row in rows:
        try:
            dal = DalLevel.parse(row["dal"])
        except ValueError as exc:
            raise FormatError(str(exc), path, line) from None
        pms = _parse_int(row["pms"], "pms", path, line)
        if pms < 1:
            raise FormatError(f"pms must be >= 1, got {pms}", path, line)
        out.append(SubLoss(str(row["sub_loss_id"]).strip(), str(row["parent"]).strip(), dal,
                           str(row.get("description", "")), pms))
    return out


def _build_controllers(rows, path) -> list[Controller]:
    parsed = []
    for line, row in rows:
        level = _parse_int(row["hierarchy_level"], "hierarchy_level", path, line)
        if level < 1:
            raise FormatError(f"hierarchy_level must be >= 1, got {level}", path, line)
        raw_cif = row.get("cif")
        cif = None
        if raw_cif not in (None, ""):
            cif = _parse_int(raw_cif, "cif", path, line)
            if cif < 1:
                raise FormatError(f"cif must be >= 1, got {cif}", path, line)
        cid = str(row["controller_id"]).strip()
        parsed.append((cid, str(row.get("name") or cid), level, cif))

    if any(cif is None for *_, cif in parsed):
        levels = {cid: level for cid, _, level, _ in parsed}
        derived = derive_cif_ranking(levels)
    else:
        derived = {}
    out = []
    for cid, name, level, cif in parsed:
        if cif is None:
            cif = derived[cid]
        elif cid in derived and derived[cid] != cif:
            warnings.warn(f"controller {cid}: explicit cif {cif} differs from hierarchy-derived "
                          f"{derived[cid]}; keeping the explicit value", stacklevel=3)
        out.append(Controller(cid, name, cif, level))
    return out


def _build_ucas(rows, path) -> list[tuple[int, UcaRecord]]:
    out = []
    for line, row in rows:
        out.append((line, UcaRecord(str(row["uca_id"]).strip(), str(row["controller_id"]).strip(),
                                    str(row.get("description", "")),
                                    _split_links(row["loss_links"]))))
    return out


def _build_scores(rows, path) -> dict[str, dict[str, tuple[int, CriterionScores]]]:
    sheets: dict[str, dict[str, tuple[int, CriterionScores]]] = {}
    for line, row in rows:
        uca_id = str(row["uca_id"]).strip()
        expert = str(row["expert_id"]).strip()
        if not expert:
            raise FormatError("expert_id is empty", path, line)
        values = [_score_cell(c, row[c.value], path, line) for c in CRITERIA]
        per_uca = sheets.setdefault(uca_id, {})
        if expert in per_uca:
            raise FormatError(f"duplicate score sheet for ({uca_id}, {expert}); first seen on "
                              f"line {per_uca[expert][0]}", path, line)
        per_uca[expert] = (line, CriterionScores(*values))
    return sheets


def _assemble(losses, controllers, ucas_with_lines, sheets, ucas_path, scores_path) -> Dataset:
    uca_ids = {u.id for _, u in ucas_with_lines}
    problems = []
    for uca_id, by_expert in sheets.items():
        if uca_id not in uca_ids:
            for expert, (line, _) in by_expert.items():
                problems.append(f"{scores_path}:{line}: score row for unknown UCA {uca_id!r}")
    controller_ids = {c.id for c in controllers}
    loss_ids = {l.id for l in losses}
    for line, uca in ucas_with_lines:
        if uca.controller_id not in controller_ids:
            problems.append(f"{ucas_path}:{line}: {uca.id} references unknown controller "
                            f"{uca.controller_id!r}")
        for link in sorted(uca.loss_links - loss_ids):
            problems.append(f"{ucas_path}:{line}: {uca.id} references unknown sub-loss {link!r}")
    if problems:
        raise LinkError(problems)

    ucas = [u.with_scores({e: s for e, (_, s) in sheets.get(u.id, {}).items()})
            for _, u in ucas_with_lines]
    if not ucas:
        warnings.warn(f"{ucas_path}: no UCAs in dataset", stacklevel=3)
    return Dataset(tuple(losses), tuple(controllers), tuple(ucas))


def parse_dataset(manifest: DatasetManifest) -> Dataset:
    """Parse the CSV files named by ``manifest`` into a cross-linked :class:`Dataset`.

    Raises :class:`FileError` for unreadable files, :class:`FormatError` (with
    the line number) for malformed rows and :class:`LinkError` listing every
    dangling id.
    """
    losses = _build_losses(_csv_rows(manifest.losses_path, LOSS_COLUMNS), manifest.losses_path)
    controllers = _build_controllers(
        _csv_rows(manifest.controllers_path, CONTROLLER_COLUMNS[:3]), manifest.controllers_path)
    ucas = _build_ucas(_csv_rows(manifest.ucas_path, UCA_COLUMNS), manifest.ucas_path)
    sheets = {}
    if manifest.scores_path is not None:
        sheets = _build_scores(_csv_rows(manifest.scores_path, SCORE_COLUMNS), manifest.scores_path)
    logger.debug("parsed %d sub-losses, %d controllers, %d UCAs", len(losses), len(controllers),
                 len(ucas))
    return _assemble(losses, controllers, ucas, sheets, manifest.ucas_path, manifest.scores_path)


def _json_rows(doc: Mapping, key: str, required, path) -> Iterator[tuple[int, dict]]:
    rows = doc.get(key, [])
    if not isinstance(rows, list):
        raise FormatError(f"{key!r} must be an array", path)
    for i, row in enumerate(rows):
        # "line" is the 1-based element index inside the array for JSON input
        if not isinstance(row, dict):
            raise FormatError(f"{key}[{i}]: expected an object", path, i + 1)
        missing = [c for c in required if c not in row]
        if missing:
            raise FormatError(f"{key}[{i}]: missing field(s) {', '.join(missing)}", path, i + 1)
        yield i + 1, row


def load_dataset_json(path) -> Dataset:
    """Parse a single ``dataset.json`` file."""
    path = Path(path)
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, path, exc.lineno) from None
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object", path, 1)
    for key in ("losses", "controllers", "ucas"):
        if key not in doc:
            raise FormatError(f"missing key {key!r}", path)
    losses = _build_losses(_json_rows(doc, "losses", LOSS_COLUMNS, path), path)
    controllers = _build_controllers(
        _json_rows(doc, "controllers", CONTROLLER_COLUMNS[:3], path), path)
    ucas = _build_ucas(_json_rows(doc, "ucas", UCA_COLUMNS, path), path)
    sheets = _build_scores(_json_rows(doc, "scores", SCORE_COLUMNS, path), path)
    return _assemble(losses, controllers, ucas, sheets, path, path)


def dataset_to_json(dataset: Dataset) -> dict:
    """Inverse of :func:`load_dataset_json` (numeric scores, explicit cif)."""
    scores = []
    for u in dataset.ucas:
        for expert, s in u.expert_scores.items():
            scores.append({"uca_id": u.id, "expert_id": expert, **s.to_dict()})
    return {
        "losses": [{"sub_loss_id": l.id, "parent": l.parent_loss, "dal": l.dal_level.value,
                    "description": l.description, "pms": l.pms} for l in dataset.losses],
        "controllers": [{"controller_id": c.id, "name": c.name,
                         "hierarchy_level": c.hierarchy_level, "cif": c.cif}
                        for c in dataset.controllers],
        "ucas": [{"uca_id": u.id, "controller_id": u.controller_id, "description": u.description,
                  "loss_links": sorted(u.loss_links)} for u in dataset.ucas],
        "scores": scores,
    }


def load_reference_ej(ucas_path) -> dict[str, float]:
    """Read the optional ``ej`` column of a ucas.csv file.

    Published case-study EJ values can be carried alongside the UCAs and used
    in place of a fresh simulation (``--ej-source dataset``).
    """
    out = {}
    for line, row in _csv_rows(Path(ucas_path), ("uca_id", "ej")):
        if row["ej"]:
            out[row["uca_id"]] = _parse_float(row["ej"], "ej", ucas_path, line)
    return out
