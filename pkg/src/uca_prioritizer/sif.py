"""Severity-impact factor: PMS from linked sub-losses, CIF from the issuing controller."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import DuplicateLevel, EmptyLinks, UnresolvedController, UnresolvedLink
from .model import Controller, Dataset, SubLoss, UcaRecord, _Serializable


@dataclass(frozen=True)
class SifResult(_Serializable):
    uca_id: str
    pms: int
    governing_sub_loss: str
    cif: int
    sif: int

    def __post_init__(self):
        if self.sif != self.pms * self.cif:
            raise ValueError(f"{self.uca_id}: sif must equal pms * cif")

    @classmethod
    def from_dict(cls, d):
        return cls(d["uca_id"], d["pms"], d["governing_sub_loss"], d["cif"], d["sif"])


def _as_map(items, key="id"):
    if isinstance(items, Mapping):
        return items
    return {getattr(x, key): x for x in items}


def assign_pms(uca: UcaRecord, losses) -> tuple[int, str]:
    """Return the highest PMS among the UCA's sub-loss links and the sub-loss carrying it."""
    if not uca.loss_links:
        raise EmptyLinks(f"{uca.id} has no loss links")
    table: Mapping[str, SubLoss] = _as_map(losses)
    best = None
    for link in sorted(uca.loss_links):
        try:
            loss = table[link]
        except KeyError:
            raise UnresolvedLink(f"{uca.id}: sub-loss {link!r} not found") from None
        if best is None or loss.pms > best.pms:
            best = loss
    return best.pms, best.id


def lookup_cif(uca: UcaRecord, controllers) -> int:
    table: Mapping[str, Controller] = _as_map(controllers)
    try:
        return table[uca.controller_id].cif
    except KeyError:
        raise UnresolvedController(f"{uca.id}: controller {uca.controller_id!r} not found") from None


def derive_cif_ranking(levels: Mapping[str, int]) -> dict[str, int]:
    """Rank controllers by hierarchy level: the top level (1) gets the largest CIF, the bottom gets 1.

    ``levels`` maps controller id to hierarchy level.
    """
    values = list(levels.values())
    if len(set(values)) != len(values):
        dupes = sorted({v for v in values if values.count(v) > 1})
        raise DuplicateLevel(f"hierarchy levels must be distinct; repeated: {dupes}")
    n = len(values)
    order = sorted(levels, key=levels.__getitem__)
    return {cid: n - rank for rank, cid in enumerate(order)}


def compute_sif(pms: int, cif: int) -> int:
    return pms * cif


def sif_table(dataset: Dataset) -> list[SifResult]:
    losses, controllers = dataset.loss_map, dataset.controller_map
    out = []
    for uca in dataset.ucas:
        pms, governing = assign_pms(uca, losses)
        cif = lookup_cif(uca, controllers)
        out.append(SifResult(uca.id, pms, governing, cif, compute_sif(pms, cif)))
    return out
