"""Quantity index and condition scoring.

The index maps canonical unit -> sorted value keys -> postings, with values
compared as exact decimals. Scoring converts to float64 at the boundary; the
per-sentence score is the mean over all the sentence's quantities of the
unit-gated condition score, so a sentence is rewarded for matching values
and diluted by unrelated ones.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from . import _kernels as K
from .core import Condition, Quantity, Sentence, UnitCatalog

COND_CODE = {
    Condition.EQ: K.COND_EQ,
    Condition.LT: K.COND_LT,
    Condition.GT: K.COND_GT,
}


def phi_equal(vx, vi) -> float:
    """exp(-|vx - vi|): 1.0 at equality, decaying with absolute distance."""
    return K.phi_scalar(K.COND_EQ, float(vx), float(vi))


def phi_less(vx, vi) -> float:
    """0 unless vi < vx; then vi/vx when vi > 0, else exponential decay."""
    return K.phi_scalar(K.COND_LT, float(vx), float(vi))


def phi_greater(vx, vi) -> float:
    """0 unless vi > vx; then vx/vi when vx > 0, else exponential decay."""
    return K.phi_scalar(K.COND_GT, float(vx), float(vi))


def _relative_decay(vx: float, vi: float) -> float:
    return math.exp(-abs(vx - vi) / max(abs(vx), 1.0))


def _rel_equal(vx, vi) -> float:
    return _relative_decay(float(vx), float(vi))


def _rel_less(vx, vi) -> float:
    vx, vi = float(vx), float(vi)
    if vi >= vx:
        return 0.0
    if vi > 0.0:
        return vi / vx
    return _relative_decay(vx, vi)


def _rel_greater(vx, vi) -> float:
    vx, vi = float(vx), float(vi)
    if vi <= vx:
        return 0.0
    if vx > 0.0:
        return vx / vi
    return _relative_decay(vx, vi)


@dataclass(frozen=True)
class PhiSet:
    """One family of condition scoring functions."""

    name: str
    equal: Callable[[float, float], float]
    less: Callable[[float, float], float]
    greater: Callable[[float, float], float]
    # batched kernels only exist for the default set; others run the
    # per-sentence Python path
    kernel_batched: bool = False

    def for_condition(self, condition: Condition) -> Callable[[float, float], float]:
        if condition is Condition.EQ:
            return self.equal
        if condition is Condition.LT:
            return self.less
        return self.greater


PHI_SETS: dict[str, PhiSet] = {}


def register_phi_set(phi_set: PhiSet) -> None:
    PHI_SETS[phi_set.name] = phi_set


def get_phi_set(name: str) -> PhiSet:
    try:
        return PHI_SETS[name]
    except KeyError:
        raise ValueError(
            f"unknown phi set {name!r}; registered: {sorted(PHI_SETS)}"
        ) from None


DEFAULT_PHI = "ratio-decay"

register_phi_set(
    PhiSet("ratio-decay", phi_equal, phi_less, phi_greater, kernel_batched=True)
)
register_phi_set(PhiSet("relative-decay", _rel_equal, _rel_less, _rel_greater))


def satisfies(condition: Condition, vx: Decimal, vi: Decimal) -> bool:
    """Exact decimal test of a sentence value against the query condition."""
    if condition is Condition.EQ:
        return vi == vx
    if condition is Condition.LT:
        return vi < vx
    return vi > vx


def convert_value(
    value: Decimal, from_unit: str, to_unit: str, catalog: UnitCatalog
) -> Optional[Decimal]:
    """Convert between same-family units via catalog factors, else None."""
    src = catalog.get(from_unit)
    dst = catalog.get(to_unit)
    if src is None or dst is None or src.family != dst.family:
        return None
    if src.conversion_factor is None or dst.conversion_factor is None:
        return None
    return value * src.conversion_factor / dst.conversion_factor


def quantity_score(
    quantities: Iterable[Quantity],
    condition: Condition,
    query_quantity: Quantity,
    phi_set: Optional[PhiSet] = None,
    *,
    catalog: Optional[UnitCatalog] = None,
    convert_units: bool = False,
) -> float:
    """Per-sentence quantity score.

    Mean over every quantity of the sentence of the unit-gated condition
    score: quantities with a different unit contribute 0 but still count in
    the denominator. Summation runs in storage order with a single final
    division, matching the batched kernel exactly.
    """
    phi_set = phi_set or PHI_SETS[DEFAULT_PHI]
    phi = phi_set.for_condition(condition)
    quantities = tuple(quantities)
    if not quantities:
        return 0.0
    vx = float(query_quantity.value)
    total = 0.0
    for q in quantities:
        if q.unit == query_quantity.unit:
            total += phi(vx, float(q.value))
        elif convert_units and catalog is not None:
            converted = convert_value(q.value, q.unit, query_quantity.unit, catalog)
            if converted is not None:
                total += phi(vx, float(converted))
    return total / len(quantities)


class QuantityIndex:
    """Unit -> sorted decimal value -> postings, plus per-sentence lookup.

    A posting is (sent_id, quantity count of the sentence); one entry per
    value occurrence, so a value repeated across sentences keeps both.
    """

    def __init__(self, sentences: Iterable[Sentence]):
        self.sentence_quantities: dict[str, tuple[Quantity, ...]] = {}
        staged: dict[str, dict[Decimal, list[tuple[str, int]]]] = {}
        for sentence in sentences:
            if sentence.sent_id in self.sentence_quantities:
                raise ValueError(f"duplicate sent_id: {sentence.sent_id}")
            self.sentence_quantities[sentence.sent_id] = sentence.quantities
            n = len(sentence.quantities)
            for q in sentence.quantities:
                staged.setdefault(q.unit, {}).setdefault(q.value, []).append(
                    (sentence.sent_id, n)
                )
        self._values: dict[str, list[Decimal]] = {}
        self._postings: dict[str, list[list[tuple[str, int]]]] = {}
        for unit, by_value in staged.items():
            keys = sorted(by_value)
            self._values[unit] = keys
            self._postings[unit] = [sorted(by_value[v]) for v in keys]
        self._build_arrays()

    def _build_arrays(self) -> None:
        # flat float64/int32 mirrors for the batched kernels
        self._sent_order = list(self.sentence_quantities)
        self._sent_pos = {sid: i for i, sid in enumerate(self._sent_order)}
        self._unit_code: dict[str, int] = {}
        values: list[float] = []
        unit_ids: list[int] = []
        offsets = [0]
        for sid in self._sent_order:
            for q in self.sentence_quantities[sid]:
                code = self._unit_code.setdefault(q.unit, len(self._unit_code))
                unit_ids.append(code)
                values.append(float(q.value))
            offsets.append(len(values))
        self._flat_values = np.asarray(values, dtype=np.float64)
        self._flat_units = np.asarray(unit_ids, dtype=np.int32)
        self._flat_offsets = np.asarray(offsets, dtype=np.int64)

    def units(self) -> list[str]:
        return sorted(self._values)

    def values_for(self, unit: str) -> list[Decimal]:
        return list(self._values.get(unit, ()))

    def quantities_of(self, sent_id: str) -> tuple[Quantity, ...]:
        return self.sentence_quantities.get(sent_id, ())

    def candidates_for(
        self, condition: Condition, query_quantity: Quantity
    ) -> Iterator[tuple[Decimal, str, int]]:
        """Postings satisfying (condition, value) on the query's unit.

        Yields (value, sent_id, quantity count) in ascending value order.
        EQ is an exact decimal key lookup; LT/GT are strict range scans.
        Unknown units yield nothing.
        """
        unit = query_quantity.unit
        keys = self._values.get(unit)
        if not keys:
            return
        postings = self._postings[unit]
        vx = query_quantity.value
        if condition is Condition.EQ:
            i = bisect.bisect_left(keys, vx)
            if i < len(keys) and keys[i] == vx:
                for sid, count in postings[i]:
                    yield keys[i], sid, count
            return
        if condition is Condition.LT:
            span = range(0, bisect.bisect_left(keys, vx))
        else:
            span = range(bisect.bisect_right(keys, vx), len(keys))
        for i in span:
            for sid, count in postings[i]:
                yield keys[i], sid, count

    def _candidate_ids(self, condition: Condition, query_quantity: Quantity):
        # Whole-collection scoring candidates. For EQ every posting of the
        # unit qualifies: the equality phi is positive for any same-unit
        # value, so the unit restriction is the only sound pruning.
        unit = query_quantity.unit
        if unit not in self._values:
            return []
        if condition is Condition.EQ:
            seen: dict[str, None] = {}
            for plist in self._postings[unit]:
                for sid, _ in plist:
                    seen.setdefault(sid)
            return list(seen)
        seen = {}
        for _, sid, _ in self.candidates_for(condition, query_quantity):
            seen.setdefault(sid)
        return list(seen)

    def score_sentences(
        self,
        sent_ids: list[str],
        condition: Condition,
        query_quantity: Quantity,
        phi_set: Optional[PhiSet] = None,
        *,
        catalog: Optional[UnitCatalog] = None,
        convert_units: bool = False,
    ) -> list[float]:
        """Quantity scores for an explicit list of sentences."""
        phi_set = phi_set or PHI_SETS[DEFAULT_PHI]
        if not sent_ids:
            return []
        if phi_set.kernel_batched and not convert_units:
            return self._score_batch(sent_ids, condition, query_quantity)
        return [
            quantity_score(
                self.quantities_of(sid),
                condition,
                query_quantity,
                phi_set,
                catalog=catalog,
                convert_units=convert_units,
            )
            for sid in sent_ids
        ]

    def _score_batch(
        self, sent_ids: list[str], condition: Condition, query_quantity: Quantity
    ) -> list[float]:
        positions = [self._sent_pos.get(sid, -1) for sid in sent_ids]
        total = 0
        slices = []
        for pos in positions:
            if pos < 0:
                slices.append((0, 0))
                continue
            s = int(self._flat_offsets[pos])
            e = int(self._flat_offsets[pos + 1])
            slices.append((s, e))
            total += e - s
        values = np.empty(total, dtype=np.float64)
        units = np.empty(total, dtype=np.int32)
        offsets = np.empty(len(sent_ids) + 1, dtype=np.int64)
        offsets[0] = 0
        cursor = 0
        for i, (s, e) in enumerate(slices):
            width = e - s
            values[cursor : cursor + width] = self._flat_values[s:e]
            units[cursor : cursor + width] = self._flat_units[s:e]
            cursor += width
            offsets[i + 1] = cursor
        out = np.zeros(len(sent_ids), dtype=np.float64)
        unit_code = self._unit_code.get(query_quantity.unit, -1)
        K.qs_batch(
            COND_CODE[condition],
            float(query_quantity.value),
            unit_code,
            values,
            units,
            offsets,
            out,
        )
        return out.tolist()

    def score_collection(
        self,
        condition: Condition,
        query_quantity: Quantity,
        phi_set: Optional[PhiSet] = None,
        *,
        catalog: Optional[UnitCatalog] = None,
        convert_units: bool = False,
    ) -> dict[str, float]:
        """Index-path quantity scores for every sentence that can score > 0.

        Sentences absent from the result score exactly 0: LT/GT outside the
        strict range contribute nothing, and non-matching units are gated
        off. Per-sentence values equal the brute-force evaluation bit for
        bit because both run the same summation order.
        """
        if convert_units:
            # conversion widens the candidate set to the whole family;
            # scoring falls back to the per-sentence path
            sids = list(self.sentence_quantities)
        else:
            sids = self._candidate_ids(condition, query_quantity)
        scores = self.score_sentences(
            sids,
            condition,
            query_quantity,
            phi_set,
            catalog=catalog,
            convert_units=convert_units,
        )
        return dict(zip(sids, scores))


def build_quantity_index(sentences: Iterable[Sentence]) -> QuantityIndex:
    return QuantityIndex(sentences)
