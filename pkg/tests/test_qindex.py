"""Quantity index: phi functions, per-sentence scores, candidate scans.

Expected numbers are frozen from independent hand evaluation, not from the
implementation under test.
"""

import math
import random
from decimal import Decimal

import pytest

from quantrank.core import Condition, Quantity, Sentence
from quantrank.qindex import (
    PhiSet,
    QuantityIndex,
    build_quantity_index,
    convert_value,
    get_phi_set,
    phi_equal,
    phi_greater,
    phi_less,
    quantity_score,
    register_phi_set,
    satisfies,
)

EXP_MINUS_5 = 0.006737946999085467
EXP_MINUS_HALF = 0.6065306597126334
EXP_MINUS_4 = 0.01831563888873418


class TestPhiEqual:
    def test_exact_match(self):
        assert phi_equal(100, 100) == 1.0

    def test_gap_of_five(self):
        assert phi_equal(22, 17) == pytest.approx(EXP_MINUS_5, rel=1e-12)

    def test_gap_of_half(self):
        assert phi_equal(0.9, 1.4) == pytest.approx(EXP_MINUS_HALF, rel=1e-12)

    def test_symmetric(self):
        assert phi_equal(3, 8) == phi_equal(8, 3)

    def test_decimal_inputs_accepted(self):
        assert phi_equal(Decimal("100"), Decimal("100.0")) == 1.0


class TestPhiGreater:
    def test_ratio_when_satisfied(self):
        assert phi_greater(500, 600) == pytest.approx(0.8333333333333334, rel=1e-12)
        assert phi_greater(500, 600) == 500.0 / 600.0

    def test_zero_when_violated(self):
        assert phi_greater(500, 400) == 0.0
        assert phi_greater(500, 500) == 0.0  # strict bound

    def test_negative_fallback(self):
        # -1 > -5 satisfies GT; ratio undefined for non-positive values
        assert phi_greater(-5, -1) == pytest.approx(EXP_MINUS_4, rel=1e-12)

    def test_zero_query_value_fallback(self):
        assert phi_greater(0, 3) == pytest.approx(math.exp(-3), rel=1e-12)


class TestPhiLess:
    def test_ratio_when_satisfied(self):
        assert phi_less(200, 132) == 132.0 / 200.0
        assert phi_less(200, 199.99) == pytest.approx(0.99995, rel=1e-12)

    def test_zero_when_violated(self):
        assert phi_less(200, 236.5) == 0.0
        assert phi_less(200, 200) == 0.0  # strict bound

    def test_negative_fallback(self):
        assert phi_less(-1, -5) == pytest.approx(EXP_MINUS_4, rel=1e-12)


class TestPhiProperties:
    def test_greater_strictly_decreasing(self):
        vx = 137.0
        points = [vx * (1 + k / 7.0) for k in range(1, 30)]
        scores = [phi_greater(vx, vi) for vi in points]
        assert all(a > b for a, b in zip(scores, scores[1:]))

    def test_less_strictly_increasing(self):
        vx = 137.0
        points = [vx * k / 30.0 for k in range(1, 30)]
        scores = [phi_less(vx, vi) for vi in points]
        assert all(a < b for a, b in zip(scores, scores[1:]))

    def test_range_zero_one(self):
        rng = random.Random(5)
        for _ in range(500):
            vx = rng.uniform(0.001, 1e6)
            vi = rng.uniform(0.001, 1e6)
            for phi in (phi_equal, phi_less, phi_greater):
                assert 0.0 <= phi(vx, vi) <= 1.0


class TestSatisfies:
    def test_eq_exact_decimal(self):
        assert satisfies(Condition.EQ, Decimal("17"), Decimal("17.0"))
        assert not satisfies(Condition.EQ, Decimal("17"), Decimal("17.01"))

    def test_strict_bounds(self):
        assert not satisfies(Condition.LT, Decimal(5), Decimal(5))
        assert not satisfies(Condition.GT, Decimal(5), Decimal(5))
        assert satisfies(Condition.LT, Decimal(5), Decimal("4.999"))
        assert satisfies(Condition.GT, Decimal(5), Decimal("5.001"))


def _sentence(sid, *pairs):
    quantities = tuple(
        Quantity(Decimal(str(v)), unit, (i * 4, i * 4 + 3))
        for i, (unit, v) in enumerate(pairs)
    )
    return Sentence(sent_id=sid, doc_id=sid.split("#")[0], text="t " * 40, quantities=quantities)


IPHONE_XR = _sentence("xr#0", ("euro", "236.5"), ("euro", "132.0"))


class TestQuantityScore:
    def test_two_quantity_sentence_lt(self):
        # (0 + 132/200) / 2 = 0.33
        qs = quantity_score(
            IPHONE_XR.quantities,
            Condition.LT,
            Quantity(Decimal(200), "euro", (0, 3)),
        )
        assert qs == pytest.approx(0.33, abs=1e-12)
        assert qs == (0.0 + 132.0 / 200.0) / 2.0

    def test_unit_gate(self):
        qs = quantity_score(
            IPHONE_XR.quantities,
            Condition.LT,
            Quantity(Decimal(200), "dollar", (0, 3)),
        )
        assert qs == 0.0

    def test_exact_eq_single_quantity(self):
        s = _sentence("a#0", ("cent-per-share", "17"))
        qs = quantity_score(
            s.quantities, Condition.EQ, Quantity(Decimal(17), "cent-per-share", (0, 2))
        )
        assert qs == 1.0

    def test_empty_quantities(self):
        assert (
            quantity_score((), Condition.EQ, Quantity(Decimal(1), "euro", (0, 1)))
            == 0.0
        )

    def test_dilution_by_unrelated_quantities(self):
        s = _sentence("a#0", ("euro", "132"), ("kilogram", "2"), ("percent", "5"))
        qs = quantity_score(
            s.quantities, Condition.LT, Quantity(Decimal(200), "euro", (0, 3))
        )
        assert qs == (132.0 / 200.0) / 3.0

    def test_bounded_unit_interval(self):
        rng = random.Random(9)
        for _ in range(200):
            pairs = [
                ("euro", str(round(rng.uniform(0.1, 500), 2)))
                for _ in range(rng.randrange(1, 5))
            ]
            s = _sentence("a#0", *pairs)
            for cond in Condition:
                qs = quantity_score(
                    s.quantities, cond, Quantity(Decimal(250), "euro", (0, 3))
                )
                assert 0.0 <= qs <= 1.0


class TestPhiRegistry:
    def test_default_and_alternate_registered(self):
        assert get_phi_set("ratio-decay").kernel_batched
        alt = get_phi_set("relative-decay")
        assert not alt.kernel_batched

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            get_phi_set("unheard-of")

    def test_relative_decay_scale_invariance(self):
        alt = get_phi_set("relative-decay")
        # a 3-unit gap matters less at large magnitudes
        small = alt.equal(10.0, 13.0)
        large = alt.equal(10.0e6, 10.0e6 + 3)
        assert large > small

    def test_custom_registration_used_in_scoring(self):
        flat = PhiSet("flat", lambda x, i: 0.5, lambda x, i: 0.5, lambda x, i: 0.5)
        register_phi_set(flat)
        try:
            qs = quantity_score(
                IPHONE_XR.quantities,
                Condition.LT,
                Quantity(Decimal(200), "euro", (0, 3)),
                get_phi_set("flat"),
            )
            assert qs == 0.5
        finally:
            from quantrank.qindex import PHI_SETS

            PHI_SETS.pop("flat", None)


class TestIndexStructure:
    def test_shared_value_one_key_two_postings(self):
        a = _sentence("a#0", ("euro", "132.0"))
        b = _sentence("b#0", ("euro", "132"))
        index = build_quantity_index([a, b])
        assert index.values_for("euro") == [Decimal("132.0")]
        postings = list(
            index.candidates_for(
                Condition.EQ, Quantity(Decimal(132), "euro", (0, 3))
            )
        )
        assert [(sid, count) for _, sid, count in postings] == [("a#0", 1), ("b#0", 1)]

    def test_two_quantity_sentence_under_both_keys(self):
        index = build_quantity_index([IPHONE_XR])
        assert index.values_for("euro") == [Decimal("132.0"), Decimal("236.5")]
        for value in ("132.0", "236.5"):
            postings = list(
                index.candidates_for(
                    Condition.EQ, Quantity(Decimal(value), "euro", (0, 3))
                )
            )
            assert postings == [(Decimal(value), "xr#0", 2)]

    def test_empty_corpus(self):
        index = build_quantity_index([])
        assert index.units() == []
        assert index.values_for("euro") == []

    def test_duplicate_sent_id_rejected(self):
        a = _sentence("a#0", ("euro", "1"))
        with pytest.raises(ValueError):
            build_quantity_index([a, a])

    def test_quantities_of(self):
        index = build_quantity_index([IPHONE_XR])
        assert index.quantities_of("xr#0") == IPHONE_XR.quantities
        assert index.quantities_of("missing") == ()


class TestCandidatesFor:
    @pytest.fixture()
    def b1_index(self, cent_collection):
        return build_quantity_index(cent_collection.sentences)

    def _ids(self, index, condition, value):
        q = Quantity(Decimal(str(value)), "cent-per-share", (0, 2))
        return sorted({sid for _, sid, _ in index.candidates_for(condition, q)})

    def test_gt_26_strict(self, b1_index):
        assert self._ids(b1_index, Condition.GT, 26) == ["s6", "s7"]  # 35, 84

    def test_lt_smallest_value_empty(self, b1_index):
        assert self._ids(b1_index, Condition.LT, 0.9) == []

    def test_eq_repeated_value_two_sentences(self, b1_index):
        assert self._ids(b1_index, Condition.EQ, 17) == ["s2", "s3"]

    def test_unknown_unit_empty(self, b1_index):
        q = Quantity(Decimal(1), "yen", (0, 1))
        assert list(b1_index.candidates_for(Condition.GT, q)) == []

    def test_ascending_value_order(self, b1_index):
        q = Quantity(Decimal(1000), "cent-per-share", (0, 4))
        values = [v for v, _, _ in b1_index.candidates_for(Condition.LT, q)]
        assert values == sorted(values)


def _oracle_qs(quantities, cond, vx, unit):
    """Independent brute-force quantity score with plain math.exp."""
    if not quantities:
        return 0.0
    total = 0.0
    for q in quantities:
        if q.unit != unit:
            continue
        vi = float(q.value)
        if cond is Condition.EQ:
            total += math.exp(-abs(vx - vi))
        elif cond is Condition.LT:
            if vi < vx:
                total += vi / vx if vi > 0 else math.exp(-abs(vx - vi))
        else:
            if vi > vx:
                total += vx / vi if vx > 0 else math.exp(-abs(vx - vi))
    return total / len(quantities)


class TestIndexScoringOracle:
    def _random_corpus(self, rng, n):
        units = ["euro", "dollar", "kilogram", "percent"]
        sentences = []
        for i in range(n):
            pairs = [
                (rng.choice(units), str(round(rng.uniform(0.01, 2000), 2)))
                for _ in range(rng.randrange(0, 5))
            ]
            sentences.append(_sentence(f"r{i}#0", *pairs))
        return sentences

    def test_score_collection_matches_brute_force(self):
        rng = random.Random(101)
        sentences = self._random_corpus(rng, 300)
        index = build_quantity_index(sentences)
        for cond in Condition:
            vx = round(rng.uniform(1, 2000), 2)
            query = Quantity(Decimal(str(vx)), "euro", (0, 4))
            scored = index.score_collection(cond, query)
            for s in sentences:
                expected = _oracle_qs(s.quantities, cond, float(vx), "euro")
                assert scored.get(s.sent_id, 0.0) == expected

    def test_score_sentences_matches_brute_force(self):
        rng = random.Random(103)
        sentences = self._random_corpus(rng, 120)
        index = build_quantity_index(sentences)
        sids = [s.sent_id for s in sentences]
        query = Quantity(Decimal("350.5"), "dollar", (0, 5))
        for cond in Condition:
            got = index.score_sentences(sids, cond, query)
            for s, value in zip(sentences, got):
                assert value == _oracle_qs(s.quantities, cond, 350.5, "dollar")

    def test_absent_sentences_score_zero(self):
        index = build_quantity_index([IPHONE_XR])
        query = Quantity(Decimal(200), "euro", (0, 3))
        assert index.score_sentences(["ghost#0"], Condition.LT, query) == [0.0]

    def test_python_path_equals_kernel_path(self):
        rng = random.Random(107)
        sentences = self._random_corpus(rng, 150)
        index = build_quantity_index(sentences)
        sids = [s.sent_id for s in sentences]
        query = Quantity(Decimal("99.9"), "percent", (0, 4))
        default = get_phi_set("ratio-decay")
        # same functions, batched kernel disabled: must agree bit for bit
        unbatched = PhiSet("u", default.equal, default.less, default.greater)
        for cond in Condition:
            fast = index.score_sentences(sids, cond, query)
            slow = index.score_sentences(sids, cond, query, unbatched)
            assert fast == slow


class TestUnitConversion:
    def test_convert_value_same_family(self, catalog):
        assert convert_value(Decimal(2), "kilometer", "meter", catalog) == Decimal(2000)
        assert convert_value(Decimal(500), "gram", "kilogram", catalog) == Decimal("0.5")

    def test_convert_value_cross_family_none(self, catalog):
        assert convert_value(Decimal(1), "kilometer", "kilogram", catalog) is None

    def test_convert_value_no_factor_none(self, catalog):
        # currencies carry no conversion factors
        assert convert_value(Decimal(1), "euro", "dollar", catalog) is None

    def test_quantity_score_with_conversion(self, catalog):
        s = _sentence("a#0", ("gram", "500"))
        query = Quantity(Decimal(1), "kilogram", (0, 1))
        off = quantity_score(s.quantities, Condition.LT, query, catalog=catalog)
        on = quantity_score(
            s.quantities, Condition.LT, query, catalog=catalog, convert_units=True
        )
        assert off == 0.0
        assert on == 0.5  # 0.5 kg < 1 kg -> ratio 0.5/1

    def test_score_collection_with_conversion(self, catalog):
        s = _sentence("a#0", ("gram", "500"))
        index = build_quantity_index([s])
        query = Quantity(Decimal(1), "kilogram", (0, 1))
        scored = index.score_collection(
            Condition.LT, query, catalog=catalog, convert_units=True
        )
        assert scored["a#0"] == 0.5
