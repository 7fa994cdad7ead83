"""Rule-based extraction of values, units, conditions and concepts.

Works on raw text with regular expressions and catalog surface lookups, no
syntactic parsing. The same machinery parses both corpus sentences and
queries; queries additionally get a condition defaulting rule and stopword
filtering for the term set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from typing import NamedTuple, Optional

from .core import (
    DIMENSIONLESS,
    Condition,
    ConditionLexicon,
    Quantity,
    QuantityQuery,
    UnitCatalog,
)

# Alphanumeric runs plus standalone currency/percent symbols. Lowercasing is
# applied by tokenize; spans always refer to the original text.
TOKEN_RE = re.compile(r"[^\W_]+|[$€£¥¢%]")

# Closed-class tokens dropped from query term sets. Deliberately small: the
# term index itself never filters, this only trims parsed queries.
QUERY_STOPWORDS = frozenset(
    """
    a an the that this these those which what who whom whose
    is are was were be been being am do does did has have had
    will would shall should can could may might must
    it its they them their he she his her him we us our you your i me my
    and or to in on of for with at by from as there here
    """.split()
)

# Tokens that never start or extend a concept span. Stopwords plus a small
# verb/adverb lexicon standing in for part-of-speech tagging.
CONCEPT_SKIP = QUERY_STOPWORDS | frozenset(
    """
    says said say saying reports reported reporting announces announced
    costs cost costing sells sold selling retails retailed lists listed
    listing weighs weighed weighing stores stored storing reaches reached
    reaching holds held holding measures measured runs ran running ships
    shipped shipping amounts amounted amounting totals totaled totalled
    prices priced pricing charges charged pays paid paying rose fell
    dropped gained gains gaining earns earned hits hit hitting tops topped
    topping offers offered delivers delivered features featured carries
    carried boasts boasted clocks clocked rates rated posts posted goes
    went gets got makes made takes took comes came gives gave sees saw
    uses used starts started lost loses losing loss losses better worse
    best worst higher lower expected estimated compared whereas versus
    now currently reportedly about around approximately nearly roughly
    just only typically often still already again also up down out off
    more less than most least very while when where how why if but so
    """.split()
)

_MAGNITUDES = {"k": 3, "m": 6, "bn": 9, "thousand": 3, "million": 6, "billion": 9}

VALUE_RE = re.compile(
    r"""
    (?P<sign>-)?
    (?P<digits>\d{1,3}(?:,\d{3})+|\d+)
    (?P<frac>\.\d+)?
    (?P<mag>
        (?:k|m|bn)(?![0-9a-z])
        | [\ \t]+(?:thousand|million|billion)\b
    )?
    """,
    re.IGNORECASE | re.VERBOSE,
)

# Characters that must not immediately precede a value match. Blocks digits
# inside identifiers ("A14") and decimals already consumed ("2.5.3").
_LEFT_GUARD = set("0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_.")

# Filler words tolerated between a value and its suffix unit surface
# ("0.9 of a cent per share").
_GLUE_RE = re.compile(r"(?:of|a|an)[\ \t]+", re.IGNORECASE)

_MAX_CONCEPT_TOKENS = 4


class ValueMatch(NamedTuple):
    value: Decimal
    start: int
    end: int


class TokenSpan(NamedTuple):
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens plus currency/percent symbols."""
    return [t.casefold() for t in TOKEN_RE.findall(text)]


def token_spans(text: str) -> list[TokenSpan]:
    return [TokenSpan(m.group(), m.start(), m.end()) for m in TOKEN_RE.finditer(text)]


def _decimal_from_match(m: re.Match) -> Decimal:
    digits = m.group("digits").replace(",", "")
    frac = m.group("frac") or ""
    value = Decimal(digits + frac)
    if m.group("sign"):
        value = -value
    mag = m.group("mag")
    if mag:
        value = value.scaleb(_MAGNITUDES[mag.strip().casefold()])
        if value == value.to_integral_value():
            # plain integral form, so str() never shows an exponent
            value = Decimal(int(value))
    return value


def parse_value(text: str, pos: int = 0) -> Optional[ValueMatch]:
    """Parse a numeric value anchored at pos.

    Handles plain integers and decimals, comma digit grouping, magnitude
    suffixes (6k, 2bn, 300 million) and a leading minus. No scientific
    notation, fractions or spelled-out numbers.
    """
    m = VALUE_RE.match(text, pos)
    if m is None or m.end() == m.start():
        return None
    if m.start() > 0 and text[m.start() - 1] in _LEFT_GUARD:
        return None
    return ValueMatch(_decimal_from_match(m), m.start(), m.end())


def find_values(text: str) -> list[ValueMatch]:
    """All value matches in reading order, left-guard applied."""
    out: list[ValueMatch] = []
    pos = 0
    while pos < len(text):
        m = VALUE_RE.search(text, pos)
        if m is None:
            break
        if m.end() == m.start():
            pos = m.start() + 1
            continue
        if m.start() > 0 and text[m.start() - 1] in _LEFT_GUARD:
            pos = m.start() + 1
            continue
        out.append(ValueMatch(_decimal_from_match(m), m.start(), m.end()))
        pos = m.end()
    return out


def _surface_matches_at(text: str, pos: int, surface: str) -> bool:
    end = pos + len(surface)
    if end > len(text):
        return False
    if text[pos:end].casefold() != surface:
        return False
    # word boundary after alphabetic surfaces so "cent" does not eat "cents"
    if surface[-1].isalpha() and end < len(text) and text[end].isalpha():
        return False
    return True


def _match_suffix(text: str, pos: int, catalog: UnitCatalog):
    j = pos
    while j < len(text) and text[j].isspace():
        j += 1
    positions = [j]
    k = j
    for _ in range(2):
        glue = _GLUE_RE.match(text, k)
        if glue is None:
            break
        k = glue.end()
        positions.append(k)
    for p in positions:
        for surface, canonical in catalog.suffixes:
            if _surface_matches_at(text, p, surface):
                return canonical, (p, p + len(surface))
    return None


def _match_prefix(text: str, pos: int, catalog: UnitCatalog):
    j = pos
    while j > 0 and text[j - 1].isspace():
        j -= 1
    for surface, canonical in catalog.prefixes:
        start = j - len(surface)
        if start < 0:
            continue
        if text[start:j].casefold() != surface:
            continue
        if surface[0].isalpha() and start > 0 and text[start - 1].isalpha():
            continue
        return canonical, (start, j)
    return None


def resolve_unit(
    text: str, value_span: tuple[int, int], catalog: UnitCatalog
) -> tuple[str, Optional[tuple[int, int]]]:
    """Resolve the unit surface adjacent to a value span.

    Longest catalog surface wins; suffix and prefix positions are both
    tried, whitespace between value and surface is tolerated. No match
    yields the reserved dimensionless unit.
    """
    suffix = _match_suffix(text, value_span[1], catalog)
    prefix = _match_prefix(text, value_span[0], catalog)
    if suffix and prefix:
        s_len = suffix[1][1] - suffix[1][0]
        p_len = prefix[1][1] - prefix[1][0]
        return suffix if s_len > p_len else prefix
    chosen = suffix or prefix
    if chosen is None:
        return DIMENSIONLESS, None
    return chosen


def _phrase_pattern(phrase: str) -> re.Pattern:
    return re.compile(
        r"\b" + r"\s+".join(re.escape(w) for w in phrase.split()) + r"\b",
        re.IGNORECASE,
    )


_PATTERN_CACHE: dict[str, re.Pattern] = {}


def _condition_matches(text: str, lexicon: ConditionLexicon):
    found: list[tuple[int, int, Condition]] = []
    for phrase, cond in lexicon.ordered:
        pattern = _PATTERN_CACHE.get(phrase)
        if pattern is None:
            pattern = _phrase_pattern(phrase)
            _PATTERN_CACHE[phrase] = pattern
        for m in pattern.finditer(text):
            found.append((m.start(), m.end(), cond))
    # longest phrase wins at a position; later overlapping matches drop out
    found.sort(key=lambda t: (t[0], -(t[1] - t[0])))
    accepted: list[tuple[int, int, Condition]] = []
    for start, end, cond in found:
        if any(start < a_end and end > a_start for a_start, a_end, _ in accepted):
            continue
        accepted.append((start, end, cond))
    return accepted


def detect_condition(
    text: str, lexicon: ConditionLexicon, value_start: Optional[int] = None
) -> Optional[tuple[Condition, tuple[int, int]]]:
    """Find the condition phrase governing a query.

    Of all dictionary matches the one ending nearest before the value wins;
    with no preceding match the leftmost match is used. Returns None when
    nothing matches; callers default to EQ when a quantity is present.
    """
    matches = _condition_matches(text, lexicon)
    if not matches:
        return None
    if value_start is not None:
        preceding = [m for m in matches if m[1] <= value_start]
        if preceding:
            start, end, cond = max(preceding, key=lambda m: m[1])
            return cond, (start, end)
    start, end, cond = matches[0]
    return cond, (start, end)


@dataclass(frozen=True)
class Extraction:
    """Per-sentence extraction output.

    concepts holds (concept text, quantity index) pairs; a quantity without
    a detected concept simply has no pair.
    """

    quantities: tuple[Quantity, ...]
    concepts: tuple[tuple[str, int], ...] = ()
    conditions: tuple[tuple[Condition, tuple[int, int]], ...] = ()


def _has_upper(token: str) -> bool:
    return any(c.isupper() for c in token)


def _previous_token(tokens: list[TokenSpan], position: int) -> Optional[int]:
    lo, hi = 0, len(tokens)
    while lo < hi:
        mid = (lo + hi) // 2
        if tokens[mid].end <= position:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1 if lo > 0 else None


def _is_model_number(text: str, tokens: list[TokenSpan], vm: ValueMatch) -> bool:
    # Bare integers right after a capitalized token are product identifiers
    # ("iPhone 11", "Boeing 747"), not quantities.
    prev = _previous_token(tokens, vm.start)
    if prev is None:
        return False
    tok = tokens[prev]
    gap = text[tok.end : vm.start]
    if gap.strip():
        return False
    return _has_upper(tok.text)


def _in_spans(tok: TokenSpan, spans: list[tuple[int, int]]) -> bool:
    return any(tok.start < end and tok.end > start for start, end in spans)


def _concept_like(
    tokens: list[TokenSpan], i: int, forbidden: list[tuple[int, int]]
) -> bool:
    # tokens inside any value or unit span can never be concept words,
    # so a unit surface is not mistaken for the thing it measures
    if _in_spans(tokens[i], forbidden):
        return False
    tok = tokens[i].text
    if tok.isdigit():
        # numeric tokens ride along only as model numbers after a
        # capitalized neighbor
        return i > 0 and _has_upper(tokens[i - 1].text)
    if not any(c.isalpha() for c in tok):
        return False
    return tok.casefold() not in CONCEPT_SKIP


def _concept_for(
    text: str,
    tokens: list[TokenSpan],
    left_boundary: int,
    forbidden: list[tuple[int, int]],
) -> Optional[str]:
    anchor = _previous_token(tokens, left_boundary)
    if anchor is None:
        return None
    i = anchor
    while i >= 0 and not _concept_like(tokens, i, forbidden):
        i -= 1
    if i < 0:
        return None
    right = i
    count = 1
    # the run itself only grows over whitespace; skipping happens above
    while (
        count < _MAX_CONCEPT_TOKENS
        and i > 0
        and _concept_like(tokens, i - 1, forbidden)
        and not text[tokens[i - 1].end : tokens[i].start].strip()
    ):
        i -= 1
        count += 1
    return text[tokens[i].start : tokens[right].end]


def extract_sentence(
    text: str, catalog: UnitCatalog, lexicon: Optional[ConditionLexicon] = None
) -> Extraction:
    """Extract quantities and their concepts from one sentence."""
    tokens = token_spans(text)
    quantities: list[Quantity] = []
    for vm in find_values(text):
        unit, unit_span = resolve_unit(text, (vm.start, vm.end), catalog)
        if unit == DIMENSIONLESS and _is_model_number(text, tokens, vm):
            continue
        quantities.append(Quantity(vm.value, unit, (vm.start, vm.end), unit_span))
    # concepts come second so every quantity's spans are known and banned
    forbidden = [q.span for q in quantities] + [
        q.unit_span for q in quantities if q.unit_span is not None
    ]
    concepts: list[tuple[str, int]] = []
    for q_index, quantity in enumerate(quantities):
        left = quantity.span[0]
        if quantity.unit_span is not None and quantity.unit_span[0] < left:
            left = quantity.unit_span[0]
        concept = _concept_for(text, tokens, left, forbidden)
        if concept:
            concepts.append((concept, q_index))
    conditions: tuple = ()
    if lexicon is not None:
        conditions = tuple(
            (cond, (start, end))
            for start, end, cond in _condition_matches(text, lexicon)
        )
    return Extraction(tuple(quantities), tuple(concepts), conditions)


def parse_query(
    raw_text: str,
    catalog: UnitCatalog,
    lexicon: ConditionLexicon,
    qid: str = "q",
) -> QuantityQuery:
    """Decompose a query into terms, condition and quantity.

    The first value with a recognized unit becomes the query quantity (first
    value overall when none has a unit). The condition phrase nearest before
    the value wins, defaulting to EQ when a value is present. Terms are the
    remaining tokens minus stopwords; without a value the query is term-only
    and the EQ default is suppressed.
    """
    tokens = token_spans(raw_text)
    resolved = [
        (vm, *resolve_unit(raw_text, (vm.start, vm.end), catalog))
        for vm in find_values(raw_text)
    ]
    chosen: Optional[ValueMatch] = None
    unit = DIMENSIONLESS
    unit_span: Optional[tuple[int, int]] = None
    for vm, u, u_span in resolved:
        if u != DIMENSIONLESS:
            chosen, unit, unit_span = vm, u, u_span
            break
    if chosen is None:
        # the model-number guard only applies to unitless values, same as
        # sentence extraction: "iPhone 11" is a name, "Phone 11 dollars" is not
        for vm, _, _ in resolved:
            if not _is_model_number(raw_text, tokens, vm):
                chosen = vm
                break

    condition: Optional[Condition] = None
    quantity: Optional[Quantity] = None
    excluded_spans: list[tuple[int, int]] = []
    if chosen is not None:
        detected = detect_condition(raw_text, lexicon, value_start=chosen.start)
        if detected is not None:
            condition, cond_span = detected
            excluded_spans.append(cond_span)
        else:
            condition = Condition.EQ
        quantity = Quantity(chosen.value, unit, (chosen.start, chosen.end), unit_span)
        excluded_spans.append((chosen.start, chosen.end))
        if unit_span is not None:
            excluded_spans.append(unit_span)

    terms = []
    for tok in tokens:
        if any(tok.start < end and tok.end > start for start, end in excluded_spans):
            continue
        lowered = tok.text.casefold()
        if lowered in QUERY_STOPWORDS:
            continue
        terms.append(lowered)
    return QuantityQuery(
        qid=qid,
        raw_text=raw_text,
        terms=tuple(terms),
        condition=condition,
        quantity=quantity,
    )
