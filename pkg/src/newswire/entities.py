"""Heuristic named-entity extraction.

Capitalization plus bundled lexicons, no trained tagger. Downstream
consumers only need surface frequencies, so precision beats recall here.
"""
from __future__ import annotations

import re

from newswire import resources

PERSON = "person"
ORG = "org"
PLACE = "place"
OTHER = "other"

_WORD_RE = re.compile(r"@[A-Za-z_][A-Za-z0-9_]*|[#$][A-Za-z_][A-Za-z0-9_]*|[A-Za-z][A-Za-z'’.\-]*")
_SENT_BREAK = set(".!?:;\n")

# lowercase words allowed inside a span when bridging two capitalized tokens
_CONNECTORS = {"of", "the", "de", "da", "del", "la", "le", "al", "upon", "on", "and"}


def _is_cap(token: str) -> bool:
    return token[:1].isupper()


def _strip_possessive(token: str) -> str:
    for suf in ("'s", "’s", "'", "’"):
        if token.endswith(suf) and len(token) > len(suf):
            return token[: -len(suf)]
    return token


def _tokens_with_breaks(text: str):
    """Yield (token, sentence_initial) pairs plus None markers for gaps."""
    out = []
    last_end = 0
    initial = True
    for m in _WORD_RE.finditer(text):
        gap = text[last_end : m.start()]
        if any(ch in _SENT_BREAK for ch in gap):
            initial = True
        if gap.strip() and not initial:
            # punctuation like commas or parens does not start a sentence
            # but it does break a span
            broke = any(not ch.isspace() for ch in gap)
        else:
            broke = bool(gap.strip())
        out.append((m.group(0), initial, broke))
        initial = False
        last_end = m.end()
    return out


def _spans(text: str) -> list[tuple[list[str], bool]]:
    """Contiguous capitalized token runs, with sentence-initial flag."""
    toks = _tokens_with_breaks(text)
    spans: list[tuple[list[str], bool]] = []
    cur: list[str] = []
    cur_initial = False
    pending_connectors: list[str] = []

    def flush():
        nonlocal cur, pending_connectors
        if cur:
            spans.append((cur, cur_initial))
        cur = []
        pending_connectors = []

    for token, initial, broke in toks:
        if token.startswith(("@", "#", "$")):
            flush()
            continue
        word = _strip_possessive(token)
        if broke or initial:
            flush()
        if _is_cap(word):
            if pending_connectors and cur:
                cur.extend(pending_connectors)
            pending_connectors = []
            if not cur:
                cur_initial = initial
            cur.append(word)
        elif cur and word.lower() in _CONNECTORS and len(pending_connectors) < 2:
            pending_connectors.append(word)
        else:
            flush()
    flush()
    return spans


def _classify(surface: str) -> str | None:
    low = surface.lower()
    if low in resources.gazetteer_by_name():
        return PLACE
    if low in resources.person_lexicon():
        return PERSON
    if low in resources.org_lexicon():
        return ORG
    return None


def _keep_other(tokens: list[str], sentence_initial: bool) -> bool:
    # Capitalized runs of ordinary words ("This Is So Cool", a sentence
    # opener like "Fire") are style, not names. Keep a span as an unknown
    # entity only if some token is not a dictionary word or known acronym.
    words = resources.english_words()
    acro = resources.acronyms()
    for t in tokens:
        low = t.lower().strip(".")
        if t.isupper() and t in acro:
            continue
        if low not in words:
            return True
    return False


def _match_spans(tokens: list[str], sentence_initial: bool) -> list[tuple[str, str]]:
    """Longest-substring lexicon matching within one capitalized span."""
    n = len(tokens)
    full = " ".join(tokens)
    kind = _classify(full)
    if kind:
        return [(full, kind)]
    # try sub-spans, longest first, leftmost first
    for length in range(n - 1, 0, -1):
        for start in range(0, n - length + 1):
            sub = tokens[start : start + length]
            if sub[0].lower() in _CONNECTORS or sub[-1].lower() in _CONNECTORS:
                continue
            kind = _classify(" ".join(sub))
            if kind:
                out = []
                if start > 0:
                    out.extend(_match_spans(tokens[:start], sentence_initial))
                out.append((" ".join(sub), kind))
                if start + length < n:
                    out.extend(_match_spans(tokens[start + length :], False))
                return out
    if _keep_other(tokens, sentence_initial):
        return [(full, OTHER)]
    return []


def extract_entities(text: str) -> list[tuple[str, str]]:
    """Return (surface, kind) pairs, each surface at most once, in order.

    kind is one of person, org, place, other. Mentioned handles that
    belong to known org or news accounts come back as org entities.
    """
    results: list[tuple[str, str]] = []
    seen: set[str] = set()

    def emit(surface: str, kind: str):
        key = surface.lower()
        if key not in seen:
            seen.add(key)
            results.append((surface, kind))

    for tokens, initial in _spans(text):
        for surface, kind in _match_spans(tokens, initial):
            emit(surface, kind)

    org_handles = resources.org_accounts() | resources.news_accounts()
    for m in re.finditer(r"@([A-Za-z_][A-Za-z0-9_]*)", text):
        handle = m.group(1).lower()
        if handle in org_handles:
            emit(handle, ORG)
    return results


def entity_surfaces(text: str) -> set[str]:
    """Lowercased surfaces, convenience for OOV exclusion."""
    return {s.lower() for s, _ in extract_entities(text)}
