"""Bundled lexicons, wordlists, and gazetteer access.

Everything here is loaded lazily from package data and cached for the
process lifetime. Files are plain text (one entry per line, '#' comments)
or tab-separated tables.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from importlib import resources as _ilr


def _data_path(name: str):
    return _ilr.files("newswire").joinpath("data", name)


@functools.lru_cache(maxsize=None)
def _read_lines(name: str) -> list[str]:
    text = _data_path(name).read_text(encoding="utf-8")
    out = []
    for line in text.splitlines():
        line = line.strip()
        # "# " opens a comment; a bare "#word" is data (hashtag cues)
        if not line or line == "#" or line.startswith("# "):
            continue
        out.append(line)
    return out


@functools.lru_cache(maxsize=None)
def wordset(name: str) -> frozenset[str]:
    """Lowercased set of entries from a one-per-line data file."""
    return frozenset(line.lower() for line in _read_lines(name))


def english_words() -> frozenset[str]:
    return wordset("english_words.txt")


@functools.lru_cache(maxsize=None)
def acronyms() -> frozenset[str]:
    # kept in original case; matching is case-sensitive on purpose
    return frozenset(_read_lines("acronyms.txt"))


@functools.lru_cache(maxsize=None)
def newsroom_caps() -> frozenset[str]:
    return frozenset(_read_lines("newsroom_caps.txt"))


def news_accounts() -> frozenset[str]:
    return wordset("news_accounts.txt")


def org_accounts() -> frozenset[str]:
    return wordset("org_accounts.txt")


def high_profile_accounts() -> frozenset[str]:
    return wordset("high_profile_accounts.txt")


def news_domains() -> frozenset[str]:
    return wordset("news_domains.txt")


def gov_domains() -> frozenset[str]:
    return wordset("gov_domains.txt")


def satire_domains() -> frozenset[str]:
    return wordset("satire_domains.txt")


def fake_news_domains() -> frozenset[str]:
    return wordset("fake_news_domains.txt")


def blog_domains() -> frozenset[str]:
    return wordset("blog_domains.txt")


def person_lexicon() -> frozenset[str]:
    return wordset("person_lexicon.txt")


def org_lexicon() -> frozenset[str]:
    return wordset("org_lexicon.txt")


def stopwords() -> frozenset[str]:
    return wordset("stopwords.txt")


def action_verbs() -> frozenset[str]:
    return wordset("action_verbs.txt")


@functools.lru_cache(maxsize=None)
def staleness_expressions() -> tuple[str, ...]:
    return tuple(line.lower() for line in _read_lines("staleness_expressions.txt"))


@functools.lru_cache(maxsize=None)
def temporal_expressions() -> tuple[str, ...]:
    return tuple(line.lower() for line in _read_lines("temporal_expressions.txt"))


@functools.lru_cache(maxsize=None)
def belief_lexicon() -> dict[str, tuple[str, ...]]:
    """Cue phrases grouped by belief category.

    File lines look like ``negation:this is a hoax``. Returns
    {"negation": (...), "question": (...), "support": (...)}.
    """
    groups: dict[str, list[str]] = {"negation": [], "question": [], "support": []}
    for line in _read_lines("belief_lexicon.txt"):
        cat, _, phrase = line.partition(":")
        cat = cat.strip().lower()
        phrase = phrase.strip().lower()
        if cat in groups and phrase:
            groups[cat].append(phrase)
    return {k: tuple(v) for k, v in groups.items()}


def default_taxonomy_lines() -> list[str]:
    return _read_lines("default_taxonomy.txt")


# ---------------------------------------------------------------------------
# gazetteer


@dataclass(frozen=True)
class Place:
    name: str
    granularity: str  # continent | country | state | city | landmark
    lat: float
    lon: float
    population: int
    country: str = ""
    admin1: str = ""
    aliases: tuple[str, ...] = field(default_factory=tuple)
    abbreviations: tuple[str, ...] = field(default_factory=tuple)

    def all_names(self) -> tuple[str, ...]:
        return (self.name,) + self.aliases


@functools.lru_cache(maxsize=None)
def gazetteer() -> tuple[Place, ...]:
    places = []
    for line in _read_lines("gazetteer.tsv"):
        parts = line.split("\t")
        if len(parts) < 9:
            parts = parts + [""] * (9 - len(parts))
        name, gran, lat, lon, pop, country, admin1, aliases, abbr = parts[:9]
        places.append(
            Place(
                name=name,
                granularity=gran,
                lat=float(lat),
                lon=float(lon),
                population=int(pop),
                country=country,
                admin1=admin1,
                aliases=tuple(a for a in aliases.split("|") if a),
                abbreviations=tuple(a for a in abbr.split("|") if a),
            )
        )
    return tuple(places)


@functools.lru_cache(maxsize=None)
def gazetteer_by_name() -> dict[str, tuple[Place, ...]]:
    """Lowercased name/alias -> places carrying it (ambiguity preserved)."""
    index: dict[str, list[Place]] = {}
    for p in gazetteer():
        for n in p.all_names():
            index.setdefault(n.lower(), []).append(p)
    return {k: tuple(v) for k, v in index.items()}


@functools.lru_cache(maxsize=None)
def hashtag_aliases() -> dict[str, str]:
    out = {}
    for line in _read_lines("hashtag_aliases.tsv"):
        tag, _, name = line.partition("\t")
        if tag and name:
            out[tag.strip().lower()] = name.strip()
    return out
