import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newswire.ingest import (
    IngestStats,
    SourceSpec,
    StreamConfig,
    Taxonomy,
    language_gate,
    merge_streams,
    open_replay_stream,
    taxonomy_filter,
)
from newswire.model import StreamTag, UserRef, Tweet, parse_ts


def jl(tid, text="hello fire downtown", handle="user1", ts="2016-09-01T00:00:00Z",
       lang="en", **extra):
    obj = {
        "id": tid, "created_at": ts, "text": text, "lang": lang,
        "author": {"user_id": "u_" + handle, "handle": handle},
    }
    obj.update(extra)
    return json.dumps(obj)


def write_jsonl(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def mk(tid, text="some words", handle="h", lang="en", ts="2016-09-01T00:00:00Z"):
    return Tweet(id=tid, created_at=parse_ts(ts), text=text,
                 author=UserRef(user_id="u", handle=handle), lang=lang)


# ---------------------------------------------------------------- replay


def test_replay_three_lines_speed_zero(tmp_path):
    p = write_jsonl(tmp_path / "a.jsonl", [jl("1"), jl("2"), jl("3")])
    cfg = StreamConfig([SourceSpec(p, StreamTag.SAMPLE)], speed_factor=0)
    out = list(open_replay_stream(cfg))
    assert [t.id for t in out] == ["1", "2", "3"]
    assert all(t.stream_tag is StreamTag.SAMPLE for t in out)


def test_replay_counts_malformed_timestamp(tmp_path):
    bad = json.dumps({"id": "x", "created_at": "not-a-time", "text": "hi",
                      "author": {"user_id": "u", "handle": "h"}})
    p = write_jsonl(tmp_path / "a.jsonl", [jl("1"), bad, jl("2")])
    stats = IngestStats()
    cfg = StreamConfig([SourceSpec(p, StreamTag.SAMPLE)], speed_factor=0)
    out = list(open_replay_stream(cfg, stats))
    assert [t.id for t in out] == ["1", "2"]
    assert stats.malformed == 1


def test_replay_missing_file_fails_at_startup(tmp_path):
    cfg = StreamConfig([SourceSpec(str(tmp_path / "nope.jsonl"), StreamTag.SAMPLE)])
    with pytest.raises(FileNotFoundError):
        list(open_replay_stream(cfg))


def test_replay_merges_two_files_preserving_per_file_order(tmp_path):
    a = write_jsonl(tmp_path / "sample.jsonl", [
        jl("a1", ts="2016-09-01T00:00:00Z"),
        jl("a2", ts="2016-09-01T00:02:00Z"),
        jl("a3", ts="2016-09-01T00:01:00Z"),  # out of order inside the file
    ])
    b = write_jsonl(tmp_path / "filtered.jsonl", [
        jl("b1", ts="2016-09-01T00:01:30Z"),
        jl("b2", ts="2016-09-01T00:03:00Z"),
    ])
    cfg = StreamConfig([
        SourceSpec(a, StreamTag.SAMPLE), SourceSpec(b, StreamTag.FILTERED),
    ], speed_factor=0)
    ids = [t.id for t in open_replay_stream(cfg)]
    assert ids.index("a1") < ids.index("a2") < ids.index("a3")
    assert ids.index("b1") < ids.index("b2")
    assert set(ids) == {"a1", "a2", "a3", "b1", "b2"}


def test_replay_dedups_across_files(tmp_path):
    a = write_jsonl(tmp_path / "a.jsonl", [jl("1"), jl("2")])
    b = write_jsonl(tmp_path / "b.jsonl", [jl("2"), jl("3")])
    stats = IngestStats()
    cfg = StreamConfig([SourceSpec(a, StreamTag.SAMPLE), SourceSpec(b, StreamTag.FILTERED)])
    ids = [t.id for t in open_replay_stream(cfg, stats)]
    assert sorted(ids) == ["1", "2", "3"]
    assert stats.duplicates == 1


# ---------------------------------------------------------------- taxonomy


def test_taxonomy_parses_prefixed_lines():
    tax = Taxonomy.from_lines(["kw:explosion", "user:@Reuters", "", "# comment", "junk"])
    assert "explosion" in tax.keywords
    assert "reuters" in tax.accounts


def test_taxonomy_filter_by_account():
    tax = Taxonomy.from_lines(["user:reuters"])
    assert taxonomy_filter(mk("1", handle="reuters"), tax) is True


def test_taxonomy_filter_no_match():
    tax = Taxonomy.from_lines(["kw:explosion", "user:reuters"])
    assert taxonomy_filter(mk("1", text="nice weather here", handle="someone"), tax) is False


def test_taxonomy_filter_token_exact_not_substring():
    tax = Taxonomy.from_lines(["kw:explosion"])
    assert taxonomy_filter(mk("1", text="two explosions heard"), tax) is False
    assert taxonomy_filter(mk("2", text="an explosion heard"), tax) is True


# ---------------------------------------------------------------- merge


def test_merge_same_id_emitted_once():
    out = list(merge_streams([[mk("1")], [mk("1")]]))
    assert len(out) == 1


def test_merge_disjoint_all_emitted():
    out = list(merge_streams([[mk("1"), mk("2")], [mk("3")]]))
    assert sorted(t.id for t in out) == ["1", "2", "3"]


def test_merge_thousand_with_ten_percent_overlap():
    first = [mk(f"s{i}") for i in range(500)]
    # second stream repeats 100 ids from the first (10% of 1000 total)
    second = [mk(f"s{i}") for i in range(100)] + [mk(f"f{i}") for i in range(400)]
    out = list(merge_streams([first, second]))
    assert len(out) == 900


@given(st.lists(st.integers(min_value=0, max_value=40), max_size=60),
       st.lists(st.integers(min_value=0, max_value=40), max_size=60))
@settings(max_examples=60)
def test_merge_no_duplicate_ids(ids_a, ids_b):
    out = list(merge_streams([[mk(f"t{i}") for i in ids_a],
                              [mk(f"t{i}") for i in ids_b]]))
    seen = [t.id for t in out]
    assert len(seen) == len(set(seen))


# ---------------------------------------------------------------- language


def test_language_gate_en_passes():
    assert language_gate(mk("1", lang="en"))[0] is True


def test_language_gate_fr_drops():
    passed, lang = language_gate(mk("1", lang="fr"))
    assert passed is False
    assert lang == "fr"


def test_language_gate_und_dictionary_ratio():
    assert language_gate(mk("1", text="fire at the main station", lang="und"))[0] is True
    assert language_gate(mk("2", text="zxqv wplk njdra vbnme", lang="und"))[0] is False


def test_language_gate_disabled_passes_everything():
    assert language_gate(mk("1", lang="ja"), english_only=False)[0] is True
