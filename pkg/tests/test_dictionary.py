import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mboe import (
    build_interlanguage_map,
    build_mention_dictionary,
    load_dictionary,
    load_interlanguage_map,
    load_mention_dictionary,
)
from mboe.dictionary import read_anchor_records, read_sitelink_records
from mboe.errors import FormatError, IngestionError, UnknownMentionError


class TestBuildMentionDictionary:
    def test_commonness_is_count_ratio(self, apple_dict):
        # independent oracle: 3 / (3 + 1) and 1 / (3 + 1)
        assert apple_dict.commonness("apple", "Apple Inc.") == pytest.approx(3 / 4)
        assert apple_dict.commonness("apple", "Apple (food)") == pytest.approx(1 / 4)

    def test_single_candidate_probability_one(self, apple_dict):
        assert apple_dict.commonness("paris", "Paris") == 1.0

    def test_casefold_merges_keys(self):
        d = build_mention_dictionary(
            [("Apple", "Apple Inc.", 2), ("apple", "Apple Inc.", 1)], "en"
        )
        assert len(d) == 1
        (cand,) = d.candidates("apple")
        assert cand.count == 3

    def test_repeated_pairs_aggregate(self):
        d = build_mention_dictionary(
            [("a", "T", 1), ("a", "T", 2), ("a", "U", 3)], "en"
        )
        assert d.commonness("a", "T") == pytest.approx(0.5)

    def test_non_candidate_title_is_zero(self, apple_dict):
        assert apple_dict.commonness("apple", "Banana") == 0.0

    def test_unknown_mention_raises(self, apple_dict):
        with pytest.raises(UnknownMentionError):
            apple_dict.commonness("banana", "Banana")

    def test_min_count_drops_candidates(self):
        d = build_mention_dictionary(
            [("a", "T", 5), ("a", "U", 1)], "en", min_count=2
        )
        assert [c.title for c in d.candidates("a")] == ["T"]

    def test_min_count_zero_is_identity(self):
        records = [("a", "T", 5), ("a", "U", 1)]
        assert build_mention_dictionary(records, "en", min_count=0) == build_mention_dictionary(
            records, "en"
        )

    def test_malformed_record_arity(self):
        with pytest.raises(IngestionError):
            build_mention_dictionary([("a", "T")], "en")  # type: ignore[list-item]

    def test_nonpositive_count_rejected(self):
        with pytest.raises(IngestionError):
            build_mention_dictionary([("a", "T", 0)], "en")

    def test_non_integer_count_rejected(self):
        with pytest.raises(IngestionError):
            build_mention_dictionary([("a", "T", "3")], "en")  # type: ignore[list-item]

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["a", "b", "Cd", "東京", "ŁÓDŹ"]),
                st.sampled_from(["T1", "T2", "T3"]),
                st.integers(min_value=1, max_value=9),
            ),
            min_size=1,
            max_size=30,
        ),
        st.randoms(),
    )
    @settings(max_examples=100)
    def test_order_independence(self, records, rnd):
        shuffled = list(records)
        rnd.shuffle(shuffled)
        assert build_mention_dictionary(records, "en") == build_mention_dictionary(shuffled, "en")

    @given(
        st.dictionaries(
            st.text(min_size=1, max_size=8),
            st.dictionaries(
                st.text(min_size=1, max_size=6),
                st.integers(min_value=1, max_value=100),
                min_size=1,
                max_size=4,
            ),
            min_size=1,
            max_size=10,
        )
    )
    @settings(max_examples=100)
    def test_commonness_distribution(self, table):
        records = [
            (mention, title, count)
            for mention, by_title in table.items()
            for title, count in by_title.items()
        ]
        d = build_mention_dictionary(records, "en")
        for mention in d.mentions():
            cands = d.candidates(mention)
            total = sum(c.commonness for c in cands)
            assert total == pytest.approx(1.0, abs=1e-9)
            assert all(0.0 <= c.commonness <= 1.0 for c in cands)
            assert all(c.count >= 1 for c in cands)


class TestInterLanguageMap:
    def test_japanese_title_resolves(self, apple_ilmap):
        assert apple_ilmap.get("ja", "東京") == "Q7473516"

    def test_absent_key_is_unmapped(self, apple_ilmap):
        assert apple_ilmap.get("de", "Berlin") is None

    def test_conflicting_duplicates_last_wins(self, caplog):
        with caplog.at_level(logging.WARNING):
            ilmap = build_interlanguage_map(
                [("en", "Apple", "Q1"), ("en", "Apple", "Q2")]
            )
        assert ilmap.get("en", "Apple") == "Q2"
        assert any("conflicting" in r.message for r in caplog.records)

    def test_identical_duplicates_no_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            build_interlanguage_map([("en", "Apple", "Q1"), ("en", "Apple", "Q1")])
        assert not caplog.records

    def test_malformed_qid_rejected(self):
        for bad in ["X1", "Q", "Q12a", "q12", ""]:
            with pytest.raises(IngestionError):
                build_interlanguage_map([("en", "Apple", bad)])

    def test_language_case_insensitive(self, apple_ilmap):
        assert apple_ilmap.get("EN", "Paris") == "Q90"


class TestTsvReaders:
    def test_reads_fixture(self, data_dir):
        records = list(read_anchor_records(data_dir / "apple_mentions.tsv"))
        assert ("apple", "Apple Inc.", 3) in records
        links = list(read_sitelink_records(data_dir / "apple_sitelinks.tsv"))
        assert ("ja", "東京", "Q7473516") in links

    def test_bad_arity_names_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tT\t1\njust-one-field\n", encoding="utf-8")
        with pytest.raises(IngestionError, match=":2"):
            list(read_anchor_records(path))

    def test_non_numeric_count_names_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tT\tmany\n", encoding="utf-8")
        with pytest.raises(IngestionError, match=":1"):
            list(read_anchor_records(path))

    def test_bad_qid_names_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("en\tApple\tQ12\nen\tPear\tP12\n", encoding="utf-8")
        with pytest.raises(IngestionError, match=":2"):
            list(read_sitelink_records(path))


class TestPersistence:
    def test_mention_round_trip(self, apple_dict, tmp_path):
        path = tmp_path / "dict.mboe"
        apple_dict.save(path)
        loaded = load_mention_dictionary(path)
        assert loaded == apple_dict
        assert loaded.commonness("apple", "Apple Inc.") == pytest.approx(0.75)
        assert loaded.language == "en"

    def test_ilmap_round_trip(self, apple_ilmap, tmp_path):
        path = tmp_path / "ilmap.mboe"
        apple_ilmap.save(path)
        loaded = load_interlanguage_map(path)
        assert loaded == apple_ilmap

    def test_dispatch_on_kind(self, apple_dict, apple_ilmap, tmp_path):
        apple_dict.save(tmp_path / "a")
        apple_ilmap.save(tmp_path / "b")
        assert load_dictionary(tmp_path / "a") == apple_dict
        assert load_dictionary(tmp_path / "b") == apple_ilmap

    def test_kind_mismatch(self, apple_dict, tmp_path):
        apple_dict.save(tmp_path / "a")
        with pytest.raises(FormatError):
            load_interlanguage_map(tmp_path / "a")

    def test_truncated_file(self, apple_dict, tmp_path):
        path = tmp_path / "dict.mboe"
        apple_dict.save(path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 7])
        with pytest.raises(FormatError, match="truncated"):
            load_dictionary(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk"
        path.write_bytes(b"NOPE" + b"\x00" * 30)
        with pytest.raises(FormatError, match="magic"):
            load_dictionary(path)

    def test_bad_version(self, apple_dict, tmp_path):
        path = tmp_path / "dict.mboe"
        apple_dict.save(path)
        data = bytearray(path.read_bytes())
        data[4] = 99  # version field
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version"):
            load_dictionary(path)

    def test_empty_dictionary_round_trip(self, tmp_path):
        empty = build_mention_dictionary([], "en")
        path = tmp_path / "empty.mboe"
        empty.save(path)
        loaded = load_mention_dictionary(path)
        assert len(loaded) == 0
        assert loaded.candidates("anything") == ()

    def test_save_is_deterministic(self, apple_dict, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        apple_dict.save(a)
        apple_dict.save(b)
        assert a.read_bytes() == b.read_bytes()

    @given(
        records=st.lists(
            st.tuples(
                st.text(min_size=1, max_size=6),
                st.text(min_size=1, max_size=6),
                st.integers(min_value=1, max_value=50),
            ),
            max_size=20,
        )
    )
    @settings(max_examples=50)
    def test_round_trip_property(self, tmp_path_factory, records):
        d = build_mention_dictionary(records, "xx")
        path = tmp_path_factory.mktemp("dicts") / "d.mboe"
        d.save(path)
        assert load_mention_dictionary(path) == d
