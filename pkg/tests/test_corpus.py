import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ippsm import corpus as cp


@pytest.fixture
def tmp_text(tmp_path):
    def write(content: bytes, name="leak.txt"):
        p = tmp_path / name
        p.write_bytes(content)
        return p

    return write


class TestLoadCorpus:
    def test_plain_lines_aggregates_duplicates(self, tmp_text):
        p = tmp_text(b"123456\n123456\npassword\n")
        c = cp.load_corpus(p, "plain-lines")
        assert c.counts == {"123456": 2, "password": 1}
        assert c.total == 3
        assert c.n_unique == 2

    def test_count_prefixed(self, tmp_text):
        p = tmp_text(b"290729 123456\n3 pass word\n")
        c = cp.load_corpus(p, "count-prefixed")
        # password is taken verbatim after the first space
        assert c.counts == {"123456": 290729, "pass word": 3}

    def test_invalid_utf8_lines_skipped(self, tmp_text):
        p = tmp_text(b"good1\n\xff\xfebad\ngood2\n")
        c = cp.load_corpus(p, "plain-lines")
        assert set(c.counts) == {"good1", "good2"}

    def test_empty_file_rejected(self, tmp_text):
        with pytest.raises(cp.CorpusError):
            cp.load_corpus(tmp_text(b""), "plain-lines")

    def test_unknown_format_rejected(self, tmp_text):
        with pytest.raises(ValueError):
            cp.load_corpus(tmp_text(b"x\n"), "csv")

    def test_save_load_round_trip(self, tmp_path):
        c = cp.LeakCorpus({"hello1": 4, "s3cret": 1})
        path = tmp_path / "out.txt"
        cp.save_corpus(c, path, "count-prefixed")
        back = cp.load_corpus(path, "count-prefixed")
        assert back.counts == c.counts


class TestCleanAndSplit:
    def test_short_passwords_dropped(self):
        train, test = cp.clean_and_split(
            cp.LeakCorpus({"abc": 5, "hello1": 3}), min_len=5, split=0.5
        )
        merged = set(train.counts) | set(test.counts)
        assert merged == {"hello1"}

    def test_min_freq_filter(self):
        c = cp.LeakCorpus({"popular1": 12, "rareone": 2})
        train, test = cp.clean_and_split(c, min_freq=10, split=0.5)
        assert set(train.counts) | set(test.counts) == {"popular1"}

    def test_split_disjoint_and_reproducible(self):
        c = cp.LeakCorpus({f"pw{i:04d}x": i + 1 for i in range(10)})
        t1, s1 = cp.clean_and_split(c, split=0.8, seed=42)
        t2, s2 = cp.clean_and_split(c, split=0.8, seed=42)
        assert t1.counts == t2.counts and s1.counts == s2.counts
        assert len(t1.counts) == 8 and len(s1.counts) == 2
        assert not (set(t1.counts) & set(s1.counts))
        assert set(t1.counts) | set(s1.counts) == set(c.counts)

    def test_everything_filtered_rejected(self):
        with pytest.raises(cp.CorpusError):
            cp.clean_and_split(cp.LeakCorpus({"abc": 1}), min_len=5)

    def test_bad_split_fraction_rejected(self):
        with pytest.raises(ValueError):
            cp.clean_and_split(cp.LeakCorpus({"hello1": 1}), split=1.0)

    def test_out_of_alphabet_dropped_when_alphabet_given(self):
        alpha = cp.Alphabet.from_symbols("helo1wrd")
        c = cp.LeakCorpus({"hello1": 5, "héllo1": 5})
        train, test = cp.clean_and_split(c, split=0.5, alphabet=alpha)
        assert set(train.counts) | set(test.counts) == {"hello1"}


class TestAlphabet:
    def test_mask_and_pad_come_last(self):
        a = cp.Alphabet.from_symbols("ba")
        assert a.symbols == ("b", "a")
        assert a.mask_index == 2 and a.pad_index == 3
        assert a.n_content == 2 and a.n_total == 4

    def test_indices_dense(self):
        a = cp.Alphabet.printable_ascii()
        assert sorted(a.index.values()) == list(range(95))
        assert a.n_total == 97

    def test_placeholders_rejected_as_content(self):
        with pytest.raises(ValueError):
            cp.Alphabet.from_symbols("ab" + cp.MASK_CHAR)

    def test_json_round_trip(self):
        a = cp.Alphabet.from_symbols("xyz")
        assert cp.Alphabet.from_json(a.to_json()).symbols == a.symbols

    def test_build_alphabet_sorted_by_code_point(self):
        a = cp.build_alphabet(cp.LeakCorpus({"cba": 1}))
        assert a.symbols == ("a", "b", "c")


class TestTopSymbols:
    def test_tie_broken_by_code_point(self):
        c = cp.LeakCorpus({"aab": 1, "abb": 1})
        assert cp.top_symbols(c, 2) == ["a", "b"]

    def test_frequency_weighted_by_count(self):
        # 'z' appears once in a password with count 10, 'a' five times with count 1
        c = cp.LeakCorpus({"z": 10, "aaaaa": 1})
        assert cp.top_symbols(c, 1) == ["z"]

    def test_k_beyond_distinct_returns_all(self):
        c = cp.LeakCorpus({"ab": 1})
        assert cp.top_symbols(c, 25) == ["a", "b"]


class TestEncodeDecode:
    def test_pad_fill_and_length(self):
        a = cp.Alphabet.from_symbols("helo")
        e = cp.encode("hello", a, 8)
        assert e.length == 5
        assert list(e.indices[5:]) == [a.pad_index] * 3
        assert cp.decode(e, a) == "hello"

    def test_out_of_alphabet_names_character(self):
        a = cp.Alphabet.printable_ascii()
        with pytest.raises(cp.EncodingError, match="é"):
            cp.encode("héllo", a, 8)

    def test_over_length_rejected(self):
        a = cp.Alphabet.from_symbols("ab")
        with pytest.raises(cp.EncodingError):
            cp.encode("aaa", a, 2)

    def test_empty_rejected(self):
        with pytest.raises(cp.EncodingError):
            cp.encode("", cp.Alphabet.from_symbols("ab"), 4)

    def test_decode_mask_renders_placeholder(self):
        a = cp.Alphabet.from_symbols("ab")
        e = cp.encode("ab", a, 4)
        e.indices[0] = a.mask_index
        assert cp.decode(e, a) == cp.MASK_CHAR + "b"

    def test_decode_pad_inside_content_rejected(self):
        a = cp.Alphabet.from_symbols("ab")
        e = cp.encode("ab", a, 4)
        e.indices[1] = a.pad_index
        with pytest.raises(cp.EncodingError):
            cp.decode(e, a)

    @given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), min_size=1, max_size=16))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_identity(self, pw):
        a = cp.Alphabet.printable_ascii()
        assert cp.decode(cp.encode(pw, a, 16), a) == pw
