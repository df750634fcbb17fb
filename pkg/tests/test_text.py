import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clipsift.text import (
    LemmaLexicon,
    description_document,
    preprocess,
    tag_document,
    tokenise,
)


def reference_tokenise(text: str) -> list[str]:
    """Character-scan oracle: independent of the implementation."""
    out, word = [], ""
    for ch in text:
        if ch.isalpha():
            word += ch
        else:
            if word:
                out.append(word)
            word = ""
    if word:
        out.append(word)
    return out


class TestTokenise:
    def test_punctuation_and_numbers_discarded(self):
        assert tokenise("Guitars, 2 strings!") == ["Guitars", "strings"]

    def test_empty_string(self):
        assert tokenise("") == []

    def test_hyphens_and_apostrophes_split(self):
        assert tokenise("lo-fi don't") == ["lo", "fi", "don", "t"]

    def test_unicode_letters_kept(self):
        assert tokenise("café ambiance") == ["café", "ambiance"]

    @given(st.text(alphabet=st.characters(max_codepoint=127), max_size=80))
    @settings(max_examples=1000)
    def test_matches_reference_splitter(self, text):
        assert tokenise(text) == reference_tokenise(text)

    @given(st.text(max_size=80))
    def test_matches_reference_splitter_unicode(self, text):
        assert tokenise(text) == reference_tokenise(text)


@pytest.fixture
def toy_lexicon():
    return LemmaLexicon(
        {
            "clapping": frozenset({("noun", "clapping"), ("verb", "clap")}),
            "guitars": frozenset({("noun", "guitar")}),
        }
    )


class TestPreprocess:
    def test_shortest_lemma_wins(self, toy_lexicon):
        doc = preprocess(["clapping"], toy_lexicon, frozenset())
        assert doc.words == ("clap",)

    def test_plural_reduced(self, toy_lexicon):
        doc = preprocess(["guitars"], toy_lexicon, frozenset())
        assert doc.words == ("guitar",)

    def test_lowercase_stop_dedup(self):
        doc = preprocess(["The", "the", "DOG"], LemmaLexicon(), frozenset({"the"}))
        assert doc.words == ("dog",)

    def test_shortest_tie_breaks_lexicographically(self):
        lexicon = LemmaLexicon(
            {"spam": frozenset({("noun", "abd"), ("verb", "abc"), ("adj", "abcd")})}
        )
        assert preprocess(["spam"], lexicon, frozenset()).words == ("abc",)

    def test_out_of_lexicon_passes_through(self):
        doc = preprocess(["zyxw"], LemmaLexicon(), frozenset())
        assert doc.words == ("zyxw",)

    def test_stop_removal_happens_after_lemmatisation(self):
        # "wills" lemmatises to the stop word "will" and must then drop.
        lexicon = LemmaLexicon({"wills": frozenset({("verb", "will")})})
        assert preprocess(["wills"], lexicon, frozenset({"will"})).words == ()

    def test_order_preserved_first_occurrence(self):
        doc = preprocess(["b", "a", "b", "c", "a"], LemmaLexicon(), frozenset())
        assert doc.words == ("b", "a", "c")


word_token = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu")), min_size=1, max_size=10
)


class TestDocumentProperties:
    @given(st.text(max_size=120))
    @settings(max_examples=300)
    def test_invariants_hold_on_random_strings(self, text):
        lexicon = LemmaLexicon.bundled()
        stop_words = frozenset({"the", "a", "of"})
        doc = preprocess(tokenise(text), lexicon, stop_words)
        assert len(set(doc.words)) == len(doc.words)
        for word in doc.words:
            assert word
            assert word == word.lower()
            assert word.isalpha()
            assert word not in stop_words

    @given(st.lists(word_token, max_size=30))
    @settings(max_examples=300)
    def test_idempotent_with_bundled_lexicon(self, tokens):
        lexicon = LemmaLexicon.bundled()
        stop_words = frozenset({"the", "and"})
        once = preprocess(tokens, lexicon, stop_words)
        twice = preprocess(once.words, lexicon, stop_words)
        assert twice.words == once.words

    @given(st.lists(word_token, max_size=30))
    def test_output_is_subsequence_of_lemmatised_input(self, tokens):
        lexicon = LemmaLexicon.bundled()
        doc = preprocess(tokens, lexicon, frozenset())
        stream = [lexicon.lemma(t.lower()) for t in tokens]
        it = iter(stream)
        assert all(word in it for word in doc.words)


class TestLexicon:
    def test_bundled_lexicon_has_no_fixed_point_violations(self, lexicon):
        assert lexicon.fixed_point_violations() == []

    def test_bundled_lemmas_are_lowercase_tokens(self, lexicon):
        for pairs in lexicon.entries.values():
            for _, lemma in pairs:
                assert lemma == lemma.lower() and lemma.isalpha()

    def test_load_rejects_bad_column_count(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("word only\n", encoding="utf-8")
        with pytest.raises(ValueError, match="3 tab-separated"):
            LemmaLexicon.load(path)

    def test_load_rejects_non_lowercase_lemma(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("Dogs\tnoun\tDog\n", encoding="utf-8")
        with pytest.raises(ValueError, match="lowercase"):
            LemmaLexicon.load(path)

    def test_load_parses_multiple_pos(self, tmp_path):
        path = tmp_path / "ok.tsv"
        path.write_text(
            "# comment\nclapping\tnoun\tclapping\nclapping\tverb\tclap\n",
            encoding="utf-8",
        )
        lexicon = LemmaLexicon.load(path)
        assert lexicon.lemma("clapping") == "clap"


class TestClipDocuments:
    def test_tags_split_on_whitespace_and_cleaned(self, lexicon, stop_words):
        doc = tag_document(["field recording", "Guitars!", "140bpm"], lexicon, stop_words)
        assert doc.origin == "tags"
        assert doc.words == ("field", "recording", "guitar", "bpm")

    def test_description_document(self, lexicon, stop_words):
        doc = description_document("Two dogs barking in the park.", lexicon, stop_words)
        assert doc.origin == "description"
        assert doc.words == ("two", "dog", "bark", "park")

    def test_invalid_origin_rejected(self, lexicon):
        with pytest.raises(ValueError, match="origin"):
            preprocess(["x"], lexicon, frozenset(), origin="nope")
