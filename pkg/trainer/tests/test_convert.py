"""Lossless corpus conversion and its report."""
from __future__ import annotations

import pytest

from trainer_adapter.conllu_io import ConlluIOError, read_conllu
from trainer_adapter.corpus import CorpusError, check_disjoint, convert_corpus, write_corpus

from conftest import make_toy_corpus


class TestConvert:
    def test_counts_match_source(self, tmp_path):
        path = tmp_path / "train.conllu"
        sentences = make_toy_corpus(path, 40)
        corpus, report = convert_corpus(path, "french")
        assert report["sentences"] == len(sentences) == 40
        assert report["tokens"] == sum(len(s.tokens) for s in sentences)

    def test_round_trip_field_diff(self, tmp_path):
        path = tmp_path / "train.conllu"
        make_toy_corpus(path, 25)
        corpus, _ = convert_corpus(path, "french")
        back = tmp_path / "back.conllu"
        write_corpus(corpus, back)
        original = read_conllu(path)
        rewritten = read_conllu(back)
        assert len(original) == len(rewritten)
        for a, b in zip(original, rewritten):
            assert a.sent_id == b.sent_id and a.text == b.text and a.period == b.period
            for ta, tb in zip(a.tokens, b.tokens):
                assert (ta.form, ta.lemma, ta.upos, ta.xpos) == (
                    tb.form,
                    tb.lemma,
                    tb.upos,
                    tb.xpos,
                )
                assert (ta.ent_iob, ta.ent_type, ta.space_after) == (
                    tb.ent_iob,
                    tb.ent_type,
                    tb.space_after,
                )
        assert path.read_bytes() == back.read_bytes()

    def test_ner_in_misc_becomes_typed_label(self, tmp_path):
        path = tmp_path / "z.conllu"
        path.write_text(
            "# sent_id = z1\n"
            "# text = 他去上海\n"
            "1\t他\t_\tPRON\tPN\t_\t_\t_\t_\tSpaceAfter=No\n"
            "2\t去\t_\tVERB\tVV\t_\t_\t_\t_\tSpaceAfter=No\n"
            "3\t上海\t_\tPROPN\tNR\t_\t_\t_\t_\tNER=B-GPE|SpaceAfter=No\n\n",
            encoding="utf-8",
        )
        corpus, _ = convert_corpus(path, "chinese")
        assert corpus.examples[0].ner == ["O", "O", "B-GPE"]

    def test_unparsable_line_aborts_with_location(self, tmp_path):
        path = tmp_path / "bad.conllu"
        path.write_text(
            "# sent_id = a\n# text = x y\n1\tx\tbroken\n", encoding="utf-8"
        )
        with pytest.raises(ConlluIOError) as e:
            convert_corpus(path, "french")
        assert "line 3" in str(e.value)

    def test_disjointness_enforced(self, tmp_path):
        train_path = tmp_path / "train.conllu"
        make_toy_corpus(train_path, 10, start=0)
        overlap_path = tmp_path / "dev.conllu"
        make_toy_corpus(overlap_path, 10, start=5)
        train, _ = convert_corpus(train_path, "french")
        dev, _ = convert_corpus(overlap_path, "french")
        with pytest.raises(CorpusError) as e:
            check_disjoint(train, dev)
        assert "share" in str(e.value)
