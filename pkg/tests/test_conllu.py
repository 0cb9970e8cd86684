"""CoNLL-U export/import: round trips, MISC fields, rejection of bad input."""
from __future__ import annotations

import pytest

from histannot.conllu import ConlluError, export_conllu, import_conllu, parse_conllu, sentence_to_conllu

from conftest import build_sentence, generated_sentences


class TestExportFields:
    def test_ner_in_misc(self):
        s = build_sentence(
            "z1",
            "他去上海",
            ["他", "去", "上海"],
            ["PRON", "VERB", "PROPN"],
            ["PN", "VV", "NR"],
            ents=[("O", ""), ("O", ""), ("B", "GPE")],
        )
        text = sentence_to_conllu(s)
        last = text.strip().splitlines()[-1].split("\t")
        assert "NER=B-GPE" in last[9]

    def test_space_after_no(self):
        s = build_sentence(
            "f1",
            "Il est passé.",
            ["Il", "est", "passé", "."],
            ["PRON", "AUX", "VERB", "PUNCT"],
            ["CLS", "V", "VPP", "PONCT"],
            language="french",
            lemmas=["il", "être", "passer", "."],
        )
        lines = sentence_to_conllu(s).strip().splitlines()
        cols = [l.split("\t") for l in lines if not l.startswith("#")]
        assert cols[2][9] == "SpaceAfter=No"  # "passé" glued to "."
        assert cols[0][9] == "_"

    def test_untyped_french_entity(self):
        s = build_sentence(
            "f2",
            "Paris dort",
            ["Paris", "dort"],
            ["PROPN", "VERB"],
            ["NPP", "V"],
            language="french",
            lemmas=["Paris", "dormir"],
            ents=[("B", ""), ("O", "")],
        )
        lines = sentence_to_conllu(s).strip().splitlines()
        cols = [l.split("\t") for l in lines if not l.startswith("#")]
        assert cols[0][9] == "NER=B"

    def test_comments_carry_sent_id_text_period(self):
        s = build_sentence(
            "z9", "他去", ["他", "去"], ["PRON", "VERB"], ["PN", "VV"], period="1920-1929"
        )
        text = sentence_to_conllu(s)
        assert "# sent_id = z9" in text
        assert "# text = 他去" in text
        assert "# period = 1920-1929" in text


class TestRoundTrip:
    @pytest.mark.parametrize("language", ["french", "chinese"])
    def test_export_import_export_byte_identical(self, tmp_path, language):
        sentences = generated_sentences(50, language)
        first = tmp_path / "a.conllu"
        second = tmp_path / "b.conllu"
        export_conllu(sentences, first)
        reimported = import_conllu(first, language)
        export_conllu(reimported, second)
        assert first.read_bytes() == second.read_bytes()

    def test_field_preservation(self, tmp_path):
        sentences = generated_sentences(10, "chinese")
        path = tmp_path / "x.conllu"
        export_conllu(sentences, path)
        back = import_conllu(path, "chinese")
        for a, b in zip(sentences, back):
            assert a.id == b.id and a.text == b.text and a.period == b.period
            for ta, tb in zip(a.tokens, b.tokens):
                assert ta.token == tb.token
                assert (ta.upos, ta.xpos, ta.lemma, ta.dep) == (tb.upos, tb.xpos, tb.lemma, tb.dep)
                assert (ta.ent_iob, ta.ent_type) == (tb.ent_iob, tb.ent_type)


class TestImportRejections:
    GOOD = (
        "# sent_id = a\n"
        "# text = 他去\n"
        "1\t他\t_\tPRON\tPN\t_\t_\t_\t_\tSpaceAfter=No\n"
        "2\t去\t_\tVERB\tVV\t_\t_\t_\t_\tSpaceAfter=No\n"
    )

    def test_good_block_parses(self):
        sentences = parse_conllu(self.GOOD, "chinese")
        assert len(sentences) == 1 and len(sentences[0].tokens) == 2

    def test_column_count_violation_names_line(self):
        bad = self.GOOD.replace("2\t去\t_\tVERB\tVV\t_\t_\t_\t_\tSpaceAfter=No", "2\t去\tVERB")
        with pytest.raises(ConlluError) as e:
            parse_conllu(bad, "chinese")
        assert "line 4" in str(e.value) and "columns" in str(e.value)

    def test_range_ids_rejected(self):
        bad = self.GOOD.replace("1\t他", "1-2\t他")
        with pytest.raises(ConlluError) as e:
            parse_conllu(bad, "chinese")
        assert "line 3" in str(e.value)

    def test_text_mismatch_rejected(self):
        bad = self.GOOD.replace("# text = 他去", "# text = 他去了")
        with pytest.raises(ConlluError):
            parse_conllu(bad, "chinese")

    def test_missing_text_comment_rejected(self):
        bad = self.GOOD.replace("# text = 他去\n", "")
        with pytest.raises(ConlluError):
            parse_conllu(bad, "chinese")

    def test_contradictory_space_after(self):
        bad = (
            "# sent_id = f\n"
            "# text = a b\n"
            "1\ta\t_\tX\tX\t_\t_\t_\t_\tSpaceAfter=No\n"
            "2\tb\t_\tX\tX\t_\t_\t_\t_\tSpaceAfter=No\n"
        )
        with pytest.raises(ConlluError) as e:
            parse_conllu(bad, "french")
        assert "SpaceAfter" in str(e.value)
