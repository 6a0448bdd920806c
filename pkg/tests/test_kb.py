"""Knowledge-base loading, validation, and round-trips."""

import json

import pytest

from corpuscausal.errors import (
    EmptyKbError,
    MalformedPatternError,
    ParseError,
    UnknownRelationError,
)
from corpuscausal.kb import (
    KnowledgeBase,
    PatternSpec,
    Triplet,
    load_kb,
    load_knowledge_base,
    load_patterns,
    save_patterns,
    save_triplets,
)

from conftest import write_jsonl


class TestLoadKb:
    def test_three_records(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        write_jsonl(
            path,
            [
                {"subject": "Paris", "relation": "capital-of", "object": "France"},
                {"subject": "Rome", "relation": "capital-of", "object": "Italy"},
                {"subject": "Daria", "relation": "aired-on", "object": "MTV"},
            ],
        )
        triplets, report = load_kb(path)
        assert len(triplets) == 3
        assert report.counts == {"capital-of": 2, "aired-on": 1}
        assert report.duplicates == 0

    def test_duplicates_deduplicated_with_counter(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        rec = {"subject": "Paris", "relation": "capital-of", "object": "France"}
        write_jsonl(path, [rec, rec])
        triplets, report = load_kb(path)
        assert len(triplets) == 1
        assert report.duplicates == 1

    def test_missing_object_field_names_line(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text(
            json.dumps({"subject": "Paris", "relation": "capital-of", "object": "France"})
            + "\n"
            + json.dumps({"subject": "Rome", "relation": "capital-of"})
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError) as err:
            load_kb(path)
        assert err.value.line == 2

    def test_empty_kb(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyKbError):
            load_kb(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text("{not json\n", encoding="utf-8")
        with pytest.raises(ParseError):
            load_kb(path)


class TestLoadPatterns:
    def test_valid_pattern(self, tmp_path):
        path = tmp_path / "p.jsonl"
        write_jsonl(
            path,
            [
                {
                    "relation": "is-capital",
                    "template": "[X] is the capital of [Y].",
                    "is_anti": False,
                }
            ],
        )
        patterns = load_patterns(path)
        assert patterns == (
            PatternSpec("is-capital", "[X] is the capital of [Y].", False),
        )

    def test_anti_pattern_flagged(self, tmp_path):
        path = tmp_path / "p.jsonl"
        write_jsonl(
            path,
            [
                {
                    "relation": "country",
                    "template": "[X] is located next to the border with [Y].",
                    "is_anti": True,
                }
            ],
        )
        assert load_patterns(path)[0].is_anti

    def test_missing_slot_rejected(self, tmp_path):
        path = tmp_path / "p.jsonl"
        write_jsonl(path, [{"relation": "born", "template": "[X] was born."}])
        with pytest.raises(MalformedPatternError):
            load_patterns(path)

    def test_is_anti_defaults_false(self, tmp_path):
        path = tmp_path / "p.jsonl"
        write_jsonl(path, [{"relation": "r", "template": "[X] and [Y]."}])
        assert load_patterns(path)[0].is_anti is False


class TestKnowledgeBase:
    def test_candidates_and_subjects(self, crossed_kb):
        assert crossed_kb.candidate_objects("capital-of") == ["France", "Italy"]
        assert crossed_kb.subjects("aired-on") == ["Daria", "True Detective"]

    def test_singleton_candidates(self):
        kb = KnowledgeBase(
            triplets=(Triplet("a", "r", "b"),),
            patterns=(PatternSpec("r", "[X] r [Y]."),),
        )
        assert kb.candidate_objects("r") == ["b"]

    def test_unknown_relation(self, crossed_kb):
        with pytest.raises(UnknownRelationError):
            crossed_kb.candidate_objects("nope")

    def test_pattern_for_unknown_relation_rejected(self):
        with pytest.raises(UnknownRelationError):
            KnowledgeBase(
                triplets=(Triplet("a", "r", "b"),),
                patterns=(
                    PatternSpec("r", "[X] r [Y]."),
                    PatternSpec("other", "[X] o [Y]."),
                ),
            )

    def test_relation_without_non_anti_pattern_rejected(self):
        with pytest.raises(UnknownRelationError):
            KnowledgeBase(
                triplets=(Triplet("a", "r", "b"),),
                patterns=(PatternSpec("r", "[X] r [Y].", True),),
            )

    def test_candidate_sets_nonempty_for_all_relations(self, crossed_kb):
        for relation in crossed_kb.relations:
            assert crossed_kb.candidate_objects(relation)


class TestRoundTrip:
    def test_save_load_identical(self, tmp_path, crossed_kb):
        t_path = tmp_path / "t.jsonl"
        p_path = tmp_path / "p.jsonl"
        save_triplets(crossed_kb.triplets, t_path)
        save_patterns(crossed_kb.patterns, p_path)
        kb2, report = load_knowledge_base(t_path, p_path)
        assert set(kb2.triplets) == set(crossed_kb.triplets)
        assert set(kb2.patterns) == set(crossed_kb.patterns)
        assert kb2.relations == crossed_kb.relations
        assert report.duplicates == 0
