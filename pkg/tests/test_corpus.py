import json

import pytest

from chapkit.corpus import (
    ChapterSet,
    CorpusError,
    FilterConfig,
    corpus_stats,
    load_corpus,
    passes_filters,
    save_corpus,
    segment_lengths,
    split_corpus,
    validate_episode,
)
from chapkit.synthetic import make_corpus

from conftest import build_episode, sentences_of


def _valid_obj(episode_id="e1", n_sentences=4, chapters=((0, "Intro"),)):
    return {
        "episode_id": episode_id,
        "title": "A show",
        "description": "About things",
        "sentences": [{"text": f"Sentence number {i} here."} for i in range(n_sentences)],
        "chapters": [{"start_index": i, "title": t} for i, t in chapters],
    }


def _write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")


class TestLoadCorpus:
    def test_two_valid_lines_order_preserved(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_valid_obj("a"), _valid_obj("b")])
        episodes = load_corpus(path)
        assert [e.episode_id for e in episodes] == ["a", "b"]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_corpus(path) == []

    def test_missing_sentences_field_names_line(self, tmp_path):
        objs = [_valid_obj("a"), _valid_obj("b")]
        bad = _valid_obj("c")
        del bad["sentences"]
        path = tmp_path / "c.jsonl"
        _write_lines(path, objs + [bad])
        with pytest.raises(CorpusError, match="line 3: missing field sentences"):
            load_corpus(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(_valid_obj()) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="line 2: invalid JSON"):
            load_corpus(path)

    def test_duplicate_episode_id_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_valid_obj("a"), _valid_obj("a")])
        with pytest.raises(CorpusError, match="duplicate episode_id"):
            load_corpus(path)

    def test_invariant_violation_names_episode(self, tmp_path):
        bad = _valid_obj("weird")
        bad["chapters"] = [{"start_index": 99, "title": "Out of range"}]
        path = tmp_path / "c.jsonl"
        _write_lines(path, [bad])
        with pytest.raises(CorpusError, match="episode weird"):
            load_corpus(path)

    def test_load_save_round_trip_field_equality(self, tmp_path):
        corpus = make_corpus(4, seed=11)
        first = tmp_path / "first.jsonl"
        second = tmp_path / "second.jsonl"
        save_corpus(first, corpus)
        reloaded = load_corpus(first)
        assert reloaded == corpus
        save_corpus(second, reloaded)
        assert first.read_bytes() == second.read_bytes()


class TestValidation:
    def test_word_count_mismatch(self):
        episode = build_episode(["one two three"])
        object.__setattr__(episode.transcript.sentences[0], "word_count", 9)
        with pytest.raises(CorpusError, match="word_count"):
            validate_episode(episode)

    def test_decreasing_timestamps(self):
        episode = build_episode(["a b", "c d"], timestamps=True)
        object.__setattr__(episode.transcript.sentences[1], "start_s", -5.0)
        with pytest.raises(CorpusError):
            validate_episode(episode)

    def test_empty_transcript(self):
        episode = build_episode([])
        with pytest.raises(CorpusError, match="empty"):
            validate_episode(episode)


class TestFilters:
    def test_short_chapter_with_short_title_passes(self):
        # one 45-second chapter titled with 4 words
        episode = build_episode(
            sentences_of(18, words_each=5),
            chapters=[(0, "A four word title")],
            timestamps=True,
            words_per_second=2.0,  # 18 * 5 / 2 = 45 s
        )
        result = passes_filters(episode)
        assert result.passed
        assert result.violations == ()
        assert result.notes == ()

    def test_fifteen_word_title_fails_strictly(self):
        episode = build_episode(
            sentences_of(18, words_each=5),
            chapters=[(0, " ".join(["word"] * 15))],
            timestamps=True,
        )
        result = passes_filters(episode)
        assert not result.passed
        assert any("15" in v for v in result.violations)

    def test_fourteen_word_title_passes(self):
        episode = build_episode(
            sentences_of(18, words_each=5),
            chapters=[(0, " ".join(["word"] * 14))],
            timestamps=True,
        )
        assert passes_filters(episode).passed

    def test_no_timestamps_degrades_to_note(self):
        episode = build_episode(
            sentences_of(20), chapters=[(0, "Short title here"), (10, "Another one")]
        )
        result = passes_filters(episode)
        assert result.passed
        assert len(result.notes) == 1
        assert "not evaluable" in result.notes[0]

    def test_too_long_chapter_fails(self):
        # single chapter spanning 2000 s
        episode = build_episode(
            sentences_of(400, words_each=10),
            chapters=[(0, "Long one")],
            timestamps=True,
            words_per_second=2.0,
        )
        result = passes_filters(episode)
        assert not result.passed

    def test_monotone_adding_violation_never_fixes(self):
        texts = sentences_of(100, words_each=6)
        good = build_episode(
            texts, chapters=[(0, "Fine"), (50, "Also fine")], timestamps=True, words_per_second=2.0
        )
        assert passes_filters(good).passed
        # append a violating chapter (15-word title) to the same episode
        worse = build_episode(
            texts,
            chapters=[(0, "Fine"), (50, "Also fine"), (90, " ".join(["w"] * 15))],
            timestamps=True,
            words_per_second=2.0,
        )
        assert not passes_filters(worse).passed

    def test_custom_filter_config(self):
        episode = build_episode(
            sentences_of(18, words_each=5),
            chapters=[(0, "One two three")],
            timestamps=True,
        )
        strict = FilterConfig(max_title_words=3)
        assert not passes_filters(episode, strict).passed


class TestStats:
    def test_constant_corpus(self):
        episode = build_episode(
            sentences_of(10, words_each=4), chapters=[(0, "A"), (5, "B")]
        )
        stats = corpus_stats([episode])
        assert stats.avg_chapters == 2.0
        assert stats.std_chapters == 0.0
        assert stats.avg_segment_sentences == 5.0
        assert stats.std_segment_sentences == 0.0
        assert stats.avg_title_words == 1.0
        assert stats.std_title_words == 0.0
        assert stats.avg_doc_words == 40.0

    def test_two_episodes_chapter_mean_and_std(self):
        e1 = build_episode(sentences_of(10), chapters=[(0, "A"), (5, "B")], episode_id="x")
        e2 = build_episode(
            sentences_of(12), chapters=[(0, "A"), (3, "B"), (6, "C"), (9, "D")], episode_id="y"
        )
        stats = corpus_stats([e1, e2])
        assert stats.avg_chapters == 3.0
        assert stats.std_chapters == 1.0

    def test_empty_corpus_errors(self):
        with pytest.raises(ValueError):
            corpus_stats([])

    def test_table1_profile(self, table1_corpus):
        stats = corpus_stats(table1_corpus)
        assert stats.avg_chapters == pytest.approx(11.3, abs=1.0)
        assert stats.avg_title_words == pytest.approx(6.2, abs=0.5)
        assert stats.avg_segment_sentences == pytest.approx(80.9, abs=8.0)
        assert stats.avg_doc_words == pytest.approx(11845, rel=0.08)

    def test_partition_weighted_means(self, table1_corpus):
        parts = [table1_corpus[:30], table1_corpus[30:]]
        whole = corpus_stats(table1_corpus)
        part_stats = [corpus_stats(p) for p in parts]
        weighted_chapters = sum(
            s.avg_chapters * s.n_episodes for s in part_stats
        ) / sum(s.n_episodes for s in part_stats)
        assert whole.avg_chapters == pytest.approx(weighted_chapters)
        weighted_titles = sum(
            s.avg_title_words * s.n_chapters for s in part_stats
        ) / sum(s.n_chapters for s in part_stats)
        assert whole.avg_title_words == pytest.approx(weighted_titles)


def test_segment_lengths_last_ends_at_transcript_end():
    chapters = ChapterSet.from_pairs([(0, "A"), (4, "B")])
    assert segment_lengths(chapters, 10) == [4, 6]


def test_split_corpus_is_seeded_partition(table1_corpus):
    parts = split_corpus(table1_corpus, (0.8, 0.1, 0.1), seed=5)
    assert [len(p) for p in parts] == [80, 10, 10]
    ids = sorted(e.episode_id for part in parts for e in part)
    assert ids == sorted(e.episode_id for e in table1_corpus)
    again = split_corpus(table1_corpus, (0.8, 0.1, 0.1), seed=5)
    assert [[e.episode_id for e in p] for p in parts] == [
        [e.episode_id for e in p] for p in again
    ]
