from hypothesis import given, settings
from hypothesis import strategies as st

from chapkit.chunking import ChunkBudget, count_words
from chapkit.corpus import Chapter
from chapkit.promptfmt import (
    SENTINEL,
    ChunkPrediction,
    DynamicContext,
    StaticContext,
    parse_output,
    render_input,
    render_target,
    sanitize_title,
)


class TestRenderTarget:
    def test_single_entry(self):
        assert render_target([Chapter(125, "Intro")]) == "125 := Intro"

    def test_separator(self):
        rendered = render_target([Chapter(125, "Intro"), Chapter(200, "Guest story")])
        assert rendered == "125 := Intro | 200 := Guest story"

    def test_empty_renders_sentinel(self):
        assert render_target([]) == "No chapter boundaries were found."

    def test_reserved_characters_sanitized(self):
        rendered = render_target([Chapter(3, "a | b := c")])
        prediction, warnings = parse_output(rendered, (0, 10))
        assert warnings == []
        assert prediction.entries == ((3, "a / b = c"),)


def test_sanitize_title_iterates_until_stable():
    assert ":=" not in sanitize_title("x ::= y")
    assert sanitize_title("multi\nline  title") == "multi line title"


class TestParseOutput:
    def test_two_entries_in_range(self):
        prediction, warnings = parse_output(
            "125 := Intro | 200 := Guest story", (100, 300)
        )
        assert prediction.entries == ((125, "Intro"), (200, "Guest story"))
        assert not prediction.is_empty_sentinel
        assert warnings == []

    def test_sentinel(self):
        prediction, warnings = parse_output(SENTINEL, (0, 10))
        assert prediction.entries == ()
        assert prediction.is_empty_sentinel
        assert warnings == []

    def test_sentinel_with_surrounding_whitespace(self):
        prediction, _ = parse_output(f"  {SENTINEL}\n", (0, 10))
        assert prediction.is_empty_sentinel

    def test_out_of_range_dropped_with_warning(self):
        prediction, warnings = parse_output("9999 := Ghost | 150 := Real", (100, 300))
        assert prediction.entries == ((150, "Real"),)
        assert len(warnings) == 1
        assert "9999" in warnings[0]

    def test_garbage_fragments_dropped(self):
        prediction, warnings = parse_output("uh | 5 := ok | nope", (0, 10))
        assert prediction.entries == ((5, "ok"),)
        assert len(warnings) == 2

    def test_duplicate_keeps_first(self):
        prediction, warnings = parse_output("5 := first | 5 := second", (0, 10))
        assert prediction.entries == ((5, "first"),)
        assert len(warnings) == 1

    def test_out_of_order_sorted(self):
        prediction, _ = parse_output("9 := late | 2 := early", (0, 10))
        assert prediction.entries == ((2, "early"), (9, "late"))

    def test_fully_unparseable_is_not_sentinel(self):
        prediction, warnings = parse_output("complete nonsense", (0, 10))
        assert prediction.entries == ()
        assert not prediction.is_empty_sentinel
        assert warnings

    def test_first_assignment_is_delimiter(self):
        prediction, _ = parse_output("12 := a := b", (0, 20))
        assert prediction.entries == ((12, "a := b"),)

    @given(st.text(max_size=200))
    def test_totality(self, text):
        prediction, _ = parse_output(text, (0, 50))
        assert isinstance(prediction, ChunkPrediction)


_title = st.text(
    alphabet=st.characters(
        whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" "
    ),
    min_size=1,
    max_size=30,
).filter(lambda t: t.strip())


@settings(max_examples=200)
@given(st.dictionaries(st.integers(min_value=0, max_value=500), _title, min_size=0, max_size=12))
def test_render_parse_round_trip(entries_by_index):
    chapters = [Chapter(i, t) for i, t in sorted(entries_by_index.items())]
    prediction, warnings = parse_output(render_target(chapters), (0, 500))
    assert warnings == []
    assert prediction.is_empty_sentinel == (not chapters)
    assert prediction.entries == tuple(
        (c.start_index, sanitize_title(c.title)) for c in chapters
    )


class TestRenderInput:
    def test_empty_context(self):
        rendered = render_input(
            "0: something", StaticContext("T", ""), DynamicContext(), ChunkBudget()
        )
        assert rendered == "Episode title: T\nEpisode description: \n\n0: something"

    def test_previous_titles_line(self):
        rendered = render_input(
            "0: x",
            StaticContext("T", "desc words"),
            DynamicContext(("A", "B")),
            ChunkBudget(),
        )
        assert "Previous chapters: A | B" in rendered.splitlines()[2]

    def test_previous_line_omitted_when_empty(self):
        rendered = render_input("0: x", StaticContext("T", "d"), DynamicContext())
        assert "Previous chapters:" not in rendered

    def _context_block(self, rendered):
        return rendered.split("\n\n", 1)[0]

    def test_long_description_truncated_from_tail(self):
        description = " ".join(f"d{i}" for i in range(2000))
        rendered = render_input(
            "0: x", StaticContext("T", description), DynamicContext(), ChunkBudget()
        )
        block = self._context_block(rendered)
        assert count_words(block) <= 1000
        desc_line = rendered.splitlines()[1]
        assert desc_line.split()[-1].startswith("d")  # cut inside the description
        assert "d1999" not in desc_line

    def test_oldest_titles_dropped_after_description(self):
        titles = tuple(f"title {i} here" for i in range(30))
        budget = ChunkBudget(total_words=100, context_words=20)
        rendered = render_input(
            "0: x", StaticContext("T", "some description words"), DynamicContext(titles), budget
        )
        block = self._context_block(rendered)
        assert count_words(block) <= 20
        assert "Episode description: \n" in rendered  # description fully gone first
        assert "title 29 here" in block  # newest title survives
        assert "title 0 here" not in block

    def test_title_never_truncated(self):
        budget = ChunkBudget(total_words=100, context_words=2)
        rendered = render_input(
            "0: x", StaticContext("Very Long Episode Title Kept", "d"), DynamicContext(), budget
        )
        assert rendered.splitlines()[0] == "Episode title: Very Long Episode Title Kept"

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(min_value=0, max_value=400),
        st.lists(st.integers(min_value=1, max_value=20), max_size=15),
        st.integers(min_value=10, max_value=120),
    )
    def test_budget_postcondition_adversarial(self, desc_words, title_lengths, context_words):
        static_ctx = StaticContext("Title", " ".join(f"d{i}" for i in range(desc_words)))
        dynamic_ctx = DynamicContext(
            tuple(" ".join(f"t{i}_{j}" for j in range(n)) for i, n in enumerate(title_lengths))
        )
        budget = ChunkBudget(total_words=context_words + 1, context_words=context_words)
        rendered = render_input("0: x", static_ctx, dynamic_ctx, budget)
        block = rendered.split("\n\n", 1)[0]
        # the title line (5 words here) always fits in these budgets
        assert count_words(block) <= context_words
