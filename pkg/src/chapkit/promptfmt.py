"""Rendering of generator inputs and parsing of generator outputs.

The wire format between the pipeline and any generator is plain text.

Input layout (all lines present even when their content is empty, except
the previous-chapters line which is omitted when there are no previous
titles)::

    Episode title: <title>
    Episode description: <description>
    Previous chapters: <t1> | <t2> | ...
    <blank line>
    <index>: <sentence>
    ...

The context block (everything above the blank line) is kept within
``budget.context_words`` whitespace-token words by truncating the
description tail first, then dropping the oldest previous titles; the
episode title is never truncated.

Output grammar: entries "<start_index> := <title>" joined by " | ", or the
exact sentinel line below when a chunk contains no chapter starts. Titles
are sanitized at render time ("|" -> "/", ":=" -> "=") so the grammar stays
unambiguous; the parser accepts arbitrary text and recovers what it can.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from chapkit.chunking import ChunkBudget, count_words
from chapkit.corpus import Chapter

SENTINEL = "No chapter boundaries were found."

EPISODE_TITLE_LABEL = "Episode title:"
DESCRIPTION_LABEL = "Episode description:"
PREVIOUS_LABEL = "Previous chapters:"

_ENTRY_RE = re.compile(r"^\s*(\d+)\s*:=\s*(.+?)\s*$")


@dataclass(frozen=True)
class StaticContext:
    """Episode-level metadata prepended to every chunk's input."""

    title: str
    description: str


@dataclass(frozen=True)
class DynamicContext:
    """Titles already predicted for earlier chunks of the same episode."""

    previous_titles: tuple[str, ...] = ()


@dataclass(frozen=True)
class ChunkPrediction:
    """Parsed generator output for one chunk.

    ``is_empty_sentinel`` distinguishes an explicit "no boundaries" answer
    from output that yielded no usable entries.
    """

    entries: tuple[tuple[int, str], ...]
    is_empty_sentinel: bool = False

    def __post_init__(self):
        if self.is_empty_sentinel and self.entries:
            raise ValueError("sentinel prediction cannot carry entries")
        prev = -1
        for idx, _ in self.entries:
            if idx <= prev:
                raise ValueError("entry indices must be strictly increasing")
            prev = idx

    @property
    def titles(self) -> list[str]:
        return [t for _, t in self.entries]


def _flatten(text: str) -> str:
    """Collapse all whitespace runs (including newlines) to single spaces."""
    return " ".join(text.split())


def sanitize_title(title: str) -> str:
    """Make a title safe to embed in the output grammar and context lines."""
    t = _flatten(title)
    t = t.replace("|", "/")
    # replacing ":=" can itself create a new ":=" (e.g. "::="), so iterate
    while ":=" in t:
        t = t.replace(":=", "=")
    return t


def render_input(
    chunk_text: str,
    static_ctx: StaticContext,
    dynamic_ctx: DynamicContext,
    budget: ChunkBudget = ChunkBudget(),
) -> str:
    """Compose the full generator input for one chunk.

    The context block is trimmed to ``budget.context_words`` words by
    dropping description words from the end, then previous titles from the
    oldest; the episode title line is never reduced.
    """
    title = _flatten(static_ctx.title)
    desc_tokens = _flatten(static_ctx.description).split()
    previous = [sanitize_title(t) for t in dynamic_ctx.previous_titles]

    label_words = count_words(EPISODE_TITLE_LABEL) + count_words(DESCRIPTION_LABEL)

    def block_words() -> int:
        total = label_words + count_words(title) + len(desc_tokens)
        if previous:
            # the " | " separators are whitespace-delimited tokens too
            total += (
                count_words(PREVIOUS_LABEL)
                + sum(count_words(t) for t in previous)
                + len(previous)
                - 1
            )
        return total

    while block_words() > budget.context_words:
        if desc_tokens:
            desc_tokens.pop()
        elif previous:
            previous.pop(0)
        else:
            break  # only the title line is left; it is never truncated

    lines = [
        f"{EPISODE_TITLE_LABEL} {title}",
        f"{DESCRIPTION_LABEL} {' '.join(desc_tokens)}",
    ]
    if previous:
        lines.append(f"{PREVIOUS_LABEL} {' | '.join(previous)}")
    return "\n".join(lines) + "\n\n" + chunk_text


def render_target(chapters: Sequence[Chapter]) -> str:
    """Render chapters in the output grammar; empty input yields the sentinel."""
    if not chapters:
        return SENTINEL
    return " | ".join(f"{c.start_index} := {sanitize_title(c.title)}" for c in chapters)


def parse_output(text: str, valid_range: tuple[int, int]) -> tuple[ChunkPrediction, list[str]]:
    """Parse arbitrary generator output into a ChunkPrediction.

    Never raises: fragments that do not match the grammar, indices outside
    ``valid_range``, and duplicate indices are dropped with a warning each;
    out-of-order entries are sorted. The exact sentinel string (after
    trimming) yields an empty prediction with ``is_empty_sentinel=True``.
    """
    first, last = valid_range
    warnings: list[str] = []
    if text.strip() == SENTINEL:
        return ChunkPrediction((), is_empty_sentinel=True), warnings
    entries: list[tuple[int, str]] = []
    seen: set[int] = set()
    for fragment in text.split("|"):
        match = _ENTRY_RE.match(fragment)
        if match is None:
            warnings.append(f"unparseable fragment {fragment.strip()!r}")
            continue
        idx = int(match.group(1))
        # str.strip() removes a few controls (e.g. \x1c) that regex \s does not
        title = match.group(2).strip()
        if not title:
            warnings.append(f"empty title for index {idx}")
            continue
        if not first <= idx <= last:
            warnings.append(f"index {idx} outside chunk range [{first}, {last}]")
            continue
        if idx in seen:
            warnings.append(f"duplicate index {idx}; kept first occurrence")
            continue
        seen.add(idx)
        entries.append((idx, title))
    entries.sort(key=lambda entry: entry[0])
    return ChunkPrediction(tuple(entries)), warnings


def chapters_in_range(chapters: Iterable[Chapter], valid_range: tuple[int, int]) -> list[Chapter]:
    """Chapters whose start index falls inside [first, last]."""
    first, last = valid_range
    return [c for c in chapters if first <= c.start_index <= last]
