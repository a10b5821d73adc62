"""Prompt text renderers. Every string here is part of the corpus byte contract."""

from __future__ import annotations

from typing import Sequence

PREAMBLE = (
    "A user has purchased the following Amazon products "
    "(arranged in chronological order, from earliest to most recent): "
)
RETRIEVAL_QUESTION = "What would the user buy next?"
RANKING_QUESTION = (
    "Which of the following candidate items would you recommend the user to buy next? "
    "Candidate items are: "
)
RATING_LIKES = "A user likes the following Amazon products: "
RATING_DISLIKES = "The user dislikes the following Amazon products: "
RATING_QUESTION = "Predict whether the user would like the following item. Answer yes or no. "
MIM_QUESTION = "What are the masked items, in chronological order?"
BPR_QUESTION = "Which of the following two items would the user buy next?"
MASK_TOKEN = "[masked item]"

# (display_id, title) pairs are the unit of rendering
Item = tuple[str, str]


def render_item(item: Item) -> str:
    return f"Item ID: {item[0]}, Title: {item[1]};"


def render_item_bare(item: Item) -> str:
    """Item unit without the trailing semicolon (rating-target position)."""
    return f"Item ID: {item[0]}, Title: {item[1]}"


def render_items(items: Sequence[Item]) -> str:
    return " ".join(render_item(it) for it in items)


def render_retrieval_input(history: Sequence[Item]) -> str:
    return PREAMBLE + render_items(history) + " " + RETRIEVAL_QUESTION


def render_ranking_input(history: Sequence[Item], candidate_ids: Sequence[str]) -> str:
    return (
        PREAMBLE
        + render_items(history)
        + " "
        + RANKING_QUESTION
        + ", ".join(candidate_ids)
        + "."
    )


def render_rating_input(likes: Sequence[Item], dislikes: Sequence[Item], target: Item) -> str:
    sections: list[str] = []
    if likes:
        sections.append(RATING_LIKES + render_items(likes))
    if dislikes:
        sections.append(RATING_DISLIKES + render_items(dislikes))
    sections.append(RATING_QUESTION + render_item_bare(target))
    return " ".join(sections)


def render_mim_input(window: Sequence[Item], mask_positions: set[int]) -> str:
    units = [
        MASK_TOKEN + ";" if pos in mask_positions else render_item(it)
        for pos, it in enumerate(window)
    ]
    return PREAMBLE + " ".join(units) + " " + MIM_QUESTION


def render_mim_output(masked: Sequence[Item]) -> str:
    return render_items(masked)


def render_mlm_input(items: Sequence[Item]) -> str:
    return render_items(items)


def render_bpr_input(history: Sequence[Item], choices: Sequence[Item]) -> str:
    return PREAMBLE + render_items(history) + " " + BPR_QUESTION + " " + render_items(choices)


def render_bpr_output(positive: Item) -> str:
    return render_item(positive)


def render_ie(display_id: str, field: str, value: str | float | Sequence[str]) -> tuple[str, str]:
    """One question/answer pair for a populated item content field."""
    if field == "categories":
        question = f"What are the categories of {display_id}?"
        answer = ", ".join(value)  # type: ignore[arg-type]
    elif field == "price":
        question = f"What's the price of {display_id}?"
        answer = f"{value:g}" if isinstance(value, float) else str(value)
    elif field in ("title", "brand", "description"):
        question = f"What's the {field} of {display_id}?"
        answer = str(value)
    else:
        raise ValueError(f"no template for item field: {field}")
    return question, answer
