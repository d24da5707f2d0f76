"""Versioned judge/classifier prompt templates shipped with the package.

Templates are plain text files; scoring templates end by demanding a final
``SCORE: <int>`` line so replies stay machine-parsable. The first line of
each template is fixed and unique, which lets scripted judges recognize
which task a rendered prompt belongs to.
"""

from __future__ import annotations

from importlib import resources

PROMPTS_VERSION = "1"

TEMPLATES = (
    "perceptual_quality",
    "semantic_consistency",
    "expression_alignment",
    "dense_instruction",
    "expression_caption",
    "classify_fine",
    "classify_coarse",
)

_cache: dict[str, str] = {}


def load_template(name: str) -> str:
    if name not in TEMPLATES:
        raise KeyError(f"unknown prompt template {name!r}")
    if name not in _cache:
        _cache[name] = (
            resources.files(__name__).joinpath(f"{name}.txt").read_text(encoding="utf-8")
        )
    return _cache[name]


def render(name: str, **values: str) -> str:
    return load_template(name).format(**values)


def identify_task(prompt: str) -> str | None:
    """Map a rendered prompt back to its template name via the fixed first line."""
    first = (prompt or "").lstrip().splitlines()[0] if (prompt or "").strip() else ""
    for name in TEMPLATES:
        if load_template(name).splitlines()[0] == first:
            return name
    return None
