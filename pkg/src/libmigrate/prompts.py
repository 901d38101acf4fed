"""Prompt templates for the three prompting strategies.

Every prompt starts from the same base command, which tells the model to
answer with code only and to surround it with the start/end marker lines.
One-shot prompts add a worked example of migrated code; chain-of-thought
prompts add a numbered step guide followed by the same example.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from libmigrate.errors import ConfigError, MissingExample, MissingGuide, TemplateError

START_MARKER = "### START CODE ###"
END_MARKER = "### END CODE ###"

SYSTEM_ROLE = "You are a developer with expertise in Python"

BASE_COMMAND = (
    "The Python code bellow uses the library sqlalchemy with version 1. "
    "Migrate it so that it works with version 2 of sqlalchemy. "
    "Make the code compatible with python's asyncio. "
    "Use python's typing module to add type hints to the code. "
    "Your answer must only contain code. Do not explain it. "
    "Do not add markdown backticks for code. "
    "Do not add extra functionality to the code. "
    "Do not remove code that is not being changed. "
    "If there's no need to change the code, answer only with the code itself. "
    'The first line of code must have a comment "### START CODE ###". '
    'The last line of code must have a comment "### END CODE ###".'
)

SUBJECT_PREAMBLE = "Here is the code to migrate:"

EXAMPLE_PREAMBLE = (
    "Use the following code block as an example of migrated code, "
    "follow the same patterns used in it:"
)

GUIDE_PREAMBLE = (
    "Use the steps bellow as a guide for the migration. "
    "You don't need to follow them exactly as described, "
    "but they should be able to help with the migration:"
)

STEP_GUIDE = (
    "Update the used database engine, if any, so that you're using "
    "`create_async_engine` instead of `create_engine`.",
    "If any tables and their columns are declared, update their declarations so that "
    "they use `mapped_columns` instead of `schema.Column` and ensure they are correctly "
    "typed with the Mapped annotation, making sure to import the correct types from the library.",
    "Ensure that all queries, if any, are updated to use the new 2.0 style of querying, "
    "such as using `select()` instead of `query()`.",
    "Update functions that use `sessionmaker` to use `session` instead.",
    "Update the code to use async functions and await calls where necessary.",
    "Implement type hinting for all functions and variables and update old type hinting "
    "to ensure they are correct.",
    "Ensure there are no missing import statements.",
    "Remove any unused imports or variable declarations.",
    "Make sure the code works.",
)


class Strategy(str, Enum):
    ZERO_SHOT = "zero-shot"
    ONE_SHOT = "one-shot"
    CHAIN_OF_THOUGHT = "chain-of-thought"

    @property
    def label(self) -> str:
        return {
            Strategy.ZERO_SHOT: "Zero-Shot",
            Strategy.ONE_SHOT: "One-Shot",
            Strategy.CHAIN_OF_THOUGHT: "Chain Of Thoughts",
        }[self]

    @classmethod
    def parse(cls, value: str) -> "Strategy":
        key = value.strip().lower().replace("_", "-").replace(" ", "-")
        aliases = {"zeroshot": "zero-shot", "oneshot": "one-shot", "cot": "chain-of-thought",
                   "chain-of-thoughts": "chain-of-thought"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown strategy {value!r}") from None


@dataclass(frozen=True)
class PromptTemplate:
    base_command: str = BASE_COMMAND
    example_code: Optional[str] = None
    step_guide: Optional[tuple[str, ...]] = STEP_GUIDE
    start_marker: str = START_MARKER
    end_marker: str = END_MARKER
    system_message: str = SYSTEM_ROLE

    def __post_init__(self) -> None:
        if not self.start_marker.strip() or not self.end_marker.strip():
            raise TemplateError("markers must be non-blank")
        if self.start_marker == self.end_marker:
            raise TemplateError("start and end markers must differ")
        for marker in (self.start_marker, self.end_marker):
            count = self.base_command.count(marker)
            if count != 1:
                raise TemplateError(
                    f"base command must mention marker {marker!r} exactly once (found {count})"
                )
        if self.step_guide is not None:
            if isinstance(self.step_guide, list):
                object.__setattr__(self, "step_guide", tuple(self.step_guide))
            if not self.step_guide:
                raise TemplateError("step guide must not be empty")
            if any(not step.strip() for step in self.step_guide):
                raise TemplateError("step guide entries must be non-blank")


@dataclass(frozen=True)
class RenderedPrompt:
    system_message: str
    user_message: str
    subject_block: str

    def messages(self) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.system_message},
            {"role": "user", "content": self.user_message},
        ]


def default_template() -> PromptTemplate:
    return PromptTemplate()


def default_example_code() -> str:
    """Return the bundled one-shot example (declarative models on an async engine)."""
    return resources.files("libmigrate").joinpath("data/example_async_orm.py").read_text("utf-8")


def wrap(code: str, start_marker: str = START_MARKER, end_marker: str = END_MARKER) -> str:
    return f"{start_marker}\n{code}\n{end_marker}"


def render(strategy: Strategy, template: PromptTemplate, subject_code: str) -> RenderedPrompt:
    """Assemble the system and user messages for one subject file.

    The output depends only on the arguments, so identical inputs give
    byte-identical prompts.

    Raises:
        MissingExample: one-shot or chain-of-thought without example code.
        MissingGuide: chain-of-thought without a step guide.
    """
    strategy = Strategy(strategy)
    if strategy is not Strategy.ZERO_SHOT and template.example_code is None:
        raise MissingExample(f"{strategy.value} prompts need example code")
    if strategy is Strategy.CHAIN_OF_THOUGHT and template.step_guide is None:
        raise MissingGuide("chain-of-thought prompts need a step guide")

    subject_block = wrap(subject_code, template.start_marker, template.end_marker)
    parts = [template.base_command]
    if strategy is Strategy.ONE_SHOT:
        parts.append(EXAMPLE_PREAMBLE)
    elif strategy is Strategy.CHAIN_OF_THOUGHT:
        parts.append(GUIDE_PREAMBLE)
        parts.append("\n".join(f"{i}. {step}" for i, step in enumerate(template.step_guide, 1)))
    if strategy is not Strategy.ZERO_SHOT:
        parts.append(wrap(template.example_code.strip("\n"), template.start_marker, template.end_marker))
    parts.append(SUBJECT_PREAMBLE)
    parts.append(subject_block)
    return RenderedPrompt(
        system_message=template.system_message,
        user_message="\n\n".join(parts),
        subject_block=subject_block,
    )


def template_from_mapping(data: Mapping[str, Any], base_dir: Path | None = None) -> PromptTemplate:
    """Build a template from config keys, falling back to the defaults.

    ``example_code_path`` is resolved against ``base_dir``; without it the
    bundled example is used.
    """
    known = {"base_command", "example_code_path", "step_guide", "start_marker",
             "end_marker", "system_message"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown prompt keys: {sorted(unknown)}")
    overrides: dict[str, Any] = {}
    for key in ("base_command", "start_marker", "end_marker", "system_message"):
        if key in data:
            overrides[key] = str(data[key])
    if "step_guide" in data:
        guide = data["step_guide"]
        overrides["step_guide"] = None if guide is None else tuple(str(s) for s in guide)
    path = data.get("example_code_path")
    if path is not None:
        example_path = Path(path)
        if base_dir is not None and not example_path.is_absolute():
            example_path = base_dir / example_path
        try:
            overrides["example_code"] = example_path.read_text("utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read example code {example_path}: {exc}") from exc
    else:
        overrides["example_code"] = default_example_code()
    return dataclasses.replace(default_template(), **overrides)


def load_template(path: str | Path) -> PromptTemplate:
    path = Path(path)
    data = yaml.safe_load(path.read_text("utf-8")) or {}
    return template_from_mapping(data, path.parent)
