"""Core record types shared by every stage of the question-generation engine."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Template(enum.IntEnum):
    """The seven sentence intents. NULL marks sentences that yield no question."""

    NULL = 0
    WorkAuth = 1
    Sponsorship = 2
    Education = 3
    Language = 4
    Credential = 5
    Tools = 6

    @classmethod
    def from_name(cls, name: str) -> "Template":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown template name: {name!r}") from None


# Templates whose questions carry an entity parameter.
PARAMETRIC_TEMPLATES = frozenset(
    {Template.Education, Template.Language, Template.Credential, Template.Tools}
)


class EntityType(enum.Enum):
    Degree = "Degree"
    ToolSkill = "ToolSkill"
    SpokenLanguage = "SpokenLanguage"
    Credential = "Credential"

    @classmethod
    def from_name(cls, name: str) -> "EntityType":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown entity type: {name!r}") from None


@dataclass(frozen=True)
class JobPosting:
    id: str
    title: str
    body: str
    job_features: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("job id must be non-empty")


@dataclass(frozen=True)
class ScreeningQuestion:
    """A structured question: an intent template plus an optional entity parameter."""

    template: Template
    parameter: str | None = None

    def __post_init__(self):
        if self.template == Template.NULL:
            raise ValueError("a screening question cannot use the NULL template")
        needs_param = self.template in PARAMETRIC_TEMPLATES
        if needs_param and not self.parameter:
            raise ValueError(f"template {self.template.name} requires a parameter")
        if not needs_param and self.parameter is not None:
            raise ValueError(f"template {self.template.name} takes no parameter")


@dataclass(frozen=True)
class LabeledSentence:
    text: str
    template: Template

    def __post_init__(self):
        if not self.text:
            raise ValueError("sentence text must be non-empty")


@dataclass(frozen=True)
class FeedbackTriple:
    """One poster decision about a suggested question, as logged by the service."""

    job_id: str
    template: Template
    parameter: str | None
    label: str  # "accepted" | "rejected"
    timestamp: float

    def __post_init__(self):
        if self.template == Template.NULL:
            raise ValueError("feedback cannot reference the NULL template")
        if self.label not in ("accepted", "rejected"):
            raise ValueError(f"label must be 'accepted' or 'rejected', got {self.label!r}")
        needs_param = self.template in PARAMETRIC_TEMPLATES
        if needs_param and not self.parameter:
            raise ValueError(f"template {self.template.name} requires a parameter")
        if not needs_param and self.parameter is not None:
            raise ValueError(f"template {self.template.name} takes no parameter")

    @property
    def accepted(self) -> bool:
        return self.label == "accepted"

    def key(self) -> tuple[str, Template, str | None]:
        return (self.job_id, self.template, self.parameter)


def dedup_feedback(triples: list[FeedbackTriple]) -> list[FeedbackTriple]:
    """Last-write-wins dedup on (job, template, parameter), preserving first-seen order."""
    latest: dict[tuple, FeedbackTriple] = {}
    for t in triples:
        latest[t.key()] = t
    return list(latest.values())
