"""Data model IO and the synthetic corpus generator.

The generator assembles labeled sentences from per-template phrase banks (with
taxonomy entities filling the slots), distractor sentences for the NULL class,
and whole postings whose accepted/rejected feedback follows a configurable
poster-preference function. Banks deliberately share vocabulary across classes
(visa payments vs. visa sponsorship, bachelor parties vs. bachelor's degrees,
"go"/"excel"/"word" as tools vs. plain verbs) so bag-of-words shortcuts break
while composition-aware models do not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .records import (
    FeedbackTriple,
    JobPosting,
    LabeledSentence,
    PARAMETRIC_TEMPLATES,
    Template,
)
from .params import COMPATIBILITY
from .textproc import Taxonomy, load_taxonomy, write_taxonomy


class DatasetError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def bundled_taxonomy() -> Taxonomy:
    with resources.as_file(resources.files("sqgen.data") / "taxonomy.tsv") as p:
        return load_taxonomy(p)


DEFAULT_JOB_FEATURE_SCHEMA: dict[str, list[str]] = {
    "industry": ["technology", "healthcare", "finance", "education", "agriculture",
                 "transportation", "government", "retail", "hospitality",
                 "construction", "media", "energy"],
    "company_size": ["1-10", "11-50", "51-200", "201-1000", "1001-5000", "5000+"],
    "seniority": ["entry", "associate", "mid", "senior", "lead", "executive"],
    "function": ["engineering", "sales", "operations", "marketing", "support",
                 "hr", "accounting", "logistics"],
    "region": ["na-east", "na-west", "na-central", "emea", "apac", "latam"],
    "employment_status": ["full-time", "part-time", "contract", "temporary", "internship"],
    "experience_level": ["0-1", "2-3", "4-6", "7-10", "10+"],
    "title_group": ["software", "data", "nursing", "teaching", "accounting",
                    "driving", "admin", "field", "creative", "service"],
}

# Which question intents each industry's posters actually accept.
INDUSTRY_AFFINITY: dict[str, tuple[Template, ...]] = {
    "technology": (Template.Tools, Template.Education),
    "healthcare": (Template.Credential, Template.Education),
    "finance": (Template.Education, Template.Credential),
    "education": (Template.Education, Template.Language),
    "agriculture": (Template.Language, Template.WorkAuth),
    "transportation": (Template.Credential, Template.WorkAuth),
    "government": (Template.WorkAuth, Template.Sponsorship),
    "retail": (Template.Language, Template.Tools),
    "hospitality": (Template.Language, Template.Credential),
    "construction": (Template.Credential, Template.Tools),
    "media": (Template.Tools, Template.Education),
    "energy": (Template.Credential, Template.Tools),
}

_IS_TAILS = [
    "is required",
    "is preferred",
    "is a must",
    "is essential",
    "is expected",
    "is mandatory",
    "is strongly preferred",
    "is a plus",
    "is required for all new hires",
    "is verified during onboarding",
    "is helpful but not required",
    "is needed for daily work",
    "is helpful",
    "is necessary",
]
_AVAIL_TAILS = [
    "is available for this role",
    "is offered to qualified candidates",
    "is not available at this time",
    "may be discussed after review",
    "is supported for this position",
    "is offered after the probation period",
    "is available",
    "is not offered",
]

_WORKAUTH_SUBJECTS = [
    "work authorization",
    "valid work authorization",
    "us work authorization",
    "employment eligibility",
    "proof of work eligibility",
    "the legal right to work",
]
_WORKAUTH_FIXED = [
    "must be authorized to work in the united states",
    "candidates must be eligible to work in canada",
    "you must be legally authorized to work for any employer",
    "we participate in e-verify to confirm work eligibility",
    "permanent residents and citizens are eligible to apply",
    "must show proof of eligibility to work on day one",
    "current authorization to work is expected at the time of hire",
    "work authorization required",
]

_SPONSOR_SUBJECTS = [
    "visa sponsorship",
    "work visa sponsorship",
    "employment visa sponsorship",
    "green card sponsorship",
]
_SPONSOR_FIXED = [
    "we are unable to sponsor work visas at this time",
    "no visa sponsorship is available for this position",
    "this position does not offer visa sponsorship",
    "the company will sponsor eligible employment visas",
    "we cannot provide visa sponsorship now or in the future",
    "sponsorship transfer cases are supported for current visa holders",
    "we sponsor work visas for strong candidates",
    "visa sponsorship available",
]

# Subject fragments crossed with the shared tails. Ambiguity-safe frames use
# only vocabulary that NULL and other classes also use at comparable rates.
_EDU_SUBJECTS = [
    "a {e}",
    "a completed {e}",
    "a valid {e}",
    "a {e} in a related field",
    "a {e} or equivalent experience",
]
_LANG_SUBJECTS = [
    "fluent {e}",
    "conversational {e}",
    "business level {e}",
    "written and spoken {e}",
    "{e} fluency",
]
_CRED_SUBJECTS = [
    "a valid {e}",
    "an active {e}",
    "a current {e}",
]
_TOOLS_SUBJECTS = [
    "{e} experience",
    "hands on {e} experience",
    "daily {e} work",
    "daily {e} reporting",
    "strong {e} knowledge",
    "{e}",
]

_EDU_SAFE = (
    [f"{s} {t}" for s in _EDU_SUBJECTS for t in _IS_TAILS]
    + [
        "{e} is a must",
        "must have: {e}",
        "nice to have: {e}",
        "what we need: {e}",
        "{e} required",
        "{e} preferred",
        "must have: a {e}",
        "what we need: a {e}",
        "you will need a {e}",
        "a {e} plus 2 years experience accepted",
        "{e} or equivalent experience accepted",
    ]
)
_EDU_RICH = [
    "candidates must hold a {e}",
    "minimum education requirement is a {e}",
    "we require a {e} from an accredited institution",
    "applicants should have earned a {e}",
    "a {e} preferred by the hiring manager",
    "a {e} with strong academic results preferred",
    "graduates with a {e} are encouraged to apply",
]

_LANG_SAFE = (
    [f"{s} {t}" for s in _LANG_SUBJECTS for t in _IS_TAILS]
    + [
        "{e} is a must",
        "must have: {e}",
        "nice to have: {e}",
        "what we need: {e}",
        "{e} required",
        "{e} preferred",
        "what we need: fluent {e}",
        "full {e} fluency is expected",
        "nice to have: conversational {e}",
        "support {e} speaking customers daily",
        "daily calls with {e} speaking clients expected",
        "daily duties include calls in {e}",
        "we provide phone support in {e}",
        "{e} required to liaise with partner companies",
        "interpret at client events in {e}",
        "interpret at conference events in {e}",
        "connect with {e} speaking people daily",
    ]
)
_LANG_RICH = [
    "translate written materials into {e}",
    "we serve a large {e} speaking community",
    "must read and write {e} fluently",
    "interpret for {e} speaking visitors at the office",
    "bilingual {e} and english preferred",
]

_CRED_SAFE = (
    [f"{s} {t}" for s in _CRED_SUBJECTS for t in _IS_TAILS]
    + [
        "{e} is a must",
        "must have: {e}",
        "nice to have: {e}",
        "what we need: {e}",
        "{e} required",
        "current {e} preferred",
        "what we need: a valid {e}",
        "keep your {e} current",
        "an expired {e} is not acceptable",
        "you will need a {e}",
        "{e} must be current at time of hire",
    ]
)
_CRED_RICH = [
    "must hold a current {e}",
    "certification required: {e}",
    "candidates need a {e} in good standing",
    "present your {e} during onboarding",
    "{e} obtained within 90 days of hire is acceptable",
]

_TOOLS_CASUAL = [
    "we practically live in {e} here",
    "our whole day runs on {e}",
    "everything here runs on {e}",
    "we do everything in {e}",
    "most of the day happens in {e}",
    "our day starts and ends in {e}",
    "the team lives in {e} dashboards all day",
    "live dashboards built in {e}",
    "{e} runs everything here",
]

_TOOLS_SAFE = (
    [f"{s} {t}" for s in _TOOLS_SUBJECTS for t in _IS_TAILS]
    + _TOOLS_CASUAL
    + [
        "{e} is a must",
        "must have: {e}",
        "nice to have: {e}",
        "what we need: {e}",
        "{e} required",
        "{e} preferred",
        "strong {e} skills required",
        "must have: {e} experience",
        "nice to have: {e}",
        "what you will do: daily {e} work",
        "experience with {e} required",
        "4+ years of {e} experience",
        "daily {e} reports required",
        "support customers using {e}",
        "build quarterly data reports in {e}",
        "present results from {e} dashboards every week",
        "maintain shop equipment records in {e}",
        "process customer payments in {e}",
        "must know {e} well",
        "prior {e} experience is required",
        "nothing but {e} all day",
    ]
)
_TOOLS_RICH = [
    "production systems run on {e}",
    "{e} experience in a team environment",
    "3 d modeling experience in {e} required",
    "hands on {e} training provided during onboarding",
    "take ownership of our {e} pipelines",
    "expert knowledge of {e} expected",
    "3+ years building with {e}",
    "working knowledge of {e} is essential",
    "no two days are the same working with {e}",
    "stay ahead of {e} updates",
    "zero downtime {e} deployments",
    "focus on {e} automation daily",
    "deliver {e} projects on schedule",
]

# NULL subjects crossed with the same tails: template-less requirements plus
# ambiguous-sense phrases built from vocabulary the classes also use.
_NULL_REQ_SUBJECTS = [
    "weekend availability",
    "reliable transportation",
    "a background check",
    "a drug screening",
    "a flexible schedule",
    "customer service experience",
    "management experience",
    "a professional appearance",
    "a positive attitude",
    "attention to detail",
    "daily equipment maintenance",
    "proof of delivery photography",
    "a high degree of customer focus",
    "a high degree of team support",
    "manager authorization for schedule changes",
    "building access authorization",
    "team equipment access",
    "customer data access",
    "daily production reporting",
    "weekly results reporting",
]
_NULL_AVAIL_SUBJECTS = [
    "event sponsorship",
    "conference sponsorship for speakers",
    "team events sponsorship",
    "equipment sponsorship for local teams",
    "tuition support",
    "training support",
    "commuter support",
]
# Template-less requirements: real postings are full of them, and they reuse
# the class frames verbatim so the frame words carry no class signal.
_NULL_REQUIREMENTS = [
    "training required",
    "travel required",
    "weekend work required",
    "overtime required",
    "lifting 50 pounds required",
    "standing for long periods required",
    "reliable transportation required",
    "references required",
    "strong people skills required",
    "customer service experience required",
    "management experience preferred",
    "daily training reports required",
    "must have: a positive attitude",
    "what we need: attention to detail",
    "nice to have: weekend availability",
]
_NULL_TRAPS = [
    # tool-word senses inside frames whose every content word other classes use
    "go over daily reports with the team",
    "go over weekly results with your manager",
    "teams go far with strong daily support",
    "we go far for every customer",
    "we go with what we know",
    "experience required to go far here",
    "teams excel with strong daily support",
    "we excel at customer support",
    "we excel at daily customer work",
    "teams here excel every quarter",
    "we excel at what we do",
    "we excel with the experience we have",
    "the last word in customer service",
    "spread the word across the team",
    "spread the word about our daily wins",
    "we keep our word to our customers",
    "access to strong training support",
    "we have access to what we need",
    "open access to the support team daily",
    "spark strong results across the team",
    "bring your spark to daily work",
    "a spark of team energy every day",
    "a spark is all we need",
    "sketch daily production ideas with the team",
    "we sketch what we will build",
    "sketch out weekly results with the team",
    "swift daily support for every customer",
    "swift results expected from every project",
    "swift support for every customer request",
    "zero rust on our production equipment",
    "rust free equipment for daily work",
    "r and d teams present quarterly results",
    "our r and d work supports every team",
    "go over quarterly reports with the team",
    "hands on training provided",
    "all hands meetings every quarter",
    "on the job training provided",
    # degree / bachelor / education senses
    "we provide bachelor party supplies",
    "bachelor and bachelorette events are our specialty",
    "a high degree of ownership is expected",
    "this role offers a high degree of autonomy",
    "360 degree reviews happen quarterly",
    "completed projects ship every week",
    "related duties as assigned",
    "field work in all weather conditions",
    "a master plan guides our growth",
    "data science meetups hosted monthly",
    "public speaking events happen quarterly",
    # language-name senses
    "our clients include european and chinese companies",
    "classic french cuisine served daily",
    "japanese design in every detail",
    "spanish style courtyard for team lunches",
    "german equipment for daily production work",
    "italian espresso machines in every office",
    "plain english documentation is our style",
    # visa / sponsorship / authorization senses
    "visa payments accepted every day",
    "we sponsor local team events every quarter",
    "green initiatives guide our supply chain",
    "work gear provided for daily production",
    "the united way fundraiser runs each fall",
    "we ship to all fifty states",
    "benefits eligibility begins after 90 days",
    # credential-ish senses
    "we validate parking for all visitors",
    "certificates of appreciation awarded at team events",
    "we are licensed and bonded since 1998",
    "our products carry organic certification",
    "keep an active gym membership through our wellness program",
    "proficiency reviews happen twice a year",
    # casual-register counterparts of the tools frames
    "we live our values every day",
    "we do what we say we will do",
    "our whole team shows up for every customer",
    "most of what we do happens as a team",
    "payday happens every other friday",
    "the day starts with a team huddle here",
    "everything we do starts with the customer",
    "our day runs on strong coffee and teamwork",
    # requirement-word senses
    "experience our award winning culture every day",
    "customer support experience appreciated by the whole team",
    "required reading: our culture handbook",
    "years of community trust back our brand",
    "we build strong teams daily",
    "we hire for attitude and train for skills",
]
# Explicit requirement waivers: the posting names the thing and then waives
# it, so no screening question follows. Slots are filled like the owning
# template's sentences, making these near-duplicates of class cells that only
# the negation markers distinguish.
_WAIVER_PATTERNS: dict[Template, list[str]] = {
    Template.Education: [
        "a {e} is not required",
        "a {e} is not required for this role",
        "no {e} required",
        "a {e} is not necessary, we will train you",
        "no {e} needed, full training provided",
    ],
    Template.Language: [
        "fluent {e} is not required",
        "{e} is not required for this role",
        "{e} is not necessary, we will train you",
        "no {e} needed for daily work",
    ],
    Template.Credential: [
        "a valid {e} is not required to start",
        "a {e} is not required on day one",
        "no {e} needed, full training provided",
        "a {e} is not necessary, we will train you",
    ],
    Template.Tools: [
        "{e} experience is not required",
        "{e} experience is not required, we will train you",
        "no {e} experience needed, full training provided",
        "no prior {e} experience required",
        "{e} is not necessary for this role",
    ],
    Template.WorkAuth: [
        "work authorization is not required for this role",
        "us work authorization is not required for this position",
    ],
}

_NULL_GENERIC = [
    "competitive salary and flexible hours",
    "small team but big goals",
    "join our mission to build a better commute",
    "our office has free snacks and cold brew on tap",
    "we celebrate wins together as a team",
    "health insurance and 401k matching included",
    "casual dress code all week long",
    "about us: founded in 2005 and growing fast",
    "relocation assistance may be discussed",
    "we are an equal opportunity employer",
    "benefits start on your first day",
    "team offsites happen twice a year",
    "this role reports to the regional manager",
    "paid time off accrues from day one",
    "remote friendly with quarterly meetups",
    "phone support shifts rotate weekly",
]

# Synthetic place names for location suffixes: the rare-token tail every real
# posting corpus has. Compounds never collide with taxonomy surface tokens.
_PLACE_FIRST = [
    "ash", "bay", "bel", "briar", "cedar", "clay", "crest", "dale", "dover",
    "edge", "elm", "fern", "gable", "glen", "haven", "kirk", "lark", "linden",
    "marsh", "mill", "nor", "oak", "pell", "quarry", "row", "sut", "thorn", "wex",
]
_PLACE_SECOND = [
    "wood", "field", "ford", "gate", "more", "port", "ridge", "ton", "vale",
    "view", "ville", "brook", "burg", "dale", "mont", "ley",
]
_FILLER_TEMPLATES = [
    "at our {p} location",
    "at the {p} office",
    "for our {p} branch",
    "across the {p} team",
    "based in {p}",
    "near the {p} campus",
    "for the {p} market",
    "with the {p} group",
]


def place_names() -> list[str]:
    return [a + b for a in _PLACE_FIRST for b in _PLACE_SECOND]


# Explicit requirement waivers: the posting names the thing and then waives
# it, so no screening question follows. Slots are filled like the owning
# template's sentences, making these near-duplicates of class cells that only
# the negation markers distinguish.
_WAIVER_PATTERNS: dict[Template, list[str]] = {
    Template.Education: [
        "a {e} is not required",
        "a {e} is not required for this role",
        "no {e} required",
        "a {e} is not necessary, we will train you",
        "no {e} needed, full training provided",
    ],
    Template.Language: [
        "fluent {e} is not required",
        "{e} is not required for this role",
        "{e} is not necessary, we will train you",
        "no {e} needed for daily work",
    ],
    Template.Credential: [
        "a valid {e} is not required to start",
        "a {e} is not required on day one",
        "no {e} needed, full training provided",
        "a {e} is not necessary, we will train you",
    ],
    Template.Tools: [
        "{e} experience is not required",
        "{e} experience is not required, we will train you",
        "no {e} experience needed, full training provided",
        "no prior {e} experience required",
        "{e} is not necessary for this role",
    ],
    Template.WorkAuth: [
        "work authorization is not required for this role",
        "us work authorization is not required for this position",
    ],
}

_NULL_GENERIC = [
    "competitive salary and flexible hours",
    "small team but big goals",
    "join our mission to build a better commute",
    "our office has free snacks and cold brew on tap",
    "we celebrate wins together as a team",
    "health insurance and 401k matching included",
    "casual dress code all week long",
    "about us: founded in 2005 and growing fast",
    "relocation assistance may be discussed",
    "we are an equal opportunity employer",
    "benefits start on your first day",
    "team offsites happen twice a year",
    "this role reports to the regional manager",
    "paid time off accrues from day one",
    "remote friendly with quarterly meetups",
    "phone support shifts rotate weekly",
]

# Common entities are also the ambiguous ones; oversample them so surface-level
# shortcuts (visa/bachelor/go/excel/word/...) stay unreliable. Their corpus
# mass is tuned to roughly match the mass of their NULL-sense cells, leaving
# per-token statistics uninformative.
ENTITY_WEIGHTS: dict[str, float] = {
    "tool/go": 7, "tool/excel": 7, "tool/word": 6, "tool/access": 6,
    "tool/spark": 5, "tool/sketch": 5, "tool/swift": 5, "tool/rust": 5,
    "tool/r": 5, "tool/java": 4, "tool/python": 4, "tool/sql": 4,
    "lang/chinese": 8, "lang/french": 8, "lang/japanese": 7, "lang/spanish": 8,
    "lang/german": 7, "lang/italian": 6, "lang/english": 3,
    "degree/bachelor": 8, "degree/master": 6, "degree/high-school": 4,
    "cred/cdl": 4, "cred/cpa": 3, "cred/rn": 3, "cred/cpr": 3,
}


# Frames shared verbatim by every parametric class: the entity token is the
# only class evidence in them.
MINIMAL_FRAMES = [
    "{e} required",
    "{e} preferred",
    "{e} is a must",
    "must have: {e}",
    "nice to have: {e}",
    "what we need: {e}",
]


def default_phrase_banks() -> dict[Template, list[str]]:
    """Full banks: ambiguity-safe shared-frame patterns plus richer fixed ones."""
    return {
        Template.WorkAuth: (
            [f"{s} {t}" for s in _WORKAUTH_SUBJECTS for t in _IS_TAILS] + _WORKAUTH_FIXED
        ),
        Template.Sponsorship: (
            [f"{s} {t}" for s in _SPONSOR_SUBJECTS for t in _AVAIL_TAILS] + _SPONSOR_FIXED
        ),
        Template.Education: _EDU_SAFE + _EDU_RICH,
        Template.Language: _LANG_SAFE + _LANG_RICH,
        Template.Credential: _CRED_SAFE + _CRED_RICH,
        Template.Tools: _TOOLS_SAFE + _TOOLS_RICH,
    }


def ambiguity_safe_banks() -> dict[Template, list[str]]:
    """Patterns whose non-slot vocabulary is shared across classes; ambiguous
    entities (whose surfaces also occur in NULL senses) are drawn only from
    these, so no stray pattern word resolves them."""
    return {
        Template.Education: list(_EDU_SAFE),
        Template.Language: list(_LANG_SAFE),
        Template.Credential: list(_CRED_SAFE),
        Template.Tools: list(_TOOLS_SAFE),
    }


def default_distractor_bank() -> list[str]:
    crossing = [f"{s} {t}" for s in _NULL_REQ_SUBJECTS for t in _IS_TAILS]
    crossing += [f"{s} {t}" for s in _NULL_AVAIL_SUBJECTS for t in _AVAIL_TAILS]
    # Trap and template-less-requirement sentences get extra weight: they are
    # the cases that matter.
    return _NULL_TRAPS * 10 + _NULL_REQUIREMENTS * 6 + crossing + _NULL_GENERIC * 2


def affinity_preference(
    affinity: dict[str, tuple[Template, ...]],
    accept_hi: float = 0.95,
    accept_lo: float = 0.05,
) -> Callable[[dict, Template, str | None], float]:
    """Acceptance probability driven purely by (industry, template)."""

    def preference(job_features: dict, template: Template, parameter: str | None) -> float:
        favored = affinity.get(job_features.get("industry", ""), ())
        return accept_hi if template in favored else accept_lo

    return preference


@dataclass(frozen=True)
class SplitSpec:
    sentences_per_template: int
    jobs: int
    fresh_entities: bool = False  # draw from the full entity pool, incl. held-out

    def __post_init__(self):
        if self.sentences_per_template <= 0 or self.jobs < 0:
            raise ValueError("split counts must be positive")


@dataclass
class SynthConfig:
    seed: int = 7
    splits: dict[str, SplitSpec] = field(default_factory=lambda: {
        "train": SplitSpec(700, 420),
        "test": SplitSpec(200, 120),
        "val": SplitSpec(100, 60),
    })
    job_feature_schema: dict[str, list[str]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_JOB_FEATURE_SCHEMA.items()}
    )
    phrase_banks: dict[Template, list[str]] = field(default_factory=default_phrase_banks)
    distractor_bank: list[str] = field(default_factory=default_distractor_bank)
    taxonomy: Taxonomy | None = None
    preference: Callable[[dict, Template, str | None], float] = field(
        default_factory=lambda: affinity_preference(INDUSTRY_AFFINITY)
    )
    industry_affinity: dict[str, tuple[Template, ...]] = field(
        default_factory=lambda: dict(INDUSTRY_AFFINITY)
    )
    entity_weights: dict[str, float] = field(default_factory=lambda: dict(ENTITY_WEIGHTS))
    amb_safe_banks: dict[Template, list[str]] = field(default_factory=ambiguity_safe_banks)
    amb_entities: frozenset[str] = field(
        default_factory=lambda: frozenset(
            eid for eid, w in ENTITY_WEIGHTS.items() if w >= 5
        )
    )
    waiver_banks: dict[Template, list[str]] = field(
        default_factory=lambda: {t: list(v) for t, v in _WAIVER_PATTERNS.items()}
    )
    waiver_frac: float = 0.35
    filler_prob: float = 0.35
    heldout_entity_frac: float = 0.0
    minimal_frames: list[str] = field(default_factory=lambda: list(MINIMAL_FRAMES))
    favored_sentences_per_job: int = 4
    other_sentences_per_job: int = 3
    distractors_per_job: int = 2

    def resolved_taxonomy(self) -> Taxonomy:
        return self.taxonomy if self.taxonomy is not None else bundled_taxonomy()


@dataclass
class CorpusBundle:
    jobs: dict[str, list[JobPosting]]
    labeled_sentences: dict[str, list[LabeledSentence]]
    feedback_triples: dict[str, list[FeedbackTriple]]
    taxonomy: Taxonomy


class _EntityPool:
    """Weighted entity sampling with an optional held-out slice per type.

    Held-out entities (chosen deterministically by id hash among the
    unweighted, unambiguous ones) never appear in splits that keep
    ``fresh_entities=False``; test splits may include them, exercising
    generalization to entities with no labeled occurrences.
    """

    def __init__(self, taxonomy: Taxonomy, weights: dict[str, float],
                 heldout_frac: float = 0.0, protected: frozenset = frozenset()):
        from .textproc import fnv1a64

        self.by_type = {}
        for etype in {e.etype for e in taxonomy.entities}:
            ents = taxonomy.of_type(etype)
            candidates = [e for e in ents
                          if e.id not in protected and weights.get(e.id, 1.0) <= 1.0]
            candidates.sort(key=lambda e: fnv1a64(e.id))
            n_held = int(round(heldout_frac * len(candidates)))
            held = {e.id for e in candidates[:n_held]}
            w_all = np.array([weights.get(e.id, 1.0) for e in ents], dtype=np.float64)
            train_mask = np.array([e.id not in held for e in ents])
            w_train = w_all * train_mask
            if w_train.sum() == 0:
                raise ValueError(f"held-out fraction leaves no entities of type {etype}")
            self.by_type[etype] = (ents, w_all / w_all.sum(), w_train / w_train.sum())
        self.heldout_ids = {
            e.id
            for ents, p_all, p_train in self.by_type.values()
            for e, pt in zip(ents, p_train) if pt == 0.0
        }

    def sample(self, etype, rng: np.random.Generator, include_heldout: bool = False):
        if etype not in self.by_type:
            raise ValueError(f"taxonomy has no entities of type {etype}")
        ents, p_all, p_train = self.by_type[etype]
        p = p_all if include_heldout else p_train
        ent = ents[rng.choice(len(ents), p=p)]
        surface = ent.surfaces[rng.integers(len(ent.surfaces))]
        return ent, " ".join(surface)


_PLACES = place_names()


def _with_filler(text: str, config: SynthConfig, rng: np.random.Generator) -> str:
    if config.filler_prob > 0 and rng.random() < config.filler_prob:
        place = _PLACES[rng.integers(len(_PLACES))]
        suffix = _FILLER_TEMPLATES[rng.integers(len(_FILLER_TEMPLATES))]
        return f"{text} {suffix.format(p=place)}"
    return text


def _instantiate(template: Template, config: SynthConfig, pool: _EntityPool,
                 rng: np.random.Generator,
                 fresh_entities: bool = False) -> tuple[str, str | None]:
    """One sentence of the given gold template; returns (text, parameter id)."""
    if template == Template.NULL:
        if config.waiver_banks and rng.random() < config.waiver_frac:
            owners = sorted(config.waiver_banks, key=int)
            owner = owners[rng.integers(len(owners))]
            patterns = config.waiver_banks[owner]
            pattern = patterns[rng.integers(len(patterns))]
            if "{e}" in pattern:
                _, surface = pool.sample(COMPATIBILITY[owner], rng, fresh_entities)
                pattern = pattern.format(e=surface)
            return _with_filler(pattern, config, rng), None
        bank = config.distractor_bank
        if not bank:
            raise ValueError("distractor bank is empty")
        return _with_filler(bank[rng.integers(len(bank))], config, rng), None
    bank = config.phrase_banks.get(template)
    if not bank:
        raise ValueError(f"phrase bank for template {template.name} is empty")
    if template in PARAMETRIC_TEMPLATES:
        ent, surface = pool.sample(COMPATIBILITY[template], rng, fresh_entities)
        if ent.id in pool.heldout_ids and config.minimal_frames:
            bank = config.minimal_frames
        elif ent.id in config.amb_entities:
            bank = config.amb_safe_banks.get(template) or bank
        pattern = bank[rng.integers(len(bank))]
        return _with_filler(pattern.format(e=surface), config, rng), ent.id
    pattern = bank[rng.integers(len(bank))]
    return _with_filler(pattern, config, rng), None


def gen_synthetic_corpus(config: SynthConfig) -> CorpusBundle:
    """Deterministic synthetic corpus: equal seeds give byte-identical datasets."""
    taxonomy = config.resolved_taxonomy()
    pool = _EntityPool(taxonomy, config.entity_weights,
                       heldout_frac=config.heldout_entity_frac,
                       protected=config.amb_entities)
    all_templates = [t for t in Template]
    non_null = [t for t in Template if t != Template.NULL]

    jobs: dict[str, list[JobPosting]] = {}
    sentences: dict[str, list[LabeledSentence]] = {}
    feedback: dict[str, list[FeedbackTriple]] = {}
    timestamp = 1_700_000_000.0

    for split_index, (split, spec) in enumerate(config.splits.items()):
        # independent streams: job counts never perturb sentence draws
        rng = np.random.default_rng([config.seed, split_index, 0])
        split_sentences: list[LabeledSentence] = []
        for template in all_templates:
            for _ in range(spec.sentences_per_template):
                text, _param = _instantiate(template, config, pool, rng,
                                            fresh_entities=spec.fresh_entities)
                split_sentences.append(LabeledSentence(text, template))
        sentences[split] = split_sentences

        rng = np.random.default_rng([config.seed, split_index, 1])
        split_jobs: list[JobPosting] = []
        split_feedback: list[FeedbackTriple] = []
        for i in range(spec.jobs):
            features = {
                name: values[rng.integers(len(values))]
                for name, values in config.job_feature_schema.items()
            }
            favored = list(config.industry_affinity.get(features.get("industry", ""), ()))
            if not favored:
                favored = non_null
            others = [t for t in non_null if t not in favored] or non_null

            chosen: list[Template] = []
            for _ in range(config.favored_sentences_per_job):
                chosen.append(favored[rng.integers(len(favored))])
            for _ in range(config.other_sentences_per_job):
                chosen.append(others[rng.integers(len(others))])

            body_sents: list[str] = []
            candidates: list[tuple[Template, str | None]] = []
            seen: set[tuple[Template, str | None]] = set()
            for template in chosen:
                text, param = _instantiate(template, config, pool, rng,
                                            fresh_entities=spec.fresh_entities)
                body_sents.append(text)
                key = (template, param)
                if key not in seen:
                    seen.add(key)
                    candidates.append(key)
            for _ in range(config.distractors_per_job):
                text, _ = _instantiate(Template.NULL, config, pool, rng,
                                       fresh_entities=spec.fresh_entities)
                body_sents.append(text)
            order = rng.permutation(len(body_sents))
            body = "\n".join(body_sents[j] for j in order)

            job = JobPosting(
                id=f"{split}-J{i:05d}",
                title=f"{features['seniority']} {features['title_group']} opening",
                body=body,
                job_features=features,
            )
            split_jobs.append(job)

            for template, param in candidates:
                p = config.preference(features, template, param)
                if not (0.0 <= p <= 1.0):
                    raise ValueError(f"preference probability {p} outside [0, 1]")
                label = "accepted" if rng.random() < p else "rejected"
                split_feedback.append(FeedbackTriple(job.id, template, param, label, timestamp))
                timestamp += 1.0
        jobs[split] = split_jobs
        feedback[split] = split_feedback

    return CorpusBundle(jobs, sentences, feedback, taxonomy)


def gen_unlabeled_sentences(config: SynthConfig, n: int, seed: int = 1) -> list[str]:
    """Unlabeled sentence sample over the FULL entity pool (held-out included).

    Mimics raw posting text at scale for embedding pretraining; parametric
    slots sometimes take comma lists of same-type entities so that entities of
    one type share sentence contexts.
    """
    taxonomy = config.resolved_taxonomy()
    pool = _EntityPool(taxonomy, config.entity_weights,
                       heldout_frac=config.heldout_entity_frac,
                       protected=config.amb_entities)
    rng = np.random.default_rng(seed)
    templates = [t for t in Template]
    out: list[str] = []
    for _ in range(n):
        template = templates[rng.integers(len(templates))]
        if template in PARAMETRIC_TEMPLATES and rng.random() < 0.45:
            bank = config.phrase_banks[template]
            pattern = bank[rng.integers(len(bank))]
            k = 2 + int(rng.random() < 0.4)
            surfaces = [pool.sample(COMPATIBILITY[template], rng, True)[1] for _ in range(k)]
            joined = ", ".join(surfaces[:-1]) + " and " + surfaces[-1]
            out.append(_with_filler(pattern.format(e=joined), config, rng))
        else:
            text, _ = _instantiate(template, config, pool, rng, fresh_entities=True)
            out.append(text)
    return out


# ---------------------------------------------------------------------------
# Dataset files: line-delimited JSON (taxonomy uses its own line format).

KINDS = ("jobs", "sentences", "feedback", "taxonomy")


def _job_to_dict(job: JobPosting) -> dict:
    return {"id": job.id, "title": job.title, "body": job.body,
            "job_features": job.job_features}


def _sentence_to_dict(s: LabeledSentence) -> dict:
    return {"text": s.text, "template": s.template.name}


def _feedback_to_dict(t: FeedbackTriple) -> dict:
    return {"job_id": t.job_id, "template": t.template.name, "parameter": t.parameter,
            "label": t.label, "timestamp": t.timestamp}


def _require(obj: dict, key: str):
    if key not in obj:
        raise KeyError(f"missing field {key!r}")
    return obj[key]


def _job_from_dict(obj: dict) -> JobPosting:
    return JobPosting(
        id=_require(obj, "id"),
        title=_require(obj, "title"),
        body=_require(obj, "body"),
        job_features=dict(_require(obj, "job_features")),
    )


def _sentence_from_dict(obj: dict) -> LabeledSentence:
    return LabeledSentence(
        text=_require(obj, "text"),
        template=Template.from_name(_require(obj, "template")),
    )


def _feedback_from_dict(obj: dict) -> FeedbackTriple:
    return FeedbackTriple(
        job_id=_require(obj, "job_id"),
        template=Template.from_name(_require(obj, "template")),
        parameter=obj.get("parameter"),
        label=_require(obj, "label"),
        timestamp=float(_require(obj, "timestamp")),
    )


_READERS = {"jobs": _job_from_dict, "sentences": _sentence_from_dict,
            "feedback": _feedback_from_dict}
_WRITERS = {"jobs": _job_to_dict, "sentences": _sentence_to_dict,
            "feedback": _feedback_to_dict}


def load_dataset(path, kind: str) -> list:
    """Load records of one kind; malformed lines raise DatasetError with the line."""
    if kind not in KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}")
    if kind == "taxonomy":
        return list(load_taxonomy(path).entities)
    reader = _READERS[kind]
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(reader(obj))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise DatasetError(path, lineno, str(exc)) from None
    return records


def write_dataset(records, path, kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}")
    if kind == "taxonomy":
        write_taxonomy(Taxonomy(tuple(records)), path)
        return
    writer = _WRITERS[kind]
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(writer(record)) + "\n")


def write_corpus_dir(bundle: CorpusBundle, out_dir) -> None:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for split, jobs in bundle.jobs.items():
        write_dataset(jobs, out / f"jobs_{split}.jsonl", "jobs")
    for split, sents in bundle.labeled_sentences.items():
        write_dataset(sents, out / f"sentences_{split}.jsonl", "sentences")
    for split, fb in bundle.feedback_triples.items():
        write_dataset(fb, out / f"feedback_{split}.jsonl", "feedback")
    write_taxonomy(bundle.taxonomy, out / "taxonomy.tsv")
