"""Synthetic clinical-style corpus generator.

Stands in for a private radiology corpus: each document is a bag of neutral
background tokens with task-specific finding phrases embedded at random
positions. The label for each task is a deterministic function of the
emitted tokens (`label_from_tokens`), which makes generated labels
recomputable and lets the generator double-check itself:

* negated trigger ("no new hemorrhage")            -> 0 (not present)
* affirmed trigger ("evidence of hemorrhage")      -> 1 (present)
* affirmed trigger + worsening marker ("new ...")  -> 2 (new or worse)
* no trigger at all                                -> 0

Negation cues and most template words are common stopwords on purpose, so
bag-of-words models that strip stopwords lose the context that separates
label 0 from labels 1/2.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import Document
from .util import spawn_rng

SCENARIOS = ("absent", "negated", "affirmed", "worse")

NEGATION_CUES = ("no", "not", "without")
# how many tokens before a trigger are scanned for a negation cue
NEGATION_WINDOW = 3

_DEID_TOKENS = ("date", "name")


@dataclass
class TaskLexicon:
    """Phrases that realize one classification task."""

    triggers: list[list[str]]
    affirm_templates: list[str] = field(
        default_factory=lambda: ["{t}", "evidence of {t}", "there is {t}", "{t} is seen", "{t} noted"]
    )
    negation_templates: list[str] = field(
        default_factory=lambda: ["no {t}", "no new {t}", "no evidence of {t}", "without {t}", "no {t} seen"]
    )
    worsening_markers: list[str] = field(default_factory=lambda: ["new", "increased", "worsening"])
    # relative marker frequencies; "new" dominates so that worsening is hard
    # to separate from the "no new ..." negations by word counts alone
    marker_weights: list[float] = field(default_factory=lambda: [0.6, 0.2, 0.2])

    def words(self) -> set[str]:
        out = set()
        for phrase in self.triggers:
            out.update(phrase)
        for tpl in self.affirm_templates + self.negation_templates:
            out.update(w for w in tpl.split() if w != "{t}")
        out.update(self.worsening_markers)
        return out


def default_lexicons() -> dict[int, TaskLexicon]:
    # no trigger phrase may contain another (same task or not): a nested
    # trigger could sit outside the negation window of the enclosing one
    return {
        1: TaskLexicon(triggers=[["acute", "abnormality"], ["abnormal", "findings"]]),
        2: TaskLexicon(
            triggers=[["intraparenchymal", "hemorrhage"], ["subdural", "hematoma"], ["extraaxial", "hemorrhage"]]
        ),
        3: TaskLexicon(triggers=[["sulcal", "effacement"], ["midline", "shift"], ["mass", "effect"]]),
        4: TaskLexicon(triggers=[["acute", "infarct"], ["ischemic", "stroke"]]),
        5: TaskLexicon(triggers=[["hydrocephalus"], ["ventriculomegaly"]]),
    }


def default_scenario_weights() -> dict[int, tuple[float, float, float, float]]:
    # (absent, negated, affirmed, worse) per task; task 2 is negation-heavy
    return {
        1: (0.20, 0.30, 0.30, 0.20),
        2: (0.15, 0.45, 0.25, 0.15),
        3: (0.30, 0.30, 0.25, 0.15),
        4: (0.50, 0.20, 0.20, 0.10),
        5: (0.50, 0.20, 0.20, 0.10),
    }


@dataclass
class SyntheticSpec:
    num_documents: int
    trigger_lexicon: dict[int, TaskLexicon] = field(default_factory=default_lexicons)
    scenario_weights: dict[int, tuple[float, float, float, float]] = field(
        default_factory=default_scenario_weights
    )
    background_vocab_size: int = 2000
    doc_length_range: tuple[int, int] = (60, 120)
    seed: int = 0
    id_prefix: str = "syn"

    def validate(self) -> None:
        if self.num_documents < 1:
            raise ValueError("num_documents must be >= 1")
        if self.doc_length_range[0] > self.doc_length_range[1] or self.doc_length_range[0] < 1:
            raise ValueError(f"bad doc_length_range {self.doc_length_range}")
        reserved: set[str] = set(NEGATION_CUES) | set(_DEID_TOKENS)
        for task, lex in sorted(self.trigger_lexicon.items()):
            for other_task, other in sorted(self.trigger_lexicon.items()):
                for phrase in lex.triggers:
                    for other_phrase in other.triggers:
                        if phrase is other_phrase:
                            continue
                        if _find_phrase(phrase, other_phrase):
                            raise ValueError(
                                f"task {task} trigger {phrase} is contained in task {other_task} trigger {other_phrase}"
                            )
            reserved |= lex.words()
        self._reserved_words = reserved


def background_words(size: int) -> list[str]:
    """Deterministic pseudo-word list, stable across corpora of the same size.

    Labeled and unlabeled corpora generated with equal ``background_vocab_size``
    therefore share their background vocabulary, which keeps classification
    documents in-vocabulary for embeddings trained on the unlabeled corpus.
    """
    onsets = ["b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "cl", "st", "tr", "pl"]
    vowels = ["a", "e", "i", "o", "u", "ia", "ou"]
    codas = ["", "n", "r", "s", "l", "x", "m", "th", "ck"]
    words: list[str] = []
    i = 0
    while len(words) < size:
        o = onsets[i % len(onsets)]
        v = vowels[(i // len(onsets)) % len(vowels)]
        c = codas[(i // (len(onsets) * len(vowels))) % len(codas)]
        extra = i // (len(onsets) * len(vowels) * len(codas))
        w = o + v + c + ("" if extra == 0 else f"{extra}")
        words.append(w)
        i += 1
    return words


def _find_phrase(phrase: list[str], tokens: list[str]) -> list[int]:
    hits = []
    k = len(phrase)
    for i in range(len(tokens) - k + 1):
        if tokens[i : i + k] == phrase:
            hits.append(i)
    return hits


def label_from_tokens(tokens: list[str], lexicon: TaskLexicon) -> int:
    """The generator's labeling rule: severity recomputed from the tokens."""
    severity = 0
    for phrase in lexicon.triggers:
        for start in _find_phrase(phrase, tokens):
            window = tokens[max(0, start - NEGATION_WINDOW) : start]
            if any(cue in window for cue in NEGATION_CUES):
                continue  # negated occurrence contributes severity 0
            if start >= 1 and tokens[start - 1] in lexicon.worsening_markers:
                severity = max(severity, 2)
            else:
                severity = max(severity, 1)
    return severity


def _realize(scenario: str, lex: TaskLexicon, rng: np.random.Generator) -> list[str]:
    trigger = lex.triggers[rng.integers(len(lex.triggers))]
    text = " ".join(trigger)
    if scenario == "negated":
        tpl = lex.negation_templates[rng.integers(len(lex.negation_templates))]
    elif scenario == "affirmed":
        tpl = lex.affirm_templates[rng.integers(len(lex.affirm_templates))]
    elif scenario == "worse":
        weights = np.asarray(lex.marker_weights, dtype=float)
        marker = lex.worsening_markers[rng.choice(len(lex.worsening_markers), p=weights / weights.sum())]
        tpl = marker + " {t}"
    else:
        raise ValueError(scenario)
    return tpl.format(t=text).split()


_SCENARIO_LABEL = {"absent": 0, "negated": 0, "affirmed": 1, "worse": 2}


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[Document], dict[int, Counter]]:
    """Generate documents plus the per-task label distribution."""
    spec.validate()
    rng = spawn_rng(spec.seed, "synthetic")
    bg_words = [w for w in background_words(spec.background_vocab_size) if w not in spec._reserved_words]
    # Zipf-ish background frequencies so that subsampling during embedding
    # training has something to bite on
    ranks = np.arange(1, len(bg_words) + 1, dtype=float)
    bg_probs = 1.0 / ranks**0.7
    bg_probs /= bg_probs.sum()

    tasks = sorted(spec.trigger_lexicon)
    docs: list[Document] = []
    distribution: dict[int, Counter] = {task: Counter() for task in tasks}
    for doc_idx in range(spec.num_documents):
        blocks: list[list[str]] = []
        intended: dict[int, int] = {}
        for task in tasks:
            weights = np.asarray(spec.scenario_weights[task], dtype=float)
            scenario = SCENARIOS[rng.choice(len(SCENARIOS), p=weights / weights.sum())]
            intended[task] = _SCENARIO_LABEL[scenario]
            if scenario != "absent":
                blocks.append(_realize(scenario, spec.trigger_lexicon[task], rng))

        order = rng.permutation(len(blocks))
        blocks = [blocks[i] for i in order]
        phrase_tokens = sum(len(b) for b in blocks)
        target_len = int(rng.integers(spec.doc_length_range[0], spec.doc_length_range[1] + 1))
        # internal gaps of >= NEGATION_WINDOW background tokens keep one
        # task's phrase out of another's negation window
        min_internal = NEGATION_WINDOW * max(0, len(blocks) - 1)
        needed = phrase_tokens + min_internal + 2
        if needed > spec.doc_length_range[1]:
            raise ValueError(
                f"doc_length_range {spec.doc_length_range} too small to fit "
                f"{phrase_tokens} phrase tokens plus separating background"
            )
        target_len = max(target_len, needed)
        num_bg = target_len - phrase_tokens
        spare = num_bg - min_internal
        cuts = np.sort(rng.integers(0, spare + 1, size=len(blocks)))
        gaps = np.diff(np.concatenate(([0], cuts, [spare])))
        gaps[1:-1] += NEGATION_WINDOW

        bg_draw = rng.choice(len(bg_words), size=num_bg, p=bg_probs)
        deid_mask = rng.random(num_bg) < 0.02
        bg_tokens = [
            _DEID_TOKENS[i % 2] if deid else bg_words[w]
            for i, (w, deid) in enumerate(zip(bg_draw, deid_mask))
        ]
        tokens: list[str] = []
        pos = 0
        for gap, block in zip(gaps, blocks):
            tokens.extend(bg_tokens[pos : pos + gap])
            pos += gap
            tokens.extend(block)
        tokens.extend(bg_tokens[pos:])

        labels = {task: label_from_tokens(tokens, spec.trigger_lexicon[task]) for task in tasks}
        if labels != intended:  # a template/spacing bug, never expected
            raise AssertionError(f"doc {doc_idx}: intended {intended} but recomputed {labels}")
        for task in tasks:
            distribution[task][labels[task]] += 1
        docs.append(
            Document(
                id=f"{spec.id_prefix}-{doc_idx:06d}",
                tokens=tokens,
                labels=labels,
                raw_text=" ".join(tokens),
            )
        )
    return docs, distribution


def trigger_token_set(lexicon: TaskLexicon) -> set[str]:
    """All tokens that belong to some trigger phrase (used by explanations)."""
    out: set[str] = set()
    for phrase in lexicon.triggers:
        out.update(phrase)
    return out
