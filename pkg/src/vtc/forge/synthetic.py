"""Desk-scale, visually grounded corpus generator.

Each sentence describes one video of a latent scene. A scene owns a few
activities, each a fixed (verb, object) pair; the verb and object slots are
the blanks. Everything else (subject, adjective, adverb, time phrase) is
drawn independently of the scene. A video feature is the scene's embedding
plus Gaussian noise.

A single replaced verb or object breaks its pair, so text alone can tell
that the pair is wrong but not which half. When the replacement comes from
another scene, the video feature says which half is out of place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigError
from .io import AnnotatedSentence, FeatureStore

SCENES = [
    ("kitchen", [("chops", "onion"), ("stirs", "soup"), ("kneads", "dough"), ("peels", "potato")]),
    ("garage", [("repairs", "engine"), ("inflates", "tire"), ("polishes", "bumper"), ("tightens", "bolt")]),
    ("beach", [("builds", "sandcastle"), ("throws", "frisbee"), ("waxes", "surfboard"), ("collects", "seashell")]),
    ("office", [("types", "report"), ("staples", "invoice"), ("answers", "phone"), ("prints", "memo")]),
    ("garden", [("waters", "tulip"), ("rakes", "leaves"), ("prunes", "hedge"), ("plants", "seedling")]),
    ("stable", [("grooms", "horse"), ("saddles", "pony"), ("shovels", "hay"), ("milks", "cow")]),
    ("studio", [("paints", "canvas"), ("sculpts", "clay"), ("sketches", "portrait"), ("frames", "photo")]),
    ("gym", [("lifts", "barbell"), ("swings", "kettlebell"), ("climbs", "rope"), ("pedals", "bike")]),
]

SUBJECTS = [
    "john", "mary", "anna", "tom", "lisa", "peter", "sarah", "david", "emma", "paul",
    "kate", "mark", "julia", "sam", "nina", "alex", "laura", "ben", "olivia", "max",
    "hugo", "rita", "omar", "ivy",
]
ADJECTIVES = [
    "old", "new", "small", "big", "red", "blue", "green", "heavy", "light", "clean",
    "dirty", "shiny", "cheap", "fresh", "warm", "cold", "long", "short", "round", "plain",
    "wet", "dry", "soft", "hard",
]
ADVERBS = [
    "slowly", "quickly", "carefully", "quietly", "happily", "calmly", "eagerly", "gently", "loudly", "briskly",
    "patiently", "proudly", "nervously", "casually", "silently", "firmly", "boldly", "lazily", "swiftly", "neatly",
    "again", "twice",
]
TIME_PHRASES = [
    ["in", "the", "morning"], ["in", "the", "evening"], ["in", "the", "afternoon"], ["at", "night"],
    ["at", "noon"], ["at", "dawn"], ["before", "lunch"], ["after", "dinner"], ["after", "breakfast"],
    ["on", "monday"], ["on", "sunday"], ["during", "the", "storm"], ["for", "an", "hour"],
    ["after", "work"], ["before", "school"], ["at", "sunset"], ["in", "the", "rain"], ["by", "the", "window"],
    ["with", "a", "friend"], ["with", "some", "help"], ["at", "the", "party"],
]
# tags follow the template slot; nouns inside time phrases get their own slot tag
_FUNCTION_TAGS = {"the": "DT", "a": "DT", "an": "DT", "some": "DT"}
_PREPOSITIONS = {"in", "at", "before", "after", "on", "during", "for", "by", "with"}


def _time_tags(phrase: list[str]) -> list[str]:
    return [_FUNCTION_TAGS.get(w, "IN" if w in _PREPOSITIONS else "TIME") for w in phrase]


@dataclass
class SyntheticConfig:
    n_sentences: int = 200
    n_scenes: int = 4
    activities_per_scene: int = 1
    d_v: int = 16
    noise: float = 0.1
    n_subjects: int = 24
    n_adjectives: int = 24
    n_adverbs: int = 22
    p_adjective: float = 0.5
    p_adverb: float = 0.5
    p_time: float = 0.6
    activity_skew: float = 0.0
    id_prefix: str = "syn"

    def validate(self) -> None:
        if not 1 <= self.n_scenes <= len(SCENES):
            raise ConfigError(f"n_scenes must be in 1..{len(SCENES)}")
        if not 1 <= self.activities_per_scene <= len(SCENES[0][1]):
            raise ConfigError(f"activities_per_scene must be in 1..{len(SCENES[0][1])}")
        if self.n_scenes * self.activities_per_scene < 2:
            raise ConfigError("need at least two activities so every slot has a replacement")
        if self.activity_skew < 0:
            raise ConfigError("activity_skew must be non-negative")
        if self.n_sentences < 1 or self.d_v < 1 or self.noise < 0:
            raise ConfigError("n_sentences and d_v must be positive and noise non-negative")
        if not (1 <= self.n_subjects <= len(SUBJECTS) and 1 <= self.n_adjectives <= len(ADJECTIVES) and 1 <= self.n_adverbs <= len(ADVERBS)):
            raise ConfigError("filler pool sizes exceed the built-in word lists")
        for p in (self.p_adjective, self.p_adverb, self.p_time):
            if not 0 <= p <= 1:
                raise ConfigError("slot probabilities must lie in [0, 1]")

    def activities(self) -> list[list[tuple[str, str]]]:
        return [acts[: self.activities_per_scene] for _, acts in SCENES[: self.n_scenes]]


def generate_synthetic(rng: np.random.Generator, config: SyntheticConfig) -> tuple[list[AnnotatedSentence], FeatureStore]:
    """Sample ``config.n_sentences`` tagged sentences and one feature per video."""
    config.validate()
    acts = config.activities()
    subjects = SUBJECTS[: config.n_subjects]
    adjectives = ADJECTIVES[: config.n_adjectives]
    adverbs = ADVERBS[: config.n_adverbs]
    scene_emb = rng.normal(size=(config.n_scenes, config.d_v))
    weights = None
    if config.activity_skew > 0:
        # Zipf weights over all activities, scene-major order
        ranks = np.arange(1, config.n_scenes * config.activities_per_scene + 1, dtype=np.float64)
        weights = ranks**-config.activity_skew
        weights /= weights.sum()
    store = FeatureStore(config.d_v)
    sentences = []
    width = len(str(config.n_sentences))
    for i in range(config.n_sentences):
        if weights is None:
            scene = int(rng.integers(config.n_scenes))
            act = int(rng.integers(len(acts[scene])))
        else:
            scene, act = divmod(int(rng.choice(len(weights), p=weights)), config.activities_per_scene)
        verb, obj = acts[scene][act]
        toks, tags = [], []
        lead_time = rng.random() < config.p_time / 2
        time_phrase = TIME_PHRASES[int(rng.integers(len(TIME_PHRASES)))] if rng.random() < config.p_time else None
        if time_phrase and lead_time:
            toks += time_phrase
            tags += _time_tags(time_phrase)
        toks.append(subjects[int(rng.integers(len(subjects)))])
        tags.append("NNP")
        adverb_first = rng.random() < 0.5
        adverb = adverbs[int(rng.integers(len(adverbs)))] if rng.random() < config.p_adverb else None
        if adverb and adverb_first:
            toks.append(adverb)
            tags.append("RB")
        verb_pos = len(toks)
        toks.append(verb)
        tags.append("VBZ")
        toks.append("the")
        tags.append("DT")
        if rng.random() < config.p_adjective:
            toks.append(adjectives[int(rng.integers(len(adjectives)))])
            tags.append("JJ")
        obj_pos = len(toks)
        toks.append(obj)
        tags.append("NN")
        if adverb and not adverb_first:
            toks.append(adverb)
            tags.append("RB")
        if time_phrase and not lead_time:
            toks += time_phrase
            tags += _time_tags(time_phrase)
        sid = f"{config.id_prefix}{i:0{width}d}"
        vid = f"{sid}.v"
        store[vid] = scene_emb[scene] + config.noise * rng.normal(size=config.d_v)
        sentences.append(AnnotatedSentence(toks, tags, [verb_pos, obj_pos], vid, sid))
    return sentences, store


def bayes_accuracy(config: SyntheticConfig, sighted: bool) -> float:
    """Bayes-optimal single-corruption accuracy (position and word) in closed form.

    Assumes the replacement is drawn uniformly from the other words of the
    same slot, which is what count-proportional sampling gives when the
    activities are equally frequent (``activity_skew == 0``); with a skew the
    value is only an approximation. A broken pair is the only evidence a
    blind model has, and it is symmetric between the two halves, so the
    blind optimum is 1/2. A sighted model resolves every cross-scene
    replacement; same-scene replacements remain a coin flip.
    """
    if not sighted:
        return 0.5
    per_slot = config.n_scenes * config.activities_per_scene
    same_scene = (config.activities_per_scene - 1) / (per_slot - 1)
    return 1.0 - 0.5 * same_scene
