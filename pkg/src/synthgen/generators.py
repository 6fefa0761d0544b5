"""
Deterministic generators for in-distribution scenes and the five anomaly tasks.

Every record is a pure function of (seed, stream, seed_index), so records can be
produced in any order and still come out identical.
"""

import numpy as np

from src.config import stage_seed
from src.errors import ContractError, GenerationError
from src.synthgen.world import (
    ANOMALY_TASKS,
    FAMILIES,
    INTERROGATIVES,
    NONVISUAL_FILLERS,
    OOV_WORDS,
    Sample,
    WorldSpec,
)

# Squared distance from the nearest one-shape/one-color pattern above which a
# feature row no longer looks like an in-distribution object.
_ID_RESIDUAL_LIMIT = 0.6

_VARIANTS = {
    "T1": ("",),
    "T2": ("", "oov"),
    "T3": ("",),
    "T4": ("", "nonvisual"),
    "T5": ("",),
}


def _rng(seed: int, stream: str, seed_index: int) -> np.random.Generator:
    return np.random.default_rng([stage_seed(seed, stream), seed_index])


def _choice(rng: np.random.Generator, items) -> str:
    items = list(items)
    if not items:
        raise GenerationError("attribute pool exhausted")
    return items[int(rng.integers(len(items)))]


# ---------------------------------------------------------------------------
# Scenes
# ---------------------------------------------------------------------------


def _scene(
    spec: WorldSpec,
    rng: np.random.Generator,
    fixed: list[tuple[str, str]],
    avoid_shapes: set[str] = frozenset(),
    avoid_colors: set[str] = frozenset(),
) -> np.ndarray:
    """Place `fixed` objects plus random fillers that avoid the given attributes."""
    if len(fixed) > spec.K:
        raise GenerationError(f"scene needs {len(fixed)} objects but K={spec.K}")
    shapes = [s for s in spec.shapes if s not in avoid_shapes]
    colors = [c for c in spec.colors if c not in avoid_colors]
    objects = list(fixed)
    while len(objects) < spec.K:
        if not shapes or not colors:
            raise GenerationError("vocabulary too small to keep referenced attributes unique")
        objects.append((_choice(rng, shapes), _choice(rng, colors)))

    order = rng.permutation(spec.K)
    features = np.zeros((spec.K, spec.d))
    n_shapes = len(spec.shapes)
    for row, index in enumerate(order):
        shape, color = objects[index]
        features[row, spec.shapes.index(shape)] = 1.0
        features[row, n_shapes + spec.colors.index(color)] = 1.0
    return features + rng.normal(0.0, spec.noise_sigma, features.shape)


def _ood_features(spec: WorldSpec, rng: np.random.Generator, family: str) -> np.ndarray:
    if family == "TRAIN":
        return rng.uniform(-1.0, 1.0, (spec.K, spec.d))
    # Two color bits and no shape bit: a pattern no training scene contains.
    if len(spec.colors) < 2:
        raise GenerationError("OOD evaluation pattern needs at least two colors")
    features = np.zeros((spec.K, spec.d))
    n_shapes = len(spec.shapes)
    for row in range(spec.K):
        picks = rng.choice(len(spec.colors), size=2, replace=False)
        features[row, n_shapes + picks] = 1.0
    return features + rng.normal(spec.ood_shift, spec.noise_sigma, features.shape)


def _random_scene(spec: WorldSpec, rng: np.random.Generator) -> np.ndarray:
    return _scene(spec, rng, [])


# ---------------------------------------------------------------------------
# Sentences
# ---------------------------------------------------------------------------


def _id_question(spec: WorldSpec, rng: np.random.Generator, template: int | None = None):
    """Return (words, answer name, scene features) for one answerable question."""
    held = set(spec.held_out_answers)
    if template is None:
        template = int(rng.integers(3))

    if template == 0:
        shape = _choice(rng, spec.shapes)
        color = _choice(rng, [c for c in spec.colors if c not in held])
        features = _scene(spec, rng, [(shape, color)], avoid_shapes={shape})
        return ["what", "color", "is", "the", shape], color, features

    if template == 1:
        color = _choice(rng, spec.colors)
        shape = _choice(rng, [s for s in spec.shapes if s not in held])
        features = _scene(spec, rng, [(shape, color)], avoid_colors={color})
        return ["what", "shape", "is", "the", color, "object"], shape, features

    shape = _choice(rng, spec.shapes)
    color = _choice(rng, spec.colors)
    can_say_no = spec.K >= 2 and len(spec.shapes) >= 2 and len(spec.colors) >= 2
    words = ["is", "there", "a", color, shape]
    if can_say_no and rng.random() < 0.5:
        other_color = _choice(rng, [c for c in spec.colors if c != color])
        other_shape = _choice(rng, [s for s in spec.shapes if s != shape])
        fixed = [(shape, other_color), (other_shape, color)]
        features = _scene(spec, rng, fixed, avoid_shapes={shape}, avoid_colors={color})
        return words, "no", features
    features = _scene(spec, rng, [(shape, color)], avoid_shapes={shape}, avoid_colors={color})
    return words, "yes", features


def _statement(
    spec: WorldSpec, rng: np.random.Generator, family: str, variant: str
) -> tuple[list[str], set[str], set[str]]:
    """Return (words, named shapes, named colors) of one declarative sentence."""
    if variant == "oov":
        length = int(rng.integers(min(4, spec.M), spec.M + 1))
        return [_choice(rng, OOV_WORDS) for _ in range(length)], set(), set()
    c1, c2 = _choice(rng, spec.colors), _choice(rng, spec.colors)
    s1, s2 = _choice(rng, spec.shapes), _choice(rng, spec.shapes)
    if family == "TRAIN":
        words = ["the", c1, s1, "is", "near", "the", c2, s2]
    else:
        words = ["the", c1, s1, "and", "the", c2, s2, "touch"]
    return words, {s1, s2}, {c1, c2}


# ---------------------------------------------------------------------------
# Public generators
# ---------------------------------------------------------------------------


def _sample(spec, words, features, answer, task, family, seed_index, truth=None, variant=""):
    tokens, mask = spec.encode(words)
    return Sample(
        features=features,
        tokens=tokens,
        token_mask=mask,
        answer=answer,
        task=task,
        family=family,
        seed_index=seed_index,
        truth=truth,
        variant=variant,
    )


def gen_id(spec: WorldSpec, n: int, seed: int) -> list[Sample]:
    """
    Generate n answerable scene/question pairs.

    Every attribute named by a question occurs exactly once in its scene and every
    answer is one of spec.candidates.
    """
    if n < 1:
        raise ContractError("n must be at least 1")
    samples = []
    for index in range(n):
        rng = _rng(seed, "ID", index)
        words, answer, features = _id_question(spec, rng)
        samples.append(
            _sample(spec, words, features, spec.answer_id(answer), "ID", "TRAIN", index, truth=answer)
        )
    return samples


def gen_anomaly(
    spec: WorldSpec, task: str, family: str, n: int, seed: int, variant: str = ""
) -> list[Sample]:
    """
    Generate n anomalies of one task and family.

    T1: ID question, OOD features. T2: declarative sentence about objects an ID scene
    does not contain. T3: T1 features with a T2 sentence.
    T4: question about a shape absent from the scene (or, variant "nonvisual", about
    world knowledge). T5: answerable question whose answer is held out of the
    candidates. TRAIN and EVAL families never share OOD patterns, false-premise
    shapes or non-visual fillers.
    """
    if task not in ANOMALY_TASKS:
        raise ContractError(f"unknown anomaly task {task!r}")
    if family not in FAMILIES:
        raise ContractError(f"unknown family {family!r}")
    if variant not in _VARIANTS[task]:
        raise ContractError(f"task {task} has no variant {variant!r}")
    if variant == "oov" and family != "EVAL":
        raise ContractError("the out-of-vocabulary variant is an evaluation family only")
    if n < 1:
        raise ContractError("n must be at least 1")

    stream = f"{task}/{family}/{variant}"
    make = {"T1": _gen_t1, "T2": _gen_t2, "T3": _gen_t3, "T4": _gen_t4, "T5": _gen_t5}[task]
    return [make(spec, _rng(seed, stream, i), family, variant, i) for i in range(n)]


def _gen_t1(spec, rng, family, variant, index):
    words, _, _ = _id_question(spec, rng)
    return _sample(spec, words, _ood_features(spec, rng, family), None, "T1", family, index)


def _gen_t2(spec, rng, family, variant, index):
    # The sentence talks about objects the scene does not contain.
    words, shapes, colors = _statement(spec, rng, family, variant)
    features = _scene(spec, rng, [], avoid_shapes=shapes, avoid_colors=colors)
    return _sample(spec, words, features, None, "T2", family, index, variant=variant)


def _gen_t3(spec, rng, family, variant, index):
    words, _, _ = _statement(spec, rng, family, variant)
    features = _ood_features(spec, rng, family)
    return _sample(spec, words, features, None, "T3", family, index, variant=variant)


def _gen_t4(spec, rng, family, variant, index):
    if variant == "nonvisual":
        filler = _choice(rng, NONVISUAL_FILLERS[family])
        if rng.random() < 0.5:
            words = ["what", "is", "the", "capital", "of", filler]
        else:
            words = ["who", "is", "the", "president", "of", filler]
        return _sample(spec, words, _random_scene(spec, rng), None, "T4", family, index, variant=variant)

    train_pool = set(spec.false_premise_pools.get("TRAIN", ()))
    eval_pool = set(spec.false_premise_pools.get("EVAL", ()))
    if train_pool & eval_pool:
        raise GenerationError("false-premise shape pools of TRAIN and EVAL overlap")
    shape = _choice(rng, spec.false_premise_pools.get(family, ()))
    features = _scene(spec, rng, [], avoid_shapes={shape})
    words = ["what", "color", "is", "the", shape]
    return _sample(spec, words, features, None, "T4", family, index)


def _gen_t5(spec, rng, family, variant, index):
    held = spec.held_out_answers
    pool = held[0::2] if family == "TRAIN" else held[1::2]
    truth = _choice(rng, pool or held)
    if truth in spec.colors:
        shape = _choice(rng, spec.shapes)
        features = _scene(spec, rng, [(shape, truth)], avoid_shapes={shape})
        words = ["what", "color", "is", "the", shape]
    else:
        color = _choice(rng, spec.colors)
        features = _scene(spec, rng, [(truth, color)], avoid_colors={color})
        words = ["what", "shape", "is", "the", color, "object"]
    return _sample(spec, words, features, None, "T5", family, index, truth=truth)


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def decode_objects(spec: WorldSpec, features: np.ndarray) -> list[tuple[str, str]]:
    n_shapes = len(spec.shapes)
    return [
        (spec.shapes[int(np.argmax(row[:n_shapes]))], spec.colors[int(np.argmax(row[n_shapes:]))])
        for row in features
    ]


def looks_in_distribution(spec: WorldSpec, features: np.ndarray) -> bool:
    """True if every row is close to a one-shape/one-color pattern."""
    n_shapes = len(spec.shapes)
    for row in features:
        pattern = np.zeros(spec.d)
        pattern[int(np.argmax(row[:n_shapes]))] = 1.0
        pattern[n_shapes + int(np.argmax(row[n_shapes:]))] = 1.0
        if np.sum((row - pattern) ** 2) >= _ID_RESIDUAL_LIMIT:
            return False
    return True


def derive_answer(spec: WorldSpec, sample: Sample) -> str | None:
    """Re-derive the answer name from scene and question; None if unanswerable."""
    words = spec.decode(sample.tokens, sample.token_mask)
    objects = decode_objects(spec, sample.features)

    if len(words) == 5 and words[:4] == ["what", "color", "is", "the"]:
        matches = [c for s, c in objects if s == words[4]]
        return matches[0] if len(matches) == 1 else None
    if len(words) == 6 and words[:4] == ["what", "shape", "is", "the"] and words[5] == "object":
        matches = [s for s, c in objects if c == words[4]]
        return matches[0] if len(matches) == 1 else None
    if len(words) == 5 and words[:3] == ["is", "there", "a"]:
        return "yes" if (words[4], words[3]) in objects else "no"
    return None


def infer_task(spec: WorldSpec, sample: Sample) -> str:
    """Classify a sample into ID/T1..T5 from its content alone."""
    image_ood = not looks_in_distribution(spec, sample.features)
    words = spec.decode(sample.tokens, sample.token_mask)
    question_ood = not any(w in INTERROGATIVES for w in words)

    if image_ood and question_ood:
        return "T3"
    if image_ood:
        return "T1"
    if question_ood:
        return "T2"
    answer = derive_answer(spec, sample)
    if answer is None:
        return "T4"
    if answer in spec.held_out_answers:
        return "T5"
    return "ID"
