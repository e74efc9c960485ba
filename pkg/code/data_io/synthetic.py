"""Rule-based dialogue corpus with a known answer for every pair.

A dialogue opens with one small-talk line, then has one utterance
``"s<k>: <subject> <cue> <object> ."`` per pair in pair order. Every line is
six tokens long, so the cue of pair ``p`` always sits at the same offset. The
cue is fixed by the template id and the label is ``template % num_relation_types``.
"""
import logging

from errors import ConfigError
from numeric_core import seeded_rng

from .labels import LabelMap
from .types import DialogueExample, RelationInstance

logger = logging.getLogger(__name__)

NAMES = [
"monica", "richard", "rachel", "ross", "chandler", "joey", "phoebe", "emily", "janice", "mike",
"carol", "susan", "gunther", "frank", "julie", "paolo", "kathy", "pete", "tag", "elizabeth",
]

CUES = [
"likes", "dislikes", "dates", "knows", "visits", "hires", "teaches", "calls",
"helps", "follows", "admires", "avoids", "trusts", "thanks", "meets", "warns",
]

# Four tokens each, like "<subject> <cue> <object> ."
SMALL_TALK = [
"oh my god .",
"how you doin ?",
"is this awkward ?",
"i knew it !",
"where were you ?",
"that is great .",
]

TEMPLATES_PER_LABEL = 2


def synthetic_labels(num_relation_types: int) -> LabelMap:
    return LabelMap(tuple(f'rel_{k}' for k in range(num_relation_types)))


def template_cue(template: int) -> str:
    base = CUES[template % len(CUES)]
    return base if template < len(CUES) else f'{base}{template // len(CUES)}'


def label_of_template(template: int, num_relation_types: int) -> int:
    return template % num_relation_types


def generate_synthetic(seed: int, num_dialogues: int, num_relation_types: int,
                       max_pairs: int) -> tuple[list[DialogueExample], LabelMap]:
    if min(num_dialogues, num_relation_types, max_pairs) < 1:
        raise ConfigError('generate_synthetic: every size parameter must be positive')
    if 2 * max_pairs > len(NAMES):
        raise ConfigError(f'generate_synthetic: max_pairs {max_pairs} needs more than {len(NAMES)} names')
    rng = seeded_rng(seed)
    labels = synthetic_labels(num_relation_types)

    # Labels are drawn from shuffled blocks of all types so the histogram stays flat.
    pending: list[int] = []

    def next_label() -> int:
        if not pending:
            pending.extend(int(k) for k in rng.permutation(num_relation_types))
        return pending.pop()

    examples = []
    for d in range(num_dialogues):
        n = int(rng.integers(1, max_pairs + 1))
        people = [NAMES[i] for i in rng.choice(len(NAMES), size=2 * n, replace=False)]
        utterances = [f's{int(rng.integers(1, 3))}: {SMALL_TALK[int(rng.integers(0, len(SMALL_TALK)))]}']
        relations = []
        for p in range(n):
            label = next_label()
            template = label + num_relation_types * int(rng.integers(0, TEMPLATES_PER_LABEL))
            subject, obj = people[2 * p], people[2 * p + 1]
            utterances.append(f's{int(rng.integers(1, 3))}: {subject} {template_cue(template)} {obj} .')
            relations.append(RelationInstance(subject, obj, (label_of_template(template, num_relation_types),),
                                              template))
        examples.append(DialogueExample(utterances, relations, dialogue_id=f'synthetic-{d}'))

    logger.debug('generated %d synthetic dialogues, %d relation types', num_dialogues, num_relation_types)
    return examples, labels
