from dataclasses import dataclass, field

from pydantic import BaseModel, ConfigDict


@dataclass(frozen=True)
class RelationInstance:
    subject: str
    object: str
    gold: tuple[int, ...]
    template: int | None = None

    @property
    def single_label(self) -> int:
        return self.gold[0]


@dataclass
class DialogueExample:
    utterances: list[str]
    relations: list[RelationInstance]
    dialogue_id: str = ''

    @property
    def text(self) -> str:
        return ' '.join(self.utterances)


@dataclass
class LoadStats:
    loaded_items: int = 0
    loaded_relations: int = 0
    skipped_items: int = 0
    skipped_relations: int = 0
    messages: list[str] = field(default_factory=list)

    def skip_relation(self, message: str) -> None:
        self.skipped_relations += 1
        self.messages.append(message)

    def skip_item(self, message: str) -> None:
        self.skipped_items += 1
        self.messages.append(message)


class DataSchema(BaseModel):
    """Field names of the published files; configurable to absorb version drift."""
    model_config = ConfigDict(extra='forbid')

    subject_key: str = 'x'
    object_key: str = 'y'
    relation_key: str = 'r'
    tokens_key: str = 'token'
    subj_start_key: str = 'subj_start'
    subj_end_key: str = 'subj_end'
    obj_start_key: str = 'obj_start'
    obj_end_key: str = 'obj_end'
    tacred_relation_key: str = 'relation'
