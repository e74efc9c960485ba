from dataclasses import dataclass
from typing import Iterable, Sequence

from errors import ConfigError, DataFormatError

DIALOGRE_RELATIONS = [
"per:positive_impression",
"per:negative_impression",
"per:acquaintance",
"per:alumni",
"per:boss",
"per:subordinate",
"per:client",
"per:dates",
"per:friends",
"per:girl/boyfriend",
"per:neighbor",
"per:roommate",
"per:children",
"per:other_family",
"per:parents",
"per:siblings",
"per:spouse",
"per:place_of_residence",
"per:place_of_birth",
"per:visited_place",
"per:origin",
"per:employee_or_member_of",
"per:schools_attended",
"per:works",
"per:age",
"per:date_of_birth",
"per:major",
"per:place_of_work",
"per:title",
"per:alternate_names",
"per:pet",
"gpe:residents_of_place",
"gpe:births_in_place",
"gpe:visitors_of_place",
"org:employees_or_members",
"unanswerable",
]

TACRED_RELATIONS = [
"no_relation",
"org:alternate_names",
"org:city_of_headquarters",
"org:country_of_headquarters",
"org:dissolved",
"org:founded",
"org:founded_by",
"org:member_of",
"org:members",
"org:number_of_employees/members",
"org:parents",
"org:political/religious_affiliation",
"org:shareholders",
"org:stateorprovince_of_headquarters",
"org:subsidiaries",
"org:top_members/employees",
"org:website",
"per:age",
"per:alternate_names",
"per:cause_of_death",
"per:charges",
"per:children",
"per:cities_of_residence",
"per:city_of_birth",
"per:city_of_death",
"per:countries_of_residence",
"per:country_of_birth",
"per:country_of_death",
"per:date_of_birth",
"per:date_of_death",
"per:employee_of",
"per:origin",
"per:other_family",
"per:parents",
"per:religion",
"per:schools_attended",
"per:siblings",
"per:spouse",
"per:stateorprovince_of_birth",
"per:stateorprovince_of_death",
"per:stateorprovinces_of_residence",
"per:title",
]

BUILTIN_LABEL_SETS = {
    'dialogre': (DIALOGRE_RELATIONS, 'unanswerable'),
    'tacred': (TACRED_RELATIONS, 'no_relation'),
}


@dataclass(frozen=True)
class LabelMap:
    names: tuple[str, ...]
    no_relation: str | None = None

    def __post_init__(self):
        if not self.names:
            raise ConfigError('label map is empty')
        if len(set(self.names)) != len(self.names):
            raise ConfigError('label map has duplicate relation names')
        if self.no_relation is not None and self.no_relation not in self.names:
            raise ConfigError(f'no-relation label {self.no_relation!r} is not in the label map')

    def __len__(self) -> int:
        return len(self.names)

    @property
    def excluded_id(self) -> int | None:
        return None if self.no_relation is None else self.names.index(self.no_relation)

    def id_of(self, name: str) -> int:
        """Exact name, else a unique match on the part after the ``type:`` prefix."""
        if name in self.names:
            return self.names.index(name)
        matches = [i for i, n in enumerate(self.names) if n.split(':', 1)[-1] == name]
        if len(matches) == 1:
            return matches[0]
        raise DataFormatError(f'unknown relation label {name!r}')

    def name_of(self, index: int) -> str:
        if not 0 <= index < len(self.names):
            raise DataFormatError(f'relation id {index} outside [0, {len(self.names)})')
        return self.names[index]

    def to_dict(self) -> dict:
        return {'names': list(self.names), 'no_relation': self.no_relation}

    @classmethod
    def from_dict(cls, payload: dict) -> 'LabelMap':
        return cls(tuple(payload['names']), payload.get('no_relation'))

    @classmethod
    def from_names(cls, names: Iterable[str], no_relation: str | None = None) -> 'LabelMap':
        """First-seen order, duplicates dropped."""
        return cls(tuple(dict.fromkeys(names)), no_relation)


def builtin_labels(label_set: str) -> LabelMap:
    if label_set not in BUILTIN_LABEL_SETS:
        raise ConfigError(f'unknown label set {label_set!r}; choose from {sorted(BUILTIN_LABEL_SETS)} or "data"')
    names, excluded = BUILTIN_LABEL_SETS[label_set]
    return LabelMap(tuple(names), excluded)


def check_compatible(expected: LabelMap, found: LabelMap | Sequence[str], where: str) -> None:
    names = found.names if isinstance(found, LabelMap) else tuple(found)
    if tuple(expected.names) != names:
        raise ConfigError(f'label map mismatch in {where}: {len(expected.names)} vs {len(names)} relations')
