from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class Task(str, Enum):
    DIALOGUE_MULTI_LABEL = 'dialogue'
    SENTENCE_SINGLE_LABEL = 'sentence'


class Representation(str, Enum):
    BOTH = 'both'
    H0_ONLY = 'h0_only'
    HR_ONLY = 'hr_only'


class GateConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    num_relations: int = Field(default=36, gt=0)
    task: Task = Task.DIALOGUE_MULTI_LABEL
    tau: float = Field(default=0.6, ge=0.0, le=1.0)
    max_refine: int = Field(default=3, ge=0)
    decision_threshold: float = Field(default=0.5, gt=0.0, lt=1.0)
    rrg_enabled: bool = True
    share_confidence_head: bool = False
    representation: Representation = Representation.BOTH
    # Weight of the exit-point loss on the confidence head when it is separate.
    confidence_weight: float = Field(default=1.0, ge=0.0)

    def input_width(self, hidden: int) -> int:
        return 2 * hidden if self.representation is Representation.BOTH else hidden
