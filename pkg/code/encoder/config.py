from pydantic import BaseModel, ConfigDict, Field, model_validator


class EncoderConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    vocab_size: int = Field(default=5000, gt=0)
    hidden: int = Field(default=64, gt=0)
    layers: int = Field(default=2, gt=0)
    heads: int = Field(default=4, gt=0)
    ffn_dim: int | None = Field(default=None, gt=0)
    max_seq_len: int = Field(default=256, gt=0)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    type_vocab_size: int = Field(default=2, gt=0)
    init_std: float = Field(default=0.02, gt=0.0)

    @model_validator(mode='after')
    def _heads_divide_hidden(self) -> 'EncoderConfig':
        if self.hidden % self.heads:
            raise ValueError(f'hidden size {self.hidden} is not divisible by {self.heads} heads')
        return self

    @property
    def ffn(self) -> int:
        return self.ffn_dim if self.ffn_dim is not None else 4 * self.hidden

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads
