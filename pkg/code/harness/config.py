"""Run configuration: defaults, then a flat TOML card, then the environment, then flags."""
import logging
import os
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

import dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 fallback with the same API
    import tomli as tomllib

from data_io import DataSchema
from encoder import EncoderConfig
from errors import ConfigError
from rrg_head import GateConfig, Task
from text_pipeline import BrsVariant

logger = logging.getLogger(__name__)

SEED_ENV = 'RELGATE_SEED'

ENCODER_KEYS = ('hidden', 'layers', 'heads', 'ffn_dim', 'max_seq_len', 'dropout', 'init_std')
GATE_KEYS = ('tau', 'max_refine', 'decision_threshold', 'rrg_enabled', 'share_confidence_head',
             'representation', 'confidence_weight')
SCHEMA_KEYS = tuple(DataSchema.model_fields)

ABLATIONS = {
    'full': {'variant': BrsVariant.STANDARD, 'rrg_enabled': True},
    'no_brs': {'variant': BrsVariant.SINGLE_RELATION, 'rrg_enabled': True},
    'brs_v2': {'variant': BrsVariant.V2, 'rrg_enabled': True},
    'brs_v3': {'variant': BrsVariant.V3, 'rrg_enabled': True},
    'no_rrg': {'variant': BrsVariant.STANDARD, 'rrg_enabled': False},
}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    task: Task = Task.DIALOGUE_MULTI_LABEL
    variant: BrsVariant = BrsVariant.STANDARD
    ablation: str | None = None
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    gate: GateConfig = Field(default_factory=GateConfig)
    schema_keys: DataSchema = Field(default_factory=DataSchema)

    vocab_size: int = Field(default=5000, ge=5)
    batch_size: int = Field(default=6, ge=1)
    epochs: int = Field(default=20, ge=1)
    lr: float = Field(default=3e-4, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    seed: int = 42

    data_format: str = 'corpus'
    label_set: str = 'data'
    tokenizer: str = 'word'
    train_path: Path | None = None
    dev_path: Path | None = None
    test_path: Path | None = None
    out_dir: Path = Path('runs/default')
    eval_workers: int = Field(default=1, ge=1)

    @classmethod
    def from_flat(cls, flat: Mapping[str, Any]) -> 'RunConfig':
        """Build from flat card keys; encoder, gate and schema keys are routed to their section."""
        flat = {_normalise(k): v for k, v in flat.items()}
        ablation = flat.get('ablation')
        if ablation is not None:
            if ablation not in ABLATIONS:
                raise ConfigError(f'unknown ablation {ablation!r}; choose from {sorted(ABLATIONS)}')
            flat.update({k: v for k, v in ABLATIONS[ablation].items()})

        encoder = {k: flat.pop(k) for k in ENCODER_KEYS if k in flat}
        gate = {k: flat.pop(k) for k in GATE_KEYS if k in flat}
        schema = {k: flat.pop(k) for k in SCHEMA_KEYS if k in flat}
        if 'task' in flat:
            gate['task'] = flat['task']
        try:
            return cls(encoder=EncoderConfig(**encoder), gate=GateConfig(**gate),
                       schema_keys=DataSchema(**schema), **flat)
        except ValidationError as e:
            problems = '; '.join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
            raise ConfigError(f'invalid configuration: {problems}') from None

    def to_flat(self) -> dict[str, Any]:
        flat = self.model_dump(mode='json', exclude={'encoder', 'gate', 'schema_keys'})
        flat.update({k: v for k, v in self.encoder.model_dump(mode='json').items() if k in ENCODER_KEYS})
        flat.update({k: v for k, v in self.gate.model_dump(mode='json').items() if k in GATE_KEYS})
        flat.update(self.schema_keys.model_dump(mode='json'))
        return flat

    def with_overrides(self, **overrides: Any) -> 'RunConfig':
        return RunConfig.from_flat({**self.to_flat(), **overrides})

    def require_path(self, key: str) -> Path:
        path = getattr(self, key)
        if path is None:
            raise ConfigError(f'{key} is not set; pass --{key.replace("_", "-")} or put it in the card')
        if not Path(path).exists():
            raise ConfigError(f'{key} {path} does not exist')
        return Path(path)


def _normalise(key: str) -> str:
    return key.lstrip('-').replace('-', '_')


def load_card(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f'Cannot find config card {path}')
    try:
        with open(path, 'rb') as f:
            card = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f'{path}: {e}') from None
    nested = [k for k, v in card.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f'{path}: config cards are flat, found tables {nested}')
    return card


def parse_extra_args(args: Sequence[str]) -> dict[str, str]:
    """``--key value`` / ``--key=value`` pairs; a bare ``--flag`` means true."""
    overrides: dict[str, str] = {}
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith('--'):
            raise ConfigError(f'unexpected argument {arg!r}; overrides take the form --key value')
        if '=' in arg:
            key, value = arg.split('=', 1)
            i += 1
        elif i + 1 < len(args) and not args[i + 1].startswith('--'):
            key, value = arg, args[i + 1]
            i += 2
        else:
            key, value = arg, 'true'
            i += 1
        overrides[_normalise(key)] = value
    return overrides


def resolve_config(card: str | Path | None = None,
                   overrides: Mapping[str, Any] | None = None,
                   environ: Mapping[str, str] | None = None) -> RunConfig:
    # --- 1) Defaults live on the models; 2) the card overrides them ---
    flat: dict[str, Any] = {}
    if card is not None:
        flat.update(load_card(card))
        logger.info('Config card loaded from %s', card)

    # --- 3) Environment (after .env) overrides the card ---
    if environ is None:
        dotenv.load_dotenv()
        environ = os.environ
    env_seed = environ.get(SEED_ENV)
    if env_seed:
        try:
            flat['seed'] = int(env_seed)
            logger.info('Using %s from environment: %s', SEED_ENV, env_seed)
        except ValueError:
            logger.warning('Invalid %s=%r, keeping seed %s', SEED_ENV, env_seed, flat.get('seed'))

    # --- 4) Command-line flags override everything ---
    if overrides:
        flat.update({_normalise(k): v for k, v in overrides.items()})
    return RunConfig.from_flat(flat)
