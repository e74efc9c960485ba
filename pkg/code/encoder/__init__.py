"""Encoder module - small BERT-shaped transformer over BRS sequences."""

from .config import EncoderConfig
from .transformer import Encoder, EncoderOutput

__all__ = ["Encoder", "EncoderConfig", "EncoderOutput"]
