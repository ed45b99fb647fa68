"""
PETE - Model Package
"""

from model.config import ModelConfig, param_count
from model.base_module import BaseModule
from model.layers import rmsnorm, rotary_apply, attention_block, geglu_ffn
from model.encoder import Model, build_model, embedding_forward, encode
