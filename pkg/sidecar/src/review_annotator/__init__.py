from .classifier import ARGUMENTS, ASPECTS, classify_types
from .encoder import DIM, EncoderUnavailable, embed_sentences

__version__ = "0.1.0"
