"""priortag: a BiLSTM POS tagger with L2-prior domain adaptation, plus a
linear-chain CRF baseline, evaluation, lambda-sweep, and significance tooling."""

__version__ = "0.1.0"

from .corpus import Corpus, ParseError, Sentence, TagSet, Token, merge, read_conll, write_conll
from .features import (FEATURE_TYPES, Alphabet, FeatureAlphabets, FeatureBundle,
                       build_alphabets, encode, extract)
from .lexicon import Lexicon, VectorFormatError, load_text_vectors, lookup
from .tagger import (AlphabetSet, ArchConfig, ParamStore, assemble_input,
                     build_alphabet_set, decode, encode_chars, forward_tagger,
                     init_params, loss)
from .crf import CrfModel, featurize_crf, log_partition, log_score, train_crf, viterbi
from .transfer import (AlignmentError, CheckpointError, PriorWeights, TransferConfig,
                       align_prior, load_checkpoint, penalty, save_checkpoint)
from .training import TrainConfig, TrainReport, adam_step, train, train_joint
from .evaluation import (EvalResult, SweepResult, SweepSetup, binomial_test, evaluate,
                         sweep_lambda, top_error_tags)

__all__ = [name for name in dir() if not name.startswith("_")]
