"""CTC decoding with Kneser-Ney shallow fusion and WER/CER evaluation.

The pipeline: normalize transcripts, build an interpolated Kneser-Ney
n-gram model over the cleaned corpus, decode acoustic emission matrices
with prefix beam search (optionally fused with the LM via alpha/beta
weights), tune those weights by grid search, and score hypotheses with
pooled WER/CER including per-group breakdowns.
"""

from .decoder import (
    BeamHypothesis,
    DecoderParams,
    EmissionMatrix,
    Vocabulary,
    batch_decode,
    beam_hypotheses,
    beam_search_decode,
    ctc_collapse,
    default_vocabulary,
    greedy_decode,
    oracle_decode,
)
from .errors import (
    ArpaParseError,
    EmissionFormatError,
    GridSearchError,
    ManifestError,
    ToolkitError,
    VocabularyError,
)
from .metrics import EditCounts, EvalReport, cer, edit_distance, evaluate, wer
from .ngram_lm import (
    ArpaModel,
    CountTable,
    LmState,
    count_ngrams,
    estimate_kneser_ney,
    parse_arpa,
    train_model,
    write_arpa,
)
from .corpus import (
    DatasetStats,
    Manifest,
    build_lm_corpus,
    dataset_stats,
    load_manifest,
    read_emissions,
    read_vocabulary,
    save_manifest,
    write_emissions,
    write_vocabulary,
)
from .textnorm import (
    DropReason,
    FilterDecision,
    HesitationStrategy,
    NormalizationConfig,
    TranscriptRecord,
    Verdict,
    filter_record,
    load_config,
    normalize_corpus,
    normalize_transcript,
)
from .tuner import GridSearchResult, GridSpec, emit_grid_report, grid_search, parse_grid_report

__version__ = "0.1.0"
