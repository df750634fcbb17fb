"""clipsift: reproducible audio-clip dataset curation and label-noise tooling."""

__version__ = "0.1.0"

from .ontology import LabelSet, Ontology, OntologyNode, parse_ontology
from .text import Document, LemmaLexicon, preprocess, tokenise
from .retrieval import (
    Labeller,
    Query,
    ScoredClip,
    Vocabulary,
    assign_label,
    build_query,
    build_vocabulary,
    evaluate_labels,
    relevance_score,
    vectorise,
)
from .curation import (
    DatasetManifest,
    GroundTruthEntry,
    ManifestEntry,
    curate_noisy,
    emit_manifest,
    pair_manifests,
    parse_manifest,
    reduce_to_single_label,
)
from .noise import (
    JudgmentTable,
    NoiseEstimate,
    NoiseSpec,
    confidence_interval,
    inject_synthetic,
    mix_substitution,
    noise_breakdown,
)
from .wav import FormatReport, WavFormatError, verify_audio_format
from .freesound import ClipRecord, Converter, FreesoundClient, MetadataCache

__all__ = [
    "__version__",
    "LabelSet",
    "Ontology",
    "OntologyNode",
    "parse_ontology",
    "Document",
    "LemmaLexicon",
    "preprocess",
    "tokenise",
    "Labeller",
    "Query",
    "ScoredClip",
    "Vocabulary",
    "assign_label",
    "build_query",
    "build_vocabulary",
    "evaluate_labels",
    "relevance_score",
    "vectorise",
    "DatasetManifest",
    "GroundTruthEntry",
    "ManifestEntry",
    "curate_noisy",
    "emit_manifest",
    "pair_manifests",
    "parse_manifest",
    "reduce_to_single_label",
    "JudgmentTable",
    "NoiseEstimate",
    "NoiseSpec",
    "confidence_interval",
    "inject_synthetic",
    "mix_substitution",
    "noise_breakdown",
    "FormatReport",
    "WavFormatError",
    "verify_audio_format",
    "ClipRecord",
    "Converter",
    "FreesoundClient",
    "MetadataCache",
]
