"""clonesift: scalable code-clone detection and evaluation.

Pipeline: extract function units -> embed them (mock, remote sidecar, or
precomputed vectors) -> rank clone candidates with cosine nearest-neighbour
search -> optionally fuse several models' lists -> score against ground
truth and run the model-selection statistics.
"""

from .corpus import (
    CorpusManifest,
    FunctionUnit,
    apply_minloc,
    canonical_id,
    extract_functions,
    load_manifest,
    store_manifest,
)
from .embed import (
    EmbedderSpec,
    EmbeddingRecord,
    MockEmbedder,
    RemoteEmbedder,
    load_vectors,
    store_vectors,
)
from .evalkit import (
    BordaTable,
    GroundTruth,
    RecallReport,
    borda,
    dense_rank,
    load_ground_truth,
    match_pair,
    max_individual,
    precision,
    recall_at,
    symmetric_difference,
    typed_recall,
)
from .fusion import (
    Aggregation,
    FusedList,
    Normalization,
    all_methods,
    ensemble,
    fuse,
    method_name,
    normalize,
)
from .search import (
    Candidate,
    CandidateList,
    CloneSearchIndex,
    SearchParams,
    ann_recall,
    batch_search,
    build_index,
    knn,
    load_candidates,
    self_search,
    store_candidates,
)
from .statlab import (
    FeatureStandardizer,
    LeastSquaresRegressor,
    OlsFit,
    PairedSample,
    RegressionDataset,
    hypothesis_report,
    normality_check,
    ols_fit,
    paired_t_test,
    route_paired_test,
    wilcoxon_signed_rank,
    zscore_features,
)

__version__ = "0.1.0"
