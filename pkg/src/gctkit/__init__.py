"""Graph co-training for semi-supervised few-shot classification on precomputed embeddings."""
from .bench import Report, emit_report, evaluate, read_report
from .episodes import (
    Episode,
    EpisodeSpec,
    FeatureSet,
    MultiModalSet,
    align_modalities,
    load_feature_table,
    sample_episode,
    synth_two_modal,
    write_feature_table,
)
from .errors import (
    AlignmentError,
    CapacityError,
    GctError,
    ParseError,
    ReportIOError,
    SingularMatrixError,
    ValidationError,
)
from .gct import GctConfig, run_episode
from .gl_baseline import GlConfig, gl_propagate
from .graph import Graph, build_graph, laplacian_operator
from .igl import IglConfig, IglModel, LabelMatrix, fit, predict, predict_soft

__version__ = "0.1.0"
