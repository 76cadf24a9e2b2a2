"""Topological and geometric feature extraction for 2-D images."""
from .cubical_persistence import (Direction, Filtration, PersistenceDiagram, betti_at, brute_force_diagram,
                                  build_filtration, compute_persistence, superlevel_diagram)
from .image_ingest import (CHANNELS, BinaryImage, MultiChannelImage, ScalarField, excursion_set, load_image,
                           preprocess, save_image, synth_dataset, synth_gaussian_square)
from .lkc_features import (area_raw, derivative, euler_raw, geotop_feature_vector, lkc_curves,
                           lkc_feature_vector, perimeter_raw, summarize)
from .local_geometry import ComponentTrack, component_report, track_components
from .tda_features import AmplitudeConfig, Metric, amplitude, persistence_entropy, tda_feature_vector

__version__ = "0.1.0"
