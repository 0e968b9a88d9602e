from .kmeans import KMeansResult, kmeans
from .hypergraph import Hypergraph, attach_query, build_hypergraph, hgnn_layer, load_hypergraph, save_hypergraph
from .losses import LossWeights, loss_hg
from .model import ExtractorArch, ExtractorModel
from .trainer import ExtractorTraining, train_extractor

__all__ = [
    'kmeans', 'KMeansResult', 'Hypergraph', 'build_hypergraph', 'attach_query', 'hgnn_layer',
    'save_hypergraph', 'load_hypergraph', 'loss_hg', 'LossWeights', 'ExtractorArch', 'ExtractorModel',
    'train_extractor', 'ExtractorTraining',
]
