from .base import Pipeline
from .dataset import DatasetStore, fit_slots, load_graph_dir, training_arrays
from .prompt import Prompt, parse_prompt
from .types import GenerationResult, StageError

__all__ = [
    'Pipeline', 'StageError', 'GenerationResult', 'Prompt', 'parse_prompt',
    'DatasetStore', 'fit_slots', 'load_graph_dir', 'training_arrays',
]
