from .distance import IdConfig, distance_matrix, instantiate, instantiation_distance
from .distribution import cov, mmd, one_nna, union_matrix
from .report import HEADERS, eval_report, write_report

__all__ = [
    'IdConfig', 'instantiate', 'instantiation_distance', 'distance_matrix',
    'mmd', 'cov', 'one_nna', 'union_matrix', 'eval_report', 'write_report', 'HEADERS',
]
