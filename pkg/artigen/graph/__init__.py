from .types import ArticulationGraph, EdgeAttr, GraphDims, NodeAttr, PoseState, DEFAULT_DIMS
from .codec import Thresholds, decode_matrices, encode_graph, plucker_project, quantize_vertices, to_tree
from .tree import forward_kinematics, mst_extract, pose_graph, sample_pose
from .validate import validate
from .export import export_json, export_urdf, import_json

__all__ = [
    'ArticulationGraph', 'NodeAttr', 'EdgeAttr', 'GraphDims', 'PoseState', 'DEFAULT_DIMS',
    'encode_graph', 'decode_matrices', 'plucker_project', 'quantize_vertices', 'to_tree', 'Thresholds',
    'mst_extract', 'forward_kinematics', 'pose_graph', 'sample_pose',
    'validate', 'export_json', 'export_urdf', 'import_json',
]
