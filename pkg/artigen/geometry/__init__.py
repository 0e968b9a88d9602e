from .pointcloud import PointCloud, chamfer, fps, load_cloud, loss_pc, loss_pc_op, save_binary, save_text
from .encoder import pattern_encode, shape_latent
from .synth import TEMPLATES, SynthSample, SynthSpec, object_cloud, sample_part_points, synth_dataset

__all__ = [
    'PointCloud', 'fps', 'chamfer', 'loss_pc', 'loss_pc_op', 'load_cloud', 'save_binary', 'save_text',
    'pattern_encode', 'shape_latent',
    'TEMPLATES', 'SynthSpec', 'SynthSample', 'synth_dataset', 'sample_part_points', 'object_cloud',
]
