from .schedule import NoiseSchedule, make_schedule
from .sampler import denoise_step, init_edge_noise, q_sample, sample_edges
from .denoiser import Denoiser, DenoiserArch, time_embedding
from .trainer import DenoiserTraining, train_denoiser

__all__ = [
    'NoiseSchedule', 'make_schedule', 'q_sample', 'init_edge_noise', 'denoise_step', 'sample_edges',
    'Denoiser', 'DenoiserArch', 'time_embedding', 'train_denoiser', 'DenoiserTraining',
]
