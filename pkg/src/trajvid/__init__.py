"""Few-step trajectory-controllable video generation on synthetic moving shapes.

Pipeline: a multi-step teacher denoiser is pretrained on moving-shape videos,
a trajectory adapter is trained against it, the teacher is distilled into a
4-step student by distribution matching, and a fast adapter is fine-tuned on
the student with a hybrid adversarial + diffusion objective scored by a
diffusion-feature discriminator.
"""

from . import (adapter, bundle, checkpoint, cli, codec, denoiser,
               discriminator, metrics, model_io, sampling, schedule, synth,
               training)
from .bundle import BenchReport, ModelBundle, OracleBundle, run_benchmark, write_bundle
from .codec import LatentGrid, decode, encode
from .denoiser import Conditioning, Denoiser, DenoiserConfig, build_denoiser
from .schedule import NoiseSchedule
from .synth import SceneSpec, VideoSample, generate_scene
from .training import StageConfig, lambda_schedule

__version__ = "0.1.0"

__all__ = [
    "BenchReport", "Conditioning", "Denoiser", "DenoiserConfig", "LatentGrid",
    "ModelBundle", "NoiseSchedule", "OracleBundle", "SceneSpec", "StageConfig",
    "VideoSample", "build_denoiser", "decode", "encode", "generate_scene",
    "lambda_schedule", "run_benchmark", "write_bundle", "__version__",
]
