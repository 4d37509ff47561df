import numpy as np
import pytest
import torch

from trajvid.denoiser import Conditioning, DenoiserConfig, build_denoiser
from trajvid.schedule import NoiseSchedule
from trajvid.synth import InfeasibleSceneError, SceneSpec, generate_scene


@pytest.fixture(scope="session")
def small_config():
    return DenoiserConfig(num_blocks=2, hidden_dim=32, num_heads=2)


@pytest.fixture(scope="session")
def schedule():
    return NoiseSchedule()


@pytest.fixture(scope="session")
def small_model(small_config):
    return build_denoiser(small_config, seed=0)


@pytest.fixture
def rand_batch(small_config):
    cfg = small_config
    g = torch.Generator().manual_seed(7)
    x_t = torch.randn(2, cfg.latent_frames, cfg.latent_height, cfg.latent_width,
                      cfg.latent_channels, generator=g)
    t = torch.tensor([500, 250])
    cond = Conditioning(
        caption_tokens=torch.randint(0, cfg.vocab_size, (2, cfg.caption_len), generator=g),
        first_frame=torch.randn(2, cfg.latent_height, cfg.latent_width,
                                cfg.latent_channels, generator=g),
    )
    return x_t, t, cond


def make_samples(n, seed0=1000, objs=(1, 2)):
    out, seed = [], seed0
    while len(out) < n:
        try:
            out.append(generate_scene(SceneSpec(num_objects=objs[len(out) % len(objs)],
                                                seed=seed)))
        except InfeasibleSceneError:
            pass
        seed += 1
    return out


@pytest.fixture(scope="session")
def samples8():
    return make_samples(8)
