import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from forensiris.model import IrisTemplate, PolarIris
from forensiris.synth import render_eye


def random_template(rng, rows=64, cols=512, planes=4, encoder="bif",
                    digest=b"\x01" * 8, mask_density=0.8):
    return IrisTemplate(
        encoder_id=encoder,
        bitplanes=rng.random((planes, rows, cols)) < 0.5,
        mask=rng.random((rows, cols)) < mask_density,
        params_digest=digest,
    )


def random_polar(rng, rows=64, cols=512, mask_density=1.0):
    mask = (rng.random((rows, cols)) < mask_density) if mask_density < 1.0 \
        else np.ones((rows, cols), dtype=bool)
    return PolarIris(
        texture=rng.uniform(0.0, 255.0, size=(rows, cols)).astype(np.float32),
        mask=mask,
    )


@pytest.fixture(scope="session")
def synthetic_eye():
    """One clean rendered eye plus its ground truth, shared across tests."""
    return render_eye(identity_seed=42, noise_sigma=0.0, image_id="eye-42")


@pytest.fixture(scope="session")
def noisy_eye():
    return render_eye(identity_seed=42, noise_sigma=8.0, noise_seed=7, image_id="eye-42n")
