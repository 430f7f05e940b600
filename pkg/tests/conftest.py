import numpy as np
import pytest

from bellrand import _backend
from bellrand.core import JointDistribution, deterministic_lr_points, pr_boxes

# Published values, frozen here so tests do not depend on the shipped fixture parser.
TABLE_S2 = np.array([
    [3166, 1851, 2043, 1243520],
    [3637, 1338, 13544, 1230633],
    [3992, 13752, 1226, 1230686],
    [357, 17648, 16841, 1215766],
])
TABLE_S3 = np.array([
    [0.00063301, 0.00036794, 0.00041085, 0.24858820],
    [0.00073159, 0.00026936, 0.00270824, 0.24629081],
    [0.00080002, 0.00277179, 0.00024384, 0.24618435],
    [0.00007087, 0.00350093, 0.00336896, 0.24305924],
])
TABLE_1 = np.array([
    [1.0243556353, 0.9704647804, 0.9735507658, 1.0],
    [1.0256127409, 0.9491951243, 0.9960775334, 1.0],
    [1.0227274988, 0.9962782754, 0.9461091383, 1.0],
    [0.9273040563, 1.0037217225, 1.0039224645, 1.0],
])
TABLE_1_M = 0.0100425

BACKENDS = sorted(_backend.available())


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def s3():
    from bellrand.polytope import project_nonsignaling

    return project_nonsignaling(TABLE_S3)


def random_ns(rng, k=None):
    """Random non-signaling, uniform-settings distribution: a convex mix of extreme points."""
    pts = [p.p for p in deterministic_lr_points()] + [p.p for p in pr_boxes()]
    w = rng.dirichlet(np.full(len(pts), 0.3))
    return JointDistribution(np.tensordot(w, np.array(pts), axes=1))


def strong_q(pr=0.3, noise=0.05):
    """PR box mixed with a facet LR point and white noise: a sizeable violation."""
    p = (1 - noise) * (pr * pr_boxes()[0].p + (1 - pr) * deterministic_lr_points()[0].p) + noise / 16
    return JointDistribution(p)
