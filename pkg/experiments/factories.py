"""
Factory Boy factories for experiment configs and run records.
"""
import factory
from django.conf import settings

from .domain import ExperimentConfig, TrialOutcome
from .models import ExperimentRun, TrialResult


class ExperimentConfigFactory(factory.Factory):
    """Small noise-free S2 benchmark with the penalty solver."""
    class Meta:
        model = ExperimentConfig

    signal = factory.LazyFunction(lambda: {'source': 'table', 'name': 'S2', 'length': 255, 'peak_count': [1, 10]})
    noise = factory.LazyFunction(lambda: {'kind': 'gaussian', 'scales': [0.0]})
    pattern = factory.LazyFunction(lambda: {'kind': 'poisson_gap', 'rates': [0.25, 0.5], 'center_fraction': 0.04})
    solver = factory.LazyFunction(lambda: {
        'name': 'penalty', 'lam': None, 'beta': 1.0, 'beta_growth': 1.1, 'beta_cap': 64.0, 'rank_cap': 8,
        'max_iters': 60, 'tol': 1e-6,
        'mode': 'ADLR', 'plugin': 'zero', 'plugin_threshold': 0.0, 'blocks': None, 'block_count': 10,
    })
    trials = 2
    seed = 11
    output = ''


class TrialOutcomeFactory(factory.Factory):
    class Meta:
        model = TrialOutcome

    rate = 0.25
    noise_scale = 0.0
    trial = factory.Sequence(lambda n: n)
    pattern_seed = factory.Sequence(lambda n: 1000 + n)
    noise_seed = factory.Sequence(lambda n: 2000 + n)
    rlne = 0.05
    effective_rank = 5
    r2 = 0.99
    iterations = 100
    seconds = 0.5
    peak_rlnes = (0.01, 0.02)


class ExperimentRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = ExperimentRun

    command = 'benchmark'
    status = ExperimentRun.Status.COMPLETED
    config = factory.LazyFunction(lambda: ExperimentConfigFactory().resolved())
    tool_version = factory.LazyFunction(lambda: settings.RECON_VERSION)


class TrialResultFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = TrialResult

    run = factory.SubFactory(ExperimentRunFactory)
    trial = factory.Sequence(lambda n: n)
    rate = 0.25
    noise_scale = 0.0
    pattern_seed = factory.Sequence(lambda n: 1000 + n)
    noise_seed = factory.Sequence(lambda n: 2000 + n)
    rlne = 0.05
    effective_rank = 5
    r2 = 0.99
    iterations = 100
    seconds = 0.5
    peak_rlnes = factory.LazyFunction(lambda: [0.01, 0.02])
