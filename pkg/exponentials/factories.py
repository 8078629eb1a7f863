"""
Factory Boy factories for signal-model value objects.
"""
import factory

from .domain import ExponentialModel, NoiseKind, NoiseSpec, PeakParams


class PeakParamsFactory(factory.Factory):
    class Meta:
        model = PeakParams

    amplitude = 1.0
    damping = 100.0
    frequency = factory.Sequence(lambda n: (0.1 + 0.17 * n) % 1.0)
    phase = 0.0


class ExponentialModelFactory(factory.Factory):
    class Meta:
        model = ExponentialModel

    peaks = factory.LazyFunction(lambda: (PeakParamsFactory(),))
    sample_interval = 1.0
    length = 255


class NoiseSpecFactory(factory.Factory):
    class Meta:
        model = NoiseSpec

    kind = NoiseKind.GAUSSIAN
    scale = 0.03
    seed = factory.Sequence(lambda n: n)
