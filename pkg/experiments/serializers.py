"""
Serializers for experiment configuration files.

Config files are JSON objects validated here before any trial runs:
{
    "signal": {"source": "table", "name": "S2"},
    "noise": {"kind": "gaussian", "scales": [0.03]},
    "pattern": {"kind": "poisson_gap", "rates": [0.1, 0.25, 0.5]},
    "solver": {"name": "penalty", "beta": 1.0, "rank_cap": 20, "max_iters": 2000, "tol": 1e-6},
    "trials": 100,
    "seed": 0
}
"""
from rest_framework import serializers

from exponentials.domain import NoiseKind
from exponentials.services import TABLE_AMPLITUDES
from pipeline.domain import Normalization, PipelineMode
from pipeline.plugins import builtin_plugins
from sampling.domain import PatternKind
from solvers.domain import DEFAULT_BETA_CAP, DEFAULT_BETA_GROWTH
from solvers.services import SolverName

BLOCK_TABLES = ('exponential', 'mri', 'initial')
KSPACE_DEFAULTS = {'size': 32, 'coils': 2, 'rate': 0.4, 'center_fraction': 0.08}


def _check_rates(value):
    if not value:
        raise serializers.ValidationError("At least one rate is required")
    if any(not 0.0 < rate <= 1.0 for rate in value):
        raise serializers.ValidationError("Rates must lie in (0, 1]")
    if len(value) != len(set(value)):
        raise serializers.ValidationError("Duplicate rates")
    return value


class SignalSerializer(serializers.Serializer):
    """Ground-truth source: a tabulated signal, a random draw, or a CPLX file."""
    source = serializers.ChoiceField(choices=['table', 'random', 'file'])
    name = serializers.ChoiceField(choices=sorted(TABLE_AMPLITUDES), required=False)
    path = serializers.CharField(required=False)
    length = serializers.IntegerField(min_value=1, default=255)
    peak_count = serializers.ListField(
        child=serializers.IntegerField(min_value=1), min_length=2, max_length=2, default=lambda: [1, 10]
    )

    def validate(self, attrs):
        if attrs['source'] == 'table' and 'name' not in attrs:
            raise serializers.ValidationError({'name': "Required for table signals"})
        if attrs['source'] == 'file' and not attrs.get('path'):
            raise serializers.ValidationError({'path': "Required for file signals"})
        low, high = attrs['peak_count']
        if low > high:
            raise serializers.ValidationError({'peak_count': "Minimum exceeds maximum"})
        return attrs


class NoiseSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=NoiseKind.values, default=NoiseKind.GAUSSIAN)
    scales = serializers.ListField(child=serializers.FloatField(min_value=0.0), default=lambda: [0.0])

    def validate_scales(self, value):
        if not value:
            raise serializers.ValidationError("At least one noise scale is required")
        if len(value) != len(set(value)):
            raise serializers.ValidationError("Duplicate noise scales")
        return value


class PatternSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=PatternKind.values, default=PatternKind.POISSON_GAP)
    rates = serializers.ListField(child=serializers.FloatField())
    center_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.04)

    def validate_rates(self, value):
        return _check_rates(value)


class SolverSerializer(serializers.Serializer):
    """
    Solver choice and weights. ``lam`` defaults to the regularization table at
    each trial's rate; ``beta_growth`` / ``beta_cap`` set the penalty-weight
    continuation of the factorization solvers; ``mode``, ``plugin``, ``blocks`` and
    ``normalization`` apply to adlr only. Unset ``rank_cap``, ``blocks`` and
    ``normalization`` resolve per data type (signals: 20, the exponential table and
    nuclear; k-space volumes: 40, the MRI table and none).
    """
    name = serializers.ChoiceField(choices=SolverName.values)
    lam = serializers.FloatField(required=False, allow_null=True, default=None)
    beta = serializers.FloatField(default=1.0)
    beta_growth = serializers.FloatField(min_value=1.0, default=DEFAULT_BETA_GROWTH)
    beta_cap = serializers.FloatField(min_value=1.0, default=DEFAULT_BETA_CAP)
    rank_cap = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    max_iters = serializers.IntegerField(min_value=1, default=2000)
    tol = serializers.FloatField(min_value=0.0, default=1e-6)
    mode = serializers.ChoiceField(choices=PipelineMode.values, default=PipelineMode.ADLR)
    plugin = serializers.ChoiceField(choices=sorted(builtin_plugins()), default='zero')
    plugin_threshold = serializers.FloatField(min_value=0.0, default=0.0)
    blocks = serializers.ChoiceField(choices=BLOCK_TABLES, required=False, allow_null=True, default=None)
    block_count = serializers.IntegerField(min_value=1, default=10)
    normalization = serializers.ChoiceField(choices=Normalization.values, required=False, allow_null=True,
                                            default=None)

    def validate_lam(self, value):
        if value is not None and not value > 0:
            raise serializers.ValidationError("Lambda must be positive")
        return value

    def validate_beta(self, value):
        if not value > 0:
            raise serializers.ValidationError("Beta must be positive")
        return value


class ExperimentConfigSerializer(serializers.Serializer):
    """Top-level benchmark/reconstruct configuration."""
    signal = SignalSerializer()
    noise = NoiseSerializer(required=False, default=lambda: {'kind': NoiseKind.GAUSSIAN.value, 'scales': [0.0]})
    pattern = PatternSerializer()
    solver = SolverSerializer()
    trials = serializers.IntegerField(min_value=1, default=1)
    seed = serializers.IntegerField(min_value=0, default=0)
    output = serializers.CharField(required=False, allow_blank=True, default='')


class KSpaceDatasetSerializer(serializers.Serializer):
    size = serializers.IntegerField(min_value=4, default=32)
    coils = serializers.IntegerField(min_value=1, default=2)
    rate = serializers.FloatField(default=0.4)
    center_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.08)

    def validate_rate(self, value):
        if not 0.0 < value <= 1.0:
            raise serializers.ValidationError("Rate must lie in (0, 1]")
        return value


class MismatchConfigSerializer(serializers.Serializer):
    """
    Dataset mismatch sweep. For ``exponential`` the reference and targets are
    sampling rates; for ``kspace`` they are phantom contrasts.
    """
    dataset = serializers.ChoiceField(choices=['exponential', 'kspace'])
    reference = serializers.FloatField()
    targets = serializers.ListField(child=serializers.FloatField())
    count = serializers.IntegerField(min_value=1, default=100)
    seed = serializers.IntegerField(min_value=0, default=0)
    log_scaled = serializers.BooleanField(default=False)
    kspace = KSpaceDatasetSerializer(required=False, default=lambda: dict(KSPACE_DEFAULTS))
    output = serializers.CharField(required=False, allow_blank=True, default='')

    def validate(self, attrs):
        values = [attrs['reference'], *attrs['targets']]
        if not attrs['targets']:
            raise serializers.ValidationError({'targets': "At least one target is required"})
        if attrs['dataset'] == 'exponential':
            if any(not 0.0 < value <= 1.0 for value in values):
                raise serializers.ValidationError({'targets': "Rates must lie in (0, 1]"})
        elif any(not value > 0 for value in values):
            raise serializers.ValidationError({'targets': "Contrasts must be positive"})
        return attrs
