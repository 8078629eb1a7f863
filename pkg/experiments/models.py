"""
Experiment run records - one ExperimentRun per CLI invocation, one TrialResult per trial.

Run Status Flow:
    PENDING -> RUNNING -> COMPLETED
    PENDING -> RUNNING -> FAILED (error recorded in failure_reason)
"""
from django.core.validators import MinValueValidator
from django.db import models


class ExperimentRun(models.Model):
    """
    A benchmark, mismatch or reconstruction run with its resolved configuration.

    Status:
        - PENDING: Record created, trials not started
        - RUNNING: Trials dispatched to the executor
        - COMPLETED: Reports written
        - FAILED: A trial or report step raised
    """

    class Status(models.TextChoices):
        PENDING = 'PENDING', 'Pending'
        RUNNING = 'RUNNING', 'Running'
        COMPLETED = 'COMPLETED', 'Completed'
        FAILED = 'FAILED', 'Failed'

    command = models.CharField(
        max_length=32,
        db_index=True,
        help_text="Management command that produced the run"
    )
    status = models.CharField(
        max_length=20,
        choices=Status.choices,
        default=Status.PENDING,
        db_index=True,
        help_text="Current run status"
    )
    config = models.JSONField(
        default=dict,
        help_text="Resolved experiment configuration"
    )
    tool_version = models.CharField(max_length=32)
    output_dir = models.CharField(max_length=512, blank=True, default='')
    failure_reason = models.TextField(
        blank=True,
        default='',
        help_text="Error message if the run failed"
    )
    created_at = models.DateTimeField(auto_now_add=True, db_index=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        verbose_name = 'Experiment Run'
        verbose_name_plural = 'Experiment Runs'
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['command', 'status'], name='exp_run_command_status_idx'),
        ]

    def __str__(self):
        return f"Run #{self.id} - {self.command} ({self.status})"

    @property
    def is_completed(self) -> bool:
        return self.status == self.Status.COMPLETED

    @property
    def trial_count(self) -> int:
        return self.trials.count()


class TrialResult(models.Model):
    """Outcome of one (rate, noise level, trial) cell of a benchmark."""
    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.CASCADE,
        related_name='trials',
        help_text="Parent run"
    )
    trial = models.PositiveIntegerField(help_text="Trial index within its rate and noise cell")
    rate = models.FloatField(validators=[MinValueValidator(0.0)])
    noise_scale = models.FloatField(default=0.0)
    pattern_seed = models.BigIntegerField()
    noise_seed = models.BigIntegerField()
    rlne = models.FloatField()
    effective_rank = models.PositiveIntegerField()
    r2 = models.FloatField(null=True, blank=True, help_text="Peak-intensity r^2, null when undefined")
    iterations = models.PositiveIntegerField()
    seconds = models.FloatField()
    peak_rlnes = models.JSONField(default=list)

    class Meta:
        verbose_name = 'Trial Result'
        verbose_name_plural = 'Trial Results'
        ordering = ['rate', 'noise_scale', 'trial']
        constraints = [
            models.UniqueConstraint(fields=['run', 'rate', 'noise_scale', 'trial'], name='unique_trial_per_cell'),
        ]

    def __str__(self):
        return f"Trial {self.trial} @ rate {self.rate:.2f}: RLNE {self.rlne:.4f}"
