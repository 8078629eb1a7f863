"""
Celery tasks for benchmark trials.

Tasks:
    - run_trial_task: One benchmark trial from a JSON payload
"""
import logging

from celery import shared_task

from core.exceptions import ReconError

logger = logging.getLogger(__name__)


@shared_task(
    bind=True,
    max_retries=2,
    default_retry_delay=10,
    autoretry_for=(OSError,),
    retry_backoff=True,
)
def run_trial_task(self, payload: dict):
    """
    Worker-side trial execution.

    Only OS failures are retried; reconstruction errors propagate to the group result.

    Args:
        payload: Trial payload built by ``experiments.services.trial_payloads``

    Returns:
        TrialOutcome as a dict
    """
    from .services import run_trial

    logger.info(f"[CELERY] trial {payload['trial']} rate {payload['rate']} noise {payload['noise_scale']}")
    try:
        return run_trial(payload)
    except ReconError as e:
        logger.error(f"[CELERY] trial {payload['trial']} failed: {e}")
        raise
