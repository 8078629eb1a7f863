# Import the Celery app with Django so experiments.tasks.run_trial_task
# binds to it when trials are dispatched to workers.
from .celery import app as celery_app

__all__ = ('celery_app',)
