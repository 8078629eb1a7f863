"""
Celery configuration for hankelrecon.

Benchmark trials can be fanned out to workers when RECON_EXECUTOR=celery.
"""
import os

from celery import Celery

# Set the default Django settings module for the 'celery' program.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

app = Celery('hankelrecon')

# Using a string here means the worker doesn't have to serialize
# the configuration object to child processes.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Picks up experiments.tasks.
app.autodiscover_tasks()
