import os

from celery import Celery
from django.conf import settings

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "specnet_lab.settings")

app = Celery("specnet_lab")

# Read CELERY_* keys from the Django settings
app.config_from_object("django.conf:settings", namespace="CELERY")

app.autodiscover_tasks()

app.conf.update(
    timezone=settings.TIME_ZONE,
    enable_utc=True,
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    result_expires=3600,
    task_acks_late=True,
    # numerical runs are long; one at a time per worker process
    worker_prefetch_multiplier=1,
    task_routes={
        "boltzmann.tasks.execute_run_task": {"queue": "numerics"},
        "boltzmann.tasks.cleanup_stuck_runs_task": {"queue": "default"},
    },
    task_default_queue="default",
    task_create_missing_queues=True,
)
