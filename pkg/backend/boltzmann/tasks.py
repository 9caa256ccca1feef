import logging
from datetime import timedelta

from celery import shared_task
from django.conf import settings
from django.utils import timezone

from .models import Run
from .services import execute_run
from .spectral.config import build_run_config
from .spectral.exceptions import ConfigError

logger = logging.getLogger(__name__)


@shared_task(bind=True, max_retries=3, default_retry_delay=60)
def execute_run_task(self, run_id):
    """
    Execute a queued Run in the worker. Known failures (bad config, numerical
    breakdown, failed validation) are final and recorded as exit codes; only
    unexpected errors are retried.
    """
    run = None
    try:
        run = Run.objects.get(run_id=run_id)
        run.mark_processing(task_id=self.request.id)

        config = build_run_config(run.config)
        config.io.run_id = run.run_id
        config.io.progress = False
        if run.out_dir:
            config.io.out_dir = run.out_dir

        outcome = execute_run(config, run=run)

        logger.info(f"Run {run_id} finished with exit code {outcome.exit_code}: {outcome.message}")
        return {
            "status": "success" if outcome.exit_code == 0 else "error",
            "message": outcome.message,
            "exit_code": outcome.exit_code,
            "run_id": run_id,
            "out_dir": outcome.out_dir,
        }

    except Run.DoesNotExist:
        logger.error(f"Run {run_id} not found")
        return {"status": "error", "message": "Run not found"}
    except ConfigError as e:
        logger.error(f"Run {run_id} has an invalid stored configuration: {str(e)}")
        if run:
            run.mark_finished(1, result={"error": "ConfigError", "message": str(e)})
        return {"status": "error", "message": str(e), "exit_code": 1}
    except Exception as e:
        logger.error(f"Error executing run {run_id}: {str(e)}")

        if self.request.retries < self.max_retries:
            logger.info(f"Attempt {self.request.retries + 1} of {self.max_retries}")
            raise self.retry(countdown=60 * (self.request.retries + 1))

        try:
            Run.objects.filter(run_id=run_id).update(is_processing=False, processing_status="failed")
        except Exception:
            pass

        return {"status": "error", "message": f"Error executing run: {str(e)}"}


@shared_task
def cleanup_stuck_runs_task(older_than_minutes=None):
    """Mark runs stuck in processing as timed out"""
    minutes = older_than_minutes or settings.SPECNET_STUCK_AFTER_MINUTES
    limit = timezone.now() - timedelta(minutes=minutes)
    count = Run.objects.filter(is_processing=True, updated_at__lt=limit).update(
        is_processing=False, processing_status="timeout"
    )
    if count:
        logger.warning(f"Marked {count} stuck runs as timed out (older than {minutes} minutes)")
    return {"status": "success", "message": f"{count} runs marked as timed out", "count": count}
