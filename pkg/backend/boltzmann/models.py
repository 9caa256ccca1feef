from django.db import models
from django.utils import timezone


class Run(models.Model):
    """One invocation of gen_data, train, simulate, validate or bench"""

    COMMAND_CHOICES = [
        ("gen_data", "Generate corpus"),
        ("train", "Train SpecNet"),
        ("simulate", "Simulate"),
        ("validate", "Validate"),
        ("bench", "Benchmark"),
    ]

    PROCESSING_STATUS_CHOICES = [
        ("idle", "Waiting"),
        ("processing", "Processing"),
        ("completed", "Completed"),
        ("failed", "Failed"),
        ("timeout", "Timed out"),
    ]

    run_id = models.SlugField(max_length=100, unique=True, verbose_name="Run ID")
    command = models.CharField(max_length=20, choices=COMMAND_CHOICES, verbose_name="Command")
    created_at = models.DateTimeField(default=timezone.now, verbose_name="Created at")
    updated_at = models.DateTimeField(auto_now=True, verbose_name="Updated at")
    finished_at = models.DateTimeField(null=True, blank=True, verbose_name="Finished at")

    processing_status = models.CharField(
        max_length=20,
        choices=PROCESSING_STATUS_CHOICES,
        default="idle",
        verbose_name="Processing Status",
    )
    is_processing = models.BooleanField(default=False, verbose_name="Is Processing")

    config = models.JSONField(
        default=dict,
        blank=True,
        verbose_name="Configuration",
        help_text="Resolved run configuration (defaults, preset, file and flags merged)",
    )
    manifest = models.JSONField(null=True, blank=True, verbose_name="Manifest")
    result = models.JSONField(null=True, blank=True, verbose_name="Result summary")
    out_dir = models.CharField(max_length=500, blank=True, verbose_name="Output directory")
    exit_code = models.IntegerField(null=True, blank=True, verbose_name="Exit code")
    task_id = models.CharField(max_length=255, blank=True, verbose_name="Celery task ID")

    class Meta:
        verbose_name = "Run"
        verbose_name_plural = "Runs"
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.command}:{self.run_id}"

    @property
    def succeeded(self):
        return self.processing_status == "completed" and self.exit_code == 0

    def mark_processing(self, task_id=None):
        self.is_processing = True
        self.processing_status = "processing"
        if task_id:
            self.task_id = task_id
        self.save()

    def mark_finished(self, exit_code, result=None, manifest=None):
        self.is_processing = False
        self.processing_status = "completed" if exit_code == 0 else "failed"
        self.exit_code = exit_code
        self.finished_at = timezone.now()
        if result is not None:
            self.result = result
        if manifest is not None:
            self.manifest = manifest
        self.save()
