import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="Run",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("run_id", models.SlugField(max_length=100, unique=True, verbose_name="Run ID")),
                (
                    "command",
                    models.CharField(
                        choices=[
                            ("gen_data", "Generate corpus"),
                            ("train", "Train SpecNet"),
                            ("simulate", "Simulate"),
                            ("validate", "Validate"),
                            ("bench", "Benchmark"),
                        ],
                        max_length=20,
                        verbose_name="Command",
                    ),
                ),
                ("created_at", models.DateTimeField(default=django.utils.timezone.now, verbose_name="Created at")),
                ("updated_at", models.DateTimeField(auto_now=True, verbose_name="Updated at")),
                ("finished_at", models.DateTimeField(blank=True, null=True, verbose_name="Finished at")),
                (
                    "processing_status",
                    models.CharField(
                        choices=[
                            ("idle", "Waiting"),
                            ("processing", "Processing"),
                            ("completed", "Completed"),
                            ("failed", "Failed"),
                            ("timeout", "Timed out"),
                        ],
                        default="idle",
                        max_length=20,
                        verbose_name="Processing Status",
                    ),
                ),
                ("is_processing", models.BooleanField(default=False, verbose_name="Is Processing")),
                (
                    "config",
                    models.JSONField(
                        blank=True,
                        default=dict,
                        help_text="Resolved run configuration (defaults, preset, file and flags merged)",
                        verbose_name="Configuration",
                    ),
                ),
                ("manifest", models.JSONField(blank=True, null=True, verbose_name="Manifest")),
                ("result", models.JSONField(blank=True, null=True, verbose_name="Result summary")),
                ("out_dir", models.CharField(blank=True, max_length=500, verbose_name="Output directory")),
                ("exit_code", models.IntegerField(blank=True, null=True, verbose_name="Exit code")),
                ("task_id", models.CharField(blank=True, max_length=255, verbose_name="Celery task ID")),
            ],
            options={
                "verbose_name": "Run",
                "verbose_name_plural": "Runs",
                "ordering": ["-created_at"],
            },
        ),
    ]
