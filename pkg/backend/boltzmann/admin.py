from django.contrib import admin

from .models import Run


@admin.register(Run)
class RunAdmin(admin.ModelAdmin):
    list_display = [
        "run_id",
        "command",
        "processing_status",
        "exit_code",
        "created_at",
        "finished_at",
    ]
    list_filter = ["command", "processing_status", "created_at"]
    search_fields = ["run_id", "task_id", "out_dir"]
    readonly_fields = ["created_at", "updated_at", "finished_at", "task_id"]

    fieldsets = (
        ("Basic Information", {"fields": ("run_id", "command", "out_dir")}),
        ("Processing", {"fields": ("processing_status", "is_processing", "exit_code", "task_id")}),
        (
            "Artifacts",
            {"fields": ("config", "manifest", "result"), "classes": ("collapse",)},
        ),
        (
            "Date Control",
            {"fields": ("created_at", "updated_at", "finished_at"), "classes": ("collapse",)},
        ),
    )

    actions = ["mark_as_timeout"]

    def mark_as_timeout(self, request, queryset):
        count = queryset.filter(is_processing=True).update(is_processing=False, processing_status="timeout")
        self.message_user(request, f"{count} runs marked as timed out.")

    mark_as_timeout.short_description = "Mark stuck runs as timed out"
