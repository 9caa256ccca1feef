from rest_framework import serializers

from .models import Run
from .services import CollisionOperatorFactory
from .spectral.config import COMMANDS, PRESETS


class RunSerializer(serializers.ModelSerializer):
    succeeded = serializers.ReadOnlyField()

    class Meta:
        model = Run
        fields = [
            "id",
            "run_id",
            "command",
            "created_at",
            "updated_at",
            "finished_at",
            "processing_status",
            "is_processing",
            "config",
            "result",
            "manifest",
            "out_dir",
            "exit_code",
            "task_id",
            "succeeded",
        ]
        read_only_fields = fields


class RunCreateSerializer(serializers.Serializer):
    """A run request: command plus the same nested overrides a config file holds"""

    command = serializers.ChoiceField(choices=list(COMMANDS))
    preset = serializers.ChoiceField(choices=sorted(PRESETS), required=False, allow_null=True)
    run_id = serializers.SlugField(max_length=100, required=False)
    config = serializers.JSONField(required=False, default=dict)
    launch = serializers.BooleanField(default=True)

    def validate_run_id(self, value):
        if Run.objects.filter(run_id=value).exists():
            raise serializers.ValidationError(f"Run '{value}' already exists")
        return value

    def validate_config(self, value):
        if not isinstance(value, dict):
            raise serializers.ValidationError("config must be an object")
        return value


class LaunchSerializer(serializers.Serializer):
    force = serializers.BooleanField(default=False, help_text="Relaunch even if the run already finished")


class OperatorTestSerializer(serializers.Serializer):
    operator = serializers.ChoiceField(choices=CollisionOperatorFactory.get_available_providers())
    N = serializers.ChoiceField(choices=[4, 8, 16], default=8)
    d = serializers.ChoiceField(choices=[2, 3], default=2)

