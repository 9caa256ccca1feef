from datetime import timedelta
from pathlib import Path

from celery.result import AsyncResult
from django.conf import settings
from django.db.models import Count
from django.shortcuts import get_object_or_404
from django.utils import timezone
from drf_spectacular.types import OpenApiTypes
from drf_spectacular.utils import OpenApiParameter, extend_schema, extend_schema_view
from rest_framework import mixins, status, viewsets
from rest_framework.decorators import action
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from .models import Run
from .serializers import (
    LaunchSerializer,
    OperatorTestSerializer,
    RunCreateSerializer,
    RunSerializer,
)
from .services import (
    CollisionOperatorFactory,
    get_default_collision_operator_name,
    new_run_id,
)
from .spectral.config import load_run_config
from .spectral.exceptions import SpectralError
from .tasks import execute_run_task


@extend_schema_view(
    stats=extend_schema(
        summary="Dashboard Statistics",
        description="Returns run counters by command and status, the default collision operator and the most recent runs.",
        responses={200: "Statistics retrieved successfully"},
        tags=["Dashboard"],
    )
)
class DashboardViewSet(viewsets.ViewSet):
    """
    ViewSet for dashboard statistics.

    Provides counters of runs per command and per processing status,
    the configured default collision operator and the latest runs.
    """

    permission_classes = [AllowAny]

    @action(detail=False, methods=["get"])
    def stats(self, request):
        """Returns dashboard statistics"""
        by_command = dict(Run.objects.values_list("command").annotate(n=Count("id")))
        by_status = dict(Run.objects.values_list("processing_status").annotate(n=Count("id")))
        recent_runs = Run.objects.order_by("-created_at")[:5]

        return Response(
            {
                "total_runs": Run.objects.count(),
                "runs_by_command": by_command,
                "runs_by_status": by_status,
                "processing_runs": Run.objects.filter(is_processing=True).count(),
                "default_operator": get_default_collision_operator_name(),
                "recent_runs": RunSerializer(recent_runs, many=True).data,
            }
        )


@extend_schema_view(
    list=extend_schema(
        summary="List Runs",
        description="Returns paginated list of runs ordered by creation date.",
        tags=["Runs"],
    ),
    retrieve=extend_schema(
        summary="Run Details",
        description="Returns the resolved configuration, result summary and manifest of a run.",
        tags=["Runs"],
    ),
    create=extend_schema(
        summary="Create Run",
        description="Resolves a run configuration (defaults, preset, overrides) and queues it unless launch is false.",
        request=RunCreateSerializer,
        responses={201: RunSerializer},
        tags=["Runs"],
    ),
    launch=extend_schema(
        summary="Launch Run",
        description="Queues an existing run on the numerics worker.",
        request=LaunchSerializer,
        responses={200: "Run queued successfully"},
        tags=["Runs"],
    ),
    status=extend_schema(
        summary="Run Status",
        description="Checks the current processing status of the run.",
        responses={200: "Status retrieved successfully"},
        tags=["Runs"],
    ),
    artifacts=extend_schema(
        summary="Run Artifacts",
        description="Lists the files written to the run's output directory.",
        responses={200: "Artifacts listed successfully"},
        tags=["Runs"],
    ),
)
class RunViewSet(
    mixins.ListModelMixin,
    mixins.RetrieveModelMixin,
    mixins.CreateModelMixin,
    viewsets.GenericViewSet,
):
    """
    ViewSet for run management.

    A run is one invocation of gen_data, train, simulate, validate or
    bench. Runs created here execute on the Celery numerics queue and
    write the same artifacts as the management commands.
    """

    permission_classes = [AllowAny]
    queryset = Run.objects.all().order_by("-created_at")
    lookup_field = "run_id"

    def get_serializer_class(self):
        if self.action == "create":
            return RunCreateSerializer
        return RunSerializer

    def create(self, request, *args, **kwargs):
        serializer = RunCreateSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)

        data = serializer.validated_data
        try:
            config = load_run_config(data["command"], overrides=data.get("config"), preset=data.get("preset"))
        except SpectralError as e:
            return Response({"error": str(e)}, status=status.HTTP_400_BAD_REQUEST)

        run_id = data.get("run_id") or new_run_id(config.command)
        config.io.run_id = run_id
        run = Run.objects.create(
            run_id=run_id,
            command=config.command,
            config=config.dump(),
            out_dir=config.io.out_dir or str(Path(settings.SPECNET_OUT_DIR) / run_id),
        )

        if data["launch"]:
            run.mark_processing()
            execute_run_task.delay(run.run_id)
            run.refresh_from_db()

        return Response(RunSerializer(run).data, status=status.HTTP_201_CREATED)

    @action(detail=True, methods=["post"])
    def launch(self, request, run_id=None):
        """Queues a run for execution"""
        run = get_object_or_404(Run, run_id=run_id)

        serializer = LaunchSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)

        if run.is_processing:
            return Response(
                {"error": "Run is already processing.", "task_id": run.task_id},
                status=status.HTTP_409_CONFLICT,
            )
        if run.finished_at and not serializer.validated_data["force"]:
            return Response(
                {"error": "Run already finished; pass force=true to run it again."},
                status=status.HTTP_400_BAD_REQUEST,
            )

        # the worker records its own task id when it starts
        run.mark_processing()
        task = execute_run_task.delay(run.run_id)

        return Response(
            {
                "task_id": task.id,
                "message": f"Run queued. Task ID: {task.id}",
                "run_id": run.run_id,
            }
        )

    @action(detail=True, methods=["get"])
    def status(self, request, run_id=None):
        """Checks run processing status"""
        run = get_object_or_404(Run, run_id=run_id)

        # runs left processing past the stuck threshold are timed out
        stuck_after = timedelta(minutes=settings.SPECNET_STUCK_AFTER_MINUTES)
        if run.is_processing and run.updated_at < timezone.now() - stuck_after:
            run.is_processing = False
            run.processing_status = "timeout"
            run.save()

        return Response(
            {
                "run_id": run.run_id,
                "command": run.command,
                "is_processing": run.is_processing,
                "processing_status": run.processing_status,
                "status": "processing" if run.is_processing else run.processing_status,
                "exit_code": run.exit_code,
                "finished_at": run.finished_at,
            }
        )

    @action(detail=True, methods=["get"])
    def artifacts(self, request, run_id=None):
        """Lists files in the run output directory"""
        run = get_object_or_404(Run, run_id=run_id)
        root = Path(run.out_dir) if run.out_dir else None

        if root is None or not root.is_dir():
            return Response({"run_id": run.run_id, "out_dir": run.out_dir, "files": []})

        files = [
            {"path": str(p.relative_to(root)), "size": p.stat().st_size}
            for p in sorted(root.rglob("*"))
            if p.is_file()
        ]
        return Response({"run_id": run.run_id, "out_dir": str(root), "files": files})


@extend_schema_view(
    list=extend_schema(
        summary="List Collision Operators",
        description="Returns the available collision operator providers and the configured default.",
        tags=["Operators"],
    ),
    test=extend_schema(
        summary="Test Collision Operator",
        description="Applies an operator to a unit Maxwellian on a small grid and reports the result.",
        request=OperatorTestSerializer,
        responses={200: "Operator evaluated successfully"},
        tags=["Operators"],
    ),
)
class OperatorViewSet(viewsets.ViewSet):
    permission_classes = [AllowAny]

    def list(self, request):
        default = get_default_collision_operator_name()
        return Response(
            {
                "providers": CollisionOperatorFactory.get_available_providers(),
                "default": default,
            }
        )

    @action(detail=False, methods=["post"])
    def test(self, request):
        """Smoke test for one operator provider"""
        serializer = OperatorTestSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)

        data = serializer.validated_data
        try:
            config = load_run_config("bench", overrides={"grid": {"d": data["d"], "N": data["N"]}})
            provider = CollisionOperatorFactory.create_operator(data["operator"], config=config)
            result = provider.smoke_test(N=data["N"])
        except SpectralError as e:
            return Response({"error": str(e)}, status=status.HTTP_400_BAD_REQUEST)

        return Response(result)


@extend_schema_view(
    check=extend_schema(
        summary="Check Task Status",
        description="Checks the processing status of a Celery asynchronous task.",
        parameters=[
            OpenApiParameter(
                name="task_id",
                type=OpenApiTypes.STR,
                location=OpenApiParameter.QUERY,
                required=True,
                description="Celery task ID to check",
            )
        ],
        responses={200: "Task status retrieved successfully"},
        tags=["Tasks"],
    )
)
class TaskStatusViewSet(viewsets.ViewSet):
    """
    ViewSet for checking Celery task status.

    Possible task states:
    - PENDING: waiting for execution
    - STARTED: in execution
    - SUCCESS: completed
    - FAILURE: failed execution
    - RETRY: retrying
    """

    permission_classes = [AllowAny]

    @action(detail=False, methods=["get"])
    def check(self, request):
        """Checks Celery task status"""
        task_id = request.query_params.get("task_id")

        if not task_id:
            return Response(
                {"error": "task_id parameter is required"},
                status=status.HTTP_400_BAD_REQUEST,
            )

        task_result = AsyncResult(task_id)

        response_data = {
            "task_id": task_id,
            "state": task_result.state,
            "result": task_result.result if task_result.ready() else None,
            "info": task_result.info if not task_result.ready() else None,
        }

        return Response(response_data)
