import tempfile
from datetime import timedelta
from pathlib import Path
from unittest import mock

from django.test import override_settings
from django.utils import timezone
from rest_framework import status
from rest_framework.test import APITestCase

from boltzmann.models import Run


class RunApiTest(APITestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.override = override_settings(SPECNET_OUT_DIR=Path(self.tmp.name))
        self.override.enable()
        self.addCleanup(self.override.disable)

    def test_create_without_launch(self):
        response = self.client.post(
            "/api/runs/",
            {"command": "gen_data", "run_id": "corpus-1", "config": {"grid": {"N": 8}}, "launch": False},
            format="json",
        )
        self.assertEqual(response.status_code, status.HTTP_201_CREATED)
        run = Run.objects.get(run_id="corpus-1")
        self.assertEqual(run.config["grid"]["N"], 8)
        self.assertEqual(run.config["io"]["run_id"], "corpus-1")
        self.assertEqual(run.out_dir, str(Path(self.tmp.name) / "corpus-1"))
        self.assertFalse(run.is_processing)

    @mock.patch("boltzmann.api_views.execute_run_task.delay")
    def test_create_and_launch(self, delay):
        delay.return_value = mock.Mock(id="task-1")
        response = self.client.post("/api/runs/", {"command": "validate", "preset": None}, format="json")
        self.assertEqual(response.status_code, status.HTTP_201_CREATED)
        run_id = response.data["run_id"]
        delay.assert_called_once_with(run_id)
        self.assertTrue(Run.objects.get(run_id=run_id).is_processing)

    def test_invalid_configuration_is_rejected(self):
        response = self.client.post("/api/runs/", {"command": "simulate", "config": {"grid": {"N": 7}}}, format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("error", response.data)
        self.assertEqual(Run.objects.count(), 0)

    def test_unknown_command_and_duplicate_id(self):
        Run.objects.create(run_id="taken", command="train")
        response = self.client.post("/api/runs/", {"command": "plot"}, format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        response = self.client.post("/api/runs/", {"command": "train", "run_id": "taken"}, format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)

    @mock.patch("boltzmann.api_views.execute_run_task.delay")
    def test_launch_rules(self, delay):
        delay.return_value = mock.Mock(id="task-2")
        run = Run.objects.create(run_id="r1", command="simulate")

        response = self.client.post("/api/runs/r1/launch/", {}, format="json")
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data["task_id"], "task-2")

        response = self.client.post("/api/runs/r1/launch/", {}, format="json")
        self.assertEqual(response.status_code, status.HTTP_409_CONFLICT)

        run.refresh_from_db()
        run.mark_finished(0)
        response = self.client.post("/api/runs/r1/launch/", {}, format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        response = self.client.post("/api/runs/r1/launch/", {"force": True}, format="json")
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(delay.call_count, 2)

    def test_status_times_out_stuck_runs(self):
        run = Run.objects.create(run_id="old", command="train", is_processing=True, processing_status="processing")
        Run.objects.filter(pk=run.pk).update(updated_at=timezone.now() - timedelta(days=30))
        response = self.client.get("/api/runs/old/status/")
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data["status"], "timeout")
        self.assertFalse(response.data["is_processing"])

    def test_artifacts(self):
        out_dir = Path(self.tmp.name) / "art"
        (out_dir / "fields").mkdir(parents=True)
        (out_dir / "manifest.json").write_text("{}")
        (out_dir / "fields" / "art_0.json").write_text("{}")
        Run.objects.create(run_id="art", command="simulate", out_dir=str(out_dir))
        response = self.client.get("/api/runs/art/artifacts/")
        paths = [f["path"] for f in response.data["files"]]
        self.assertEqual(paths, ["fields/art_0.json", "manifest.json"])

    def test_missing_run(self):
        response = self.client.get("/api/runs/nothing/status/")
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)

    def test_list_and_retrieve(self):
        Run.objects.create(run_id="a", command="bench")
        response = self.client.get("/api/runs/")
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        response = self.client.get("/api/runs/a/")
        self.assertEqual(response.data["command"], "bench")


class OperatorApiTest(APITestCase):
    def test_list(self):
        response = self.client.get("/api/operators/")
        self.assertEqual(response.data["providers"], ["fast", "direct", "specnet"])
        self.assertIn(response.data["default"], response.data["providers"])

    def test_smoke_test(self):
        response = self.client.post("/api/operators/test/", {"operator": "fast", "N": 8}, format="json")
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertTrue(response.data["finite"])
        self.assertLess(abs(response.data["q_mass"]), 1e-10)

    def test_smoke_test_validation(self):
        response = self.client.post("/api/operators/test/", {"operator": "exact", "N": 8}, format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        response = self.client.post("/api/operators/test/", {"operator": "fast", "N": 12}, format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)


class DashboardApiTest(APITestCase):
    def test_stats(self):
        Run.objects.create(run_id="x", command="train")
        Run.objects.create(run_id="y", command="train", is_processing=True, processing_status="processing")
        response = self.client.get("/api/dashboard/stats/")
        self.assertEqual(response.data["total_runs"], 2)
        self.assertEqual(response.data["runs_by_command"], {"train": 2})
        self.assertEqual(response.data["processing_runs"], 1)
        self.assertEqual(len(response.data["recent_runs"]), 2)


class TaskStatusApiTest(APITestCase):
    def test_task_id_is_required(self):
        response = self.client.get("/api/tasks/check/")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
