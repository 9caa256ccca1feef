from django.urls import include, path
from rest_framework.routers import DefaultRouter

from .api_views import DashboardViewSet, OperatorViewSet, RunViewSet, TaskStatusViewSet

router = DefaultRouter()
router.register(r"dashboard", DashboardViewSet, basename="dashboard")
router.register(r"runs", RunViewSet, basename="run")
router.register(r"operators", OperatorViewSet, basename="operator")
router.register(r"tasks", TaskStatusViewSet, basename="task")

urlpatterns = [
    path("api/", include(router.urls)),
]
