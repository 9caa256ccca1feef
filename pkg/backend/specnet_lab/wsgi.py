"""
WSGI config for the specnet_lab project; serves the run API.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "specnet_lab.settings")

application = get_wsgi_application()
