"""
WSGI config for the vsmargin run registry.

It exposes the WSGI callable as a module-level variable named ``application``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "vsmargin_project.settings")

application = get_wsgi_application()
