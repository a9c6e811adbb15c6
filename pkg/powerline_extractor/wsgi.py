"""
WSGI config for powerline_extractor project.

It exposes the WSGI callable as a module-level variable named ``application``.
Serves the read-only run API (see wires/urls.py) behind gunicorn.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'powerline_extractor.settings')

application = get_wsgi_application()
