"""
URL configuration for powerline_extractor project.

Only the admin and the read-only run API are routed; extraction itself runs
through the management commands (extract, synth, oracle).
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('wires/', include('wires.urls')),
]
