from django.urls import path
from . import views

app_name = 'wires'

urlpatterns = [
    # API Endpoints
    path('api/runs/', views.run_list, name='api_runs'),
    path('api/runs/<int:run_id>/geojson/', views.run_geojson, name='api_run_geojson'),
]
