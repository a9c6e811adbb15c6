from django.apps import AppConfig


class CatenaryConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'catenary'
    verbose_name = 'Catenary geometry and fitting'
