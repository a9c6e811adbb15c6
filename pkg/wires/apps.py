from django.apps import AppConfig


class WiresConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'wires'
    verbose_name = 'Wire extraction'
