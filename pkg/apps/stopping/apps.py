from django.apps import AppConfig


class StoppingConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.stopping"
