from django.apps import AppConfig


class LinopsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.linops"
