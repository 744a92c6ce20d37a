from django.apps import AppConfig


class SolversConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.solvers"
