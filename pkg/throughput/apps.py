from django.apps import AppConfig


class ThroughputConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'throughput'
