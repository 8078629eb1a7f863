from django.apps import AppConfig


class ExponentialsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'exponentials'
    verbose_name = 'Exponential Signal Model'
