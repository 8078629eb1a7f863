from django.apps import AppConfig


class HankelConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'hankel'
    verbose_name = 'Hankel Algebra'
