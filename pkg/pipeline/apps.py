from django.apps import AppConfig


class BlockPipelineConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'pipeline'
    verbose_name = 'Block Pipeline'
