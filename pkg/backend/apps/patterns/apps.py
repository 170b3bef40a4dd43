"""
Application configuration for the patterns app.
"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class PatternsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.patterns'
    verbose_name = _('Metasurface Patterns')
