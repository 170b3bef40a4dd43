"""
Application configuration for the runs app.
"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class RunsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.runs'
    verbose_name = _('Pipeline Runs')
