"""
Application configuration for the baselines app.
"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class BaselinesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.baselines'
    verbose_name = _('Baseline Regressors')
