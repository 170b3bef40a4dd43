"""
Application configuration for the autodiff app.
"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class AutodiffConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.autodiff'
    verbose_name = _('Automatic Differentiation')
