"""
Application configuration for the inverse app.
"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class InverseConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.inverse'
    verbose_name = _('Inverse Design')
