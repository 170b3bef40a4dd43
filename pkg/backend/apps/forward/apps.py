"""
Application configuration for the forward app.
"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class ForwardConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.forward'
    verbose_name = _('Forward Models')
