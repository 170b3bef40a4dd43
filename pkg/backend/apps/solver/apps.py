"""
Application configuration for the solver app.
"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class SolverAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.solver'
    verbose_name = _('Unit-Cell EM Solver')
