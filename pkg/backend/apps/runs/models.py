"""
Models for the runs app.

This module defines the run ledger: one RunRecord per pipeline command
invocation, successful or not. The ledger mirrors what every output directory
already carries on disk (effective config, fingerprints, summary) so that runs
can be listed and compared without walking the filesystem.
"""
import uuid
from datetime import timedelta
from typing import Optional

from django.db import models
from django.utils.translation import gettext_lazy as _


class RunRecord(models.Model):
    """
    A single invocation of a pipeline management command.

    Attributes:
        id (UUIDField): Primary key for the run
        command (CharField): Management command name, e.g. 'build_dataset'
        status (CharField): SUCCESS or FAILED
        seed (CharField): Global seed as a decimal string (unsigned 64-bit)
        output_dir (CharField): Directory the run wrote its artifacts to
        config (JSONField): Effective configuration with defaults applied
        summary (JSONField): Machine-readable summary printed by --json
        fingerprints (JSONField): Solver and dataset fingerprints used
        error (TextField): Error message for failed runs
        started_at (DateTimeField): When the command started
        finished_at (DateTimeField): When the command finished
    """
    SUCCESS = 'SUCCESS'
    FAILED = 'FAILED'

    STATUS_CHOICES = [
        (SUCCESS, _('Success')),
        (FAILED, _('Failed')),
    ]

    id = models.UUIDField(
        primary_key=True,
        default=uuid.uuid4,
        editable=False,
        verbose_name=_('ID')
    )
    command = models.CharField(
        max_length=64,
        verbose_name=_('Command')
    )
    status = models.CharField(
        max_length=10,
        choices=STATUS_CHOICES,
        verbose_name=_('Status')
    )
    seed = models.CharField(
        max_length=20,
        verbose_name=_('Seed')
    )
    output_dir = models.CharField(
        max_length=1024,
        verbose_name=_('Output directory')
    )
    config = models.JSONField(
        default=dict,
        blank=True,
        verbose_name=_('Effective config')
    )
    summary = models.JSONField(
        null=True,
        blank=True,
        verbose_name=_('Summary')
    )
    fingerprints = models.JSONField(
        default=dict,
        blank=True,
        verbose_name=_('Fingerprints')
    )
    error = models.TextField(
        blank=True,
        default='',
        verbose_name=_('Error')
    )
    started_at = models.DateTimeField(
        verbose_name=_('Started at')
    )
    finished_at = models.DateTimeField(
        null=True,
        blank=True,
        verbose_name=_('Finished at')
    )

    class Meta:
        verbose_name = _('Run record')
        verbose_name_plural = _('Run records')
        ordering = ['-started_at']  # Most recent runs first
        indexes = [
            models.Index(fields=['command'], name='runs_command_idx'),
            models.Index(fields=['status'], name='runs_status_idx'),
            models.Index(fields=['started_at'], name='runs_started_idx'),
        ]

    def __str__(self) -> str:
        """
        Return a string representation of the run.

        Returns:
            str: Command, status and start time
        """
        return f"{self.command} - {self.get_status_display()} - {self.started_at}"

    @property
    def duration(self) -> Optional[timedelta]:
        """
        Wall time of the run.

        Returns:
            timedelta or None if the run has not finished
        """
        if self.finished_at is None:
            return None
        return self.finished_at - self.started_at
