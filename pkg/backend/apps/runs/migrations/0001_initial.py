import uuid

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=64, verbose_name='Command')),
                ('status', models.CharField(choices=[('SUCCESS', 'Success'), ('FAILED', 'Failed')], max_length=10, verbose_name='Status')),
                ('seed', models.CharField(max_length=20, verbose_name='Seed')),
                ('output_dir', models.CharField(max_length=1024, verbose_name='Output directory')),
                ('config', models.JSONField(blank=True, default=dict, verbose_name='Effective config')),
                ('summary', models.JSONField(blank=True, null=True, verbose_name='Summary')),
                ('fingerprints', models.JSONField(blank=True, default=dict, verbose_name='Fingerprints')),
                ('error', models.TextField(blank=True, default='', verbose_name='Error')),
                ('started_at', models.DateTimeField(verbose_name='Started at')),
                ('finished_at', models.DateTimeField(blank=True, null=True, verbose_name='Finished at')),
            ],
            options={
                'verbose_name': 'Run record',
                'verbose_name_plural': 'Run records',
                'ordering': ['-started_at'],
                'indexes': [models.Index(fields=['command'], name='runs_command_idx'), models.Index(fields=['status'], name='runs_status_idx'), models.Index(fields=['started_at'], name='runs_started_idx')],
            },
        ),
    ]
