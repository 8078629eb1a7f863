# Generated by Django 4.2.16 on 2026-10-16 09:12

import django.core.validators
import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(db_index=True, help_text='Management command that produced the run', max_length=32)),
                ('status', models.CharField(choices=[('PENDING', 'Pending'), ('RUNNING', 'Running'), ('COMPLETED', 'Completed'), ('FAILED', 'Failed')], db_index=True, default='PENDING', help_text='Current run status', max_length=20)),
                ('config', models.JSONField(default=dict, help_text='Resolved experiment configuration')),
                ('tool_version', models.CharField(max_length=32)),
                ('output_dir', models.CharField(blank=True, default='', max_length=512)),
                ('failure_reason', models.TextField(blank=True, default='', help_text='Error message if the run failed')),
                ('created_at', models.DateTimeField(auto_now_add=True, db_index=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'verbose_name': 'Experiment Run',
                'verbose_name_plural': 'Experiment Runs',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command', 'status'], name='exp_run_command_status_idx')],
            },
        ),
        migrations.CreateModel(
            name='TrialResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('trial', models.PositiveIntegerField(help_text='Trial index within its rate and noise cell')),
                ('rate', models.FloatField(validators=[django.core.validators.MinValueValidator(0.0)])),
                ('noise_scale', models.FloatField(default=0.0)),
                ('pattern_seed', models.BigIntegerField()),
                ('noise_seed', models.BigIntegerField()),
                ('rlne', models.FloatField()),
                ('effective_rank', models.PositiveIntegerField()),
                ('r2', models.FloatField(blank=True, help_text='Peak-intensity r^2, null when undefined', null=True)),
                ('iterations', models.PositiveIntegerField()),
                ('seconds', models.FloatField()),
                ('peak_rlnes', models.JSONField(default=list)),
                ('run', models.ForeignKey(help_text='Parent run', on_delete=django.db.models.deletion.CASCADE, related_name='trials', to='experiments.experimentrun')),
            ],
            options={
                'verbose_name': 'Trial Result',
                'verbose_name_plural': 'Trial Results',
                'ordering': ['rate', 'noise_scale', 'trial'],
            },
        ),
        migrations.AddConstraint(
            model_name='trialresult',
            constraint=models.UniqueConstraint(fields=('run', 'rate', 'noise_scale', 'trial'), name='unique_trial_per_cell'),
        ),
    ]
