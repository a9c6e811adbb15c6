# Generated by Django 5.2 on 2026-10-16 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExtractionRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('input_path', models.CharField(max_length=500)),
                ('input_format', models.CharField(max_length=10)),
                ('config', models.JSONField(default=dict)),
                ('point_count', models.IntegerField(default=0)),
                ('wire_count', models.IntegerField(default=0)),
                ('assigned_points', models.IntegerField(default=0)),
                ('outlier_points', models.IntegerField(default=0)),
                ('unassigned_points', models.IntegerField(default=0)),
                ('runtime_seconds', models.FloatField(default=0.0)),
                ('report', models.JSONField(default=dict)),
                ('geojson', models.JSONField(default=dict)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='ExtractedWire',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('wire_id', models.IntegerField()),
                ('cluster_id', models.IntegerField()),
                ('c', models.FloatField()),
                ('a', models.FloatField()),
                ('m', models.FloatField()),
                ('x_min', models.FloatField()),
                ('x_max', models.FloatField()),
                ('frame', models.JSONField(default=dict)),
                ('vertices', models.JSONField(default=list)),
                ('rms', models.FloatField(default=0.0)),
                ('max_abs_deviation', models.FloatField(default=0.0)),
                ('point_count', models.IntegerField(default=0)),
                ('outlier_count', models.IntegerField(default=0)),
                ('length', models.FloatField(default=0.0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='wires', to='wires.extractionrun')),
            ],
            options={
                'ordering': ['run', 'wire_id'],
                'constraints': [models.UniqueConstraint(fields=('run', 'wire_id'), name='unique_wire_per_run')],
            },
        ),
    ]
