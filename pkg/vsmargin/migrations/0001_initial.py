# Generated by Django 4.2.7 on 2026-10-19 09:12

from django.db import migrations, models
import uuid


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                (
                    "kind",
                    models.CharField(
                        choices=[
                            ("fig1a_sweep", "Fig1A Sweep"),
                            ("fig1bc_dynamics", "Fig1Bc Dynamics"),
                            ("tradeoff_label", "Tradeoff Label"),
                            ("tradeoff_group", "Tradeoff Group"),
                            ("phase_transition", "Phase Transition"),
                            ("tune_delta", "Tune Delta"),
                            ("undersampling", "Undersampling"),
                            ("mnist_rf", "Mnist Rf"),
                            ("deo_zero", "Deo Zero"),
                        ],
                        max_length=40,
                    ),
                ),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pending", "Pending"),
                            ("running", "Running"),
                            ("completed", "Completed"),
                            ("failed", "Failed"),
                        ],
                        default="pending",
                        max_length=20,
                    ),
                ),
                ("config", models.JSONField(default=dict)),
                ("config_hash", models.CharField(db_index=True, max_length=64)),
                ("seeds", models.JSONField(blank=True, default=list)),
                ("output_dir", models.CharField(max_length=500)),
                ("manifest", models.JSONField(blank=True, default=dict)),
                ("error_message", models.TextField(blank=True)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("finished_at", models.DateTimeField(blank=True, null=True)),
            ],
            options={
                "ordering": ["-created_at"],
            },
        ),
    ]
