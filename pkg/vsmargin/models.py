from django.db import models
import uuid

from .experiments import EXPERIMENT_KINDS


class ExperimentRun(models.Model):
    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]
    KIND_CHOICES = [(kind, kind.replace('_', ' ').title()) for kind in EXPERIMENT_KINDS]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    kind = models.CharField(max_length=40, choices=KIND_CHOICES)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    config = models.JSONField(default=dict)
    config_hash = models.CharField(max_length=64, db_index=True)
    seeds = models.JSONField(default=list, blank=True)
    output_dir = models.CharField(max_length=500)
    manifest = models.JSONField(default=dict, blank=True)
    error_message = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(blank=True, null=True)

    def __str__(self):
        return f"{self.kind} run {str(self.id)[:8]} ({self.status})"

    @property
    def is_finished(self):
        return self.status in ('completed', 'failed')

    @property
    def duration(self):
        """Wall-clock time of the run, None while it is still going."""
        if self.finished_at is None:
            return None
        return self.finished_at - self.created_at

    def as_dict(self, with_manifest=False):
        data = {
            'id': str(self.id),
            'kind': self.kind,
            'status': self.status,
            'config_hash': self.config_hash,
            'seeds': self.seeds,
            'output_dir': self.output_dir,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None,
        }
        if with_manifest:
            data['config'] = self.config
            data['manifest'] = self.manifest
            data['error_message'] = self.error_message
        return data

    class Meta:
        ordering = ['-created_at']
