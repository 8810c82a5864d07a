from django.contrib import admin
from django.utils.html import format_html

from .models import ExperimentRun

admin.site.site_header = "VS-Margin Experiment Administration"
admin.site.site_title = "VS-Margin Admin"
admin.site.index_title = "Recorded experiment runs"


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('short_id', 'kind', 'status_badge', 'seed_count', 'output_dir', 'created_at', 'finished_at')
    list_filter = ('kind', 'status', 'created_at')
    search_fields = ('id', 'config_hash', 'output_dir', 'error_message')
    readonly_fields = ('id', 'config_hash', 'created_at', 'finished_at', 'manifest')
    fieldsets = (
        ('Run', {
            'fields': ('id', 'kind', 'status', 'output_dir')
        }),
        ('Configuration', {
            'fields': ('config', 'config_hash', 'seeds')
        }),
        ('Outcome', {
            'fields': ('manifest', 'error_message', 'created_at', 'finished_at')
        }),
    )

    def short_id(self, obj):
        return str(obj.id)[:8]
    short_id.short_description = 'Run'

    def seed_count(self, obj):
        return len(obj.seeds or [])
    seed_count.short_description = 'Seeds'

    def status_badge(self, obj):
        colors = {
            'pending': '#6c757d',
            'running': '#0d6efd',
            'completed': '#198754',
            'failed': '#dc3545',
        }
        return format_html(
            '<span style="color: {}; font-weight: bold;">{}</span>',
            colors.get(obj.status, '#000'),
            obj.get_status_display(),
        )
    status_badge.short_description = 'Status'
