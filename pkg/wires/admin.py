from django.contrib import admin
from .models import ExtractionRun, ExtractedWire


class ExtractedWireInline(admin.TabularInline):
    model = ExtractedWire
    fields = ('wire_id', 'cluster_id', 'a', 'rms', 'point_count', 'outlier_count', 'length')
    readonly_fields = fields
    extra = 0
    can_delete = False


@admin.register(ExtractionRun)
class ExtractionRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'input_path', 'point_count', 'wire_count', 'assigned_points', 'unassigned_points',
                    'runtime_seconds', 'created_at')
    list_filter = ('input_format', 'created_at')
    search_fields = ('input_path',)
    date_hierarchy = 'created_at'
    inlines = [ExtractedWireInline]


@admin.register(ExtractedWire)
class ExtractedWireAdmin(admin.ModelAdmin):
    list_display = ('run', 'wire_id', 'cluster_id', 'a', 'rms', 'point_count', 'outlier_count', 'length')
    list_filter = ('run',)
    search_fields = ('run__input_path',)
