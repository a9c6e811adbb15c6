from django.db import models, transaction

from wires.io import feature_collection


class ExtractionRun(models.Model):
    """One run of the extraction pipeline over an input file"""
    input_path = models.CharField(max_length=500)
    input_format = models.CharField(max_length=10)
    config = models.JSONField(default=dict)
    point_count = models.IntegerField(default=0)
    wire_count = models.IntegerField(default=0)
    assigned_points = models.IntegerField(default=0)
    outlier_points = models.IntegerField(default=0)
    unassigned_points = models.IntegerField(default=0)
    runtime_seconds = models.FloatField(default=0.0)
    report = models.JSONField(default=dict)
    geojson = models.JSONField(default=dict)  # the exported FeatureCollection
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f"Run {self.pk}: {self.wire_count} wires from {self.input_path}"

    @property
    def conserved(self):
        return self.assigned_points + self.outlier_points + self.unassigned_points == self.point_count

    @classmethod
    def from_result(cls, result, input_path, input_format, runtime_seconds=0.0):
        """Store a PipelineResult and its wires."""
        report = result.report
        with transaction.atomic():
            run = cls.objects.create(
                input_path=str(input_path),
                input_format=input_format,
                config=report.get('config', {}),
                point_count=report['input_points'],
                wire_count=len(result.wires),
                assigned_points=report['assigned_points'],
                outlier_points=report['outlier_points'],
                unassigned_points=report['unassigned_points'],
                runtime_seconds=runtime_seconds,
                report=report,
                geojson=dict(feature_collection(result.wires)),
            )
            ExtractedWire.objects.bulk_create([ExtractedWire.from_polyline(run, w) for w in result.wires])
        return run


class ExtractedWire(models.Model):
    """A fitted catenary and its densified polyline"""
    run = models.ForeignKey(ExtractionRun, on_delete=models.CASCADE, related_name='wires')
    wire_id = models.IntegerField()
    cluster_id = models.IntegerField()
    c = models.FloatField()
    a = models.FloatField()
    m = models.FloatField()
    x_min = models.FloatField()
    x_max = models.FloatField()
    frame = models.JSONField(default=dict)
    vertices = models.JSONField(default=list)
    rms = models.FloatField(default=0.0)
    max_abs_deviation = models.FloatField(default=0.0)
    point_count = models.IntegerField(default=0)
    outlier_count = models.IntegerField(default=0)
    length = models.FloatField(default=0.0)

    class Meta:
        ordering = ['run', 'wire_id']
        constraints = [
            models.UniqueConstraint(fields=['run', 'wire_id'], name='unique_wire_per_run'),
        ]

    def __str__(self):
        return f"Wire {self.wire_id} of run {self.run_id} ({self.length:.1f} m)"

    @classmethod
    def from_polyline(cls, run, wire):
        curve = wire.curve
        return cls(
            run=run,
            wire_id=wire.wire_id,
            cluster_id=wire.source_cluster,
            c=curve.c,
            a=curve.a,
            m=curve.m,
            x_min=curve.x_min,
            x_max=curve.x_max,
            frame=curve.frame.to_dict(),
            vertices=[[float(v) for v in vertex] for vertex in wire.vertices],
            rms=wire.rms,
            max_abs_deviation=wire.max_abs_deviation,
            point_count=wire.point_count,
            outlier_count=wire.outlier_count,
            length=wire.length,
        )
