from django.contrib.auth.decorators import login_required
from django.http import JsonResponse
from django.views.decorators.http import require_http_methods

from .models import ExtractionRun

RUNS_PER_PAGE = 20


@login_required
@require_http_methods(["GET"])
def run_list(request):
    """API endpoint listing stored extraction runs, newest first"""
    try:
        page = max(1, int(request.GET.get('page', 1)))
    except ValueError:
        return JsonResponse({'success': False, 'error': 'page must be an integer'}, status=400)

    runs = ExtractionRun.objects.all()
    total = runs.count()
    total_pages = max(1, (total + RUNS_PER_PAGE - 1) // RUNS_PER_PAGE)
    page = min(page, total_pages)
    start = (page - 1) * RUNS_PER_PAGE

    return JsonResponse({
        'success': True,
        'runs': [
            {
                'id': run.id,
                'input_path': run.input_path,
                'input_format': run.input_format,
                'point_count': run.point_count,
                'wire_count': run.wire_count,
                'assigned_points': run.assigned_points,
                'outlier_points': run.outlier_points,
                'unassigned_points': run.unassigned_points,
                'runtime_seconds': run.runtime_seconds,
                'created_at': run.created_at.isoformat(),
            }
            for run in runs[start:start + RUNS_PER_PAGE]
        ],
        'pagination': {
            'total_items': total,
            'total_pages': total_pages,
            'current_page': page,
            'items_per_page': RUNS_PER_PAGE,
        },
    })


@login_required
@require_http_methods(["GET"])
def run_geojson(request, run_id):
    """API endpoint returning the stored FeatureCollection of one run"""
    try:
        run = ExtractionRun.objects.get(pk=run_id)
    except ExtractionRun.DoesNotExist:
        return JsonResponse({'success': False, 'error': 'Run not found'}, status=404)
    return JsonResponse(run.geojson)
